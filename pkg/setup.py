# python setup.py build_ext --inplace  (or: pip install -e . --no-build-isolation)
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "treedistill.core.split_kernel",
                ["src/treedistill/core/split_kernel.pyx"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    # No Cython: the package falls back to the numpy kernel at import time.
    extensions = []

setup(ext_modules=extensions)
