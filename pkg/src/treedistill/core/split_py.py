"""Pure-numpy fallback for the best-split scan.

Kept numerically identical to the compiled kernel: class-count sums of
squares are exact integer-valued doubles, and the score is formed with
the same two divisions and one addition, so both backends agree
bit-for-bit (same split, same threshold) on any input.
"""

import numpy as np


def best_split_column(values, labels, n_classes, min_leaf):
    """Vectorized twin of ``split_kernel.best_split_column``.

    See the compiled kernel for the contract; inputs are a float64 column
    sorted ascending and the aligned int64 labels.
    """
    n = values.shape[0]
    if n < 2:
        return None

    onehot = np.zeros((n, n_classes), dtype=np.float64)
    onehot[np.arange(n), labels] = 1.0
    cum = np.cumsum(onehot, axis=0)
    total = cum[-1]

    left = cum[:-1]
    right = total - left
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl

    ssl = np.einsum("ij,ij->i", left, left)
    ssr = np.einsum("ij,ij->i", right, right)
    proxy = ssl / nl + ssr / nr

    valid = (values[1:] != values[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return None
    proxy = np.where(valid, proxy, -np.inf)
    i = int(np.argmax(proxy))  # first max -> smallest threshold
    return float(proxy[i]), float((values[i] + values[i + 1]) / 2.0), i
