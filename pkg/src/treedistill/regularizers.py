"""Weight-matrix penalties and their analytic subgradients.

Four penalties over a network's weight matrices: entrywise L1, two
Gram-deviation orthogonality norms (entrywise L1 of G - I and squared
Frobenius of G - I, with G = W^T W), and the log-determinant divergence
tr(G) - logdet(G). A combined spec weights the L1 and orthogonality
terms independently. Biases are never penalized.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from treedistill.errors import GramSingularError, InputError

ORTHO_NORMS = ("l1_norm", "frobenius", "ldd", "none")

DEFAULT_LDD_JITTER = 1e-8
ILL_CONDITIONED_LIMIT = 1e12


@dataclass(frozen=True)
class RegularizerSpec:
    """Which penalties are active and how strongly.

    ``exclude_layers`` lists 0-based layer indices left unpenalized
    (default: every layer including the output is penalized).
    """

    lambda1: float = 0.0
    lambda_orth: float = 0.0
    ortho_norm: str = "none"
    ldd_jitter: float = DEFAULT_LDD_JITTER
    exclude_layers: tuple = ()

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda_orth < 0:
            raise InputError("penalty strengths must be non-negative")
        if self.ortho_norm not in ORTHO_NORMS:
            raise InputError(f"ortho_norm must be one of {ORTHO_NORMS}")
        if self.ldd_jitter < 0:
            raise InputError("ldd_jitter must be non-negative")

    @property
    def is_inactive(self):
        return self.lambda1 == 0.0 and (self.lambda_orth == 0.0 or self.ortho_norm == "none")

    def to_dict(self):
        return {
            "lambda1": self.lambda1,
            "lambda_orth": self.lambda_orth,
            "ortho_norm": self.ortho_norm,
            "ldd_jitter": self.ldd_jitter,
            "exclude_layers": list(self.exclude_layers),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            lambda1=float(d.get("lambda1", 0.0)),
            lambda_orth=float(d.get("lambda_orth", 0.0)),
            ortho_norm=d.get("ortho_norm", "none"),
            ldd_jitter=float(d.get("ldd_jitter", DEFAULT_LDD_JITTER)),
            exclude_layers=tuple(d.get("exclude_layers", ())),
        )


NONE = RegularizerSpec()


def gram_matrices(weights):
    """G_l = W_l^T W_l for each layer (symmetric PSD by construction)."""
    return [w.T @ w for w in weights]


def l1_penalty(weights):
    """Sum of absolute entries over all weight matrices."""
    return float(sum(np.abs(w).sum() for w in weights))


def ortho_penalty_l1(weights):
    """Entrywise-L1 deviation of each layer's Gram matrix from identity."""
    total = 0.0
    for w in weights:
        g = w.T @ w
        total += np.abs(g - np.eye(g.shape[0])).sum()
    return float(total)


def ortho_penalty_frobenius(weights):
    """Squared-Frobenius deviation of each layer's Gram matrix from identity."""
    total = 0.0
    for w in weights:
        d = w.T @ w - np.eye(w.shape[1])
        total += (d * d).sum()
    return float(total)


class LddValue(NamedTuple):
    value: float
    ill_conditioned: bool


def ldd_penalty(weights, jitter=DEFAULT_LDD_JITTER):
    """Log-determinant divergence sum_l [tr(G_l) - logdet(G_l + jitter*I)].

    Flags ill conditioning (any Gram condition number above 1e12) and
    raises :class:`GramSingularError` when a jittered Gram matrix is not
    positive definite, which is this penalty's known failure mode.
    """
    total = 0.0
    flagged = False
    for w in weights:
        g = w.T @ w
        jittered = g + jitter * np.eye(g.shape[0])
        sign, logabsdet = np.linalg.slogdet(jittered)
        if sign <= 0 or not np.isfinite(logabsdet):
            raise GramSingularError(
                "Gram matrix is singular under the log-det penalty "
                f"(layer shape {w.shape}, jitter {jitter:g})"
            )
        if np.linalg.cond(jittered) > ILL_CONDITIONED_LIMIT:
            flagged = True
        total += float(np.trace(g)) - float(logabsdet)
    return LddValue(float(total), flagged)


def penalty(weights, spec):
    """Combined penalty lambda1 * L1 + lambda_orth * (chosen orthogonality norm)."""
    weights = _penalized(weights, spec)
    total = 0.0
    if spec.lambda1 != 0.0:
        total += spec.lambda1 * l1_penalty(weights)
    if spec.lambda_orth != 0.0 and spec.ortho_norm != "none":
        if spec.ortho_norm == "l1_norm":
            total += spec.lambda_orth * ortho_penalty_l1(weights)
        elif spec.ortho_norm == "frobenius":
            total += spec.lambda_orth * ortho_penalty_frobenius(weights)
        else:
            total += spec.lambda_orth * ldd_penalty(weights, spec.ldd_jitter).value
    return float(total)


def penalty_subgradient(weights, spec):
    """Per-layer subgradient matrices of :func:`penalty`.

    Uses sign(0) = 0 for the non-smooth terms; the orthogonality-L1 term
    is 2 W sign(G - I), the Frobenius term 4 W (G - I), and the log-det
    term 2 W - 2 W (G + jitter*I)^{-1}.
    """
    grads = [np.zeros_like(w) for w in weights]
    for l, w in enumerate(weights):
        if l in spec.exclude_layers:
            continue
        if spec.lambda1 != 0.0:
            grads[l] += spec.lambda1 * np.sign(w)
        if spec.lambda_orth == 0.0 or spec.ortho_norm == "none":
            continue
        g = w.T @ w
        eye = np.eye(g.shape[0])
        if spec.ortho_norm == "l1_norm":
            grads[l] += spec.lambda_orth * 2.0 * (w @ np.sign(g - eye))
        elif spec.ortho_norm == "frobenius":
            grads[l] += spec.lambda_orth * 4.0 * (w @ (g - eye))
        else:
            jittered = g + spec.ldd_jitter * eye
            try:
                inv = np.linalg.inv(jittered)
            except np.linalg.LinAlgError as exc:
                raise GramSingularError(
                    "cannot invert Gram matrix for the log-det subgradient "
                    f"(layer shape {w.shape}, jitter {spec.ldd_jitter:g})"
                ) from exc
            grads[l] += spec.lambda_orth * (2.0 * w - 2.0 * (w @ inv))
    return grads


def _penalized(weights, spec):
    return [w for l, w in enumerate(weights) if l not in spec.exclude_layers]
