import math

import numpy as np
import pytest

from treedistill.errors import GramSingularError, InputError
from treedistill.regularizers import (
    RegularizerSpec,
    gram_matrices,
    l1_penalty,
    ldd_penalty,
    ortho_penalty_frobenius,
    ortho_penalty_l1,
    penalty,
    penalty_subgradient,
)


def fd_gradient(fn, w, h=1e-6):
    """Central finite differences of a scalar function of one matrix."""
    g = np.zeros_like(w)
    for idx in np.ndindex(w.shape):
        wp = w.copy()
        wm = w.copy()
        wp[idx] += h
        wm[idx] -= h
        g[idx] = (fn(wp) - fn(wm)) / (2.0 * h)
    return g


def max_rel_err(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(1e-6, np.abs(a) + np.abs(b))))


def generic_weight(rng, rows, cols, kink_gap=1e-3):
    """Random matrix whose entries and Gram deviations sit away from sign kinks."""
    for _ in range(200):
        w = rng.uniform(0.2, 1.5, size=(rows, cols)) * rng.choice([-1.0, 1.0], size=(rows, cols))
        dev = np.abs(w.T @ w - np.eye(cols))
        if dev.min() > kink_gap:
            return w
    raise AssertionError("could not sample a generic weight matrix")


# ---------------------------------------------------------------------------
# penalty values


def test_l1_zero_weights():
    assert l1_penalty([np.zeros((3, 2)), np.zeros((2, 4))]) == 0.0


def test_l1_hand_value():
    assert l1_penalty([np.array([[1.0, -2.0], [3.0, 0.0]])]) == 6.0


def test_l1_additive_over_layers():
    a = np.array([[1.0, -1.0]])
    b = np.array([[2.0], [-3.0]])
    assert l1_penalty([a, b]) == l1_penalty([a]) + l1_penalty([b])


def test_l1_absolute_homogeneity():
    rng = np.random.default_rng(0)
    w = rng.normal(size=(4, 3))
    for c in (-2.5, -1.0, 0.0, 0.5, 3.0):
        assert l1_penalty([c * w]) == pytest.approx(abs(c) * l1_penalty([w]), rel=1e-12)


def test_ortho_l1_identity_is_zero():
    assert ortho_penalty_l1([np.eye(3)]) == 0.0


def test_ortho_l1_hand_value():
    # G = [[2,2],[2,2]]; |G - I| sums to 1+2+2+1
    assert ortho_penalty_l1([np.array([[1.0, 1.0], [1.0, 1.0]])]) == 6.0


def test_ortho_l1_orthogonal_columns_of_norm_two():
    # diagonal Gram deviation only: 2 * |4 - 1|
    assert ortho_penalty_l1([np.array([[2.0, 0.0], [0.0, 2.0]])]) == 6.0


def test_frobenius_identity_is_zero():
    assert ortho_penalty_frobenius([np.eye(4)]) == 0.0


def test_frobenius_hand_value():
    # (G - I) = [[1,2],[2,1]]; squares sum to 1+4+4+1
    assert ortho_penalty_frobenius([np.array([[1.0, 1.0], [1.0, 1.0]])]) == 10.0


def test_ortho_penalties_invariant_under_column_permutation():
    rng = np.random.default_rng(1)
    w = rng.normal(size=(5, 4))
    perm = rng.permutation(4)
    assert ortho_penalty_l1([w[:, perm]]) == pytest.approx(ortho_penalty_l1([w]), rel=1e-12)
    assert ortho_penalty_frobenius([w[:, perm]]) == pytest.approx(
        ortho_penalty_frobenius([w]), rel=1e-12
    )


def test_ortho_penalties_invariant_under_left_rotation():
    rng = np.random.default_rng(2)
    for _ in range(10):
        w = rng.normal(size=(6, 3))
        q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
        assert ortho_penalty_l1([q @ w]) == pytest.approx(ortho_penalty_l1([w]), abs=1e-9)
        assert ortho_penalty_frobenius([q @ w]) == pytest.approx(
            ortho_penalty_frobenius([w]), abs=1e-9
        )


def test_ldd_identity():
    value, flagged = ldd_penalty([np.eye(3)], jitter=0.0)
    assert value == pytest.approx(3.0, abs=1e-12)
    assert not flagged


def test_ldd_diagonal_hand_value():
    # W = sqrt(2) I gives G = diag(2, 2): tr 4, logdet ln 4
    w = math.sqrt(2.0) * np.eye(2)
    value, _ = ldd_penalty([w], jitter=0.0)
    assert value == pytest.approx(4.0 - math.log(4.0), abs=1e-12)


def test_ldd_rank_deficient_raises_without_jitter():
    w = np.array([[1.0, 1.0], [2.0, 2.0]])  # identical columns
    with pytest.raises(GramSingularError):
        ldd_penalty([w], jitter=0.0)


def test_ldd_rank_deficient_finite_with_default_jitter():
    w = np.array([[1.0, 1.0], [2.0, 2.0]])
    value, _ = ldd_penalty([w])
    assert np.isfinite(value)


def test_ldd_flags_ill_conditioned_gram():
    # rank-deficient at a scale where cond(G + jitter I) exceeds 1e12
    w = 100.0 * np.array([[1.0, 1.0], [2.0, 2.0]])
    value, flagged = ldd_penalty([w])
    assert np.isfinite(value)
    assert flagged
    assert not ldd_penalty([np.eye(2)]).ill_conditioned


def test_penalties_nonnegative_on_random_weights():
    rng = np.random.default_rng(3)
    for _ in range(25):
        w = rng.normal(size=(int(rng.integers(2, 6)), int(rng.integers(2, 6))))
        assert l1_penalty([w]) >= 0.0
        assert ortho_penalty_l1([w]) >= 0.0
        assert ortho_penalty_frobenius([w]) >= 0.0


def test_gram_matrices_symmetric_psd():
    rng = np.random.default_rng(4)
    for _ in range(25):
        w = rng.normal(size=(int(rng.integers(2, 7)), int(rng.integers(2, 7))))
        (g,) = gram_matrices([w])
        assert np.max(np.abs(g - g.T)) < 1e-12
        assert np.linalg.eigvalsh(g).min() >= -1e-9


# ---------------------------------------------------------------------------
# combined penalty


def test_combined_penalty_inactive_spec_is_zero():
    rng = np.random.default_rng(5)
    w = [rng.normal(size=(3, 3))]
    assert penalty(w, RegularizerSpec()) == 0.0
    assert RegularizerSpec().is_inactive


def test_combined_penalty_hand_value():
    w = [np.array([[1.0, 1.0], [1.0, 1.0]])]
    spec = RegularizerSpec(lambda1=0.5, lambda_orth=2.0, ortho_norm="l1_norm")
    assert penalty(w, spec) == pytest.approx(0.5 * 4.0 + 2.0 * 6.0, rel=1e-12)


def test_combined_penalty_degenerates_to_l1():
    rng = np.random.default_rng(6)
    w = [rng.normal(size=(4, 2)), rng.normal(size=(2, 3))]
    spec = RegularizerSpec(lambda1=1.0, lambda_orth=0.0, ortho_norm="l1_norm")
    assert penalty(w, spec) == pytest.approx(l1_penalty(w), rel=1e-12)


def test_spec_validation():
    with pytest.raises(InputError):
        RegularizerSpec(lambda1=-0.1)
    with pytest.raises(InputError):
        RegularizerSpec(ortho_norm="nuclear")
    with pytest.raises(InputError):
        RegularizerSpec(ldd_jitter=-1e-9)


def test_spec_round_trips_through_dict():
    spec = RegularizerSpec(lambda1=0.01, lambda_orth=0.5, ortho_norm="frobenius", ldd_jitter=1e-7)
    assert RegularizerSpec.from_dict(spec.to_dict()) == spec


# ---------------------------------------------------------------------------
# subgradients


def test_l1_subgradient_is_sign_map():
    w = [np.array([[2.0, -3.0], [0.0, 1.0]])]
    spec = RegularizerSpec(lambda1=0.7)
    (g,) = penalty_subgradient(w, spec)
    assert np.array_equal(g, 0.7 * np.array([[1.0, -1.0], [0.0, 1.0]]))


def test_frobenius_gradient_zero_at_orthonormal():
    spec = RegularizerSpec(lambda_orth=1.3, ortho_norm="frobenius")
    (g,) = penalty_subgradient([np.eye(3)], spec)
    assert np.array_equal(g, np.zeros((3, 3)))


def test_excluded_layers_get_zero_gradient():
    rng = np.random.default_rng(7)
    w = [rng.normal(size=(3, 3)), rng.normal(size=(3, 2))]
    spec = RegularizerSpec(lambda1=0.5, exclude_layers=(1,))
    g = penalty_subgradient(w, spec)
    assert np.any(g[0] != 0.0)
    assert np.all(g[1] == 0.0)
    assert penalty(w, spec) == pytest.approx(0.5 * l1_penalty([w[0]]), rel=1e-12)


@pytest.mark.parametrize(
    "norm,shapes",
    [
        ("l1_norm", [(5, 3), (3, 4), (4, 4)]),
        ("frobenius", [(5, 3), (3, 4), (4, 4)]),
        ("ldd", [(5, 3), (6, 4), (4, 4)]),  # tall/square keeps the Gram PD
    ],
)
def test_subgradients_match_finite_differences(norm, shapes):
    rng = np.random.default_rng(8)
    spec = RegularizerSpec(lambda1=0.3, lambda_orth=0.9, ortho_norm=norm, ldd_jitter=0.0)
    for rows, cols in shapes:
        for _ in range(6):
            w = generic_weight(rng, rows, cols)
            (analytic,) = penalty_subgradient([w], spec)
            numeric = fd_gradient(lambda m: penalty([m], spec), w, h=1e-6)
            assert max_rel_err(analytic, numeric) < 1e-4


def test_ldd_subgradient_raises_on_singular_gram():
    w = np.array([[1.0, 1.0], [2.0, 2.0]])
    spec = RegularizerSpec(lambda_orth=1.0, ortho_norm="ldd", ldd_jitter=0.0)
    with pytest.raises(GramSingularError):
        penalty_subgradient([w], spec)
