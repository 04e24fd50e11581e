"""Chain families: evaluation, triple sampling, composition residuals,
time homogeneity, direct sums, and relabelings."""

from __future__ import annotations

import numpy as np
import pytest

from evochain.chain import (
    ChainFamily,
    Entry,
    TriplePlan,
    ck_residuals,
    constant_entry,
    direct_sum,
    is_time_homogeneous,
    piecewise_entry,
    relabeled_chain,
    verify_ck,
    zero_entry,
)
from evochain.config import build_chain, load_chain
from evochain.errors import ChainDomainError
from evochain.scalar_fn import ScalarFn


@pytest.fixture(scope="module")
def exp_chain():
    return load_chain("triangular111-exp")[0]


# --- entries -----------------------------------------------------------------


def test_entry_helpers_broadcast():
    z = zero_entry()
    assert z(0.5, 1.0) == 0.0
    assert np.array_equal(z(np.array([1.0, 2.0]), 3.0), [0.0, 0.0])
    c = constant_entry(2.5)
    assert c(0.1, 0.2) == 2.5
    assert np.array_equal(c(np.array([1.0, 2.0]), np.array([3.0, 4.0])), [2.5, 2.5])
    assert not c.is_zero and z.is_zero


def test_piecewise_entry_is_right_open():
    e = piecewise_entry(
        [2.0],
        [lambda s, t: np.broadcast_to(1.0, np.broadcast_shapes(np.shape(s), np.shape(t))),
         lambda s, t: np.broadcast_to(0.0, np.broadcast_shapes(np.shape(s), np.shape(t)))],
        ["1", "0"],
    )
    assert e(0.5, 1.9) == 1.0
    assert e(0.5, 2.0) == 0.0  # switches exactly at the threshold
    assert np.array_equal(e(0.1, np.array([1.0, 2.0, 3.0])), [1.0, 0.0, 0.0])
    assert "if t < 2.0" in e.formula


def test_piecewise_entry_validates_thresholds():
    one = lambda s, t: 1.0
    with pytest.raises(ValueError):
        piecewise_entry([2.0, 1.0], [one, one, one], ["1", "1", "1"])
    with pytest.raises(ValueError):
        piecewise_entry([1.0], [one], ["1"])


# --- evaluation and domain ------------------------------------------------------


def test_matrix_batch_and_single_agree_bitwise(exp_chain):
    rng = np.random.default_rng(7)
    s = np.sort(rng.uniform(0.1, 10.0, (40, 2)), axis=1)
    batch = exp_chain.matrices(s[:, 0], s[:, 1])
    for k in range(40):
        single = exp_chain.matrix(s[k, 0], s[k, 1])
        assert np.array_equal(single, batch[k])


def test_evaluate_returns_upper_triangular_algebra(exp_chain):
    alg = exp_chain.evaluate(1.0, 2.0)
    assert alg.is_upper_triangular()
    m = alg.matrix
    e = np.exp(1.0)
    assert m[0, 0] == pytest.approx(e, rel=1e-12)
    assert m[0, 1] == pytest.approx(e, rel=1e-12)   # drift contribution (t - s) e
    assert m[0, 2] == pytest.approx(-e, rel=1e-12)  # corner picks up -s (t - s) e
    assert m[1, 2] == pytest.approx(e, rel=1e-12)


def test_domain_violations_raise(exp_chain):
    with pytest.raises(ChainDomainError):
        exp_chain.matrix(2.0, 1.0)  # disordered
    with pytest.raises(ChainDomainError):
        exp_chain.matrix(0.5, 11.0)  # past the window
    with pytest.raises(ChainDomainError):
        exp_chain.matrix(0.01, 1.0)  # before the window


def test_formulas_expose_every_entry(exp_chain):
    grid = exp_chain.formulas()
    assert len(grid) == 3 and all(len(row) == 3 for row in grid)
    assert grid[1][0] == "0"


# --- triple sampling -------------------------------------------------------------


def test_triple_plan_is_reproducible(exp_chain):
    a, _ = TriplePlan(count=50, seed=11).build(exp_chain)
    b, _ = TriplePlan(count=50, seed=11).build(exp_chain)
    c, _ = TriplePlan(count=50, seed=12).build(exp_chain)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all((a[:, 0] < a[:, 1]) & (a[:, 1] < a[:, 2]))
    assert np.all((a >= 0.1) & (a <= 10.0))


def test_straddle_triples_bracket_thresholds():
    chain = build_chain(
        {
            "generator": "permutation",
            "params": {
                "images": [1, 2],
                "fixed_points": {"1": {"step": 3.0}, "2": {"ratio": "exp(t)"}},
            },
            "window": [0.1, 6.0],
        }
    )
    assert chain.thresholds == (3.0,)
    triples, _ = TriplePlan(count=20).build(chain)
    assert triples.shape[0] > 20
    extra = triples[20:]
    assert np.any((extra[:, 0] < 3.0) & (extra[:, 2] > 3.0))
    assert np.any(extra[:, 1] == 3.0)  # tau exactly on the threshold
    assert np.any(extra[:, 2] == 3.0)  # t exactly on the threshold


def test_step_chain_is_exact_and_vanishes_late():
    chain = build_chain(
        {
            "generator": "permutation",
            "params": {
                "images": [1, 2],
                "fixed_points": {"1": {"step": 3.0}, "2": {"step": 1.5}},
            },
            "window": [0.1, 6.0],
        }
    )
    assert chain.matrix(0.5, 1.0)[0, 0] == 1.0
    assert chain.matrix(0.5, 4.0)[0, 0] == 0.0
    assert chain.matrix(0.5, 1.0)[1, 1] == 1.0
    assert chain.matrix(0.5, 1.5)[1, 1] == 0.0  # right-open at the threshold
    # every entry is exactly 0 or 1, so the composition law holds exactly
    report = verify_ck(chain, TriplePlan(count=200))
    assert report.passed
    assert report.max_residual == 0.0
    assert report.regime_stats  # thresholded chains get per-regime buckets


# --- composition residuals ---------------------------------------------------------


def test_constant_idempotent_chain_is_exact():
    chain = load_chain("constant-idempotent")[0]
    report = verify_ck(chain, TriplePlan(count=300))
    assert report.passed
    assert report.max_residual == 0.0


def test_exp_preset_passes_and_reports(exp_chain):
    report = verify_ck(exp_chain, tol=1e-9)
    assert report.passed
    assert report.n_triples == 1000  # smooth entries: no straddle batch
    assert report.max_residual < 1e-9
    s, tau, t = report.worst_triple
    assert 0.1 <= s < tau < t <= 10.0
    top = report.worst(5)
    assert len(top) == 5
    assert [r for *_, r in top] == sorted((r for *_, r in top), reverse=True)
    assert top[0][3] == report.max_residual
    d = report.to_dict()
    assert d["chain"] == exp_chain.name
    assert d["passed"] is True
    assert d["region_labels"] == ["[0, inf)"]
    assert d["regimes"] == []  # regime breakdown only applies to piecewise chains


def test_perturbed_corner_defect_matches_hand_formula(exp_chain):
    base = exp_chain.entries[0][2]
    entries = [row[:] for row in exp_chain.entries]
    entries[0][2] = Entry(lambda s, t: base(s, t) + 0.01, base.formula + " + 0.01")
    pert = ChainFamily(entries, name="perturbed", window=exp_chain.window)

    rng = np.random.default_rng(5)
    triples = np.sort(rng.uniform(0.1, 10.0, (20, 3)), axis=1)
    residuals, defects, scales, finite = ck_residuals(pert, triples)
    assert np.all(finite)
    s, tau, t = triples[:, 0], triples[:, 1], triples[:, 2]
    # the shifted corner enters the product through both diagonal scalings
    # and enters the target once, so the mismatch is their difference
    expected = 0.01 * (np.exp(tau - s) + np.exp(t - tau) - 1.0)
    assert np.allclose(defects, expected, rtol=1e-9)
    assert np.allclose(residuals, expected / scales, rtol=1e-9)

    report = verify_ck(pert, TriplePlan(count=100), tol=1e-9)
    assert not report.passed

    tight = ck_residuals(pert, np.array([[0.1, 0.15, 0.2]]))
    assert tight[0][0] == pytest.approx(0.00524, rel=1e-2)


def test_verify_ck_with_no_valid_triples_raises():
    grid = [[constant_entry(1.0)]]
    blocked = ChainFamily(
        grid, window=(0.1, 5.0), nonzero_fns=[("blocker", ScalarFn.parse("0"))]
    )
    with pytest.raises(ChainDomainError):
        verify_ck(blocked, TriplePlan(count=16))


# --- time homogeneity -----------------------------------------------------------


def test_gap_dependent_chain_is_homogeneous():
    chain = load_chain("permutation-identity-exp")[0]
    verdict, witness = is_time_homogeneous(chain)
    assert verdict and witness is None


def test_exp_preset_is_not_homogeneous(exp_chain):
    verdict, witness = is_time_homogeneous(exp_chain)
    assert not verdict
    a, b = witness.pair_a, witness.pair_b
    assert (a[1] - a[0]) == pytest.approx(b[1] - b[0], abs=1e-12)
    direct = np.max(np.abs(exp_chain.matrix(*a) - exp_chain.matrix(*b)))
    assert direct == pytest.approx(witness.max_difference, rel=1e-12)
    assert witness.max_difference > 1e-9


# --- direct sums and relabelings ---------------------------------------------------


def test_direct_sum_defects_decompose_blockwise():
    good = load_chain("constant-idempotent")[0]
    bad = load_chain("symmetric-offdiag")[0]
    combined = direct_sum([good, bad])
    assert combined.n == 4
    assert combined.window == (0.1, 10.0)

    rng = np.random.default_rng(9)
    triples = np.sort(rng.uniform(0.2, 9.0, (50, 3)), axis=1)
    _, d_combined, _, _ = ck_residuals(combined, triples)
    _, d_good, _, _ = ck_residuals(good, triples)
    _, d_bad, _, _ = ck_residuals(bad, triples)
    assert np.allclose(d_combined, np.maximum(d_good, d_bad), rtol=0, atol=1e-13)
    assert np.all(d_good == 0.0)

    m = combined.matrix(1.0, 2.0)
    assert np.array_equal(m[:2, :2], good.matrix(1.0, 2.0))
    assert np.array_equal(m[2:, 2:], bad.matrix(1.0, 2.0))
    assert np.array_equal(m[:2, 2:], np.zeros((2, 2)))


def test_direct_sum_requires_overlapping_windows():
    a = ChainFamily([[constant_entry(1.0)]], window=(0.1, 1.0))
    b = ChainFamily([[constant_entry(1.0)]], window=(2.0, 3.0))
    with pytest.raises(ChainDomainError):
        direct_sum([a, b])


def test_relabeling_permutes_entries_and_preserves_composition(exp_chain):
    relab = relabeled_chain(exp_chain, [2, 1, 0])
    assert relab.name == "triangular111-exp-relabeled"
    perm = [2, 1, 0]
    base = exp_chain.matrix(0.7, 1.9)
    assert np.array_equal(relab.matrix(0.7, 1.9), base[np.ix_(perm, perm)])
    report = verify_ck(relab, TriplePlan(count=300))
    assert report.passed

    with pytest.raises(ValueError):
        relabeled_chain(exp_chain, [0, 0, 1])
