import math

import numpy as np
import pytest

from cocycle_lab.cocycle import build_base, build_perturbed, closed_form_Bn, identity_cocycle
from cocycle_lab.exceptions import InvalidParameterError
from cocycle_lab.lyapunov import (
    ReturnExcursion,
    antidiagonal_residual,
    exact_exponent_base,
    induced_exponent_check,
    induced_matrix,
    kac_check,
    log_norm_product,
    mc_exponent,
    sample_return_excursions,
    trial_exponent,
    verify_swap,
    zero_exponent_p,
)
from cocycle_lab.mat2 import det_batch
from cocycle_lab.shift import Word, occurrences, return_word, sample_symbols, stream_rng

LAMBDA_REF = 0.5 * math.log(2)


def test_exact_examples():
    assert exact_exponent_base(4, 2, 0.5) == pytest.approx(0.34657359, abs=1e-8)
    assert exact_exponent_base(4, 2, zero_exponent_p(4, 2)) == pytest.approx(0, abs=1e-15)
    assert zero_exponent_p(4, 2) == pytest.approx(1 / 3, rel=1e-15)
    assert exact_exponent_base(3, 3, 0.5) == 0
    with pytest.raises(InvalidParameterError):
        exact_exponent_base(4, 2, 1.0)


def test_identity_exponent_is_exactly_zero():
    est = mc_exponent(identity_cocycle(), 0.5, steps=1000, trials=8)
    assert est.lambda_plus == 0 and est.stderr == 0
    assert est.lambda_minus == 0


def test_symmetric_case_near_zero():
    # Here log||A^T|| = |S_T| ln 2 for a simple random walk S_T, so every
    # trial is non-negative and the mean sits near 0.8 ln2 / sqrt(T). The
    # honest tolerance is the random-walk scale ln2 / sqrt(T), not the
    # standard error of the trial mean.
    T = 20_000
    est = mc_exponent(build_base(2, 2), 0.5, steps=T, trials=32, seed=4)
    assert est.exact == 0
    assert 0 <= est.lambda_plus <= 3 * math.log(2) / math.sqrt(T)


def test_base_converges_to_exact():
    base = build_base(4, 2)
    ests = [mc_exponent(base, 0.5, steps=T, trials=64) for T in (10**3, 10**4, 10**5)]
    for est in ests:
        assert abs(est.lambda_plus - LAMBDA_REF) <= 3 * est.stderr
    assert ests[0].stderr > ests[1].stderr > ests[2].stderr
    assert abs(ests[-1].lambda_plus - LAMBDA_REF) < 0.01


def test_estimate_serialization():
    est = mc_exponent(build_base(4, 2), 0.5, steps=100, trials=4)
    d = est.to_dict()
    assert set(d) == {"lambda_plus", "lambda_minus", "stderr", "trials", "steps", "exact"}
    assert d["lambda_minus"] == -d["lambda_plus"]
    assert d["steps"] == 100 and d["trials"] == 4
    vals = np.array(est.trial_values)
    assert est.stderr == pytest.approx(vals.std(ddof=1) / 2, rel=1e-12)


def test_worker_count_does_not_change_result(ref_params):
    coc = build_perturbed(ref_params(1))
    a = mc_exponent(coc, 0.5, steps=5000, trials=9, seed=3, workers=1)
    b = mc_exponent(coc, 0.5, steps=5000, trials=9, seed=3, workers=4)
    assert a == b and a.trial_values == b.trial_values


@pytest.mark.parametrize("which", ["base", "perturbed"])
def test_renormalisation_cadence_invariance(ref_params, which):
    coc = build_base(4, 2) if which == "base" else build_perturbed(ref_params(1))
    symbols = sample_symbols(stream_rng(5), 20_000, 0.5)
    steps = 20_000 - coc.width
    every = trial_exponent(coc, symbols, steps, renorm_every=1)
    sparse = trial_exponent(coc, symbols, steps, renorm_every=16)
    assert abs(every - sparse) <= 1e-12 * abs(every)


def test_log_norm_product_oracle():
    rng = np.random.default_rng(1)
    mats = rng.normal(size=(30, 2, 2))
    prod = np.eye(2)
    for m in mats:
        prod = m @ prod
    want = math.log(np.linalg.norm(prod, 2))
    assert log_norm_product(mats) == pytest.approx(want, rel=1e-12)


# -- direction swap ------------------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2, 3])
def test_swap_passes(ref_params, k):
    rep = verify_swap(ref_params(k))
    assert rep.passed
    assert rep.max_offdiag_rel_error <= 1e-10
    assert rep.max_det_error <= 1e-10
    assert rep.window_words == 4**k


def test_swap_control_fails(ref_params):
    rep = verify_swap(ref_params(2), perturb=False)
    assert rep.max_diag_residual == 1.0
    assert not rep.passed


def test_antidiagonal_residual():
    assert antidiagonal_residual(np.array([[0.0, 2.0], [-0.5, 0.0]])) == 0
    assert antidiagonal_residual(np.eye(2)) == 1


# -- returns and the induced cocycle ----------------------------------------------------

@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_periodic_return_word_returns_at_n(k):
    w = return_word(k)
    periodic = w * 6
    hits = occurrences(periodic, w)
    assert list(np.diff(hits)) == [len(w)] * 5


def test_sampled_excursions_are_first_returns(ref_params):
    k = 2
    n = 2 * k + 1
    sample = sample_return_excursions(ref_params(k), 0.5, 300, seed=9)
    assert len(sample) == 300 and sample.truncated == 0
    w = return_word(k)
    for exc in sample:
        word = exc.word
        assert word.lo == -2 * k
        t = exc.return_time
        assert t == n + exc.s
        assert word.restrict(0, n - 1).symbols == w
        assert word.restrict(t, t + n - 1).symbols == w
        inner = word.restrict(0, t + n - 2).symbols
        assert list(occurrences(inner, w)) == [0]


def test_excursion_sampling_deterministic():
    a = sample_return_excursions(1, 0.5, 2000, seed=1, batch=256)
    b = sample_return_excursions(1, 0.5, 2000, seed=1, batch=256)
    assert a.excursions == b.excursions


def test_truncation_is_reported():
    sample = sample_return_excursions(3, 0.5, 50, seed=0, horizon=20)
    assert sample.truncated > 0
    assert len(sample) + sample.truncated == 50


def test_immediate_return_matches_closed_form(ref_params):
    k = 2
    p = ref_params(k)
    w = "".join(map(str, return_word(k)))
    word = Word.from_string(-2 * k, "1010" + w + w + "0110")
    exc = ReturnExcursion(word, 2 * k + 1, "")
    m = induced_matrix(p, exc).to_array()
    closed = closed_form_Bn(p).to_array()
    np.testing.assert_allclose(m, closed, rtol=1e-10, atol=1e-9 * np.abs(closed).max())


def test_induced_matrices_antidiagonal_and_pairs_diagonal(ref_params):
    p = ref_params(2)
    sample = sample_return_excursions(p, 0.5, 200, seed=2)
    mats = np.array([induced_matrix(p, e).to_array() for e in sample])
    assert antidiagonal_residual(mats).max() <= 1e-9
    np.testing.assert_allclose(det_batch(mats), 1.0, atol=1e-10)
    pairs = mats[1:] @ mats[:-1]
    scale = np.linalg.norm(mats[1:], 2, axis=(1, 2)) * np.linalg.norm(mats[:-1], 2, axis=(1, 2))
    off = np.maximum(np.abs(pairs[:, 0, 1]), np.abs(pairs[:, 1, 0]))
    assert (off / scale).max() <= 1e-9


@pytest.mark.parametrize("k,expected", [(1, 8.0), (2, 32.0)])
def test_kac(k, expected):
    rep = kac_check(k, 0.5, 20_000, seed=0)
    assert rep.expected == expected
    assert abs(rep.mean_return - expected) <= 3 * rep.stderr
    assert rep.truncated == 0


def test_kac_biased_coin():
    p, k = 0.7, 1
    rep = kac_check(k, p, 20_000, seed=1)
    assert rep.expected == pytest.approx(1 / ((1 - p) ** k * p ** (k + 1)))
    assert abs(rep.mean_return - rep.expected) <= 3 * rep.stderr


def test_induced_exponent_identity():
    rep = induced_exponent_check(identity_cocycle(), 0.5, 1, steps=2000, trials=4)
    assert rep.induced_scaled == 0 and rep.ambient.lambda_plus == 0


def test_induced_exponent_base_small():
    rep = induced_exponent_check(build_base(4, 2), 0.5, 1, steps=20_000, trials=32, seed=1)
    assert rep.agrees
    assert rep.agrees_exact
    assert rep.mean_return == pytest.approx(8, rel=0.05)


def test_induced_exponent_perturbed_small(ref_params):
    coc = build_perturbed(ref_params(1))
    rep = induced_exponent_check(coc, 0.5, 1, steps=50_000, trials=16, seed=0)
    assert abs(rep.induced_scaled) < 0.15 * LAMBDA_REF
