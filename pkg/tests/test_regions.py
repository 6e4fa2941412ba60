import time

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from cocycle_lab.exceptions import InvalidParameterError
from cocycle_lab.regions import (
    CSV_HEADER,
    DISCONTINUITY_LABELS,
    Label,
    ParameterPoint,
    classify,
    read_csv,
    sweep,
    write_csv,
)
from cocycle_lab.repro import eta_sweep_zones

rates = st.floats(1.01, 8.0)
alphas = st.floats(0.05, 3.0)
probs = st.floats(0.01, 0.99)


def test_bunched_point():
    assert classify(ParameterPoint(1.2, 1.1, 1.0, 0.5)).labels == {
        Label.FIBER_BUNCHED_CONTINUITY}


def test_reference_point():
    rep = classify(ParameterPoint(4, 2, 0.4, 0.5))
    assert rep.labels == {Label.THEOREM_A_DISCONTINUITY, Label.BOCKER_VIANA_DISCONTINUITY}
    assert rep.strongest == Label.THEOREM_A_DISCONTINUITY
    assert rep.witnesses["pow_3a"] == pytest.approx(2.2974, abs=1e-4)


def test_zero_locus_point():
    labels = classify(ParameterPoint(4, 2, 0.4, 1 / 3)).labels
    assert Label.ZERO_EXPONENT_LOCUS in labels
    assert Label.THEOREM_A_DISCONTINUITY not in labels


def test_bn_and_butler_need_large_p():
    labels = classify(ParameterPoint(4, 2, 0.4, 0.8)).labels
    assert {Label.BN_DISCONTINUITY, Label.BUTLER_DISCONTINUITY} <= labels


def test_boundary_remark():
    alpha = 0.4
    eta = 2 ** (1.5 * alpha)
    labels = classify(ParameterPoint(4, eta, alpha, 0.5)).labels
    assert Label.BOUNDARY_REMARK2 in labels
    assert Label.THEOREM_A_DISCONTINUITY not in labels


def test_remark1_only_when_sigma_below_eta():
    labels = classify(ParameterPoint(3, 4, 0.4, 0.5)).labels
    assert labels == {Label.REMARK1_DISCONTINUITY}
    labels = classify(ParameterPoint(2, 4, 0.4, 0.5)).labels
    assert labels == {Label.UNRESOLVED}


def test_unresolved_gap():
    # 2^alpha <= sigma^2 and eta^2 < 2^(2 alpha).
    rep = classify(ParameterPoint(1.3, 1.2, 0.4, 0.5))
    assert rep.labels == {Label.UNRESOLVED}


def test_invalid_points():
    for bad in [(1.0, 1.1, 1, 0.5), (2, 2, 0, 0.5), (2, 2, 1, 1.0), (float("nan"), 2, 1, 0.5)]:
        with pytest.raises(InvalidParameterError):
            ParameterPoint(*bad)


@given(rates, rates, alphas, probs)
def test_bunched_excludes_discontinuity(s, e, a, p):
    labels = classify(ParameterPoint(s, e, a, p)).labels
    if Label.FIBER_BUNCHED_CONTINUITY in labels:
        assert not labels & DISCONTINUITY_LABELS


@given(rates, alphas, probs)
def test_theorem_a_implies_bn_inequality(e, a, p):
    rep = classify(ParameterPoint(8.0, e, a, p))
    if Label.THEOREM_A_DISCONTINUITY in rep.labels:
        assert rep.witnesses["eta2"] >= rep.witnesses["pow_3a"]


@given(st.floats(1.01, 7.0), st.floats(1.01, 7.0), alphas, probs)
def test_theorem_a_monotone_in_eta(e1, e2, a, p):
    lo, hi = sorted((e1, e2))
    sigma = 8.0
    assume(abs(p - classify(ParameterPoint(sigma, lo, a, p)).witnesses["zero_p"]) > 1e-9)
    assume(abs(p - classify(ParameterPoint(sigma, hi, a, p)).witnesses["zero_p"]) > 1e-9)
    if Label.THEOREM_A_DISCONTINUITY in classify(ParameterPoint(sigma, lo, a, p)).labels:
        assert Label.THEOREM_A_DISCONTINUITY in classify(ParameterPoint(sigma, hi, a, p)).labels


@given(rates, rates, alphas, probs)
def test_classify_is_pure(s, e, a, p):
    pt = ParameterPoint(s, e, a, p)
    assert classify(pt) == classify(pt)
    assert classify(pt).to_dict() == classify(pt).to_dict()


def test_single_cell_sweep_matches_classify():
    rows = sweep(0.4, 0.5, (4, 4), (2, 2), 1)
    assert len(rows) == 1
    assert rows[0] == classify(ParameterPoint(4, 2, 0.4, 0.5))


def test_sweep_order_and_skip():
    rows = sweep(0.4, 0.5, (1.5, 3.0), (1.5, 3.0), 4)
    cells = [(r.point.sigma, r.point.eta) for r in rows]
    assert all(e <= s for s, e in cells)
    assert cells == sorted(cells)
    assert len(rows) == 10


def test_empty_grid():
    with pytest.raises(InvalidParameterError):
        sweep(0.4, 0.5, (1.5, 1.5), (2.0, 3.0), 5)
    with pytest.raises(InvalidParameterError):
        sweep(0.4, 0.5, (0.5, 2.0), (1.5, 2.0), 5)


def test_csv_roundtrip():
    rows = sweep(0.4, 0.8, (1.1, 4.0), (1.1, 4.0), 7)
    text = write_csv(rows, comment={"alpha": 0.4})
    assert text.splitlines()[1] == ",".join(CSV_HEADER)
    back = read_csv(text)
    assert len(back) == len(rows)
    for rec, rep in zip(back, rows):
        assert rec["sigma"] == rep.point.sigma and rec["eta"] == rep.point.eta
        assert rec["labels"] == rep.sorted_labels()
        assert rec["pow_3a"] == rep.witnesses["pow_3a"]
        if Label.FIBER_BUNCHED_CONTINUITY in rec["labels"]:
            assert not set(rec["labels"]) & DISCONTINUITY_LABELS


def test_grid_100_is_fast():
    start = time.perf_counter()
    rows = sweep(0.4, 0.5, (1.01, 4.0), (1.01, 4.0), 100)
    write_csv(rows)
    assert time.perf_counter() - start < 1.0


def test_eta_sweep_zone_order():
    assert eta_sweep_zones() == [Label.FIBER_BUNCHED_CONTINUITY, Label.UNRESOLVED,
                                 Label.BUTLER_DISCONTINUITY, Label.THEOREM_A_DISCONTINUITY]
