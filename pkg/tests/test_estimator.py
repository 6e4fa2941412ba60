import numpy as np
import pytest
from sklearn.base import clone
from sklearn.utils.validation import NotFittedError

from cocycle_lab import ConstructionParams, build_base, build_perturbed, mc_exponent
from cocycle_lab.estimator import LyapunovEstimator, RegionLabeler, make_symbol_streams
from cocycle_lab.regions import Label


def test_matches_mc_exponent():
    coc = build_perturbed(ConstructionParams(4, 2, 0.4, 4 / 3, 1))
    steps, trials = 3000, 6
    X = make_symbol_streams(0.5, trials, steps + coc.width - 1, seed=11)
    est = LyapunovEstimator(coc).fit(X)
    ref = mc_exponent(coc, 0.5, steps, trials, seed=11, workers=1)
    assert est.lambda_plus_ == ref.lambda_plus
    assert est.stderr_ == ref.stderr
    assert est.n_steps_ == steps
    np.testing.assert_array_equal(est.transform(X).ravel(), est.trial_exponents_)


def test_clone_and_params():
    est = LyapunovEstimator(build_base(4, 2), renorm_every=4)
    assert est.get_params()["renorm_every"] == 4
    twin = clone(est)
    assert twin.renorm_every == 4
    np.testing.assert_array_equal(twin.cocycle.table(), est.cocycle.table())


def test_validation():
    est = LyapunovEstimator(build_base(4, 2))
    with pytest.raises(NotFittedError):
        est.transform(np.zeros((2, 5), dtype=np.uint8))
    with pytest.raises(ValueError):
        est.fit(np.full((3, 5), 2))
    with pytest.raises(ValueError):
        est.fit(np.zeros((1, 5)))
    with pytest.raises(ValueError):
        LyapunovEstimator().fit(np.zeros((3, 5)))


def test_region_labeler():
    X = np.array([[1.2, 1.1, 1.0, 0.5], [4, 2, 0.4, 0.5]])
    lab = RegionLabeler().fit(X)
    assert list(lab.predict(X)) == ["FIBER_BUNCHED_CONTINUITY", "THEOREM_A_DISCONTINUITY"]
    hot = lab.transform(X)
    assert hot.shape == (2, len(Label))
    assert hot[1, lab.labels_.index(Label.BOCKER_VIANA_DISCONTINUITY)] == 1
    with pytest.raises(ValueError):
        RegionLabeler().fit(X[:, :3])
