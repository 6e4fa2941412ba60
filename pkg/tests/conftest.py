import pytest

from cocycle_lab import ConstructionParams


@pytest.fixture
def ref_params():
    def make(k: int = 1, **overrides) -> ConstructionParams:
        kw = dict(sigma=4.0, eta=2.0, alpha=0.4, gamma=4 / 3, k=k)
        kw.update(overrides)
        return ConstructionParams(**kw)
    return make
