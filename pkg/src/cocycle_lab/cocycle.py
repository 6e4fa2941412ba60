"""Locally constant SL(2) cocycles over the full 2-shift.

A cocycle is a rule reading the coordinates ``[window_lo, window_hi]`` of a
point. Everything numeric goes through the value table: entry ``code`` holds
the matrix for the window word whose bit ``i`` is the symbol at
``window_lo + i``. Tables for the constructed cocycles are built with
vectorised pattern tests on sub-windows, so no per-word Python work is done.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable

import numpy as np

from .exceptions import (
    CapacityError,
    InsufficientContextError,
    InvalidInputError,
    InvalidParameterError,
)
from .mat2 import (
    SL2_TOL,
    Mat2,
    condition_batch,
    det_batch,
    spectral_norm_batch,
)
from .shift import CylinderSpec, Word, return_word, shift_cylinder, zn_cylinder

TABLE_CAP_BITS = 22
CONTEXT_CAP_BITS = 20
MAX_SEMINORM_PAIRS = 10**9

TableBuilder = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ConstructionParams:
    sigma: float
    eta: float
    alpha: float = 0.4
    gamma: float = 4 / 3
    k: int = 1

    def __post_init__(self):
        for name in ("sigma", "eta", "alpha", "gamma"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if not (self.sigma > 1 and self.eta > 1):
            raise InvalidParameterError("sigma and eta must exceed 1")
        if not self.alpha > 0:
            raise InvalidParameterError("alpha must be positive")
        if not 1 <= self.gamma < 2:
            raise InvalidParameterError("gamma must lie in [1, 2)")
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise InvalidParameterError(f"k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        self._check_exponent_identities()

    def _check_exponent_identities(self) -> None:
        # Exponents of eta / sigma carried as rationals; eps*delta and
        # beta*delta must collapse to eta^-2k and sigma^-2k.
        g, k = Fraction(self.gamma).limit_denominator(10**9), self.k
        eps_eta = -g * k
        delta_eta = k * (g - 2)
        beta_eta, beta_sigma = k * (2 - g), Fraction(-2 * k)
        if eps_eta + delta_eta != -2 * k or (beta_eta + delta_eta, beta_sigma) != (0, -2 * k):
            raise InvalidParameterError("exponent identities failed")  # pragma: no cover
        eta_2k = math.exp(-2 * k * math.log(self.eta))
        sigma_2k = math.exp(-2 * k * math.log(self.sigma))
        if not (math.isclose(self.eps * self.delta, eta_2k, rel_tol=1e-12)
                and math.isclose(self.beta * self.delta, sigma_2k, rel_tol=1e-12)):
            raise InvalidParameterError("floating-point parameters lost the exponent identities")

    @property
    def n(self) -> int:
        return 2 * self.k + 1

    @property
    def eps(self) -> float:
        return math.exp(-self.gamma * self.k * math.log(self.eta))

    @property
    def delta(self) -> float:
        return math.exp(self.k * (self.gamma - 2) * math.log(self.eta))

    @property
    def beta(self) -> float:
        return math.exp(self.k * (2 - self.gamma) * math.log(self.eta)
                        - 2 * self.k * math.log(self.sigma))

    @property
    def c(self) -> float:
        return 1.0 / math.sqrt(1.0 + self.delta**2)

    def with_k(self, k: int) -> ConstructionParams:
        return ConstructionParams(self.sigma, self.eta, self.alpha, self.gamma, k)

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "eta": self.eta, "alpha": self.alpha,
                "gamma": self.gamma, "k": self.k}


@dataclass(frozen=True, eq=False)
class LocallyConstantCocycle:
    """Cocycle whose value at ``x`` depends on ``x[window_lo..window_hi]``.

    `rule` maps a `Word` on exactly that window to a `Mat2`. `table_builder`
    is an optional vectorised equivalent taking an array of window codes.
    """

    window_lo: int
    window_hi: int
    rule: Callable[[Word], Mat2]
    sl2: bool = True
    descriptor: dict = field(default_factory=dict)
    table_builder: TableBuilder | None = None

    def __post_init__(self):
        if self.window_lo > self.window_hi:
            raise InvalidInputError("empty cocycle window")

    @property
    def width(self) -> int:
        return self.window_hi - self.window_lo + 1

    def value(self, word: Word) -> Mat2:
        """Value at any point extending `word` (which must cover the window)."""
        if not word.covers(self.window_lo, self.window_hi):
            raise InsufficientContextError(
                f"word [{word.lo}, {word.hi}] does not cover window "
                f"[{self.window_lo}, {self.window_hi}]")
        return Mat2.from_array(self.table()[word.restrict(self.window_lo, self.window_hi).code])

    def table(self) -> np.ndarray:
        return self._table

    @cached_property
    def _table(self) -> np.ndarray:
        if self.width > TABLE_CAP_BITS:
            raise CapacityError(f"window width {self.width} exceeds {TABLE_CAP_BITS} bits")
        codes = np.arange(1 << self.width, dtype=np.int64)
        if self.table_builder is not None:
            table = np.asarray(self.table_builder(codes), dtype=float)
        else:
            table = np.stack([
                self.rule(Word.from_code(self.window_lo, self.width, int(c))).to_array()
                for c in codes])
        if not np.all(np.isfinite(table)):
            raise InvalidInputError("cocycle produced non-finite values")
        if self.sl2:
            frob = np.maximum(1.0, np.sum(table**2, axis=(1, 2)))
            if np.any(np.abs(det_batch(table) - 1.0) > SL2_TOL * frob):
                raise InvalidInputError("cocycle flagged sl2 has a value with det != 1")
        table.setflags(write=False)
        return table

    def to_dict(self) -> dict:
        return dict(self.descriptor) or {"kind": "custom",
                                         "window": [self.window_lo, self.window_hi]}


def _subcodes(codes: np.ndarray, offset: int, width: int) -> np.ndarray:
    return (codes >> offset) & ((1 << width) - 1)


def _pattern_code(pattern) -> int:
    return sum(int(s) << i for i, s in enumerate(pattern))


def _from_table(lo: int, hi: int, table_builder: TableBuilder, **kwargs) -> LocallyConstantCocycle:
    def rule(word: Word) -> Mat2:
        return Mat2.from_array(table_builder(np.array([word.code]))[0])
    return LocallyConstantCocycle(lo, hi, rule, table_builder=table_builder, **kwargs)


def identity_cocycle() -> LocallyConstantCocycle:
    return _from_table(0, 0, lambda codes: np.broadcast_to(np.eye(2), (len(codes), 2, 2)).copy(),
                       descriptor={"kind": "identity"})


def constant_cocycle(m: Mat2, sl2: bool = True) -> LocallyConstantCocycle:
    arr = m.to_array()
    return _from_table(0, 0, lambda codes: np.broadcast_to(arr, (len(codes), 2, 2)).copy(),
                       sl2=sl2, descriptor={"kind": "constant", "value": m.to_list()})


def _base_matrices(sigma: float, eta: float) -> np.ndarray:
    return np.array([np.diag([1.0 / eta, eta]), np.diag([sigma, 1.0 / sigma])])


def build_base(sigma: float, eta: float) -> LocallyConstantCocycle:
    """Diagonal cocycle: ``diag(1/eta, eta)`` if ``x_0 = 0``, ``diag(sigma, 1/sigma)`` if 1."""
    if not (sigma > 1 and eta > 1):
        raise InvalidParameterError("sigma and eta must exceed 1")
    mats = _base_matrices(float(sigma), float(eta))
    return _from_table(0, 0, lambda codes: mats[codes & 1],
                       descriptor={"kind": "base", "sigma": float(sigma), "eta": float(eta)})


def special_cylinders(k: int) -> tuple[CylinderSpec, CylinderSpec, CylinderSpec]:
    """``Z_n`` and its images under the ``k``-th and ``2k``-th shift."""
    zn = zn_cylinder(k)
    return zn, shift_cylinder(zn, k), shift_cylinder(zn, 2 * k)


def perturbation_matrices(params: ConstructionParams) -> np.ndarray:
    """``[identity, R on Z_n, R on f^k Z_n, R on f^2k Z_n]``."""
    eps, delta, beta, c = params.eps, params.delta, params.beta, params.c
    return np.array([
        np.eye(2),
        [[1.0, 0.0], [eps, 1.0]],
        [[c, -c * delta], [c * delta, c]],
        [[1.0, 0.0], [beta, 1.0]],
    ])


def _perturbation_class(k: int) -> Callable[[np.ndarray], np.ndarray]:
    cylinders = special_cylinders(k)
    for i in range(3):
        for j in range(i + 1, 3):
            if not cylinders[i].conflicts_with(cylinders[j]):
                raise InvalidParameterError("special cylinders are not pairwise disjoint")
    lo, n = -2 * k, 2 * k + 1
    target = _pattern_code(return_word(k))
    offsets = [cyl.lo - lo for cyl in cylinders]

    def classify(codes: np.ndarray) -> np.ndarray:
        cls = np.zeros(codes.shape, dtype=np.int64)
        for label, off in enumerate(offsets, start=1):
            hit = (_subcodes(codes, off, n) == target) & (cls == 0)
            cls[hit] = label
        return cls

    return classify


def build_perturbation(params: ConstructionParams) -> LocallyConstantCocycle:
    k = params.k
    classify = _perturbation_class(k)
    mats = perturbation_matrices(params)
    return _from_table(-2 * k, 2 * k, lambda codes: mats[classify(codes)],
                       descriptor={"kind": "perturbation", **params.to_dict()})


def build_perturbed(params: ConstructionParams) -> LocallyConstantCocycle:
    """``B_n(x) = A(x) R(x)`` with the base matrix on the left."""
    k = params.k
    classify = _perturbation_class(k)
    base = _base_matrices(params.sigma, params.eta)
    products = np.einsum("aij,bjk->abik", base, perturbation_matrices(params))

    def builder(codes: np.ndarray) -> np.ndarray:
        x0 = _subcodes(codes, 2 * k, 1)
        return products[x0, classify(codes)]

    return _from_table(-2 * k, 2 * k, builder,
                       descriptor={"kind": "perturbed", **params.to_dict()})


def difference(a: LocallyConstantCocycle, b: LocallyConstantCocycle) -> LocallyConstantCocycle:
    """``a - b`` on the union of both windows; never flagged sl2."""
    lo, hi = min(a.window_lo, b.window_lo), max(a.window_hi, b.window_hi)
    ta, tb = a.table(), b.table()

    def builder(codes: np.ndarray) -> np.ndarray:
        return (ta[_subcodes(codes, a.window_lo - lo, a.width)]
                - tb[_subcodes(codes, b.window_lo - lo, b.width)])

    descriptor = {"kind": "difference", "left": a.to_dict(), "right": b.to_dict()}
    if a.descriptor.get("kind") == "base" and b.descriptor.get("kind") == "perturbed":
        descriptor = {"kind": "difference", **{key: b.descriptor[key] for key in
                                               ("sigma", "eta", "alpha", "gamma", "k")}}
    return _from_table(lo, hi, builder, sl2=False, descriptor=descriptor)


def build_difference(params: ConstructionParams) -> LocallyConstantCocycle:
    """``A - B_n`` for the given construction parameters."""
    return difference(build_base(params.sigma, params.eta), build_perturbed(params))


def cocycle_from_descriptor(desc: dict) -> LocallyConstantCocycle:
    kind = desc.get("kind")
    if kind == "identity":
        return identity_cocycle()
    if kind == "base":
        return build_base(desc["sigma"], desc["eta"])
    fields = {key: desc[key] for key in ("sigma", "eta", "gamma", "k")}
    params = ConstructionParams(alpha=desc.get("alpha", 0.4), **fields)
    builders = {"perturbed": build_perturbed, "perturbation": build_perturbation,
                "difference": build_difference}
    if kind not in builders:
        raise InvalidInputError(f"unknown cocycle kind {kind!r}")
    return builders[kind](params)


# -- iteration --------------------------------------------------------------

def _as_symbol_array(segment: Word | np.ndarray) -> np.ndarray:
    if isinstance(segment, Word):
        return segment.as_array()
    return np.asarray(segment, dtype=np.uint8)


def step_codes(coc: LocallyConstantCocycle, symbols: np.ndarray, steps: int, start: int = 0) -> np.ndarray:
    """Window codes read at times ``0..steps-1``.

    `symbols[..., start]` must be the coordinate at ``window_lo`` at time 0.
    """
    from .shift import window_codes

    need = start + steps + coc.width - 1
    if symbols.shape[-1] < need:
        raise InsufficientContextError(
            f"need {need} symbols for {steps} steps, got {symbols.shape[-1]}")
    return window_codes(symbols[..., start:need], coc.width, count=steps)


def iterate(coc: LocallyConstantCocycle, segment: Word, steps: int) -> Mat2:
    """``A^steps`` at the point extending `segment`; later times multiply on the left."""
    if steps < 0:
        raise InvalidInputError("steps must be non-negative")
    if steps == 0:
        return Mat2.identity()
    if not segment.covers(coc.window_lo, coc.window_hi + steps - 1):
        raise InsufficientContextError(
            f"segment [{segment.lo}, {segment.hi}] must cover "
            f"[{coc.window_lo}, {coc.window_hi + steps - 1}]")
    codes = step_codes(coc, segment.as_array(), steps, start=coc.window_lo - segment.lo)
    return Mat2.from_array(product_of(coc.table()[codes]))


def product_of(mats: np.ndarray) -> np.ndarray:
    """Ordered product ``mats[-1] @ ... @ mats[0]`` along the second-to-last axes."""
    out = np.broadcast_to(np.eye(2), mats.shape[:-3] + (2, 2)).copy()
    for t in range(mats.shape[-3]):
        out = mats[..., t, :, :] @ out
    return out


def iterate_batch(coc: LocallyConstantCocycle, contexts: np.ndarray, steps: int, start: int = 0) -> np.ndarray:
    """`iterate` over each row of a ``(m, L)`` symbol array."""
    contexts = _as_symbol_array(contexts)
    codes = step_codes(coc, contexts, steps, start)
    return product_of(coc.table()[codes])


def closed_form_Bn(params: ConstructionParams) -> Mat2:
    """Closed form of ``B_n^n`` on ``Z_n``; the diagonal is exactly zero."""
    eta, sigma, k = params.eta, params.sigma, params.k
    c, delta, eps = params.c, params.delta, params.eps
    upper = -(eta**k) * sigma ** (k + 1) * delta
    lower = eta**k * sigma ** (-k - 1) * (eta ** (-2 * k) * delta + eps)
    return Mat2(0.0, c * upper, c * lower, 0.0)


# -- norms ------------------------------------------------------------------

@dataclass(frozen=True)
class HolderNorm:
    sup: float
    seminorm: float
    alpha: float
    exact: bool = True

    @property
    def norm(self) -> float:
        return self.sup + self.seminorm

    def to_dict(self) -> dict:
        return {"sup": self.sup, "seminorm": self.seminorm, "norm": self.norm,
                "alpha": self.alpha, "exact": self.exact}


def sup_norm(coc: LocallyConstantCocycle) -> float:
    return float(spectral_norm_batch(coc.table()).max())


def _radius_table(lo: int, width: int) -> np.ndarray:
    """Entry ``mask`` is the smallest ``|lo + i|`` over the set bits ``i``."""
    codes = np.arange(1 << width, dtype=np.int64)
    radius = np.zeros(1 << width, dtype=np.int64)
    for i in sorted(range(width), key=lambda b: -abs(lo + b)):
        radius[(codes >> i) & 1 == 1] = abs(lo + i)
    return radius


def holder_seminorm_exact(coc: LocallyConstantCocycle, alpha: float,
                          max_pairs: int = MAX_SEMINORM_PAIRS) -> float:
    """Exact alpha-Hölder seminorm by enumerating window-word pairs.

    For window words ``u != v`` the extensions agreeing off the window sit at
    distance ``2^-N`` where ``N`` is the first disagreement radius, so the
    supremum is a maximum over pairs. Only pairs with at least one word
    outside the most common value class can contribute.
    """
    if not alpha > 0:
        raise InvalidParameterError("alpha must be positive")
    lo, width = coc.window_lo, coc.width
    if not lo <= 0 <= coc.window_hi:
        raise InvalidInputError("the cocycle window must contain index 0")
    if width > TABLE_CAP_BITS:
        raise CapacityError(f"window width {width} too large; use holder_bound for a bound")
    flat = coc.table().reshape(-1, 4)
    values, cls, counts = np.unique(flat, axis=0, return_inverse=True, return_counts=True)
    cls = cls.ravel()
    if len(values) == 1:
        return 0.0
    movers = np.flatnonzero(cls != np.argmax(counts))
    n_words = 1 << width
    if len(movers) * n_words > max_pairs:
        raise CapacityError(
            f"{len(movers) * n_words} pairs exceed the budget of {max_pairs}; "
            "use holder_bound for a bound-only estimate")

    radius = _radius_table(lo, width)
    weights = 2.0 ** (alpha * np.arange(radius.max() + 1))
    codes = np.arange(n_words, dtype=np.int64)
    vals = values.reshape(-1, 2, 2)
    small = len(values) <= 2048
    if small:
        diff_norms = spectral_norm_batch(vals[:, None] - vals[None, :])

    best = 0.0
    chunk = max(1, (1 << 22) // n_words)
    for start in range(0, len(movers), chunk):
        u = movers[start:start + chunk]
        w = weights[radius[u[:, None] ^ codes[None, :]]]
        if small:
            d = diff_norms[cls[u][:, None], cls[None, :]]
        else:
            d = spectral_norm_batch(flat[u][:, None, :].reshape(-1, 1, 2, 2)
                                    - flat.reshape(1, -1, 2, 2))
        best = max(best, float((w * d).max()))
    return best


def holder_norm(coc: LocallyConstantCocycle, alpha: float) -> HolderNorm:
    return HolderNorm(sup_norm(coc), holder_seminorm_exact(coc, alpha), alpha, exact=True)


def holder_bound_terms(params: ConstructionParams) -> dict[str, float]:
    sigma, eta, alpha, gamma, k = (params.sigma, params.eta, params.alpha,
                                   params.gamma, params.k)
    sup = sigma * max(params.beta, params.delta, params.eps)
    return {
        "sup": sup,
        "split": 2 * sup,
        "in_zn": eta * (2 ** (2 * alpha) / eta**gamma) ** k,
        "in_f2k": sigma * (2 ** (2 * alpha) * eta ** (2 - gamma) / sigma**2) ** k,
        "fk_vs_f2k": 2**alpha * sigma * (params.beta + params.delta),
        "in_fk": sigma * (2**alpha / eta ** (2 - gamma)) ** k,
    }


def holder_bound(params: ConstructionParams) -> float:
    """Analytic upper bound on the alpha-Hölder norm of ``A - B_n``."""
    terms = holder_bound_terms(params)
    return terms["sup"] + max(v for key, v in terms.items() if key != "sup")


def holder_bound_ratios(params: ConstructionParams) -> dict[str, float]:
    """Per-k geometric ratios of every term in `holder_bound_terms`."""
    sigma, eta, alpha, gamma = params.sigma, params.eta, params.alpha, params.gamma
    return {
        "eps": eta**-gamma,
        "delta": eta ** (gamma - 2),
        "beta": eta ** (2 - gamma) / sigma**2,
        "in_zn": 2 ** (2 * alpha) / eta**gamma,
        "in_f2k": 2 ** (2 * alpha) * eta ** (2 - gamma) / sigma**2,
        "in_fk": 2**alpha / eta ** (2 - gamma),
    }


def holder_bound_decays(params: ConstructionParams) -> bool:
    """Whether every term of the bound shrinks geometrically in k."""
    return all(r < 1 for r in holder_bound_ratios(params).values())


# -- fiber bunching -----------------------------------------------------------

@dataclass(frozen=True)
class BunchingResult:
    bunched_at: int | None
    n_checked: int
    worst_value: float
    threshold: float
    worst_context: Word

    @property
    def found(self) -> bool:
        return self.bunched_at is not None

    def to_dict(self) -> dict:
        return {
            "bunched_at": self.bunched_at if self.found else "NOT_FOUND",
            "n_checked": self.n_checked,
            "worst_value": self.worst_value,
            "threshold": self.threshold,
            "worst_context": self.worst_context.to_dict(),
            # NOT_FOUND only means no N up to n_checked works.
            "proof_of_non_bunching": False,
        }


def fiber_bunching_test(coc: LocallyConstantCocycle, alpha: float, n_max: int) -> BunchingResult:
    """Least ``N <= n_max`` with ``max ||A^N|| ||(A^N)^-1|| < 2^(alpha N)``."""
    if n_max < 1:
        raise InvalidParameterError("n_max must be at least 1")
    if not alpha > 0:
        raise InvalidParameterError("alpha must be positive")
    width = coc.width
    if width + n_max - 1 > CONTEXT_CAP_BITS:
        raise CapacityError(
            f"contexts of {width + n_max - 1} symbols exceed {CONTEXT_CAP_BITS} bits")
    table = coc.table()
    products = table
    result = None
    for N in range(1, n_max + 1):
        length = width + N - 1
        if N > 1:
            codes = np.arange(1 << length, dtype=np.int64)
            prev = codes & ((1 << (length - 1)) - 1)
            products = table[_subcodes(codes, N - 1, width)] @ products[prev]
        cond = condition_batch(products)
        worst = int(np.argmax(cond))
        threshold = 2.0 ** (alpha * N)
        result = BunchingResult(
            bunched_at=N if cond[worst] < threshold else None,
            n_checked=N,
            worst_value=float(cond[worst]),
            threshold=threshold,
            worst_context=Word.from_code(coc.window_lo, length, worst),
        )
        if result.found:
            return result
    return result
