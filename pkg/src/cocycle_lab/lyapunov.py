"""Lyapunov exponents, the H/V swap check and first-return machinery.

Exponents are in nats per iterate. Monte Carlo trials are independent and
draw from ``stream_rng(seed, trial)``; results are reduced in trial order, so
the worker count never changes the output.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np

from ._jit import njit
from .cocycle import (
    ConstructionParams,
    LocallyConstantCocycle,
    build_base,
    build_perturbed,
    closed_form_Bn,
    iterate,
    iterate_batch,
    step_codes,
)
from .exceptions import CapacityError, InvalidParameterError
from .mat2 import Mat2, spectral_norm_batch
from .shift import (
    BernoulliParams,
    Word,
    cylinder_measure,
    return_word,
    sample_symbols,
    stream_rng,
    window_codes,
    zn_cylinder,
)

SWAP_TOL = 1e-9
SWAP_K_CAP = 4
DEFAULT_HORIZON = 10**6


@dataclass(frozen=True)
class ExponentEstimate:
    lambda_plus: float
    stderr: float
    trials: int
    steps_per_trial: int
    exact: float | None = None
    trial_values: tuple[float, ...] = field(default=(), repr=False, compare=False)

    @property
    def lambda_minus(self) -> float:
        return -self.lambda_plus

    def to_dict(self) -> dict:
        out = {"lambda_plus": self.lambda_plus, "lambda_minus": self.lambda_minus,
               "stderr": self.stderr, "trials": self.trials, "steps": self.steps_per_trial}
        if self.exact is not None:
            out["exact"] = self.exact
        return out


def _check_p(p: float) -> float:
    return BernoulliParams(p).p


def exact_exponent_base(sigma: float, eta: float, p: float) -> float:
    """``|(1-p) ln eta - p ln sigma|`` for the diagonal cocycle."""
    if not (sigma > 1 and eta > 1):
        raise InvalidParameterError("sigma and eta must exceed 1")
    p = _check_p(p)
    return abs((1 - p) * math.log(eta) - p * math.log(sigma))


def zero_exponent_p(sigma: float, eta: float) -> float:
    """The Bernoulli parameter at which the diagonal cocycle has zero exponents."""
    return math.log(eta) / math.log(sigma * eta)


# -- renormalised log-norm of long products ---------------------------------

@njit(cache=True, nogil=True)
def _log_norm_kernel(table, codes, renorm_every):
    p11, p12, p21, p22 = 1.0, 0.0, 0.0, 1.0
    exponent = 0
    for t in range(codes.shape[0]):
        c = codes[t]
        m11, m12 = table[c, 0, 0], table[c, 0, 1]
        m21, m22 = table[c, 1, 0], table[c, 1, 1]
        p11, p12, p21, p22 = (m11 * p11 + m12 * p21, m11 * p12 + m12 * p22,
                              m21 * p11 + m22 * p21, m21 * p12 + m22 * p22)
        if (t + 1) % renorm_every == 0:
            big = max(max(abs(p11), abs(p12)), max(abs(p21), abs(p22)))
            e = math.frexp(big)[1]
            p11, p12 = math.ldexp(p11, -e), math.ldexp(p12, -e)
            p21, p22 = math.ldexp(p21, -e), math.ldexp(p22, -e)
            exponent += e
    nrm = 0.5 * (math.hypot(p11 + p22, p12 - p21) + math.hypot(p11 - p22, p12 + p21))
    return exponent * math.log(2.0) + math.log(nrm)


def log_norm_indexed(table: np.ndarray, codes: np.ndarray, renorm_every: int = 1) -> float:
    """``log ||table[codes[-1]] @ ... @ table[codes[0]]||``.

    The running product is left-multiplied one step at a time. Every
    `renorm_every` steps it is rescaled by the power of two nearest its
    largest entry and the binary exponent is accumulated. Rescaling by a
    power of two is exact, so the result does not depend on the cadence at
    all; dividing by the norm itself would round, and products that later
    cancel (as for the direction-swapping perturbation) amplify that
    rounding to the percent level.
    """
    if renorm_every < 1:
        raise InvalidParameterError("renorm_every must be at least 1")
    table = np.ascontiguousarray(table, dtype=np.float64)
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    return float(_log_norm_kernel(table, codes, int(renorm_every)))


def log_norm_product(mats: np.ndarray, renorm_every: int = 1) -> float:
    """``log ||mats[-1] @ ... @ mats[0]||`` without overflow."""
    mats = np.asarray(mats, dtype=np.float64)
    return log_norm_indexed(mats, np.arange(len(mats)), renorm_every)


def _map_ordered(fn: Callable[[int], float], n: int, workers: int | None) -> list:
    workers = (os.cpu_count() or 1) if workers is None else max(1, int(workers))
    if workers == 1 or n == 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def _summarise(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(len(arr)))


def trial_exponent(coc: LocallyConstantCocycle, symbols: np.ndarray, steps: int,
                   renorm_every: int = 1) -> float:
    """Finite-time exponent ``log ||A^steps(x)|| / steps`` along one stream.

    ``symbols[0]`` is the coordinate ``coc.window_lo`` of ``x``.
    """
    codes = step_codes(coc, symbols, steps)
    return log_norm_indexed(coc.table(), codes, renorm_every) / steps


def mc_exponent(coc: LocallyConstantCocycle, p: float, steps: int, trials: int,
                seed: int = 0, workers: int | None = None,
                renorm_every: int = 1) -> ExponentEstimate:
    """Monte Carlo estimate of the top exponent under the Bernoulli measure.

    Each trial samples the coordinates ``[window_lo, steps - 1 + window_hi]``
    from ``stream_rng(seed, trial)`` and computes ``log ||A^steps|| / steps``;
    the estimate is the trial mean with its standard error.
    """
    p = _check_p(p)
    if steps < 1 or trials < 2:
        raise InvalidParameterError("need steps >= 1 and trials >= 2")
    coc.table()
    length = steps + coc.width - 1

    def run(t: int) -> float:
        symbols = sample_symbols(stream_rng(seed, t), length, p)
        return trial_exponent(coc, symbols, steps, renorm_every)

    values = _map_ordered(run, trials, workers)
    mean, stderr = _summarise(values)
    exact = None
    if coc.descriptor.get("kind") == "base":
        exact = exact_exponent_base(coc.descriptor["sigma"], coc.descriptor["eta"], p)
    return ExponentEstimate(mean, stderr, trials, steps, exact, tuple(values))


# -- swap of horizontal and vertical directions ---------------------------

@dataclass(frozen=True)
class SwapReport:
    max_diag_residual: float
    max_direction_residual: float
    max_offdiag_rel_error: float
    max_det_error: float
    window_words: int
    contexts: int
    tol: float = SWAP_TOL

    @property
    def passed(self) -> bool:
        return (self.max_diag_residual <= self.tol
                and self.max_direction_residual <= self.tol)

    def to_dict(self) -> dict:
        return {"max_diag_residual": self.max_diag_residual,
                "max_direction_residual": self.max_direction_residual,
                "max_offdiag_rel_error": self.max_offdiag_rel_error,
                "max_det_error": self.max_det_error,
                "window_words": self.window_words, "contexts": self.contexts,
                "tol": self.tol, "pass": self.passed}


def antidiagonal_residual(mats: np.ndarray) -> np.ndarray:
    """``max(|m11|, |m22|) / ||m||``; zero exactly for anti-diagonal matrices."""
    mats = np.asarray(mats, dtype=float)
    diag = np.maximum(np.abs(mats[..., 0, 0]), np.abs(mats[..., 1, 1]))
    return diag / spectral_norm_batch(mats)


def direction_residual(mats: np.ndarray) -> np.ndarray:
    """How far ``m (1,0)`` is from the vertical and ``m (0,1)`` from the horizontal."""
    mats = np.asarray(mats, dtype=float)
    col_h = np.abs(mats[..., 0, 0]) / np.hypot(mats[..., 0, 0], mats[..., 1, 0])
    col_v = np.abs(mats[..., 1, 1]) / np.hypot(mats[..., 0, 1], mats[..., 1, 1])
    return np.maximum(col_h, col_v)


def zn_contexts(k: int) -> np.ndarray:
    """Every symbol context on ``[-2k, 4k]`` whose ``[0, 2k]`` spells the return word.

    These are the ``2^(2k)`` window words of ``B_n`` on ``Z_n``, each with all
    ``2^(2k)`` continuations that later steps of ``B_n^n`` read.
    """
    if k > SWAP_K_CAP:
        raise CapacityError(f"k={k} exceeds the enumeration cap of {SWAP_K_CAP}")
    free = 4 * k
    codes = np.arange(1 << free, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(free)) & 1).astype(np.uint8)
    w = np.broadcast_to(np.array(return_word(k), dtype=np.uint8), (len(codes), 2 * k + 1))
    return np.concatenate([bits[:, :2 * k], w, bits[:, 2 * k:]], axis=1)


def verify_swap(params: ConstructionParams, perturb: bool = True) -> SwapReport:
    """Check that ``B_n^n`` is anti-diagonal on every ``Z_n`` context.

    With ``perturb=False`` the unperturbed diagonal cocycle is used as a
    control; its residual is 1.
    """
    k = params.k
    contexts = zn_contexts(k)
    coc = _perturbed(params) if perturb else build_base(params.sigma, params.eta)
    start = coc.window_lo + 2 * k
    mats = iterate_batch(coc, contexts, params.n, start=start)
    closed = closed_form_Bn(params)
    off_err = max(
        float(np.max(np.abs(mats[:, 0, 1] - closed.a12) / abs(closed.a12))),
        float(np.max(np.abs(mats[:, 1, 0] - closed.a21) / abs(closed.a21))),
    )
    det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
    return SwapReport(
        max_diag_residual=float(antidiagonal_residual(mats).max()),
        max_direction_residual=float(direction_residual(mats).max()),
        max_offdiag_rel_error=off_err,
        max_det_error=float(np.abs(det - 1.0).max()),
        window_words=1 << (2 * k),
        contexts=len(contexts),
    )


@lru_cache(maxsize=32)
def _perturbed(params: ConstructionParams) -> LocallyConstantCocycle:
    return build_perturbed(params)


# -- first returns to Z_n ----------------------------------------------------

@dataclass(frozen=True)
class ReturnExcursion:
    """One first-return block ``[0; w, b, w]`` with ``2k`` symbols of left context.

    `word` spans ``[-2k, n + s + n - 1]``: the context, ``w``, the middle
    block ``b`` of length ``s``, and the returning copy of ``w``.
    """

    word: Word
    return_time: int
    excursion_label: str

    @property
    def s(self) -> int:
        return len(self.excursion_label)


@dataclass(frozen=True)
class ExcursionSample:
    """Excursions in sampling order, plus the ones cut off by the horizon."""

    excursions: tuple[ReturnExcursion, ...]
    requested: int
    truncated: int
    horizon: int

    def __len__(self) -> int:
        return len(self.excursions)

    def __iter__(self) -> Iterator[ReturnExcursion]:
        return iter(self.excursions)

    def __getitem__(self, i):
        return self.excursions[i]

    @property
    def return_times(self) -> np.ndarray:
        return np.array([e.return_time for e in self.excursions], dtype=float)


def _k_of(params: ConstructionParams | int) -> int:
    return params.k if isinstance(params, ConstructionParams) else int(params)


def sample_return_excursions(params: ConstructionParams | int, p: float, count: int,
                             seed: int = 0, horizon: int = DEFAULT_HORIZON,
                             batch: int = 1024) -> ExcursionSample:
    """Sample first-return excursions to ``Z_n`` from ``mu_p`` conditioned on ``Z_n``.

    Coordinates ``[0, n-1]`` are forced to the return word, everything else
    is i.i.d.; each excursion scans forward for the first ``t > 0`` where the
    word reappears. Excursions still open after `horizon` fresh symbols are
    counted in ``truncated`` and not emitted. Batch ``j`` draws from
    ``stream_rng(seed, j)``.
    """
    p = _check_p(p)
    k = _k_of(params)
    if count < 0:
        raise InvalidParameterError("count must be non-negative")
    out: list[ReturnExcursion] = []
    truncated = 0
    for j, start in enumerate(range(0, count, batch)):
        rows = min(batch, count - start)
        exc, cut = _excursion_batch(stream_rng(seed, j), k, p, rows, horizon)
        out.extend(exc)
        truncated += cut
    return ExcursionSample(tuple(out), count, truncated, horizon)


def _excursion_batch(rng: np.random.Generator, k: int, p: float, rows: int,
                     horizon: int) -> tuple[list[ReturnExcursion], int]:
    w = np.array(return_word(k), dtype=np.uint8)
    n = len(w)
    target = _pattern_code(w)
    mu = (1 - p) ** k * p ** (k + 1)
    left = sample_symbols(rng, rows * 2 * k, p).reshape(rows, 2 * k)
    chunk = int(min(horizon, max(4 * n, 4 / mu)))
    body = np.concatenate([np.tile(w, (rows, 1)),
                           sample_symbols(rng, rows * chunk, p).reshape(rows, chunk)], axis=1)
    open_rows = np.arange(rows)
    closed: dict[int, np.ndarray] = {}
    checked = 1
    while True:
        hits = window_codes(body[:, checked:], n) == target
        found = hits.any(axis=1)
        for i in np.flatnonzero(found):
            t = checked + int(np.argmax(hits[i]))
            closed[int(open_rows[i])] = body[i, :t + n]
        open_rows, body = open_rows[~found], body[~found]
        fresh = body.shape[1] - n
        if len(open_rows) == 0 or fresh >= horizon:
            break
        checked = fresh + 1
        grow = min(fresh, horizon - fresh)
        extra = sample_symbols(rng, len(open_rows) * grow, p).reshape(-1, grow)
        body = np.concatenate([body, extra], axis=1)
    excursions = []
    for r in sorted(closed):
        seq = closed[r]
        t = len(seq) - n
        excursions.append(ReturnExcursion(
            word=Word(-2 * k, tuple(np.concatenate([left[r], seq]).tolist())),
            return_time=t,
            excursion_label="".join(map(str, seq[n:t].tolist())),
        ))
    return excursions, rows - len(excursions)


def _pattern_code(pattern) -> int:
    return int(sum(int(s) << i for i, s in enumerate(pattern)))


@dataclass(frozen=True)
class KacReport:
    mean_return: float
    stderr: float
    expected: float
    excursions: int
    truncated: int
    horizon: int

    @property
    def rel_error(self) -> float:
        return abs(self.mean_return - self.expected) / self.expected

    @property
    def truncation_fraction(self) -> float:
        return self.truncated / max(1, self.excursions + self.truncated)

    def to_dict(self) -> dict:
        return {"mean_return": self.mean_return, "stderr": self.stderr,
                "expected": self.expected, "rel_error": self.rel_error,
                "excursions": self.excursions, "truncated": self.truncated,
                "truncation_fraction": self.truncation_fraction, "horizon": self.horizon}


def kac_check(k: int, p: float, count: int, seed: int = 0,
              horizon: int = DEFAULT_HORIZON) -> KacReport:
    """Empirical mean first-return time against ``1 / mu_p(Z_n)``."""
    sample = sample_return_excursions(k, p, count, seed, horizon)
    times = sample.return_times
    expected = 1.0 / cylinder_measure(zn_cylinder(k), BernoulliParams(p))
    stderr = float(times.std(ddof=1) / math.sqrt(len(times))) if len(times) > 1 else math.inf
    mean = float(times.mean()) if len(times) else math.nan
    return KacReport(mean, stderr, expected, len(times), sample.truncated, horizon)


def induced_matrix(params: ConstructionParams, exc: ReturnExcursion,
                   coc: LocallyConstantCocycle | None = None) -> Mat2:
    """Induced cocycle on one excursion: ``B_n^(n+s)`` along its word."""
    coc = _perturbed(params) if coc is None else coc
    return iterate(coc, exc.word, exc.return_time)


# -- induced exponent -------------------------------------------------------

@dataclass(frozen=True)
class InducedExponentReport:
    induced: ExponentEstimate
    ambient: ExponentEstimate
    zn_measure: float
    mean_return: float
    exact: float | None = None

    @property
    def induced_scaled(self) -> float:
        return self.induced.lambda_plus * self.zn_measure

    @property
    def induced_scaled_stderr(self) -> float:
        return self.induced.stderr * self.zn_measure

    @property
    def ambient_corrected(self) -> float:
        return self.ambient.lambda_plus * self.mean_return * self.zn_measure

    @property
    def combined_stderr(self) -> float:
        return math.hypot(self.induced_scaled_stderr, self.ambient.stderr)

    @property
    def agrees(self) -> bool:
        return abs(self.induced_scaled - self.ambient.lambda_plus) <= 3 * self.combined_stderr

    @property
    def agrees_exact(self) -> bool | None:
        if self.exact is None:
            return None
        return abs(self.induced_scaled - self.exact) <= 3 * self.induced_scaled_stderr

    def to_dict(self) -> dict:
        return {
            "induced": self.induced.to_dict(),
            "ambient": self.ambient.to_dict(),
            "zn_measure": self.zn_measure,
            "mean_return": self.mean_return,
            "induced_scaled": self.induced_scaled,
            "induced_scaled_stderr": self.induced_scaled_stderr,
            "ambient_corrected": self.ambient_corrected,
            "combined_stderr": self.combined_stderr,
            "exact": self.exact,
            "agrees": self.agrees,
            "agrees_exact": self.agrees_exact,
        }


def induced_exponent_check(coc: LocallyConstantCocycle, p: float, k: int, steps: int,
                           trials: int, seed: int = 0,
                           workers: int | None = None) -> InducedExponentReport:
    """Compare the induced exponent on ``Z_n`` with the ambient one.

    Each induced trial starts from ``mu_p`` conditioned on ``Z_n``, locates
    the returns ``0 = t_0 < t_1 < ... < t_m`` within `steps` iterates and
    takes ``log ||B^(t_m)|| / m``: the product of the ``m`` induced matrices
    normalised per induced step. Scaled by ``mu_p(Z_n)`` it should match the
    ambient exponent, which is estimated from independent streams.
    """
    p = _check_p(p)
    w = np.array(return_word(k), dtype=np.uint8)
    n = len(w)
    lo, hi = coc.window_lo, coc.window_hi
    pre = max(0, -lo)
    length = pre + steps + max(hi, n - 1) + 1
    table = coc.table()

    def run(t: int) -> tuple[float, float]:
        rng = stream_rng(seed, t, 1)
        symbols = sample_symbols(rng, length, p)
        symbols[pre:pre + n] = w
        returns = np.flatnonzero(window_codes(symbols[pre:pre + steps + n - 1], n)
                                 == _pattern_code(w))
        m = len(returns) - 1
        if m < 1:
            raise InvalidParameterError(f"no return to Z_n within {steps} steps; increase steps")
        horizon = int(returns[-1])
        codes = step_codes(coc, symbols, horizon, start=pre + lo)
        log_norm = log_norm_indexed(table, codes)
        return log_norm / m, horizon / m

    results = _map_ordered(run, trials, workers)
    induced_vals = [r[0] for r in results]
    mean_return = float(np.mean([r[1] for r in results]))
    mean, stderr = _summarise(induced_vals)
    induced = ExponentEstimate(mean, stderr, trials, steps, None, tuple(induced_vals))
    ambient = mc_exponent(coc, p, steps, trials, seed, workers)
    zn_mu = cylinder_measure(zn_cylinder(k), BernoulliParams(p))
    return InducedExponentReport(induced, ambient, zn_mu, mean_return, ambient.exact)
