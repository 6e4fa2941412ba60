"""Reproduction runs for the package's quantitative claims.

Each ``criterion_*`` function runs one check at pinned parameters and
tolerances and returns a `CriterionResult`. ``run_all`` chains them; the CLI
``repro`` subcommand and the acceptance tests both go through here.
"""
from __future__ import annotations

import contextlib
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cocycle import (
    ConstructionParams,
    build_base,
    build_difference,
    build_perturbed,
    fiber_bunching_test,
    holder_bound,
    holder_bound_decays,
    holder_norm,
)
from .lyapunov import (
    antidiagonal_residual,
    exact_exponent_base,
    induced_exponent_check,
    induced_matrix,
    kac_check,
    mc_exponent,
    sample_return_excursions,
    verify_swap,
)
from .mat2 import spectral_norm_batch
from .regions import Label, ParameterPoint, classify, sweep

REF = dict(sigma=4.0, eta=2.0, alpha=0.4, gamma=4 / 3)
P_HALF = 0.5
LAMBDA_REF = exact_exponent_base(4.0, 2.0, 0.5)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}"

    def to_dict(self) -> dict:
        return {"criterion": self.number, "name": self.name, "pass": self.passed,
                "detail": self.detail}


def criterion_1_exact_formula(seed: int = 0) -> CriterionResult:
    start = time.perf_counter()
    est = mc_exponent(build_base(4.0, 2.0), P_HALF, steps=10**5, trials=64, seed=seed, workers=1)
    elapsed = time.perf_counter() - start
    err = abs(est.lambda_plus - LAMBDA_REF)
    ok = err <= 3 * est.stderr and err < 0.01 and elapsed < 10.0
    return CriterionResult(1, "exact-formula agreement", ok,
                           {"estimate": est.lambda_plus, "stderr": est.stderr,
                            "exact": LAMBDA_REF, "abs_error": err, "seconds": elapsed})


def criterion_2_swap(ks=(1, 2, 3)) -> CriterionResult:
    reports = {k: verify_swap(ConstructionParams(k=k, **REF)) for k in ks}
    ok = all(r.max_diag_residual <= 1e-9 and r.max_offdiag_rel_error <= 1e-10
             and r.max_det_error <= 1e-10 for r in reports.values())
    return CriterionResult(2, "swap identity", ok,
                           {str(k): r.to_dict() for k, r in reports.items()})


def criterion_3_holder_decay(ks=(1, 2, 3, 4), alpha_no_decay: float = 0.8) -> CriterionResult:
    rows = {}
    for k in ks:
        params = ConstructionParams(k=k, **REF)
        norm = holder_norm(build_difference(params), params.alpha)
        rows[k] = {"exact": norm.norm, "bound": holder_bound(params)}
    within = all(r["exact"] <= r["bound"] for r in rows.values())
    decreased = rows[ks[-1]]["exact"] < rows[ks[0]]["exact"]
    decays_ref = holder_bound_decays(ConstructionParams(k=1, **REF))
    decays_bad = holder_bound_decays(
        ConstructionParams(k=1, **{**REF, "alpha": alpha_no_decay}))
    ok = within and decreased and decays_ref and not decays_bad
    return CriterionResult(3, "Hölder decay", ok,
                           {"rows": {str(k): v for k, v in rows.items()},
                            "decays_at_ref": decays_ref,
                            f"decays_at_alpha_{alpha_no_decay}": decays_bad})


def induced_residuals(k: int = 2, p: float = P_HALF, count: int = 1000,
                      seed: int = 0) -> dict:
    params = ConstructionParams(k=k, **REF)
    sample = sample_return_excursions(params, p, count, seed)
    coc = build_perturbed(params)
    mats = np.array([induced_matrix(params, e, coc).to_array() for e in sample])
    pairs = mats[1:] @ mats[:-1]
    off = np.maximum(np.abs(pairs[:, 0, 1]), np.abs(pairs[:, 1, 0]))
    # Consecutive induced matrices undo each other's growth, so the pair
    # product can be O(1) while its rounding error scales with ||M2|| ||M1||.
    norms = spectral_norm_batch(mats)
    scale = norms[1:] * norms[:-1]
    dets = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
    return {"excursions": len(sample), "truncated": sample.truncated,
            "max_antidiag_residual": float(antidiagonal_residual(mats).max()),
            "max_pair_offdiag_residual": float((off / scale).max()),
            "max_pair_offdiag_over_product_norm": float((off / spectral_norm_batch(pairs)).max()),
            "max_det_error": float(np.abs(dets - 1).max())}


def criterion_4_induced(seed: int = 0) -> CriterionResult:
    d = induced_residuals(seed=seed)
    ok = (d["excursions"] == 1000 and d["max_antidiag_residual"] <= 1e-9
          and d["max_pair_offdiag_residual"] <= 1e-9)
    return CriterionResult(4, "induced anti-diagonality", ok, d)


def criterion_5_zero_exponent(seed: int = 0, workers: int | None = None) -> CriterionResult:
    coc = build_perturbed(ConstructionParams(k=3, **REF))
    start = time.perf_counter()
    seq = {T: mc_exponent(coc, P_HALF, steps=T, trials=32, seed=seed, workers=workers)
           for T in (10**4, 10**5, 10**6)}
    elapsed = time.perf_counter() - start
    mags = [abs(seq[T].lambda_plus) for T in sorted(seq)]
    final = mags[-1]
    ok = (final < 0.05 and final < 0.15 * LAMBDA_REF
          and all(a > b for a, b in zip(mags, mags[1:])) and elapsed < 120)
    return CriterionResult(5, "zero-exponent collapse", ok,
                           {"abs_lambda": {str(T): m for T, m in zip(sorted(seq), mags)},
                            "stderr": {str(T): seq[T].stderr for T in sorted(seq)},
                            "reference": LAMBDA_REF, "seconds": elapsed})


def criterion_6_kac(seed: int = 0) -> CriterionResult:
    rep = kac_check(2, P_HALF, 10**5, seed)
    ok = rep.rel_error < 0.02 and rep.truncation_fraction < 1e-3
    return CriterionResult(6, "Kac validation", ok, rep.to_dict())


def criterion_7_induced_exponent(seed: int = 0, workers: int | None = None) -> CriterionResult:
    rep = induced_exponent_check(build_base(4.0, 2.0), P_HALF, k=2, steps=10**5, trials=64,
                                 seed=seed, workers=workers)
    vs_exact = abs(rep.induced_scaled - LAMBDA_REF) <= 3 * rep.induced_scaled_stderr
    ok = vs_exact and rep.agrees
    return CriterionResult(7, "induced-exponent relation", ok, rep.to_dict())


def bunching_grid(n: int = 50, n_max: int = 12) -> dict:
    """Cell midpoints of sigma in (1, 2), alpha in (0.1, 2); eta = sqrt(sigma)."""
    sigmas = 1 + (np.arange(n) + 0.5) / n
    alphas = 0.1 + 1.9 * (np.arange(n) + 0.5) / n
    disagreements = []
    bunched = 0
    for s in sigmas:
        coc = build_base(float(s), math.sqrt(float(s)))
        for a in alphas:
            got = fiber_bunching_test(coc, float(a), n_max).found
            bunched += got
            if got != (s * s < 2.0**a):
                disagreements.append((float(s), float(a)))
    return {"cells": n * n, "bunched": bunched, "disagreements": disagreements}


def criterion_8_bunching() -> CriterionResult:
    d = bunching_grid()
    return CriterionResult(8, "fiber-bunching boundary", not d["disagreements"], d)


def eta_sweep_zones(alpha: float = 0.4, p: float = 0.8, ratio: float = 1.001,
                    steps: int = 400) -> list[Label]:
    """Strongest label along eta with sigma tied just above eta."""
    reports = sweep(alpha, p, (0, 0), (1.01, 3.0), steps, sigma_over_eta=ratio)
    zones: list[Label] = []
    for r in reports:
        if not zones or zones[-1] != r.strongest:
            zones.append(r.strongest)
    return zones


def criterion_9_regions() -> CriterionResult:
    a = classify(ParameterPoint(1.2, 1.1, 1.0, 0.5)).labels
    b = classify(ParameterPoint(4.0, 2.0, 0.4, 0.5)).labels
    c = classify(ParameterPoint(4.0, 2.0, 0.4, 1 / 3)).labels
    points_ok = (
        a == {Label.FIBER_BUNCHED_CONTINUITY}
        and b == {Label.THEOREM_A_DISCONTINUITY, Label.BOCKER_VIANA_DISCONTINUITY}
        and Label.ZERO_EXPONENT_LOCUS in c and Label.THEOREM_A_DISCONTINUITY not in c
    )
    zones = eta_sweep_zones()
    expected = [Label.FIBER_BUNCHED_CONTINUITY, Label.UNRESOLVED,
                Label.BUTLER_DISCONTINUITY, Label.THEOREM_A_DISCONTINUITY]
    ok = points_ok and zones == expected
    return CriterionResult(9, "region classifier", ok,
                           {"points_ok": points_ok, "zones": [str(z) for z in zones]})


DETERMINISM_RUNS = {
    "1": ["exponent", "--sigma", "4", "--eta", "2", "--p", "0.5",
          "--steps", "100000", "--trials", "64"],
    "4": ["verify-swap", "--k", "2", "--returns", "1000"],
    "5": ["exponent", "--sigma", "4", "--eta", "2", "--p", "0.5", "--perturb", "k=3",
          "--alpha", "0.4", "--steps", "1000000", "--trials", "32"],
    "6": ["kac", "--p", "0.5", "--k", "2", "--count", "100000"],
}


def run_cli(argv: list[str]) -> tuple[int, str]:
    from .cli import main

    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue()


def criterion_10_determinism(worker_counts=(1, 8)) -> CriterionResult:
    detail = {}
    ok = True
    for key, argv in DETERMINISM_RUNS.items():
        outputs = [run_cli(argv + ["--workers", str(w)]) for w in worker_counts]
        same = len({out for _, out in outputs}) == 1 and outputs[0][1] != ""
        detail[key] = same
        ok = ok and same
    return CriterionResult(10, "determinism across worker counts", ok, detail)


CRITERIA = (
    criterion_1_exact_formula, criterion_2_swap, criterion_3_holder_decay,
    criterion_4_induced, criterion_5_zero_exponent, criterion_6_kac,
    criterion_7_induced_exponent, criterion_8_bunching, criterion_9_regions,
    criterion_10_determinism,
)


def run_all(only: set[int] | None = None) -> list[CriterionResult]:
    results = []
    for i, fn in enumerate(CRITERIA, start=1):
        if only and i not in only:
            continue
        results.append(fn())
    return results
