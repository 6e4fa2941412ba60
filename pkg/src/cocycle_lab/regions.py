"""Continuity / discontinuity regions of the diagonal cocycle in (sigma, eta, alpha, p).

Labels are cumulative: a point gets every label whose hypothesis it meets.
Picking one label per cell for a picture is left to `RegionReport.strongest`.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .exceptions import InvalidParameterError

EQ_RTOL = 1e-12


class Label(str, Enum):
    FIBER_BUNCHED_CONTINUITY = "FIBER_BUNCHED_CONTINUITY"
    THEOREM_A_DISCONTINUITY = "THEOREM_A_DISCONTINUITY"
    BOUNDARY_REMARK2 = "BOUNDARY_REMARK2"
    BN_DISCONTINUITY = "BN_DISCONTINUITY"
    BUTLER_DISCONTINUITY = "BUTLER_DISCONTINUITY"
    BOCKER_VIANA_DISCONTINUITY = "BOCKER_VIANA_DISCONTINUITY"
    REMARK1_DISCONTINUITY = "REMARK1_DISCONTINUITY"
    ZERO_EXPONENT_LOCUS = "ZERO_EXPONENT_LOCUS"
    UNRESOLVED = "UNRESOLVED"

    def __str__(self) -> str:
        return self.value


DISCONTINUITY_LABELS = frozenset({
    Label.THEOREM_A_DISCONTINUITY, Label.BOUNDARY_REMARK2, Label.BN_DISCONTINUITY,
    Label.BUTLER_DISCONTINUITY, Label.BOCKER_VIANA_DISCONTINUITY,
    Label.REMARK1_DISCONTINUITY,
})

# Order used to pick one label per point, strongest result first.
PRIORITY = (
    Label.FIBER_BUNCHED_CONTINUITY,
    Label.ZERO_EXPONENT_LOCUS,
    Label.THEOREM_A_DISCONTINUITY,
    Label.REMARK1_DISCONTINUITY,
    Label.BOUNDARY_REMARK2,
    Label.BN_DISCONTINUITY,
    Label.BUTLER_DISCONTINUITY,
    Label.BOCKER_VIANA_DISCONTINUITY,
    Label.UNRESOLVED,
)

CSV_HEADER = ("sigma", "eta", "alpha", "p", "labels",
              "sig2", "eta2", "pow_a", "pow_2a", "pow_3a", "pow_4a")


@dataclass(frozen=True)
class ParameterPoint:
    sigma: float
    eta: float
    alpha: float
    p: float

    def __post_init__(self):
        for name in ("sigma", "eta", "alpha", "p"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if not (self.sigma > 1 and self.eta > 1):
            raise InvalidParameterError("sigma and eta must exceed 1")
        if not self.alpha > 0:
            raise InvalidParameterError("alpha must be positive")
        if not 0 < self.p < 1:
            raise InvalidParameterError("p must lie in (0, 1)")


@dataclass(frozen=True)
class RegionReport:
    point: ParameterPoint
    labels: frozenset[Label]
    witnesses: dict = field(compare=False)

    @property
    def strongest(self) -> Label:
        return next(label for label in PRIORITY if label in self.labels)

    def sorted_labels(self) -> list[Label]:
        return [label for label in PRIORITY if label in self.labels]

    def to_dict(self) -> dict:
        return {"sigma": self.point.sigma, "eta": self.point.eta,
                "alpha": self.point.alpha, "p": self.point.p,
                "labels": [str(label) for label in self.sorted_labels()],
                "witnesses": dict(self.witnesses)}

    def csv_row(self) -> list[str]:
        w = self.witnesses
        return [repr(self.point.sigma), repr(self.point.eta), repr(self.point.alpha),
                repr(self.point.p), "|".join(map(str, self.sorted_labels())),
                *(repr(w[key]) for key in CSV_HEADER[5:])]


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= EQ_RTOL * max(abs(a), abs(b))


def witnesses(pt: ParameterPoint) -> dict[str, float]:
    s, e, a = pt.sigma, pt.eta, pt.alpha
    return {
        "sig2": s * s, "eta2": e * e,
        "pow_a": 2.0**a, "pow_2a": 2.0 ** (2 * a),
        "pow_3a": 2.0 ** (3 * a), "pow_4a": 2.0 ** (4 * a),
        "zero_p": math.log(e) / math.log(s * e),
        "sig3_over_eta": s**3 / e,
    }


def classify(pt: ParameterPoint) -> RegionReport:
    w = witnesses(pt)
    labels: set[Label] = set()
    p = pt.p
    oriented = pt.eta <= pt.sigma
    zero_locus = abs(p - w["zero_p"]) <= EQ_RTOL
    boundary = _close(w["pow_3a"], w["eta2"])

    # Bunching uses the larger of the two diagonal rates; under eta <= sigma
    # this is sigma^2 < 2^alpha.
    if max(w["sig2"], w["eta2"]) < w["pow_a"]:
        labels.add(Label.FIBER_BUNCHED_CONTINUITY)
    if zero_locus:
        labels.add(Label.ZERO_EXPONENT_LOCUS)
    elif oriented:
        if w["pow_3a"] < w["eta2"] and not boundary:
            labels.add(Label.THEOREM_A_DISCONTINUITY)
        if boundary:
            labels.add(Label.BOUNDARY_REMARK2)
        if w["eta2"] >= w["pow_3a"] and 2 / 3 < p < 1:
            labels.add(Label.BN_DISCONTINUITY)
        if w["eta2"] >= w["pow_2a"] and 3 / 4 < p < 1:
            labels.add(Label.BUTLER_DISCONTINUITY)
        if w["eta2"] > w["pow_4a"]:
            labels.add(Label.BOCKER_VIANA_DISCONTINUITY)
    elif w["pow_3a"] < w["sig3_over_eta"]:
        labels.add(Label.REMARK1_DISCONTINUITY)
    if not labels:
        labels.add(Label.UNRESOLVED)
    return RegionReport(pt, frozenset(labels), w)


def _axis(bounds: Sequence[float], steps: int) -> np.ndarray:
    lo, hi = float(bounds[0]), float(bounds[-1])
    if not (lo > 1 and hi >= lo):
        raise InvalidParameterError(f"range must lie in (1, inf) with lo <= hi, got {bounds}")
    if steps < 1:
        raise InvalidParameterError("grid needs at least one step per axis")
    return np.array([lo]) if lo == hi else np.linspace(lo, hi, steps)


def sweep(alpha: float, p: float, sigma_range: Sequence[float], eta_range: Sequence[float],
          grid_steps: int | tuple[int, int], sigma_over_eta: float | None = None,
          ) -> list[RegionReport]:
    """Classify a grid of points, row-major with sigma outer and eta inner.

    Cells with ``eta > sigma`` are skipped. With `sigma_over_eta` set the
    sweep is one-dimensional in eta and ``sigma = sigma_over_eta * eta``.
    """
    n_sigma, n_eta = (grid_steps, grid_steps) if isinstance(grid_steps, int) else grid_steps
    etas = _axis(eta_range, n_eta)
    if sigma_over_eta is not None:
        if not sigma_over_eta >= 1:
            raise InvalidParameterError("sigma_over_eta must be at least 1")
        cells = [(sigma_over_eta * e, e) for e in etas]
    else:
        cells = [(s, e) for s in _axis(sigma_range, n_sigma) for e in etas]
    reports = [classify(ParameterPoint(float(s), float(e), alpha, p))
               for s, e in cells if e <= s]
    if not reports:
        raise InvalidParameterError("the grid contains no cell with eta <= sigma")
    return reports


def write_csv(reports: Iterable[RegionReport], fh=None, comment: dict | None = None) -> str:
    """Write the sweep CSV (comma separated, '.' decimals); returns the text."""
    buf = io.StringIO()
    if comment is not None:
        buf.write("# config: " + json.dumps(comment, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for report in reports:
        writer.writerow(report.csv_row())
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_csv(text: str) -> list[dict]:
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    rows = list(csv.DictReader(lines))
    for row in rows:
        row["labels"] = [Label(x) for x in row["labels"].split("|") if x]
        for key in CSV_HEADER:
            if key != "labels":
                row[key] = float(row[key])
    return rows
