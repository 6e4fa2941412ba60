"""Exact 2x2 real linear algebra.

`Mat2` is the value type used at API boundaries. The batched helpers at the
bottom operate on ``(..., 2, 2)`` numpy arrays and are what the enumeration
and Monte Carlo code calls in its inner loops.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError, SingularMatrixError

SL2_TOL = 1e-12
_SINGULAR_DET = 1e-300


@dataclass(frozen=True)
class Mat2:
    a11: float
    a12: float
    a21: float
    a22: float

    def __post_init__(self):
        for name in ("a11", "a12", "a21", "a22"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidInputError(f"{name} is not finite: {value!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def identity(cls) -> Mat2:
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def diag(cls, d1: float, d2: float) -> Mat2:
        return cls(d1, 0.0, 0.0, d2)

    @classmethod
    def from_array(cls, arr) -> Mat2:
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (2, 2):
            raise InvalidInputError(f"expected shape (2, 2), got {arr.shape}")
        return cls(arr[0, 0], arr[0, 1], arr[1, 0], arr[1, 1])

    def to_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    def to_list(self) -> list[list[float]]:
        return [[self.a11, self.a12], [self.a21, self.a22]]

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    @property
    def frobenius_sq(self) -> float:
        return self.a11**2 + self.a12**2 + self.a21**2 + self.a22**2

    def is_sl2(self, tol: float = SL2_TOL) -> bool:
        return abs(self.det - 1.0) <= tol * max(1.0, self.frobenius_sq)

    def __matmul__(self, other: Mat2) -> Mat2:
        if not isinstance(other, Mat2):
            return NotImplemented
        return Mat2(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def __add__(self, other: Mat2) -> Mat2:
        if not isinstance(other, Mat2):
            return NotImplemented
        return Mat2(self.a11 + other.a11, self.a12 + other.a12,
                    self.a21 + other.a21, self.a22 + other.a22)

    def __sub__(self, other: Mat2) -> Mat2:
        if not isinstance(other, Mat2):
            return NotImplemented
        return Mat2(self.a11 - other.a11, self.a12 - other.a12,
                    self.a21 - other.a21, self.a22 - other.a22)

    def __mul__(self, scalar: float) -> Mat2:
        if isinstance(scalar, Mat2):
            return NotImplemented
        s = float(scalar)
        return Mat2(s * self.a11, s * self.a12, s * self.a21, s * self.a22)

    __rmul__ = __mul__

    def __neg__(self) -> Mat2:
        return self * -1.0

    def apply(self, v: tuple[float, float]) -> tuple[float, float]:
        x, y = v
        return (self.a11 * x + self.a12 * y, self.a21 * x + self.a22 * y)


def spectral_norm(m: Mat2) -> float:
    """Largest singular value of `m`.

    Uses ``sqrt((f + sqrt(f^2 - 4 det^2)) / 2)`` with ``f`` the squared
    Frobenius norm, evaluated in the cancellation-free form
    ``(hypot(a11 + a22, a12 - a21) + hypot(a11 - a22, a12 + a21)) / 2``.
    """
    if not isinstance(m, Mat2):
        m = Mat2.from_array(m)
    return 0.5 * (math.hypot(m.a11 + m.a22, m.a12 - m.a21)
                  + math.hypot(m.a11 - m.a22, m.a12 + m.a21))


def inverse(m: Mat2) -> Mat2:
    det = m.det
    if not abs(det) > _SINGULAR_DET:
        raise SingularMatrixError(f"matrix is numerically singular (det={det!r})")
    if det == 1.0:
        return Mat2(m.a22, -m.a12, -m.a21, m.a11)
    inv = 1.0 / det
    return Mat2(m.a22 * inv, -m.a12 * inv, -m.a21 * inv, m.a11 * inv)


def condition(m: Mat2) -> float:
    """``||m|| * ||m^-1||``, which for 2x2 matrices is ``||m||^2 / |det m|``."""
    det = abs(m.det)
    if not det > _SINGULAR_DET:
        raise SingularMatrixError(f"matrix is numerically singular (det={det!r})")
    return spectral_norm(m) ** 2 / det


# -- batched kernels on (..., 2, 2) arrays ---------------------------------

def spectral_norm_batch(mats: np.ndarray) -> np.ndarray:
    mats = np.asarray(mats, dtype=float)
    a, b = mats[..., 0, 0], mats[..., 0, 1]
    c, d = mats[..., 1, 0], mats[..., 1, 1]
    return 0.5 * (np.hypot(a + d, b - c) + np.hypot(a - d, b + c))


def det_batch(mats: np.ndarray) -> np.ndarray:
    mats = np.asarray(mats, dtype=float)
    return mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]


def condition_batch(mats: np.ndarray) -> np.ndarray:
    return spectral_norm_batch(mats) ** 2 / np.abs(det_batch(mats))
