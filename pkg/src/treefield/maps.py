"""Symbolic descriptors for the scalar maps applied to distances.

Each variant carries exactly the data its fast cross-term multiplier needs;
``evaluate`` is the shared element-wise reference evaluation used by dense
paths, leaves and oracles. Descriptors are frozen and hashable so they can
key multiplier caches.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import PreconditionError

__all__ = [
    "Polynomial",
    "Exponential",
    "ExpTimesPoly",
    "Trigonometric",
    "Rational",
    "ExpOverLinear",
    "ExpQuadratic",
    "Tabulated",
    "ScalarMap",
    "evaluate",
    "fingerprint",
    "gaussian",
]

MAX_POLY_DEGREE = 16


def _checked_coeffs(coeffs, what="polynomial"):
    tup = tuple(float(c) for c in coeffs)
    if not tup:
        raise PreconditionError(f"{what} needs at least one coefficient")
    if len(tup) - 1 > MAX_POLY_DEGREE:
        raise PreconditionError(
            f"{what} degree {len(tup) - 1} exceeds the supported maximum {MAX_POLY_DEGREE}"
        )
    return tup


def _polyval(coeffs, z):
    """Horner evaluation, coefficients in ascending order."""
    acc = np.full_like(z, coeffs[-1], dtype=np.float64)
    for c in coeffs[-2::-1]:
        acc = acc * z + c
    return acc


@dataclass(frozen=True)
class Polynomial:
    """f(z) = a0 + a1 z + ... + aB z^B, ascending coefficients."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs):
        object.__setattr__(self, "coeffs", _checked_coeffs(coeffs))

    def __call__(self, z):
        return _polyval(self.coeffs, np.asarray(z, dtype=np.float64))


@dataclass(frozen=True)
class Exponential:
    """f(z) = exp(rate * z)."""

    rate: float

    def __call__(self, z):
        return np.exp(self.rate * np.asarray(z, dtype=np.float64))


@dataclass(frozen=True)
class ExpTimesPoly:
    """f(z) = exp(rate * z) * (a0 + a1 z + ...)."""

    rate: float
    coeffs: tuple[float, ...]

    def __init__(self, rate, coeffs):
        object.__setattr__(self, "rate", float(rate))
        object.__setattr__(self, "coeffs", _checked_coeffs(coeffs))

    def __call__(self, z):
        z = np.asarray(z, dtype=np.float64)
        return np.exp(self.rate * z) * _polyval(self.coeffs, z)


@dataclass(frozen=True)
class Trigonometric:
    """f(z) = cos(frequency * z) or sin(frequency * z)."""

    kind: str
    frequency: float = 1.0

    def __post_init__(self):
        if self.kind not in ("cos", "sin"):
            raise PreconditionError(f"trigonometric kind must be cos or sin, got {self.kind!r}")

    def __call__(self, z):
        z = np.asarray(z, dtype=np.float64)
        fn = np.cos if self.kind == "cos" else np.sin
        return fn(self.frequency * z)


@dataclass(frozen=True)
class Rational:
    """f(z) = num(z) / den(z), both in ascending coefficients.

    The denominator must stay away from zero on the distances actually
    used; multiplier builders check this on a grid.
    """

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __init__(self, num, den):
        object.__setattr__(self, "num", _checked_coeffs(num, "numerator"))
        object.__setattr__(self, "den", _checked_coeffs(den, "denominator"))

    def __call__(self, z):
        z = np.asarray(z, dtype=np.float64)
        return _polyval(self.num, z) / _polyval(self.den, z)


@dataclass(frozen=True)
class ExpOverLinear:
    """f(z) = exp(rate * z) / (z + shift)."""

    rate: float
    shift: float

    def __call__(self, z):
        z = np.asarray(z, dtype=np.float64)
        return np.exp(self.rate * z) / (z + self.shift)


@dataclass(frozen=True)
class ExpQuadratic:
    """f(z) = exp(quad * z^2 + lin * z + const)."""

    quad: float
    lin: float
    const: float

    def __call__(self, z):
        z = np.asarray(z, dtype=np.float64)
        return np.exp(self.quad * z * z + self.lin * z + self.const)


@dataclass(frozen=True)
class Tabulated:
    """Arbitrary scalar map given as a vectorizable callable."""

    fn: Callable

    def __call__(self, z):
        return np.asarray(self.fn(np.asarray(z, dtype=np.float64)), dtype=np.float64)


ScalarMap = Union[
    Polynomial,
    Exponential,
    ExpTimesPoly,
    Trigonometric,
    Rational,
    ExpOverLinear,
    ExpQuadratic,
    Tabulated,
]


def evaluate(f: ScalarMap, z):
    """Element-wise reference evaluation of any scalar map."""
    return f(z)


def fingerprint(f: ScalarMap):
    """Hashable identity of a map, used to key multiplier caches."""
    if isinstance(f, Tabulated):
        return ("tabulated", id(f.fn))
    return (type(f).__name__,) + tuple(
        getattr(f, name) for name in f.__dataclass_fields__
    )


def gaussian(sigma: float) -> ExpQuadratic:
    """f(z) = exp(-z^2 / (2 sigma^2)) as an exponentiated quadratic."""
    if sigma <= 0:
        raise PreconditionError("sigma must be positive")
    return ExpQuadratic(quad=-1.0 / (2.0 * sigma * sigma), lin=0.0, const=0.0)
