"""Exact algebra of the orientation-preserving affine maps of the real line,
x -> a*x + b with a > 0, their one-parameter subgroups, and the four
Cayley-type coefficients the extension flow is built from.

All values are immutable and every operation is a pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class _AllPoints:
    """Singleton tag: every point is fixed (the identity map)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ALL_POINTS"


ALL_POINTS = _AllPoints()


@dataclass(frozen=True)
class AffineMap:
    """x -> a*x + b, slope a > 0."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"affine map needs finite a > 0, b; got a={self.a}, b={self.b}")


IDENTITY = AffineMap(1.0, 0.0)


def compose(f: AffineMap, g: AffineMap) -> AffineMap:
    """(f o g)(x) = f(g(x))."""
    return AffineMap(f.a * g.a, f.a * g.b + f.b)


def inverse(g: AffineMap) -> AffineMap:
    return AffineMap(1.0 / g.a, -g.b / g.a)


def apply(g: AffineMap, z):
    """Evaluate the map; accepts real or complex arguments (also arrays)."""
    return g.a * z + g.b


def fixed_point(g: AffineMap):
    """b/(1-a) when a != 1; None when a = 1, b != 0; ALL_POINTS for the identity."""
    if g.a == 1.0:
        return ALL_POINTS if g.b == 0.0 else None
    return g.b / (1.0 - g.a)


@dataclass(frozen=True)
class Translation:
    """g_t(x) = x + speed*t."""

    speed: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.speed) and self.speed != 0.0):
            raise ValueError("translation subgroup needs a nonzero finite speed")


@dataclass(frozen=True)
class Scaling:
    """g_t(x) = base^t (x - center) + center, base > 0 and != 1."""

    base: float = math.e
    center: float = 0.0

    def __post_init__(self):
        if not (self.base > 0 and self.base != 1.0 and math.isfinite(self.base)):
            raise ValueError("scaling subgroup needs base > 0, base != 1")
        if not math.isfinite(self.center):
            raise ValueError("scaling subgroup needs a finite center")


Subgroup = Translation | Scaling


def subgroup_eval(group: Subgroup, t: float) -> AffineMap:
    """The group element at parameter t."""
    if isinstance(group, Translation):
        return AffineMap(1.0, group.speed * t)
    log_base = math.log(group.base)
    slope = math.exp(t * log_base)
    # center*(1 - base^t) via expm1 to avoid cancellation for small t
    return AffineMap(slope, -group.center * math.expm1(t * log_base))


@dataclass(frozen=True)
class FlowCoefficients:
    """alpha = g^{-1}(i)+i, beta = g^{-1}(-i)+i, gamma_c = g^{-1}(i)-i,
    delta = g^{-1}(-i)-i; alpha - gamma_c = 2i and delta - beta = -2i exactly."""

    alpha: complex
    beta: complex
    gamma_c: complex
    delta: complex


def flow_coefficients(g: AffineMap) -> FlowCoefficients:
    ginv = inverse(g)
    at_i = apply(ginv, 1j)
    at_minus_i = apply(ginv, -1j)
    return FlowCoefficients(
        alpha=at_i + 1j,
        beta=at_minus_i + 1j,
        gamma_c=at_i - 1j,
        delta=at_minus_i - 1j,
    )
