"""Linear-fractional self-maps of the closed unit disk.

Maps are stored with determinant normalized to 1 (principal square root);
two coefficient quadruples describe the same map when they agree up to a
global sign, and comparisons here are projective. The extended plane is
modeled with the INFINITY constant.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .affine import ALL_POINTS
from .errors import DegenerateMap, NotDiskMap

INFINITY = complex(math.inf, 0.0)


def is_infinite(z) -> bool:
    return not (math.isfinite(z.real) and math.isfinite(z.imag))


@dataclass(frozen=True)
class LinearFractionalMap:
    """z -> (a z + b)/(c z + d), stored with a d - b c = 1."""

    a: complex
    b: complex
    c: complex
    d: complex


IDENTITY_MAP = LinearFractionalMap(1.0 + 0j, 0j, 0j, 1.0 + 0j)


def from_coefficients(a, b, c, d) -> LinearFractionalMap:
    """Normalize coefficients to determinant one; reject degenerate input."""
    a, b, c, d = complex(a), complex(b), complex(c), complex(d)
    det = a * d - b * c
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if scale == 0.0 or abs(det) <= 1e-14 * scale * scale:
        raise DegenerateMap(f"determinant {det} vanishes relative to coefficients")
    root = cmath.sqrt(det)
    return LinearFractionalMap(a / root, b / root, c / root, d / root)


def rotation(theta: float) -> LinearFractionalMap:
    """z -> e^{i theta} z."""
    return from_coefficients(cmath.exp(1j * theta), 0, 0, 1)


def disk_automorphism(w: complex, theta: float = 0.0) -> LinearFractionalMap:
    """z -> e^{i theta} (z - w)/(1 - conj(w) z), |w| < 1."""
    if abs(w) >= 1:
        raise ValueError("automorphism parameter must lie inside the disk")
    phase = cmath.exp(1j * theta)
    return from_coefficients(phase, -phase * w, -w.conjugate(), 1)


def apply(m: LinearFractionalMap, z) -> complex:
    """Evaluate with the projective conventions at the pole and at infinity."""
    if isinstance(z, complex) and is_infinite(z):
        if abs(m.c) == 0.0:
            return INFINITY
        return m.a / m.c
    num = m.a * z + m.b
    den = m.c * z + m.d
    if den == 0:
        return INFINITY
    return num / den


def compose(m: LinearFractionalMap, n: LinearFractionalMap) -> LinearFractionalMap:
    """apply(compose(m, n), z) = apply(m, apply(n, z))."""
    return from_coefficients(
        m.a * n.a + m.b * n.c,
        m.a * n.b + m.b * n.d,
        m.c * n.a + m.d * n.c,
        m.c * n.b + m.d * n.d,
    )


def inverse(m: LinearFractionalMap) -> LinearFractionalMap:
    return LinearFractionalMap(m.d, -m.b, -m.c, m.a)


def projective_distance(m: LinearFractionalMap, n: LinearFractionalMap) -> float:
    """max coefficient deviation, minimized over the global sign."""
    diff = max(abs(m.a - n.a), abs(m.b - n.b), abs(m.c - n.c), abs(m.d - n.d))
    summ = max(abs(m.a + n.a), abs(m.b + n.b), abs(m.c + n.c), abs(m.d + n.d))
    return min(diff, summ)


def trace_squared(m: LinearFractionalMap) -> complex:
    """(a + d)^2 for the determinant-one representative (sign-independent)."""
    return (m.a + m.d) ** 2


def fixed_points(m: LinearFractionalMap, identity_tol: float = 1e-13,
                 parabolic_tol: float = 1e-12):
    """Solutions of m(z) = z in the extended plane.

    Returns ALL_POINTS for the identity, else a list of one or two points
    (INFINITY included when c = 0); a double root is reported once. A
    discriminant below ``parabolic_tol`` relative to its scale counts as a
    double root; callers with coefficients of limited accuracy should pass
    a matching tolerance.
    """
    if projective_distance(m, IDENTITY_MAP) <= identity_tol:
        return ALL_POINTS
    scale = max(abs(m.a), abs(m.b), abs(m.c), abs(m.d))
    bq = m.d - m.a                      # quadratic c z^2 + (d - a) z - b = 0
    if abs(m.c) <= 1e-14 * scale:
        if abs(bq) <= 1e-14 * scale:
            return [INFINITY]           # translation type: z + b/d
        return [m.b / bq, INFINITY]
    disc = bq * bq + 4 * m.c * m.b
    disc_scale = max(abs(bq) ** 2, 4 * abs(m.c) * abs(m.b), 1e-300)
    if abs(disc) <= parabolic_tol * disc_scale:
        return [-bq / (2 * m.c)]
    root = cmath.sqrt(disc)
    # pick the sign that avoids cancellation, recover the mate via Vieta
    if (bq.conjugate() * root).real >= 0:
        q = -(bq + root) / 2
    else:
        q = -(bq - root) / 2
    z1 = q / m.c
    z2 = (-m.b) / q if abs(q) > 0 else -bq / m.c
    return [z1, z2]


def is_disk_self_map(m: LinearFractionalMap, tol: float = 1e-9) -> bool:
    """True iff 64 boundary samples and the center land in the closed disk
    (within tol)."""
    theta = np.linspace(0.0, 2 * math.pi, 64, endpoint=False)
    z = np.exp(1j * theta)
    den = m.c * z + m.d
    if np.any(np.abs(den) == 0.0):
        return False
    if np.max(np.abs((m.a * z + m.b) / den)) > 1.0 + tol:
        return False
    center = apply(m, 0j)
    return not is_infinite(center) and abs(center) <= 1.0 + tol


class MapTag(Enum):
    IDENTITY = "identity"
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"
    STRICT_CONTRACTION = "strict-contraction"


@dataclass(frozen=True)
class MapClass:
    tag: MapTag
    fixed_points: object          # list of in-disk points, or ALL_POINTS
    companion: complex | None = None   # partner fixed point outside the disk


def _boundary_max(m: LinearFractionalMap) -> float:
    theta = np.linspace(0.0, 2 * math.pi, 64, endpoint=False)
    z = np.exp(1j * theta)
    return float(np.max(np.abs((m.a * z + m.b) / (m.c * z + m.d))))


def classify(m: LinearFractionalMap, eps_class: float = 1e-9) -> MapClass:
    """Classification of a disk self-map by its fixed-point configuration.

    Near the parabolic boundary (discriminant below eps_class relative to
    its scale) the tie-break is Parabolic. Raises NotDiskMap when the disk
    is not preserved within max(eps_class, 1e-9).
    """
    if not is_disk_self_map(m, tol=max(eps_class, 1e-9)):
        raise NotDiskMap("map does not take the closed disk into itself")
    if projective_distance(m, IDENTITY_MAP) <= eps_class:
        return MapClass(MapTag.IDENTITY, ALL_POINTS)
    if _boundary_max(m) < 1.0 - eps_class:
        fps = fixed_points(m)
        inside = [z for z in fps if not is_infinite(z) and abs(z) < 1.0]
        outside = [z for z in fps if z not in inside]
        return MapClass(MapTag.STRICT_CONTRACTION, inside,
                        outside[0] if outside else None)
    scale = max(abs(m.a), abs(m.b), abs(m.c), abs(m.d))
    bq = m.d - m.a
    if abs(m.c) > 1e-14 * scale:
        disc = bq * bq + 4 * m.c * m.b
        disc_scale = max(abs(bq) ** 2, 4 * abs(m.c) * abs(m.b), 1e-300)
        if abs(disc) <= eps_class * disc_scale:
            return MapClass(MapTag.PARABOLIC, [-bq / (2 * m.c)])
    fps = fixed_points(m)
    if fps is ALL_POINTS:
        return MapClass(MapTag.IDENTITY, ALL_POINTS)
    finite = [z for z in fps if not is_infinite(z)]
    in_disk = [z for z in fps if not is_infinite(z) and abs(z) <= 1.0 + eps_class]
    if len(fps) == 1:
        z = fps[0]
        if is_infinite(z) or abs(abs(z) - 1.0) > eps_class:
            # double fixed point off the circle cannot preserve the disk;
            # reachable only through numerical degeneracy
            return MapClass(MapTag.PARABOLIC, in_disk)
        return MapClass(MapTag.PARABOLIC, [z])
    on_circle = [z for z in in_disk if abs(abs(z) - 1.0) <= eps_class]
    interior = [z for z in in_disk if abs(z) < 1.0 - eps_class]
    if len(on_circle) == 2:
        return MapClass(MapTag.HYPERBOLIC, on_circle)
    if len(interior) >= 1:
        companion = next((z for z in fps if z not in interior), None)
        return MapClass(MapTag.ELLIPTIC, [interior[0]], companion)
    # leftover configurations (one boundary point, mate outside) are
    # hyperbolic-type contractions; not reachable for circle-preserving maps
    return MapClass(MapTag.HYPERBOLIC, in_disk, finite[0] if finite else None)


def iterate(m: LinearFractionalMap, z0: complex, n: int) -> list[complex]:
    """[z0, m(z0), ..., m^n(z0)]."""
    if n < 1:
        raise ValueError("need n >= 1")
    orbit = [complex(z0)]
    for _ in range(n):
        orbit.append(apply(m, orbit[-1]))
    return orbit
