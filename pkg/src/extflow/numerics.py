"""Self-contained numerical kernels.

Adaptive Gauss-Kronrod quadrature (finite and semi-infinite, complex
integrands), an embedded Runge-Kutta 5(4) initial-value solver with dense
output, a scaling-and-squaring matrix exponential, largest-singular-value
estimation by power iteration, a partial-pivoting linear solve, and a
bracketed root finder.

Matrices and vectors are plain numpy arrays (dense, complex). Integrands
and vector fields are called with numpy arrays / complex state vectors and
must be re-entrant; everything here is pure, so concurrent use is safe.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NoConvergence,
    NoSignChange,
    Overflow,
    SingularMatrix,
    StepUnderflow,
)

# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

# 15-point Kronrod nodes on [-1, 1]; the odd-index nodes form the embedded
# 7-point Gauss rule.
_XK = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
])


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float
    evaluations: int


def _gk_panel(f, a: float, b: float):
    """Return (kronrod, |kronrod - gauss|) for one panel."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    y = np.asarray(f(c + h * _XK), dtype=complex)
    k = h * np.sum(_WK * y)
    g = h * np.sum(_WG * y[1::2])
    return k, abs(k - g)


def quad_finite(f, a: float, b: float, tol: float = 1e-10, max_panels: int = 10**4) -> QuadratureResult:
    """Integrate ``f`` over [a, b] by adaptive bisection of a Gauss-Kronrod rule.

    ``f`` is called with a numpy array of nodes and must return values
    elementwise. The error estimate sums per-panel Kronrod/Gauss deviations.
    Raises NoConvergence when ``max_panels`` panels do not reach ``tol``.
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    val, err = _gk_panel(f, a, b)
    heap = [(-err, 0, a, b, val, err)]
    count = 1
    total_err = err
    while total_err > tol:
        if count >= max_panels:
            raise NoConvergence(
                f"quad_finite: {count} panels, error {total_err:.3e} > tol {tol:.3e}"
            )
        _, _, pa, pb, pval, perr = heapq.heappop(heap)
        mid = 0.5 * (pa + pb)
        v1, e1 = _gk_panel(f, pa, mid)
        v2, e2 = _gk_panel(f, mid, pb)
        count += 1
        total_err += e1 + e2 - perr
        heapq.heappush(heap, (-e1, 2 * count, pa, mid, v1, e1))
        heapq.heappush(heap, (-e2, 2 * count + 1, mid, pb, v2, e2))
        if mid <= pa or mid >= pb:
            raise NoConvergence("quad_finite: panel width underflow")
    value = sum(item[4] for item in heap)
    return QuadratureResult(value, total_err, 15 * count)


def quad_semiinf(f, tol: float = 1e-10, decay_hint: float = 1.0,
                 max_panels: int = 10**4) -> QuadratureResult:
    """Integrate ``f`` over [0, inf) assuming decay at least exp(-decay_hint*x).

    Truncates at X = 50/decay_hint; the truncation tail estimate
    |f(X)|/decay_hint is folded into the error.
    """
    if decay_hint <= 0:
        raise ValueError("decay_hint must be positive")
    cutoff = 50.0 / decay_hint
    res = quad_finite(f, 0.0, cutoff, tol, max_panels)
    tail = abs(complex(np.asarray(f(np.array([cutoff])), dtype=complex)[0])) / decay_hint
    return QuadratureResult(res.value, res.error_estimate + tail, res.evaluations + 1)


# ---------------------------------------------------------------------------
# initial value solver: Dormand-Prince 5(4) with cubic Hermite dense output
# ---------------------------------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_ERR = np.array([
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
])


class OdeSolution:
    """Accepted solver nodes plus cubic Hermite interpolation between them.

    Nodes are stored in ascending x; ``y_end`` is the state at the endpoint
    the integration was driven to (the smallest x for backward runs).
    """

    def __init__(self, xs, ys, fs, forward: bool = True):
        order = np.argsort(xs)
        self.xs = np.asarray(xs)[order]
        self.ys = np.asarray(ys)[order]
        self.fs = np.asarray(fs)[order]
        self.forward = forward

    @property
    def y_end(self):
        return self.ys[-1] if self.forward else self.ys[0]

    def __call__(self, x):
        """Evaluate the interpolant; scalar or array ``x`` inside the span."""
        xq = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.clip(np.searchsorted(self.xs, xq) - 1, 0, len(self.xs) - 2)
        x0 = self.xs[idx]
        x1 = self.xs[idx + 1]
        h = x1 - x0
        s = (xq - x0) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        out = (
            h00[:, None] * self.ys[idx]
            + (h * h10)[:, None] * self.fs[idx]
            + h01[:, None] * self.ys[idx + 1]
            + (h * h11)[:, None] * self.fs[idx + 1]
        )
        return out[0] if np.isscalar(x) or np.asarray(x).ndim == 0 else out


def ode_solve(rhs, x0: float, y0, x1: float, tol: float = 1e-9,
              max_step: float | None = None, max_steps: int = 10**6) -> OdeSolution:
    """Dormand-Prince 5(4) with adaptive steps; integrates x0 -> x1 (either order).

    ``rhs(x, y)`` takes a complex state vector and returns its derivative.
    Per-step error is controlled against tol*(1+|y|). ``max_step`` bounds the
    step size, which also bounds the dense-output interpolation error.
    """
    y = np.atleast_1d(np.asarray(y0, dtype=complex))
    if x1 == x0:
        f0 = np.asarray(rhs(x0, y), dtype=complex)
        return OdeSolution(np.array([x0]), y[None, :], f0[None, :], forward=True)
    direction = 1.0 if x1 > x0 else -1.0
    span = abs(x1 - x0)
    h = direction * min(span / 10.0, max_step if max_step else span / 10.0)
    x = x0
    f = np.asarray(rhs(x, y), dtype=complex)
    xs, ys, fs = [x], [y.copy()], [f.copy()]
    k = np.empty((7, y.size), dtype=complex)
    steps = 0
    while (x1 - x) * direction > 0:
        if steps > max_steps:
            raise StepUnderflow(f"ode_solve: step budget exhausted at x={x}")
        if abs(h) < 16 * np.finfo(float).eps * max(1.0, abs(x)):
            raise StepUnderflow(f"ode_solve: step underflow at x={x}")
        if (x + h - x1) * direction > 0:
            h = x1 - x
        k[0] = f
        for i in range(1, 7):
            yi = y + h * (_DP_A[i][None, :] @ k[:i])[0]
            k[i] = rhs(x + _DP_C[i] * h, yi)
        ynew = y + h * (_DP_B5 @ k)
        err_vec = h * (_DP_ERR @ k)
        sc = tol * (1.0 + np.maximum(np.abs(y), np.abs(ynew)))
        err = float(np.max(np.abs(err_vec) / sc))
        steps += 1
        if err <= 1.0:
            x = x + h
            y = ynew
            f = k[6] if _DP_C[6] == 1.0 else np.asarray(rhs(x, y), dtype=complex)
            xs.append(x)
            ys.append(y.copy())
            fs.append(f.copy())
            factor = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
        else:
            factor = max(0.2, 0.9 * err ** -0.2)
        h *= factor
        if max_step is not None and abs(h) > max_step:
            h = direction * max_step
    return OdeSolution(np.array(xs), np.array(ys), np.array(fs), forward=direction > 0)


# ---------------------------------------------------------------------------
# dense matrix exponential: degree-13 diagonal Pade with scaling and squaring
# ---------------------------------------------------------------------------

_PADE13 = np.array([
    64764752532480000, 32382376266240000, 7771770303897600, 1187353796428800,
    129060195264000, 10559470521600, 670442572800, 33522128640, 1323241920,
    40840800, 960960, 16380, 182, 1,
], dtype=float)
_THETA13 = 5.371920351148152


def mat_exp(matrix: np.ndarray, scale: complex = 1.0) -> np.ndarray:
    """exp(scale*matrix) for a square dense matrix, backward-stable for
    moderate norms; raises Overflow past the squaring budget."""
    a = np.asarray(matrix, dtype=complex) * scale
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("mat_exp needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("mat_exp: non-finite entries")
    norm1 = float(np.max(np.sum(np.abs(a), axis=0))) if n else 0.0
    squarings = 0
    if norm1 > _THETA13:
        squarings = int(math.ceil(math.log2(norm1 / _THETA13)))
        if squarings > 60:
            raise Overflow(f"mat_exp: norm {norm1:.3e} beyond squaring budget")
        a = a / (2.0 ** squarings)
    ident = np.eye(n, dtype=complex)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    b = _PADE13
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    out = solve_linear(v - u, u + v)
    for _ in range(squarings):
        out = out @ out
    return out


# ---------------------------------------------------------------------------
# operator norm (largest singular value) by power iteration
# ---------------------------------------------------------------------------

def operator_norm(matrix: np.ndarray, tol: float = 1e-10, max_iter: int = 1000,
                  seed: int = 0) -> float:
    """Largest singular value via power iteration on M*M (matvec form only).

    Deterministic for a fixed seed; restarts from a fresh random vector on
    stagnation and returns the best estimate found.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.size == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    best = 0.0
    per_attempt = max(50, max_iter // 4)
    for _ in range(4):  # initial run plus up to three random restarts
        v = rng.standard_normal(m.shape[1]) + 1j * rng.standard_normal(m.shape[1])
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            continue
        v /= nv
        sigma = 0.0
        sigma_prev = -1.0
        for _ in range(per_attempt):
            w = m @ v
            sigma = float(np.linalg.norm(w))
            if sigma == 0.0:
                return best
            u = m.conj().T @ w
            nu_ = float(np.linalg.norm(u))
            if nu_ == 0.0:
                return max(best, sigma)
            v = u / nu_
            if abs(sigma - sigma_prev) <= tol * max(sigma, 1e-300):
                return max(best, sigma)
            sigma_prev = sigma
        best = max(best, sigma)  # stagnated: keep the estimate, restart
    return best


# ---------------------------------------------------------------------------
# linear solve: partial-pivoting elimination
# ---------------------------------------------------------------------------

def solve_linear(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve A x = b (vector or matrix rhs) by LU with partial pivoting.

    Raises SingularMatrix when a pivot falls below 1e-13 * max|A|.
    """
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("solve_linear needs a square matrix")
    b = np.array(rhs, dtype=complex)
    vector_rhs = b.ndim == 1
    if vector_rhs:
        b = b[:, None]
    scale = float(np.max(np.abs(a))) if n else 0.0
    pivot_tol = 1e-13 * max(scale, 1e-300)
    for col in range(n):
        p = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[p, col]) <= pivot_tol:
            raise SingularMatrix(f"pivot {abs(a[p, col]):.3e} at column {col}")
        if p != col:
            a[[col, p]] = a[[p, col]]
            b[[col, p]] = b[[p, col]]
        factors = a[col + 1:, col] / a[col, col]
        a[col + 1:, col + 1:] -= np.outer(factors, a[col, col + 1:])
        b[col + 1:] -= np.outer(factors, b[col])
    x = np.zeros_like(b)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x[:, 0] if vector_rhs else x


# ---------------------------------------------------------------------------
# bracketed root finding
# ---------------------------------------------------------------------------

def find_root(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Secant/bisection hybrid on a sign-changing bracket; returns the root
    once the bracket width drops below ``tol``."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    fa = f(lo)
    fb = f(hi)
    if fa == 0.0:
        return lo
    if fb == 0.0:
        return hi
    if (fa > 0) == (fb > 0):
        raise NoSignChange(f"f({lo})={fa:.3e} and f({hi})={fb:.3e} have equal sign")
    a, b = lo, hi
    for _ in range(max_iter):
        if b - a <= tol:
            return 0.5 * (a + b)
        mid = 0.5 * (a + b)
        x = mid
        if fb != fa:
            secant = b - fb * (b - a) / (fb - fa)
            # accept the secant point only when safely interior
            if a + 0.01 * (b - a) < secant < b - 0.01 * (b - a):
                x = secant
        fx = f(x)
        if fx == 0.0:
            return x
        if (fx > 0) == (fa > 0):
            a, fa = x, fx
        else:
            b, fb = x, fx
    return 0.5 * (a + b)
