"""Half-line reduction of the exterior Robin problem.

Test functions depending only on the distance to the boundary turn the
Rayleigh quotient into

    (int_0^inf |psi'|^2 w dt + alpha w(0) |psi(0)|^2) / int_0^inf |psi|^2 w dt

with a polynomial weight ``w``: ``L + 2 pi N t`` for N planar components of
total perimeter L, or the Steiner-type polynomial of a convex body.  The
infimum is an upper bound for the exterior eigenvalue, and it is exact for
balls.

The discretisation uses continuous piecewise-linear elements on a graded mesh
of ``[0, T]`` with a Dirichlet condition at ``T``.  All element integrals of
the polynomial weight are computed exactly by Gauss-Legendre quadrature, so
the discrete value is a genuine upper bound of the half-line infimum at every
resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from . import ball
from .errors import DomainError, InequalityViolation
from .geometry import (AxisymBody, MultiCurve2D, SteinerPolynomial, axisym_curvatures,
                       equivalent_ball_radius, steiner_polynomial)

ESSENTIAL_TOL = 1e-12
TAIL_FRACTION = 0.1
TAIL_MASS_TOL = 1e-6
DECAY_LENGTHS = 12.0
MAX_GRADING = 1.2
T_MAX = 1e12
MAX_T_PASSES = 20


@dataclass(frozen=True)
class EffectiveWeight:
    """Polynomial weight ``w(t) = sum coeffs[j] t**j``, positive on ``[0, inf)``."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        object.__setattr__(self, "coeffs", c)
        if not c or c[0] <= 0:
            raise DomainError("weight must satisfy w(0) > 0")
        if c[-1] < 0:
            raise DomainError("weight must stay positive on [0, inf)")
        roots = np.roots(c[::-1]) if len(c) > 1 else np.array([])
        if np.any((np.abs(roots.imag) < 1e-12) & (roots.real >= 0)):
            raise DomainError("weight has a non-negative real root")

    @property
    def w0(self) -> float:
        return self.coeffs[0]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def log_slope(self) -> float:
        """``w'(0)/w(0)``: equals ``(d-1)`` times the mean curvature for ball weights."""
        return self.coeffs[1] / self.coeffs[0] if len(self.coeffs) > 1 else 0.0

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(t, self.coeffs)

    def rescaled(self, sigma):
        """Weight ``t -> w(sigma t)``."""
        return EffectiveWeight(tuple(c * sigma ** j for j, c in enumerate(self.coeffs)))

    def normalized(self):
        return EffectiveWeight(tuple(c / self.w0 for c in self.coeffs))


@dataclass(frozen=True)
class TruncationConfig:
    """Mesh controls.  ``T=None`` and ``grading=None`` select them automatically."""

    T: float | None = None
    n: int = 400
    grading: float | None = None
    richardson: bool = True
    auto_T: bool = True
    rtol: float = 1e-5

    def __post_init__(self):
        if self.T is not None and not self.T > 0:
            raise DomainError("T must be positive")
        if self.n < 16:
            raise DomainError("n must be >= 16")
        if self.grading is not None and not (1.0 <= self.grading <= MAX_GRADING):
            raise DomainError(f"grading must lie in [1, {MAX_GRADING}]")


@dataclass(frozen=True)
class SpectralResult:
    eigenvalue: float          # Richardson value when enabled, else the discrete minimum
    residual: float            # Richardson error estimate, or the eigen-residual without it
    converged: bool
    T_used: float
    n_used: int
    upper_bound: float         # raw discrete minimum on the finest mesh
    essential_bottom: bool = False
    truncation_warning: bool = False
    mesh: np.ndarray = field(default=None, repr=False)
    vector: np.ndarray = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# weights


def weight_from_multicurve(mc: MultiCurve2D) -> EffectiveWeight:
    """``w(t) = L + 2 pi N t`` bounding the length of the level sets of the distance."""
    return EffectiveWeight((mc.total_perimeter, 2.0 * math.pi * len(mc)))


def weight_from_steiner(p: SteinerPolynomial) -> EffectiveWeight:
    return EffectiveWeight(tuple(p.coeffs))


def ball_weight(d: int, R: float) -> EffectiveWeight:
    """Normalised weight ``(1 + t/R)**(d-1)`` of the exterior of B_R."""
    return EffectiveWeight(SteinerPolynomial.for_ball(d, R).coeffs)


# ---------------------------------------------------------------------------
# mesh and assembly


def graded_mesh(T, n, h0=None, grading=None):
    """Nodes ``0 = t_0 < ... < t_n = T`` with cell sizes ``h0 * r**i``.

    Given ``grading`` the first cell follows from ``T``; otherwise ``r`` is
    solved for so the first cell is ``h0``, clamped to ``[1, MAX_GRADING]``.
    """
    if grading is None:
        if h0 is None or h0 * n >= T:
            r = 1.0
        else:
            def excess(r):
                return h0 * math.expm1(n * math.log(r)) / (r - 1.0) - T
            r = MAX_GRADING if excess(MAX_GRADING) < 0 else brentq(excess, 1.0 + 1e-12, MAX_GRADING, xtol=1e-14)
    else:
        r = grading
    if r == 1.0:
        return np.linspace(0.0, T, n + 1)
    sizes = r ** np.arange(n)
    t = np.concatenate([[0.0], np.cumsum(sizes)])
    return t * (T / t[-1])


def refine(mesh):
    """Split every cell in two (nested trial space)."""
    mid = 0.5 * (mesh[:-1] + mesh[1:])
    out = np.empty(2 * mesh.size - 1)
    out[0::2] = mesh
    out[1::2] = mid
    return out


def assemble(w: EffectiveWeight, alpha: float, mesh):
    """Tridiagonal stiffness/mass pair on ``mesh`` with Dirichlet at the last node.

    Returns ``(a_diag, a_off, b_diag, b_off)`` for the free nodes 0..n-1.
    """
    h = np.diff(mesh)
    npts = w.degree // 2 + 2
    x, gw = np.polynomial.legendre.leggauss(npts)
    xi = 0.5 * (x + 1.0)                     # reference cell [0, 1]
    tq = mesh[:-1, None] + h[:, None] * xi   # (cells, npts)
    wq = w(tq) * (0.5 * gw) * h[:, None]     # weight times quadrature measure
    int_w = wq.sum(axis=1)
    m00 = (wq * (1 - xi) ** 2).sum(axis=1)
    m01 = (wq * (1 - xi) * xi).sum(axis=1)
    m11 = (wq * xi ** 2).sum(axis=1)
    k = int_w / h ** 2
    n = mesh.size - 1
    a_diag = np.zeros(n + 1)
    b_diag = np.zeros(n + 1)
    a_diag[:-1] += k
    a_diag[1:] += k
    b_diag[:-1] += m00
    b_diag[1:] += m11
    a_off = -k
    b_off = m01
    a_diag[0] += alpha * w.w0
    if np.any(b_diag[:-1] <= 0):
        raise DomainError("mass matrix is not positive: invalid weight")
    return a_diag[:-1], a_off[:-1], b_diag[:-1], b_off[:-1]


def _sturm_count(lam, a_diag, a_off, b_diag, b_off):
    """Number of generalized eigenvalues below ``lam`` (negative LDL^T pivots)."""
    dd = a_diag - lam * b_diag
    ee = (a_off - lam * b_off) ** 2
    count = 0
    piv = dd[0]
    tiny = 1e-300
    if piv < 0:
        count += 1
    for i in range(1, dd.size):
        if piv == 0.0:
            piv = tiny
        piv = dd[i] - ee[i - 1] / piv
        if piv < 0:
            count += 1
    return count


def smallest_eigenvalue(a_diag, a_off, b_diag, b_off, lower=None):
    """Smallest generalized eigenvalue of a tridiagonal pair by Sturm bisection."""
    lo = -1.0 if lower is None else lower
    while _sturm_count(lo, a_diag, a_off, b_diag, b_off) > 0:
        lo = 2.0 * lo - 1.0
    hi = 1.0
    while _sturm_count(hi, a_diag, a_off, b_diag, b_off) == 0:
        hi = 2.0 * hi + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi or hi - lo <= 2e-16 * max(abs(lo), abs(hi)):
            break
        if _sturm_count(mid, a_diag, a_off, b_diag, b_off) == 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _eigenvector(lam, a_diag, a_off, b_diag, b_off):
    n = a_diag.size
    shift = lam - 1e-10 * max(1.0, abs(lam))
    ab = np.zeros((3, n))
    ab[0, 1:] = a_off - shift * b_off
    ab[1] = a_diag - shift * b_diag
    ab[2, :-1] = a_off - shift * b_off
    v = np.ones(n)
    for _ in range(3):
        v = solve_banded((1, 1), ab, _tri_matvec(b_diag, b_off, v))
        v /= np.sqrt(v @ _tri_matvec(b_diag, b_off, v))
    if v[0] < 0:
        v = -v
    return v


def _tri_matvec(diag, off, v):
    out = diag * v
    out[:-1] += off * v[1:]
    out[1:] += off * v[:-1]
    return out


def _solve_on_mesh(w, alpha, mesh):
    pair = assemble(w, alpha, mesh)
    # a non-decreasing weight gives the trace bound lambda >= -alpha^2
    lower = -alpha * alpha * (1.0 + 1e-9) - 1e-12 if all(c >= 0 for c in w.coeffs) else None
    lam = smallest_eigenvalue(*pair, lower=lower)
    return lam, pair


# ---------------------------------------------------------------------------
# solver


def _boundary_scale(w, alpha, k):
    scales = [1.0 / abs(alpha) if alpha else math.inf,
              1.0 / w.log_slope if w.log_slope > 0 else math.inf,
              1.0 / k if k > 0 else math.inf]
    s = min(scales)
    return s if math.isfinite(s) else 1.0


def _initial_T(w, alpha):
    pred = -alpha * alpha - alpha * w.log_slope
    k = math.sqrt(-pred) if pred < 0 else 0.1 * abs(alpha)
    return DECAY_LENGTHS / max(k, 1e-6)


def min_rayleigh(w: EffectiveWeight, alpha: float, cfg: TruncationConfig = TruncationConfig()) -> SpectralResult:
    """Minimise the weighted half-line Rayleigh quotient.

    With ``cfg.auto_T`` the truncation length grows until it covers
    ``DECAY_LENGTHS`` decay lengths of the computed eigenfunction and the
    eigenfunction mass in the last tenth of ``[0, T]`` is below 1e-6.
    """
    if alpha > 0:
        raise DomainError(f"coupling must be <= 0, got {alpha!r}")
    T = cfg.T if cfg.T is not None else _initial_T(w, alpha)
    k_est = 0.0
    for _ in range(MAX_T_PASSES):
        h0 = _boundary_scale(w, alpha, k_est) / 16.0
        mesh = graded_mesh(T, cfg.n, h0=h0, grading=cfg.grading)
        lam, pair = _solve_on_mesh(w, alpha, mesh)
        if not cfg.auto_T or T >= T_MAX:
            break
        if lam >= -ESSENTIAL_TOL:
            # a positive value may only reflect a too-short interval (slow 2D decay)
            if lam <= ESSENTIAL_TOL:
                break
            T = min(10.0 * T, T_MAX)
            continue
        k_est = math.sqrt(-lam)
        T_needed = DECAY_LENGTHS / k_est
        tail = _tail_mass(mesh, _eigenvector(lam, *pair), pair)
        if T_needed <= T <= 2.0 * T_needed and tail <= TAIL_MASS_TOL:
            break
        T = 1.25 * T_needed if tail <= TAIL_MASS_TOL else max(1.25 * T_needed, 2.0 * T)
        T = min(T, T_MAX)

    if cfg.richardson:
        # three nested levels; the error of the extrapolated value is estimated
        # by the change between the two Richardson values
        levels = [lam]
        for _ in range(2):
            mesh = refine(mesh)
            lam, pair = _solve_on_mesh(w, alpha, mesh)
            levels.append(lam)
        r1 = (4.0 * levels[1] - levels[0]) / 3.0
        r2 = (4.0 * levels[2] - levels[1]) / 3.0
        value = r2
        err = abs(r2 - r1)
    else:
        value = lam
        err = 0.0
    upper = lam
    vec = _eigenvector(lam, *pair)
    resid = _residual(lam, vec, pair)
    tail = _tail_mass(mesh, vec, pair)
    warn = lam < -ESSENTIAL_TOL and tail > TAIL_MASS_TOL
    if cfg.richardson:
        residual = err
    else:
        residual = resid
    if upper >= -ESSENTIAL_TOL:
        return SpectralResult(0.0, residual, True, float(T), mesh.size - 1, upper, True, False, mesh,
                              np.append(vec, 0.0))
    converged = (not warn) and (residual <= cfg.rtol * abs(value) or not cfg.richardson)
    return SpectralResult(float(value), float(residual), bool(converged), float(T), mesh.size - 1,
                          float(upper), False, bool(warn), mesh, np.append(vec, 0.0))


def _residual(lam, vec, pair):
    a_diag, a_off, b_diag, b_off = pair
    r = _tri_matvec(a_diag, a_off, vec) - lam * _tri_matvec(b_diag, b_off, vec)
    return float(np.linalg.norm(r) / np.linalg.norm(_tri_matvec(b_diag, b_off, vec)))


def _tail_mass(mesh, vec, pair):
    b_diag, b_off = pair[2], pair[3]
    bv = vec * _tri_matvec(b_diag, b_off, vec)
    total = bv.sum()
    tail = bv[mesh[:-1] >= (1.0 - TAIL_FRACTION) * mesh[-1]].sum()
    return float(abs(tail) / total)


# ---------------------------------------------------------------------------
# theorem-level bounds


def bound_thm1(mc: MultiCurve2D, alpha: float) -> float:
    """Upper bound for the exterior eigenvalue of a planar union of N simply connected sets.

    Equals the disk eigenvalue for the radius whose perimeter is the average
    perimeter ``L/N``.
    """
    if not alpha < 0:
        raise DomainError(f"coupling must be negative, got {alpha!r}")
    c = mc.total_perimeter / len(mc)
    return ball.solve(2, c / (2.0 * math.pi), alpha).lambda1


@dataclass(frozen=True)
class Theorem2Report:
    alpha: float
    M_total: float
    R: float
    ball_value: float
    steiner_value: float
    steiner_result: SpectralResult = field(repr=False)

    @property
    def margin(self) -> float:
        return self.ball_value - self.steiner_value


def theorem2_chain(body: AxisymBody, alpha: float, cfg: TruncationConfig = TruncationConfig()) -> Theorem2Report:
    """Ball value for the matched ``M_total`` and the Steiner-weight infimum for the body."""
    if not alpha < 0:
        raise DomainError(f"coupling must be negative, got {alpha!r}")
    rep = axisym_curvatures(body)
    R = equivalent_ball_radius(rep)
    ball_value = ball.solve(body.d, R, alpha).lambda1
    res = min_rayleigh(weight_from_steiner(steiner_polynomial(body, rep)), alpha, cfg)
    return Theorem2Report(alpha, rep.M_total, R, ball_value, res.eigenvalue, res)


def bound_thm2(body: AxisymBody, alpha: float, cfg: TruncationConfig = TruncationConfig(), tol: float = 1e-6) -> float:
    """Ball eigenvalue at matched ``M_total``, after checking the Steiner-weight chain.

    Raises :class:`InequalityViolation` if the Steiner-weight infimum exceeds
    the ball value by more than ``tol``.
    """
    rep = theorem2_chain(body, alpha, cfg)
    if rep.steiner_value > rep.ball_value + tol:
        raise InequalityViolation(
            f"Steiner-weight value {rep.steiner_value:.12g} exceeds ball value {rep.ball_value:.12g}")
    return rep.ball_value
