"""Boundary geometry: planar Fourier curves and convex bodies of revolution.

Sign convention: curvatures are measured against the outward normal of the
enclosed set, so they are non-negative for convex sets.  Planar curves are
stored counterclockwise; each simple closed curve then has total curvature
``+2 pi``.

Bodies of revolution in R^d are described by a profile
``u in [0, pi] -> (z(u), rho(u))`` with ``z`` a cosine series and ``rho`` a
sine series, rotated about the z-axis.  The series form forces
``rho(0) = rho(pi) = 0`` and an orthogonal crossing of the axis, so the
hypersurface is smooth at the poles.  Its principal curvatures are the
profile curvature (once) and the rotational curvature (``d-2`` times).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np

from .errors import ConvexityError, DomainError, GeometryError
from .specfun import sphere_area

REGULARITY_TOL = 1e-12
CONVEXITY_TOL = 1e-10
SIMPLICITY_POINTS = 512


def _as_coeffs(values):
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise GeometryError("Fourier coefficient lists must be non-empty 1-D sequences")
    return arr


def _pad(*arrays):
    n = max(a.size for a in arrays)
    return [np.pad(a, (0, n - a.size)) for a in arrays]


def _cos_sin_series(cos_c, sin_c, theta, deriv=0):
    """Evaluate sum_k cos_c[k] cos(k t) + sin_c[k] sin(k t) (or a derivative)."""
    theta = np.asarray(theta, dtype=float)
    k = np.arange(cos_c.size, dtype=float)
    kt = np.multiply.outer(theta, k)
    c, s = np.cos(kt), np.sin(kt)
    # d/dt cos = -k sin, d/dt sin = k cos; cycle through the four phases
    phase = deriv % 4
    kd = k ** deriv
    if phase == 0:
        out = c @ (kd * cos_c) + s @ (kd * sin_c)
    elif phase == 1:
        out = -s @ (kd * cos_c) + c @ (kd * sin_c)
    elif phase == 2:
        out = -c @ (kd * cos_c) - s @ (kd * sin_c)
    else:
        out = s @ (kd * cos_c) - c @ (kd * sin_c)
    return out


def _segments_intersect(p, q, pairs_mask=None):
    """Boolean matrix: does segment p[i] cross segment q[j]?

    ``p`` and ``q`` have shape (n, 2, 2): (segment, endpoint, xy).
    """
    a, b = p[:, None, 0, :], p[:, None, 1, :]
    c, d = q[None, :, 0, :], q[None, :, 1, :]

    def orient(u, v, w):
        return (v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1]) - (v[..., 1] - u[..., 1]) * (w[..., 0] - u[..., 0])

    o1 = orient(a, b, c)
    o2 = orient(a, b, d)
    o3 = orient(c, d, a)
    o4 = orient(c, d, b)
    hit = (o1 * o2 < 0) & (o3 * o4 < 0)
    if pairs_mask is not None:
        hit &= pairs_mask
    return hit


def _point_in_polygon(pt, poly):
    x, y = pt
    xs, ys = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(xs, -1), np.roll(ys, -1)
    crosses = (ys > y) != (yn > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_at = xs + (y - ys) * (xn - xs) / (yn - ys)
    return bool(np.count_nonzero(crosses & (x < x_at)) % 2)


# ---------------------------------------------------------------------------
# planar curves


class Curve2D:
    """Smooth closed planar curve given by finite Fourier series.

    ``x(t) = sum_k x_cos[k] cos(kt) + x_sin[k] sin(kt)`` and likewise for
    ``y``; ``t`` runs over ``[0, 2 pi)``.  A clockwise input is reversed.
    """

    def __init__(self, x_cos, x_sin, y_cos, y_sin, n_quad=1024, name="", validate=True):
        xc, xs, yc, ys = _pad(*(_as_coeffs(v) for v in (x_cos, x_sin, y_cos, y_sin)))
        xs = xs.copy()
        ys = ys.copy()
        xs[0] = ys[0] = 0.0
        if int(n_quad) < 8:
            raise DomainError("n_quad must be >= 8")
        self.n_quad = int(n_quad)
        self.name = name
        self.x_cos, self.x_sin, self.y_cos, self.y_sin = xc, xs, yc, ys
        if self._signed_area_n(max(64, 4 * xc.size)) < 0:
            # t -> -t flips orientation
            self.x_sin, self.y_sin = -xs, -ys
        for arr in (self.x_cos, self.x_sin, self.y_cos, self.y_sin):
            arr.flags.writeable = False
        if validate:
            self.check()

    # -- evaluation -----------------------------------------------------
    def point(self, theta, deriv=0):
        """Return ``(x, y)`` or their ``deriv``-th parameter derivative."""
        return (_cos_sin_series(self.x_cos, self.x_sin, theta, deriv),
                _cos_sin_series(self.y_cos, self.y_sin, theta, deriv))

    def curvature(self, theta):
        x1, y1 = self.point(theta, 1)
        x2, y2 = self.point(theta, 2)
        return (x1 * y2 - y1 * x2) / np.hypot(x1, y1) ** 3

    def speed(self, theta):
        return np.hypot(*self.point(theta, 1))

    @cached_property
    def theta(self):
        return 2.0 * np.pi * np.arange(self.n_quad) / self.n_quad

    @property
    def perimeter(self) -> float:
        return float(np.mean(self.speed(self.theta)) * 2.0 * np.pi)

    @property
    def area(self) -> float:
        return float(self._signed_area_n(self.n_quad))

    def _signed_area_n(self, n):
        t = 2.0 * np.pi * np.arange(n) / n
        x, y = self.point(t)
        x1, y1 = self.point(t, 1)
        return 0.5 * np.mean(x * y1 - y * x1) * 2.0 * np.pi

    def polyline(self, n=SIMPLICITY_POINTS):
        t = 2.0 * np.pi * np.arange(n) / n
        return np.column_stack(self.point(t))

    # -- validation -----------------------------------------------------
    def check(self):
        speed = self.speed(self.theta)
        if speed.min() < REGULARITY_TOL:
            raise GeometryError(f"irregular parametrisation: |tangent| = {speed.min():.3e}")
        poly = self.polyline()
        seg = np.stack([poly, np.roll(poly, -1, axis=0)], axis=1)
        n = len(seg)
        i, j = np.indices((n, n))
        gap = np.abs(i - j)
        mask = (gap > 1) & (gap < n - 1)
        if np.any(_segments_intersect(seg, seg, mask)):
            raise GeometryError(f"self-intersecting curve {self.name!r}")

    # -- transforms -----------------------------------------------------
    def scaled(self, factor):
        return Curve2D(self.x_cos * factor, self.x_sin * factor, self.y_cos * factor,
                       self.y_sin * factor, self.n_quad, self.name, validate=False)

    def translated(self, dx, dy):
        xc, yc = self.x_cos.copy(), self.y_cos.copy()
        xc[0] += dx
        yc[0] += dy
        return Curve2D(xc, self.x_sin, yc, self.y_sin, self.n_quad, self.name, validate=False)

    # -- arclength ------------------------------------------------------
    @cached_property
    def _arclength_series(self):
        # s(t) = (L / 2pi) t + periodic part, from the FFT of the speed
        n = self.n_quad
        sp = np.fft.rfft(self.speed(self.theta)) / n
        return sp

    def arclength(self, theta):
        sp = self._arclength_series
        theta = np.asarray(theta, dtype=float)
        k = np.arange(1, sp.size)
        if self.n_quad % 2 == 0:
            coeff = sp[1:].copy()
            coeff[-1] *= 0.5  # Nyquist term counted once
        else:
            coeff = sp[1:]
        # speed = c0 + 2 Re sum c_k e^{ikt}  ->  integral 2 Re sum c_k (e^{ikt}-1)/(ik)
        e = np.exp(1j * np.multiply.outer(theta, k))
        periodic = 2.0 * np.real((e - 1.0) @ (coeff / (1j * k)))
        return sp[0].real * theta + periodic

    def theta_at_arclength(self, s, tol=1e-14, max_iter=50):
        """Invert ``s(theta)`` by Newton's method (vectorised)."""
        s = np.asarray(s, dtype=float)
        L = self.perimeter
        theta = 2.0 * np.pi * s / L
        for _ in range(max_iter):
            step = (self.arclength(theta) - s) / self.speed(theta)
            theta = theta - step
            if np.max(np.abs(step)) < tol:
                break
        return theta


@dataclass(frozen=True)
class CurveMetrics:
    perimeter: float
    enclosed_area: float
    curvature_samples: np.ndarray = field(repr=False)
    total_curvature: float
    min_curvature: float
    max_curvature: float


def curve_metrics(curve: Curve2D) -> CurveMetrics:
    """Perimeter, enclosed area and curvature by trapezoidal quadrature."""
    t = curve.theta
    kappa = curve.curvature(t)
    speed = curve.speed(t)
    h = 2.0 * np.pi / curve.n_quad
    return CurveMetrics(
        perimeter=float(speed.sum() * h),
        enclosed_area=curve.area,
        curvature_samples=kappa,
        total_curvature=float(np.sum(kappa * speed) * h),
        min_curvature=float(kappa.min()),
        max_curvature=float(kappa.max()),
    )


def circle(R=1.0, center=(0.0, 0.0), n_quad=1024):
    return Curve2D([center[0], R], [0.0, 0.0], [center[1], 0.0], [0.0, R], n_quad, name=f"circle:{R:g}")


def ellipse(a, b, center=(0.0, 0.0), n_quad=1024):
    """Ellipse with semi-axes ``a`` (along x) and ``b`` (along y)."""
    return Curve2D([center[0], a], [0.0, 0.0], [center[1], 0.0], [0.0, b], n_quad, name=f"ellipse:{a:g}:{b:g}")


def star(R, eps, m, center=(0.0, 0.0), n_quad=1024):
    """Polar curve ``r(t) = R (1 + eps cos(m t))``, exactly band-limited."""
    m = int(m)
    if m < 1 or not (0 <= eps < 1):
        raise DomainError("star needs m >= 1 and 0 <= eps < 1")
    n = m + 2
    xc, xs, yc, ys = (np.zeros(n) for _ in range(4))
    xc[0], yc[0] = center
    xc[1] += R
    ys[1] += R
    half = 0.5 * R * eps
    # r cos t = R cos t + (R eps/2)(cos((m+1)t) + cos((m-1)t)), similarly for sin
    xc[m + 1] += half
    ys[m + 1] += half
    if m - 1 == 0:
        xc[0] += half
    else:
        xc[m - 1] += half
        ys[m - 1] -= half
    return Curve2D(xc, xs, yc, ys, n_quad, name=f"star:{R:g}:{eps:g}:{m}")


def stadium(length, radius, modes=48, n_quad=1024):
    """Band-limited approximation of a stadium (two half-disks joined by segments).

    The exact stadium has curvature jumps, so it is sampled by arclength and
    truncated to ``modes`` Fourier modes.  The result is smooth and simple
    but not exactly convex.
    """
    if length < 0 or radius <= 0:
        raise DomainError("stadium needs length >= 0 and radius > 0")
    n = 4096
    L = 2 * length + 2 * np.pi * radius
    s = L * np.arange(n) / n
    pts = np.empty((n, 2))
    a = length / 2
    arc = np.pi * radius
    for i, si in enumerate(s):
        if si < length:
            pts[i] = (-a + si, -radius)
        elif si < length + arc:
            phi = (si - length) / radius - np.pi / 2
            pts[i] = (a + radius * np.cos(phi), radius * np.sin(phi))
        elif si < 2 * length + arc:
            pts[i] = (a - (si - length - arc), radius)
        else:
            phi = (si - 2 * length - arc) / radius + np.pi / 2
            pts[i] = (-a + radius * np.cos(phi), radius * np.sin(phi))
    fx = np.fft.rfft(pts[:, 0]) / n
    fy = np.fft.rfft(pts[:, 1]) / n
    K = modes + 1
    xc = np.concatenate([[fx[0].real], 2 * fx[1:K].real])
    xs = np.concatenate([[0.0], -2 * fx[1:K].imag])
    yc = np.concatenate([[fy[0].real], 2 * fy[1:K].real])
    ys = np.concatenate([[0.0], -2 * fy[1:K].imag])
    return Curve2D(xc, xs, yc, ys, n_quad, name=f"stadium:{length:g}:{radius:g}")


class MultiCurve2D:
    """Finitely many disjoint simply connected planar components."""

    def __init__(self, components):
        components = list(components)
        if not components:
            raise GeometryError("a multi-curve needs at least one component")
        self.components = tuple(components)
        self._check_disjoint()

    def __len__(self):
        return len(self.components)

    def _check_disjoint(self):
        polys = [c.polyline() for c in self.components]
        for i in range(len(polys)):
            for j in range(i + 1, len(polys)):
                p, q = polys[i], polys[j]
                lo_p, hi_p = p.min(0), p.max(0)
                lo_q, hi_q = q.min(0), q.max(0)
                if np.any(hi_p < lo_q) or np.any(hi_q < lo_p):
                    continue
                sp = np.stack([p, np.roll(p, -1, axis=0)], axis=1)
                sq = np.stack([q, np.roll(q, -1, axis=0)], axis=1)
                if (np.any(_segments_intersect(sp, sq))
                        or _point_in_polygon(p[0], q) or _point_in_polygon(q[0], p)):
                    raise GeometryError(f"components {i} and {j} overlap")

    @property
    def total_perimeter(self) -> float:
        return sum(c.perimeter for c in self.components)


def multicurve_constraint(mc: MultiCurve2D) -> float:
    """Average perimeter per component, ``|boundary| / N``."""
    return mc.total_perimeter / len(mc)


# ---------------------------------------------------------------------------
# bodies of revolution


class AxisymBody:
    """Convex body of revolution in R^d (d >= 3) from a Fourier profile.

    ``z(u) = sum_k z_cos[k] cos(k u)``, ``rho(u) = sum_k rho_sin[k] sin(k u)``,
    ``u in [0, pi]``.  Integrals use ``n_quad`` Gauss-Legendre nodes in ``u``.
    """

    def __init__(self, d, z_cos, rho_sin, n_quad=256, name="", validate=True):
        if int(d) != d or d < 3:
            raise DomainError(f"bodies of revolution need d >= 3, got {d!r}")
        self.d = int(d)
        zc, rs = _pad(_as_coeffs(z_cos), _as_coeffs(rho_sin))
        rs = rs.copy()
        rs[0] = 0.0
        self.z_cos, self.rho_sin = zc, rs
        self.n_quad = int(n_quad)
        self.name = name
        if validate:
            self.check()

    def profile(self, u, deriv=0):
        zero = np.zeros_like(self.z_cos)
        return (_cos_sin_series(self.z_cos, zero, u, deriv),
                _cos_sin_series(zero, self.rho_sin, u, deriv))

    @cached_property
    def nodes(self):
        x, w = np.polynomial.legendre.leggauss(self.n_quad)
        return 0.5 * np.pi * (x + 1.0), 0.5 * np.pi * w

    def principal_curvatures(self, u):
        """Profile curvature and rotational curvature at parameters ``u``."""
        z1, r1 = self.profile(u, 1)
        z2, r2 = self.profile(u, 2)
        rho = self.profile(u)[1]
        speed = np.hypot(z1, r1)
        k_prof = (z1 * r2 - r1 * z2) / speed ** 3
        k_rot = -z1 / (rho * speed)
        return k_prof, k_rot

    def check(self):
        k = np.arange(self.rho_sin.size)
        drho0 = np.sum(k * self.rho_sin)
        drho_pi = np.sum(k * self.rho_sin * np.cos(k * np.pi))
        if not (drho0 > REGULARITY_TOL and drho_pi < -REGULARITY_TOL):
            raise GeometryError("profile does not leave the axis transversally at a pole")
        u = np.linspace(0.0, np.pi, 2049)[1:-1]
        z1, r1 = self.profile(u, 1)
        if np.min(np.hypot(z1, r1)) < REGULARITY_TOL:
            raise GeometryError("irregular profile parametrisation")
        if np.min(self.profile(u)[1]) <= 0.0:
            raise GeometryError("profile crosses the axis between the poles")
        kp, kr = self.principal_curvatures(u)
        worst = min(kp.min(), kr.min())
        if worst < -CONVEXITY_TOL:
            raise ConvexityError(f"non-convex body: principal curvature {worst:.3e}")

    def scaled(self, factor):
        return AxisymBody(self.d, self.z_cos * factor, self.rho_sin * factor, self.n_quad,
                          self.name, validate=False)

    def with_dimension(self, d):
        return AxisymBody(d, self.z_cos, self.rho_sin, self.n_quad, self.name)


def sphere(R=1.0, d=3, n_quad=256):
    return AxisymBody(d, [0.0, R], [0.0, R], n_quad, name=f"sphere:{R:g}")


def spheroid(a, b, d=3, n_quad=256):
    """Spheroid with axial semi-axis ``a`` and equatorial semi-axis ``b``."""
    return AxisymBody(d, [0.0, a], [0.0, b], n_quad, name=f"spheroid:{a:g}:{b:g}")


def perturbed_sphere(seed, amplitude=0.05, modes=4, d=3, n_quad=256):
    """Seeded smooth convex perturbation of the unit sphere.

    Mode ``k`` gets amplitude ``<= amplitude / k**2``; the amplitude is halved
    until the body is convex.
    """
    rng = np.random.default_rng(seed)
    ks = np.arange(2, modes + 2)
    ez = rng.uniform(-1.0, 1.0, ks.size) / ks ** 2
    er = rng.uniform(-1.0, 1.0, ks.size) / ks ** 2
    amp = amplitude
    for _ in range(30):
        z = np.zeros(modes + 2)
        r = np.zeros(modes + 2)
        z[1] = r[1] = 1.0
        z[ks] = amp * ez
        r[ks] = amp * er
        try:
            return AxisymBody(d, z, r, n_quad, name=f"perturbed:{seed}")
        except GeometryError:
            amp *= 0.5
    raise GeometryError("could not generate a convex perturbation")


@dataclass(frozen=True)
class CurvatureReport:
    d: int
    area: float
    Mj_samples: np.ndarray = field(repr=False)   # (d, n): M_0..M_{d-1}
    Mj_avg: np.ndarray                           # (d-1,): averaged M_1..M_{d-1}
    M_total: float                               # boundary average of M^(d-1)
    M_min: float
    M_max: float
    nodes: np.ndarray = field(repr=False)
    area_weights: np.ndarray = field(repr=False)
    kappa_profile: np.ndarray = field(repr=False)
    kappa_rot: np.ndarray = field(repr=False)

    @property
    def mean_curvature(self):
        return self.Mj_samples[1]

    def integral(self, values):
        return float(np.dot(self.area_weights, values))


def axisym_curvatures(body: AxisymBody) -> CurvatureReport:
    d = body.d
    u, w = body.nodes
    kp, kr = body.principal_curvatures(u)
    worst = min(kp.min(), kr.min())
    if worst < -CONVEXITY_TOL:
        raise ConvexityError(f"non-convex body: principal curvature {worst:.3e}")
    z1, r1 = body.profile(u, 1)
    rho = body.profile(u)[1]
    dA = sphere_area(d - 1) * rho ** (d - 2) * np.hypot(z1, r1) * w
    area = float(dA.sum())
    m = d - 2  # multiplicity of the rotational curvature
    Mj = np.empty((d, u.size))
    for j in range(d):
        # e_j of {kp, kr x m}, normalised by binom(d-1, j)
        e = comb(m, j) * kr ** j
        if j >= 1:
            e = e + kp * comb(m, j - 1) * kr ** (j - 1)
        Mj[j] = e / comb(d - 1, j)
    avg = np.array([np.dot(dA, Mj[j]) / area for j in range(1, d)])
    M = Mj[1]
    M_total = float(np.dot(dA, M ** (d - 1)) / area)
    return CurvatureReport(d, area, Mj, avg, M_total, float(M.min()), float(M.max()),
                           u, dA, kp, kr)


@dataclass(frozen=True)
class SteinerPolynomial:
    """``P(t) = sum_j coeffs[j] t**j``, the boundary average of prod(1 + t kappa_j)."""

    d: int
    coeffs: tuple

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(t, self.coeffs)

    @classmethod
    def for_ball(cls, d, R):
        return cls(d, tuple(comb(d - 1, j) * R ** (-j) for j in range(d)))


def steiner_polynomial(body: AxisymBody, report: CurvatureReport | None = None) -> SteinerPolynomial:
    rep = report if report is not None else axisym_curvatures(body)
    d = body.d
    coeffs = [1.0]
    for j in range(1, d - 1):
        coeffs.append(comb(d - 1, j) * float(rep.Mj_avg[j - 1]))
    coeffs.append(sphere_area(d) / rep.area)
    return SteinerPolynomial(d, tuple(coeffs))


def equivalent_ball_radius(report: CurvatureReport) -> float:
    """Radius of the ball with the same boundary average of ``M**(d-1)``."""
    return report.M_total ** (-1.0 / (report.d - 1))


@dataclass(frozen=True)
class InequalityReport:
    maclaurin: dict       # j -> min over samples of M^j - M_j
    jensen: dict          # j -> (M_total)^(j/(d-1)) - averaged M_j
    alexandrov_fenchel: float
    gauss_kronecker_defect: float   # integral of M_{d-1} minus s_d

    @property
    def min_margin(self) -> float:
        vals = list(self.maclaurin.values()) + list(self.jensen.values()) + [self.alexandrov_fenchel]
        return min(vals)


def check_curvature_inequalities(body: AxisymBody, report: CurvatureReport | None = None) -> InequalityReport:
    rep = report if report is not None else axisym_curvatures(body)
    d = body.d
    M = rep.Mj_samples[1]
    mac, jen = {}, {}
    for j in range(1, d - 1):
        mac[j] = float(np.min(M ** j - rep.Mj_samples[j]))
        jen[j] = float(rep.M_total ** (j / (d - 1)) - rep.Mj_avg[j - 1])
    af = float(rep.Mj_avg[0] - (sphere_area(d) / rep.area) ** (1.0 / (d - 1)))
    gk = rep.integral(rep.Mj_samples[d - 1]) - sphere_area(d)
    return InequalityReport(mac, jen, af, gk)


def steiner_margin(body: AxisymBody, t, report: CurvatureReport | None = None):
    """``P_ball(t) - P_body(t)`` for the ball with matched ``M_total``."""
    rep = report if report is not None else axisym_curvatures(body)
    P = steiner_polynomial(body, rep)
    PB = SteinerPolynomial.for_ball(body.d, equivalent_ball_radius(rep))
    return PB(t) - P(t)
