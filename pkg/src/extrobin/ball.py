"""Exact Robin spectrum outside a ball B_R in R^d.

The lowest point of the spectrum is ``-k**2`` where ``x = kR`` solves
``f(x) = -alpha R`` with ``f(x) = x K_{nu+1}(x)/K_nu(x)``, ``nu = (d-2)/2``.
A root exists iff ``alpha < -(d-2)/R``; otherwise the spectrum starts at the
bottom of the essential spectrum, 0.

Everything is dimensionless; ``lambda`` scales like ``1/length**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import specfun
from .errors import DomainError, SolverError, StateError

BISECTION_ITERATIONS = 200
TINY = 1e-300


@dataclass(frozen=True)
class BallProblem:
    d: int
    R: float
    alpha: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.d!r}")
        if not self.R > 0:
            raise DomainError(f"radius must be positive, got {self.R!r}")
        if not self.alpha <= 0:
            raise DomainError(f"coupling must be <= 0, got {self.alpha!r}")

    @property
    def nu(self) -> float:
        return specfun.order_for_dimension(self.d)


@dataclass(frozen=True)
class BallSpectrum:
    lambda1: float
    k: float
    is_discrete: bool
    alpha_star: float
    residual: float = 0.0


def critical_coupling(d: int, R: float) -> float:
    """Critical coupling ``-(d-2)/R`` below which a discrete eigenvalue exists."""
    if int(d) != d or d < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {d!r}")
    if not R > 0:
        raise DomainError(f"radius must be positive, got {R!r}")
    if d == 2:
        return 0.0
    return -(d - 2) / R


def lambda1_ball(problem: BallProblem, policy: specfun.EvalPolicy = specfun.DEFAULT_POLICY) -> BallSpectrum:
    """Lowest spectral point of the exterior Robin Laplacian of a ball.

    The root of ``f(x) = -alpha R`` is bracketed by ``[0, -alpha R]`` because
    ``f(x) >= x`` and ``f`` is increasing, then found by bisection.
    """
    d, R, alpha = problem.d, problem.R, problem.alpha
    a_star = critical_coupling(d, R)
    if alpha >= a_star:
        return BallSpectrum(0.0, 0.0, False, a_star)

    nu = problem.nu
    target = -alpha * R

    def g(x):
        return specfun.bessel_ratio_f(nu, x, policy) - target

    # bisection in log x: 2D roots can be as small as exp(-1/|alpha R|);
    # for nu > 0 the root stays away from 0 unless alpha is within ~1e-12 of alpha*
    lo, hi = (TINY if nu == 0 else 1e-12 * target), target
    if g(hi) < 0.0:
        raise SolverError(f"root bracket failed: f({hi}) < {target}")
    if g(lo) >= 0.0:
        # root below the lower bracket end: k is reported as that end
        x = lo
    else:
        for _ in range(BISECTION_ITERATIONS):
            mid = math.sqrt(lo) * math.sqrt(hi)
            if not lo < mid < hi:
                break
            if g(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        x = lo if abs(g(lo)) < abs(g(hi)) else hi
    residual = abs(g(x))
    k = x / R
    return BallSpectrum(-k * k, k, True, a_star, residual)


def solve(d: int, R: float, alpha: float) -> BallSpectrum:
    """Shorthand for ``lambda1_ball(BallProblem(d, R, alpha))``."""
    return lambda1_ball(BallProblem(d, R, alpha))


def radial_eigenfunction(problem: BallProblem, spectrum: BallSpectrum, r: float) -> float:
    """Radial eigenfunction ``r^-nu K_nu(kr)``, normalised to 1 at ``r = R``."""
    if not spectrum.is_discrete:
        raise StateError("no discrete eigenvalue: the spectrum starts at the essential bottom")
    R = problem.R
    if r < R:
        raise DomainError(f"r must be >= R = {R}, got {r}")
    nu, k = problem.nu, spectrum.k
    num = specfun.bessel_k_scaled(nu, k * r)
    den = specfun.bessel_k_scaled(nu, k * R)
    return (R / r) ** nu * (num / den) * math.exp(-k * (r - R))


def asym_lambda(d: int, mean_curvature: float, alpha: float) -> float:
    """Two-term strong-coupling predictor ``-alpha^2 - alpha (d-1) M``.

    For a ball of radius R, ``M = 1/R``.  For a general convex boundary the
    relevant value is the smallest mean curvature, since the bound state
    concentrates where the boundary is flattest.
    """
    if not alpha < 0:
        if alpha == 0:
            return 0.0
        raise DomainError(f"coupling must be negative, got {alpha!r}")
    return -alpha * alpha - alpha * (d - 1) * mean_curvature
