r"""Special functions for the radial exterior problem.

Only the orders :math:`\nu = (d-2)/2` are needed, so the modified Bessel
function of the second kind :math:`K_\nu` is supported for integer and
half-integer orders in ``[0, 20]``:

* half-integer orders use the terminating closed form
  :math:`K_{n+1/2}(x) = \sqrt{\pi/2x}\,e^{-x}\sum_k \frac{(n+k)!}{k!(n-k)!}(2x)^{-k}`;
* integer orders start from :math:`K_0, K_1`, obtained by the logarithmic
  power series for ``x <= 2`` and by Steed's continued fraction otherwise,
  followed by upward recurrence (stable for :math:`K`).

All internal work is done on the exponentially scaled :math:`e^x K_\nu(x)`,
so ratios never divide two underflowed numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, DomainError

EULER_GAMMA = 0.57721566490153286061
NU_MAX = 20.0
SERIES_SWITCH = 2.0


@dataclass(frozen=True)
class EvalPolicy:
    abs_tol: float = 1e-14
    rel_tol: float = 1e-12
    max_terms: int = 500
    quadrature_nodes: int = 2000  # integral oracle only

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.max_terms < 1:
            raise DomainError("max_terms must be >= 1")
        if self.quadrature_nodes < 2:
            raise DomainError("quadrature_nodes must be >= 2")


DEFAULT_POLICY = EvalPolicy()


def gamma(x: float) -> float:
    return math.gamma(x)


def sphere_area(d: int) -> float:
    """Surface area ``2 pi^(d/2) / Gamma(d/2)`` of the unit sphere in R^d."""
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {d!r}")
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)


def order_for_dimension(d: int) -> float:
    """Bessel order ``(d - 2)/2`` of the radial problem in R^d."""
    if int(d) != d or d < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {d!r}")
    return (d - 2) / 2.0


def _check_order(nu):
    nu = float(nu)
    if not (0.0 <= nu <= NU_MAX):
        raise DomainError(f"order must lie in [0, {NU_MAX:g}], got {nu!r}")
    twice = 2.0 * nu
    if abs(twice - round(twice)) > 1e-12:
        raise DomainError(f"only integer and half-integer orders are supported, got {nu!r}")
    return round(twice) / 2.0


def _check_arg(x):
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise DomainError(f"argument must be positive and finite, got {x!r}")
    return x


def _k01_series(x, policy):
    """Unscaled K_0(x), K_1(x) from the ascending series (small x)."""
    q = 0.25 * x * x
    log_half = math.log(0.5 * x)
    term0 = 1.0           # q^k / (k!)^2
    term1 = 1.0           # q^k / (k! (k+1)!)
    harmonic = 0.0        # H_k
    i0 = 0.0
    i1 = 0.0
    s0 = 0.0              # sum H_k q^k/(k!)^2
    s1 = 0.0              # sum (psi(k+1)+psi(k+2)) q^k/(k!(k+1)!)
    for k in range(policy.max_terms):
        if k > 0:
            term0 *= q / (k * k)
            term1 *= q / (k * (k + 1))
            harmonic += 1.0 / k
        psi_sum = 2.0 * (harmonic - EULER_GAMMA) + 1.0 / (k + 1)
        i0 += term0
        i1 += term1
        s0 += harmonic * term0
        s1 += psi_sum * term1
        if k > 2 and term0 * (1.0 + harmonic) < 1e-17 * i0:
            break
    else:
        k0 = -(log_half + EULER_GAMMA) * i0 + s0
        raise AccuracyError("K_0/K_1 series did not converge", best_estimate=k0)
    i1 *= 0.5 * x
    k0 = -(log_half + EULER_GAMMA) * i0 + s0
    k1 = 1.0 / x + log_half * i1 - 0.25 * x * s1
    return k0, k1


def _k01_steed_scaled(x, policy):
    """Scaled e^x K_0(x), e^x K_1(x) by Steed's continued fraction (x > ~2)."""
    mu = 0.0
    a1 = 0.25 - mu * mu
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    eps = min(policy.rel_tol, 1e-16)
    for i in range(1, policy.max_terms):
        a -= 2 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < eps:
            break
    else:
        best = math.sqrt(math.pi / (2.0 * x)) / s
        raise AccuracyError("Steed continued fraction did not converge", best_estimate=best)
    h *= a1
    k0 = math.sqrt(math.pi / (2.0 * x)) / s
    k1 = k0 * (mu + x + 0.5 - h) / x
    return k0, k1


def _k_pair_scaled(nu, x, policy):
    """Return e^x K_nu(x) and the ratio K_{nu+1}(x)/K_nu(x)."""
    if nu != int(nu):
        n = int(nu - 0.5)
        # closed form for K_{n+1/2} and K_{n+3/2}: all terms positive
        inv2x = 0.5 / x
        pref = math.sqrt(math.pi / (2.0 * x))

        def poly(m):
            total = 0.0
            for k in range(m + 1):
                coef = math.factorial(m + k) / (math.factorial(k) * math.factorial(m - k))
                total += coef * inv2x ** k
            return total

        p_n = poly(n)
        return pref * p_n, poly(n + 1) / p_n
    if x <= SERIES_SWITCH:
        k0, k1 = _k01_series(x, policy)
        k0 *= math.exp(x)
        k1 *= math.exp(x)
    else:
        k0, k1 = _k01_steed_scaled(x, policy)
    n = int(nu)
    value = k0
    ratio = k1 / k0
    for m in range(1, n + 1):
        value *= ratio
        ratio = 1.0 / ratio + 2.0 * m / x
    return value, ratio


def bessel_k_scaled(nu: float, x: float, policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """``exp(x) * K_nu(x)``."""
    nu = _check_order(nu)
    x = _check_arg(x)
    return _k_pair_scaled(nu, x, policy)[0]


def bessel_k(nu: float, x: float, policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """Modified Bessel function of the second kind ``K_nu(x)``, ``x > 0``."""
    nu = _check_order(nu)
    x = _check_arg(x)
    return _k_pair_scaled(nu, x, policy)[0] * math.exp(-x)


def bessel_k_ratio(nu: float, x: float, policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """``K_{nu+1}(x) / K_nu(x)`` without forming either factor unscaled."""
    nu = _check_order(nu)
    x = _check_arg(x)
    return _k_pair_scaled(nu, x, policy)[1]


def bessel_ratio_f(nu: float, x: float, policy: EvalPolicy = DEFAULT_POLICY) -> float:
    r"""The function :math:`f(x) = x K_{\nu+1}(x)/K_\nu(x)`.

    Strictly increasing on ``(0, inf)`` from ``2 nu`` to infinity, with
    ``f(x) >= x``.  The ball eigenvalue equation reads ``f(kR) = -alpha R``.
    """
    nu = _check_order(nu)
    x = _check_arg(x)
    return x * _k_pair_scaled(nu, x, policy)[1]


def bessel_k_integral(nu: float, x: float, policy: EvalPolicy = DEFAULT_POLICY) -> float:
    r"""Independent evaluation of :math:`K_\nu(x)=\int_0^\infty e^{-x\cosh t}\cosh(\nu t)\,dt`.

    The integrand is even and analytic with double-exponential decay, so the
    trapezoidal rule on a truncated half-line converges geometrically.  Meant
    as a cross-check, not for production use.
    """
    nu = float(nu)
    x = _check_arg(x)
    # cut where x*cosh(t) - nu*t exceeds the scaled exponent by ~60
    t_max = math.acosh(1.0 + (60.0 + nu * 50.0) / x)
    t_max = max(t_max, 1.0)
    t = np.linspace(0.0, t_max, policy.quadrature_nodes)
    h = t[1] - t[0]
    # scaled: e^x K = int exp(-x (cosh t - 1)) cosh(nu t)
    f = np.exp(-x * (np.cosh(t) - 1.0)) * np.cosh(nu * t)
    total = h * (f.sum() - 0.5 * f[0] - 0.5 * f[-1])
    return float(total) * math.exp(-x)
