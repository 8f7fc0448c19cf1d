"""Slow, independent numeric references used to pin expected values.

These deliberately avoid the library's quadrature layout.  The inner
region is a Taylor series of 1 - cos, the middle a plain adaptive
quadrature on the raw integrand, and the tail a Fourier-weighted
quadrature, so agreement with the library is evidence rather than a
tautology.
"""

import math

from scipy import integrate


def symbol_integral(gamma: float, xi: float, c: float) -> float:
    """Integral of (1 - cos(xi*h)) * c * |h|^(-1-gamma) over the real line."""
    if xi == 0.0:
        return 0.0
    xi = abs(xi)
    a0 = 1e-3 / max(xi, 1.0)
    inner = 0.0
    for k in range(1, 40):
        term = ((-1.0) ** (k + 1) * xi ** (2 * k)
                * a0 ** (2 * k - gamma)
                / (math.factorial(2 * k) * (2 * k - gamma)))
        inner += term
        if abs(term) < 1e-18 * max(abs(inner), 1e-30):
            break
    inner *= 2.0 * c
    mid, _ = integrate.quad(
        lambda h: (1.0 - math.cos(xi * h)) * h ** (-1.0 - gamma),
        a0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=500)
    mid *= 2.0 * c
    osc, _ = integrate.quad(lambda h: h ** (-1.0 - gamma), 1.0, math.inf,
                            weight="cos", wvar=xi)
    return inner + mid + 2.0 * c / gamma - 2.0 * c * osc


def one_sided_tail(gamma: float, c: float, a: float, b: float) -> float:
    """Integral of c * h^(-1-gamma) over [a, b], by plain quadrature.

    Pass b = math.inf for the full tail; quad's semi-infinite transform
    behaves far better there than a huge finite endpoint.
    """
    val, _ = integrate.quad(lambda h: c * h ** (-1.0 - gamma), a, b,
                            epsabs=1e-14, epsrel=1e-13, limit=500)
    return val


def truncated_second_moment(gamma: float, c: float, eps: float) -> float:
    """Integral of h^2 * c * |h|^(-1-gamma) over [-eps, eps]."""
    val, _ = integrate.quad(lambda h: c * h ** (1.0 - gamma), 0.0, eps,
                            epsabs=1e-14, epsrel=1e-13, limit=500)
    return 2.0 * val
