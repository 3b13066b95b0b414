"""Independent reference values used by several test modules."""

import math

from scipy import integrate


def bessel_integral(nu: float, x: float) -> float:
    """J_nu(x) from its integral representation, by adaptive quadrature.

    J_nu(x) = (1/pi) int_0^pi cos(nu t - x sin t) dt
              - (sin(nu pi)/pi) int_0^inf exp(-x sinh t - nu t) dt
    """
    first, _ = integrate.quad(lambda t: math.cos(nu * t - x * math.sin(t)), 0, math.pi,
                              limit=2000, epsabs=1e-12, epsrel=1e-12)
    s = math.sin(nu * math.pi)
    second = 0.0
    if abs(s) > 1e-15:
        # beyond this cut the integrand is below exp(-700)
        top = math.asinh(700.0 / x) if x > 0 else 700.0 / max(nu, 1e-3)
        second, _ = integrate.quad(lambda t: math.exp(-x * math.sinh(t) - nu * t), 0, top,
                                   limit=400, epsabs=1e-14, epsrel=1e-13)
    return first / math.pi - s / math.pi * second
