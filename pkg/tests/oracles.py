"""Independent reference implementations used only by the test suite.

Everything here is derived from first principles (exact rational
arithmetic, classical quadrature, closed forms) and deliberately avoids
calling into the package beyond plain constants, so agreement is
evidence rather than tautology.
"""

from fractions import Fraction
from math import factorial, sqrt

import numpy as np


def wigner3j_exact(l1, l2, l3, m1, m2, m3):
    """3j symbol by the Racah sum in exact rational arithmetic.

    The square of the value is an exact Fraction; one final float sqrt is
    the only rounding, so the result is correct to ~1 ulp."""
    if m1 + m2 + m3 != 0:
        return 0.0
    if not abs(l1 - l2) <= l3 <= l1 + l2:
        return 0.0
    if abs(m1) > l1 or abs(m2) > l2 or abs(m3) > l3:
        return 0.0
    pref2 = Fraction(
        factorial(l1 + l2 - l3) * factorial(l1 - l2 + l3)
        * factorial(-l1 + l2 + l3), factorial(l1 + l2 + l3 + 1))
    pref2 *= (factorial(l1 + m1) * factorial(l1 - m1)
              * factorial(l2 + m2) * factorial(l2 - m2)
              * factorial(l3 + m3) * factorial(l3 - m3))
    tmin = max(0, l2 - l3 - m1, l1 - l3 + m2)
    tmax = min(l1 + l2 - l3, l1 - m1, l2 + m2)
    s = Fraction(0)
    for t in range(tmin, tmax + 1):
        den = (factorial(t) * factorial(l3 - l2 + m1 + t)
               * factorial(l3 - l1 - m2 + t) * factorial(l1 + l2 - l3 - t)
               * factorial(l1 - m1 - t) * factorial(l2 + m2 - t))
        s += Fraction((-1) ** t, den)
    if s == 0:
        return 0.0
    sign = (-1) ** (l1 - l2 - m3) * (1 if s > 0 else -1)
    return sign * sqrt(float(pref2 * s * s))


def gauss_legendre_integral(f, n=64):
    """int_{-1}^{1} f(x) dx by n-point Gauss-Legendre quadrature."""
    x, w = np.polynomial.legendre.leggauss(n)
    return float(np.sum(w * f(x)))


def d1_matrix(beta):
    """Closed-form spin-1 rotation matrix, rows/cols ordered m = -1, 0, 1."""
    c, s = np.cos(beta), np.sin(beta)
    r = 1.0 / np.sqrt(2.0)
    return np.array([
        [(1 + c) / 2, s * r, (1 - c) / 2],
        [-s * r, c, s * r],
        [(1 - c) / 2, -s * r, (1 + c) / 2],
    ])


def legendre_poly_norm(l, x):
    """Pbar_l^0 via the plain Legendre recurrence, normalized to unit L2."""
    x = np.asarray(x, float)
    p0, p1 = np.ones_like(x), x
    if l == 0:
        p = p0
    elif l == 1:
        p = p1
    else:
        for n in range(2, l + 1):
            p0, p1 = p1, ((2 * n - 1) * x * p1 - (n - 1) * p0) / n
        p = p1
    return np.sqrt((2 * l + 1) / 2.0) * p


def triple_product_integral(t, c1, c2, c3, n_theta=64, n_phi=129):
    """Quadrature oracle for the trivial-projection contraction.

    Computes int f1 f2 f3 dOmega for the band-pure functions synthesized
    from per-degree coefficient rows c_i on degree t[i] (complex, m
    ascending).  Gauss-Legendre in latitude, trapezoid in longitude."""
    from sphmark import harmonics

    l1, l2, l3 = t
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x)
    phi = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    tg, pg = np.meshgrid(theta, phi, indexing="ij")

    def synth(l, row):
        f = np.zeros(tg.shape, complex)
        for i, m in enumerate(range(-l, l + 1)):
            f += row[i] * harmonics.sh_eval(l, m, tg, pg)
        return f

    f = synth(l1, c1) * synth(l2, c2) * synth(l3, c3)
    return complex(np.sum(w[:, None] * f) * (2 * np.pi / n_phi))
