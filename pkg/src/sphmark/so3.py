"""SO(3) elements, Wigner-D matrices, and the two rotation actions.

A rotation acts on signals by pullback, (R.f)(omega) = f(R^{-1} omega);
on coefficients it acts block-diagonally through the per-degree Wigner-D
matrices, c'_l = D^l(R) c_l.  Both actions use the same active ZYZ
convention so they agree up to resampling error.
"""

import math

import numpy as np

from . import grid
from .harmonics import ShCoefficients, SymmetryError

__all__ = [
    "Rotation", "random_rotation", "rotation_angle",
    "little_d", "wigner_D", "rotate_coeffs", "rotate_image",
]

_L_CAP = 32  # factorial-sum little-d is double-precision safe up to here

# ln(n!) for n = 0..300
_LOGFACT = np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, 301)))])


class Rotation:
    """Unit quaternion (w, x, y, z); q and -q denote the same rotation."""

    __slots__ = ("q",)

    def __init__(self, w, x, y, z):
        q = np.array([w, x, y, z], float)
        n = np.linalg.norm(q)
        if n < 1e-12:
            raise ValueError("zero quaternion is not a rotation")
        self.q = q / n

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_axis_angle(cls, axis, angle):
        axis = np.asarray(axis, float)
        n = np.linalg.norm(axis)
        if n < 1e-12:
            raise ValueError("axis must be nonzero")
        axis = axis / n
        h = 0.5 * angle
        return cls(math.cos(h), *(math.sin(h) * axis))

    @classmethod
    def from_zyz(cls, alpha, beta, gamma):
        rz1 = cls.from_axis_angle([0, 0, 1], alpha)
        ry = cls.from_axis_angle([0, 1, 0], beta)
        rz2 = cls.from_axis_angle([0, 0, 1], gamma)
        return rz1 * ry * rz2

    @classmethod
    def parse(cls, text):
        """CLI forms: quaternion "w,x,y,z" or Euler "zyz:alpha,beta,gamma"."""
        t = text.strip()
        try:
            if t.lower().startswith("zyz:"):
                vals = [float(v) for v in t[4:].split(",")]
                if len(vals) != 3:
                    raise ValueError
                return cls.from_zyz(*vals)
            vals = [float(v) for v in t.split(",")]
            if len(vals) != 4:
                raise ValueError
            return cls(*vals)
        except ValueError:
            raise ValueError('rotation must be "w,x,y,z" or "zyz:a,b,g", got %r' % text)

    def __mul__(self, other):
        w1, x1, y1, z1 = self.q
        w2, x2, y2, z2 = other.q
        return Rotation(w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2)

    def inverse(self):
        w, x, y, z = self.q
        return Rotation(w, -x, -y, -z)

    @property
    def matrix(self):
        w, x, y, z = self.q
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)]])

    @property
    def zyz(self):
        """Active ZYZ Euler angles; gimbal degeneracy resolved by gamma = 0."""
        M = self.matrix
        cb = float(np.clip(M[2, 2], -1.0, 1.0))
        b = math.acos(cb)
        if math.sin(b) > 1e-12:
            a = math.atan2(M[1, 2], M[0, 2])
            g = math.atan2(M[2, 1], -M[2, 0])
        else:
            g = 0.0
            if cb > 0:
                a = math.atan2(M[1, 0], M[0, 0])
            else:
                a = math.atan2(-M[1, 0], -M[0, 0])
        return a, b, g

    @property
    def angle(self):
        return 2.0 * math.acos(min(1.0, abs(self.q[0])))

    def __repr__(self):
        return "Rotation(%.6f, %.6f, %.6f, %.6f)" % tuple(self.q)


def random_rotation(seed):
    """Haar-uniform rotation from four normalized standard-normal draws."""
    v = np.random.default_rng(seed).standard_normal(4)
    return Rotation(*v)


def rotation_angle(R):
    """Geodesic distance to the identity, omega = 2 arccos|q_w|, in [0, pi]."""
    return R.angle


def little_d(l, beta):
    """Wigner small-d matrix d^l_{m',m}(beta), indexed [m'+l, m+l].

    Explicit factorial sum with log-factorial magnitudes; zero-power
    corner cases (beta = 0 or pi) handled exactly.
    """
    if not (0 <= l <= _L_CAP):
        raise ValueError("degree must be in [0, %d]" % _L_CAP)
    d = np.zeros((2 * l + 1, 2 * l + 1))
    cb, sb = math.cos(beta / 2.0), math.sin(beta / 2.0)
    for mp in range(-l, l + 1):
        for m in range(-l, l + 1):
            pref = 0.5 * (_LOGFACT[l + mp] + _LOGFACT[l - mp]
                          + _LOGFACT[l + m] + _LOGFACT[l - m])
            smin = max(0, m - mp)
            smax = min(l + m, l - mp)
            tot = 0.0
            for s in range(smin, smax + 1):
                den = (_LOGFACT[l + m - s] + _LOGFACT[s]
                       + _LOGFACT[mp - m + s] + _LOGFACT[l - mp - s])
                p_c = 2 * l + m - mp - 2 * s
                p_s = mp - m + 2 * s
                term = math.exp(pref - den)
                if cb != 0.0:
                    term *= cb ** p_c
                elif p_c > 0:
                    term = 0.0
                if sb != 0.0:
                    term *= sb ** p_s
                elif p_s > 0:
                    term = 0.0
                tot += ((-1.0) ** (mp - m + s)) * term
            d[mp + l, m + l] = tot
    return d


def wigner_D(l, R):
    """D^l_{m',m}(R) = e^{-i m' alpha} d^l_{m',m}(beta) e^{-i m gamma}."""
    a, b, g = R.zyz
    d = little_d(l, b)
    ma = np.arange(-l, l + 1)
    return np.exp(-1j * ma * a)[:, None] * d * np.exp(-1j * ma * g)[None, :]


def rotate_coeffs(c, R):
    """c'_l = D^l(R) c_l per block and channel; degrees never mix."""
    out = c.copy()
    for l in range(c.l_max + 1):
        D = wigner_D(l, R)
        out.data[:, l * l:(l + 1) * (l + 1)] = c.block(l) @ D.T
    if out.real:
        out.assert_symmetry(1e-9)
    return out


def rotate_image(x, R):
    """Pullback resampling: each output pixel samples x at R^{-1} omega."""
    H, W, ch = grid.check_image(x)
    d = grid.grid_directions(H) @ R.matrix  # row-vector form of R^T omega
    theta = np.arccos(np.clip(d[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(d[..., 1], d[..., 0]), 2.0 * np.pi)
    return grid.sample_bilinear(x, theta, phi)
