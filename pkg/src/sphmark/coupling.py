"""Wigner 3j symbols, trivial-projection tables, and bispectrum invariants.

The third-order invariant of a triplet (l1, l2, l3) is the full
contraction of three coefficient blocks against the trivial-projection
coefficients C^{0,0} = prefactor * 3j(l1,l2,l3;0,0,0) * 3j(l1,l2,l3;m1,m2,m3),
prefactor sqrt((2l1+1)(2l2+1)(2l3+1)/4pi).  For any rotation the three
Wigner-D conjugations cancel, so every component is exactly SO(3)
invariant; for real signals every component is real.
"""

import math

import numpy as np

__all__ = [
    "log_factorial", "wigner_3j", "trivial_projection_coeff",
    "admissible_triplets", "BispectrumVector",
    "bispectrum_component", "bispectrum_vector",
    "perturbation_sensitivity", "power_spectrum_features",
    "bispectrum_to_csv",
]

_LOGFACT = np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, 301)))])


def log_factorial(n):
    """ln(n!) from the precomputed cumulative table (n <= 300)."""
    if not (0 <= n <= 300):
        raise ValueError("log_factorial table covers 0..300")
    return float(_LOGFACT[n])


def wigner_3j(l1, l2, l3, m1, m2, m3):
    """3j symbol by the Racah sum; selection-rule failures return exact 0."""
    if m1 + m2 + m3 != 0:
        return 0.0
    if l3 < abs(l1 - l2) or l3 > l1 + l2:
        return 0.0
    if abs(m1) > l1 or abs(m2) > l2 or abs(m3) > l3:
        return 0.0
    F = _LOGFACT
    pref = 0.5 * (F[l1 + l2 - l3] + F[l1 - l2 + l3] + F[-l1 + l2 + l3]
                  - F[l1 + l2 + l3 + 1]
                  + F[l1 + m1] + F[l1 - m1] + F[l2 + m2] + F[l2 - m2]
                  + F[l3 + m3] + F[l3 - m3])
    tmin = max(0, l2 - l3 - m1, l1 - l3 + m2)
    tmax = min(l1 + l2 - l3, l1 - m1, l2 + m2)
    s = 0.0
    for t in range(tmin, tmax + 1):
        den = (F[t] + F[l3 - l2 + t + m1] + F[l3 - l1 + t - m2]
               + F[l1 + l2 - l3 - t] + F[l1 - t - m1] + F[l2 - t + m2])
        s += ((-1.0) ** t) * math.exp(pref - den)
    return ((-1.0) ** (l1 - l2 - m3)) * s


def trivial_projection_coeff(t, m1, m2, m3):
    """C^{0,0}_{l1 m1 l2 m2 l3 m3}: prefactor x 3j(zeros) x 3j(m's)."""
    l1, l2, l3 = t
    pref = math.sqrt((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1) / (4.0 * math.pi))
    return pref * wigner_3j(l1, l2, l3, 0, 0, 0) * wigner_3j(l1, l2, l3, m1, m2, m3)


def admissible_triplets(L, l_max):
    """All (l1 <= l2 <= l3) from L with triangle + even parity, lexicographic."""
    Ls = sorted(set(int(l) for l in L))
    if Ls and (Ls[0] < 0 or Ls[-1] > l_max):
        raise ValueError("degree set must lie within [0, l_max]")
    out = []
    for i, l1 in enumerate(Ls):
        for j in range(i, len(Ls)):
            l2 = Ls[j]
            for k in range(j, len(Ls)):
                l3 = Ls[k]
                if l3 <= l1 + l2 and (l1 + l2 + l3) % 2 == 0:
                    out.append((l1, l2, l3))
    return out


# per-triplet dense tables, built once and reused (construction is
# idempotent, so a benign race just rebuilds identical values)
_TABLES = {}


def _projection_table(t):
    """(C, gather, valid): C[m1+l1, m2+l2] dense, m3 = -m1-m2 gathered from block l3."""
    if t in _TABLES:
        return _TABLES[t]
    l1, l2, l3 = t
    M1, M2 = np.meshgrid(np.arange(-l1, l1 + 1), np.arange(-l2, l2 + 1),
                         indexing="ij")
    M3 = -M1 - M2
    valid = np.abs(M3) <= l3
    pref = (math.sqrt((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1) / (4.0 * math.pi))
            * wigner_3j(l1, l2, l3, 0, 0, 0))
    C = np.zeros(M1.shape)
    for i in range(M1.shape[0]):
        for j in range(M1.shape[1]):
            if valid[i, j]:
                C[i, j] = pref * wigner_3j(l1, l2, l3,
                                           int(M1[i, j]), int(M2[i, j]), int(M3[i, j]))
    g = np.where(valid, M3 + l3, 0)
    for arr in (C, g, valid):
        arr.setflags(write=False)
    _TABLES[t] = (C, g, valid)
    return _TABLES[t]


class BispectrumVector:
    """Ordered per-triplet invariant components plus their scalar total."""

    __slots__ = ("triplets", "values", "total")

    def __init__(self, triplets, values):
        self.triplets = [tuple(t) for t in triplets]
        self.values = np.asarray(values, complex)
        if len(self.triplets) != self.values.size:
            raise ValueError("triplet/value length mismatch")
        self.total = complex(self.values.sum()) if self.values.size else 0j

    def __len__(self):
        return self.values.size


def _contract(t, b1, b2, b3):
    C, g, valid = _projection_table(t)
    return np.einsum("ij,i,j,ij->", C, b1, b2, b3[g] * valid)


def bispectrum_component(c, t):
    """I_t = sum_{m1+m2+m3=0} C^{0,0} c^{m1} c^{m2} c^{m3}, channel-summed."""
    l1, l2, l3 = t
    total = 0j
    for ch in range(c.channels):
        total += _contract(t, c.block(l1, ch), c.block(l2, ch), c.block(l3, ch))
    return total


def bispectrum_vector(c, triplets):
    vals = np.array([bispectrum_component(c, t) for t in triplets], complex)
    return BispectrumVector(triplets, vals)


def perturbation_sensitivity(c, delta, triplets):
    """First-order change of each component: the three placement terms only."""
    if delta.l_max != c.l_max or delta.channels != c.channels:
        raise ValueError("perturbation must match the signal's l_max and channels")
    out = np.zeros(len(triplets), complex)
    for i, t in enumerate(triplets):
        l1, l2, l3 = t
        for ch in range(c.channels):
            b1, b2, b3 = c.block(l1, ch), c.block(l2, ch), c.block(l3, ch)
            d1, d2, d3 = delta.block(l1, ch), delta.block(l2, ch), delta.block(l3, ch)
            out[i] += (_contract(t, d1, b2, b3) + _contract(t, b1, d2, b3)
                       + _contract(t, b1, b2, d3))
    return out


def power_spectrum_features(c, L):
    """Second-order rotation-invariant baseline features.

    Per degree l in L, the cross-channel Gram of the degree block:
    diagonal entries are the per-channel powers P(l) = sum_m |c_l^m|^2,
    off-diagonal entries the complex cross-channel correlations (re, im).
    Single-channel input reduces exactly to [P(l)].
    """
    Ls = sorted(set(int(l) for l in L))
    if Ls and (Ls[0] < 0 or Ls[-1] > c.l_max):
        raise ValueError("degree set must lie within [0, l_max]")
    out = []
    for l in Ls:
        B = c.block(l)
        G = B @ B.conj().T
        out.extend(G[i, i].real for i in range(c.channels))
        for i in range(c.channels):
            for j in range(i + 1, c.channels):
                out.append(G[i, j].real)
                out.append(G[i, j].imag)
    return np.array(out)


def bispectrum_to_csv(vec, path):
    with open(path, "w") as fh:
        fh.write("l1,l2,l3,re,im\n")
        for t, v in zip(vec.triplets, vec.values):
            fh.write("%d,%d,%d,%.12g,%.12g\n" % (t[0], t[1], t[2], v.real, v.imag))
