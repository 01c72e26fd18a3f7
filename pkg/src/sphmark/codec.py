"""Keyed payload embedding in rotation-invariant harmonic subspaces.

The payload rides on a small set of spherical-harmonic degrees.  Each
payload bit gets a key-derived coefficient pattern confined to those
degrees; detection works on third-order invariant features of the
coefficients, so the decoded bits survive arbitrary rotations of the
stego image.
"""

import json
import math
import struct
import warnings
from dataclasses import dataclass, fields

import numpy as np

from . import coupling, grid, harmonics


class EmbeddingStrengthWarning(UserWarning):
    pass


# ------------------------------------------------------------ configuration

@dataclass(frozen=True)
class CodecConfig:
    l_max: int = 16
    L_embed: tuple = (6, 8, 14)
    k: int = 32
    alpha: float = 0.1          # strength, as a multiple of cover RMS on L_embed
    groups: int = 0             # feature groups; 0 means one group per bit
    channels: int = 3
    use_geometric_mask: bool = True
    use_texture_mask: bool = True
    mask_floor: float = 0.25
    mask_compensation: bool = True
    compensation_iterations: int = 8
    n_contexts: int = 24
    context_pairs: int = 16

    def __post_init__(self):
        object.__setattr__(self, "L_embed",
                           tuple(sorted(set(int(l) for l in self.L_embed))))
        if not self.L_embed:
            raise ValueError("L_embed must not be empty")
        if self.L_embed[0] < 1:
            # degree 0 is a pure average: no angular structure to key on
            raise ValueError("L_embed must not contain degree 0")
        if self.L_embed[-1] > self.l_max:
            raise ValueError("L_embed exceeds l_max=%d" % self.l_max)
        if self.l_max < 1:
            raise ValueError("l_max must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        if not 0.0 <= self.mask_floor <= 1.0:
            raise ValueError("mask_floor must lie in [0, 1]")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.groups < 0 or self.n_contexts < 1 or self.context_pairs < 1:
            raise ValueError("groups/n_contexts/context_pairs out of range")
        if self.k % self.n_groups:
            raise ValueError("k=%d must be a multiple of groups=%d"
                             % (self.k, self.n_groups))
        if self.compensation_iterations < 0:
            raise ValueError("compensation_iterations must be >= 0")

    @property
    def n_groups(self):
        return self.k if self.groups == 0 else self.groups

    @property
    def capacity(self):
        """Max key-separable bits: degree-block orthogonality caps k at
        channels*(2*min(L_embed)+1)."""
        return self.channels * (2 * min(self.L_embed) + 1)


def config_to_dict(cfg):
    return {f.name: (list(cfg.L_embed) if f.name == "L_embed"
                     else getattr(cfg, f.name)) for f in fields(CodecConfig)}


def config_from_dict(d):
    known = {f.name for f in fields(CodecConfig)}
    bad = sorted(set(d) - known)
    if bad:
        raise ValueError("unknown config keys: %s" % ", ".join(bad))
    return CodecConfig(**d)


# ------------------------------------------------------------ payload text

def parse_payload(text, k):
    """Payload from a bit string of length k or a hex string (0x optional)."""
    t = str(text).strip().lower()
    if t.startswith("0x"):
        t = t[2:]
        as_hex = True
    else:
        as_hex = not (len(t) == k and set(t) <= {"0", "1"})
    if not as_hex:
        return np.array([int(ch) for ch in t], np.int64)
    ndig = (k + 3) // 4
    if len(t) != ndig or not all(ch in "0123456789abcdef" for ch in t):
        raise ValueError("payload must be %d bits or %d hex digits" % (k, ndig))
    v = int(t, 16)
    if v >> k:
        raise ValueError("payload value does not fit in %d bits" % k)
    return np.array([(v >> (k - 1 - i)) & 1 for i in range(k)], np.int64)


def format_payload(bits):
    bits = np.asarray(bits).astype(np.int64)
    k = bits.size
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return "%0*x" % ((k + 3) // 4, v)


def random_payload(seed, k=32):
    return np.random.default_rng(seed).integers(0, 2, k)


def check_key(key):
    key = int(key)
    if not 0 <= key < 2 ** 64:
        raise ValueError("key must be a 64-bit unsigned integer")
    return key


# ------------------------------------------------------------ pattern bank

def coefficient_rms(data, degrees):
    """RMS of the coefficient entries on the given degrees, all channels."""
    data = np.atleast_2d(np.asarray(data))
    tot = 0.0
    n = 0
    for l in degrees:
        b = data[:, l * l:(l + 1) * (l + 1)]
        tot += float(np.sum(np.abs(b) ** 2))
        n += b.size
    return math.sqrt(tot / n)


def _conj_symmetric_row(rng, l):
    # 2l+1 real degrees of freedom -> conjugate-symmetric complex block
    dof = rng.standard_normal(2 * l + 1)
    bv = np.zeros(2 * l + 1, complex)
    bv[l] = dof[l]
    for m in range(1, l + 1):
        bv[l + m] = (dof[l + m] + 1j * dof[l - m]) / math.sqrt(2.0)
        bv[l - m] = ((-1.0) ** m) * np.conj(bv[l + m])
    return bv


_PATTERNS = {}


def generate_patterns(key, cfg=None):
    """Key-derived payload patterns, shape (k, channels, n_coeffs) complex.

    Supported only on the embed degrees, conjugate-symmetric per channel,
    and orthonormal as a set: every per-degree sub-block family is made
    orthogonal across bits by modified Gram-Schmidt, then degrees are
    weighted equally.  Raises if k exceeds what that construction can
    keep independent.
    """
    cfg = cfg or CodecConfig()
    key = check_key(key)
    ck = (key, cfg.L_embed, cfg.l_max, cfg.k, cfg.n_groups, cfg.channels)
    if ck in _PATTERNS:
        return _PATTERNS[ck]
    if cfg.k > cfg.capacity:
        raise ValueError(
            "k=%d payload bits cannot be kept orthogonal on degrees %r with "
            "%d channel(s); at most %d are achievable"
            % (cfg.k, cfg.L_embed, cfg.channels, cfg.capacity))
    sw = _slice_profiles(cfg)
    rng = np.random.default_rng(np.random.SeedSequence([key, 0xA11CE]))
    nlm = harmonics.n_coeffs(cfg.l_max)
    P = np.zeros((cfg.k, cfg.channels, nlm), complex)
    nL = len(cfg.L_embed)
    for li, l in enumerate(cfg.L_embed):
        V = np.zeros((cfg.k, cfg.channels, 2 * l + 1), complex)
        for kk in range(cfg.k):
            bv = _conj_symmetric_row(rng, l)
            prof = sw[kk % cfg.n_groups, li, :]
            V[kk] = prof[:, None] * bv[None, :]
        Vf = V.reshape(cfg.k, -1)
        for i in range(cfg.k):
            for j in range(i):
                Vf[i] -= np.vdot(Vf[j], Vf[i]) * Vf[j]
            nrm = np.linalg.norm(Vf[i])
            if nrm < 1e-12:
                raise ValueError("pattern construction degenerated; reduce k")
            Vf[i] /= nrm
        blk = Vf.reshape(cfg.k, cfg.channels, 2 * l + 1) / math.sqrt(nL)
        P[:, :, l * l:(l + 1) * (l + 1)] = blk
    P.setflags(write=False)
    _PATTERNS[ck] = P
    return P


# ------------------------------------------------------------ keyed features
#
# Detection features are built from the same trivial-projection couplings
# as the plain invariant vector, but evaluated on key-free channel mixes:
# each of G groups sees its own per-degree channel slice, and each group
# additionally couples against quadratic "context" vectors formed from the
# non-embed degrees.  All entries are rotation invariants.

class _FeatureBank:
    __slots__ = ("L_embed", "l_max", "channels", "G", "n_ctx", "n_pairs",
                 "trips", "tensors", "sw", "ctx_pairs", "ctx_weights",
                 "roster", "n_features")

    def __init__(self, cfg):
        self.L_embed = cfg.L_embed
        self.l_max = cfg.l_max
        self.channels = cfg.channels
        self.G = cfg.n_groups
        self.n_ctx = cfg.n_contexts
        self.n_pairs = cfg.context_pairs
        self.trips = coupling.admissible_triplets(cfg.L_embed, cfg.l_max)
        if not self.trips:
            raise ValueError("embed degrees admit no invariant couplings")
        self.tensors = {t: _dense_tensor(t) for t in self.trips}
        self.sw = _slice_profiles(cfg)
        self._build_contexts_plan(cfg)
        self._build_roster()
        self.n_features = len(self.trips) * self.G * (1 + self.n_pairs)

    def _build_contexts_plan(self, cfg):
        non_embed = [l for l in range(1, cfg.l_max + 1) if l not in cfg.L_embed]
        rng = np.random.default_rng(
            np.random.SeedSequence([0xC0DE, self.n_ctx, self.channels]))
        self.ctx_pairs = {}
        self.ctx_weights = {}
        for l in self.L_embed:
            ps = [(la, lb) for la in non_embed for lb in non_embed
                  if la <= lb and abs(la - lb) <= l <= la + lb
                  and (la + lb + l) % 2 == 0]
            if not ps:
                raise ValueError("no context couplings reach degree %d" % l)
            sel = rng.integers(0, len(ps), self.n_ctx)
            wch = rng.standard_normal((self.n_ctx, 2, self.channels))
            wch /= np.linalg.norm(wch, axis=2, keepdims=True)
            self.ctx_pairs[l] = [ps[s] for s in sel]
            self.ctx_weights[l] = wch

    def _build_roster(self):
        rng = np.random.default_rng(
            np.random.SeedSequence([0x9057, self.G, self.n_pairs, self.n_ctx]))
        self.roster = {}
        for ti, t in enumerate(self.trips):
            slots = (np.arange(self.G) + ti) % 3
            pairs = rng.integers(0, self.n_ctx, size=(self.G, self.n_pairs, 2))
            self.roster[t] = (slots, pairs)


_SLICES = {}


def _slice_profiles(cfg):
    """Per-(group, embed degree) unit channel-mix rows, key independent."""
    ck = (cfg.n_groups, len(cfg.L_embed), cfg.channels)
    if ck not in _SLICES:
        rng = np.random.default_rng(
            np.random.SeedSequence([0x51ABE, cfg.n_groups, cfg.channels]))
        S = rng.standard_normal((cfg.n_groups, len(cfg.L_embed), cfg.channels))
        S /= np.linalg.norm(S, axis=2, keepdims=True)
        S.setflags(write=False)
        _SLICES[ck] = S
    return _SLICES[ck]


def _dense_tensor(t):
    l1, l2, l3 = t
    C, g, valid = coupling._projection_table(t)
    B = np.zeros((2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1))
    ii, jj = np.nonzero(valid)
    B[ii, jj, g[ii, jj]] = C[ii, jj]
    return B


_CG = {}


def _cg_tensor(la, lb, l):
    # Clebsch-Gordan coupling (la x lb -> l), dense over (m1, m2, m)
    ck = (la, lb, l)
    if ck not in _CG:
        T = np.zeros((2 * la + 1, 2 * lb + 1, 2 * l + 1))
        for i, m1 in enumerate(range(-la, la + 1)):
            for j, m2 in enumerate(range(-lb, lb + 1)):
                m = m1 + m2
                if abs(m) <= l:
                    T[i, j, m + l] = (((-1.0) ** (la - lb + m))
                                      * math.sqrt(2 * l + 1)
                                      * coupling.wigner_3j(la, lb, l, m1, m2, -m))
        _CG[ck] = T
    return _CG[ck]


_BANKS = {}


def _bank(cfg):
    ck = (cfg.L_embed, cfg.l_max, cfg.channels, cfg.n_groups,
          cfg.n_contexts, cfg.context_pairs)
    if ck not in _BANKS:
        _BANKS[ck] = _FeatureBank(cfg)
    return _BANKS[ck]


def feature_length(cfg=None):
    return _bank(cfg or CodecConfig()).n_features


def _block(data, ch, l):
    return data[ch, l * l:(l + 1) * (l + 1)]


def _context_rows(bank, data):
    ctx = {}
    for l in bank.L_embed:
        rows = np.empty((bank.n_ctx, 2 * l + 1), complex)
        wch = bank.ctx_weights[l]
        for a, (la, lb) in enumerate(bank.ctx_pairs[l]):
            u = np.zeros(2 * la + 1, complex)
            v = np.zeros(2 * lb + 1, complex)
            for ch in range(bank.channels):
                u += wch[a, 0, ch] * _block(data, ch, la)
                v += wch[a, 1, ch] * _block(data, ch, lb)
            out = np.einsum("ijm,i,j->m", _cg_tensor(la, lb, l), u, v,
                            optimize=True)
            rows[a] = out / (np.linalg.norm(out) + 1e-30)
        ctx[l] = rows
    return ctx


def _features(bank, data):
    """Invariant feature vector, group-major: all of one group's entries
    are contiguous (len(trips) pure couplings, then the context couplings)."""
    ctx = _context_rows(bank, data)
    Y = {}
    for li, l in enumerate(bank.L_embed):
        blocks = np.stack([_block(data, ch, l) for ch in range(bank.channels)])
        Y[l] = bank.sw[:, li, :] @ blocks  # (G, 2l+1)
    T = len(bank.trips)
    pure = np.empty((T, bank.G))
    ctxf = np.empty((T, bank.G, bank.n_pairs))
    for ti, t in enumerate(bank.trips):
        l1, l2, l3 = t
        B = bank.tensors[t]
        pure[ti] = np.einsum("ijm,gi,gj,gm->g", B, Y[l1], Y[l2], Y[l3],
                             optimize=True).real
        slots, pairs = bank.roster[t]
        rows = np.empty((bank.G, bank.n_pairs))
        for s in range(3):
            gsel = np.where(slots == s)[0]
            if gsel.size == 0:
                continue
            A = pairs[gsel, :, 0]
            Bb = pairs[gsel, :, 1]
            # one leg carries the keyed group mix, the other two carry
            # selected context rows; which leg rotates through s
            if s == 0:
                BY = np.einsum("ijm,xi->xjm", B, Y[l1][gsel], optimize=True)
                tjm = np.einsum("xjm,xpm->xpj", BY, ctx[l3][Bb], optimize=True)
                r = np.einsum("xpj,xpj->xp", tjm, ctx[l2][A], optimize=True).real
            elif s == 1:
                BY = np.einsum("ijm,xj->xim", B, Y[l2][gsel], optimize=True)
                tim = np.einsum("xim,xpm->xpi", BY, ctx[l3][Bb], optimize=True)
                r = np.einsum("xpi,xpi->xp", tim, ctx[l1][A], optimize=True).real
            else:
                BY = np.einsum("ijm,xm->xij", B, Y[l3][gsel], optimize=True)
                tij = np.einsum("xij,xpi->xpj", BY, ctx[l1][A], optimize=True)
                r = np.einsum("xpj,xpj->xp", tij, ctx[l2][Bb], optimize=True).real
            rows[gsel] = r
        ctxf[ti] = rows
    per_group = np.concatenate(
        [pure.T, ctxf.transpose(1, 0, 2).reshape(bank.G, -1)], axis=1)
    return per_group.ravel()


def features_from_coeffs(c, cfg=None):
    cfg = cfg or CodecConfig()
    if isinstance(c, harmonics.ShCoefficients):
        if c.l_max != cfg.l_max:
            raise ValueError("coefficient l_max does not match config")
        data = c.data
    else:
        data = np.atleast_2d(np.asarray(c, complex))
    if data.shape[0] != cfg.channels:
        raise ValueError("channel count does not match config")
    return _features(_bank(cfg), data)


def compute_features(x, cfg=None):
    """Rotation-invariant detection features of an image."""
    cfg = cfg or CodecConfig()
    c = harmonics.forward_sht(np.asarray(x, float), cfg.l_max)
    return features_from_coeffs(c, cfg)


# ------------------------------------------------------------ side info

@dataclass
class SignatureSet:
    """Non-blind detection side information produced by embed().

    Holds the reference feature vector, per-bit matched-filter directions,
    the cover coefficients (so directions can be re-derived under any
    candidate key), and the realized coefficient change."""
    config: CodecConfig
    alpha: float
    z0: np.ndarray
    directions: np.ndarray
    cover_coeffs: np.ndarray
    delta_coeffs: np.ndarray

    def validate(self):
        cfg = self.config
        F = feature_length(cfg)
        nlm = harmonics.n_coeffs(cfg.l_max)
        if self.z0.shape != (F,) or self.directions.shape != (cfg.k, F):
            raise ValueError("signature arrays do not match configuration")
        if (self.cover_coeffs.shape != (cfg.channels, nlm)
                or self.delta_coeffs.shape != (cfg.channels, nlm)):
            raise ValueError("signature coefficients do not match configuration")
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise ValueError("signature strength must be positive")

    def save(self, base):
        base = _strip_sig_suffix(str(base))
        self.validate()
        meta = {
            "format": "sphmark-signature",
            "version": 1,
            "config": config_to_dict(self.config),
            "alpha": self.alpha,
            "feature_length": int(self.z0.size),
        }
        with open(base + ".sig.json", "w") as fh:
            json.dump(meta, fh, sort_keys=True, indent=2)
            fh.write("\n")
        with open(base + ".sig.bin", "wb") as fh:
            fh.write(b"SPHS" + struct.pack("<I", 1))
            for arr in (self.z0, self.directions):
                fh.write(np.ascontiguousarray(arr, "<f8").tobytes())
            for arr in (self.cover_coeffs, self.delta_coeffs):
                ri = np.stack([arr.real, arr.imag], axis=-1)
                fh.write(np.ascontiguousarray(ri, "<f8").tobytes())

    @classmethod
    def load(cls, base):
        base = _strip_sig_suffix(str(base))
        with open(base + ".sig.json") as fh:
            meta = json.load(fh)
        if meta.get("format") != "sphmark-signature" or meta.get("version") != 1:
            raise ValueError("not a recognized signature file: %s" % base)
        cfg = config_from_dict(meta["config"])
        with open(base + ".sig.bin", "rb") as fh:
            raw = fh.read()
        if raw[:4] != b"SPHS" or struct.unpack("<I", raw[4:8])[0] != 1:
            raise ValueError("signature binary header mismatch")
        F = int(meta["feature_length"])
        nlm = harmonics.n_coeffs(cfg.l_max)
        counts = [F, cfg.k * F, cfg.channels * nlm * 2, cfg.channels * nlm * 2]
        if len(raw) != 8 + 8 * sum(counts):
            raise ValueError("signature binary is truncated or oversized")
        vals = np.frombuffer(raw, "<f8", offset=8)
        z0, dflat, cov, dlt = np.split(vals, np.cumsum(counts)[:-1])
        cov = cov.reshape(cfg.channels, nlm, 2)
        dlt = dlt.reshape(cfg.channels, nlm, 2)
        sig = cls(cfg, float(meta["alpha"]), z0.copy(),
                  dflat.reshape(cfg.k, F).copy(),
                  cov[..., 0] + 1j * cov[..., 1],
                  dlt[..., 0] + 1j * dlt[..., 1])
        sig.validate()
        return sig


def _strip_sig_suffix(base):
    for suf in (".sig.json", ".sig.bin", ".sig"):
        if base.endswith(suf):
            return base[:-len(suf)]
    return base


def make_signature(cover_coeffs, key, cfg, alpha=None):
    """Signature for given cover coefficients under a candidate key."""
    cfg = cfg or CodecConfig()
    data = np.atleast_2d(np.asarray(cover_coeffs, complex))
    bank = _bank(cfg)
    P = generate_patterns(key, cfg)
    a = alpha if alpha is not None else cfg.alpha * coefficient_rms(data, cfg.L_embed)
    z0 = _features(bank, data)
    d = np.empty((cfg.k, bank.n_features))
    for kk in range(cfg.k):
        d[kk] = (_features(bank, data + a * P[kk])
                 - _features(bank, data - a * P[kk]))
    return z0, d, a


# ------------------------------------------------------------ embed/extract

def embedding_mask(x, cfg=None):
    """Perceptual embedding mask in [mask floor context, 1], shape (H, W)."""
    cfg = cfg or CodecConfig()
    x = np.asarray(x, float)
    H = x.shape[0]
    M = np.ones((H, 2 * H))
    if cfg.use_geometric_mask:
        M = M * grid.geometric_mask(H)[:, None]
    if cfg.use_texture_mask:
        M = M * grid.texture_mask(x, cfg.mask_floor)
    return M


def _embed_band_mask(cfg):
    emb = np.zeros(harmonics.n_coeffs(cfg.l_max), bool)
    for l in cfg.L_embed:
        emb[l * l:(l + 1) * (l + 1)] = True
    return emb


def embed(cover, payload_bits, key, cfg=None):
    """Embed k payload bits; returns (stego image, SignatureSet).

    The requested coefficient change is confined to the embed degrees.
    The spatial change is shaped by the perceptual/geometric mask, and a
    fixed-point correction loop re-solves for the masked pattern whose
    projection onto the embed degrees matches the target, so masking does
    not erode the payload.  Pixels are clamped to [0, 1] at the end."""
    cfg = cfg or CodecConfig()
    x = np.asarray(cover, float)
    grid.check_image(x)
    bits = np.asarray(payload_bits)
    if bits.shape != (cfg.k,) or not np.isin(bits, (0, 1)).all():
        raise ValueError("payload must be %d bits of 0/1" % cfg.k)
    c = harmonics.forward_sht(x, cfg.l_max)
    if c.channels != cfg.channels:
        raise ValueError("image has %d channel(s), config wants %d"
                         % (c.channels, cfg.channels))
    H = x.shape[0]
    P = generate_patterns(key, cfg)
    a = cfg.alpha * coefficient_rms(c.data, cfg.L_embed)
    target = a * np.einsum("k,kcn->cn", 2.0 * bits - 1.0, P)
    M = embedding_mask(x, cfg)
    Mb = M if x.ndim == 2 else M[..., None]
    mbar = float(M.mean())
    emb = _embed_band_mask(cfg)
    dc = target / mbar
    iters = cfg.compensation_iterations if cfg.mask_compensation else 0
    for _ in range(iters):
        dx = harmonics.inverse_sht(
            harmonics.ShCoefficients(dc, cfg.l_max, real=True), H)
        realized = harmonics.forward_sht(Mb * dx, cfg.l_max).data
        dc = dc + np.where(emb[None, :], target - realized, 0.0) / mbar
    dx = harmonics.inverse_sht(
        harmonics.ShCoefficients(dc, cfg.l_max, real=True), H)
    stego = np.clip(x + Mb * dx, 0.0, 1.0)

    c_after = harmonics.forward_sht(stego, cfg.l_max)
    delta = c_after.data - c.data
    got = np.where(emb[None, :], delta, 0.0)
    want = np.where(emb[None, :], target, 0.0)
    short = np.linalg.norm(got - want) / np.linalg.norm(want)
    if short > 0.10:
        warnings.warn(
            "mask/clamp removed %.0f%% of the payload energy; consider a "
            "larger alpha or a weaker mask" % (100.0 * short),
            EmbeddingStrengthWarning, stacklevel=2)

    z0, d, _ = make_signature(c.data, key, cfg, alpha=a)
    side = SignatureSet(cfg, a, z0, d, c.data.copy(), delta)
    return stego, side


def embed_coefficients(c, payload_bits, key, cfg=None):
    """Coefficient-domain embed (no mask, no clamp): c + alpha * sum bits."""
    cfg = cfg or CodecConfig()
    bits = np.asarray(payload_bits)
    if bits.shape != (cfg.k,) or not np.isin(bits, (0, 1)).all():
        raise ValueError("payload must be %d bits of 0/1" % cfg.k)
    wrap = isinstance(c, harmonics.ShCoefficients)
    data = c.data if wrap else np.atleast_2d(np.asarray(c, complex))
    P = generate_patterns(key, cfg)
    a = cfg.alpha * coefficient_rms(data, cfg.L_embed)
    out = data + a * np.einsum("k,kcn->cn", 2.0 * bits - 1.0, P)
    if wrap:
        return harmonics.ShCoefficients(out, cfg.l_max, real=c.real)
    return out


def extract_nonblind(y, side, key=None):
    """Decode bits from an image given its SignatureSet.

    Per-bit statistic is the matched-filter response
    (z - z0) . d_k / |d_k|^2, which is near +-0.5 for a clean embed at
    the recorded strength.  Passing a key re-derives the directions from
    the stored cover coefficients under that key (a wrong key yields
    near-zero statistics and chance-level bits)."""
    side.validate()
    cfg = side.config
    c = harmonics.forward_sht(np.asarray(y, float), cfg.l_max)
    if c.channels != cfg.channels:
        raise ValueError("image channels do not match the signature")
    z = _features(_bank(cfg), c.data)
    if key is None:
        z0, d = side.z0, side.directions
    else:
        z0, d, _ = make_signature(side.cover_coeffs, key, cfg, alpha=side.alpha)
    dn = np.sum(d * d, axis=1)
    if (dn < 1e-30).any():
        raise ValueError("degenerate detection directions in signature")
    stats = (z - z0) @ d.T / dn
    bits = (stats > 0).astype(np.int64)
    return bits, stats


def resolution_scale_embed(cover, payload_bits, key, cfg=None, native_h=64):
    """Embed into an image of any resolution via the native-grid residual.

    The cover is resampled to the native height, embedded there, and the
    stego-minus-cover residual is resampled back onto the original grid
    and added.  At the native resolution this reduces to plain embed()."""
    cfg = cfg or CodecConfig()
    x = np.asarray(cover, float)
    grid.check_image(x)
    if x.shape[0] == native_h:
        return embed(x, payload_bits, key, cfg)
    xn = grid.resample(x, native_h)
    stego_n, side = embed(xn, payload_bits, key, cfg)
    resid = grid.resample(stego_n - xn, x.shape[0])
    return np.clip(x + resid, 0.0, 1.0), side
