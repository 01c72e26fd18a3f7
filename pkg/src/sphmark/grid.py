"""Equirectangular (ERP) sampling geometry.

Pixel <-> direction maps, solid-angle quadrature, masks, bilinear
resampling, and binary PPM I/O.  An ERP image is a plain ndarray of
shape (H, 2H) or (H, 2H, 3) with float samples in [0, 1]; row 0 is the
north-pole row, theta grows downward, phi grows with the column index.
"""

import numpy as np

__all__ = [
    "pixel_center_direction", "grid_angles", "grid_directions",
    "quadrature_weights", "geometric_mask", "texture_mask",
    "sample_bilinear", "resample", "read_ppm", "write_ppm",
    "check_image",
]


def check_image(x):
    """Validate ERP shape/range conventions; returns (H, W, channels)."""
    x = np.asarray(x)
    if x.ndim == 2:
        H, W = x.shape
        ch = 1
    elif x.ndim == 3 and x.shape[2] in (1, 3):
        H, W, ch = x.shape
    else:
        raise ValueError("expected (H, 2H) or (H, 2H, {1|3}) array, got %r" % (x.shape,))
    if W != 2 * H:
        raise ValueError("ERP width must be 2*height, got %dx%d" % (H, W))
    if not np.isfinite(x).all():
        raise ValueError("image contains non-finite samples")
    return H, W, ch


def pixel_center_direction(row, col, H):
    """(theta, phi) of a pixel center; theta = pi(row+.5)/H, phi = 2pi(col+.5)/(2H)."""
    row = np.asarray(row)
    col = np.asarray(col)
    if np.any(row < 0) or np.any(row >= H) or np.any(col < 0) or np.any(col >= 2 * H):
        raise ValueError("pixel index out of range for H=%d" % H)
    theta = np.pi * (row + 0.5) / H
    phi = 2.0 * np.pi * (col + 0.5) / (2 * H)
    return theta, phi


def grid_angles(H):
    """Per-row theta (H,) and per-column phi (2H,) at pixel centers."""
    theta = np.pi * (np.arange(H) + 0.5) / H
    phi = 2.0 * np.pi * (np.arange(2 * H) + 0.5) / (2 * H)
    return theta, phi


def grid_directions(H):
    """Unit vectors (H, 2H, 3) of all pixel centers; z is the polar axis."""
    theta, phi = grid_angles(H)
    st, ct = np.sin(theta), np.cos(theta)
    d = np.empty((H, 2 * H, 3))
    d[:, :, 0] = st[:, None] * np.cos(phi)[None, :]
    d[:, :, 1] = st[:, None] * np.sin(phi)[None, :]
    d[:, :, 2] = ct[:, None]
    return d


def quadrature_weights(H):
    """Per-row pixel weight for the S^2 integral; Sum over all pixels = 4pi exactly.

    Fejer-1 row weights at the pixel-center colatitudes, scaled by the
    longitude step.  Unlike per-cell area differences these integrate every
    band-limited product up to the grid's Nyquist degree to machine
    precision, which the transform contracts (orthonormality, Parseval,
    round trip) rely on.  Positive for every row.
    """
    if H < 2:
        raise ValueError("H must be >= 2")
    theta = np.pi * (2 * np.arange(H) + 1) / (2 * H)
    w = np.ones(H)
    for m in range(1, H // 2 + 1):
        w -= 2.0 * np.cos(2 * m * theta) / (4 * m * m - 1)
    w *= 2.0 / H                     # sum_i w_i = 2 = int_{-1}^{1} dcos
    return w * (2.0 * np.pi / (2 * H))


def geometric_mask(H):
    """Per-row sin(theta_i): suppresses strength near the poles, ~1 at the equator."""
    theta, _ = grid_angles(H)
    return np.sin(theta)


def texture_mask(x, strength_floor=0.25, tau=0.08):
    """Gradient-magnitude mask in [strength_floor, 1].

    Central differences with longitudinal wrap and latitudinal clamp,
    magnitude averaged over channels, squashed by 1 - exp(-g/tau) so flat
    regions sit at the floor and textured regions approach 1.
    """
    H, W, ch = check_image(x)
    if not (0.0 <= strength_floor <= 1.0):
        raise ValueError("strength_floor must be in [0, 1]")
    f = x if x.ndim == 3 else x[:, :, None]
    # d/drow: clamp at poles (one-sided at the boundary rows)
    up = np.vstack([f[:1], f[:-1]])
    dn = np.vstack([f[1:], f[-1:]])
    gr = 0.5 * (dn - up)
    # d/dcol: periodic
    gc = 0.5 * (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1))
    g = np.sqrt(gr * gr + gc * gc).mean(axis=2)
    s = 1.0 - np.exp(-g / tau)
    return strength_floor + (1.0 - strength_floor) * s


def sample_bilinear(x, theta, phi):
    """Sample an ERP image at arbitrary directions.

    Fractional pixel coordinates from the inverse of
    pixel_center_direction; columns wrap modulo W, rows clamp at the
    first/last row centers (no cross-pole interpolation).
    """
    H, W, ch = check_image(x)
    f = x if x.ndim == 3 else x[:, :, None]
    theta = np.asarray(theta, float)
    phi = np.mod(np.asarray(phi, float), 2.0 * np.pi)
    r = theta * H / np.pi - 0.5
    c = phi * W / (2.0 * np.pi) - 0.5
    r0 = np.floor(r).astype(int)
    c0 = np.floor(c).astype(int)
    dr = (r - r0)[..., None]
    dc = (c - c0)[..., None]
    r0c = np.clip(r0, 0, H - 1)
    r1c = np.clip(r0 + 1, 0, H - 1)
    c0m = np.mod(c0, W)
    c1m = np.mod(c0 + 1, W)
    out = (f[r0c, c0m] * (1 - dr) * (1 - dc) + f[r0c, c1m] * (1 - dr) * dc
           + f[r1c, c0m] * dr * (1 - dc) + f[r1c, c1m] * dr * dc)
    return out if x.ndim == 3 else out[..., 0]


def resample(x, H_out):
    """Bilinear resample to (H_out, 2*H_out) by sampling at the new pixel centers."""
    if H_out < 1:
        raise ValueError("H_out must be >= 1")
    theta, phi = grid_angles(H_out)
    return sample_bilinear(x, theta[:, None] * np.ones(2 * H_out)[None, :],
                           np.ones(H_out)[:, None] * phi[None, :])


# ---------------------------------------------------------------- PPM I/O

def write_ppm(path, x):
    """Binary PPM (P6, 8-bit); value = round(sample*255), gamma-less."""
    H, W, ch = check_image(x)
    f = x if x.ndim == 3 else np.repeat(x[:, :, None], 3, axis=2)
    if f.shape[2] == 1:
        f = np.repeat(f, 3, axis=2)
    b = np.clip(np.rint(f * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (W, H))
        fh.write(b.tobytes())


def read_ppm(path):
    """Read binary P6 into float (H, W, 3) in [0,1]; value = byte/255."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P6"):
        raise ValueError("%s: not a binary PPM (P6)" % path)
    # header: magic, width, height, maxval, single whitespace, then raster
    pos, fields = 2, []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":           # comment line
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1
    W, H, maxval = fields
    if maxval != 255:
        raise ValueError("%s: only maxval 255 supported" % path)
    raster = np.frombuffer(data, np.uint8, count=H * W * 3, offset=pos)
    if raster.size != H * W * 3:
        raise ValueError("%s: truncated raster" % path)
    img = raster.reshape(H, W, 3).astype(float) / 255.0
    check_image(img)
    return img
