"""Fourier compression gate: unitary DFT operators and per-block SEE profiles.

A codec is viewed as an operator ``f`` with the image as its fixed point,
``x = f(x)``. For the Fourier case ``f(x) = E^H M E x`` where ``E`` is the
unitary 2-D DFT and ``M`` a 0/1 mask over frequencies (all ones for the plain
round trip). The gate residual ``||x - f(x)||`` then equals the energy of the
discarded coefficients.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
from typing import Optional

import numpy as np

from .codec import ImageGrid, BlockSpec, tile
from .errors import InvalidInputError
from .see import SeeConfig, see_estimate

BAND_COUNT = 8
DEFAULT_STEP_DIVISOR = 64


@dataclass
class SpectrumGrid:
    coefficients: np.ndarray  # (height, width) complex, unshifted (DC at [0, 0])

    @property
    def width(self):
        return self.coefficients.shape[1]

    @property
    def height(self):
        return self.coefficients.shape[0]

    def centered(self):
        return np.fft.fftshift(self.coefficients)


@dataclass
class CompressionOperator:
    kind: str = "identity"
    keep_mask: Optional[np.ndarray] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("identity", "dft_roundtrip", "dft_truncate"):
            raise InvalidInputError(f"unknown operator kind {self.kind!r}")
        if self.kind == "dft_truncate":
            if self.keep_mask is None:
                raise InvalidInputError("a truncation operator needs a keep mask")
            self.keep_mask = np.asarray(self.keep_mask, dtype=bool)
        if self.name is None:
            self.name = self.kind

    def mask_for(self, shape):
        if self.kind == "dft_truncate":
            if self.keep_mask.shape != shape:
                raise InvalidInputError(f"keep mask {self.keep_mask.shape} does not match {shape}")
            return self.keep_mask
        return np.ones(shape, dtype=bool)

    def apply(self, x):
        """``f(x)`` as a complex array."""
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x.astype(complex)
        X = np.fft.fft2(x, norm="ortho")
        return np.fft.ifft2(X * self.mask_for(x.shape), norm="ortho")


@dataclass(frozen=True)
class SpectrumQuantizer:
    step: Optional[float] = None  # None: per-component default from the coefficient range

    def __post_init__(self):
        if self.step is not None and not self.step > 0:
            raise InvalidInputError("quantizer step must be positive")

    def step_for(self, values):
        if self.step is not None:
            return self.step
        mag = np.abs(values)
        step = (mag.max() - mag.min()) / DEFAULT_STEP_DIVISOR if mag.size else 0.0
        return step if step > 0 else 1.0

    def quantize(self, values, step=None):
        step = self.step_for(values) if step is None else step
        return np.rint(np.asarray(values, dtype=float) / step).astype(np.int64)


def _pixels(image):
    if isinstance(image, ImageGrid):
        return image.pixels.astype(float)
    return np.asarray(image, dtype=float)


def dft2(image):
    """Unitary 2-D DFT, so that ``E^H E`` is exactly the identity."""
    return SpectrumGrid(np.fft.fft2(_pixels(image), norm="ortho"))


def idft2(spectrum, keep_imag=False):
    coeffs = spectrum.coefficients if isinstance(spectrum, SpectrumGrid) else np.asarray(spectrum)
    x = np.fft.ifft2(coeffs, norm="ortho")
    return x if keep_imag else x.real


def lowpass_mask(height, width, radius):
    """Keep frequencies within ``radius`` (in bins) of DC, in unshifted layout."""
    fy = np.fft.fftfreq(height) * height
    fx = np.fft.fftfreq(width) * width
    return fy[:, None] ** 2 + fx[None, :] ** 2 <= radius ** 2


def dc_only_mask(height, width):
    mask = np.zeros((height, width), dtype=bool)
    mask[0, 0] = True
    return mask


def gate_residual(op, image):
    x = _pixels(image)
    diff = x - op.apply(x)
    return float(np.sqrt((np.abs(diff) ** 2).sum()))


@dataclass
class BlockProfileRow:
    block_x: int
    block_y: int
    band: int
    re_bits: float
    im_bits: float

    @property
    def total_bits(self):
        return self.re_bits + self.im_bits


def _band(cx, cy, center, r_max):
    if r_max == 0:
        return 0
    r = math.hypot(cx - center[0], cy - center[1])
    return min(BAND_COUNT - 1, int(math.floor(BAND_COUNT * r / r_max)))


def spectrum_block_see(image, spec=BlockSpec(), quant=SpectrumQuantizer(), config=None,
                       threads=1):
    """SEE bits of the quantized real and imaginary parts of each spectrum block.

    The spectrum is centred (DC in the middle) and tiled like image blocks;
    rows come back sorted by radial band, then block position.
    """
    config = config or SeeConfig()
    spectrum = dft2(image).centered()
    h, w = spectrum.shape
    re, im = spectrum.real, spectrum.imag
    re_q = tile(quant.quantize(re), spec.block_w, spec.block_h)
    im_q = tile(quant.quantize(im), spec.block_w, spec.block_h)

    bx = -(-w // spec.block_w)
    # fftshift puts DC at (w // 2, h // 2); pixel centres are at integer coordinates
    center = (w // 2, h // 2)
    centers = [((i % bx) * spec.block_w + (spec.block_w - 1) / 2,
                (i // bx) * spec.block_h + (spec.block_h - 1) / 2) for i in range(len(re_q))]
    r_max = max(math.hypot(cx - center[0], cy - center[1]) for cx, cy in centers)

    def bits(values):
        return see_estimate(values, config)[0]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        re_bits = list(pool.map(bits, re_q))
        im_bits = list(pool.map(bits, im_q))

    rows = [BlockProfileRow(i % bx, i // bx, _band(*centers[i], center, r_max), re_bits[i], im_bits[i])
            for i in range(len(re_q))]
    rows.sort(key=lambda r: (r.band, r.block_y, r.block_x))
    return rows


def dc_block(image, spec=BlockSpec()):
    """Block coordinates holding the DC coefficient of the centred spectrum."""
    h, w = _pixels(image).shape
    return (w // 2) // spec.block_w, (h // 2) // spec.block_h


def band_means(rows):
    out = {}
    for band in sorted({r.band for r in rows}):
        vals = [r.total_bits for r in rows if r.band == band]
        out[band] = sum(vals) / len(vals)
    return out


@dataclass
class GateRow:
    name: str
    residual: float
    bits: float
    ratio: float


def gate_entropy_table(image, ops, quant=SpectrumQuantizer(), config=None):
    """Measure each operator: gate residual, SEE bit estimate of what it keeps, ratio.

    The identity keeps the raw samples and is charged their raw size. Fourier
    operators are charged ``n * (SEE(Re) + SEE(Im))`` over the ``n`` retained,
    quantized coefficients. Rows are sorted by bits (stable).
    """
    config = config or SeeConfig()
    x = _pixels(image)
    P = image.P if isinstance(image, ImageGrid) else 8
    raw_bits = x.size * P
    X = np.fft.fft2(x, norm="ortho")
    rows = []
    for op in ops:
        residual = gate_residual(op, x)
        if op.kind == "identity":
            bits = float(raw_bits)
        else:
            kept = X[op.mask_for(x.shape)]
            re = quant.quantize(kept.real, quant.step_for(X.real))
            im = quant.quantize(kept.imag, quant.step_for(X.imag))
            bits = len(kept) * (see_estimate(re, config)[0] + see_estimate(im, config)[0])
        ratio = raw_bits / bits if bits > 0 else math.inf
        rows.append(GateRow(op.name, residual, bits, ratio))
    rows.sort(key=lambda r: r.bits)
    return rows
