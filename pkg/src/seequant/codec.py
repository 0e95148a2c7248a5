"""Grayscale image ingestion, block tiling and the SEEQ container codec.

Container layout (all integers little-endian)::

    b"SEEQ" | version u8 | flags u8 | width height P block_w block_h depth (u32 each)
    | depth x u32 level codebook sizes | payload

The payload is a single MSB-first bitstream, zero-padded to a whole byte:
first every level's codebook (row-major samples, ``P`` bits unsigned at level
0, ``P + 1`` bits two's complement at residual levels when flag bit 0 is set),
then one index stream per level. Level ``L``'s stream holds one
``ceil(log2(N_L + 1))``-bit index for every block still alive at that level,
in block order; index 0 stops the block, ``j + 1`` selects codevector ``j``.
All blocks are alive at level 0, and a block stays alive while it keeps
receiving non-zero indices.
"""
from __future__ import annotations

from dataclasses import dataclass
import math
import struct

import numpy as np

from .errors import DecodeError, InvalidInputError, ParseError
from .see import SeeConfig, greedy_minimize
from .vq import VectorSet, compression_ratio

MAGIC = b"SEEQ"
VERSION = 1
FLAG_SIGNED_RESIDUALS = 0x01
_HEADER = struct.Struct("<4sBB6I")


@dataclass
class ImageGrid:
    pixels: np.ndarray  # (height, width) integers
    P: int = 8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.size == 0:
            raise InvalidInputError("an image needs a non-empty 2-D pixel grid")
        if px.min() < 0 or px.max() > (1 << self.P) - 1:
            raise InvalidInputError(f"samples must lie in [0, {(1 << self.P) - 1}]")
        self.pixels = px.astype(np.int64)

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def maxval(self):
        return (1 << self.P) - 1


@dataclass(frozen=True)
class BlockSpec:
    block_w: int = 4
    block_h: int = 4
    pad_value: int = 0

    def __post_init__(self):
        if self.block_w < 1 or self.block_h < 1:
            raise InvalidInputError("block dimensions must be positive")

    @property
    def k(self):
        return self.block_w * self.block_h

    @classmethod
    def parse(cls, text, pad_value=0):
        """Parse ``"4x4"`` (width x height)."""
        try:
            w, h = (int(t) for t in text.lower().split("x"))
        except ValueError:
            raise InvalidInputError(f"block size must look like WxH, got {text!r}") from None
        return cls(w, h, pad_value)


# -- PGM ----------------------------------------------------------------------

def _pgm_token(data, pos):
    """Next whitespace-delimited header token, skipping ``#`` comments."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise ParseError("unterminated comment in PGM header", pos)
            pos = end + 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ParseError("truncated PGM header", start)
    return data[start:pos], start, pos


def load_pgm(data):
    """Parse a binary (P5) PGM byte string."""
    if data[:2] != b"P5":
        raise ParseError(f"not a binary PGM: magic {data[:2]!r}", 0)
    pos = 2
    values = []
    for name in ("width", "height", "maxval"):
        tok, start, pos = _pgm_token(data, pos)
        if not tok.isdigit():
            raise ParseError(f"PGM {name} is not a decimal integer: {tok!r}", start)
        values.append(int(tok))
    width, height, maxval = values
    if width < 1 or height < 1:
        raise ParseError("PGM dimensions must be positive", 2)
    if not 0 < maxval <= 65535:
        raise ParseError(f"PGM maxval {maxval} outside 1..65535", start)
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ParseError("missing whitespace after PGM maxval", pos)
    pos += 1
    wide = maxval > 255
    need = width * height * (2 if wide else 1)
    if len(data) - pos < need:
        raise ParseError(f"truncated PGM raster: need {need} bytes, have {len(data) - pos}", pos)
    raw = np.frombuffer(data, dtype=">u2" if wide else np.uint8, count=width * height, offset=pos)
    pixels = raw.reshape(height, width).astype(np.int64)
    if pixels.max() > maxval:
        bad = int(np.argmax(pixels.ravel() > maxval))
        raise ParseError(f"sample exceeds maxval {maxval}", pos + bad * (2 if wide else 1))
    return ImageGrid(pixels, 16 if wide else 8)


def save_pgm(image):
    maxval = image.maxval if image.P in (8, 16) else (255 if image.P < 8 else 65535)
    header = f"P5\n{image.width} {image.height}\n{maxval}\n".encode("ascii")
    dtype = ">u2" if maxval > 255 else np.uint8
    return header + image.pixels.astype(dtype).tobytes()


# -- blocks ---------------------------------------------------------------------

def tile(grid, block_w, block_h, pad_value=0):
    """Split a 2-D array into row-major flattened blocks, padding right and bottom."""
    h, w = grid.shape
    bx, by = -(-w // block_w), -(-h // block_h)
    padded = np.full((by * block_h, bx * block_w), pad_value, dtype=grid.dtype)
    padded[:h, :w] = grid
    blocks = padded.reshape(by, block_h, bx, block_w).transpose(0, 2, 1, 3)
    return blocks.reshape(by * bx, block_h * block_w)


def untile(vectors, width, height, block_w, block_h):
    bx, by = -(-width // block_w), -(-height // block_h)
    if vectors.shape != (bx * by, block_w * block_h):
        raise InvalidInputError(
            f"expected {bx * by} blocks of {block_w * block_h} samples, got {vectors.shape}")
    grid = vectors.reshape(by, bx, block_h, block_w).transpose(0, 2, 1, 3)
    return grid.reshape(by * block_h, bx * block_w)[:height, :width]


def extract_blocks(image, spec):
    if not 0 <= spec.pad_value <= image.maxval:
        raise InvalidInputError("pad value must be a valid sample")
    return VectorSet(tile(image.pixels, spec.block_w, spec.block_h, spec.pad_value), image.P)


def round_half_away(x):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def assemble_blocks(vectors, width, height, spec, P=8):
    """Inverse of :func:`extract_blocks`: crop padding, round and clamp samples."""
    data = vectors.vectors if isinstance(vectors, VectorSet) else np.asarray(vectors)
    grid = untile(data, width, height, spec.block_w, spec.block_h)
    pixels = np.clip(round_half_away(grid), 0, (1 << P) - 1).astype(np.int64)
    return ImageGrid(pixels, P)


# -- bit packing ----------------------------------------------------------------

class BitWriter:
    def __init__(self):
        self.bits = []

    def write(self, values, width):
        if width == 0:
            return
        values = np.asarray(values, dtype=np.int64).ravel() & ((1 << width) - 1)
        shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
        self.bits.append(((values[:, None] >> shifts) & 1).astype(np.uint8).ravel())

    def getvalue(self):
        if not self.bits:
            return b""
        return np.packbits(np.concatenate(self.bits)).tobytes()


class BitReader:
    def __init__(self, data, offset):
        self.bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8, offset=offset))
        self.offset = offset
        self.pos = 0

    def read(self, count, width):
        if width == 0:
            return np.zeros(count, dtype=np.int64)
        end = self.pos + count * width
        if end > len(self.bits):
            raise DecodeError("truncated container payload", self.offset + len(self.bits) // 8)
        chunk = self.bits[self.pos:end].reshape(count, width).astype(np.int64)
        self.pos = end
        return (chunk << np.arange(width - 1, -1, -1, dtype=np.int64)).sum(axis=1)

    def finish(self):
        used = -(-self.pos // 8)
        if used * 8 != len(self.bits):
            raise DecodeError(
                f"container has {len(self.bits) // 8 - used} trailing bytes", self.offset + used)
        if self.bits[self.pos:].any():
            raise DecodeError("non-zero padding bits", self.offset + self.pos // 8)


def index_width(n):
    return math.ceil(math.log2(n + 1))


# -- container ------------------------------------------------------------------

@dataclass
class Container:
    width: int
    height: int
    P: int
    block_w: int
    block_h: int
    codebooks: list      # per level (N_L, k) integer arrays
    index_streams: list  # per level 1-D arrays over the blocks alive at that level
    flags: int = FLAG_SIGNED_RESIDUALS
    version: int = VERSION

    @property
    def depth(self):
        return len(self.codebooks)

    @property
    def k(self):
        return self.block_w * self.block_h

    @property
    def block_count(self):
        return -(-self.width // self.block_w) * -(-self.height // self.block_h)

    def sample_width(self, level):
        return self.P + 1 if level > 0 and self.flags & FLAG_SIGNED_RESIDUALS else self.P

    def to_bytes(self):
        head = _HEADER.pack(MAGIC, self.version, self.flags, self.width, self.height, self.P,
                            self.block_w, self.block_h, self.depth)
        head += struct.pack(f"<{self.depth}I", *(len(c) for c in self.codebooks))
        w = BitWriter()
        for level, cb in enumerate(self.codebooks):
            width = self.sample_width(level)
            lo = -(1 << (width - 1)) if level > 0 else 0
            hi = (1 << (width - 1)) - 1 if level > 0 else (1 << width) - 1
            if cb.size and (cb.min() < lo or cb.max() > hi):
                raise InvalidInputError(f"level {level} codebook sample outside {width}-bit range")
            w.write(cb, width)
        for level, stream in enumerate(self.index_streams):
            w.write(stream, index_width(len(self.codebooks[level])))
        return head + w.getvalue()

    @classmethod
    def from_bytes(cls, data):
        if len(data) < _HEADER.size:
            raise DecodeError("truncated container header", len(data))
        magic, version, flags, width, height, P, bw, bh, depth = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise DecodeError(f"bad magic {magic!r}", 0)
        if version != VERSION:
            raise DecodeError(f"unsupported container version {version}", 4)
        if min(width, height, P, bw, bh) < 1 or P > 16:
            raise DecodeError("invalid header field", 6)
        sizes_end = _HEADER.size + 4 * depth
        if len(data) < sizes_end:
            raise DecodeError("truncated level table", len(data))
        sizes = struct.unpack_from(f"<{depth}I", data, _HEADER.size)
        if depth == 0 or min(sizes) < 1:
            raise DecodeError("container must hold at least one non-empty level", _HEADER.size)
        c = cls(width, height, P, bw, bh, [], [], flags, version)
        r = BitReader(data, sizes_end)
        for level, n in enumerate(sizes):
            width_bits = c.sample_width(level)
            raw = r.read(n * c.k, width_bits)
            if level > 0 and flags & FLAG_SIGNED_RESIDUALS:
                raw = np.where(raw >= 1 << (width_bits - 1), raw - (1 << width_bits), raw)
            c.codebooks.append(raw.reshape(n, c.k))
        alive = c.block_count
        for level, n in enumerate(sizes):
            stream = r.read(alive, index_width(n))
            if stream.size and stream.max() > n:
                raise DecodeError(f"level {level} index out of range", sizes_end + r.pos // 8)
            if level == 0 and stream.size and stream.min() == 0:
                raise DecodeError("stop symbol at level 0", sizes_end)
            c.index_streams.append(stream)
            alive = int(np.count_nonzero(stream))
        r.finish()
        return c

    def paths(self):
        """Per level, each block's selected codevector index or -1 once stopped."""
        M = self.block_count
        alive = np.arange(M)
        out = []
        for stream in self.index_streams:
            sel = np.full(M, -1, dtype=np.int64)
            sel[alive] = stream - 1
            out.append(sel)
            alive = alive[stream > 0]
        return out


def encode(image, spec=BlockSpec(), config=None):
    """Build a greedy SEE tree over the image blocks and serialize it.

    Returns ``(container, tree)``.
    """
    config = config or SeeConfig()
    if config.strategy != "greedy":
        raise InvalidInputError("the codec only supports the greedy strategy")
    config = SeeConfig(**{**config.__dict__, "zero_tolerance": 0.0, "monotone_refinement": True})
    blocks = extract_blocks(image, spec).vectors
    M = len(blocks)
    tree = greedy_minimize(blocks, config)

    codebooks, selections = [], []
    # walk the tree level by level, tracking each block's residual for singleton leaves
    residual = blocks.copy()
    frontier = [(tree, np.arange(M))]
    level = 0
    while frontier and (config.max_depth is None or level < config.max_depth):
        cvs, sel, nxt = [], np.full(M, -1, dtype=np.int64), []
        for sub, ids in frontier:
            if not sub.nodes:
                if len(ids) == 1 and not sub.truncated:
                    sel[ids[0]] = len(cvs)
                    cvs.append(residual[ids[0]].copy())
                continue
            for node in sub.nodes:
                sel[ids[node.members]] = len(cvs)
                cvs.append(np.asarray(node.codevector, dtype=np.int64))
                if node.residual_count:
                    nxt.append((node.children, ids[node.residual_members]))
        if not cvs:
            break
        cb = np.array(cvs, dtype=np.int64)
        chosen = sel >= 0
        residual[chosen] -= cb[sel[chosen]]
        codebooks.append(cb)
        selections.append(sel)
        frontier = nxt
        level += 1

    streams, alive = [], np.arange(M)
    for sel in selections:
        s = sel[alive] + 1
        streams.append(s)
        alive = alive[s > 0]
    container = Container(image.width, image.height, image.P, spec.block_w, spec.block_h,
                          codebooks, streams)
    return container, tree


def reconstruct_blocks(container, depth=None):
    levels = container.depth if depth is None else min(depth, container.depth)
    acc = np.zeros((container.block_count, container.k), dtype=np.int64)
    for cb, sel in zip(container.codebooks[:levels], container.paths()[:levels]):
        chosen = sel >= 0
        acc[chosen] += cb[sel[chosen]]
    return acc


def decode(container, depth=None):
    """Reconstruct the image from the first ``depth`` levels (all by default)."""
    if isinstance(container, (bytes, bytearray)):
        container = Container.from_bytes(bytes(container))
    if depth is not None and depth < 1:
        raise InvalidInputError("decode depth must be >= 1")
    spec = BlockSpec(container.block_w, container.block_h)
    return assemble_blocks(reconstruct_blocks(container, depth), container.width,
                           container.height, spec, container.P)


def container_see_bits(container):
    """SEE value of the tree implied by the container's index paths."""
    paths = np.stack(container.paths(), axis=1) if container.depth else np.zeros((0, 0))

    def level_cost(rows, level):
        M = len(rows)
        if M <= 1 or level >= paths.shape[1]:
            return 0.0
        total = 0.0
        for j in np.unique(paths[rows, level]):
            members = rows[paths[rows, level] == j]
            p = len(members) / M
            nonzero = members[paths[members, level + 1] >= 0] if level + 1 < paths.shape[1] \
                else members[:0]
            total += p * (math.log2(1.0 / p) + 1.0) + len(nonzero) / M * level_cost(nonzero, level + 1)
        return total

    return level_cost(np.arange(len(paths)), 0)


@dataclass
class CompressionReport:
    T: float
    actual_ratio: float
    D: float
    see_bits: float
    delta: float
    psnr: float

    def rows(self):
        return [("T", self.T), ("actual_ratio", self.actual_ratio), ("D", self.D),
                ("see_bits", self.see_bits), ("delta", self.delta), ("psnr", self.psnr)]


def psnr(original, decoded):
    err = original.pixels.astype(float) - decoded.pixels.astype(float)
    mse = float((err * err).mean())
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(original.maxval ** 2 / mse)


def report(image, container, depth=None):
    if (image.width, image.height) != (container.width, container.height):
        raise InvalidInputError("image and container dimensions differ")
    decoded = decode(container, depth)
    spec = BlockSpec(container.block_w, container.block_h)
    # identical padding on both sides keeps the padded region out of D and delta
    a = tile(image.pixels, spec.block_w, spec.block_h).astype(float)
    b = tile(decoded.pixels, spec.block_w, spec.block_h).astype(float)
    norms = np.sqrt(((a - b) ** 2).sum(axis=1))
    D = 0.0
    for d in norms:
        D += float(d)
    raw_bits = image.width * image.height * image.P
    return CompressionReport(
        T=compression_ratio(image.P, container.k, len(container.codebooks[0]), container.block_count),
        actual_ratio=raw_bits / (8 * len(container.to_bytes())),
        D=D,
        see_bits=container_see_bits(container),
        delta=float(norms.max()),
        psnr=psnr(image, decoded),
    )
