"""Radial-band SEE profile of an image spectrum and a small compression-gate table."""
import argparse
from pathlib import Path

import numpy as np

from seequant import codec
from seequant.spectral import (CompressionOperator, band_means, dc_only_mask, gate_entropy_table,
                               lowpass_mask, spectrum_block_see)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("pgm", nargs="?", default=None, help="defaults to a 16x16 linear gradient")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    if args.pgm:
        image = codec.load_pgm(Path(args.pgm).read_bytes())
    else:
        y, x = np.mgrid[0:16, 0:16]
        image = codec.ImageGrid(x * 8 + y * 7)

    rows = spectrum_block_see(image, threads=args.threads)
    print("band  mean_bits")
    for band, m in band_means(rows).items():
        print(f"{band:4d}  {m:9.3f}")

    h, w = image.pixels.shape
    ops = [CompressionOperator("identity"), CompressionOperator("dft_roundtrip"),
           CompressionOperator("dft_truncate", lowpass_mask(h, w, max(h, w) / 8), "lowpass"),
           CompressionOperator("dft_truncate", dc_only_mask(h, w), "dc_only")]
    print("\noperator       residual      bits    ratio")
    for r in gate_entropy_table(image, ops):
        print(f"{r.name:13s} {r.residual:9.2f} {r.bits:9.1f} {r.ratio:8.2f}")


if __name__ == "__main__":
    main()
