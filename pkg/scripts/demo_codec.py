"""Encode a PGM, then print size and PSNR at every decode depth."""
import argparse
from pathlib import Path

from seequant import codec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("pgm", nargs="?", default=str(Path(__file__).parents[1] / "tests/data/camera64.pgm"))
    ap.add_argument("--block", default="4x4")
    args = ap.parse_args()

    image = codec.load_pgm(Path(args.pgm).read_bytes())
    container, tree = codec.encode(image, codec.BlockSpec.parse(args.block))
    blob = container.to_bytes()
    raw = image.width * image.height * image.P
    print(f"{image.width}x{image.height}, P={image.P}: raw {raw // 8} bytes, container {len(blob)} bytes")
    print(f"tree depth {container.depth}, codebook sizes per level {[len(c) for c in container.codebooks]}")
    print(f"SEE estimate of the blocks: {tree.total_bits:.3f} bits per block")
    print("depth  psnr_db  D  delta")
    for d in range(1, container.depth + 1):
        r = codec.report(image, container, d)
        print(f"{d:5d}  {r.psnr:7.2f}  {r.D:.1f}  {r.delta:.2f}")


if __name__ == "__main__":
    main()
