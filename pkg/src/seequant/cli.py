"""``seequant`` command line.

Exit codes: 0 on success, 2 on parse or validation errors, 3 when a size or
depth cap is exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import codec, objects, spectral
from .errors import InvalidInputError, RefusalError
from .see import SeeConfig, greedy_minimize, tree_storage_bits, tree_to_dict
from .vq import (EntropyObjectiveParams, classify_all, compression_ratio, coverage_radius,
                 distortion, entropy_objective)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_metrics(rows, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "value"])
    for name, value in rows:
        w.writerow([name, _fmt(value)])
    _emit(buf.getvalue(), out)


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _read_pgm(path):
    return codec.load_pgm(Path(path).read_bytes())


def _read_points(path):
    rows = [r for r in csv.reader(Path(path).read_text().splitlines()) if r and any(c.strip() for c in r)]
    try:
        pts = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: non-numeric coordinate ({exc})") from None
    if pts.ndim != 2 or len(pts) == 0:
        raise InvalidInputError(f"{path}: expected one point per row with equal column counts")
    return objects.PointObject(pts)


def _config(args, **extra):
    return SeeConfig(max_depth=getattr(args, "depth", None), seed=args.seed, **extra)


def cmd_encode(args):
    image = _read_pgm(args.inp)
    spec = codec.BlockSpec.parse(args.block, args.pad)
    container, _ = codec.encode(image, spec, _config(args))
    Path(args.out).write_bytes(container.to_bytes())


def cmd_decode(args):
    container = codec.Container.from_bytes(Path(args.inp).read_bytes())
    Path(args.out).write_bytes(codec.save_pgm(codec.decode(container, args.depth)))


def cmd_analyze(args):
    image = _read_pgm(args.inp)
    spec = codec.BlockSpec.parse(args.block, args.pad)
    vs = codec.extract_blocks(image, spec)
    tree = greedy_minimize(vs.vectors, _config(args))
    rows = [("M", vs.M), ("k", vs.k), ("P", vs.value_bits), ("raw_bits", vs.M * vs.k * vs.value_bits),
            ("see_bits", tree.total_bits), ("tree_depth", tree.depth),
            ("storage_bits", tree_storage_bits(tree, vs.value_bits, vs.k, vs.M))]
    if tree.nodes:
        codebook = np.array([n.codevector for n in tree.nodes])
        assignment = classify_all(vs.vectors, codebook)
        params = EntropyObjectiveParams(args.a, args.b)
        rows += [("N", len(codebook)),
                 ("T", compression_ratio(vs.value_bits, vs.k, len(codebook), vs.M)),
                 ("D", distortion(vs.vectors, codebook, assignment)),
                 ("delta", coverage_radius(vs.vectors, codebook, assignment)),
                 ("entropy_objective", entropy_objective(vs.vectors, codebook, params))]
    _write_metrics(rows, args.out)
    if args.tree:
        Path(args.tree).write_text(json.dumps(tree_to_dict(tree), indent=2) + "\n")


def cmd_spectrum(args):
    image = _read_pgm(args.inp)
    spec = codec.BlockSpec.parse(args.block)
    quant = spectral.SpectrumQuantizer(args.step)
    rows = spectral.spectrum_block_see(image, spec, quant, SeeConfig(seed=args.seed), args.threads)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["block_x", "block_y", "band", "re_bits", "im_bits", "total_bits"])
    for r in rows:
        w.writerow([r.block_x, r.block_y, r.band, _fmt(r.re_bits), _fmt(r.im_bits), _fmt(r.total_bits)])
    _emit(buf.getvalue(), args.out)


def cmd_object_chi(args):
    a, b = _read_points(args.a), _read_points(args.b)
    if args.search:
        params, chi = objects.best_match(a, b)
    else:
        params = objects.MatchParams(args.alpha, args.gamma)
        chi = objects.chi_distance(a, b, params)
    _write_metrics([("alpha", params.alpha), ("gamma", params.gamma), ("chi", chi)], args.out)


def cmd_object_see(args):
    try:
        data = json.loads(Path(args.inp).read_text())
        objs = [objects.PointObject(np.array(o, dtype=float)) for o in data]
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise InvalidInputError(f"{args.inp}: expected a JSON array of point arrays ({exc})") from None
    _write_metrics([("objects", len(objs)), ("see_bits", objects.object_see(objs))], args.out)


def cmd_object_partition(args):
    o = _read_points(args.inp)
    part, bits = objects.min_partition_see(o, args.max_cell)
    _write_metrics([("points", len(o)), ("cells", len(part.cells)), ("see_bits", bits),
                    ("labels", " ".join(map(str, part.labels)))], args.out)


def build_parser():
    p = argparse.ArgumentParser(prog="seequant", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=1, help="cap on worker threads")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, block=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=argparse.SUPPRESS)
        if block:
            sp.add_argument("--block", default="4x4", help="block size WxH")

    e = sub.add_parser("encode", help="compress a P5 PGM into a SEEQ container")
    e.add_argument("--in", dest="inp", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--depth", type=int, default=None)
    e.add_argument("--pad", type=int, default=0)
    common(e)
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="reconstruct a PGM from a SEEQ container")
    d.add_argument("--in", dest="inp", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--depth", type=int, default=None)
    d.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    d.set_defaults(func=cmd_decode)

    a = sub.add_parser("analyze", help="SEE tree and flat-VQ metrics of an image's blocks")
    a.add_argument("--in", dest="inp", required=True)
    a.add_argument("--a", type=float, default=1.0)
    a.add_argument("--b", type=float, default=1.0)
    a.add_argument("--out", default=None)
    a.add_argument("--tree", default=None)
    a.add_argument("--depth", type=int, default=None)
    a.add_argument("--pad", type=int, default=0)
    common(a)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("spectrum", help="per-block SEE profile of the centred spectrum")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", default=None)
    s.add_argument("--step", type=float, default=None)
    common(s)
    s.set_defaults(func=cmd_spectrum)

    o = sub.add_parser("object", help="object calculus")
    osub = o.add_subparsers(dest="object_command", required=True)
    c = osub.add_parser("chi", help="chi distance between two point CSV files")
    c.add_argument("--a", required=True)
    c.add_argument("--b", required=True)
    c.add_argument("--alpha", type=float, default=1.0)
    c.add_argument("--gamma", type=int, default=0)
    c.add_argument("--search", action="store_true", help="search all matchings and scales")
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_object_chi)
    se = osub.add_parser("see", help="object SEE of a JSON array of point arrays")
    se.add_argument("--in", dest="inp", required=True)
    se.add_argument("--out", default=None)
    se.set_defaults(func=cmd_object_see)
    pa = osub.add_parser("partition", help="minimum-SEE partition of a point CSV")
    pa.add_argument("--in", dest="inp", required=True)
    pa.add_argument("--max-cell", type=int, default=None)
    pa.add_argument("--out", default=None)
    pa.set_defaults(func=cmd_object_partition)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("seequant: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except RefusalError as exc:
        print(f"seequant: refused: {exc}", file=sys.stderr)
        return 3
    except (InvalidInputError, OSError) as exc:
        print(f"seequant: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
