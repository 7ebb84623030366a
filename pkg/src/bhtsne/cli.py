"""Command-line surface: embed, profile, plot, kl.

Every command is deterministic given its flags, input files and seed.
``embed`` writes the embedding plus a JSON run manifest (config echo,
input checksum, final KL, wall times) and a JSON timing report; a
finished run can be reproduced bitwise from its manifest.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

from . import __version__
from .io import load_labels, load_matrix, save_matrix, sniff_format
from .optimizer import STAGES, TsneConfig, kl_divergence, run
from .plot import render_svg_scatter


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="dataset (CSV or BHTM binary)")
    p.add_argument("--format", choices=["csv", "bin"],
                   help="input format (default: sniffed from the file)")
    p.add_argument("--has-header", action="store_true",
                   help="skip the first CSV line")
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--learning-rate", type=float, default=200.0)
    p.add_argument("--exaggeration", type=float, default=12.0)
    p.add_argument("--exaggeration-iters", type=int, default=250)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: all available)")
    p.add_argument("--precision", choices=["f32", "f64"], default="f64")
    p.add_argument("--kl-every", type=int, default=0,
                   help="report approximate KL every this many iterations")


def _config_from_args(args) -> TsneConfig:
    return TsneConfig(
        perplexity=args.perplexity, theta=args.theta, n_iter=args.iters,
        early_exaggeration=args.exaggeration,
        exaggeration_iters=args.exaggeration_iters,
        learning_rate=args.learning_rate, seed=args.seed,
        precision=args.precision, threads=args.threads,
        kl_every=args.kl_every)


def _run_pipeline(args, parser):
    try:
        cfg = _config_from_args(args).validate()
    except ValueError as exc:
        parser.error(str(exc))  # exits 2
    x = load_matrix(args.input, format=args.format, precision=args.precision,
                    has_header=args.has_header)
    e, timings, kl = run(x, cfg)
    return x, cfg, e, timings, kl


def _manifest(args, cfg, timings, kl) -> dict:
    return {
        "tool": "bhtsne",
        "version": __version__,
        "input": {
            "path": str(args.input),
            "sha256": _sha256(args.input),
            "format": args.format or sniff_format(args.input),
            "has_header": bool(args.has_header),
        },
        "config": {
            "perplexity": cfg.perplexity,
            "theta": cfg.theta,
            "n_iter": cfg.n_iter,
            "early_exaggeration": cfg.early_exaggeration,
            "exaggeration_iters": cfg.exaggeration_iters,
            "learning_rate": cfg.learning_rate,
            "kl_every": cfg.kl_every,
        },
        "seed": cfg.seed,
        "precision": cfg.precision,
        "threads": cfg.threads,
        "wall_s": timings.total_wall_s,
        "stage_totals_s": {s: timings.total(s) for s in STAGES},
        "kl": kl,
        "kl_history": timings.kl_history,
    }


def cmd_embed(args, parser) -> int:
    if args.from_manifest:
        with open(args.from_manifest) as fh:
            m = json.load(fh)
        args.input = m["input"]["path"]
        args.format = m["input"]["format"]
        args.has_header = m["input"]["has_header"]
        c = m["config"]
        args.perplexity = c["perplexity"]
        args.theta = c["theta"]
        args.iters = c["n_iter"]
        args.exaggeration = c["early_exaggeration"]
        args.exaggeration_iters = c["exaggeration_iters"]
        args.learning_rate = c["learning_rate"]
        args.kl_every = c.get("kl_every", 0)
        args.seed = m["seed"]
        args.precision = m["precision"]
        checksum = _sha256(args.input)
        if checksum != m["input"]["sha256"]:
            raise ValueError(
                f"input {args.input} does not match manifest checksum")
    x, cfg, e, timings, kl = _run_pipeline(args, parser)
    out = args.out
    save_matrix(e.y, out, format="csv" if str(out).endswith(".csv") else "bin")
    manifest = _manifest(args, cfg, timings, kl)
    with open(f"{out}.manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    with open(f"{out}.timings.json", "w") as fh:
        json.dump(timings.report(), fh, indent=2)
    print(f"wrote {out} ({e.n_points} points), kl={kl:.6f}")
    return 0


def cmd_profile(args, parser) -> int:
    _, _, e, timings, kl = _run_pipeline(args, parser)
    report = timings.report()
    grand = sum(report[s]["total_s"] for s in STAGES)
    print(f"{'step':<12}{'seconds':>12}{'% of total':>12}")
    for s in STAGES:
        total = report[s]["total_s"]
        pct = 100.0 * total / grand if grand else 0.0
        print(f"{s:<12}{total:>12.4f}{pct:>11.1f}%")
    print(f"{'total':<12}{grand:>12.4f}{100.0:>11.1f}%")
    print(f"wall={timings.total_wall_s:.4f}s kl={kl:.6f}")
    with open(args.timings_out, "w") as fh:
        json.dump(report, fh, indent=2)
    if args.out:
        save_matrix(e.y, args.out,
                    format="csv" if str(args.out).endswith(".csv") else "bin")
    return 0


def cmd_plot(args, parser) -> int:
    emb = load_matrix(args.input, format=args.format)
    if emb.n_dims != 2:
        raise ValueError(f"embedding must have 2 columns, got {emb.n_dims}")
    labels = load_labels(args.labels) if args.labels else None
    svg = render_svg_scatter(emb.data, labels)
    with open(args.out, "w") as fh:
        fh.write(svg)
    print(f"wrote {args.out} ({emb.n_points} points)")
    return 0


def cmd_kl(args, parser) -> int:
    from .affinity import calibrate_perplexity, symmetrize
    from .knn import knn_exact
    from .optimizer import _set_threads
    import math

    if args.perplexity <= 1:
        parser.error(f"perplexity must be > 1, got {args.perplexity}")
    _set_threads(args.threads)
    x = load_matrix(args.input, format=args.format, precision=args.precision,
                    has_header=args.has_header)
    emb = load_matrix(args.embedding, precision=args.precision)
    if emb.n_points != x.n_points:
        raise ValueError(
            f"embedding has {emb.n_points} points but dataset has "
            f"{x.n_points}")
    if emb.n_dims != 2:
        raise ValueError(f"embedding must have 2 columns, got {emb.n_dims}")
    k = min(int(math.floor(3 * args.perplexity)), x.n_points - 1)
    graph = knn_exact(x, k)
    pr = calibrate_perplexity(graph, args.perplexity)
    p = symmetrize(pr, graph, dtype=x.data.dtype)
    kl = kl_divergence(p, emb.data, mode="exact")
    print(f"kl={kl:.6f}")
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump({"kl": kl, "n": x.n_points,
                       "perplexity": args.perplexity}, fh)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bhtsne",
        description="Barnes-Hut t-SNE: embed datasets, profile the pipeline, "
                    "plot embeddings, evaluate KL divergence.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_embed = sub.add_parser("embed", help="embed a dataset into 2-D")
    _add_run_flags(p_embed)
    p_embed.add_argument("--out", required=True,
                         help="embedding output (.csv or binary)")
    p_embed.add_argument("--from-manifest", default=None,
                         help="re-run a previous embed from its manifest")
    p_embed.set_defaults(func=cmd_embed)

    p_prof = sub.add_parser("profile", help="embed while timing each step")
    _add_run_flags(p_prof)
    p_prof.add_argument("--out", default=None, help="optional embedding output")
    p_prof.add_argument("--timings-out", default="timings.json")
    p_prof.set_defaults(func=cmd_profile)

    p_plot = sub.add_parser("plot", help="render an embedding as an SVG")
    p_plot.add_argument("--input", required=True, help="embedding file")
    p_plot.add_argument("--format", choices=["csv", "bin"], default=None)
    p_plot.add_argument("--labels", default=None,
                        help="one integer class id per line")
    p_plot.add_argument("--out", required=True, help="SVG output path")
    p_plot.set_defaults(func=cmd_plot)

    p_kl = sub.add_parser("kl", help="exact KL of a stored embedding")
    p_kl.add_argument("--input", required=True, help="dataset file")
    p_kl.add_argument("--embedding", required=True, help="embedding file")
    p_kl.add_argument("--format", choices=["csv", "bin"], default=None)
    p_kl.add_argument("--has-header", action="store_true")
    p_kl.add_argument("--perplexity", type=float, default=30.0)
    p_kl.add_argument("--precision", choices=["f32", "f64"], default="f64")
    p_kl.add_argument("--threads", type=int, default=None)
    p_kl.add_argument("--json-out", default=None)
    p_kl.set_defaults(func=cmd_kl)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
