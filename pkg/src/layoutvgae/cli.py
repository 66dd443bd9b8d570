"""Command-line entry points."""
from __future__ import annotations

import argparse
import glob
import json
import logging
import re
import sys
from pathlib import Path


from .config import TOGGLES, ModelConfig
from .evalsuite import build_tables, evaluate_graphs
from .synthetic import GeneratorConfig, generate_corpus, read_corpus, write_corpus
from .trainer import (Trainer, config_fingerprint, encode_means, interpolate, load_model,
                      prior_codes, sample)


def _cmd_generate(args):
    cfg = GeneratorConfig(seed=args.seed, count=args.count, schema=args.schema)
    write_corpus(generate_corpus(cfg), args.out)


def _cmd_train(args):
    graphs = read_corpus(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.resume:
        trainer = Trainer.resume(args.resume, graphs, out)
    else:
        cfg = ModelConfig.load(args.config)
        if (out / "log.jsonl").exists():
            (out / "log.jsonl").unlink()
        trainer = Trainer(cfg, graphs, out)
    trainer.cfg.save(out / "config.txt")
    trainer.fit()


def _cmd_sample(args):
    model = load_model(args.ckpt)
    graphs, _ = sample(model, args.count, args.seed)
    write_corpus(graphs, args.out)


def _cmd_interpolate(args):
    from .renderer import emit_interpolation_strip

    model = load_model(args.ckpt)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    z_node, z_edge = prior_codes(model, 2 * args.pairs, args.seed)
    for p in range(args.pairs):
        a, b = 2 * p, 2 * p + 1
        graphs = interpolate(model, (z_node[a], z_edge[a]), (z_node[b], z_edge[b]), args.steps,
                             id_prefix=f"pair{p:03d}")
        write_corpus(graphs, out / f"pair{p:03d}.jsonl")
        emit_interpolation_strip(graphs, out / f"pair{p:03d}.svg", model.cfg.schema)


def _cmd_evaluate(args):
    model = load_model(args.ckpt)
    real = read_corpus(args.data)
    generated, _ = sample(model, len(real), args.seed)
    report = evaluate_graphs(real, generated, model.cfg.schema,
                             config_fingerprint=config_fingerprint(model.cfg)).to_dict()
    report["toggles"] = model.cfg.toggles()
    Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def _cmd_project(args):
    from .renderer import project_latents

    model = load_model(args.ckpt)
    if args.data:
        codes = encode_means(model, read_corpus(args.data)[:args.count])
    else:
        codes = prior_codes(model, args.count, args.seed)[0].double().numpy()
    project_latents(codes, args.out, method=args.method, seed=args.seed)


def _safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text) or "graph"


def _cmd_render(args):
    from .graph import LabelSchema
    from .renderer import emit_plan_svg, graph_to_plan

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kwargs = {}
    if args.standard_classes is not None:
        kwargs["standard_classes"] = [c for c in args.standard_classes.split(",") if c]
    for i, g in enumerate(read_corpus(args.graphs)):
        layout = graph_to_plan(g, LabelSchema.get(g.schema), **kwargs)
        emit_plan_svg(layout, out / f"{i:05d}_{_safe_name(g.graph_id)}.svg")


def _cmd_stats(args):
    paths = sorted(glob.glob(args.reports))
    if not paths:
        raise SystemExit(f"no reports match {args.reports!r}")
    reports = [json.loads(Path(p).read_text()) for p in paths]
    groupby = [g for spec in args.groupby for g in spec.split(",") if g]
    unknown = [g for g in groupby if g not in TOGGLES]
    if unknown:
        raise SystemExit(f"unknown toggles {unknown}; choose from {list(TOGGLES)}")
    tables = build_tables(reports, groupby)
    tables["sources"] = [str(Path(p)) for p in paths]
    Path(args.out).write_text(json.dumps(tables, indent=2) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="layoutvgae", description="Layout graph auto-encoder toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("generate-data", help="write a synthetic corpus")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--schema", choices=("six", "twentyfive"), default="six")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_generate)

    s = sub.add_parser("train", help="train a model")
    s.add_argument("--config")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--resume")
    s.set_defaults(func=_cmd_train)

    s = sub.add_parser("sample", help="draw graphs from the prior")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_sample)

    s = sub.add_parser("interpolate", help="decode straight lines between prior codes")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--pairs", type=int, default=1)
    s.add_argument("--steps", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_interpolate)

    s = sub.add_parser("evaluate", help="compare samples with a reference corpus")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_evaluate)

    s = sub.add_parser("project", help="2-D scatter of latent codes")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--count", type=int, default=200)
    s.add_argument("--data", help="encode these graphs instead of drawing prior codes")
    s.add_argument("--method", choices=("pca", "tsne"), default="pca")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_project)

    s = sub.add_parser("render", help="draw floor plans for a corpus")
    s.add_argument("--graphs", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--standard-classes", help="comma-separated classes drawn as fixed squares")
    s.set_defaults(func=_cmd_render)

    s = sub.add_parser("stats", help="t-test and ANOVA tables from evaluation reports")
    s.add_argument("--reports", required=True, help="glob of report JSON files")
    s.add_argument("--groupby", action="append", required=True,
                   help="toggle name(s); repeat or comma-separate")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_stats)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "train" and not (args.config or args.resume):
        print("train: one of --config or --resume is required", file=sys.stderr)
        return 2
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
