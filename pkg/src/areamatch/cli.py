"""Command-line interface.

Exit codes: 0 success, 1 input error, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench as bench_mod
from .config import ConfigError, PipelineConfig, config_from_dict, config_to_dict, load_config
from .formats import (FormatError, dumps, graph_from_json, graph_to_json, load_segmentation,
                      segmentation_to_json, write_atomic)
from .geometry import GeometryError
from .graph import build_area_graph, check_invariants
from .mrf import BRUTE_FORCE_MAX_NODES, fuzz
from .pipeline import match_pair
from .similarity import (ConstantProvider, GroundTruthProvider, NCCProvider, ProviderError,
                         ProviderUnavailable)

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2

log = logging.getLogger("areamatch")


class InputError(Exception):
    pass


def _resolve_config(args) -> PipelineConfig:
    cfg = load_config(getattr(args, "config", None))
    overrides: dict = {}
    for flag, key in (("lam", "lambda"), ("source_level", "source_level"), ("t_as", "t_as"),
                      ("spread", "spread"), ("provider", "provider")):
        v = getattr(args, flag, None)
        if v is not None:
            overrides[key] = v
    if getattr(args, "no_prune", False):
        overrides["prune"] = False
    energy = {}
    for flag in ("t_e_max", "t_er"):
        v = getattr(args, flag, None)
        if v is not None:
            energy[flag] = v
    if energy:
        overrides["energy"] = energy
    return config_from_dict(overrides, base=cfg) if overrides else cfg


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON config file")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--source-level", type=int)
    p.add_argument("--t-as", type=float)
    p.add_argument("--t-e-max", type=float)
    p.add_argument("--t-er", type=float)
    p.add_argument("--spread", type=float)
    p.add_argument("--no-prune", action="store_true", help="disable similarity pruning")


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InputError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON: {exc}") from exc


def cmd_build_graph(args) -> int:
    cfg = _resolve_config(args)
    seg = load_segmentation(args.segmentation)
    g = build_area_graph(seg.rects, seg.dims, cfg.graph, seg.ids)
    problems = check_invariants(g)
    write_atomic(args.out, dumps(graph_to_json(g)))
    counts = g.level_counts()
    print(f"nodes: {len(g)} " + " ".join(f"L{k}={v}" for k, v in counts.items()))
    print(f"inclusion edges: {len(g.inclusion_edges)}  adjacency edges: {len(g.adjacency_edges)}")
    if problems:
        for msg in problems:
            print(f"invariant violated: {msg}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_check_graph(args) -> int:
    g = graph_from_json(_read_json(args.graph))
    problems = check_invariants(g)
    for msg in problems:
        print(msg)
    print("ok" if not problems else f"{len(problems)} violation(s)")
    return EXIT_INVARIANT if problems else EXIT_OK


def _make_provider(args, cfg: PipelineConfig):
    name = cfg.provider
    if name == "ground-truth":
        if not args.scene:
            raise ProviderUnavailable("ground-truth provider needs --scene")
        scene = bench_mod.SyntheticScene.from_json(_read_json(args.scene))
        return GroundTruthProvider(scene.transform)
    if name == "ncc":
        if not (args.image0 and args.image1):
            raise ProviderUnavailable("ncc provider needs --image0 and --image1")
        return NCCProvider.from_files(args.image0, args.image1)
    return ConstantProvider.from_json(args.table) if args.table else ConstantProvider({})


def cmd_match(args) -> int:
    cfg = _resolve_config(args)
    seg0 = load_segmentation(args.seg0)
    seg1 = load_segmentation(args.seg1)
    provider = _make_provider(args, cfg)
    res = match_pair(seg0, seg1, provider, cfg)
    out = res.to_json()
    out["config"] = config_to_dict(cfg)
    write_atomic(args.out, dumps(out))
    print(f"{len(res.pairs)} area matches; provider calls {res.matrix.provider_calls}")
    return EXIT_OK


def _scene_params(args) -> bench_mod.SceneParams:
    return bench_mod.SceneParams(
        n_areas=args.n_areas, scale_range=(args.scale_min, args.scale_max),
        translation=args.translation, distractors=args.distractors)


def _add_scene_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-areas", type=int, default=6)
    p.add_argument("--scale-min", type=float, default=1.0)
    p.add_argument("--scale-max", type=float, default=1.0)
    p.add_argument("--translation", type=float, default=0.0,
                   help="max translation as a fraction of the image size")
    p.add_argument("--distractors", type=int, default=0)


def cmd_gen_scene(args) -> int:
    scene = bench_mod.gen_scene(args.seed, _scene_params(args))
    write_atomic(args.out, dumps(scene.to_json()))
    if args.seg0:
        write_atomic(args.seg0, dumps(segmentation_to_json(scene.segmentation(0))))
    if args.seg1:
        write_atomic(args.seg1, dumps(segmentation_to_json(scene.segmentation(1))))
    if args.render:
        img0, img1 = bench_mod.render_scene(scene)
        base = Path(args.out).with_suffix("")
        bench_mod.write_pgm(f"{base}_0.pgm", img0)
        bench_mod.write_pgm(f"{base}_1.pgm", img1)
    print(f"scene {args.seed}: {len(scene.areas0)} / {len(scene.areas1)} areas, "
          f"{len(scene.gt_pairs)} ground-truth pairs")
    return EXIT_OK


def parse_seeds(spec: str) -> list[int]:
    """'0:50' (half-open range) or '1,4,9'."""
    try:
        if ":" in spec:
            a, b = spec.split(":")
            return list(range(int(a), int(b)))
        return [int(s) for s in spec.split(",") if s.strip()]
    except ValueError as exc:
        raise InputError(f"bad seed list {spec!r}") from exc


def cmd_bench(args) -> int:
    cfg = _resolve_config(args)
    report = bench_mod.bench(parse_seeds(args.seeds), _scene_params(args), cfg)
    report["config"] = config_to_dict(cfg)
    table = bench_mod.report_table(report)
    if args.out:
        write_atomic(args.out, dumps(report))
    if args.table:
        write_atomic(args.table, table)
    print(table, end="")
    if not report["summary"]["pruning_never_costlier"]:
        print("pruning increased provider calls on some seed", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_fuzz_mrf(args) -> int:
    if args.max_nodes > BRUTE_FORCE_MAX_NODES:
        raise InputError(f"--max-nodes must be <= {BRUTE_FORCE_MAX_NODES} for brute force")
    if args.max_nodes < 1 or args.trials < 0:
        raise InputError("--max-nodes must be >= 1 and --trials >= 0")
    failures = fuzz(args.trials, args.max_nodes, args.seed)
    if args.out:
        write_atomic(args.out, dumps({"trials": args.trials, "failures": failures}))
    status = "PASS" if not failures else "FAIL"
    print(f"{status}: {args.trials} trials, {len(failures)} mismatches")
    return EXIT_INVARIANT if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="areamatch", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="build an Area Graph from a segmentation file")
    p.add_argument("segmentation")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("check-graph", help="verify the invariants of a graph dump")
    p.add_argument("graph")
    p.set_defaults(func=cmd_check_graph)

    p = sub.add_parser("match", help="match areas between two segmentations")
    p.add_argument("seg0")
    p.add_argument("seg1")
    p.add_argument("--out", required=True)
    p.add_argument("--provider", choices=("ground-truth", "ncc", "constant"))
    p.add_argument("--scene", help="scene file for the ground-truth provider")
    p.add_argument("--image0", help="grayscale image (PGM/PNG) for the ncc provider")
    p.add_argument("--image1")
    p.add_argument("--table", help="similarity table JSON for the constant provider")
    _add_config_flags(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("gen-scene", help="generate a synthetic scene pair")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--seg0", help="also write image-0 segmentation here")
    p.add_argument("--seg1", help="also write image-1 segmentation here")
    p.add_argument("--render", action="store_true", help="write textured PGM images next to --out")
    _add_scene_flags(p)
    p.set_defaults(func=cmd_gen_scene)

    p = sub.add_parser("bench", help="benchmark on synthetic scenes")
    p.add_argument("--seeds", default="0:50", help="'a:b' range or comma list")
    p.add_argument("--out", help="metrics report JSON")
    p.add_argument("--table", help="plain-text table output")
    _add_scene_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("fuzz-mrf", help="graph cut vs brute force on random instances")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--max-nodes", type=int, default=15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fuzz_mrf)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, FormatError, ConfigError, ProviderUnavailable, GeometryError,
            FileNotFoundError, bench_mod.GenerationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
