"""Provider-call savings of similarity pruning as the pruning threshold varies."""

import argparse
from dataclasses import replace

import numpy as np

from areamatch.bench import SceneParams, gen_scene, run_scene
from areamatch.config import PipelineConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--t-as", type=float, nargs="+", default=[0.01, 0.05, 0.1, 0.2])
    args = ap.parse_args()
    params = SceneParams(scale_range=(0.8, 1.25), translation=0.25, distractors=2)
    scenes = [gen_scene(s, params) for s in range(args.seeds)]
    base = PipelineConfig()
    dense = [run_scene(s, replace(base, prune=False)) for s in scenes]
    print(f"{'t_as':>6} {'calls':>8} {'dense':>8} {'saved %':>8} {'same':>6}")
    for t_as in args.t_as:
        cfg = replace(base, t_as=t_as)
        on = [run_scene(s, cfg) for s in scenes]
        calls = np.mean([r.matrix.provider_calls for r in on])
        full = np.mean([r.matrix.provider_calls for r in dense])
        same = sum(a.node_pairs() == b.node_pairs() for a, b in zip(on, dense))
        print(f"{t_as:6.2f} {calls:8.1f} {full:8.1f} {100 * (1 - calls / full):8.1f} {same:3d}/{len(scenes)}")


if __name__ == "__main__":
    main()
