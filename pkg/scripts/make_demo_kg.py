#!/usr/bin/env python3
"""Write the bundled synthetic edge lists plus ready-to-run pipeline configs.

Produces, under --out (default ./data):
  demo.tsv        500-triple miniature graph (5 relations, fast smoke runs)
  desk50k.tsv     50,000-triple graph sized for real training runs
  demo_config.json, desk_config.json   full-pipeline configs for `kgstruct run`
"""

import argparse
import json
from pathlib import Path

from kgstruct.graph import write_generic_3col
from kgstruct.synth import demo_plan, desk_scale_plan, synthetic_graph


def demo_config(kg: Path, out: Path) -> dict:
    return {
        "input": str(kg),
        "out": str(out),
        "seed": 9,
        "train": {"dimension": 16, "epochs": 8, "seed": 3},
        "validate": {"enabled": True},
        "relsim": {"enabled": True},
        "cluster": {"enabled": True, "relations": ["HasContext"], "k": 4, "k_range": [2, 6]},
        "negation": {
            "enabled": True,
            "relation": "Desires",
            "negation_relation": "NotDesires",
            "folds": 5,
            "forest": {"n_trees": 10, "max_depth": 6},
        },
    }


def desk_config(kg: Path, out: Path) -> dict:
    return {
        "input": str(kg),
        "out": str(out),
        "seed": 17,
        "train": {
            "dimension": 64,
            "epochs": 20,
            "margin": 0.25,
            "seed": 17,
        },
        "validate": {"enabled": True},
        "relsim": {"enabled": True},
        "cluster": {
            "enabled": True,
            "relations": ["HasContext", "FormOf", "SymbolOf"],
            "k": 20,
            "k_range": [2, 24],
        },
        "negation": {
            "enabled": True,
            "relation": "Desires",
            "negation_relation": "NotDesires",
            "folds": 10,
        },
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="directory for the files")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    demo = out / "demo.tsv"
    write_generic_3col(synthetic_graph(demo_plan()), demo)
    desk = out / "desk50k.tsv"
    write_generic_3col(synthetic_graph(desk_scale_plan()), desk)

    (out / "demo_config.json").write_text(
        json.dumps(demo_config(demo, out / "demo_report"), indent=2) + "\n",
        encoding="utf-8",
    )
    (out / "desk_config.json").write_text(
        json.dumps(desk_config(desk, out / "desk_report"), indent=2) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {demo} (500 triples), {desk} (50,000 triples), and two configs")
    print(f"next: kgstruct run --config {out / 'demo_config.json'}")


if __name__ == "__main__":
    main()
