"""Regenerate the bundled desk-scale asset set under data/demo/."""
import argparse
import shutil
from pathlib import Path

from binsynth.demo import build_demo_assets

REPO = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(REPO / "data" / "demo"))
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--contents", type=int, default=10)
    ap.add_argument("--backgrounds", type=int, default=12)
    args = ap.parse_args()
    out = Path(args.out)
    if out.exists():
        shutil.rmtree(out)
    paths = build_demo_assets(out, args.seed, args.contents, args.backgrounds)
    for name, path in paths.items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
