"""Plan (without rendering) a full-scale dataset and report its size and timing.

10,944 content patches, 100 backgrounds per content.
"""
import argparse
import time

from binsynth.pipeline import PAGE_STYLES, AssetCatalog, BackgroundAsset, ContentAsset, GenerationConfig, plan


def synthetic_catalog(n_contents: int, n_backgrounds: int) -> AssetCatalog:
    contents = [ContentAsset(f"c{i:05d}", f"contents/c{i:05d}.png", f"gts/c{i:05d}.png")
                for i in range(n_contents)]
    backgrounds = [BackgroundAsset(f"b{j:04d}", f"backgrounds/b{j:04d}.png",
                                   PAGE_STYLES[j % len(PAGE_STYLES)], ())
                   for j in range(n_backgrounds)]
    return AssetCatalog(contents, backgrounds)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--contents", type=int, default=10944)
    ap.add_argument("--backgrounds", type=int, default=120)
    ap.add_argument("--per-content", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    catalog = synthetic_catalog(args.contents, args.backgrounds)
    config = GenerationConfig("", "", per_content=args.per_content, global_seed=args.seed)
    t0 = time.perf_counter()
    records = plan(config, catalog)
    dt = time.perf_counter() - t0
    print(f"{len(records):,} records from {args.contents:,} contents x {args.per_content} "
          f"in {dt:.2f} s")


if __name__ == "__main__":
    main()
