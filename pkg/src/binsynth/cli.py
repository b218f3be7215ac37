"""Command-line entry point: ``binsynth <subcommand> ...``.

Exit codes: 0 success, 1 validation or usage error, 2 some samples failed.
"""
from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys
from pathlib import Path

from . import metrics, pipeline
from .patching import PatchSpec, augment_aligned, augment_set, crop_aligned, crop_patches
from .poisson import CloneRegion, CloneRequest, seamless_clone
from .raster import RasterError, load_image, load_mask, save_image, save_mask
from .thresholding import AdaptiveParams, extract_ground_truth

log = logging.getLogger("binsynth")

OUT_ENV = "BINSYNTH_OUT"


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _default_out(sub: str) -> str:
    return os.environ.get(OUT_ENV, os.path.join("out", sub))


def _expand(patterns) -> list[Path]:
    paths = []
    for pat in patterns:
        hits = sorted(glob.glob(pat))
        if not hits and Path(pat).is_file():
            hits = [pat]
        if not hits:
            raise UsageError(f"no input files match {pat!r}")
        paths.extend(Path(h) for h in hits)
    return paths


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = Parser(prog="binsynth", description="Synthesize and score document binarization datasets.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more progress output on stderr")
    sub = p.add_subparsers(dest="command", metavar="{gt,patch,background,generate,clone,eval,stats}",
                           parser_class=Parser)
    sub.required = True

    g = sub.add_parser("gt", help="extract ground-truth masks by adaptive thresholding")
    g.add_argument("inputs", nargs="+", help="input PNG paths or globs")
    g.add_argument("--out", default=None)
    g.add_argument("--window", type=int, default=31)
    g.add_argument("--offset", type=float, default=0.06)
    g.add_argument("--method", choices=("mean", "gaussian"), default="mean")
    g.add_argument("--no-despeckle", action="store_true")

    pa = sub.add_parser("patch", help="crop images (and optional ground truths) into patches")
    pa.add_argument("inputs", nargs="+")
    pa.add_argument("--out", default=None)
    pa.add_argument("--size", type=_positive, default=480)
    pa.add_argument("--stride", type=_positive, default=480)
    pa.add_argument("--augment", action="store_true", help="emit all 8 dihedral variants")
    pa.add_argument("--gt-dir", default=None, help="directory of ground truths sharing input stems")

    b = sub.add_parser("background", help="compose page-style and degradation patches")
    b.add_argument("--pages", required=True, help="pages JSON Lines catalog")
    b.add_argument("--degradations", required=True, help="degradations JSON Lines catalog")
    b.add_argument("--count", type=_positive, required=True)
    b.add_argument("--seed", type=_seed, default=0)
    b.add_argument("--out", default=None)
    b.add_argument("--mode", choices=("mixed", "source"), default="mixed")

    ge = sub.add_parser("generate", help="plan and render the dataset")
    ge.add_argument("--contents", required=True)
    ge.add_argument("--backgrounds", required=True)
    ge.add_argument("--per-content", type=_positive, default=100, metavar="K")
    ge.add_argument("--seed", type=_seed, default=0)
    ge.add_argument("--out", default=None)
    ge.add_argument("--jobs", type=_positive, default=os.cpu_count() or 1)
    ge.add_argument("--resume", action="store_true")
    ge.add_argument("--mode", choices=("mixed", "source"), default="mixed")
    ge.add_argument("--augment", action="store_true", help="apply a seeded dihedral transform per sample")

    c = sub.add_parser("clone", help="seamlessly clone one image into another")
    c.add_argument("--source", required=True)
    c.add_argument("--target", required=True)
    c.add_argument("--mode", choices=("mixed", "source"), default="mixed")
    c.add_argument("--out", required=True)

    e = sub.add_parser("eval", help="score predicted masks against ground truths")
    e.add_argument("--pred", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--prob", default=None, help="optional directory of probability maps for BCE")
    e.add_argument("--out", default=None, help="report path prefix (writes .txt and .jsonl)")

    s = sub.add_parser("stats", help="count samples per page style and degradation")
    s.add_argument("--manifest", required=True)
    s.add_argument("--backgrounds", required=True)
    return p


def cmd_gt(args) -> int:
    params = AdaptiveParams(args.window, args.offset, args.method)
    inputs = _expand(args.inputs)
    out = Path(args.out or _default_out("gt"))
    out.mkdir(parents=True, exist_ok=True)
    for path in inputs:
        mask = extract_ground_truth(load_image(path), params, clean=not args.no_despeckle)
        save_mask(out / f"{path.stem}.png", mask)
        log.info("%s -> %s (%d ink pixels)", path, out / f"{path.stem}.png", mask.count())
    return 0


def cmd_patch(args) -> int:
    spec = PatchSpec(args.size, args.stride)
    inputs = _expand(args.inputs)
    out = Path(args.out or _default_out("patches"))
    out.mkdir(parents=True, exist_ok=True)
    gt_out = None
    if args.gt_dir:
        gt_out = out / "gts"
        gt_out.mkdir(exist_ok=True)
    written = 0
    for path in inputs:
        img = load_image(path)
        if args.gt_dir:
            gt = load_mask(Path(args.gt_dir) / f"{path.stem}.png")
            pairs = crop_aligned(img, gt, spec)
        else:
            pairs = [(off, patch, None) for off, patch in crop_patches(img, spec)]
        for (x, y), patch, gpatch in pairs:
            if gpatch is not None:
                variants = augment_aligned(patch, gpatch) if args.augment else [(patch, gpatch)]
            else:
                variants = [(v, None) for v in (augment_set(patch) if args.augment else [patch])]
            for t, (vp, vg) in enumerate(variants):
                name = f"{path.stem}_x{x}_y{y}_t{t}.png"
                save_image(out / name, vp)
                if vg is not None:
                    save_mask(gt_out / name, vg)
                written += 1
    log.info("wrote %d patches to %s", written, out)
    return 0


def cmd_background(args) -> int:
    pages = pipeline.load_pages(args.pages)
    degr = pipeline.load_degradations(args.degradations)
    total = len(pages) * len(degr)
    if args.count > total:
        raise UsageError(f"--count {args.count} exceeds the {total} page x degradation pairs")
    out = Path(args.out or _default_out("backgrounds"))
    out.mkdir(parents=True, exist_ok=True)
    assets = pipeline.make_backgrounds(pages, degr, args.count, args.seed, out, args.mode)
    log.info("wrote %d backgrounds and %s", len(assets), out / "backgrounds.jsonl")
    return 0


def cmd_generate(args) -> int:
    config = pipeline.GenerationConfig(
        contents=args.contents, backgrounds=args.backgrounds, per_content=args.per_content,
        global_seed=args.seed, out=args.out or _default_out("dataset"), jobs=args.jobs,
        mode=args.mode, resume=args.resume, augment=args.augment)
    catalog = pipeline.AssetCatalog.load(config.contents, config.backgrounds)
    catalog.validate(check_paths=True)
    if config.per_content > len(catalog.backgrounds):
        raise UsageError(f"--per-content {config.per_content} exceeds the {len(catalog.backgrounds)} "
                         "backgrounds in the catalog (need 1 <= K <= number of backgrounds)")
    summary = pipeline.run(config, catalog)
    print(json.dumps(summary.to_json()))
    return 2 if summary.failed else 0


def cmd_clone(args) -> int:
    source, target = load_image(args.source), load_image(args.target)
    if source.shape[:2] != target.shape[:2]:
        raise UsageError(f"source {source.shape[:2]} and target {target.shape[:2]} differ in size")
    region = CloneRegion.full_patch(target.height, target.width)
    save_image(args.out, seamless_clone(CloneRequest(source, target, region, args.mode)))
    return 0


def cmd_eval(args) -> int:
    report = metrics.evaluate_corpus(args.pred, args.gt, args.prob)
    for side, stems in (("pred", report.unmatched_pred), ("gt", report.unmatched_gt)):
        if stems:
            log.warning("%d %s files without a partner: %s", len(stems), side, list(stems))
    table = report.table()
    sys.stdout.write(table)
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        pipeline.write_text_atomic(prefix.with_suffix(".txt"), table)
        pipeline.write_text_atomic(prefix.with_suffix(".jsonl"), report.jsonl())
    return 0


def cmd_stats(args) -> int:
    manifest = pipeline.read_manifest(args.manifest)
    catalog = pipeline.AssetCatalog([], pipeline.load_backgrounds(args.backgrounds))
    result = pipeline.stats(manifest, catalog)
    print(json.dumps(result, indent=2))
    return 0


COMMANDS = {"gt": cmd_gt, "patch": cmd_patch, "background": cmd_background, "generate": cmd_generate,
            "clone": cmd_clone, "eval": cmd_eval, "stats": cmd_stats}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError, RasterError, FileNotFoundError, KeyError) as exc:
        print(f"binsynth {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
