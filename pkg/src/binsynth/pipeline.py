"""Dataset synthesis: asset catalogs, manifest planning and parallel generation.

The flow mirrors the generation recipe: content patches with their ground
truths are seamlessly cloned (mixed gradients) onto backgrounds, which are
themselves page-style patches blended with degradation patches.
"""
from __future__ import annotations

import json
import logging
import os
import tempfile
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .poisson import CloneRegion, CloneRequest, seamless_clone
from .raster import (ALL_TRANSFORMS, IDENTITY, BinaryMask, RasterImage, Transform,
                     apply_transform, load_image, load_mask, save_image, save_mask)
from .seeding import SplitMix64, fnv1a64, mix64, partial_shuffle

log = logging.getLogger(__name__)

PAGE_STYLES = (
    "uniform_ruled_lines",
    "non_uniform_ruled_lines",
    "grid_lines",
    "staff_notation_lines",
    "partially_blank_page",
    "plain_page",
)
DEGRADATIONS = (
    "shadow_gradients",
    "oily_patches",
    "ink_bleed_through",
    "crumpled_pages",
    "non_uniform_illumination",
    "noisy_background",
    "liquid_stains",
    "poor_contrast",
    "punched_stapled_torn",
)
# stats bucket for backgrounds that carry no degradation tag
NO_DEGRADATION = "none"

MANIFEST_FIELDS = ("sample_id", "content_id", "background_id", "rotation", "hflip", "seed",
                   "out_input", "out_gt")


class CatalogError(ValueError):
    pass


class GenerationError(RuntimeError):
    def __init__(self, sample_id: int, message: str):
        super().__init__(f"sample {sample_id}: {message}")
        self.sample_id = sample_id


# ---------------------------------------------------------------------------
# catalogs


@dataclass(frozen=True)
class ContentAsset:
    content_id: str
    path: str
    gt_path: str


@dataclass(frozen=True)
class BackgroundAsset:
    background_id: str
    path: str
    page_style: str
    degradations: tuple = ()


def read_jsonl(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CatalogError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
    return rows


def write_text_atomic(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jsonl(path, rows: Iterable[dict]) -> None:
    write_text_atomic(path, "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows))


def _resolve(base: Path, p: str) -> str:
    q = Path(p)
    return str(q if q.is_absolute() else base / q)


def load_contents(path) -> list[ContentAsset]:
    base = Path(path).parent
    try:
        return [ContentAsset(str(r["content_id"]), _resolve(base, r["path"]), _resolve(base, r["gt_path"]))
                for r in read_jsonl(path)]
    except KeyError as exc:
        raise CatalogError(f"{path}: record missing field {exc}") from exc


def load_backgrounds(path) -> list[BackgroundAsset]:
    base = Path(path).parent
    try:
        return [BackgroundAsset(str(r["background_id"]), _resolve(base, r["path"]), r["page_style"],
                                tuple(r.get("degradations", ())))
                for r in read_jsonl(path)]
    except KeyError as exc:
        raise CatalogError(f"{path}: record missing field {exc}") from exc


@dataclass
class AssetCatalog:
    contents: list = field(default_factory=list)
    backgrounds: list = field(default_factory=list)

    def __post_init__(self):
        self._bg_index = None
        self._content_index = None

    @classmethod
    def load(cls, contents_path, backgrounds_path) -> "AssetCatalog":
        """Read the two JSON Lines catalogs; relative paths resolve against each file's directory."""
        return cls(load_contents(contents_path), load_backgrounds(backgrounds_path))

    def validate(self, check_paths: bool = True) -> None:
        for kind, ids in (("content", [c.content_id for c in self.contents]),
                          ("background", [b.background_id for b in self.backgrounds])):
            dup = [i for i, n in Counter(ids).items() if n > 1]
            if dup:
                raise CatalogError(f"duplicate {kind} ids: {sorted(dup)[:5]}")
        for b in self.backgrounds:
            if b.page_style not in PAGE_STYLES:
                raise CatalogError(f"background {b.background_id}: unknown page style {b.page_style!r}")
            bad = [d for d in b.degradations if d not in DEGRADATIONS]
            if bad:
                raise CatalogError(f"background {b.background_id}: unknown degradations {bad}")
        if check_paths:
            for c in self.contents:
                for p in (c.path, c.gt_path):
                    if not Path(p).is_file():
                        raise CatalogError(f"content {c.content_id}: missing file {p}")
            for b in self.backgrounds:
                if not Path(b.path).is_file():
                    raise CatalogError(f"background {b.background_id}: missing file {b.path}")

    def background(self, background_id: str) -> BackgroundAsset:
        if self._bg_index is None:
            self._bg_index = {b.background_id: b for b in self.backgrounds}
        try:
            return self._bg_index[background_id]
        except KeyError:
            raise CatalogError(f"unknown background id {background_id!r}") from None

    def content(self, content_id: str) -> ContentAsset:
        if self._content_index is None:
            self._content_index = {c.content_id: c for c in self.contents}
        try:
            return self._content_index[content_id]
        except KeyError:
            raise CatalogError(f"unknown content id {content_id!r}") from None


def content_rows(contents: Sequence[ContentAsset], base: Path) -> list[dict]:
    return [{"content_id": c.content_id, "path": os.path.relpath(c.path, base),
             "gt_path": os.path.relpath(c.gt_path, base)} for c in contents]


def background_rows(backgrounds: Sequence[BackgroundAsset], base: Path) -> list[dict]:
    return [{"background_id": b.background_id, "path": os.path.relpath(b.path, base),
             "page_style": b.page_style, "degradations": list(b.degradations)} for b in backgrounds]


# ---------------------------------------------------------------------------
# manifest


@dataclass(frozen=True)
class ManifestRecord:
    sample_id: int
    content_id: str
    background_id: str
    transform: Transform
    seed: int
    out_input: str
    out_gt: str

    def to_json(self) -> dict:
        return {"sample_id": self.sample_id, "content_id": self.content_id,
                "background_id": self.background_id, "rotation": self.transform.rotation,
                "hflip": self.transform.hflip, "seed": str(self.seed),
                "out_input": self.out_input, "out_gt": self.out_gt}

    @classmethod
    def from_json(cls, row: dict) -> "ManifestRecord":
        return cls(int(row["sample_id"]), str(row["content_id"]), str(row["background_id"]),
                   Transform(int(row["rotation"]), bool(row["hflip"])), int(row["seed"]),
                   row["out_input"], row["out_gt"])


def write_manifest(path, records: Sequence[ManifestRecord]) -> None:
    write_jsonl(path, (r.to_json() for r in records))


def read_manifest(path) -> list[ManifestRecord]:
    return [ManifestRecord.from_json(r) for r in read_jsonl(path)]


@dataclass
class GenerationConfig:
    contents: Optional[str] = None
    backgrounds: Optional[str] = None
    per_content: int = 100
    global_seed: int = 0
    out: str = "out"
    jobs: int = 1
    mode: str = "mixed"
    resume: bool = False
    augment: bool = False

    def __post_init__(self):
        if self.per_content < 1:
            raise ValueError(f"per_content must be >= 1, got {self.per_content}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")
        if self.mode not in ("mixed", "source"):
            raise ValueError(f"mode must be 'mixed' or 'source', got {self.mode!r}")


def plan(config: GenerationConfig, catalog: AssetCatalog) -> list[ManifestRecord]:
    """Pair every content with ``per_content`` distinct, randomly drawn backgrounds.

    Each content gets its own SplitMix64 stream keyed by its id, so adding or
    reordering other contents never changes its draws.
    """
    catalog.validate(check_paths=False)
    n_bg = len(catalog.backgrounds)
    k = config.per_content
    if k > n_bg:
        raise CatalogError(f"per-content count k={k} exceeds the {n_bg} available backgrounds")
    seed = config.global_seed
    bg_ids = [b.background_id for b in catalog.backgrounds]
    records = []
    sid = 0
    for c in catalog.contents:
        rng = SplitMix64(mix64(seed, fnv1a64(c.content_id)))
        for j in partial_shuffle(n_bg, k, rng):
            s = mix64(seed, sid)
            t = ALL_TRANSFORMS[s % 8] if config.augment else IDENTITY
            records.append(ManifestRecord(sid, c.content_id, bg_ids[j], t, s,
                                          f"inputs/{sid}.png", f"gts/{sid}.png"))
            sid += 1
    return records


# ---------------------------------------------------------------------------
# generation


def compose_background(page: RasterImage, degradation: RasterImage, mode: str = "mixed") -> RasterImage:
    """Clone a degradation patch onto a page-style patch."""
    if page.shape[:2] != degradation.shape[:2]:
        raise ValueError(f"page {page.shape[:2]} and degradation {degradation.shape[:2]} differ in size")
    region = CloneRegion.full_patch(page.height, page.width)
    return seamless_clone(CloneRequest(degradation, page, region, mode))


def composite(content: RasterImage, background: RasterImage, mode: str = "mixed") -> RasterImage:
    """Clone a content patch onto a background of the same size."""
    if content.shape[:2] != background.shape[:2]:
        raise ValueError(f"content {content.shape[:2]} and background {background.shape[:2]} differ in size")
    region = CloneRegion.full_patch(background.height, background.width)
    return seamless_clone(CloneRequest(content, background, region, mode))


def generate_one(record: ManifestRecord, catalog: AssetCatalog, root, mode: str = "mixed") -> None:
    """Render one manifest record to ``root/out_input`` and ``root/out_gt``."""
    root = Path(root)
    try:
        c = catalog.content(record.content_id)
        b = catalog.background(record.background_id)
        content = apply_transform(load_image(c.path), record.transform)
        gt = apply_transform(load_mask(c.gt_path), record.transform)
        background = load_image(b.path)
        if gt.shape != content.shape[:2]:
            raise ValueError(f"ground truth {gt.shape} does not match content {content.shape[:2]}")
        image = composite(content, background, mode)
        save_image(root / record.out_input, image)
        save_mask(root / record.out_gt, gt)
    except Exception as exc:
        raise GenerationError(record.sample_id, f"{type(exc).__name__}: {exc}") from exc


_worker_state: dict = {}


def _init_worker(catalog: AssetCatalog, root: str, mode: str) -> None:
    _worker_state.update(catalog=catalog, root=root, mode=mode)


def _work(record: ManifestRecord) -> tuple[int, Optional[str]]:
    try:
        generate_one(record, _worker_state["catalog"], _worker_state["root"], _worker_state["mode"])
    except GenerationError as exc:
        return record.sample_id, str(exc)
    return record.sample_id, None


@dataclass
class RunSummary:
    planned: int
    generated: int
    skipped: int
    failed: int
    wall_time: float
    failures: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"planned": self.planned, "generated": self.generated, "skipped": self.skipped,
                "failed": self.failed, "wall_time": round(self.wall_time, 3),
                "failures": [{"sample_id": s, "error": e} for s, e in self.failures]}


def _done(root: Path, r: ManifestRecord) -> bool:
    return (root / r.out_input).is_file() and (root / r.out_gt).is_file()


def run(config: GenerationConfig, catalog: AssetCatalog | None = None) -> RunSummary:
    """Plan, write the manifest, then render every record.

    Per-sample failures are collected in the summary; a manifest write
    failure propagates.
    """
    start = time.perf_counter()
    if catalog is None:
        catalog = AssetCatalog.load(config.contents, config.backgrounds)
    catalog.validate(check_paths=True)
    records = plan(config, catalog)

    root = Path(config.out)
    (root / "inputs").mkdir(parents=True, exist_ok=True)
    (root / "gts").mkdir(parents=True, exist_ok=True)
    write_manifest(root / "manifest.jsonl", records)

    todo = [r for r in records if not (config.resume and _done(root, r))]
    skipped = len(records) - len(todo)
    log.info("planned %d samples, %d to render, %d already present", len(records), len(todo), skipped)

    results: list[tuple[int, Optional[str]]] = []
    if config.jobs == 1 or len(todo) <= 1:
        _init_worker(catalog, str(root), config.mode)
        for i, r in enumerate(todo, 1):
            results.append(_work(r))
            if i % 50 == 0:
                log.info("rendered %d/%d", i, len(todo))
    else:
        chunk = max(1, len(todo) // (config.jobs * 4))
        with ProcessPoolExecutor(max_workers=config.jobs, initializer=_init_worker,
                                 initargs=(catalog, str(root), config.mode)) as pool:
            for i, res in enumerate(pool.map(_work, todo, chunksize=chunk), 1):
                results.append(res)
                if i % 50 == 0:
                    log.info("rendered %d/%d", i, len(todo))

    failures = sorted((sid, err) for sid, err in results if err is not None)
    for sid, err in failures:
        log.error("%s", err)
    return RunSummary(planned=len(records), generated=len(todo) - len(failures), skipped=skipped,
                      failed=len(failures), wall_time=time.perf_counter() - start, failures=failures)


# ---------------------------------------------------------------------------
# backgrounds and statistics


@dataclass(frozen=True)
class PageAsset:
    page_id: str
    path: str
    page_style: str


@dataclass(frozen=True)
class DegradationAsset:
    degradation_id: str
    path: str
    degradations: tuple


def load_pages(path) -> list[PageAsset]:
    base = Path(path).parent
    return [PageAsset(str(r["page_id"]), _resolve(base, r["path"]), r["page_style"])
            for r in read_jsonl(path)]


def load_degradations(path) -> list[DegradationAsset]:
    base = Path(path).parent
    return [DegradationAsset(str(r["degradation_id"]), _resolve(base, r["path"]), tuple(r["degradations"]))
            for r in read_jsonl(path)]


def plan_backgrounds(pages: Sequence[PageAsset], degradations: Sequence[DegradationAsset],
                     count: int, seed: int) -> list[tuple[int, int]]:
    """Draw ``count`` distinct (page index, degradation index) pairs."""
    total = len(pages) * len(degradations)
    if not 1 <= count <= total:
        raise CatalogError(f"count={count} must lie in [1, {total}] (pages x degradations)")
    rng = SplitMix64(mix64(seed, fnv1a64("backgrounds")))
    return [divmod(i, len(degradations)) for i in partial_shuffle(total, count, rng)]


def make_backgrounds(pages: Sequence[PageAsset], degradations: Sequence[DegradationAsset],
                     count: int, seed: int, out, mode: str = "mixed") -> list[BackgroundAsset]:
    """Render composed backgrounds into ``out/backgrounds/`` and write ``out/backgrounds.jsonl``."""
    for p in pages:
        if p.page_style not in PAGE_STYLES:
            raise CatalogError(f"page {p.page_id}: unknown page style {p.page_style!r}")
    for d in degradations:
        bad = [t for t in d.degradations if t not in DEGRADATIONS]
        if bad:
            raise CatalogError(f"degradation {d.degradation_id}: unknown tags {bad}")
    pairs = plan_backgrounds(pages, degradations, count, seed)
    out = Path(out)
    (out / "backgrounds").mkdir(parents=True, exist_ok=True)
    assets = []
    for i, (pi, di) in enumerate(pairs):
        p, d = pages[pi], degradations[di]
        img = compose_background(load_image(p.path), load_image(d.path), mode)
        bid = f"bg{i:05d}"
        path = out / "backgrounds" / f"{bid}.png"
        save_image(path, img)
        assets.append(BackgroundAsset(bid, str(path), p.page_style, d.degradations))
    write_jsonl(out / "backgrounds.jsonl", background_rows(assets, out))
    return assets


def stats(manifest: Sequence[ManifestRecord], catalog: AssetCatalog) -> dict:
    """Sample counts per page style and per degradation tag."""
    pages: Counter = Counter()
    degr: Counter = Counter()
    for r in manifest:
        b = catalog.background(r.background_id)
        pages[b.page_style] += 1
        for tag in b.degradations or (NO_DEGRADATION,):
            degr[tag] += 1
    return {"samples": len(manifest),
            "page_styles": dict(sorted(pages.items())),
            "degradations": dict(sorted(degr.items()))}
