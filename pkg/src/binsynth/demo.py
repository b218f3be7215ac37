"""Procedural stand-ins for scanned source assets, for desk-scale runs.

``build_demo_assets`` writes full-length handwriting-like documents, their
ground truths and content patches, page-style and degradation patches, and
composed backgrounds, plus the JSON Lines catalogs that ``generate`` reads.
Everything is a pure function of the seed.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw
from scipy import ndimage

from .patching import PatchSpec, crop_aligned
from .pipeline import (PAGE_STYLES, ContentAsset, DegradationAsset, PageAsset, content_rows,
                       make_backgrounds, write_jsonl)
from .raster import RasterImage, save_image, save_mask
from .seeding import fnv1a64
from .thresholding import AdaptiveParams, extract_ground_truth

PATCH = 128
PAPER = (0.96, 0.95, 0.91)


def _rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([seed, *keys])


def _word_path(rng, x0: float, baseline: float, height: float) -> np.ndarray:
    """Points of one loopy pen stroke starting near ``x0``, shape (n, 2)."""
    n_letters = int(rng.integers(2, 7))
    length = n_letters * height * rng.uniform(0.5, 0.8)
    t = np.linspace(0.0, 1.0, max(8, int(length * 1.5)))
    freq = n_letters * rng.uniform(0.9, 1.2)
    phase = rng.uniform(0, 2 * np.pi)
    xs = x0 + t * length + 0.35 * height * np.sin(2 * np.pi * freq * t + phase)
    ys = baseline - 0.5 * height * (1 + np.cos(2 * np.pi * freq * t)) * rng.uniform(0.6, 1.0)
    ys += rng.normal(0, 0.4, size=t.size).cumsum() * 0.15
    return np.stack([xs, ys], axis=1)


def synth_document(seed: int, index: int, height: int = 256, width: int = 384,
                   tile: int = PATCH, gutter: int = 8) -> RasterImage:
    """A clean page of handwriting-like strokes on faintly textured paper.

    Text is laid out tile by tile and every word stays ``gutter`` pixels
    clear of its tile's edges, so patches cut on the ``tile`` grid contain
    no stroke that runs into the patch frame.
    """
    rng = _rng(seed, 1, index)
    canvas = Image.new("L", (width, height), 255)
    draw = ImageDraw.Draw(canvas)
    for ty in range(0, height - tile + 1, tile):
        for tx in range(0, width - tile + 1, tile):
            lo_x, hi_x, lo_y, hi_y = tx + gutter, tx + tile - gutter, ty + gutter, ty + tile - gutter
            line_h = float(rng.uniform(18, 26))
            y = lo_y + 0.8 * line_h + 3
            while y < hi_y:
                x = lo_x + float(rng.uniform(0, 8))
                while True:
                    pts = _word_path(rng, x, y, 0.55 * line_h)
                    pen = int(rng.integers(2, 4))
                    ink = int(rng.integers(10, 60))
                    reach = pen + 1
                    if pts[:, 0].max() + reach > hi_x:
                        break
                    if (pts[:, 0].min() - reach >= lo_x and pts[:, 1].min() - reach >= lo_y
                            and pts[:, 1].max() + reach <= hi_y):
                        draw.line([tuple(q) for q in pts.tolist()], fill=ink, width=pen, joint="curve")
                    x = float(pts[:, 0].max()) + rng.uniform(6, 14)
                y += line_h
    ink = np.asarray(canvas, dtype=np.float64) / 255.0
    ink = ndimage.gaussian_filter(ink, 0.6)
    paper = 0.95 + 0.01 * ndimage.gaussian_filter(rng.standard_normal((height, width)), 3.0)
    return RasterImage(np.clip(np.minimum(ink, paper), 0.0, 1.0))


def _tinted(plane: np.ndarray, tint=PAPER) -> np.ndarray:
    return np.clip(np.stack([plane * c for c in tint], axis=-1), 0.0, 1.0)


def synth_page(style: str, seed: int, size: int = PATCH) -> RasterImage:
    rng = _rng(seed, 2, fnv1a64(style) % 1000)
    base = np.ones((size, size))
    rgb = _tinted(base)
    line = np.array([0.55, 0.65, 0.9])
    rows, cols = [], []
    if style == "uniform_ruled_lines":
        rows = list(range(10, size, 16))
    elif style == "non_uniform_ruled_lines":
        y = 8
        while y < size:
            rows.append(y)
            y += int(rng.integers(10, 24))
    elif style == "grid_lines":
        rows = list(range(6, size, 12))
        cols = list(range(6, size, 12))
    elif style == "staff_notation_lines":
        for top in range(12, size - 24, 40):
            rows.extend(top + 5 * i for i in range(5))
        line = np.array([0.3, 0.3, 0.3])
    elif style == "partially_blank_page":
        rows = list(range(10, size // 2, 16))
    for r in rows:
        rgb[r, :, :] = line
    for c in cols:
        rgb[:, c, :] = line
    return RasterImage(rgb)


def synth_degradation(kind: str, seed: int, size: int = PATCH) -> RasterImage:
    rng = _rng(seed, 3, fnv1a64(kind) % 1000)
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    plane = np.full((size, size), 0.95)
    if kind == "shadow_gradients":
        # soft diagonal band; a pure linear ramp would be cancelled by the clone boundary
        angle = rng.uniform(0, np.pi)
        d = np.cos(angle) * (xx - 0.5) + np.sin(angle) * (yy - 0.5) - rng.uniform(-0.15, 0.15)
        plane = 0.95 - 0.4 * np.exp(-(d / 0.2) ** 2)
    elif kind == "non_uniform_illumination":
        cy, cx = rng.uniform(0.2, 0.8, 2)
        plane = 0.95 - 0.4 * np.clip(np.hypot(yy - cy, xx - cx), 0, 1)
    elif kind == "oily_patches":
        blobs = ndimage.gaussian_filter((rng.random((size, size)) < 0.002).astype(float), 8.0)
        plane = 0.95 - 0.5 * blobs / max(blobs.max(), 1e-9)
    elif kind == "liquid_stains":
        cy, cx = rng.uniform(0.3, 0.7, 2)
        r = np.hypot(yy - cy, xx - cx)
        ring = np.exp(-((r - 0.25) / 0.03) ** 2)
        plane = 0.95 - 0.25 * ring - 0.08 * (r < 0.25)
    elif kind == "noisy_background":
        plane = 0.9 + 0.05 * ndimage.gaussian_filter(rng.standard_normal((size, size)), 1.0)
    elif kind == "crumpled_pages":
        field = ndimage.gaussian_filter(rng.standard_normal((size, size)), 6.0)
        gy, gx = np.gradient(field)
        plane = 0.85 + 6.0 * (gx - gy)
    elif kind == "ink_bleed_through":
        doc = synth_document(seed + 17, 0, size, size).data
        plane = 0.95 - 0.18 * (1.0 - doc[:, ::-1])
    elif kind == "poor_contrast":
        plane = np.full((size, size), 0.7)
    rgb = np.stack([plane * 1.0, plane * 0.97, plane * 0.9], axis=-1)
    return RasterImage(np.clip(rgb, 0.0, 1.0))


DEMO_DEGRADATIONS = ("shadow_gradients", "non_uniform_illumination", "oily_patches",
                     "liquid_stains", "noisy_background", "crumpled_pages", "ink_bleed_through")


def build_demo_assets(out, seed: int = 7, n_contents: int = 10, n_backgrounds: int = 12,
                      params: AdaptiveParams | None = None) -> dict:
    """Write a complete desk-scale asset tree under ``out``.

    Documents hold six patches each; as many are written as needed to cut
    ``n_contents`` content patches. Returns the paths of the contents and
    backgrounds catalogs.
    """
    out = Path(out)
    params = params or AdaptiveParams()
    for sub in ("docs", "contents", "content_gts", "pages", "degradations"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    contents = []
    spec = PatchSpec(PATCH, PATCH)
    for d in range(-(-n_contents // 6)):
        doc = synth_document(seed, d)
        gt = extract_ground_truth(doc, params)
        save_image(out / "docs" / f"doc{d:02d}.png", doc)
        save_mask(out / "docs" / f"doc{d:02d}_gt.png", gt)
        for (x, y), patch, gpatch in crop_aligned(doc, gt, spec)[:n_contents - len(contents)]:
            cid = f"doc{d:02d}_x{x}_y{y}"
            save_image(out / "contents" / f"{cid}.png", patch)
            save_mask(out / "content_gts" / f"{cid}.png", gpatch)
            contents.append(ContentAsset(cid, str(out / "contents" / f"{cid}.png"),
                                         str(out / "content_gts" / f"{cid}.png")))
    write_jsonl(out / "contents.jsonl", content_rows(contents, out))

    pages = []
    for style in PAGE_STYLES:
        path = out / "pages" / f"{style}.png"
        save_image(path, synth_page(style, seed))
        pages.append(PageAsset(style, str(path), style))
    degr = []
    for kind in DEMO_DEGRADATIONS:
        path = out / "degradations" / f"{kind}.png"
        save_image(path, synth_degradation(kind, seed))
        degr.append(DegradationAsset(kind, str(path), (kind,)))
    write_jsonl(out / "pages.jsonl", [{"page_id": p.page_id, "path": f"pages/{p.page_style}.png",
                                       "page_style": p.page_style} for p in pages])
    write_jsonl(out / "degradations.jsonl", [{"degradation_id": d.degradation_id,
                                              "path": f"degradations/{d.degradation_id}.png",
                                              "degradations": list(d.degradations)} for d in degr])
    make_backgrounds(pages, degr, n_backgrounds, seed, out)
    return {"contents": str(out / "contents.jsonl"), "backgrounds": str(out / "backgrounds.jsonl")}
