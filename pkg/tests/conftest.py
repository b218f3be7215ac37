import hashlib
from pathlib import Path

import numpy as np
import pytest

from binsynth.pipeline import BackgroundAsset, ContentAsset, background_rows, content_rows, write_jsonl
from binsynth.raster import BinaryMask, RasterImage, save_image, save_mask


def tree_digest(root) -> dict:
    """Relative path -> sha256 of every file below ``root``."""
    root = Path(root)
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


def make_small_assets(root, n_contents=4, n_backgrounds=5, size=24, seed=0):
    """Tiny synthetic catalog: bar-shaped ink on white, textured backgrounds."""
    root = Path(root)
    for sub in ("c", "g", "b"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    contents = []
    for i in range(n_contents):
        data = np.full((size, size), 0.95)
        ink = np.zeros((size, size), bool)
        y = int(rng.integers(4, size - 6))
        ink[y:y + 2, 3:size - 3] = True
        x = int(rng.integers(4, size - 6))
        ink[3:size - 3, x:x + 2] = True
        data[ink] = 0.1
        save_image(root / "c" / f"c{i}.png", RasterImage(data))
        save_mask(root / "g" / f"c{i}.png", BinaryMask(ink))
        contents.append(ContentAsset(f"c{i}", str(root / "c" / f"c{i}.png"), str(root / "g" / f"c{i}.png")))
    styles = ["plain_page", "grid_lines", "uniform_ruled_lines"]
    degr = [(), ("shadow_gradients",), ("oily_patches", "liquid_stains")]
    backgrounds = []
    for j in range(n_backgrounds):
        data = 0.8 + 0.15 * rng.random((size, size, 3))
        save_image(root / "b" / f"b{j}.png", RasterImage(data))
        backgrounds.append(BackgroundAsset(f"b{j}", str(root / "b" / f"b{j}.png"),
                                           styles[j % 3], degr[j % 3]))
    write_jsonl(root / "contents.jsonl", content_rows(contents, root))
    write_jsonl(root / "backgrounds.jsonl", background_rows(backgrounds, root))
    return root / "contents.jsonl", root / "backgrounds.jsonl"


@pytest.fixture
def small_assets(tmp_path):
    return make_small_assets(tmp_path / "assets")


ACCEPTANCE_LINES: list = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion; printed at session end."""
    def record(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  criterion {number}: {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
