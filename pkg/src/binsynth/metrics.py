"""Binarization scores: F-measure, pseudo F-measure, PSNR and pixel BCE.

Pseudo F-measure here takes recall against the Zhang-Suen skeleton of the
ground truth and precision against the full ground truth. It is not the
distance-weighted variant of the official DIBCO tool, so numbers are
comparable only to other runs of this module.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import ndimage

from .raster import BinaryMask, load_image, load_mask

BCE_EPS = 1e-7
PF_NOTE = ("PF = harmonic mean of precision (vs. full GT) and recall vs. the Zhang-Suen skeleton of GT; "
           "not the distance-weighted DIBCO variant")


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _check(a, b):
    if a.shape != b.shape:
        raise MetricError(f"dimension mismatch: {a.shape} vs {b.shape}")


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def confusion(pred: BinaryMask, gt: BinaryMask) -> ConfusionCounts:
    _check(pred, gt)
    p, g = pred.data, gt.data
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    return ConfusionCounts(tp, fp, fn, p.size - tp - fp - fn)


def f_score(c: ConfusionCounts) -> float:
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    return _ratio(2 * precision * recall, precision + recall)


# neighbor order P2..P9: N, NE, E, SE, S, SW, W, NW
_NEIGHBORS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


def _zs_pass(img: np.ndarray, first: bool) -> np.ndarray:
    """One Zhang-Suen sub-iteration on a zero-padded uint8 image; returns deletable pixels."""
    h, w = img.shape[0] - 2, img.shape[1] - 2
    P = [img[1 + dy:1 + dy + h, 1 + dx:1 + dx + w] for dy, dx in _NEIGHBORS]
    B = sum(p.astype(np.int32) for p in P)
    A = sum(((P[i] == 0) & (P[(i + 1) % 8] == 1)).astype(np.int32) for i in range(8))
    p2, p4, p6, p8 = P[0], P[2], P[4], P[6]
    if first:
        c3 = (p2 * p4 * p6) == 0
        c4 = (p4 * p6 * p8) == 0
    else:
        c3 = (p2 * p4 * p8) == 0
        c4 = (p2 * p6 * p8) == 0
    core = img[1:-1, 1:-1] == 1
    return core & (B >= 2) & (B <= 6) & (A == 1) & c3 & c4


_EIGHT = np.ones((3, 3), dtype=bool)


def skeletonize(mask: BinaryMask) -> BinaryMask:
    """Zhang-Suen thinning to a fixpoint.

    Plain Zhang-Suen erases 2x2 blocks completely; any 8-connected component
    that vanishes gets its first (row-major) pixel restored, so the number of
    components is kept.
    """
    m = mask.data
    img = np.pad(m.astype(np.uint8), 1)
    inner = img[1:-1, 1:-1]
    while True:
        changed = False
        for first in (True, False):
            kill = _zs_pass(img, first)
            if kill.any():
                inner[kill] = 0
                changed = True
        if not changed:
            break
    skel = inner.astype(bool)
    labels, n = ndimage.label(m, structure=_EIGHT)
    if n:
        alive = np.zeros(n + 1, dtype=bool)
        alive[np.unique(labels[skel])] = True
        lost = np.nonzero(~alive[1:])[0] + 1
        if lost.size:
            flat = labels.ravel()
            first_idx = {}
            for idx in np.flatnonzero(np.isin(flat, lost)):
                first_idx.setdefault(flat[idx], idx)
            skel.ravel()[list(first_idx.values())] = True
    return BinaryMask(skel)


def pf_score(pred: BinaryMask, gt: BinaryMask, gt_skeleton: Optional[BinaryMask] = None) -> float:
    _check(pred, gt)
    skel = skeletonize(gt) if gt_skeleton is None else gt_skeleton
    c = confusion(pred, gt)
    precision = _ratio(c.tp, c.tp + c.fp)
    pseudo_recall = _ratio(int(np.count_nonzero(pred.data & skel.data)), int(np.count_nonzero(skel.data)))
    return _ratio(2 * precision * pseudo_recall, precision + pseudo_recall)


def psnr(pred: BinaryMask, gt: BinaryMask) -> float:
    """PSNR in dB with peak 1 over {0, 1} masks; identical masks give ``math.inf``."""
    _check(pred, gt)
    diff = int(np.count_nonzero(pred.data != gt.data))
    if diff == 0:
        return math.inf
    return 10.0 * math.log10(pred.data.size / diff)


def bce(prob: np.ndarray, gt: BinaryMask) -> float:
    """Mean binary cross-entropy (nats per pixel) of a foreground-probability map."""
    prob = np.asarray(prob, dtype=np.float64)
    _check(prob, gt)
    if prob.size and (prob.min() < 0.0 or prob.max() > 1.0):
        raise MetricError("probabilities must lie in [0, 1]")
    p = np.clip(prob, BCE_EPS, 1.0 - BCE_EPS)
    y = gt.data
    return float(np.mean(np.where(y, -np.log(p), -np.log1p(-p))))


@dataclass
class MetricReport:
    f_score: float
    pf_score: float
    psnr: float
    bce: Optional[float] = None
    name: str = ""

    def to_json(self) -> dict:
        row = {"name": self.name, "f_score": self.f_score, "pf_score": self.pf_score,
               "psnr": "inf" if math.isinf(self.psnr) else self.psnr}
        if self.bce is not None:
            row["bce"] = self.bce
        return row


def evaluate(pred: BinaryMask, gt: BinaryMask, prob: Optional[np.ndarray] = None, name: str = "") -> MetricReport:
    return MetricReport(f_score(confusion(pred, gt)), pf_score(pred, gt), psnr(pred, gt),
                        None if prob is None else bce(prob, gt), name)


@dataclass
class CorpusReport:
    images: list
    mean_f: float
    mean_pf: float
    mean_psnr: float  # nan when every PSNR is infinite
    psnr_infinite: int
    mean_bce: Optional[float] = None
    unmatched_pred: tuple = ()
    unmatched_gt: tuple = ()

    def table(self) -> str:
        """Aligned text table, one row per metric."""
        lines = [f"# {PF_NOTE}", f"# images: {len(self.images)}"]
        rows = [("F_score", self.mean_f), ("PF_score", self.mean_pf), ("PSNR", self.mean_psnr)]
        if self.mean_bce is not None:
            rows.append(("BCE", self.mean_bce))
        lines.append(f"{'Metric':<10}{'Mean':>12}")
        for label, value in rows:
            shown = "n/a" if math.isnan(value) else f"{value:.4f}"
            lines.append(f"{label:<10}{shown:>12}")
        lines.append(f"# PSNR excluded as infinite: {self.psnr_infinite}")
        if self.unmatched_pred or self.unmatched_gt:
            lines.append(f"# unmatched pred stems: {list(self.unmatched_pred)}")
            lines.append(f"# unmatched gt stems: {list(self.unmatched_gt)}")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {"images": len(self.images), "f_score": self.mean_f, "pf_score": self.mean_pf,
                "psnr": None if math.isnan(self.mean_psnr) else self.mean_psnr,
                "psnr_infinite": self.psnr_infinite, "bce": self.mean_bce}

    def jsonl(self) -> str:
        return "".join(json.dumps(r.to_json()) + "\n" for r in self.images)


def _stems(directory) -> dict:
    return {p.stem: p for p in sorted(Path(directory).glob("*.png"))}


def evaluate_corpus(pred_dir, gt_dir, prob_dir=None) -> CorpusReport:
    """Score every prediction PNG against the ground-truth PNG with the same stem.

    Iteration and aggregation follow sorted stem order.
    """
    preds, gts = _stems(pred_dir), _stems(gt_dir)
    common = sorted(preds.keys() & gts.keys())
    only_pred = tuple(sorted(preds.keys() - gts.keys()))
    only_gt = tuple(sorted(gts.keys() - preds.keys()))
    if not common:
        raise MetricError(f"no matching stems between {pred_dir} ({len(preds)} files: {list(preds)[:5]}) "
                          f"and {gt_dir} ({len(gts)} files: {list(gts)[:5]})")
    probs = _stems(prob_dir) if prob_dir is not None else {}
    reports = []
    for stem in common:
        prob = None
        if stem in probs:
            prob_img = load_image(probs[stem])
            if prob_img.channels != 1:
                raise MetricError(f"probability map {probs[stem]} must be single-channel")
            prob = prob_img.data
        reports.append(evaluate(load_mask(preds[stem]), load_mask(gts[stem]), prob, name=stem))

    finite = [r.psnr for r in reports if not math.isinf(r.psnr)]
    bces = [r.bce for r in reports if r.bce is not None]
    return CorpusReport(
        images=reports,
        mean_f=float(np.mean([r.f_score for r in reports])),
        mean_pf=float(np.mean([r.pf_score for r in reports])),
        mean_psnr=float(np.mean(finite)) if finite else math.nan,
        psnr_infinite=len(reports) - len(finite),
        mean_bce=float(np.mean(bces)) if bces else None,
        unmatched_pred=only_pred,
        unmatched_gt=only_gt,
    )
