"""Gradient-domain (Poisson) seamless cloning with mixed gradients.

The interior Omega of a region is solved so that its discrete Laplacian
matches a guidance field while the surrounding 4-neighbors (the boundary)
keep their target values. The linear system is symmetric positive definite
and is solved with plain conjugate gradients.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .raster import BinaryMask, RasterImage

log = logging.getLogger(__name__)

# (dy, dx) for the four directed edges leaving a pixel: up, down, left, right
DIRECTIONS = ((-1, 0), (1, 0), (0, -1), (0, 1))

DEFAULT_TOL = 1e-10


class CloneError(ValueError):
    pass


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


def _shift(a: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """out[y, x] = a[y + dy, x + dx]; zero where that falls off the canvas."""
    out = np.zeros_like(a)
    h, w = a.shape
    ys, yd = (slice(dy, h), slice(0, h - dy)) if dy >= 0 else (slice(0, h + dy), slice(-dy, h))
    xs, xd = (slice(dx, w), slice(0, w - dx)) if dx >= 0 else (slice(0, w + dx), slice(-dx, w))
    out[yd, xd] = a[ys, xs]
    return out


@dataclass(frozen=True, eq=False)
class CloneRegion:
    """Interior pixels Omega of a clone; must not touch the canvas edge."""

    mask: BinaryMask

    def __post_init__(self):
        m = self.mask.data
        if not m.any():
            raise CloneError("clone region is empty")
        if m[0, :].any() or m[-1, :].any() or m[:, 0].any() or m[:, -1].any():
            raise CloneError("clone region touches the canvas edge")

    @classmethod
    def full_patch(cls, height: int, width: int) -> "CloneRegion":
        """Whole canvas minus a 1-pixel frame."""
        if height < 3 or width < 3:
            raise CloneError(f"canvas {width}x{height} too small for a framed region")
        m = np.zeros((height, width), dtype=bool)
        m[1:-1, 1:-1] = True
        return cls(BinaryMask(m))

    @property
    def shape(self) -> tuple:
        return self.mask.shape

    @property
    def interior(self) -> np.ndarray:
        return self.mask.data

    @property
    def size(self) -> int:
        return self.mask.count()

    def boundary(self) -> np.ndarray:
        """Pixels outside Omega with a 4-neighbor inside Omega."""
        m = self.interior
        near = np.zeros_like(m)
        for dy, dx in DIRECTIONS:
            near |= _shift(m, dy, dx)
        return near & ~m


@dataclass(frozen=True, eq=False)
class GuidanceField:
    """Directed edge values v_pq for p in Omega.

    ``edges[k][y, x]`` holds v for the edge from (y, x) to its neighbor in
    ``DIRECTIONS[k]``; entries for pixels outside Omega are zero.
    """

    edges: np.ndarray  # shape (4, H, W)

    def divergence(self) -> np.ndarray:
        """Sum over q in N_p of v_pq, per pixel."""
        return self.edges.sum(axis=0)


@dataclass(frozen=True, eq=False)
class CloneRequest:
    source: RasterImage
    target: RasterImage
    region: CloneRegion
    mode: str = "mixed"

    def __post_init__(self):
        if self.mode not in ("mixed", "source"):
            raise CloneError(f"mode must be 'mixed' or 'source', got {self.mode!r}")
        if self.source.shape[:2] != self.target.shape[:2] or self.region.shape != self.target.shape[:2]:
            raise CloneError(
                f"dimension mismatch: source {self.source.shape[:2]}, target {self.target.shape[:2]}, "
                f"region {self.region.shape}")


def _matched_planes(req: CloneRequest) -> tuple[list, list]:
    src, dst = req.source.planes(), req.target.planes()
    # grayscale content against a color target: replicate the gray plane
    if len(src) == 1 and len(dst) == 3:
        src = src * 3
    elif len(src) == 3 and len(dst) == 1:
        dst = dst * 3
    return src, dst


def guidance_for_plane(g: np.ndarray, f: np.ndarray, interior: np.ndarray,
                       mode: str = "mixed") -> GuidanceField:
    edges = np.zeros((4,) + g.shape)
    for k, (dy, dx) in enumerate(DIRECTIONS):
        dg = g - _shift(g, dy, dx)
        if mode == "mixed":
            df = f - _shift(f, dy, dx)
            v = np.where(np.abs(dg) >= np.abs(df), dg, df)
        else:
            v = dg
        edges[k] = np.where(interior, v, 0.0)
    return GuidanceField(edges)


def build_guidance(req: CloneRequest) -> list[GuidanceField]:
    """One guidance field per output channel.

    Mixed mode keeps, per edge, whichever of the source or target difference
    is larger in magnitude; equal magnitudes keep the source difference.
    """
    src, dst = _matched_planes(req)
    return [guidance_for_plane(g, f, req.region.interior, req.mode) for g, f in zip(src, dst)]


def laplacian_system(region: CloneRegion) -> tuple[sp.csr_matrix, np.ndarray]:
    """Sparse 4-neighbor Laplacian over Omega in row-major order, plus the index map."""
    m = region.interior
    h, w = m.shape
    index = np.full((h, w), -1, dtype=np.int64)
    n = int(m.sum())
    index[m] = np.arange(n)
    rows, cols, vals = [np.arange(n)], [np.arange(n)], [np.full(n, 4.0)]
    ys, xs = np.nonzero(m)
    for dy, dx in DIRECTIONS:
        nb = index[ys + dy, xs + dx]
        inside = nb >= 0
        rows.append(index[ys[inside], xs[inside]])
        cols.append(nb[inside])
        vals.append(np.full(int(inside.sum()), -1.0))
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    A.sort_indices()
    return A, index


def poisson_rhs(region: CloneRegion, guidance: GuidanceField, boundary: np.ndarray) -> np.ndarray:
    m = region.interior
    outside = np.where(m, 0.0, boundary)
    known = sum(_shift(outside, dy, dx) for dy, dx in DIRECTIONS)
    return (known + guidance.divergence())[m]


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    # pairwise summation in a fixed order; BLAS dot may split work across threads
    return float(np.add.reduce(a * b))


def conjugate_gradient(A, b: np.ndarray, x0: np.ndarray, tol: float = DEFAULT_TOL,
                       max_iter: int | None = None) -> tuple[np.ndarray, int, float]:
    """Unpreconditioned CG for SPD ``A``.

    Stops once ||b - A x|| <= tol * ||b|| (absolute ``tol`` when b = 0).
    Returns ``(x, iterations, relative_residual)``; raises SolverError at
    the iteration cap.
    """
    n = b.shape[0]
    max_iter = 10 * n if max_iter is None else max_iter
    bnorm = np.sqrt(_dot(b, b))
    scale = bnorm if bnorm > 0 else 1.0
    target = (tol * scale) ** 2

    x = x0.astype(np.float64, copy=True)
    r = b - A @ x
    rr = _dot(r, r)
    d = r.copy()
    it = 0
    while rr > target:
        if it >= max_iter:
            raise SolverError("conjugate gradients did not converge", np.sqrt(rr) / scale, it)
        q = A @ d
        alpha = rr / _dot(d, q)
        x += alpha * d
        r -= alpha * q
        rr_new = _dot(r, r)
        it += 1
        if rr_new <= target:
            # confirm on the true residual before accepting
            r = b - A @ x
            rr_new = _dot(r, r)
            if rr_new > target:
                d = r.copy()
                rr = rr_new
                continue
        d = r + (rr_new / rr) * d
        rr = rr_new
    return x, it, np.sqrt(rr) / scale


@dataclass
class PoissonSolution:
    values: np.ndarray  # interior intensities, row-major over Omega
    iterations: int
    residual: float


def solve_poisson(region: CloneRegion, guidance: GuidanceField, boundary: np.ndarray,
                  tol: float = DEFAULT_TOL, clamp: bool = True) -> PoissonSolution:
    """Solve the cloning system over ``region``.

    ``boundary`` is a full (H, W) plane; its values on the boundary ring are
    the Dirichlet data and its values on Omega seed the iteration.
    """
    boundary = np.asarray(boundary, dtype=np.float64)
    if boundary.shape != region.shape or guidance.edges.shape[1:] != region.shape:
        raise CloneError("boundary/guidance dimensions do not match the region")
    A, _ = laplacian_system(region)
    b = poisson_rhs(region, guidance, boundary)
    x, it, res = conjugate_gradient(A, b, boundary[region.interior], tol=tol)
    log.debug("poisson solve: |omega|=%d iterations=%d residual=%.2e", b.size, it, res)
    if clamp:
        x = np.clip(x, 0.0, 1.0)
    return PoissonSolution(x, it, res)


def seamless_clone(req: CloneRequest, tol: float = DEFAULT_TOL) -> RasterImage:
    """Blend ``req.source`` into ``req.target`` over ``req.region``.

    Pixels outside the region are copied from the target unchanged.
    """
    src, dst = _matched_planes(req)
    m = req.region.interior
    out_planes = []
    for g, f in zip(src, dst):
        v = guidance_for_plane(g, f, m, req.mode)
        plane = f.copy()
        plane[m] = solve_poisson(req.region, v, f, tol=tol).values
        out_planes.append(plane)
    data = out_planes[0] if len(out_planes) == 1 else np.stack(out_planes, axis=-1)
    return RasterImage(data)
