"""Lattice covers, pre-frame operators built from weighted kernels, and block estimators."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .core import FockModel, tilde_kernel_matrix, weighted_basis
from .operators import OpMatrix, op_norm
from .weights import InvalidParameterError

DIM = 1  # complex dimension; the cover bounds below are stated for C^n with n = 1


@dataclass(frozen=True)
class LatticeCover:
    """Cells ``F_j = [-d, d)^2 + sigma`` (``sigma`` in ``2d Z^2``) meeting a square window.

    The dilates ``G_j`` are taken half-open, ``[-2d, 2d)^2 + sigma``, which is
    the sup-distance-``d`` neighbourhood of ``F_j`` up to its upper edges.
    """

    d: float
    window: tuple  # (xmin, xmax, ymin, ymax)
    centers: np.ndarray

    def _index(self, points):
        p = np.asarray(points, dtype=complex)
        step = 2 * self.d
        return np.floor((p.real + self.d) / step), np.floor((p.imag + self.d) / step)

    def _center_index(self):
        step = 2 * self.d
        return np.rint(self.centers.real / step), np.rint(self.centers.imag / step)

    def cell_of(self, points) -> np.ndarray:
        """Lattice centre of the unique ``F_j`` containing each point."""
        ix, iy = self._index(points)
        return 2 * self.d * (ix + 1j * iy)

    def in_cells(self, points) -> np.ndarray:
        """Boolean matrix ``[point, cell]`` of membership in ``F_j``."""
        ix, iy = self._index(points)
        cx, cy = self._center_index()
        return (ix[:, None] == cx[None, :]) & (iy[:, None] == cy[None, :])

    def in_dilates(self, points) -> np.ndarray:
        """Boolean matrix ``[point, cell]`` of membership in ``G_j = [-2d, 2d)^2 + sigma``."""
        p = np.asarray(points, dtype=complex)
        step = 2 * self.d
        jx, jy = np.floor(p.real / step), np.floor(p.imag / step)
        cx, cy = self._center_index()
        dx = cx[None, :] - jx[:, None]
        dy = cy[None, :] - jy[:, None]
        return (dx >= 0) & (dx <= 1) & (dy >= 0) & (dy <= 1)

    @property
    def dilate_diameter(self) -> float:
        # G_j is a square of side 4d; its closure has diameter equal to the diagonal
        return float(np.hypot(4 * self.d, 4 * self.d))

    def check(self, n_points: int = 10_000, seed: int = 0) -> dict:
        """Verify disjointness, bounded overlap and the diameter bound on random window points."""
        rng = np.random.default_rng(seed)
        x0, x1, y0, y1 = self.window
        pts = rng.uniform(x0, x1, n_points) + 1j * rng.uniform(y0, y1, n_points)
        pts = pts[(pts.real < x1) & (pts.imag < y1)]
        # lattice corners hit the half-open edges exactly
        corners = (2 * self.d * np.arange(np.floor(x0 / (2 * self.d)), np.ceil(x1 / (2 * self.d)) + 1) - self.d)
        edge = (corners[:, None] + 1j * corners[None, :]).ravel()
        edge = edge[(edge.real >= x0) & (edge.real < x1) & (edge.imag >= y0) & (edge.imag < y1)]
        pts = np.concatenate([pts, edge])
        cells = self.in_cells(pts).sum(axis=1)
        overlap = self.in_dilates(pts).sum(axis=1)
        return {
            "disjoint": bool(np.all(cells == 1)),
            "max_overlap": int(overlap.max()),
            "overlap_bound": 2 ** (2 * DIM),
            "overlap_ok": bool(overlap.max() <= 2 ** (2 * DIM)),
            "diameter": self.dilate_diameter,
            "diameter_ok": bool(self.dilate_diameter <= 4 * self.d * np.sqrt(2 * DIM) + 1e-12),
            "n_points": int(pts.size),
        }


def make_cover(d: float, window) -> LatticeCover:
    """Cover of a square window by the cells ``[-d, d)^2 + 2d Z^2``.

    ``window`` is a half-width ``W`` (meaning ``[-W, W]^2``) or a tuple
    ``(xmin, xmax, ymin, ymax)``. Cells meeting the window interior are kept.
    """
    if d <= 0:
        raise InvalidParameterError("d: must be > 0")
    if np.isscalar(window):
        window = (-window, window, -window, window)
    x0, x1, y0, y1 = map(float, window)
    if not (x1 > x0 and y1 > y0):
        raise InvalidParameterError("window: must be a nonempty box")
    step = 2 * d

    def axis(lo, hi):
        # cell [s - d, s + d) meets the open interval (lo, hi)
        k = np.arange(np.floor((lo - d) / step), np.ceil((hi + d) / step) + 1)
        s = step * k
        return s[(s + d > lo) & (s - d < hi)]

    sx, sy = axis(x0, x1), axis(y0, y1)
    centers = (sx[:, None] + 1j * sy[None, :]).ravel()
    return LatticeCover(float(d), (x0, x1, y0, y1), centers)


def lattice_points(R: float) -> np.ndarray:
    """Gaussian integers ``u`` with ``|u|_inf < R``, in row-major order."""
    if R <= 0:
        return np.zeros(0, dtype=complex)
    m = int(np.ceil(R)) - 1
    ax = np.arange(-m, m + 1)
    ax = ax[np.abs(ax) < R]
    return (ax[:, None] + 1j * ax[None, :]).ravel()


@dataclass
class PreFrame:
    """Synthesis matrix of ``F_{z;R}``: column ``u`` holds ``e^{-phi} K(., u + z)``."""

    z: complex
    R: float
    points: np.ndarray
    matrix: np.ndarray
    trusted: np.ndarray

    @property
    def norm(self) -> float:
        if self.matrix.shape[1] == 0:
            return 0.0
        return op_norm(self.matrix)

    @property
    def n_untrusted(self) -> int:
        return int(np.count_nonzero(~self.trusted))


def preframe(model: FockModel, z: complex, R: float, drop_untrusted: bool = False) -> PreFrame:
    """Pre-frame over the lattice points ``u + z`` with ``|u|_inf < R``.

    Columns at untrusted points are kept and flagged unless
    ``drop_untrusted`` is set.
    """
    pts = lattice_points(R) + complex(z)
    trusted = model.trusted(pts)
    if drop_untrusted:
        pts, trusted = pts[trusted], trusted[trusted]
    mat = tilde_kernel_matrix(model, pts) if pts.size else np.zeros((model.dim, 0), complex)
    return PreFrame(complex(z), float(R), pts, mat, trusted)


@dataclass
class FrameScan:
    z: np.ndarray
    R: float
    norms: np.ndarray
    n_untrusted: int

    @property
    def spread(self) -> float:
        """``(max - min) / max`` of the sampled norms."""
        top = self.norms.max()
        return float((top - self.norms.min()) / top) if top > 0 else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z_re", "z_im", "R", "norm"])
        for z, n in zip(self.z, self.norms):
            w.writerow([repr(z.real), repr(z.imag), repr(self.R), repr(float(n))])
        return buf.getvalue()


def frame_norm_scan(model: FockModel, R: float, z_samples) -> FrameScan:
    """Operator norms of the pre-frames ``F_{z;R}`` over sample centres."""
    zs = np.atleast_1d(np.asarray(z_samples, dtype=complex))
    frames = [preframe(model, z, R) for z in zs]
    return FrameScan(zs, float(R), np.array([f.norm for f in frames]), sum(f.n_untrusted for f in frames))


def identity_quadrature(model: FockModel, cell_size: float, domain_radius: float) -> OpMatrix:
    """Midpoint sum of ``k~_z (x) k~_z`` over square cells with centres in ``B(0, domain_radius)``."""
    if cell_size <= 0:
        raise InvalidParameterError("cell_size: must be > 0")
    n = model.dim
    if domain_radius <= 0:
        return OpMatrix.zeros(n)
    m = int(np.ceil(domain_radius / cell_size))
    ax = cell_size * (np.arange(-m, m) + 0.5)
    pts = (ax[:, None] + 1j * ax[None, :]).ravel()
    pts = pts[np.abs(pts) <= domain_radius]
    out = np.zeros((n, n), dtype=complex)
    for s in range(0, pts.size, 20000):
        psi = weighted_basis(model, pts[s:s + 20000])
        out += psi.conj().T @ psi
    return OpMatrix(out * cell_size**2)


def identity_deviation(M: OpMatrix, block: int = 10) -> float:
    """Max-entry deviation from the identity on the leading block."""
    b = min(block, M.n)
    return float(np.max(np.abs(M.data[:b, :b] - np.eye(b))))


def _lattice_window(W: int) -> np.ndarray:
    ax = np.arange(-W, W + 1)
    return (ax[:, None] + 1j * ax[None, :]).ravel()


def offdiag_block_norm(model: FockModel, B: OpMatrix, separation_R: float, lattice_window: int,
                       eta: complex = 0.0, xi: complex = 0.0) -> float:
    """Norm of ``sum_{|u - v| >= R} <B k~_{v+eta}, k~_{u+xi}> e_u (x) e_v`` over a lattice window."""
    if separation_R < 1:
        raise InvalidParameterError("separation_R: must be >= 1")
    for s in (eta, xi):
        if not (0 <= s.real < 1 and 0 <= s.imag < 1) if isinstance(s, complex) else not (0 <= s < 1):
            raise InvalidParameterError("eta, xi: must lie in [0, 1)^2")
    u = _lattice_window(int(lattice_window))
    far = np.abs(u[:, None] - u[None, :]) >= separation_R
    if not far.any():
        return 0.0
    Fv = tilde_kernel_matrix(model, u + eta)
    Fu = tilde_kernel_matrix(model, u + xi)
    G = Fu.conj().T @ B.data @ Fv
    return op_norm(np.where(far, G, 0.0))


def block_lower_bound(model: FockModel, A: OpMatrix, R: float, a: complex, b: complex) -> float:
    """``|| F_{a;R}^* A F_{a+b;R} ||``."""
    if max(abs(complex(b).real), abs(complex(b).imag)) > 2:
        raise InvalidParameterError("b: need |b|_inf <= 2")
    Fa = preframe(model, a, R).matrix
    Fb = preframe(model, complex(a) + complex(b), R).matrix
    if Fa.shape[1] == 0:
        return 0.0
    return op_norm(Fa.conj().T @ A.data @ Fb)


BLOCK_SHIFTS = (0, 1, -1, 1j, -1j, 1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j)


def block_search(model: FockModel, A: OpMatrix, R: float, n_lo: int, n_hi: int, shifts=BLOCK_SHIFTS):
    """Maximise :func:`block_lower_bound` over lattice ``a`` with ``n_lo <= |a|_inf <= n_hi``.

    Returns ``(value, a, b)`` of the maximiser.
    """
    ax = np.arange(-n_hi, n_hi + 1)
    cand = (ax[:, None] + 1j * ax[None, :]).ravel()
    sup = np.maximum(np.abs(cand.real), np.abs(cand.imag))
    cand = cand[(sup >= n_lo) & (sup <= n_hi)]
    best = (-1.0, None, None)
    for a in cand:
        for b in shifts:
            v = block_lower_bound(model, A, R, a, b)
            if v > best[0]:
                best = (v, complex(a), complex(b))
    return best


def deviation_report(model: FockModel, cells, domain_radius: float, block: int = 10) -> str:
    devs = [identity_deviation(identity_quadrature(model, h, domain_radius), block) for h in cells]
    return json.dumps({"cell_size": list(map(float, cells)), "deviation": devs,
                       "domain_radius": domain_radius, "block": block, "N": model.dim})
