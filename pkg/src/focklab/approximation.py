"""Symbol calculus on the classical space, heat-kernel smoothing and point-mass limits."""

from __future__ import annotations

from math import factorial

import numpy as np
from scipy import ndimage

from .core import FockModel, kernel, weighted_basis, weighted_kernel
from .localization import DecayCurve
from .operators import OpMatrix, op_norm, toeplitz_function, toeplitz_indicator_ball, toeplitz_measure, toeplitz_poly
from .quadrature import QuadSpec
from .symbols import DiscreteMeasure, GridSymbol, SymbolPoly
from .weights import InvalidParameterError

# heat kernel is cut where its 1-d tail mass is about 1e-14
HEAT_CUTOFF = 12.0
LEADING_GAP = 5


class UnsupportedWeightError(InvalidParameterError):
    """The requested construction exists only for the classical Gaussian weight."""


def require_classical(model: FockModel, alpha: float | None = None):
    if model.weight.kind != "classical":
        raise UnsupportedWeightError(f"requires the classical weight, model has {model.weight.kind!r}")
    if alpha is not None and not np.isclose(alpha, model.alpha):
        raise UnsupportedWeightError(f"alpha={alpha} does not match the model (alpha={model.alpha})")


def sharp_product(f: SymbolPoly, g: SymbolPoly, alpha: float) -> SymbolPoly:
    """``sum_k (-alpha)^{-k} / k! * d_z^k f * d_zbar^k g`` (finite for polynomials)."""
    if not alpha > 0:
        raise InvalidParameterError("alpha: must be > 0")
    top = min(max((a for a, _ in f.coeffs), default=0), max((b for _, b in g.coeffs), default=0))
    out = SymbolPoly()
    for k in range(top + 1):
        out = out + (f.d_z(k) * g.d_zbar(k)) * (1.0 / ((-alpha) ** k * factorial(k)))
    return out


def verify_sharp(model: FockModel, f: SymbolPoly, g: SymbolPoly, alpha: float | None = None) -> float:
    """Spectral norm of ``T_f T_g - T_{f # g}`` on the leading ``N - 5`` block."""
    require_classical(model, alpha)
    alpha = model.alpha if alpha is None else alpha
    L = model.dim - LEADING_GAP
    if L <= 0:
        raise InvalidParameterError("N must exceed 5 for the leading-block comparison")
    lhs = toeplitz_poly(model, f) @ toeplitz_poly(model, g)
    rhs = toeplitz_poly(model, sharp_product(f, g, alpha))
    return op_norm((lhs - rhs).data[:L, :L])


def heat_kernel(z, t: float):
    """``(4 pi t)^{-1} exp(-|z|^2 / 4t)``."""
    return np.exp(-np.abs(z) ** 2 / (4 * t)) / (4 * np.pi * t)


def heat_transform(data, t: float, grid: GridSymbol | None = None) -> GridSymbol:
    """Convolve a grid symbol or a discrete measure with the heat kernel at time ``t``.

    Grid symbols are convolved directly with the sampled, truncated and
    renormalised kernel (separable, edge values extended). Discrete measures
    are summed exactly on the nodes of ``grid``.
    """
    if not t > 0:
        raise InvalidParameterError("t: must be > 0")
    if isinstance(data, DiscreteMeasure):
        if grid is None:
            raise InvalidParameterError("grid: needed to sample the heat transform of a measure")
        pts = grid.points
        vals = sum(c * heat_kernel(pts - p, t) for p, c in zip(data.points, data.masses))
        return GridSymbol(grid.x0, grid.y0, grid.h, np.asarray(vals, dtype=complex))
    if not isinstance(data, GridSymbol):
        raise InvalidParameterError("heat_transform expects a GridSymbol or DiscreteMeasure")
    h = data.h
    if 4 * t < h * h:
        raise InvalidParameterError(f"t={t} is below the grid-resolvable scale h^2/4={h * h / 4}")
    m = int(np.ceil(HEAT_CUTOFF * np.sqrt(t) / h))
    x = h * np.arange(-m, m + 1)
    k1 = np.exp(-(x**2) / (4 * t))
    k1 /= k1.sum()

    def smooth(a):
        a = ndimage.convolve1d(a, k1, axis=0, mode="nearest")
        return ndimage.convolve1d(a, k1, axis=1, mode="nearest")

    v = data.values
    out = smooth(v.real) + 1j * smooth(v.imag)
    return GridSymbol(data.x0, data.y0, h, out)


def toeplitz_grid(model: FockModel, G: GridSymbol) -> OpMatrix:
    """Toeplitz matrix of a sampled symbol by the grid (midpoint) sum."""
    pts = G.points.ravel()
    vals = G.values.ravel()
    keep = vals != 0
    pts, vals = pts[keep], vals[keep]
    out = np.zeros((model.dim, model.dim), dtype=complex)
    for s in range(0, pts.size, 20000):
        psi = weighted_basis(model, pts[s:s + 20000])
        out += psi.conj().T @ ((vals[s:s + 20000] * G.h**2)[:, None] * psi)
    return OpMatrix(out)


def heat_convergence_curve(model: FockModel, f, t_list, h: float = 0.025, half_width: float | None = None,
                           spec: QuadSpec = QuadSpec()) -> DecayCurve:
    """``t -> || T_{f~(t)} - T_f ||`` with ``f~(t)`` the heat transform of ``f`` sampled on a grid.

    The grid spans the region where the basis lives; ``T_f`` itself is
    computed by adaptive quadrature.
    """
    require_classical(model)
    if half_width is None:
        half_width = model.plane_radius()
    G = GridSymbol.sample(f, half_width, h)
    Tf = toeplitz_function(model, f, spec)
    t_list = np.asarray(t_list, dtype=float)
    vals, sups = [], []
    rho = model.trust_radius
    inside = np.abs(G.points) <= rho
    for t in t_list:
        Gt = heat_transform(G, t)
        vals.append(op_norm(toeplitz_grid(model, Gt) - Tf))
        sups.append(float(np.max(np.abs(Gt.values - G.values)[inside])))
    order = np.argsort(t_list)
    return DecayCurve(t_list[order], np.asarray(vals)[order], np.full(t_list.size, G.values.size),
                      np.ones(t_list.size, bool), "heat_convergence",
                      {"h": h, "half_width": half_width, "symbol_sup_diff": list(np.asarray(sups)[order])})


def point_mass_limit_curve(model: FockModel, w: complex, eps_list, spec: QuadSpec = QuadSpec()) -> DecayCurve:
    """``eps -> || T_{F_w^eps} - T_{delta_w} ||`` for the unit-mass bumps ``F_w^eps``."""
    if not model.trusted(w):
        raise InvalidParameterError(f"w={w} lies beyond the trust radius {model.trust_radius:.3f}")
    eps = np.asarray(eps_list, dtype=float)
    Td = toeplitz_measure(model, DiscreteMeasure.point_mass(w))
    vals = [op_norm(toeplitz_indicator_ball(model, w, e, spec) - Td) for e in eps]
    order = np.argsort(eps)
    return DecayCurve(eps[order], np.asarray(vals)[order], np.ones(eps.size, int), np.ones(eps.size, bool),
                      "point_mass_limit", {"w": [complex(w).real, complex(w).imag]})


def rank_one_from_pointmasses(model: FockModel, z: complex, w: complex, tol: float = 1e-12):
    """Rebuild ``K(., z) (x) K(., w)`` as ``e^{2phi(z) + 2phi(w)} / K(z, w) * T_{delta_z} T_{delta_w}``.

    Returns the right-hand side and its relative Frobenius residual against
    the directly assembled rank-one matrix.
    """
    kzw = kernel(model, z, w)
    if abs(kzw) <= tol:
        raise InvalidParameterError(f"K_N(z, w) = {abs(kzw):.2e} vanishes: z={z} is a zero of K(., w)")
    psi = weighted_basis(model, [z, w])
    # both sides scaled by exp(-phi(z) - phi(w)) to keep magnitudes moderate
    direct = np.outer(psi[0].conj(), psi[1])
    Tz = toeplitz_measure(model, DiscreteMeasure.point_mass(z)).data
    Tw = toeplitz_measure(model, DiscreteMeasure.point_mass(w)).data
    rebuilt = (Tz @ Tw) / weighted_kernel(model, z, w)
    resid = np.linalg.norm(rebuilt - direct) / np.linalg.norm(direct)
    scale = np.exp(model.weight.phi(abs(z)) + model.weight.phi(abs(w)))
    return OpMatrix(rebuilt * scale), float(resid)
