"""Matrices of Toeplitz operators and their Berezin-type diagnostics on the truncated space."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .core import (FockModel, normalized_kernel, normalized_kernel_matrix, weighted_basis)
from .quadrature import QuadSpec, accumulate_disk, radial_rule
from .symbols import DiscreteMeasure, Symbol, SymbolPoly, SymbolSum, indicator_ball
from .weights import InvalidParameterError, QuadratureError

log = logging.getLogger(__name__)


@dataclass(eq=False)
class OpMatrix:
    """Matrix of an operator in the basis ``e_0, ..., e_{N-1}``.

    ``data[k, j]`` is ``<A e_j, e_k>``.
    """

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 2 or self.data.shape[0] != self.data.shape[1]:
            raise InvalidParameterError(f"operator matrix must be square, got shape {self.data.shape}")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @classmethod
    def identity(cls, n: int) -> "OpMatrix":
        return cls(np.eye(n))

    @classmethod
    def zeros(cls, n: int) -> "OpMatrix":
        return cls(np.zeros((n, n)))

    @property
    def H(self) -> "OpMatrix":
        return OpMatrix(self.data.conj().T)

    def _other(self, other):
        d = other.data if isinstance(other, OpMatrix) else np.asarray(other)
        if d.shape != self.data.shape:
            raise InvalidParameterError(f"dimension mismatch: {self.data.shape} vs {d.shape}")
        return d

    def __add__(self, other):
        return OpMatrix(self.data + self._other(other))

    def __sub__(self, other):
        return OpMatrix(self.data - self._other(other))

    def __neg__(self):
        return OpMatrix(-self.data)

    def __mul__(self, c):
        return OpMatrix(self.data * c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, OpMatrix):
            return OpMatrix(self.data @ self._other(other))
        return self.data @ other

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def norm(self) -> float:
        return op_norm(self)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "re": self.data.real.tolist(), "im": self.data.imag.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "OpMatrix":
        d = json.loads(text)
        data = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
        if data.shape != (d["n"], d["n"]):
            raise InvalidParameterError("matrix JSON: shape does not match n")
        return cls(data)


def op_norm(A, tol: float = 1e-12, max_iter: int | None = None) -> float:
    """Spectral norm by power iteration on ``A^H A``, falling back to an SVD.

    The iteration stops once the Rayleigh quotient changes by less than
    ``tol`` relative. If it has not settled after ``10 N`` steps the norm is
    taken from a full SVD instead.
    """
    a = A.data if isinstance(A, OpMatrix) else np.asarray(A, dtype=complex)
    if a.size == 0 or not np.any(a):
        return 0.0
    n = a.shape[1]
    max_iter = 10 * n if max_iter is None else max_iter
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = a.conj().T @ (a @ v)
        new = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0:
            break
        v = w / nw
        if abs(new - lam) <= tol * max(new, 1e-300):
            return float(np.sqrt(new))
        lam = new
    log.debug("power iteration did not settle; using SVD")
    return float(np.linalg.norm(a, 2))


def _gram_contrib(model, f):
    def contrib(nodes, w):
        psi = weighted_basis(model, nodes)
        return psi.conj().T @ ((w * f(nodes))[:, None] * psi)

    return contrib


def _radial_diag(model: FockModel, profile, radius: float, spec: QuadSpec):
    """Diagonal entries ``2 pi int f(r) r^(2k+1) e^{-2 phi} / m_k dr`` on ``[0, radius]``."""
    k = np.arange(model.dim)
    lm = model.log_m
    prev = None
    n_panels = max(1, int(np.ceil(radius / spec.panel)))
    for _ in range(spec.max_level + 1):
        r, w = radial_rule(radius, n_panels, spec.order)
        lg = (2 * k[None, :] + 1) * np.log(r)[:, None] - lm[None, :] - 2 * model.weight.phi(r)[:, None]
        vals = 2 * np.pi * (w * np.asarray(profile(r), dtype=complex)) @ np.exp(lg)
        if prev is not None and np.max(np.abs(vals - prev)) <= spec.rtol * max(np.max(np.abs(vals)), 1e-300):
            return vals
        prev = vals
        n_panels *= 2
    raise QuadratureError("radial Toeplitz quadrature did not converge")


def toeplitz_poly(model: FockModel, poly: SymbolPoly) -> OpMatrix:
    """Exact Toeplitz matrix of a polynomial symbol from the moment table.

    ``<T_{z^a conj(z)^b} e_j, e_k> = m_{j+a} / sqrt(m_j m_k)`` when
    ``a + j == b + k`` and zero otherwise.
    """
    n = model.dim
    out = np.zeros((n, n), dtype=complex)
    mt = model.moments
    for (a, b), c in poly.coeffs.items():
        if n - 1 + a > model.moments.k_max:
            raise InvalidParameterError(f"monomial degree {a} exceeds the tabulated moments")
        j = np.arange(n)
        k = j + a - b
        ok = (k >= 0) & (k < n)
        j, k = j[ok], k[ok]
        # m_{j+a} / sqrt(m_j m_k) with m_{j+a} = m_{k+b}
        out[k, j] += c * np.exp(0.5 * (mt.log_moment_ratio(j, a) + mt.log_moment_ratio(k, b)))
    return OpMatrix(out)


def _term_matrix(model: FockModel, sym: Symbol, spec: QuadSpec) -> np.ndarray:
    if sym.poly is not None:
        return toeplitz_poly(model, sym.poly).data
    R = model.plane_radius()
    if sym.radial is not None:
        radius = R if sym.support is None else min(R, sym.support[1] + abs(sym.support[0]))
        return np.diag(_radial_diag(model, sym.radial, radius, spec))
    center, radius = 0.0, R
    if sym.support is not None and abs(sym.support[0]) + R > sym.support[1]:
        # the support boundary meets the basis region; integrate on the support itself
        center, radius = sym.support
    n_ang = 2 * model.dim + int(4 * model.alpha * abs(center) * radius + sym.freq * radius) + 64
    return accumulate_disk(_gram_contrib(model, sym), center, radius, spec, n_angle=n_ang)


def toeplitz_function(model: FockModel, symbol, spec: QuadSpec = QuadSpec()) -> OpMatrix:
    """Toeplitz matrix ``<T_f e_j, e_k> = int f e_j conj(e_k) e^{-2 phi} dA``.

    Polynomial symbols use the exact moment formula, radial ones a 1-d
    radial rule, and symbols with a disk support a disk rule on that support;
    everything else is integrated on a plane rule covering the basis.
    """
    if isinstance(symbol, SymbolPoly):
        return toeplitz_poly(model, symbol)
    if not isinstance(symbol, (Symbol, SymbolSum)):
        raise InvalidParameterError("symbol must be a Symbol, SymbolSum or SymbolPoly")
    return OpMatrix(sum(_term_matrix(model, t, spec) for t in symbol.terms))


def toeplitz_measure(model: FockModel, mu: DiscreteMeasure) -> OpMatrix:
    """Toeplitz matrix of ``sum c_j delta_{z_j}``: ``sum c_j psi(z_j)^* psi(z_j)``."""
    psi = weighted_basis(model, mu.points)
    return OpMatrix(psi.conj().T @ (mu.masses[:, None] * psi))


def toeplitz_indicator_ball(model: FockModel, w: complex, eps: float, spec: QuadSpec = QuadSpec()) -> OpMatrix:
    """Toeplitz matrix of the unit-mass bump ``chi_{B(w, eps)} / (pi eps^2)``."""
    if eps <= 0:
        raise InvalidParameterError("eps: must be > 0")
    return toeplitz_function(model, indicator_ball(w, eps, 1.0 / (np.pi * eps**2)), spec)


def berezin(model: FockModel, A: OpMatrix, z):
    """Berezin transform ``<A k_z, k_z>`` at a point or an array of points."""
    if np.ndim(z) == 0:
        k = normalized_kernel(model, z).coeffs
        return complex(np.vdot(k, A.data @ k))
    K = normalized_kernel_matrix(model, z)
    return np.einsum("ip,ij,jp->p", K.conj(), A.data, K).reshape(np.shape(z))


def kernel_correlation(model: FockModel, A: OpMatrix, z, w) -> complex:
    """``<A k_z, k_w>``."""
    kz = normalized_kernel(model, z).coeffs
    kw = normalized_kernel(model, w).coeffs
    return complex(np.vdot(kw, A.data @ kz))


def carleson_norm(model: FockModel, target, grid, spec: QuadSpec = QuadSpec(rtol=1e-6, max_level=5)) -> float:
    """``sup_z |mu|(B(z, 1))`` over the grid points, for a measure or a symbol (``f dA``)."""
    pts = np.atleast_1d(np.asarray(grid, dtype=complex)).ravel()
    if isinstance(target, DiscreteMeasure):
        return float(max(np.sum(np.abs(target.masses)[np.abs(target.points - z) <= 1.0]) for z in pts))
    best = 0.0
    for z in pts:
        val = sum(_ball_mass(t, z, spec) for t in target.terms)
        best = max(best, float(val))
    return best


def _ball_mass(sym: Symbol, z: complex, spec: QuadSpec, n_angle: int = 2048) -> float:
    """``int_{B(z, 1)} |f| dA``; rays are clipped exactly to the support disk."""
    if sym.support is None:
        return float(accumulate_disk(lambda nodes, w: np.sum(w * np.abs(sym(nodes))), z, 1.0, spec))
    c, rho = sym.support
    theta = 2 * np.pi * (np.arange(n_angle) + 0.5) / n_angle
    u = np.exp(1j * theta)
    # ray z + t u meets B(c, rho) for t in [t1, t2]
    d = z - c
    bq = np.real(np.conj(d) * u)
    disc = bq**2 - (abs(d) ** 2 - rho**2)
    ok = disc > 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t1 = np.clip(-bq - sq, 0.0, 1.0)
    t2 = np.clip(-bq + sq, 0.0, 1.0)
    x, wx = np.polynomial.legendre.leggauss(spec.order)
    half = 0.5 * (t2 - t1)
    t = 0.5 * (t1 + t2)[:, None] + half[:, None] * x[None, :]
    vals = np.abs(sym(z + t * u[:, None])) * t
    ray = np.where(ok, half * (vals @ wx), 0.0)
    return float(ray.sum() * 2 * np.pi / n_angle)


def kernel_diag_of(model: FockModel, X: OpMatrix, points) -> np.ndarray:
    """``<X K_w, K_w> e^{-2 phi(w)}`` at each point (the weighted Berezin symbol of ``X``)."""
    psi = weighted_basis(model, points)
    v = psi.conj()
    return np.einsum("pi,ij,pj->p", v.conj(), X.data, v)


def trace_pairing(model: FockModel, g, X: OpMatrix, spec: QuadSpec = QuadSpec()):
    """Both sides of ``tr(T_g X) = int g(w) <X K_w, K_w> e^{-2 phi(w)} dA``.

    Returns ``(lhs, rhs, |lhs - rhs|)`` with ``lhs`` the integral and ``rhs``
    the matrix trace.
    """
    T = toeplitz_function(model, g, spec)
    rhs = complex(np.sum(T.data * X.data.T))
    lhs = 0.0
    for t in (g.terms if isinstance(g, (Symbol, SymbolSum)) else (g.to_symbol(),)):
        if t.support is not None:
            center, radius = t.support
        else:
            center, radius = 0.0, model.plane_radius()
        n_ang = 2 * model.dim + int(4 * model.alpha * abs(center) * radius + t.freq * radius) + 64
        lhs = lhs + accumulate_disk(
            lambda nodes, w: np.sum(w * t(nodes) * kernel_diag_of(model, X, nodes)),
            center, radius, spec, n_angle=n_ang)
    lhs = complex(lhs)
    return lhs, rhs, abs(lhs - rhs)
