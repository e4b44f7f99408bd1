"""Truncated Fock space: orthonormal monomials, reproducing kernels and norms."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from .quadrature import QuadSpec, disk_rule, integrate_disk
from .weights import InvalidParameterError, MomentTable, Weight

TRUST_TOL = 1e-9
TRUST_GAP = 5
# log-size below which basis tails are treated as zero when sizing plane rules
_LOG_NEGLIGIBLE = -40.0


class TrustRadiusWarning(UserWarning):
    """A point lies beyond the radius where the truncated kernel is reliable."""


_TABLES: dict = {}


def _moment_table(weight: Weight, k_max: int) -> MomentTable:
    if weight.kind == "custom_radial":
        key = ("custom", id(weight))
    else:
        key = (weight.kind, weight.alpha, weight.m, weight.big_a)
    tab = _TABLES.get(key)
    if tab is None or tab.k_max < k_max or tab.weight is not weight and weight.kind == "custom_radial":
        tab = MomentTable.build(weight, k_max)
        _TABLES[key] = tab
    return tab


@dataclass(frozen=True, eq=False)
class FockModel:
    """Fock space of ``weight`` truncated to polynomials of degree ``< dim``.

    Moments are tabulated up to ``4 * dim`` so that polynomial symbols of
    moderate degree can be applied exactly.
    """

    weight: Weight
    dim: int
    moments: MomentTable

    @property
    def alpha(self) -> float:
        return self.weight.alpha

    @cached_property
    def log_m(self) -> np.ndarray:
        return self.moments.log_moments[: self.dim]

    @cached_property
    def trust_radius(self) -> float:
        """Largest ``r`` where dropping the last five basis terms changes ``K_N(r, r)``
        by less than ``TRUST_TOL`` relative."""
        if self.dim <= TRUST_GAP:
            return 0.0
        k = np.arange(self.dim)
        lm = self.log_m

        def excess(r):
            t = 2 * k * np.log(r) - lm
            return logsumexp(t[-TRUST_GAP:]) - logsumexp(t) - np.log(TRUST_TOL)

        lo, hi = 1e-6, 1.0
        if excess(lo) > 0:
            return 0.0
        while excess(hi) < 0:
            hi *= 2.0
        return float(optimize.brentq(excess, lo, hi, xtol=1e-10))

    def trusted(self, z) -> np.ndarray:
        return np.abs(np.asarray(z)) <= self.trust_radius

    def warn_untrusted(self, z, what="point"):
        bad = ~self.trusted(z)
        if np.any(bad):
            warnings.warn(f"{what} beyond trust radius {self.trust_radius:.3f}: "
                          f"{np.count_nonzero(bad)} of {np.size(bad)}", TrustRadiusWarning, stacklevel=3)
        return ~bad

    def plane_radius(self, extra_degree: float = 0.0) -> float:
        """Radius outside which every weighted basis product is negligible."""
        k = np.arange(self.dim)
        lm = self.log_m

        def size(r):
            return np.max(2 * k * np.log(r) - lm - 2 * self.weight.phi(r)) + (1 + extra_degree) * np.log(r)

        r = np.sqrt((self.dim + extra_degree) / self.alpha) + 1.0
        while size(r) > _LOG_NEGLIGIBLE:
            r += 0.25
        return float(r)

    def describe(self) -> dict:
        return {**self.weight.describe(), "N": self.dim, "trust_radius": self.trust_radius}


def make_model(weight: Weight, dim: int) -> FockModel:
    if int(dim) != dim or dim < 1:
        raise InvalidParameterError(f"N: truncation dimension must be a positive integer, got {dim}")
    dim = int(dim)
    return FockModel(weight, dim, _moment_table(weight, 4 * dim))


def weighted_basis(model: FockModel, points, dim: int | None = None) -> np.ndarray:
    """Array ``psi[p, k] = e_k(w_p) exp(-phi(w_p))`` for ``k < dim``."""
    dim = model.dim if dim is None else dim
    w = np.atleast_1d(np.asarray(points, dtype=complex)).ravel()
    k = np.arange(dim)
    lm = model.moments.log_moments[:dim]
    r = np.abs(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.log(r)
        mag = k[None, :] * logr[:, None] - 0.5 * lm[None, :] - model.weight.phi(r)[:, None]
    # 0 * log(0) must be 0 for the constant term
    mag[:, 0] = -0.5 * lm[0] - model.weight.phi(r)
    unit = np.where(r > 0, w / np.where(r > 0, r, 1.0), 1.0)
    phase = np.empty((w.size, dim), dtype=complex)
    phase[:, 0] = 1.0
    phase[:, 1:] = unit[:, None]
    np.cumprod(phase, axis=1, out=phase)
    return np.exp(mag) * phase


def _log_kernel_terms(model, z, w):
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    zw = z * np.conj(w)
    k = np.arange(model.dim)
    with np.errstate(divide="ignore", invalid="ignore"):
        lzw = np.log(np.abs(zw))
        t = k * lzw[..., None] - model.log_m
    t[..., 0] = -model.log_m[0]
    phase = k * np.angle(zw)[..., None]
    return t, phase


def kernel(model: FockModel, z, w):
    """Truncated reproducing kernel ``K_N(z, w) = sum_k (z conj(w))^k / m_k``."""
    t, phase = _log_kernel_terms(model, z, w)
    top = t.max(axis=-1, keepdims=True)
    s = np.sum(np.exp(t - top + 1j * phase), axis=-1)
    return np.exp(top[..., 0]) * s


def weighted_kernel(model: FockModel, z, w):
    """``exp(-phi(z)) K_N(z, w) exp(-phi(w))`` evaluated without overflow."""
    t, phase = _log_kernel_terms(model, z, w)
    t = t - model.weight.phi(np.abs(z))[..., None] - model.weight.phi(np.abs(w))[..., None]
    return np.sum(np.exp(t + 1j * phase), axis=-1)


def log_kernel_diag(model: FockModel, z):
    """``log K_N(z, z)``."""
    t, _ = _log_kernel_terms(model, z, z)
    top = t.max(axis=-1)
    return top + np.log(np.sum(np.exp(t - top[..., None]), axis=-1))


@dataclass(frozen=True, eq=False)
class CoeffVec:
    """Element of the truncated space given by its coefficients in the basis ``e_k``."""

    model: FockModel
    coeffs: np.ndarray

    def __call__(self, w):
        """Pointwise value ``f(w)``."""
        psi = weighted_basis(self.model, w)
        return (psi @ self.coeffs) * np.exp(self.model.weight.phi(np.abs(np.ravel(w))))

    def weighted(self, w):
        """``f(w) exp(-phi(w))``, safe for large ``|w|``."""
        return weighted_basis(self.model, w) @ self.coeffs

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def _conj_powers_log(model, z):
    z = complex(z)
    k = np.arange(model.dim)
    if z == 0:
        mag = np.full(model.dim, -np.inf)
        mag[0] = 0.0
    else:
        mag = k * np.log(abs(z))
    return mag, np.exp(-1j * k * np.angle(z))


def normalized_kernel(model: FockModel, z, warn: bool = True) -> CoeffVec:
    """Coefficients of ``k_z = K_N(., z) / sqrt(K_N(z, z))``; unit norm by construction."""
    if warn:
        model.warn_untrusted(z, "normalized kernel centre")
    mag, ph = _conj_powers_log(model, z)
    c = np.exp(mag - 0.5 * model.log_m - 0.5 * log_kernel_diag(model, complex(z))) * ph
    return CoeffVec(model, c)


def tilde_kernel(model: FockModel, z, warn: bool = True) -> CoeffVec:
    """Coefficients of ``exp(-phi(z)) K_N(., z)``."""
    if warn:
        model.warn_untrusted(z, "weighted kernel centre")
    mag, ph = _conj_powers_log(model, z)
    c = np.exp(mag - 0.5 * model.log_m - model.weight.phi(abs(complex(z)))) * ph
    return CoeffVec(model, c)


def normalized_kernel_matrix(model: FockModel, points) -> np.ndarray:
    """Columns are the coefficient vectors of ``k_z`` for each point."""
    pts = np.atleast_1d(np.asarray(points, dtype=complex)).ravel()
    psi = weighted_basis(model, pts)
    norms = np.linalg.norm(psi, axis=1)
    return (np.conj(psi) / norms[:, None]).T


def tilde_kernel_matrix(model: FockModel, points) -> np.ndarray:
    """Columns are the coefficient vectors of ``exp(-phi(z)) K_N(., z)``."""
    pts = np.atleast_1d(np.asarray(points, dtype=complex)).ravel()
    return np.conj(weighted_basis(model, pts)).T


def p_norm(model: FockModel, f: CoeffVec, p: float, spec: QuadSpec = QuadSpec()) -> float:
    """Weighted ``L^p`` norm ``(int |f e^{-phi}|^p dA)^(1/p)``; ``p = inf`` gives the sup.

    The supremum is taken over the nodes of a fine plane rule.
    """
    if not (p >= 1):
        raise InvalidParameterError(f"p: must be >= 1, got {p}")
    R = model.plane_radius()
    n_ang = 4 * model.dim + 64
    if np.isinf(p):
        nodes, _ = disk_rule(0.0, R, int(np.ceil(4 * R)), spec.order, 2 * n_ang)
        return float(np.max(np.abs(f.weighted(nodes))))
    val = integrate_disk(lambda w: np.abs(f.weighted(w)) ** p, 0.0, R, spec, n_angle=n_ang)
    return float(val ** (1.0 / p))


def check_submeanvalue(model: FockModel, f: CoeffVec, z, r: float, p: float = 2.0,
                       spec: QuadSpec = QuadSpec()) -> float:
    """Ratio ``|f(z) e^{-phi(z)}|^p / int_{B(z, r)} |f e^{-phi}|^p dA``.

    Bounded ratios over ``z`` illustrate the local sub-mean-value estimate.
    The ratio is 0 when ``f`` vanishes at ``z``.
    """
    if r <= 0:
        raise InvalidParameterError("r: must be > 0")
    top = np.abs(f.weighted(complex(z)))[0] ** p
    if top == 0:
        return 0.0
    n_ang = 2 * model.dim + int(8 * model.alpha * r * (abs(z) + r)) + 64
    bottom = integrate_disk(lambda w: np.abs(f.weighted(w)) ** p, complex(z), r, spec, n_angle=n_ang)
    return float(top / bottom)


def fit_kernel_decay(model: FockModel, distances, n_dir: int = 16, rng=None):
    """Fit ``C exp(-eps |z - w|)`` above the weighted kernel.

    Samples ``|e^{-phi(z)} K_N(z, w) e^{-phi(w)}|`` inside the trust disk at
    the given separations, takes the maximum per separation and fits a line
    to its logarithm. Returns ``(C, eps)``.
    """
    rng = np.random.default_rng(rng)
    d = np.asarray(distances, dtype=float)
    rho = model.trust_radius
    env = []
    for dist in d:
        best = 0.0
        for _ in range(n_dir):
            c = rng.uniform(0, max(rho - dist / 2, 0.0)) * np.exp(2j * np.pi * rng.uniform())
            u = np.exp(2j * np.pi * rng.uniform())
            z, w = c + 0.5 * dist * u, c - 0.5 * dist * u
            best = max(best, abs(weighted_kernel(model, z, w)))
        env.append(best)
    slope, icpt = np.polyfit(d, np.log(env), 1)
    return float(np.exp(icpt)), float(-slope)
