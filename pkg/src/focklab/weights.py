"""Radial weights, the curvature check and the moment integrals of the monomial basis."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammainc, gammaincc, gammaln

KINDS = ("classical", "fock_sobolev", "custom_radial")

# tail of the radial integrand is dropped once it falls this far (in log) below its peak
_LOG_TAIL = np.log(1e14) + 6.0
_QUAD_LIMIT = 40


class InvalidParameterError(ValueError):
    """A weight or model parameter violates a documented constraint."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True, eq=False)
class Weight:
    """A radial weight ``phi(r)`` on the complex plane.

    Only the three kinds in ``KINDS`` exist; use :func:`make_weight` so that
    parameter constraints are checked.
    """

    kind: str
    alpha: float = 1.0
    m: int = 0
    big_a: float = 1.0
    profile: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def phi(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if self.kind == "classical":
            return 0.5 * self.alpha * r**2
        if self.kind == "fock_sobolev":
            return 0.5 * self.alpha * r**2 - 0.5 * self.m * np.log(self.big_a + r**2)
        return np.asarray(self.profile(r), dtype=float)

    def laplacian(self, r, h=None):
        """Laplacian of ``phi`` at radius ``r`` by central differences.

        For a radial function this is ``phi'' + phi'/r``. The profile is
        extended evenly through the origin, so radii below the step are fine.
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if h is None:
            h = 1e-3 * np.maximum(r, 1.0)
        f0 = self.phi(r)
        fp = self.phi(r + h)
        fm = self.phi(np.abs(r - h))
        d2 = (fp - 2.0 * f0 + fm) / h**2
        d1 = (fp - fm) / (2.0 * h)
        return d2 + d1 / r

    def describe(self) -> dict:
        out = {"kind": self.kind, "alpha": self.alpha}
        if self.kind == "fock_sobolev":
            out.update(m=self.m, A=self.big_a)
        return out


def make_weight(kind="classical", alpha=1.0, m=0, big_a=1.0, profile=None) -> Weight:
    """Build a validated :class:`Weight`.

    Raises
    ------
    InvalidParameterError
        If ``alpha <= 0``, the kind is unknown, or a Fock-Sobolev weight has
        ``big_a <= 2*m/alpha``.
    """
    if kind not in KINDS:
        raise InvalidParameterError(f"kind: unknown weight kind {kind!r}; expected one of {KINDS}")
    alpha = float(alpha)
    if not alpha > 0:
        raise InvalidParameterError(f"alpha: must be > 0, got {alpha}")
    if kind == "fock_sobolev":
        if int(m) != m or m < 0:
            raise InvalidParameterError(f"m: must be a nonnegative integer, got {m}")
        if not big_a > 0:
            raise InvalidParameterError(f"A: must be > 0, got {big_a}")
        if not big_a > 2.0 * m / alpha:
            raise InvalidParameterError(
                f"A: Fock-Sobolev weight needs A > 2m/alpha = {2.0 * m / alpha:g}, got A = {big_a:g}"
            )
        return Weight(kind, alpha, int(m), float(big_a))
    if kind == "custom_radial":
        if profile is None:
            raise InvalidParameterError("profile: custom_radial weights need a profile callable")
        return Weight(kind, alpha, 0, 1.0, profile)
    return Weight("classical", alpha)


@dataclass(frozen=True)
class PhiCheck:
    """Result of :func:`check_phi_condition`."""

    c_est: float
    C_est: float
    ok: bool
    violating_radii: np.ndarray
    max_ratio: float


def check_phi_condition(weight: Weight, r_grid, max_ratio: float = 100.0) -> PhiCheck:
    """Estimate the lower/upper curvature bounds of ``weight`` over ``r_grid``.

    The weight is flagged when the sampled Laplacian is not strictly positive,
    or when it degenerates relative to its own maximum (``C_est / c_est``
    beyond ``max_ratio``). Radii below ``C_est / max_ratio`` are reported.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size == 0 or np.any(r_grid <= 0):
        raise InvalidParameterError("r_grid: must be nonempty with strictly positive radii")
    lap = weight.laplacian(r_grid)
    if not np.all(np.isfinite(lap)):
        bad = r_grid[~np.isfinite(lap)]
        return PhiCheck(float("nan"), float("nan"), False, bad, max_ratio)
    c_est, C_est = float(lap.min()), float(lap.max())
    floor = max(C_est / max_ratio, 0.0)
    bad = r_grid[lap <= floor] if C_est > 0 else r_grid
    ok = c_est > 0 and C_est / c_est <= max_ratio
    return PhiCheck(c_est, C_est, bool(ok), bad, max_ratio)


def _log_integrand(weight: Weight, k: int):
    def h(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return (2 * k + 1) * np.log(r) - 2.0 * weight.phi(r)

    return h


def _radial_window(weight: Weight, k: int):
    """Peak location, peak log-value and cut radius of ``r^(2k+1) e^(-2 phi)``."""
    h = _log_integrand(weight, k)
    guess = np.sqrt((2 * k + 1) / (2.0 * weight.alpha))
    res = optimize.minimize_scalar(lambda r: -h(r), bounds=(1e-12, 4 * guess + 10.0), method="bounded",
                                   options={"xatol": 1e-10})
    r_pk = float(res.x)
    h_pk = float(h(r_pk))
    step = max(1.0, 0.25 * r_pk)
    r_cut = r_pk + step
    while h(r_cut) > h_pk - _LOG_TAIL:
        r_cut += step
    return r_pk, h_pk, r_cut


def _quad(f, a, b):
    if b <= a:
        return 0.0
    val, err, *rest = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=_QUAD_LIMIT, full_output=1)
    if len(rest) > 1 and rest[0] and "roundoff" not in rest[1]:
        # QUADPACK flags ier > 0; accept if the error estimate is still tight
        if err > 1e-9 * abs(val):
            raise QuadratureError(f"radial quadrature failed on [{a}, {b}]: {rest[1]}")
    return val


def quad_log_moment(weight: Weight, k: int) -> float:
    """``log m_k`` by adaptive Gauss-Kronrod on the peak-scaled radial integrand."""
    h = _log_integrand(weight, k)
    r_pk, h_pk, r_cut = _radial_window(weight, k)
    f = lambda r: np.exp(h(r) - h_pk)
    total = _quad(f, 0.0, r_pk) + _quad(f, r_pk, r_cut)
    return float(np.log(2 * np.pi) + h_pk + np.log(total))


def _quad_split(weight: Weight, k: int, r: float):
    """Return the peak-scaled integrals over ``[0, r]`` and ``[r, inf)``."""
    h = _log_integrand(weight, k)
    r_pk, h_pk, r_cut = _radial_window(weight, k)
    f = lambda s: np.exp(h(s) - h_pk)
    pts = sorted({0.0, r_pk, min(max(r, 0.0), r_cut), r_cut})
    parts = [(_quad(f, a, b), b) for a, b in zip(pts[:-1], pts[1:])]
    inner = sum(v for v, b in parts if b <= r)
    outer = sum(v for v, b in parts if b > r)
    return inner, outer, h_pk


@dataclass(frozen=True, eq=False)
class MomentTable:
    """Moments ``m_k = 2 pi int_0^inf r^(2k+1) e^(-2 phi(r)) dr`` for ``k <= k_max``.

    Moments are stored as logarithms since ``m_k`` overflows double precision
    for the larger ``k`` needed by polynomial symbols.
    """

    weight: Weight
    k_max: int
    log_moments: np.ndarray

    @classmethod
    def build(cls, weight: Weight, k_max: int) -> "MomentTable":
        k = np.arange(k_max + 1)
        if weight.kind == "classical":
            logm = np.log(np.pi) + gammaln(k + 1) - (k + 1) * np.log(weight.alpha)
        else:
            logm = np.array([quad_log_moment(weight, int(j)) for j in k])
        if not np.all(np.isfinite(logm)):
            raise QuadratureError("nonfinite moment encountered")
        logm.setflags(write=False)
        return cls(weight, int(k_max), logm)

    def _check_k(self, k):
        if np.any(np.asarray(k) < 0) or np.any(np.asarray(k) > self.k_max):
            raise IndexError(f"moment index {k} outside 0..{self.k_max}")

    @cached_property
    def log_ratios(self) -> np.ndarray:
        """``log(m_{k+1} / m_k)`` for ``k < k_max``; exact for the classical weight."""
        if self.weight.kind == "classical":
            return np.log((np.arange(self.k_max) + 1) / self.weight.alpha)
        return np.diff(self.log_moments)

    def log_moment_ratio(self, k, a: int):
        """``log(m_{k+a} / m_k)`` as a short sum of consecutive ratios (no cancellation)."""
        k = np.asarray(k)
        self._check_k(k + a)
        lr = self.log_ratios
        out = np.zeros(k.shape)
        for o in range(a):
            out = out + lr[k + o]
        return out

    def log_moment(self, k):
        self._check_k(k)
        return self.log_moments[k]

    def moment(self, k):
        return np.exp(self.log_moment(k))

    @cached_property
    def rel_err(self) -> np.ndarray:
        """Relative disagreement between stored moments and an independent quadrature.

        For the classical weight the stored values are closed forms, so this
        measures the quadrature; for other weights it compares against a
        closed form where one exists (Fock-Sobolev) and is zero otherwise.
        """
        if self.weight.kind == "classical":
            other = np.array([quad_log_moment(self.weight, int(j)) for j in range(self.k_max + 1)])
        elif self.weight.kind == "fock_sobolev":
            other = fock_sobolev_log_moments(self.weight, self.k_max)
        else:
            return np.zeros(self.k_max + 1)
        return np.abs(np.expm1(other - self.log_moments))

    def tail_fraction(self, k, r: float):
        """``(m_k - gamma_k(r)) / m_k``, computed without cancellation."""
        self._check_k(k)
        k = np.asarray(k)
        if r <= 0:
            return np.ones(k.shape)
        if self.weight.kind == "classical":
            return gammaincc(k + 1, self.weight.alpha * r * r)
        out = []
        for j in np.atleast_1d(k):
            inner, outer, _ = _quad_split(self.weight, int(j), r)
            out.append(outer / (inner + outer))
        return np.reshape(out, k.shape)

    def incomplete_moment(self, k: int, r: float) -> float:
        """``gamma_k(r) = 2 pi int_0^r s^(2k+1) e^(-2 phi(s)) ds``."""
        self._check_k(k)
        if r <= 0:
            return 0.0
        if self.weight.kind == "classical":
            return float(gammainc(k + 1, self.weight.alpha * r * r) * self.moment(k))
        inner, _, h_pk = _quad_split(self.weight, int(k), r)
        return float(2 * np.pi * np.exp(h_pk) * inner)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "m_k", "rel_err"])
        for k in range(self.k_max + 1):
            w.writerow([k, repr(float(np.exp(self.log_moments[k]))), repr(float(self.rel_err[k]))])
        return buf.getvalue()


def fock_sobolev_log_moments(weight: Weight, k_max: int) -> np.ndarray:
    """Closed-form Fock-Sobolev moments by expanding ``(A + r^2)^m`` binomially."""
    from scipy.special import comb

    a, m, big_a = weight.alpha, weight.m, weight.big_a
    out = np.empty(k_max + 1)
    for k in range(k_max + 1):
        j = np.arange(m + 1)
        logs = (np.log(comb(m, j)) + (m - j) * np.log(big_a) + gammaln(k + j + 1)
                - (k + j + 1) * np.log(a))
        top = logs.max()
        out[k] = np.log(np.pi) + top + np.log(np.exp(logs - top).sum())
    return out
