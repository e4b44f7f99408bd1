"""Decay profiles of coherent-state matrix elements and essential-norm estimators."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .core import FockModel, normalized_kernel_matrix
from .operators import OpMatrix, carleson_norm, op_norm, toeplitz_function, toeplitz_measure
from .quadrature import QuadSpec
from .symbols import DiscreteMeasure, Symbol, SymbolSum, indicator_ball
from .weights import InvalidParameterError

PAIR_DIRECTIONS = 32
PAIR_BASES = 8
PSD_SLACK = 1e-10


@dataclass
class DecayCurve:
    """Sampled curve ``radius -> value`` with per-radius sample counts and trust flags."""

    radii: np.ndarray
    values: np.ndarray
    n_samples: np.ndarray
    trusted: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.n_samples = np.asarray(self.n_samples, dtype=int)
        self.trusted = np.asarray(self.trusted, dtype=bool)
        if self.radii.size > 1 and np.any(np.diff(self.radii) <= 0):
            raise InvalidParameterError("curve radii must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameterError("curve values must be finite")

    def __len__(self):
        return self.radii.size

    def at(self, r: float) -> float:
        i = np.flatnonzero(np.isclose(self.radii, r))
        if i.size == 0:
            raise KeyError(f"radius {r} not sampled")
        return float(self.values[i[0]])

    def is_nonincreasing(self, slack: float = 1e-10) -> bool:
        return bool(np.all(np.diff(self.values) <= slack))

    def fit_polynomial_exponent(self) -> float:
        """Slope ``s`` of ``log value ~ -s log(1 + r)`` over the positive values."""
        ok = self.values > 0
        slope, _ = np.polyfit(np.log1p(self.radii[ok]), np.log(self.values[ok]), 1)
        return float(-slope)

    def fit_gaussian_rate(self) -> float:
        """Rate ``c`` of ``log value ~ -c r^2`` over the positive values."""
        ok = self.values > 0
        slope, _ = np.polyfit(self.radii[ok] ** 2, np.log(self.values[ok]), 1)
        return float(-slope)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", "value", "n_samples", "trusted"])
        for r, v, n, t in zip(self.radii, self.values, self.n_samples, self.trusted):
            w.writerow([repr(float(r)), repr(float(v)), int(n), int(t)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"label": self.label, "radius": self.radii.tolist(), "value": self.values.tolist(),
                "n_samples": self.n_samples.tolist(), "trusted": self.trusted.tolist(), "meta": self.meta}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class EssNormReport:
    """Paired curves from the essential-norm estimators."""

    tail_curve: DecayCurve
    far_curve: DecayCurve | None = None
    local_curve: dict = field(default_factory=dict)
    scale: float = 1.0

    def co_decay(self, r: float, level: float) -> bool:
        ok = self.tail_curve.at(r) < level
        if self.far_curve is not None:
            ok = ok and self.far_curve.at(r) < level
        return bool(ok)

    def to_json(self) -> str:
        return json.dumps({
            "scale": self.scale,
            "tail_curve": self.tail_curve.to_dict(),
            "far_curve": None if self.far_curve is None else self.far_curve.to_dict(),
            "local_curve": [{"z_radius": k[0], "d": k[1], "value": v} for k, v in sorted(self.local_curve.items())],
        })


def _corr(model, A, zs, ws):
    Kz = normalized_kernel_matrix(model, zs)
    Kw = normalized_kernel_matrix(model, ws)
    return np.abs(np.sum(Kw.conj() * (A.data @ Kz), axis=0))


def decay_profile(model: FockModel, A: OpMatrix, radii, seed: int = 0,
                  n_dir: int = PAIR_DIRECTIONS, n_base: int = PAIR_BASES) -> DecayCurve:
    """``r -> sup |<A k_z, k_w>|`` over seeded trusted pairs with ``|z - w| = r``.

    Pairs are ``c +- r u / 2`` with base points ``c`` drawn in the disk where
    both ends stay trusted. Radii with no trusted pair are omitted and listed
    in ``meta["omitted"]``.
    """
    rng = np.random.default_rng(seed)
    rho = model.trust_radius
    out_r, out_v, out_n, omitted = [], [], [], []
    theta = 2 * np.pi * np.arange(n_dir) / n_dir
    for r in np.asarray(radii, dtype=float):
        room = rho - r / 2
        if room < 0:
            omitted.append(float(r))
            continue
        c = np.sqrt(rng.uniform(size=n_base)) * room * np.exp(2j * np.pi * rng.uniform(size=n_base))
        u = np.exp(1j * (theta[None, :] + 2 * np.pi * rng.uniform(size=(n_base, 1)) / n_dir))
        z = (c[:, None] + 0.5 * r * u).ravel()
        w = (c[:, None] - 0.5 * r * u).ravel()
        out_r.append(r)
        out_v.append(float(np.max(_corr(model, A, z, w))))
        out_n.append(z.size)
    return DecayCurve(out_r, out_v, out_n, np.ones(len(out_r), bool), "decay_profile",
                      {"seed": seed, "omitted": omitted, "trust_radius": rho})


def compactness_indicator(model: FockModel, A: OpMatrix, R: float, t_values,
                          n_dir: int = PAIR_DIRECTIONS, n_ring: int = 4) -> DecayCurve:
    """``t -> sup |<A k_z, k_w>|`` over ``|z| = t`` and ``w`` in ``B(z, R)``.

    The disk around each ``z`` is sampled on ``n_ring`` rings plus its centre.
    Points beyond the trust radius are still evaluated but flagged.
    """
    if R <= 0:
        raise InvalidParameterError("R: must be > 0")
    theta = 2 * np.pi * np.arange(n_dir) / n_dir
    offs = [0.0] + [R * (i + 1) / n_ring * np.exp(2j * np.pi * j / n_dir)
                    for i in range(n_ring) for j in range(n_dir)]
    offs = np.asarray(offs)
    vals, ns, trusted = [], [], []
    for t in np.asarray(t_values, dtype=float):
        z = np.repeat(t * np.exp(1j * theta), offs.size)
        w = z + np.tile(offs, theta.size)
        vals.append(float(np.max(_corr(model, A, z, w))))
        ns.append(z.size)
        trusted.append(bool(np.all(model.trusted(z)) and np.all(model.trusted(w))))
    return DecayCurve(t_values, vals, ns, trusted, "compactness_indicator",
                      {"R": R, "trust_radius": model.trust_radius})


def tail_gram(model: FockModel, r: float) -> np.ndarray:
    """Diagonal of the Gram matrix of the basis restricted to ``|w| > r``."""
    return np.clip(model.moments.tail_fraction(np.arange(model.dim), r), 0.0, 1.0)


def tail_norm(model: FockModel, A: OpMatrix, r: float) -> float:
    """``|| chi_{|w|>r} A ||`` computed as ``|| G_r^{1/2} A ||``."""
    if r < 0:
        raise InvalidParameterError("r: must be >= 0")
    g = np.sqrt(tail_gram(model, r))
    return op_norm(g[:, None] * A.data)


def psd_sqrt(H: np.ndarray, slack: float = PSD_SLACK) -> np.ndarray:
    """Hermitian square root with small negative eigenvalues clamped to zero."""
    H = 0.5 * (H + H.conj().T)
    lam, V = np.linalg.eigh(H)
    if lam.min() < -slack:
        raise ValueError(f"Gram matrix is not positive semidefinite (eigenvalue {lam.min():.3e})")
    return (V * np.sqrt(np.clip(lam, 0.0, None))) @ V.conj().T


def local_gram(model: FockModel, z: complex, d: float, spec: QuadSpec = QuadSpec()) -> np.ndarray:
    """Gram matrix ``int_{B(z, d)} e_j conj(e_k) e^{-2 phi}`` of the basis on a disk."""
    return toeplitz_function(model, indicator_ball(z, d), spec).data


def local_norm(model: FockModel, A: OpMatrix, z: complex, d: float, spec: QuadSpec = QuadSpec()) -> float:
    """``|| chi_{B(z,d)} A P chi_{B(z,2d)} ||`` as ``|| H_d^{1/2} A H_{2d}^{1/2} ||``."""
    if d <= 0:
        raise InvalidParameterError("d: must be > 0")
    h1 = psd_sqrt(local_gram(model, z, d, spec))
    h2 = psd_sqrt(local_gram(model, z, 2 * d, spec))
    return op_norm(h1 @ A.data @ h2)


def local_norm_sup(model: FockModel, A: OpMatrix, z: complex, d_values, spec: QuadSpec = QuadSpec()):
    """Largest :func:`local_norm` over the given ball radii, with the maximiser."""
    vals = [local_norm(model, A, z, d, spec) for d in d_values]
    i = int(np.argmax(vals))
    return vals[i], d_values[i]


def _far_correlation(model, A, r, n_dir=PAIR_DIRECTIONS, width=1.0, max_sep=2.0):
    theta = 2 * np.pi * np.arange(n_dir) / n_dir
    rings = np.array([r, r + 0.5 * width, r + width])
    pts = (rings[:, None] * np.exp(1j * theta)[None, :]).ravel()
    zz, ww = np.meshgrid(pts, pts, indexing="ij")
    near = np.abs(zz - ww) <= max_sep
    z, w = zz[near], ww[near]
    return float(np.max(_corr(model, A, z, w))), z.size, bool(np.all(model.trusted(pts)))


def toeplitz_essnorm_check(model: FockModel, mu, r_list, spec: QuadSpec = QuadSpec(),
                           carleson_grid=None) -> EssNormReport:
    """Tail norms of ``T_mu`` paired with ``sup_{|z|,|w| >= r} |<T_mu k_z, k_w>|``.

    ``mu`` (a symbol or discrete measure) is rescaled so that its mass on unit
    disks is at most one; the factor applied is reported as ``scale``.
    """
    if carleson_grid is None:
        ax = np.arange(-4, 5)
        carleson_grid = (ax[:, None] + 1j * ax[None, :]).ravel()
    if isinstance(mu, DiscreteMeasure):
        T = toeplitz_measure(model, mu)
    elif isinstance(mu, OpMatrix):
        raise InvalidParameterError("toeplitz_essnorm_check expects a symbol or measure, not a matrix")
    else:
        T = toeplitz_function(model, mu, spec)
    cn = carleson_norm(model, mu, carleson_grid)
    scale = 1.0 / cn if cn > 1.0 else 1.0
    T = T * scale
    r_list = np.asarray(r_list, dtype=float)
    tails = [tail_norm(model, T, r) for r in r_list]
    far = [_far_correlation(model, T, r) for r in r_list]
    tail_curve = DecayCurve(r_list, tails, np.full(r_list.size, model.dim), np.ones(r_list.size, bool),
                            "tail_norm", {"trust_radius": model.trust_radius})
    far_curve = DecayCurve(r_list, [f[0] for f in far], [f[1] for f in far], [f[2] for f in far],
                           "far_correlation", {"trust_radius": model.trust_radius})
    return EssNormReport(tail_curve, far_curve, {}, scale)
