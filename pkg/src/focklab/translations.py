"""Weighted translations ``U_z h(w) = h(z - w) k_z(w)`` on the classical space."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .approximation import require_classical
from .core import FockModel, normalized_kernel, normalized_kernel_matrix, weighted_basis
from .localization import DecayCurve, compactness_indicator
from .operators import OpMatrix, berezin, op_norm
from .quadrature import QuadSpec, accumulate_disk

N_BASIS_SAMPLES = 8
N_RANDOM_SAMPLES = 8
# a column counts as represented when the truncation drops less than this much of its mass
COLUMN_MASS_TOL = 1e-9

_CACHE: dict = {}
TRANSLATION_SPEC = QuadSpec(rtol=1e-11, panel=3.0)


@dataclass
class TranslationOp:
    """Matrix of ``U_z`` in the orthonormal basis, with the block it is reliable on."""

    z: complex
    matrix: OpMatrix
    trusted: bool
    reliable_block: int

    @property
    def leading(self) -> np.ndarray:
        L = self.reliable_block
        return self.matrix.data[:L, :L]

    def square_residual(self, block: int | None = None) -> float:
        """``|| (U_z U_z - Id) ||`` on the leading block."""
        L = self.reliable_block if block is None else block
        U = self.matrix.data
        return op_norm((U @ U)[:L, :L] - np.eye(L))

    def singular_values(self, block: int | None = None) -> np.ndarray:
        """Singular values of the first ``block`` columns (all rows kept)."""
        L = self.reliable_block if block is None else block
        return np.linalg.svd(self.matrix.data[:, :L], compute_uv=False)


def _reliable_block(U: np.ndarray, tol: float = COLUMN_MASS_TOL) -> int:
    # U_z is unitary on the full space; column j loses 1 - ||U e_j||^2 to truncation
    lost = 1.0 - np.sum(np.abs(U) ** 2, axis=0)
    bad = np.flatnonzero(lost > tol)
    return int(bad[0]) if bad.size else U.shape[0]


def weighted_translation(model: FockModel, z: complex, spec: QuadSpec = TRANSLATION_SPEC) -> TranslationOp:
    """Quadrature matrix of ``U_z``, normalised so that ``U_0`` is the parity operator.

    Entry ``[k, j]`` is ``int psi_j(z - w) conj(psi_k(w)) exp(i alpha Im(w conj(z))) dA(w)``
    where ``psi_k = e_k e^{-phi}``; the unimodular phase is what remains of
    ``exp(phi(z - w) - phi(w)) k_z(w)`` for the Gaussian weight.
    """
    require_classical(model)
    z = complex(z)
    key = (model.dim, model.alpha, z, spec)
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    trusted = abs(z) <= 0.5 * model.trust_radius
    if z == 0:
        U = np.diag((-1.0) ** np.arange(model.dim)).astype(complex)
    else:
        alpha = model.alpha
        R = model.plane_radius()
        n_ang = 2 * model.dim + int(2 * alpha * abs(z) * R) + 64

        def contrib(nodes, w):
            left = weighted_basis(model, nodes)
            right = weighted_basis(model, z - nodes)
            phase = np.exp(1j * alpha * np.imag(nodes * np.conj(z)))
            return left.conj().T @ ((w * phase)[:, None] * right)

        U = accumulate_disk(contrib, 0.5 * z, R, spec, n_angle=n_ang)
    op = TranslationOp(z, OpMatrix(U), bool(trusted), _reliable_block(U))
    _CACHE[key] = op
    return op


def theta(model: FockModel, z: complex, w: complex, spec: QuadSpec = TRANSLATION_SPEC):
    """``<U_z k_w, k_{z-w}>`` and the residual ``|| U_z k_w - Theta k_{z-w} ||``."""
    U = weighted_translation(model, z, spec).matrix.data
    kw = normalized_kernel(model, w).coeffs
    kzw = normalized_kernel(model, complex(z) - complex(w)).coeffs
    v = U @ kw
    th = complex(np.vdot(kzw, v))
    return th, float(np.linalg.norm(v - th * kzw))


def default_f_samples(model: FockModel, seed: int = 0) -> np.ndarray:
    """First basis vectors plus seeded random unit vectors, as columns."""
    rng = np.random.default_rng(seed)
    n = model.dim
    basis = np.eye(n, min(N_BASIS_SAMPLES, n), dtype=complex)
    rnd = rng.standard_normal((n, N_RANDOM_SAMPLES)) + 1j * rng.standard_normal((n, N_RANDOM_SAMPLES))
    rnd /= np.linalg.norm(rnd, axis=0)
    return np.hstack([basis, rnd])


def shell_points(r_lo: float, r_hi: float, n_radii: int = 3, n_dir: int = 8) -> np.ndarray:
    radii = np.linspace(r_lo, r_hi, n_radii)
    ang = 2 * np.pi * np.arange(n_dir) / n_dir
    return (radii[:, None] * np.exp(1j * ang)[None, :]).ravel()


@dataclass
class TranslationEssNorm:
    value: float
    shell: tuple
    f_index: int
    z_max: complex
    n_untrusted: int
    per_sample: np.ndarray = field(repr=False)

    def to_json(self) -> str:
        return json.dumps({"value": self.value, "shell": list(self.shell), "f_index": self.f_index,
                           "z_max": [self.z_max.real, self.z_max.imag], "n_untrusted": self.n_untrusted,
                           "per_sample": self.per_sample.tolist()})


def translation_essnorm(model: FockModel, A: OpMatrix, f_samples=None, z_list=None, shell=(3.0, 4.0),
                        seed: int = 0, spec: QuadSpec = TRANSLATION_SPEC) -> TranslationEssNorm:
    """``max_f max_{z in shell} || A U_z f ||`` over unit sample vectors ``f``."""
    require_classical(model)
    F = default_f_samples(model, seed) if f_samples is None else np.asarray(f_samples, dtype=complex)
    F = F / np.linalg.norm(F, axis=0)
    zs = shell_points(*shell) if z_list is None else np.atleast_1d(np.asarray(z_list, dtype=complex))
    best = np.zeros(F.shape[1])
    where = np.zeros(F.shape[1], dtype=complex)
    n_untrusted = 0
    for z in zs:
        U = weighted_translation(model, z, spec)
        n_untrusted += not U.trusted
        vals = np.linalg.norm(A.data @ (U.matrix.data @ F), axis=0)
        upd = vals > best
        best[upd], where[upd] = vals[upd], z
    i = int(np.argmax(best))
    return TranslationEssNorm(float(best[i]), (float(np.min(np.abs(zs))), float(np.max(np.abs(zs)))), i,
                              complex(where[i]), n_untrusted, best)


@dataclass
class BerezinEquivReport:
    berezin_curve: DecayCurve
    rho_curve: DecayCurve
    dominated: bool

    def to_json(self) -> str:
        return json.dumps({"berezin_curve": self.berezin_curve.to_dict(), "rho_curve": self.rho_curve.to_dict(),
                           "dominated": self.dominated})


def berezin_equiv_check(model: FockModel, A: OpMatrix, R: float, shells, n_dir: int = 32) -> BerezinEquivReport:
    """Shell maxima of ``|B(A)|`` paired with the compactness indicator at radius ``R``."""
    require_classical(model)
    shells = np.asarray(shells, dtype=float)
    ang = np.exp(2j * np.pi * np.arange(n_dir) / n_dir)
    ber = np.array([np.max(np.abs(berezin(model, A, t * ang))) for t in shells])
    rho = compactness_indicator(model, A, R, shells, n_dir=n_dir)
    curve = DecayCurve(shells, ber, np.full(shells.size, n_dir), model.trusted(shells), "berezin_shell_max",
                       {"trust_radius": model.trust_radius})
    return BerezinEquivReport(curve, rho, bool(np.all(ber <= rho.values + 1e-12)))
