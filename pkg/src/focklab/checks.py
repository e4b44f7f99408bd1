"""Invariant suite run by ``focklab check``."""

from __future__ import annotations

import hashlib
import json
import warnings
from pathlib import Path

import numpy as np

from . import approximation as ap
from . import frames as fr
from . import localization as lo
from . import translations as tr
from .core import TrustRadiusWarning, kernel, make_model, normalized_kernel, weighted_basis, weighted_kernel
from .operators import (OpMatrix, berezin, op_norm, toeplitz_function, toeplitz_measure, toeplitz_poly)
from .quadrature import QuadSpec, accumulate_disk
from .symbols import DiscreteMeasure, GridSymbol, Symbol, SymbolPoly, gaussian, indicator_ball
from .weights import MomentTable, check_phi_condition, fock_sobolev_log_moments, make_weight

OPS = {"lt": np.less, "le": np.less_equal, "gt": np.greater, "ge": np.greater_equal}


def _classical(n, alpha=1.0):
    return make_model(make_weight("classical", alpha), n)


def weight_checks():
    worst = 0.0
    for a in (0.5, 1.0, 2.0):
        worst = max(worst, float(MomentTable.build(make_weight(alpha=a), 30).rel_err.max()))
    yield "classical moments vs quadrature (k<=30)", worst, "le", 1e-10
    fs = make_weight("fock_sobolev", 1.0, 2, 5.0)
    tab = MomentTable.build(fs, 40)
    yield "Fock-Sobolev moments vs closed form", float(np.max(np.abs(np.expm1(
        fock_sobolev_log_moments(fs, 40) - tab.log_moments)))), "le", 1e-10
    r = np.linspace(0.05, 15, 300)
    c = check_phi_condition(make_weight(alpha=1.5), r)
    yield "classical Laplacian equals 2 alpha", max(abs(c.c_est - 3.0), abs(c.C_est - 3.0)), "le", 1e-6
    lap = fs.laplacian(r)
    exact = 2.0 - 2 * 2 * 5.0 / (5.0 + r**2) ** 2
    yield "Fock-Sobolev Laplacian formula", float(np.max(np.abs(lap - exact))), "le", 1e-6
    yield "Fock-Sobolev curvature bounded below", check_phi_condition(fs, r).c_est, "gt", 0.0
    lin = check_phi_condition(make_weight("custom_radial", profile=lambda s: s), r)
    yield "linear weight flagged as degenerate", float(lin.ok), "le", 0.0


def core_checks():
    radii = [_classical(n).trust_radius for n in (20, 40, 60)]
    yield "trust radius grows with N", float(np.min(np.diff(radii))), "gt", 0.0
    m = _classical(80)
    rng = np.random.default_rng(1)
    z = 3 * np.sqrt(rng.uniform(size=200)) * np.exp(2j * np.pi * rng.uniform(size=200))
    w = 3 * np.sqrt(rng.uniform(size=200)) * np.exp(2j * np.pi * rng.uniform(size=200))
    got = np.abs(weighted_kernel(m, z, w))
    yield "weighted kernel Gaussian identity", float(np.max(np.abs(got - np.exp(-np.abs(z - w) ** 2 / 2) / np.pi))), \
        "le", 1e-6
    m = _classical(40)
    yield "normalized kernel has unit norm", abs(normalized_kernel(m, 1 + 1j).norm - 1), "le", 1e-12
    # reproducing property through a quadrature Gram matrix of the basis
    R = m.plane_radius()
    gram = accumulate_disk(lambda u, wt: weighted_basis(m, u).conj().T @ (wt[:, None] * weighted_basis(m, u)),
                           0.0, R, QuadSpec(), n_angle=4 * m.dim + 64)
    err = 0.0
    for _ in range(5):
        c = np.zeros(m.dim, complex)
        c[:20] = rng.standard_normal(20) + 1j * rng.standard_normal(20)
        c /= np.linalg.norm(c)
        pt = 3 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        ew = weighted_basis(m, pt)[0] * np.exp(0.5 * abs(pt) ** 2)
        err = max(err, abs(ew @ (gram @ c) - ew @ c))
    yield "reproducing property", err, "le", 1e-8


def operator_checks():
    m = _classical(30)
    one = Symbol(lambda z: np.ones(np.shape(z)), "one")
    yield "T_1 is the identity", float(np.max(np.abs(toeplitz_function(m, one).data - np.eye(30)))), "le", 1e-8
    P = SymbolPoly.monomial(1, 1)
    quad = toeplitz_function(m, Symbol(P.__call__, "abs2")).data
    yield "T_|z|^2 diagonal (k+1)/alpha", float(np.max(np.abs(quad - np.diag(np.arange(1, 31))))), "le", 1e-8
    f = indicator_ball(0.5 + 0.5j, 1.0) * SymbolPoly.monomial(1, 0).to_symbol()
    T, Tc = toeplitz_function(m, f), toeplitz_function(m, f.conj())
    yield "adjoint consistency", float(np.max(np.abs(Tc.data - T.H.data))), "le", 1e-8
    chi = toeplitz_function(m, indicator_ball(0, 1))
    pts = np.linspace(0, 3, 13) * np.exp(0.3j)
    yield "Berezin bound", float(np.max(np.abs(berezin(m, chi, pts)))), "le", 1.0
    yield "positivity", float(np.linalg.eigvalsh(chi.data).min()), "ge", -1e-8
    yield "op_norm matches SVD", abs(op_norm(chi) - np.linalg.norm(chi.data, 2)) / np.linalg.norm(chi.data, 2), \
        "le", 1e-8
    m = _classical(40)
    big = toeplitz_function(m, indicator_ball(0.0, 2.0))
    prof = lo.decay_profile(m, big, np.linspace(0, 4, 9), seed=0)
    yield "SL decay of a Toeplitz operator", float(np.max(prof.values - np.exp(-prof.radii**2 / 8))), "le", 0.0
    prof2 = lo.decay_profile(m, big @ big, np.linspace(0, 4, 9), seed=0)
    yield "products stay localized", float(np.max(prof2.values - np.exp(-prof2.radii**2 / 16))), "le", 0.0


def localization_checks():
    m = _classical(40)
    chi = toeplitz_function(m, indicator_ball(0, 1))
    I = OpMatrix.identity(40)
    for name, A in (("T_chi", chi), ("Id", I)):
        t = [lo.tail_norm(m, A, r) for r in np.linspace(0, 8, 9)]
        yield f"tail_norm nonincreasing ({name})", float(np.max(np.diff(t))), "le", 1e-10
    yield "tail_norm(Id, 3) grows with N", lo.tail_norm(_classical(20), OpMatrix.identity(20), 3) \
        - lo.tail_norm(_classical(60), OpMatrix.identity(60), 3), "lt", 0.0
    yield "local_norm <= op_norm", lo.local_norm(m, chi, 1.0, 1.0) - op_norm(chi), "le", 1e-6
    yield "tail_norm(T_chi, 6) small", lo.tail_norm(m, chi, 6.0), "lt", 1e-2
    yield "rho(6) small for T_chi", lo.compactness_indicator(m, chi, 1.0, [6.0]).values[0], "lt", 1e-2


def frame_checks():
    for d in (0.5, 1.0, 1.7):
        c = fr.make_cover(d, 3.0).check(10_000, seed=0)
        yield f"cover disjoint (d={d})", float(c["disjoint"]), "ge", 1.0
        yield f"cover overlap (d={d})", float(c["max_overlap"]), "le", 4.0
        yield f"dilate diameter (d={d})", c["diameter"] - 4 * d * np.sqrt(2), "le", 1e-12
    m = _classical(60)
    u = fr.lattice_points(3) + 0.25 + 0.5j
    F = fr.tilde_kernel_matrix(m, u)
    D = np.abs(u[:, None] - u[None, :])
    yield "frame Gram decay", float(np.max(np.abs(np.abs(F.conj().T @ F) - np.exp(-D**2 / 2) / np.pi))), "le", 1e-6
    m20 = _classical(20)
    d1 = fr.identity_deviation(fr.identity_quadrature(m20, 0.8, 8.0))
    d2 = fr.identity_deviation(fr.identity_quadrature(m20, 0.4, 8.0))
    yield "resolution of identity converges", d2 / d1, "le", 0.5
    m80 = _classical(80)
    ops = {"Id": OpMatrix.identity(80), "T_chi": toeplitz_function(m80, indicator_ball(0, 1)),
           "T_delta": toeplitz_measure(m80, DiscreteMeasure.point_mass(0))}
    blk = {k: fr.block_search(m80, A, 2.0, 3, 3, shifts=(0, 1, 1j))[0] for k, A in ops.items()}
    tail = {k: lo.tail_norm(m80, A, 3.0) for k, A in ops.items()}
    agree = max(blk, key=blk.get) == "Id" and max(tail, key=tail.get) == "Id"
    yield "block and tail estimators rank Id highest", float(agree), "ge", 1.0


def approximation_checks():
    worst = 0.0
    for a in (0.5, 1.0, 2.0):
        m = _classical(40, a)
        for i in range(4):
            for j in range(4):
                worst = max(worst, ap.verify_sharp(m, SymbolPoly.monomial(i, 0), SymbolPoly.monomial(0, j)))
    yield "sharp product law (a, b <= 3)", worst, "lt", 1e-8
    G = GridSymbol.sample(gaussian(0, 0.7), 5.0, 0.05)
    H = ap.heat_transform(G, 0.1)
    yield "heat transform preserves mass", abs(H.values.sum() - G.values.sum()) / abs(G.values.sum()), "le", 1e-6
    m = _classical(20)
    c = ap.heat_convergence_curve(m, indicator_ball(0, 1), [0.2, 0.1, 0.05], h=0.05)
    yield "heat curve decreases as t -> 0", float(np.min(np.diff(c.values))), "ge", -1e-9
    p = ap.point_mass_limit_curve(m, 0.0, [0.5, 0.25, 0.1])
    yield "point-mass curve decreases as eps -> 0", float(np.min(np.diff(p.values))), "ge", -1e-9
    m = _classical(40)
    rng = np.random.default_rng(3)
    res = 0.0
    for _ in range(5):
        z, w = (2.5 * np.sqrt(rng.uniform(size=2)) * np.exp(2j * np.pi * rng.uniform(size=2)))
        res = max(res, ap.rank_one_from_pointmasses(m, z, w)[1])
    yield "rank-one factorization", res, "lt", 1e-8


def translation_checks():
    m = _classical(40)
    rng = np.random.default_rng(4)
    lim = m.trust_radius / 3
    err = res = 0.0
    for _ in range(4):
        z, w = rng.uniform(-lim, lim, 2) @ [1, 1j], rng.uniform(-lim, lim, 2) @ [1, 1j]
        th, r = tr.theta(m, z, w)
        err = max(err, abs(th - np.exp(1j * np.imag(z * np.conj(w)))))
        res = max(res, r)
    yield "theta phase formula", err, "le", 1e-5
    yield "theta factorization residual", res, "lt", 1e-4
    m60 = _classical(60)
    U = tr.weighted_translation(m60, 1.5 * np.exp(0.7j))
    sv = U.singular_values()
    yield "near-unitarity on reliable block", float(np.max(np.abs(sv - 1))), "le", 1e-4
    yield "U_z squared is the identity", U.square_residual(), "le", 1e-4
    ops = {"Id": OpMatrix.identity(40), "T_chi": toeplitz_function(m, indicator_ball(0, 1)),
           "T_delta": toeplitz_measure(m, DiscreteMeasure.point_mass(0))}
    zs = tr.shell_points(2.0, 2.5, 2, 4)
    ess = {k: tr.translation_essnorm(m, A, z_list=zs).value for k, A in ops.items()}
    tail = {k: lo.tail_norm(m, A, 3.0) for k, A in ops.items()}
    yield "translation and tail estimators rank Id highest", \
        float(max(ess, key=ess.get) == "Id" and max(tail, key=tail.get) == "Id"), "ge", 1.0
    rep = tr.berezin_equiv_check(m, ops["T_chi"], 1.0, [1.0, 2.0, 3.0])
    yield "Berezin dominated by rho", float(rep.dominated), "ge", 1.0


SUITES = {"weights": weight_checks, "core": core_checks, "operators": operator_checks,
          "localization": localization_checks, "frames": frame_checks, "approximation": approximation_checks,
          "translations": translation_checks}


def run_checks(suites=None, echo=print) -> dict:
    """Run the invariant suites and return a manifest with a content hash."""
    results = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TrustRadiusWarning)
        for name in suites or SUITES:
            for label, value, op, bound in SUITES[name]():
                ok = bool(OPS[op](value, bound))
                results.append({"suite": name, "name": label, "value": float(value), "op": op,
                                "bound": float(bound), "pass": ok})
                if echo:
                    echo(f"{'PASS' if ok else 'FAIL'}  [{name}] {label}: {float(value):.3e} {op} {bound:g}")
    manifest = {"checks": results, "passed": all(r["pass"] for r in results)}
    manifest["hash"] = hashlib.sha256(json.dumps(manifest, sort_keys=True).encode()).hexdigest()
    return manifest


def write_manifest(manifest: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"check_manifest_{manifest['hash'][:16]}.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=1))
    return path
