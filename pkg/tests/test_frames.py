import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from focklab import OpMatrix, indicator_ball, toeplitz_function
from focklab import frames as fr


def test_cover_tiles_window():
    cov = fr.make_cover(1.0, 2.0)
    # cells [-1,1)^2 + 2Z^2 meeting (-2,2)^2: centres -2, 0, 2 on each axis
    assert cov.centers.size == 9
    rng = np.random.default_rng(0)
    pts = rng.uniform(-2, 2, 5000) + 1j * rng.uniform(-2, 2, 5000)
    assert np.all(cov.in_cells(pts).sum(axis=1) == 1)


@pytest.mark.parametrize("d", [0.3, 0.5, 1.0, 1.7])
def test_cover_properties(d):
    c = fr.make_cover(d, 3.0).check(10_000, seed=1)
    assert c["disjoint"]
    assert c["max_overlap"] <= 4
    assert c["diameter"] <= 4 * d * math.sqrt(2) + 1e-12


def test_dilate_overlap_is_attained():
    cov = fr.make_cover(1.0, 3.0)
    assert cov.in_dilates(np.array([1.0 + 1.0j])).sum() == 4


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.2, 2.0))
def test_cell_membership_matches_geometry(x, y, d):
    cov = fr.make_cover(d, 6.0)
    p = np.array([complex(x, y)])
    c = cov.cell_of(p)[0]
    assert c.real - d - 1e-9 <= x < c.real + d + 1e-9
    assert c.imag - d - 1e-9 <= y < c.imag + d + 1e-9
    # the point sits inside the dilate of its own cell
    own = np.flatnonzero(np.isclose(cov.centers, c))
    assert cov.in_dilates(p)[0, own].all()


def test_cover_rejects_bad_input():
    with pytest.raises(ValueError):
        fr.make_cover(0.0, 1.0)


def test_lattice_points():
    assert fr.lattice_points(1).tolist() == [0j]
    assert fr.lattice_points(2).size == 9
    assert fr.lattice_points(0).size == 0


def test_preframe_examples(classical):
    m = classical(60)
    P = fr.preframe(m, 0.3 + 0.2j, 1.0)
    assert P.matrix.shape == (60, 1)
    assert P.norm ** 2 == pytest.approx(1 / math.pi, rel=1e-9)
    empty = fr.preframe(m, 0.0, 0)
    assert empty.matrix.shape == (60, 0) and empty.norm == 0


def test_preframe_flags_untrusted(classical):
    m = classical(20)
    P = fr.preframe(m, 0.0, 3.0)
    assert P.n_untrusted > 0
    Q = fr.preframe(m, 0.0, 3.0, drop_untrusted=True)
    assert Q.n_untrusted == 0 and Q.matrix.shape[1] == P.matrix.shape[1] - P.n_untrusted


def test_preframe_columns_match_gram(classical):
    m = classical(60)
    P = fr.preframe(m, 0.25 + 0.5j, 3.0)
    G = P.matrix.conj().T @ P.matrix
    D = np.abs(P.points[:, None] - P.points[None, :])
    assert np.max(np.abs(np.abs(G) - np.exp(-D**2 / 2) / math.pi)) < 1e-6


def test_frame_norm_scan(classical, rng):
    m = classical(80)
    z = rng.uniform(0, 1, 10) + 1j * rng.uniform(0, 1, 10)
    scan = fr.frame_norm_scan(m, 4.0, z)
    direct = [np.linalg.norm(fr.preframe(m, zz, 4.0).matrix, 2) for zz in z]
    assert np.allclose(scan.norms, direct, rtol=1e-8)
    assert scan.spread < 0.1
    assert fr.frame_norm_scan(m, 0, z[:2]).norms.tolist() == [0.0, 0.0]
    assert scan.to_csv().splitlines()[0] == "z_re,z_im,R,norm"


def test_identity_quadrature_examples(classical):
    m = classical(20)
    M = fr.identity_quadrature(m, 0.1, 8.0)
    assert np.max(np.abs(np.diag(M.data)[:10] - 1)) < 1e-3
    off = M.data[:10, :10] - np.diag(np.diag(M.data[:10, :10]))
    assert np.max(np.abs(off)) < 1e-3
    finer = fr.identity_quadrature(m, 0.05, 8.0)
    assert fr.identity_deviation(finer) < 1e-3
    assert np.all(fr.identity_quadrature(m, 0.1, 0.0).data == 0)


def test_identity_quadrature_error_halves(classical):
    m = classical(20)
    devs = [fr.identity_deviation(fr.identity_quadrature(m, h, 8.0)) for h in (0.8, 0.4, 0.2, 0.1)]
    for a, b in zip(devs, devs[1:]):
        assert b <= max(0.5 * a, 1e-12)


def test_offdiag_block_norm(classical):
    m = classical(40)
    assert fr.offdiag_block_norm(m, OpMatrix.identity(40), 10.0, 2) == 0.0
    near = fr.offdiag_block_norm(m, OpMatrix.identity(40), 1.0, 2)
    far = fr.offdiag_block_norm(m, OpMatrix.identity(40), 2.0, 2)
    assert 0 < far < near
    with pytest.raises(ValueError):
        fr.offdiag_block_norm(m, OpMatrix.identity(40), 0.5, 2)
    with pytest.raises(ValueError):
        fr.offdiag_block_norm(m, OpMatrix.identity(40), 2.0, 2, eta=1.5)


def test_block_lower_bound_examples(classical):
    m = classical(80)
    assert fr.block_lower_bound(m, OpMatrix.zeros(80), 2.0, 1.0, 0.0) == 0.0
    chi = toeplitz_function(m, indicator_ball(0, 1))
    vals = [fr.block_lower_bound(m, chi, 1.0, a, 0.0) for a in (2.0, 3.0, 4.0)]
    assert np.all(np.diff(vals) < 0)
    ident = fr.block_lower_bound(m, OpMatrix.identity(80), 1.0, 2.0, 0.0)
    assert ident >= 1 / math.pi - 1e-9
    with pytest.raises(ValueError):
        fr.block_lower_bound(m, chi, 1.0, 0.0, 3.0)


def test_deviation_report_json(classical):
    import json
    rep = json.loads(fr.deviation_report(classical(20), [0.8, 0.4], 8.0))
    assert rep["deviation"][1] < rep["deviation"][0]
