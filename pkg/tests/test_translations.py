import math

import numpy as np
import pytest
from scipy.special import eval_genlaguerre

from focklab import OpMatrix, indicator_ball, make_model, make_weight, toeplitz_function
from focklab import translations as tr
from focklab.approximation import UnsupportedWeightError


def displacement_matrix(beta, n):
    """<m|D(beta)|k> from the associated Laguerre closed form."""
    out = np.zeros((n, n), dtype=complex)
    x = abs(beta) ** 2
    for a in range(n):
        for b in range(n):
            lo, hi = min(a, b), max(a, b)
            lf = 0.5 * (math.lgamma(lo + 1) - math.lgamma(hi + 1)) - 0.5 * x
            base = beta if a >= b else -np.conj(beta)
            out[a, b] = math.exp(lf) * base ** (hi - lo) * eval_genlaguerre(lo, hi - lo, x)
    return out


def test_origin_is_parity(classical):
    U = tr.weighted_translation(classical(12), 0.0)
    assert np.array_equal(U.matrix.data, np.diag((-1.0) ** np.arange(12)))
    assert U.reliable_block == 12


@pytest.mark.parametrize("z,alpha", [(1.2 - 0.5j, 1.0), (0.8j, 2.0)])
def test_matches_displacement_oracle(classical, z, alpha):
    m = classical(40, alpha)
    U = tr.weighted_translation(m, z)
    D = displacement_matrix(math.sqrt(alpha) * np.conj(z), 40)
    ref = D * ((-1.0) ** np.arange(40))[None, :]
    L = U.reliable_block
    assert np.max(np.abs(U.matrix.data[:L, :L] - ref[:L, :L])) < 1e-9


def test_refuses_other_weights():
    m = make_model(make_weight("fock_sobolev", 1.0, 1, 3.0), 20)
    with pytest.raises(UnsupportedWeightError):
        tr.weighted_translation(m, 1.0)


def test_square_and_unitarity_on_reliable_block(classical):
    m = classical(60)
    for z in (0.5, 1.0 + 1.0j, -1.4 + 0.6j):
        U = tr.weighted_translation(m, z)
        assert U.reliable_block >= 20
        assert U.square_residual() < 1e-4
        assert np.max(np.abs(U.singular_values() - 1)) < 1e-4


def test_theta_examples(classical):
    m = classical(40)
    th, res = tr.theta(m, 0.0, 0.0)
    assert th == pytest.approx(1.0) and res < 1e-12
    z, w = 0.9 + 0.3j, -0.4 + 0.7j
    th, res = tr.theta(m, z, w)
    assert abs(th) == pytest.approx(1.0, abs=1e-5)
    assert abs(th - np.exp(1j * np.imag(z * np.conj(w)))) < 1e-5
    assert res < 1e-4


def test_essnorm_examples(classical):
    m = classical(40)
    zs = tr.shell_points(1.0, 1.5, 2, 4)
    ident = tr.translation_essnorm(m, OpMatrix.identity(40), z_list=zs)
    assert ident.value == pytest.approx(1.0, abs=1e-4)
    zero = tr.translation_essnorm(m, OpMatrix.zeros(40), z_list=zs)
    assert zero.value == 0.0
    assert ident.shell == (1.0, 1.5)


def test_essnorm_custom_samples(classical):
    m = classical(40)
    chi = toeplitz_function(m, indicator_ball(0, 1))
    zs = tr.shell_points(2.0, 2.0, 1, 4)
    F = np.eye(40)[:, :1]
    rep = tr.translation_essnorm(m, chi, f_samples=F, z_list=zs)
    direct = max(np.linalg.norm(chi.data @ tr.weighted_translation(m, z).matrix.data[:, 0]) for z in zs)
    assert rep.value == pytest.approx(direct, rel=1e-12)


def test_default_samples_are_unit_and_seeded(classical):
    m = classical(20)
    F = tr.default_f_samples(m, seed=3)
    assert F.shape == (20, 16)
    assert np.allclose(np.linalg.norm(F, axis=0), 1.0)
    assert np.array_equal(F, tr.default_f_samples(m, seed=3))


def test_berezin_equivalence(classical):
    m = classical(60)
    rep = tr.berezin_equiv_check(m, OpMatrix.identity(60), 1.0, [1.0, 2.0])
    assert np.allclose(rep.berezin_curve.values, 1.0) and np.allclose(rep.rho_curve.values, 1.0)
    chi = toeplitz_function(m, indicator_ball(0, 1))
    rep = tr.berezin_equiv_check(m, chi, 1.0, [2.0, 3.0, 4.0])
    assert rep.dominated
    assert rep.berezin_curve.values[-1] < 1e-2 and rep.rho_curve.values[-1] < 1e-2
