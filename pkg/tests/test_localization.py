import numpy as np
import pytest
from scipy.special import gammaincc

from focklab import DiscreteMeasure, OpMatrix, constant, indicator_ball, op_norm, toeplitz_function, toeplitz_measure
from focklab import localization as lo
from focklab.localization import DecayCurve


@pytest.fixture(scope="module")
def chi40():
    from focklab import make_model, make_weight
    m = make_model(make_weight(), 40)
    return m, toeplitz_function(m, indicator_ball(0, 1))


def test_decay_profile_zero(classical):
    m = classical(30)
    c = lo.decay_profile(m, OpMatrix.zeros(30), [0, 1, 2])
    assert np.all(c.values == 0)


def test_decay_profile_identity_gaussian(classical):
    m = classical(60)
    c = lo.decay_profile(m, OpMatrix.identity(60), np.linspace(0, 4, 9))
    assert np.max(np.abs(c.values - np.exp(-c.radii**2 / 2))) < 1e-6


def test_decay_profile_bounded_symbol(chi40):
    m, chi = chi40
    c = lo.decay_profile(m, chi, np.linspace(0, 5, 11))
    assert np.all(c.values <= np.exp(-c.radii**2 / 4) + 1e-6)


def test_decay_profile_omits_untrusted_radii(classical):
    m = classical(20)
    c = lo.decay_profile(m, OpMatrix.identity(20), [0.5, 1.0, 2 * m.trust_radius + 1])
    assert len(c) == 2
    assert c.meta["omitted"] == [2 * m.trust_radius + 1]


def test_decay_profile_is_seeded(chi40):
    m, chi = chi40
    a = lo.decay_profile(m, chi, [1.0, 2.0], seed=5)
    b = lo.decay_profile(m, chi, [1.0, 2.0], seed=5)
    assert np.array_equal(a.values, b.values)


def test_product_keeps_half_the_decay_rate(chi40):
    m, _ = chi40
    T = toeplitz_function(m, indicator_ball(0.0, 2.0))
    r = np.linspace(0.5, 4, 8)
    single = lo.decay_profile(m, T, r).fit_gaussian_rate()
    prod = lo.decay_profile(m, T @ T, r).fit_gaussian_rate()
    assert prod >= 0.5 * single


def test_compactness_indicator_identity(classical):
    m = classical(40)
    c = lo.compactness_indicator(m, OpMatrix.identity(40), 1.0, [0.0, 1.0, 2.0, 3.0])
    assert np.allclose(c.values, 1.0, atol=1e-12)


def test_compactness_indicator_examples(chi40):
    m, chi = chi40
    assert lo.compactness_indicator(m, chi, 1.0, [4.0]).values[0] < 1e-3
    d0 = toeplitz_measure(m, DiscreteMeasure.point_mass(0))
    c = lo.compactness_indicator(m, d0, 1.0, [1.0, 2.0, 3.0, 4.0])
    assert np.all(np.diff(c.values) < 0) and c.values[-1] < 1e-2


def test_compactness_indicator_flags_untrusted(classical):
    m = classical(20)
    c = lo.compactness_indicator(m, OpMatrix.identity(20), 1.0, [0.0, m.trust_radius + 0.5])
    assert list(c.trusted) == [True, False]


def test_tail_norm_examples(chi40):
    m, chi = chi40
    assert lo.tail_norm(m, OpMatrix.zeros(40), 2.0) == 0
    assert lo.tail_norm(m, OpMatrix.identity(40), 0.0) == pytest.approx(1.0)
    assert lo.tail_norm(m, chi, 6.0) < 0.05


def test_tail_norm_eigen_oracle(chi40):
    m, chi = chi40
    for r in (0.5, 1.5, 3.0):
        g = gammaincc(np.arange(40) + 1, r**2)
        oracle = np.sqrt(np.linalg.eigvalsh(chi.data.conj().T @ (g[:, None] * chi.data)).max())
        assert lo.tail_norm(m, chi, r) == pytest.approx(oracle, rel=1e-8)
        assert lo.tail_norm(m, OpMatrix.identity(40), r) == pytest.approx(np.sqrt(g.max()), rel=1e-10)


def test_tail_norm_nonincreasing(chi40):
    m, chi = chi40
    t = [lo.tail_norm(m, chi, r) for r in np.linspace(0, 8, 17)]
    assert np.all(np.diff(t) <= 1e-10)


def test_tail_norm_identity_grows_with_dimension(classical):
    assert lo.tail_norm(classical(60), OpMatrix.identity(60), 3) > lo.tail_norm(classical(20), OpMatrix.identity(20), 3)


def test_tail_norm_rejects_negative_radius(chi40):
    with pytest.raises(ValueError):
        lo.tail_norm(*chi40, -1.0)


def test_local_norm_examples(chi40):
    m, chi = chi40
    assert lo.local_norm(m, OpMatrix.zeros(40), 0.0, 1.0) == 0
    assert lo.local_norm(m, chi, 5.0, 1.0) < 1e-2
    assert lo.local_norm(m, chi, 0.5, 1.0) <= op_norm(chi) + 1e-6


def test_local_norm_eigen_oracle(chi40):
    m, chi = chi40
    z, d = 0.8 + 0.3j, 1.0
    h1 = lo.local_gram(m, z, d)
    h2 = lo.local_gram(m, z, 2 * d)
    # ||H1^{1/2} A H2^{1/2}||^2 = lambda_max(H2^{1/2} A^H H1 A H2^{1/2}), via generalized eigenproblem
    lam1, V1 = np.linalg.eigh(h2)
    s = V1 @ np.diag(np.sqrt(np.clip(lam1, 0, None))) @ V1.conj().T
    oracle = np.sqrt(np.linalg.eigvalsh(s @ chi.data.conj().T @ h1 @ chi.data @ s).max())
    assert lo.local_norm(m, chi, z, d) == pytest.approx(oracle, rel=1e-8)


def test_psd_sqrt_rejects_indefinite():
    with pytest.raises(ValueError):
        lo.psd_sqrt(np.diag([1.0, -1e-6]))
    S = lo.psd_sqrt(np.diag([4.0, -1e-13]))
    assert np.allclose(S, np.diag([2.0, 0.0]))


def test_essnorm_check_examples(chi40):
    m, _ = chi40
    rep = lo.toeplitz_essnorm_check(m, indicator_ball(0, 1), [2.0, 4.0, 6.0])
    assert rep.co_decay(6.0, 0.05)
    assert rep.tail_curve.is_nonincreasing()
    zero = lo.toeplitz_essnorm_check(m, DiscreteMeasure([], []), [2.0, 4.0])
    assert np.all(zero.tail_curve.values == 0) and np.all(zero.far_curve.values == 0)


def test_essnorm_check_lebesgue_measure(classical):
    m = classical(30)
    rep = lo.toeplitz_essnorm_check(m, constant(1.0), [1.0, 2.0])
    # T_1 = Id after rescaling by the unit-disk mass pi
    assert rep.scale == pytest.approx(1 / np.pi, rel=1e-6)
    g = gammaincc(np.arange(30) + 1, 1.0)
    assert rep.tail_curve.values[0] == pytest.approx(np.sqrt(g.max()) / np.pi, rel=1e-6)
    assert rep.far_curve.values[0] == pytest.approx(1 / np.pi, rel=1e-6)


def test_decay_curve_validation_and_csv():
    with pytest.raises(ValueError):
        DecayCurve([1.0, 0.5], [1, 2], [1, 1], [True, True])
    c = DecayCurve([0.0, 1.0], [1.0, 0.5], [3, 3], [True, False])
    assert c.to_csv().splitlines()[0] == "radius,value,n_samples,trusted"
    assert c.at(1.0) == 0.5
