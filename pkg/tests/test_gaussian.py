import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import loglog_slope, params_strategy
from foursqueeze import bogolyubov as bg, gaussian as g
from foursqueeze.errors import ValidationError
from foursqueeze.symplectic import SqueezeRotParams, compose_bloch_messiah

k_values = st.floats(0.2, 5.0)


@given(params_strategy(r_max=1.5), k_values)
def test_three_covariance_routes(p, k):
    mh = compose_bloch_messiah(p, basis="helicity")
    cm = g.covariance_from_helicity(mh, k).matrix
    cb = g.covariance_from_bogolyubov(bg.from_params(p), k).matrix
    cp = g.covariance_from_params(p, k).matrix
    scale = np.abs(cm).max()
    assert np.abs(cm - cb).max() < 1e-10 * scale
    assert np.abs(cm - cp).max() < 1e-10 * scale


@given(params_strategy(r_max=1.5), k_values)
def test_covariance_is_physical(p, k):
    blocks = g.covariance_from_params(p, k)
    assert blocks.uncertainty_margin() > -1e-9 * np.abs(blocks.matrix).max()
    assert np.allclose(blocks.matrix, blocks.matrix.T)


def test_vacuum_covariance():
    b = g.covariance_from_params(SqueezeRotParams(), 2.0)
    assert np.allclose(b.phiphi, np.eye(2) / 4.0)
    assert np.allclose(b.pipi, np.eye(2))
    assert np.allclose(b.phipi, 0)
    assert b.sector_determinant(1) == pytest.approx(0.25)


def test_decoupled_sector_determinant():
    p = SqueezeRotParams.from_squeezing(1.1, 0.4, theta3=0.3, theta4=0.2, phi3=1.0)
    b = g.covariance_from_params(p, 1.3)
    assert b.sector_determinant(1) == pytest.approx(0.25, abs=1e-12)
    assert b.sector_determinant(2) == pytest.approx(0.25, abs=1e-12)


def test_entries_order():
    b = g.covariance_from_params(SqueezeRotParams.from_squeezing(0.5, 0.2, theta3=0.1), 1.0)
    e = b.entries()
    assert len(e) == len(g.SPECTRA_COLUMNS) == 10
    assert e[0] == b.phiphi[0, 0] and e[2] == b.phipi[0, 0] and e[9] == b.pipi[1, 1]


@given(params_strategy(r_max=1.5))
def test_purity_routes(p):
    mh = compose_bloch_messiah(p, basis="helicity")
    gm = g.purity_gaussian(g.reduce(g.covariance_from_helicity(mh, 1.0))).gamma
    gp = g.purity_params(p).gamma
    assert gm == pytest.approx(gp, abs=1e-10)
    assert 0 < gp <= 1 + 1e-12


def test_purity_decoupled_is_one():
    p = SqueezeRotParams.from_squeezing(1.5, 0.3, theta3=0.3, theta4=0.9)
    assert g.purity_params(p).gamma == pytest.approx(1.0, abs=1e-12)
    assert g.purity_params(p).entropy == pytest.approx(0.0, abs=1e-9)


def test_entropy_monotone_in_sigma():
    s = np.linspace(0.5, 5, 30)
    e = [g.entanglement_entropy(x) for x in s]
    assert e[0] == 0.0 and np.all(np.diff(e) > 0)


def test_reduced_determinant_formula():
    p = SqueezeRotParams.from_squeezing(0.8, 0.3, theta3=0.4).with_tau(0.3 * cmath.exp(0.5j))
    b = g.covariance_from_params(p, 1.0)
    det = np.linalg.det(g.reduce(b))
    assert det == pytest.approx(b.sector_determinant(1) ** 2, rel=1e-12)


def test_wigner_normalization_and_singular():
    b = g.covariance_from_params(SqueezeRotParams.from_squeezing(0.4, 0.2, theta3=0.1).with_tau(0.2), 1.0)
    w = g.WignerGaussian.from_blocks(b).reduced()
    xs = np.random.default_rng(0).normal(size=(5, 4))
    dens = np.array([g.wigner_eval(w, x) for x in xs])
    ref = np.exp(-0.5 * np.einsum("ni,ij,nj->n", xs, np.linalg.inv(w.cov), xs))
    ref /= (2 * math.pi) ** 2 * math.sqrt(np.linalg.det(w.cov))
    assert np.allclose(dens, ref)
    with pytest.raises(ValidationError):
        g.wigner_eval(g.WignerGaussian(np.zeros((4, 4))), np.zeros(4))


def test_purity_gaussian_rejects_bad_covariance():
    with pytest.raises(ValidationError):
        g.purity_gaussian(np.diag([-1.0, 1.0, 1.0, 1.0]))


def test_perturbative_purity_zero_tau():
    p = SqueezeRotParams.from_squeezing(1.0, 0.5, theta3=0.4)
    assert g.purity_perturbative(p) == 1.0


@pytest.mark.parametrize("theta4", [0.3, 0.0, 1e-5])
def test_perturbative_spectra_fourth_order(theta4):
    taus = np.array([0.2, 0.1, 0.05])
    res = []
    for t in taus:
        p = SqueezeRotParams.from_squeezing(1.0, 0.6, theta3=0.4, theta4=theta4).with_tau(t * cmath.exp(0.7j))
        ex = g.sector_spectra(g.covariance_from_params(p, 1.3)).as_tuple()
        pe = g.spectra_perturbative(p, 1.3).as_tuple()
        res.append(max(abs(a - b) for a, b in zip(ex, pe)))
    assert loglog_slope(taus, res) == pytest.approx(4.0, abs=0.2)


def test_perturbative_spectra_exact_at_zero_tau():
    p = SqueezeRotParams.from_squeezing(1.0, 0.6, theta3=0.4, theta4=0.3)
    ex = g.sector_spectra(g.covariance_from_params(p, 0.7)).as_tuple()
    assert np.allclose(ex, g.spectra_perturbative(p, 0.7).as_tuple(), atol=1e-13)


def test_shifted_remainder_matches_taylor_sum():
    for fn in (math.cos, math.sin):
        for c in (0.3, -1.2):
            for x in (0.5, 0.02, 0.0099, 1e-6, 0.0):
                ref = sum((n - 1) / math.factorial(n) * x ** (n - 2) * fn(c + n * math.pi / 2) for n in range(2, 40))
                assert g._shifted_remainder(fn, c, x) == pytest.approx(ref, abs=1e-11)


def test_wigner_integrates_to_one_in_two_dimensions():
    w = g.WignerGaussian(np.array([[0.7, 0.2], [0.2, 0.5]]))
    x = np.linspace(-8, 8, 321)
    h = x[1] - x[0]
    total = sum(g.wigner_eval(w, (a, b)) for a in x for b in x) * h * h
    assert total == pytest.approx(1.0, abs=1e-8)
