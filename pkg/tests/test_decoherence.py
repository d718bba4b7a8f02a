import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import loglog_slope, params_strategy
from foursqueeze import decoherence, fock, gaussian
from foursqueeze.errors import DomainError
from foursqueeze.symplectic import SqueezeRotParams


def coupled(tau=0.2, r1=0.5, r2=0.3, theta4=0.2):
    return SqueezeRotParams.from_squeezing(r1, r2, theta3=0.35, theta4=theta4, phi3=-0.2, phi4=0.4,
                                           phi5=0.1, phi6=0.6).with_tau(tau * cmath.exp(0.8j))


def test_decoupled_xi_is_product():
    p = SqueezeRotParams.from_squeezing(0.6, 0.4, theta3=0.3, theta4=0.5, phi3=0.2)
    L = 10
    c1 = [fock.two_mode_coefficient(1, p, n) for n in range(L + 1)]
    c2 = [fock.two_mode_coefficient(2, p, m) for m in range(L + 1)]
    table = decoherence.reduced_density(p, L)
    for n in range(5):
        for n2 in range(5):
            mass = sum(abs(c2[m]) ** 2 for m in range(L - max(n, n2) + 1))
            assert table.value(n, n2, 0, 0) == pytest.approx(c1[n] * np.conj(c1[n2]) * mass, abs=1e-14)
    for (n, n2, s, t), v in table.entries():
        if (s, t) != (0, 0):
            assert abs(v) < 1e-15


def test_vacuum_reduced_state():
    rho = decoherence.reduced_density(SqueezeRotParams(), 3).reduced()
    want = np.zeros_like(rho.matrix)
    want[0, 0] = 1.0
    assert np.allclose(rho.matrix, want, atol=1e-15)


def test_reduced_matrix_properties():
    p = coupled(tau=0.2)
    table = decoherence.reduced_density(p, 14)
    rho = table.reduced()
    assert rho.hermiticity_residual() < 1e-10
    assert rho.trace() == pytest.approx(1.0 - table.deficit, abs=1e-13)
    assert table.isotropy_residual() < 1e-12
    eig = np.linalg.eigvalsh(0.5 * (rho.matrix + rho.matrix.conj().T))
    assert eig.min() > -1e-13


def test_single_xi_matches_table():
    p = coupled(tau=0.3)
    L = 8
    table = decoherence.reduced_density(p, L)
    for key in ((2, 1, 0, 1), (3, 3, -1, 0), (1, 4, 1, -1), (0, 0, 0, 0)):
        assert decoherence.xi(p, *key, L).value == pytest.approx(table.value(*key), abs=1e-14)
    assert decoherence.xi(p, 1, 1, 0, 0, L).tail == pytest.approx(table.tail)


def test_xi_index_errors():
    p = coupled()
    with pytest.raises(DomainError):
        decoherence.xi(p, 0, 0, -1, 0, 5)
    with pytest.raises(DomainError):
        decoherence.xi(p, 1, 1, 0, 0, -1)


def test_quintuple_sum_matches_contraction():
    p = coupled(tau=0.35)
    table = decoherence.reduced_density(p, 6)
    fast = decoherence.purity_fock(p, 6).value
    assert decoherence.purity_fock_quintuple(table) == pytest.approx(fast, abs=1e-14)
    assert fast == pytest.approx(table.reduced().purity(), abs=1e-14)


@pytest.mark.parametrize("tau,r1,r2", [(0.3, 0.6, 0.4), (0.1, 0.3, 0.3), (0.5, 0.2, 0.5)])
def test_fock_purity_converges_to_gaussian(tau, r1, r2):
    p = coupled(tau=tau, r1=r1, r2=r2)
    est = decoherence.purity_fock(p, 30)
    exact = gaussian.purity_params(p).gamma
    assert abs(est.value - exact) < 1e-10
    assert abs(est.value - exact) <= est.tail + 1e-13


@settings(max_examples=15, deadline=None)
@given(params_strategy(r_max=0.5, tau_max=0.4))
def test_purity_bounds(p):
    est = decoherence.purity_fock(p, 16)
    assert est.value <= 1.0 + 1e-12
    assert est.value > 0.0
    assert abs(est.value - gaussian.purity_params(p).gamma) <= est.tail + 1e-12


def test_coupling_correction_is_quadratic():
    taus = np.array([0.04, 0.02, 0.01])
    L = 10
    base = decoherence.reduced_density(coupled(tau=0.0), L).reduced().matrix
    diffs = [np.abs(decoherence.reduced_density(coupled(tau=t), L).reduced().matrix - base).max() for t in taus]
    assert loglog_slope(taus, diffs) == pytest.approx(2.0, abs=0.1)


@pytest.mark.parametrize("theta4", [0.2, 0.0])
def test_perturbative_reduced_matrix(theta4):
    # L = 10 leaves a truncation floor near 5e-6 at the box edge
    L = 20
    taus = np.array([0.05, 0.025, 0.0125])
    errs = []
    for t in taus:
        p = coupled(tau=t, r1=0.4, r2=0.3, theta4=theta4)
        exact = decoherence.reduced_density(p, L).reduced().matrix
        approx = decoherence.reduced_density_perturbative(p, L).matrix
        errs.append(np.abs(exact - approx).max())
    assert errs[0] < 1e-5
    assert loglog_slope(taus, errs) == pytest.approx(4.0, abs=0.2)


def test_diagonal_correction_term_keeps_trace():
    # without the diagonal second-order term the trace would drift at order |tau|^2
    p = coupled(tau=0.05, r1=0.4, r2=0.3)
    L = 14
    rho = decoherence.reduced_density_perturbative(p, L)
    exact = decoherence.reduced_density(p, L).reduced()
    assert abs(rho.trace() - exact.trace()) < 1e-5
    assert rho.hermiticity_residual() < 1e-14


def test_distortion_vanishes_without_coupling():
    assert decoherence.spectra_distortion(coupled(tau=0.0)) == 0.0
    assert decoherence.spectra_distortion(coupled(tau=0.1)) > 0.0


def test_sweep_structure():
    base = SqueezeRotParams(theta3=math.pi / 8).with_tau(0.1)
    taus = np.linspace(0.0, 0.2, 5)
    rs = np.linspace(0.0, 3.0, 7)
    rows = decoherence.decoherence_sweep(base, taus, rs)
    assert len(rows) == len(taus) * len(rs)
    for row in rows:
        assert 0.0 < row.gamma <= 1.0 + 1e-12
        if row.tau == 0.0:
            assert row.gamma == pytest.approx(1.0)
            assert row.distortion == 0.0
            assert not row.flag
        assert row.flag == (row.gamma < 0.5 and row.distortion < 0.05)
    by_tau = {}
    for row in rows:
        by_tau.setdefault(row.tau, []).append(row.gamma)
    for t, gammas in by_tau.items():
        if t > 0:
            assert all(a > b for a, b in zip(gammas, gammas[1:]))
    assert any(row.flag for row in rows if row.r == 3.0)


def test_sweep_perturbative_purity_tracks_small_coupling():
    base = SqueezeRotParams(theta3=math.pi / 8).with_tau(0.01)
    (row,) = decoherence.decoherence_sweep(base, [0.01], [0.2])
    assert row.gamma_pert == pytest.approx(row.gamma, abs=1e-7)
