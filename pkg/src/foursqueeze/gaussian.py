"""Gaussian phase-space description of the evolved vacuum.

Covariances follow the field ordering z = (phi_1, phi_2, pi_1, pi_2) with
``Cov = [[phiphi, phipi], [phipi^T, pipi]]``.  The eight-dimensional Wigner
variables are ordered (q_1k, q_1-k, q_2k, q_2-k, p_1k, p_1-k, p_2k, p_2-k),
so the 8x8 covariance is ``Cov (x) I_2``.  Units have hbar = 1.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .symplectic import OMEGA, U_HEL, d_matrix, sinc

# rows/columns of the 8-vector that belong to field 1
SECTOR1_INDICES = (0, 1, 4, 5)
WIGNER_DET_FLOOR = 1e-30


@dataclass(frozen=True)
class CovarianceBlocks:
    phiphi: np.ndarray
    pipi: np.ndarray
    phipi: np.ndarray
    k: float = 1.0

    @property
    def matrix(self):
        return np.block([[self.phiphi, self.phipi], [self.phipi.T, self.pipi]])

    @property
    def cov8(self):
        return np.kron(self.matrix, np.eye(2))

    def sector_determinant(self, sector=1):
        """phiphi_ii pipi_ii - phipi_ii^2; 1/4 for a pure sector."""
        i = sector - 1
        return float(self.phiphi[i, i] * self.pipi[i, i] - self.phipi[i, i] ** 2)

    def entries(self):
        """The ten independent entries (upper triangle of the 4x4 matrix, row-major)."""
        m = self.matrix
        return [float(m[i, j]) for i in range(4) for j in range(i, 4)]

    def uncertainty_margin(self):
        """Smallest eigenvalue of Cov + i Omega / 2 (non-negative for physical states)."""
        return float(np.min(np.linalg.eigvalsh(self.matrix + 0.5j * OMEGA)))


SPECTRA_COLUMNS = tuple(
    f"cov_{a}{b}" for a, b in [(i, j) for i in range(4) for j in range(i, 4)]
)


def covariance_from_helicity(mh, k):
    """Re[D^-1 U^dag G P G^dag U D^-1] with P projecting on the annihilation block."""
    p = np.diag([1.0, 1.0, 0.0, 0.0])
    di = np.linalg.inv(d_matrix(k))
    sig = di @ U_HEL.conj().T @ mh @ p @ mh.conj().T @ U_HEL @ di
    m = sig.real
    m = 0.5 * (m + m.T)
    return CovarianceBlocks(m[:2, :2], m[2:, 2:], m[:2, 2:], float(k))


def covariance_from_bogolyubov(b, k):
    """Explicit quadratic forms in the Bogolyubov coefficients."""
    a11, a12, a21, a22, b11, b12, b21, b22 = b.as_tuple()
    c = complex.conjugate
    x_plus = b11 * (c(b21) + a21) + b12 * (c(b22) + a22)
    x_minus = b11 * (c(b21) - a21) + b12 * (c(b22) - a22)
    phiphi = np.array(
        [
            [0.5 * (abs(a11 + c(b11)) ** 2 + abs(a12 + c(b12)) ** 2), x_plus.real],
            [x_plus.real, 0.5 * (abs(a21 + c(b21)) ** 2 + abs(a22 + c(b22)) ** 2)],
        ]
    ) / k
    pipi = k * np.array(
        [
            [0.5 * (abs(a11 - c(b11)) ** 2 + abs(a12 - c(b12)) ** 2), x_minus.real],
            [x_minus.real, 0.5 * (abs(a21 - c(b21)) ** 2 + abs(a22 - c(b22)) ** 2)],
        ]
    )
    phipi = np.array(
        [
            [(a11 * b11 + a12 * b12).imag, -x_minus.imag],
            [x_plus.imag, (a21 * b21 + a22 * b22).imag],
        ]
    )
    return CovarianceBlocks(phiphi, pipi, phipi, float(k))


def _mixing_scalars(params):
    th = params.theta
    tau = params.tau
    tt = complex(math.cos(th), params.theta4 * sinc(th))
    return tt, tau, sinc(th)


def covariance_from_params(params, k):
    """Spectra in terms of squeezing amplitudes and the mixing scalars tau, tau_tilde."""
    tt, tau, sc = _mixing_scalars(params)
    at, a = cmath.phase(tt), (cmath.phase(tau) if tau != 0 else 0.0)
    wt, w = abs(tt) ** 2, sc * sc * abs(tau) ** 2
    cross = sc * abs(tt) * abs(tau)
    t3 = 2.0 * params.theta3
    ch1, ch2 = math.cosh(2 * params.r1), math.cosh(2 * params.r2)
    sh1, sh2 = math.sinh(2 * params.r1), math.sinh(2 * params.r2)

    def diag(sign, s1, s2, sh_a, sh_b, ch_a, ch_b):
        # sign = +1 for sector 1 (phases t3 + 2 arg), -1 for sector 2
        return (
            wt * (ch_a + s1 * math.cos(t3 + sign * 2 * at) * sh_a)
            + w * (ch_b + s2 * math.cos(t3 + sign * 2 * a) * sh_b)
        )

    pp11 = diag(+1, 1, -1, sh1, sh2, ch1, ch2) / (2 * k)
    pp22 = diag(-1, 1, -1, sh2, sh1, ch2, ch1) / (2 * k)
    qq11 = k / 2 * diag(+1, -1, 1, sh1, sh2, ch1, ch2)
    qq22 = k / 2 * diag(-1, -1, 1, sh2, sh1, ch2, ch1)

    s_sum = math.sin(a + at)
    s1 = math.sin(t3 - a + at) * sh1
    s2 = math.sin(t3 + a - at) * sh2
    pp12 = cross * (s_sum * (ch2 - ch1) + s1 + s2) / (2 * k)
    qq12 = k / 2 * cross * (s_sum * (ch2 - ch1) - s1 - s2)

    fp11 = 0.5 * (-wt * math.sin(t3 + 2 * at) * sh1 + w * math.sin(t3 + 2 * a) * sh2)
    fp22 = 0.5 * (-wt * math.sin(t3 - 2 * at) * sh2 + w * math.sin(t3 - 2 * a) * sh1)
    c_sum = math.cos(a + at)
    c1 = math.cos(t3 - a + at) * sh1
    c2 = math.cos(t3 + a - at) * sh2
    fp12 = 0.5 * cross * (c_sum * (ch1 - ch2) + c1 + c2)
    fp21 = 0.5 * cross * (c_sum * (ch2 - ch1) + c1 + c2)

    return CovarianceBlocks(
        np.array([[pp11, pp12], [pp12, pp22]]),
        np.array([[qq11, qq12], [qq12, qq22]]),
        np.array([[fp11, fp12], [fp21, fp22]]),
        float(k),
    )


# ------------------------------------------------------------------ Wigner function

@dataclass(frozen=True)
class WignerGaussian:
    """Zero-mean Gaussian W(q) = exp(-q^T C^-1 q / 2) / [(2 pi)^n sqrt(det C)], n = dim / 2.

    W integrates to one over the 2n real phase-space coordinates; the full
    8x8 case carries the (2 pi)^4 prefactor.
    """

    cov: np.ndarray

    @classmethod
    def from_blocks(cls, blocks):
        return cls(blocks.cov8)

    @property
    def half_dim(self):
        return self.cov.shape[0] // 2

    def reduced(self):
        idx = np.array(SECTOR1_INDICES)
        return WignerGaussian(self.cov[np.ix_(idx, idx)])


def wigner_eval(w, q):
    det = float(np.linalg.det(w.cov))
    if not det > WIGNER_DET_FLOOR:
        raise ValidationError(f"covariance is numerically singular (det = {det:.3e})")
    q = np.asarray(q, dtype=float)
    quad = float(q @ np.linalg.solve(w.cov, q))
    n = w.half_dim
    return math.exp(-0.5 * quad) / ((2 * math.pi) ** n * math.sqrt(det))


def reduce(cov):
    """Field-1 block of the 8x8 covariance (rows/columns q_1k, q_1-k, p_1k, p_1-k)."""
    c8 = cov.cov8 if isinstance(cov, CovarianceBlocks) else np.asarray(cov)
    idx = np.array(SECTOR1_INDICES)
    return c8[np.ix_(idx, idx)]


# ------------------------------------------------------------------ purity

@dataclass(frozen=True)
class GaussianPurity:
    gamma: float
    sigma: float
    entropy: float


def entanglement_entropy(sigma):
    """(sigma + 1/2) log2(sigma + 1/2) - (sigma - 1/2) log2(sigma - 1/2)."""
    a, b = sigma + 0.5, sigma - 0.5
    out = a * math.log2(a)
    if b > 1e-300:
        out -= b * math.log2(b)
    return max(0.0, out)


def _from_gamma(gamma):
    sigma = 1.0 / (2.0 * math.sqrt(gamma))
    return GaussianPurity(gamma, sigma, entanglement_entropy(sigma))


def purity_gaussian(cov_red):
    """gamma = (16 det Cov_red)^(-1/2) with symplectic eigenvalue and entropy."""
    det = float(np.linalg.det(np.asarray(cov_red)))
    if not det > 0:
        raise ValidationError(f"reduced covariance determinant must be positive, got {det!r}")
    return _from_gamma((16.0 * det) ** -0.5)


def purity_params(params):
    """Non-perturbative purity from squeezing amplitudes and mixing scalars."""
    tt, tau, sc = _mixing_scalars(params)
    at, a = cmath.phase(tt), (cmath.phase(tau) if tau != 0 else 0.0)
    wt, w = abs(tt) ** 2, sc * sc * abs(tau) ** 2
    r1, r2 = params.r1, params.r2
    bracket = math.cosh(2 * r1) * math.cosh(2 * r2) + math.cos(2 * at - 2 * a) * math.sinh(2 * r1) * math.sinh(
        2 * r2
    )
    inv = wt * wt + w * w + 2.0 * w * wt * bracket
    return _from_gamma(1.0 / inv)


def purity_perturbative(params):
    """Second-order purity 1 - 4|tau|^2 sinc^2(theta4) [...]."""
    tau = params.tau
    a = cmath.phase(tau) if tau != 0 else 0.0
    r1, r2, t4 = params.r1, params.r2, params.theta4
    bracket = math.sinh(r1 - r2) ** 2 + math.cos(t4 - a) ** 2 * math.sinh(2 * r1) * math.sinh(2 * r2)
    return 1.0 - 4.0 * abs(tau) ** 2 * sinc(t4) ** 2 * bracket


# ------------------------------------------------------------------ perturbative spectra

_SERIES_BELOW = 1e-2


def _shifted_remainder(fn, c, x):
    """[fn(c) - fn(c + x) + x fn'(c + x)] / x^2 for fn in {cos, sin}, stable near x = 0.

    Taylor form: sum_{n >= 2} (n - 1) / n! fn^(n)(c) x^(n - 2) with fn^(n)(c) = fn(c + n pi/2).
    """
    if abs(x) >= _SERIES_BELOW:
        d = -math.sin(c + x) if fn is math.cos else math.cos(c + x)
        return (fn(c) - fn(c + x) + x * d) / (x * x)
    total, term = 0.0, 1.0
    for n in range(2, 14):
        term = 1.0 / math.factorial(n) * x ** (n - 2)
        total += (n - 1) * term * fn(c + n * math.pi / 2)
    return total


@dataclass(frozen=True)
class SectorSpectra:
    """Field-1 spectra Cov^{phiphi}_11, Cov^{pipi}_11, Cov^{phipi}_11."""

    phiphi: float
    pipi: float
    phipi: float

    def as_tuple(self):
        return (self.phiphi, self.pipi, self.phipi)


def sector_spectra(blocks):
    return SectorSpectra(float(blocks.phiphi[0, 0]), float(blocks.pipi[0, 0]), float(blocks.phipi[0, 0]))


def spectra_perturbative(params, k):
    """Field-1 spectra expanded to second order in |tau|."""
    t3, t4 = 2.0 * params.theta3, params.theta4
    tau = params.tau
    a = cmath.phase(tau) if tau != 0 else 0.0
    tau2 = abs(tau) ** 2
    r1, r2 = params.r1, params.r2
    ch1, ch2 = math.cosh(2 * r1), math.cosh(2 * r2)
    sh1, sh2 = math.sinh(2 * r1), math.sinh(2 * r2)
    w = sinc(t4) ** 2
    c0 = math.cos(t3 + 2 * t4)
    s0 = math.sin(t3 + 2 * t4)
    # (cos 2t3 - cos(2t3 + 2t4) - 2t4 sin(2t3 + 2t4)) / (2 t4^2) and its sine partner
    cos_rem = 2.0 * _shifted_remainder(math.cos, t3, 2 * t4)
    sin_rem = -2.0 * _shifted_remainder(math.sin, t3, 2 * t4)
    phiphi = (ch1 + c0 * sh1 + tau2 * (-w * ch1 + cos_rem * sh1 + w * (ch2 - math.cos(t3 + 2 * a) * sh2))) / (
        2 * k
    )
    pipi = k / 2 * (ch1 - c0 * sh1 + tau2 * (-w * ch1 - cos_rem * sh1 + w * (ch2 + math.cos(t3 + 2 * a) * sh2)))
    phipi = 0.5 * (-s0 * sh1 + tau2 * (w * math.sin(t3 + 2 * a) * sh2 + sin_rem * sh1))
    return SectorSpectra(phiphi, pipi, phipi)
