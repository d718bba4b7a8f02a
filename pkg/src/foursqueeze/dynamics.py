"""Quadratic Hamiltonian kernels and Green-matrix integration.

Conventions: the helicity vector is (a_1k, a_2k, a^dag_1-k, a^dag_2-k) and
the helicity Green matrix obeys dG_h/dt = J H G_h with J = -i diag(1, 1, -1, -1).
In the field basis z = (phi_1, phi_2, pi_1, pi_2) the same flow reads
dG/dt = (Omega H_field) G with G = D^-1 U^dag G_h U D.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import astuple, dataclass, field, fields
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from . import bogolyubov
from .errors import DomainError, IntegrationError
from .symplectic import (
    J_HEL,
    OMEGA,
    U_HEL,
    anchor,
    d_matrix,
    decompose_bloch_messiah,
    generator,
    symplectic_residual,
)

log = logging.getLogger(__name__)

PROJECTION_SERIES_BELOW = 1e-3


@dataclass(frozen=True)
class HamiltonianParams:
    F1: float = 0.0
    F2: float = 0.0
    F12: float = 0.0
    R1: float = 0.0
    R2: float = 0.0
    R12: float = 0.0
    phi: float = 0.0
    Theta1: float = 0.0
    Theta2: float = 0.0
    xi: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = float(getattr(self, f.name))
            object.__setattr__(self, f.name, v)

    def is_finite(self):
        return all(math.isfinite(v) for v in astuple(self))

    def as_array(self):
        return np.array(astuple(self))

    @classmethod
    def from_array(cls, values):
        return cls(*[float(v) for v in values])


HAMILTONIAN_NAMES = tuple(f.name for f in fields(HamiltonianParams))


def kernel_matrix(p):
    """Helicity kernel [[a, b], [b*, a*]] with a Hermitian and b symmetric."""
    e = np.exp
    a = np.array([[p.F1, p.F12 * e(1j * p.phi)], [p.F12 * e(-1j * p.phi), p.F2]])
    b = np.array(
        [
            [p.R1 * e(1j * p.Theta1), p.R12 * e(1j * p.xi)],
            [p.R12 * e(1j * p.xi), p.R2 * e(1j * p.Theta2)],
        ]
    )
    return np.block([[a, b], [b.conj(), a.conj()]])


def algebra_coordinates(x):
    """Real least-squares coordinates of a helicity matrix on L_1..L_10, with the residual."""
    basis = np.stack([generator(i, basis="helicity").ravel() for i in range(1, 11)], axis=1)
    # stack real and imaginary parts so the fit is over real coefficients
    a = np.vstack([basis.real, basis.imag])
    y = np.concatenate([np.ravel(x).real, np.ravel(x).imag])
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = float(np.max(np.abs(a @ coef - y)))
    return coef, resid


def field_generator(p, k):
    """Real 4x4 matrix A with dG/dt = A G in the field basis."""
    d = d_matrix(k)
    di = np.linalg.inv(d)
    a = di @ U_HEL.conj().T @ (J_HEL @ kernel_matrix(p)) @ U_HEL @ d
    return a.real


def field_hamiltonian(p, k):
    """Symmetric H_field with A = Omega H_field."""
    return -OMEGA @ field_generator(p, k)


# ------------------------------------------------------------------ cosmology

@dataclass(frozen=True)
class ScaleFactor:
    """a(eta) with its first and second conformal-time derivatives."""

    kind: str
    a: object
    da: object
    dda: object
    description: dict = field(default_factory=dict)

    def __call__(self, eta):
        return self.a(eta)


def de_sitter(hubble=1.0):
    """a = -1 / (H eta) for eta < 0."""
    h = float(hubble)
    if not h > 0:
        raise DomainError("Hubble rate must be positive")
    return ScaleFactor(
        "de_sitter",
        lambda eta: -1.0 / (h * eta),
        lambda eta: 1.0 / (h * eta ** 2),
        lambda eta: -2.0 / (h * eta ** 3),
        {"type": "de_sitter", "H": h},
    )


def power_law(a0=1.0, eta0=1.0, exponent=1.0):
    """a = a0 (eta / eta0)^p, defined where eta / eta0 > 0."""
    a0, eta0, p = float(a0), float(eta0), float(exponent)

    def a(eta):
        return a0 * (eta / eta0) ** p

    return ScaleFactor(
        "power_law",
        a,
        lambda eta: p * a(eta) / eta,
        lambda eta: p * (p - 1.0) * a(eta) / eta ** 2,
        {"type": "power_law", "a0": a0, "eta0": eta0, "exponent": p},
    )


def tabulated(eta, a):
    """Cubic-spline interpolation of sampled (eta, a) pairs."""
    eta = np.asarray(eta, dtype=float)
    a = np.asarray(a, dtype=float)
    if eta.ndim != 1 or eta.size < 4 or eta.shape != a.shape:
        raise DomainError("scale-factor table needs at least four (eta, a) rows")
    order = np.argsort(eta)
    spline = CubicSpline(eta[order], a[order])
    d1, d2 = spline.derivative(1), spline.derivative(2)
    return ScaleFactor(
        "table",
        lambda x: float(spline(x)),
        lambda x: float(d1(x)),
        lambda x: float(d2(x)),
        {"type": "table", "rows": int(eta.size)},
    )


@dataclass(frozen=True)
class CosmologyModel:
    zeta: float
    lam: float
    scale_factor: ScaleFactor
    k: float

    def ricci(self, eta):
        a = self.scale_factor.a(eta)
        return 6.0 * self.scale_factor.dda(eta) / a ** 3


def cosmology_kernel(model, eta):
    """Kernel of two scalar fields with conformal coupling zeta and direct coupling lambda."""
    sf = model.scale_factor
    a = sf.a(eta)
    if not a > 0:
        raise DomainError(f"scale factor must be positive, got a({eta}) = {a}")
    k = model.k
    if not k > 0:
        raise DomainError("wavenumber must be positive")
    dda = sf.dda(eta)
    kr = 0.5 * a * a * model.zeta * (6.0 * dda / a ** 3) - dda / (2.0 * a)
    r = kr / k
    f = (k * k + kr) / k
    c = model.lam ** 2 * a * a / (2.0 * k)
    return HamiltonianParams(F1=f, F2=f, F12=c, R1=r, R2=r, R12=c)


class TableKernel:
    """Kernel source with piecewise-linear interpolation in time."""

    def __init__(self, times, rows):
        self.times = np.asarray(times, dtype=float)
        self.rows = np.asarray(rows, dtype=float)
        if self.rows.shape != (self.times.size, len(HAMILTONIAN_NAMES)):
            raise DomainError("kernel table must have one row of ten parameters per time")
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("kernel table times must be strictly increasing")

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            reader = csv.DictReader(row for row in fh if not row.startswith("#"))
            missing = {"t", *HAMILTONIAN_NAMES} - set(reader.fieldnames or ())
            if missing:
                raise DomainError(f"kernel table is missing columns {sorted(missing)}")
            data = [[float(r["t"])] + [float(r[n]) for n in HAMILTONIAN_NAMES] for r in reader]
        arr = np.array(data)
        return cls(arr[:, 0], arr[:, 1:])

    def __call__(self, t):
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise DomainError(f"time {t} outside the kernel table")
        vals = [np.interp(t, self.times, self.rows[:, j]) for j in range(self.rows.shape[1])]
        return HamiltonianParams.from_array(vals)


# ------------------------------------------------------------------ integration

def symplectic_projection(m):
    """Nearest-symplectic correction M E^{-1/2} with E = Omega^-1 M^T Omega M."""
    e = -OMEGA @ m.T @ OMEGA @ m
    dev = e - np.eye(4)
    if np.max(np.abs(dev)) < PROJECTION_SERIES_BELOW:
        inv_sqrt = np.eye(4) - 0.5 * dev + 0.375 * dev @ dev - 0.3125 * dev @ dev @ dev
    else:
        w, v = np.linalg.eig(e)
        inv_sqrt = (v @ np.diag(w ** -0.5) @ np.linalg.inv(v)).real
    return m @ inv_sqrt


@dataclass
class GreenTrajectory:
    times: np.ndarray
    matrices: np.ndarray
    k: float
    max_drift: float = 0.0

    @cached_property
    def helicity(self):
        d = d_matrix(self.k)
        di = np.linalg.inv(d)
        return np.einsum("ij,njk,kl->nil", U_HEL @ d, self.matrices, di @ U_HEL.conj().T)

    @cached_property
    def params(self):
        out, prev = [], None
        for i, t in enumerate(self.times):
            try:
                p = decompose_bloch_messiah(self.helicity[i], basis="helicity")
            except (ArithmeticError, ValueError) as exc:
                raise type(exc)(f"at t = {t}: {exc}") from exc
            prev = anchor(p, prev)
            out.append(prev)
        return out

    def index_of(self, t, tol=1e-9):
        i = int(np.argmin(np.abs(self.times - t)))
        span = max(1.0, abs(self.times[-1] - self.times[0]))
        if abs(self.times[i] - t) > tol * span:
            raise DomainError(f"time {t} is not on the stored grid")
        return i

    def bogolyubov(self, i):
        return bogolyubov.from_matrix(self.helicity[i])

    def symplectic_error(self):
        return max(symplectic_residual(m) for m in self.matrices)


def _kernel_at(kernel, t, k):
    try:
        p = kernel(t)
    except DomainError:
        raise
    except Exception as exc:  # a user-supplied source failing is an integration error
        raise IntegrationError(f"kernel evaluation failed: {exc}", time=t) from exc
    if not p.is_finite():
        raise IntegrationError("non-finite kernel value", time=t)
    return field_generator(p, k)


def evolve_green(kernel, t_in, t_end, steps, k=1.0, project=True):
    """Integrate dG/dt = A(t) G from G(t_in) = I with fixed-step RK4.

    ``kernel(t)`` returns :class:`HamiltonianParams`.  After every step the
    matrix is mapped to the nearest symplectic one; the largest pre-correction
    residual is kept in ``max_drift``.
    """
    if steps < 1:
        raise DomainError("steps must be at least 1")
    if not t_end > t_in:
        raise DomainError("t_end must exceed t_in")
    h = (t_end - t_in) / steps
    times = t_in + h * np.arange(steps + 1)
    mats = np.empty((steps + 1, 4, 4))
    g = np.eye(4)
    mats[0] = g
    drift = 0.0
    a_next = _kernel_at(kernel, times[0], k)
    for n in range(steps):
        t = times[n]
        a1 = a_next
        a2 = _kernel_at(kernel, t + 0.5 * h, k)
        a_next = _kernel_at(kernel, times[n + 1], k)
        with np.errstate(over="ignore", invalid="ignore"):  # caught by the finiteness check
            k1 = a1 @ g
            k2 = a2 @ (g + 0.5 * h * k1)
            k3 = a2 @ (g + 0.5 * h * k2)
            k4 = a_next @ (g + h * k3)
            g = g + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(g)):
            raise IntegrationError("non-finite Green matrix", time=times[n + 1])
        res = symplectic_residual(g)
        drift = max(drift, res)
        if project:
            g = symplectic_projection(g)
        mats[n + 1] = g
    if drift > 0:
        log.debug("largest uncorrected symplectic residual %.3e", drift)
    return GreenTrajectory(times, mats, float(k), drift)


def extract_params(traj, t):
    """Continuity-anchored Bloch-Messiah parameters at grid time ``t``."""
    return traj.params[traj.index_of(t)]
