"""Bogolyubov coefficients of helicity-basis transfer matrices.

A helicity-symplectic matrix has the block layout ``[[A, B], [B*, A*]]`` with
``A = [[alpha11, alpha12], [alpha21, alpha22]]`` and ``B`` built from the betas.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .errors import ValidationError
from .symplectic import J_HEL, sinc

CONSTRAINT_TOL = 1e-10

COEFFICIENT_NAMES = ("alpha11", "alpha12", "alpha21", "alpha22", "beta11", "beta12", "beta21", "beta22")
CSV_COLUMNS = tuple(f"{part}_{name}" for name in COEFFICIENT_NAMES for part in ("re", "im")) + (
    "res_ct1",
    "res_ct2",
    "res_ct3",
    "res_ct4",
)


@dataclass(frozen=True)
class BogolyubovSet:
    alpha11: complex = 1.0
    alpha12: complex = 0.0
    alpha21: complex = 0.0
    alpha22: complex = 1.0
    beta11: complex = 0.0
    beta12: complex = 0.0
    beta21: complex = 0.0
    beta22: complex = 0.0

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, complex(getattr(self, f.name)))

    @property
    def a_block(self):
        return np.array([[self.alpha11, self.alpha12], [self.alpha21, self.alpha22]])

    @property
    def b_block(self):
        return np.array([[self.beta11, self.beta12], [self.beta21, self.beta22]])

    def as_tuple(self):
        return astuple(self)

    def csv_row(self):
        """16 real columns (re, im per coefficient) and the four residuals."""
        row = []
        for c in self.as_tuple():
            row += [c.real, c.imag]
        return row + list(constraint_residuals(self))


def _angle_terms(x3, x4, x5, x6):
    th = math.sqrt(x4 * x4 + x5 * x5 + x6 * x6)
    sc = sinc(th)
    c_minus = complex(math.cos(th), -x4 * sc)
    c_plus = c_minus.conjugate()
    t_minus = complex(x5, -x6) * sc
    t_plus = t_minus.conjugate()
    return c_minus, c_plus, t_minus, t_plus


def from_params(params):
    """Eight coefficients of U R(theta) Z(d) R(phi) U^dag in closed form."""
    p = params
    ctm, ctp, ttm, ttp = _angle_terms(p.theta3, p.theta4, p.theta5, p.theta6)
    cpm, cpp, tpm, tpp = _angle_terms(p.phi3, p.phi4, p.phi5, p.phi6)
    ch1, ch2 = math.cosh(p.r1), math.cosh(p.r2)
    sh1, sh2 = math.sinh(p.r1), math.sinh(p.r2)
    e = cmath.exp(-1j * (p.theta3 + p.phi3))
    ep = cmath.exp(-1j * (p.theta3 - p.phi3))
    return BogolyubovSet(
        alpha11=e * (ctm * cpm * ch1 - ttm * tpp * ch2),
        alpha12=e * (ctm * tpm * ch1 + ttm * cpp * ch2),
        alpha21=e * (-ttp * cpm * ch1 - ctp * tpp * ch2),
        alpha22=e * (-ttp * tpm * ch1 + ctp * cpp * ch2),
        beta11=ep * (ctm * cpp * sh1 - ttm * tpm * sh2),
        beta12=ep * (ctm * tpp * sh1 + ttm * cpm * sh2),
        beta21=ep * (-ttp * cpp * sh1 - ctp * tpm * sh2),
        beta22=ep * (-ttp * tpp * sh1 + ctp * cpm * sh2),
    )


def from_matrix(mh):
    """Read the coefficients off the upper blocks of a helicity matrix."""
    a = mh[:2, :2]
    b = mh[:2, 2:]
    return BogolyubovSet(a[0, 0], a[0, 1], a[1, 0], a[1, 1], b[0, 0], b[0, 1], b[1, 0], b[1, 1])


def constraint_residuals(b):
    """Residuals of A A^dag - B B^dag = I and A B^T - B A^T = 0.

    The first two are signed reals, the last two are moduli.
    """
    a11, a12, a21, a22, b11, b12, b21, b22 = b.as_tuple()
    ct1 = abs(a11) ** 2 + abs(a12) ** 2 - abs(b11) ** 2 - abs(b12) ** 2 - 1.0
    ct2 = abs(a21) ** 2 + abs(a22) ** 2 - abs(b21) ** 2 - abs(b22) ** 2 - 1.0
    ct3 = a11 * a21.conjugate() + a12 * a22.conjugate() - b11 * b21.conjugate() - b12 * b22.conjugate()
    ct4 = a11 * b21 + a12 * b22 - a21 * b11 - a22 * b12
    return ct1, ct2, abs(ct3), abs(ct4)


def is_valid(b, tol=CONSTRAINT_TOL):
    scale = max(1.0, max(abs(c) for c in b.as_tuple())) ** 2
    return max(abs(r) for r in constraint_residuals(b)) <= tol * scale


def assemble_matrix(b, tol=CONSTRAINT_TOL):
    """Helicity matrix [[A, B], [B*, A*]]; raises if the constraints fail."""
    if not is_valid(b, tol):
        raise ValidationError(f"Bogolyubov constraints violated: residuals {constraint_residuals(b)}")
    a_blk, b_blk = b.a_block, b.b_block
    return np.block([[a_blk, b_blk], [b_blk.conj(), a_blk.conj()]])


def helicity_constraint(mh):
    """max |M^dag J M - J|."""
    return float(np.max(np.abs(mh.conj().T @ J_HEL @ mh - J_HEL)))
