"""Reduced state of field 1 after tracing out field 2.

Fock route: coefficients Xi(n, n', s, t) weight |n+s, n+t><n'+s, n'+t| in the
reduced matrix.  For fixed (s, t)

    Xi(n, n', s, t) = sum_m c(n, m, s, t) conj(Psi(n'+s, n'+t, m-s, m-t))

where ``c`` is a single term of the closed form and ``Psi`` the physical ket
amplitude (the sum over the family of terms landing on the same ket), so
summing Xi over a family gives the reduced-matrix element.  States are
truncated at n + m <= cutoff; the discarded probability is the geometric
tail of :func:`foursqueeze.fock.tail_bound`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import fock, gaussian
from .errors import DomainError


def _rigorous_purity_error(deficit):
    """|Tr rho^2 - Tr sigma^2| <= 2 ||rho - sigma||_1 <= 2 (2 sqrt(d) + d) for a dropped norm d."""
    d = max(0.0, deficit)
    return 2.0 * (2.0 * math.sqrt(d) + d)


@dataclass
class ReducedDensity:
    """Dense reduced matrix in the basis |A, B> (A on k, B on -k), index A * (L+1) + B."""

    cutoff: int
    matrix: np.ndarray

    def element(self, a, b, a2, b2):
        d = self.cutoff + 1
        return self.matrix[a * d + b, a2 * d + b2]

    def trace(self):
        return float(np.trace(self.matrix).real)

    def purity(self):
        return float(np.sum(np.abs(self.matrix) ** 2))

    def hermiticity_residual(self):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


@dataclass
class XiBlock:
    n0: int
    n_prime0: int
    values: np.ndarray  # values[n - n0, n' - n_prime0]


@dataclass
class XiTable:
    cutoff: int
    blocks: dict
    deficit: float
    tail: float
    params: object = field(repr=False, default=None)

    def value(self, n, n_prime, s, t):
        blk = self.blocks.get((s, t))
        if blk is None:
            return 0j
        i, j = n - blk.n0, n_prime - blk.n_prime0
        if 0 <= i < blk.values.shape[0] and 0 <= j < blk.values.shape[1]:
            return complex(blk.values[i, j])
        return 0j

    def entries(self):
        for (s, t), blk in self.blocks.items():
            for i, j in zip(*np.nonzero(blk.values)):
                yield (blk.n0 + int(i), blk.n_prime0 + int(j), s, t), complex(blk.values[i, j])

    def reduced(self):
        """Aggregate Xi over families into the dense reduced matrix."""
        L = self.cutoff
        d = L + 1
        rho = np.zeros((d * d, d * d), dtype=complex)
        for (s, t), blk in self.blocks.items():
            rows, cols = blk.values.shape
            n = blk.n0 + np.arange(rows)[:, None]
            n2 = blk.n_prime0 + np.arange(cols)[None, :]
            a, b, a2, b2 = n + s, n + t, n2 + s, n2 + t
            ok = (a >= 0) & (a <= L) & (b >= 0) & (b <= L) & (a2 >= 0) & (a2 <= L) & (b2 >= 0) & (b2 <= L)
            ok = np.broadcast_to(ok, blk.values.shape)
            r = np.broadcast_to(a * d + b, blk.values.shape)[ok]
            c = np.broadcast_to(a2 * d + b2, blk.values.shape)[ok]
            np.add.at(rho, (r, c), blk.values[ok])
        return ReducedDensity(L, rho)

    def isotropy_residual(self):
        worst = 0.0
        for (s, t), blk in self.blocks.items():
            other = self.blocks.get((t, s))
            if other is None:
                worst = max(worst, float(np.max(np.abs(blk.values), initial=0.0)))
            else:
                worst = max(worst, float(np.max(np.abs(blk.values - other.values), initial=0.0)))
        return worst


def _check_xi_indices(n, n_prime, s, t, cutoff):
    for name, v in (("n", n), ("n'", n_prime), ("s", s), ("t", t)):
        if int(v) != v:
            raise DomainError(f"{name} must be an integer")
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}")
    lo = -min(n, n_prime)
    if s < lo or t < lo:
        raise DomainError(f"need s, t >= -min(n, n') = {lo}, got s={s}, t={t}")
    if cutoff < max(0, s, t):
        raise DomainError(f"cutoff must be at least max(0, s, t) = {max(0, s, t)}")


@dataclass(frozen=True)
class XiValue:
    value: complex
    tail: float


def xi(params, n, n_prime, s, t, cutoff):
    """Single Xi coefficient from the (n + m <= cutoff) truncated state."""
    _check_xi_indices(n, n_prime, s, t, cutoff)
    total = 0j
    for m in range(max(0, s, t), cutoff - n + 1):
        if n_prime + m > cutoff:
            break
        total += fock.amplitude(params, n, m, s, t) * np.conj(
            fock.fock_amplitude(params, n_prime + s, n_prime + t, m - s, m - t)
        )
    return XiValue(complex(total), _rigorous_purity_error(fock.tail_bound(params, cutoff)))


def reduced_density(params, cutoff):
    """All Xi coefficients of the state truncated at n + m <= cutoff."""
    L = int(cutoff)
    table = fock.state_table(params, L, truncation="total")
    psi = table.ket_array()
    idx, vals = table.index, table.values
    order = np.lexsort((idx[:, 1], idx[:, 0], idx[:, 3], idx[:, 2]))
    idx, vals = idx[order], vals[order]
    st = idx[:, 2:4]
    change = np.nonzero(np.any(np.diff(st, axis=0) != 0, axis=1))[0] + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [len(idx)]])
    blocks = {}
    for lo, hi in zip(starts, ends):
        s, t = int(st[lo, 0]), int(st[lo, 1])
        n_arr, m_arr = idx[lo:hi, 0], idx[lo:hi, 1]
        n0, m0 = int(n_arr.min()), max(0, s, t)
        n1, m1 = int(n_arr.max()), int(m_arr.max())
        cmat = np.zeros((n1 - n0 + 1, m1 - m0 + 1), dtype=complex)
        cmat[n_arr - n0, m_arr - m0] = vals[lo:hi]
        np0 = max(-s, -t)
        np1 = min(L - max(s, t), L - m0)
        if np1 < np0:
            continue
        n2 = np.arange(np0, np1 + 1)[:, None]
        m = np.arange(m0, m1 + 1)[None, :]
        a, b, c, d = n2 + s, n2 + t, m - s, m - t
        ok = (a >= 0) & (a <= L) & (b >= 0) & (b <= L) & (c >= 0) & (c <= L) & (d >= 0) & (d <= L)
        pmat = np.zeros(ok.shape, dtype=complex)
        pmat[ok] = np.conj(psi[a[ok.nonzero()[0], 0], b[ok.nonzero()[0], 0],
                               np.broadcast_to(c, ok.shape)[ok], np.broadcast_to(d, ok.shape)[ok]])
        blocks[(s, t)] = XiBlock(n0, np0, cmat @ pmat.T)
    deficit = table.tail_bound
    return XiTable(L, blocks, deficit, _rigorous_purity_error(deficit), params)


@dataclass(frozen=True)
class PurityEstimate:
    value: float
    tail: float
    cutoff: int


def _contract(table):
    """sum Xi(n, n', s, t) Xi(n' - u, n - u, s + u, t + u) with the u sum taken per reduced-matrix element."""
    rho = table.reduced()
    d = table.cutoff + 1
    total = 0j
    for (s, t), blk in table.blocks.items():
        rows, cols = blk.values.shape
        n = blk.n0 + np.arange(rows)[:, None]
        n2 = blk.n_prime0 + np.arange(cols)[None, :]
        a, b, a2, b2 = n + s, n + t, n2 + s, n2 + t
        L = table.cutoff
        ok = (a >= 0) & (a <= L) & (b >= 0) & (b <= L) & (a2 >= 0) & (a2 <= L) & (b2 >= 0) & (b2 <= L)
        ok = np.broadcast_to(ok, blk.values.shape)
        row = np.broadcast_to(a2 * d + b2, ok.shape)[ok]
        col = np.broadcast_to(a * d + b, ok.shape)[ok]
        total += np.sum(blk.values[ok] * rho.matrix[row, col])
    return total


def purity_fock(params, cutoff):
    """Purity from the Xi contraction, with a rigorous truncation bound."""
    table = reduced_density(params, cutoff)
    return PurityEstimate(float(_contract(table).real), table.tail, int(cutoff))


def purity_fock_quintuple(table):
    """The five-index contraction summed term by term (reference for small cutoffs)."""
    total = 0j
    for (n, n2, s, t), v in table.entries():
        for u in range(-table.cutoff - 1, 2 * table.cutoff + 2):
            total += v * table.value(n2 - u, n - u, s + u, t + u)
    return float(total.real)


def purity_perturbative(params):
    """1 - 4|tau|^2 sinc^2(theta4) [sinh^2(r1 - r2) + cos^2(theta4 - arg tau) sinh 2r1 sinh 2r2]."""
    return gaussian.purity_perturbative(params)


def reduced_density_perturbative(params, cutoff):
    """Second-order reduced matrix built from the two-mode coefficients and transfer weights."""
    L = int(cutoff)
    d = L + 1
    ps = fock.perturbative_state(params, 0, L + 2)
    c1, c2 = ps.c1, ps.c2
    F = lambda n, m: fock.weight_f(params, n, m)
    G = lambda n, m: fock.weight_g(params, n, m)
    t2 = abs(params.tau) ** 2
    cj = np.conj
    rho = np.zeros((d * d, d * d), dtype=complex)

    def add(a, b, a2, b2, v):
        if v != 0 and 0 <= a <= L and 0 <= b <= L and 0 <= a2 <= L and 0 <= b2 <= L:
            rho[a * d + b, a2 * d + b2] += v

    c2x = lambda m: c2[m] if 0 <= m < len(c2) else 0j
    for n in range(d):
        for n2 in range(d):
            base = c1[n] * cj(c1[n2])
            add(n, n, n2, n2, base)
            if t2 == 0:
                continue
            for m in range(d + 1):
                w = t2 * base
                p0 = abs(c2x(m)) ** 2
                up = c2x(m) * cj(c2x(m + 1))
                dn = c2x(m) * cj(c2x(m - 1))
                v = w * p0 * F(n, m + 1) * cj(F(n2, m + 1))
                add(n - 1, n, n2 - 1, n2, v)
                add(n, n - 1, n2, n2 - 1, v)
                v = w * p0 * cj(F(n + 1, m)) * F(n2 + 1, m)
                add(n + 1, n, n2 + 1, n2, v)
                add(n, n + 1, n2, n2 + 1, v)
                v = -w * up * F(n, m + 1) * F(n2 + 1, m + 1)
                add(n - 1, n, n2, n2 + 1, v)
                add(n, n - 1, n2 + 1, n2, v)
                v = -w * dn * cj(F(n + 1, m)) * cj(F(n2, m))
                add(n + 1, n, n2, n2 - 1, v)
                add(n, n + 1, n2 - 1, n2, v)
                add(n, n, n2 - 1, n2 - 1, w * dn * cj(F(n2, m)) ** 2)
                add(n - 1, n - 1, n2, n2, w * up * F(n, m + 1) ** 2)
                add(n, n, n2 + 1, n2 + 1, w * up * F(n2 + 1, m + 1) ** 2)
                add(n + 1, n + 1, n2, n2, w * dn * cj(F(n + 1, m)) ** 2)
                add(n, n, n2, n2, w * p0 * (cj(G(n2, m)) + G(n, m)))
    return ReducedDensity(L, rho)


# ------------------------------------------------------------------ sweep

@dataclass(frozen=True)
class SweepRow:
    tau: float
    r: float
    gamma: float
    gamma_pert: float
    distortion: float
    flag: bool


SWEEP_COLUMNS = ("tau", "r", "gamma_gaussian", "gamma_pert", "distortion", "flag")


def spectra_distortion(params, k=1.0):
    """max over the three field-1 spectra of |change| / |reference| relative to tau = 0."""
    ref = gaussian.sector_spectra(gaussian.covariance_from_params(params.with_tau(0), k))
    cur = gaussian.sector_spectra(gaussian.covariance_from_params(params, k))
    worst = 0.0
    for a, b in zip(ref.as_tuple(), cur.as_tuple()):
        if a == 0:
            if b != 0:
                worst = math.inf
            continue
        worst = max(worst, abs(b - a) / abs(a))
    return worst


def decoherence_sweep(base, tau_values, r_values, gamma_max=0.5, distortion_max=0.05, k=1.0):
    """Purity and spectra distortion over |tau| x r with r1 = r2 = r.

    The phase of tau is taken from ``base`` (zero if base has tau = 0).  A
    point is flagged when gamma < ``gamma_max`` and distortion < ``distortion_max``.
    """
    arg = cmath.phase(base.tau) if base.tau != 0 else 0.0
    rows = []
    for r in r_values:
        for t in tau_values:
            p = base.__class__.from_squeezing(
                r, r, theta3=base.theta3, theta4=base.theta4, phi3=base.phi3,
                phi4=base.phi4, phi5=base.phi5, phi6=base.phi6,
            ).with_tau(t * cmath.exp(1j * arg))
            gam = gaussian.purity_params(p).gamma
            dist = spectra_distortion(p, k)
            rows.append(SweepRow(float(t), float(r), gam, purity_perturbative(p), dist,
                                 bool(gam < gamma_max and dist < distortion_max)))
    return rows


__all__ = [
    "ReducedDensity",
    "XiTable",
    "XiValue",
    "PurityEstimate",
    "xi",
    "reduced_density",
    "purity_fock",
    "purity_fock_quintuple",
    "purity_perturbative",
    "reduced_density_perturbative",
    "spectra_distortion",
    "decoherence_sweep",
    "SweepRow",
    "SWEEP_COLUMNS",
]
