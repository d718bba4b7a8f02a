"""Closed-form Fock amplitudes of the evolved four-mode vacuum.

The state is expanded as a sum over pair-creation indices (n, m) and transfer
indices (s, t) of terms ``c(n, m, s, t) |n+s, n+t, m-s, m-t>`` with modes
ordered (1k, 1-k, 2k, 2-k).  Different index tuples can land on the same
occupation ket: ``|A, B, C, D>`` (with ``A + C = B + D``) collects every
``n = 0 .. A + C`` with ``m = A + C - n``, ``s = A - n``, ``t = B - n``.
:func:`fock_amplitude` returns that physical sum, :func:`amplitude` a single
term.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, hyp2f1

from .errors import DomainError, ResourceError
from .symplectic import sinc

MAX_TABLE_ENTRIES = 5_000_000


def _log_abs(z):
    a = abs(z)
    return math.log(a) if a > 0 else -math.inf


def _angle(z):
    return cmath.phase(z) if z != 0 else 0.0


@dataclass(frozen=True)
class _Coefficients:
    """Parameter-dependent scalars entering every amplitude."""

    theta3: float
    phi3: float
    log_cosh: float
    log_tanh1: float
    sign_tanh1: float
    log_tanh2: float
    sign_tanh2: float
    p_z: complex
    log_u: float  # u = p_- e^{-p_z}
    arg_u: float
    log_p: float  # p_+
    arg_p: float
    x: complex  # p_- p_+ e^{-p_z}

    @classmethod
    def of(cls, params):
        mix = params.mixing()
        r1, r2 = params.r1, params.r2
        t1, t2 = math.tanh(r1), math.tanh(r2)
        u = mix.p_minus * cmath.exp(-mix.p_z)
        return cls(
            theta3=params.theta3,
            phi3=params.phi3,
            log_cosh=-(math.log(math.cosh(r1)) + math.log(math.cosh(r2))),
            log_tanh1=_log_abs(t1),
            sign_tanh1=-1.0 if t1 < 0 else 1.0,
            log_tanh2=_log_abs(t2),
            sign_tanh2=-1.0 if t2 < 0 else 1.0,
            p_z=mix.p_z,
            log_u=_log_abs(u),
            arg_u=_angle(u),
            log_p=_log_abs(mix.p_plus),
            arg_p=_angle(mix.p_plus),
            x=u * mix.p_plus,
        )


def _xlogy(k, logz):
    """k * log|z| with 0 * log 0 = 0."""
    k = np.asarray(k, dtype=float)
    with np.errstate(invalid="ignore"):
        out = k * logz
    return np.where(k == 0, 0.0, out)


def _check_indices(n, m, s, t):
    for name, v in (("n", n), ("m", m), ("s", s), ("t", t)):
        if int(v) != v:
            raise DomainError(f"{name} must be an integer, got {v!r}")
    if n < 0 or m < 0:
        raise DomainError(f"n and m must be non-negative, got n={n}, m={m}")
    if not (-n <= s <= m and -n <= t <= m):
        raise DomainError(f"need -n <= s, t <= m, got n={n}, m={m}, s={s}, t={t}")


def _prefactor_log(co, n, m, s, t):
    """(log modulus, phase) of everything outside the two i/j sums, including (i p+)^{-s-t}
    moved inside the sums."""
    log_mod = (
        co.log_cosh
        + _xlogy(n, co.log_tanh1)
        + _xlogy(m, co.log_tanh2)
        + co.p_z.real * (m - n)
        + gammaln(m + 1) - gammaln(n + 1)
        + 0.5 * (gammaln(m - s + 1) + gammaln(m - t + 1) - gammaln(n + s + 1) - gammaln(n + t + 1))
    )
    phase = -2.0 * (co.theta3 * (n + m + 1) + co.phi3) + co.p_z.imag * (m - n)
    sign = np.ones_like(np.asarray(n, dtype=float))
    if co.sign_tanh1 < 0:
        sign = sign * (-1.0) ** n
    if co.sign_tanh2 < 0:
        sign = sign * (-1.0) ** m
    return log_mod, phase, sign


def _inner_sum(co, n, m, s):
    """sum_i x^i (i p+)^{-s} (n+i)! / (i! (i-s)! (m-i)!) with non-negative powers only.

    Returned as (log scale, complex mantissa).
    """
    i = np.arange(max(0, s), m + 1)
    if i.size == 0:
        return -math.inf, 0.0
    log_t = (
        _xlogy(i, co.log_u)
        + _xlogy(i - s, co.log_p)
        + gammaln(n + i + 1) - gammaln(i + 1) - gammaln(i - s + 1) - gammaln(m - i + 1)
    )
    ph = i * co.arg_u + (i - s) * co.arg_p - s * (math.pi / 2)
    top = np.max(log_t)
    if not np.isfinite(top):
        return -math.inf, 0.0
    mant = np.sum(np.exp(log_t - top + 1j * ph))
    return float(top), complex(mant)


def amplitude(params, n, m, s, t):
    """Single term c(n, m, s, t) of the evolved-vacuum expansion."""
    _check_indices(n, m, s, t)
    return _amplitude(_Coefficients.of(params), int(n), int(m), int(s), int(t))


def _amplitude(co, n, m, s, t):
    log_mod, phase, sign = _prefactor_log(co, n, m, s, t)
    ls, ms = _inner_sum(co, n, m, s)
    lt, mt = _inner_sum(co, n, m, t)
    total = log_mod + ls + lt
    if not np.isfinite(total) or ms == 0 or mt == 0:
        return 0j
    return complex(sign * math.exp(total) * cmath.exp(1j * phase) * ms * mt)


def amplitude_hypergeometric(params, n, m, s, t):
    """Same term through the terminating 2F1 resummation (scipy's hyp2f1)."""
    _check_indices(n, m, s, t)
    co = _Coefficients.of(params)
    z = -co.x
    if abs(z.imag) > 1e-12 * max(1.0, abs(z)):
        raise DomainError("resummation argument is expected to be real")
    z = z.real
    log_mod, phase, sign = _prefactor_log(co, n, m, s, t)
    value = sign * math.exp(log_mod) * cmath.exp(1j * phase)
    for q in (s, t):
        q0 = max(0, q)
        # x^{q0} (i p+)^{-q} regrouped as u^{q0} p+^{q0 - q} i^{-q}
        lead = (
            cmath.exp(1j * (q0 * co.arg_u + (q0 - q) * co.arg_p - q * math.pi / 2))
            * math.exp(_xlogy(q0, co.log_u) + _xlogy(q0 - q, co.log_p))
        )
        ratio = math.exp(gammaln(n + q0 + 1) - gammaln(m - q0 + 1) - gammaln(q0 + 1) - gammaln(q0 - q + 1))
        f = hyp2f1(-(m - q0), 1 + n + q0, 1 + abs(q), z) if m >= q0 else 0.0
        value *= lead * ratio * f
    return complex(value)


def fock_amplitude(params, a, b, c, d):
    """Amplitude <a, b, c, d | evolved vacuum>, summed over its (n, m, s, t) family."""
    for v in (a, b, c, d):
        if v < 0 or int(v) != v:
            raise DomainError("occupation numbers must be non-negative integers")
    if a + c != b + d:
        return 0j
    co = _Coefficients.of(params)
    tot = a + c
    return sum(_amplitude(co, n, tot - n, a - n, b - n) for n in range(tot + 1))


def two_mode_coefficient(sector, params, n):
    """e^{-2in(theta3 +- theta4)} tanh^n(r_i) / cosh(r_i) for sector i.

    The sign follows from exp[r (a^dag a^dag - a a)] acting on the vacuum.
    """
    if sector not in (1, 2):
        raise DomainError("sector must be 1 or 2")
    if n < 0:
        raise DomainError("n must be non-negative")
    r = params.r1 if sector == 1 else params.r2
    sgn = 1.0 if sector == 1 else -1.0
    ph = cmath.exp(-2j * n * (params.theta3 + sgn * params.theta4))
    return ph * math.tanh(r) ** n / math.cosh(r)


# ------------------------------------------------------------------- tables

def _family_indices(cutoff):
    """All (n, m, s, t) whose four occupation labels lie in 0..cutoff."""
    L = cutoff
    rows = []
    for a in range(L + 1):
        for c in range(L + 1):
            tot = a + c
            for b in range(max(0, tot - L), min(L, tot) + 1):
                for n in range(tot + 1):
                    rows.append((n, tot - n, a - n, b - n))
    return np.array(rows, dtype=np.int64).reshape(-1, 4)


def _family_indices_total(cutoff):
    """All (n, m, s, t) with n + m <= cutoff; every occupation label is then <= cutoff."""
    rows = []
    for tot in range(cutoff + 1):
        n = np.arange(tot + 1)
        a, b = np.meshgrid(np.arange(tot + 1), np.arange(tot + 1), indexing="ij")
        a, b = a.ravel(), b.ravel()
        nn = np.repeat(n[None, :], a.size, axis=0).ravel()
        aa = np.repeat(a, tot + 1)
        bb = np.repeat(b, tot + 1)
        rows.append(np.stack([nn, tot - nn, aa - nn, bb - nn], axis=1))
    return np.concatenate(rows).astype(np.int64)


def tail_bound(params, cutoff):
    """Upper bound on the probability of any occupation label exceeding ``cutoff``.

    The total pair number per sector of the squeezed input is geometric with
    ratio tanh^2(r); transfers conserve the totals n_1k + n_2k, so a label above
    L needs n + m > L, bounded by the two geometric tails.
    """
    q1 = math.tanh(abs(params.r1)) ** 2
    q2 = math.tanh(abs(params.r2)) ** 2
    L = cutoff
    if q1 < q2:
        q1, q2 = q2, q1
    if q1 == 0:
        return 0.0
    # P(n + m > L) for independent geometric variables, summed in closed form
    if q1 - q2 <= 1e-7 * q1:
        q = 0.5 * (q1 + q2)
        return float(min(1.0, q ** (L + 1) * (1.0 + (L + 1) * (1.0 - q))))
    tail = ((1 - q2) * q1 ** (L + 2) - (1 - q1) * q2 ** (L + 2)) / (q1 - q2)
    return float(min(1.0, max(0.0, tail)))


def suggest_cutoff(params, target=1e-6, limit=400):
    for L in range(limit + 1):
        if tail_bound(params, L) <= target:
            return L
    return limit


@dataclass
class FockTable:
    """Truncated closed-form expansion of the evolved vacuum.

    ``amplitudes`` maps (n, m, s, t) to c(n, m, s, t); ``kets`` maps occupation
    labels (a, b, c, d) to the physical amplitude.
    """

    cutoff: int
    amplitudes: dict
    kets: dict
    norm_deficit: float
    tail_bound: float
    params: object = field(repr=False, default=None)
    index: np.ndarray = field(repr=False, default=None)
    values: np.ndarray = field(repr=False, default=None)

    def ket_array(self):
        """Dense (L+1)^4 tensor of physical amplitudes."""
        L = self.cutoff
        psi = np.zeros((L + 1,) * 4, dtype=complex)
        for key, v in self.kets.items():
            psi[key] = v
        return psi


def state_table(params, cutoff, truncation="label", max_entries=MAX_TABLE_ENTRIES):
    """All terms inside the truncation, with their ket sums.

    ``truncation="label"`` keeps every term whose four occupation labels are
    <= cutoff; ``"total"`` keeps n + m <= cutoff (the quanta per momentum), for
    which ``tail_bound`` is the exact discarded probability.
    """
    if cutoff < 0:
        raise DomainError("cutoff must be non-negative")
    L = int(cutoff)
    if truncation == "label":
        estimate = (L + 1) ** 3 * (2 * L + 1)
        size = lambda c: (c + 1) ** 3 * (2 * c + 1)
    elif truncation == "total":
        estimate = (L + 1) ** 2 * (L + 2) ** 2 // 4
        size = lambda c: (c + 1) ** 2 * (c + 2) ** 2 // 4
    else:
        raise DomainError(f"unknown truncation {truncation!r}")
    if estimate > max_entries:
        lo = 0
        while size(lo + 1) <= max_entries:
            lo += 1
        raise ResourceError(f"cutoff {L} needs about {estimate} entries", suggested_cutoff=lo)
    idx = _family_indices(L) if truncation == "label" else _family_indices_total(L)
    values = _evaluate_many(params, idx)
    amps = {tuple(int(v) for v in row): complex(c) for row, c in zip(idx.tolist(), values)}
    kets = {}
    for (n, m, s, t), c in amps.items():
        key = (n + s, n + t, m - s, m - t)
        kets[key] = kets.get(key, 0j) + c
    norm = sum(abs(v) ** 2 for v in kets.values())
    return FockTable(L, amps, kets, max(0.0, 1.0 - norm), tail_bound(params, L), params, idx, values)


def _inner_sums(co, n, m, q):
    """Vectorized :func:`_inner_sum` over equal-length integer arrays."""
    n, m, q = (np.asarray(v, dtype=np.int64) for v in (n, m, q))
    if n.size == 0:
        return np.zeros(0), np.zeros(0, dtype=complex)
    i = np.arange(int(m.max()) + 1)[None, :]
    n_, m_, q_ = n[:, None], m[:, None], q[:, None]
    valid = (i >= np.maximum(q_, 0)) & (i <= m_)
    iv = np.where(valid, i, 0)
    ivq = np.where(valid, i - q_, 0)
    log_t = (
        _xlogy(iv, co.log_u)
        + _xlogy(ivq, co.log_p)
        + gammaln(n_ + iv + 1) - gammaln(iv + 1) - gammaln(ivq + 1) - gammaln(np.where(valid, m_ - iv, 0) + 1)
    )
    log_t = np.where(valid, log_t, -np.inf)
    ph = iv * co.arg_u + ivq * co.arg_p - q_ * (math.pi / 2)
    top = np.max(log_t, axis=1)
    finite = np.isfinite(top)
    safe_top = np.where(finite, top, 0.0)
    with np.errstate(invalid="ignore"):
        mant = np.sum(np.where(valid, np.exp(log_t - safe_top[:, None] + 1j * ph), 0), axis=1)
    mant = np.where(finite, mant, 0)
    return np.where(finite, top, -np.inf), mant


def _evaluate_many(params, idx):
    """Vectorized c(n, m, s, t) over rows of ``idx``; inner sums shared per (n, m, q)."""
    co = _Coefficients.of(params)
    out = np.zeros(len(idx), dtype=complex)
    if len(idx) == 0:
        return out
    n, m, s, t = (idx[:, j] for j in range(4))
    keys = np.concatenate([np.stack([n, m, s], 1), np.stack([n, m, t], 1)])
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = np.ravel(inv)
    lg, mant = _inner_sums(co, uniq[:, 0], uniq[:, 1], uniq[:, 2])
    rows = len(idx)
    ls, ms = lg[inv[:rows]], mant[inv[:rows]]
    lt, mt = lg[inv[rows:]], mant[inv[rows:]]
    log_mod, phase, sign = _prefactor_log(co, n, m, s, t)
    tot = log_mod + ls + lt
    ok = np.isfinite(tot) & (ms != 0) & (mt != 0)
    with np.errstate(over="ignore", invalid="ignore"):
        val = sign * np.exp(np.where(ok, tot, 0.0)) * np.exp(1j * phase) * ms * mt
    out[ok] = val[ok]
    return out


def ket_tensor(params, cutoff):
    """(L+1)^4 tensor psi[a, b, c, d] of physical amplitudes from the closed form."""
    return state_table(params, cutoff).ket_array()


# ------------------------------------------------------------------ perturbative expansion

def _transfer_phase_factor(theta4):
    """(theta4 - e^{i theta4} sin theta4) / theta4^2, with its series near 0."""
    if abs(theta4) > 1e-3:
        return (theta4 - cmath.exp(1j * theta4) * math.sin(theta4)) / theta4 ** 2
    total = 0j
    for n in range(2, 10):
        total -= (2j) ** (n - 1) * theta4 ** (n - 2) / math.factorial(n)
    return total


def weight_f(params, n, m):
    """Single-transfer weight i sinc(theta4) e^{i(theta4 + arg tau)} sqrt(n m)."""
    if n <= 0 or m <= 0:
        return 0j
    tau = params.tau
    arg = cmath.phase(tau) if tau != 0 else 0.0
    t4 = params.theta4
    return 1j * sinc(t4) * cmath.exp(1j * (t4 + arg)) * math.sqrt(n * m)


def weight_g(params, n, m):
    """Weight of the diagonal second-order correction (transfer and return)."""
    f = weight_f(params, n + 1, m)
    return -2.0 * f * f.conjugate() - 1j * (n - m) * _transfer_phase_factor(params.theta4)


@dataclass
class PerturbativeState:
    """Expansion of the evolved vacuum to order |tau|^order around the product state.

    ``c1``/``c2`` hold the two-mode coefficients for n = 0 .. cutoff + 2, ``F``
    and ``G`` the weights on the same grid.  ``phase`` is the global factor
    e^{-2i(theta3 + phi3)} shared with the closed form.
    """

    order: int
    cutoff: int
    tau_abs: float
    c1: np.ndarray
    c2: np.ndarray
    F: np.ndarray
    G: np.ndarray
    phase: complex

    def f(self, n, m):
        if n < 0 or m < 0 or n >= self.F.shape[0] or m >= self.F.shape[1]:
            return 0j
        return self.F[n, m]

    def terms(self):
        """Yield (occupation ket, amplitude) contributions; kets may repeat."""
        f = self.f
        t = self.tau_abs
        h = 0.5 * t * t
        L = self.cutoff
        for n in range(L + 1):
            for m in range(L + 1):
                c = self.c1[n] * self.c2[m] * self.phase
                yield (n, n, m, m), c
                if self.order >= 1:
                    w = t * f(n, m + 1)
                    yield (n - 1, n, m + 1, m), c * w
                    yield (n, n - 1, m, m + 1), c * w
                    w = -t * np.conj(f(n + 1, m))
                    yield (n + 1, n, m - 1, m), c * w
                    yield (n, n + 1, m, m - 1), c * w
                if self.order >= 2:
                    w = h * f(n, m + 2) * f(n - 1, m + 1)
                    yield (n - 2, n, m + 2, m), c * w
                    yield (n, n - 2, m, m + 2), c * w
                    w = h * np.conj(f(n + 2, m)) * np.conj(f(n + 1, m - 1))
                    yield (n + 2, n, m - 2, m), c * w
                    yield (n, n + 2, m, m - 2), c * w
                    yield (n - 1, n - 1, m + 1, m + 1), c * 2 * h * f(n, m + 1) ** 2
                    yield (n + 1, n + 1, m - 1, m - 1), c * 2 * h * np.conj(f(n + 1, m)) ** 2
                    w = -2 * h * f(n, m) * np.conj(f(n + 1, m + 1))
                    yield (n + 1, n - 1, m - 1, m + 1), c * w
                    yield (n - 1, n + 1, m + 1, m - 1), c * w
                    yield (n, n, m, m), c * 2 * h * self.G[n, m]

    def ket_array(self):
        """(L+1)^4 tensor of the expansion restricted to labels 0..cutoff."""
        L = self.cutoff
        psi = np.zeros((L + 1,) * 4, dtype=complex)
        for key, v in self.terms():
            if v != 0 and all(0 <= x <= L for x in key):
                psi[key] += v
        return psi


def perturbative_state(params, order, cutoff):
    if order not in (0, 1, 2):
        raise DomainError("order must be 0, 1 or 2")
    if cutoff < 0:
        raise DomainError("cutoff must be non-negative")
    size = cutoff + 3
    c1 = np.array([two_mode_coefficient(1, params, n) for n in range(size)])
    c2 = np.array([two_mode_coefficient(2, params, n) for n in range(size)])
    F = np.array([[weight_f(params, n, m) for m in range(size)] for n in range(size)])
    G = np.array([[weight_g(params, n, m) for m in range(size)] for n in range(size)])
    phase = cmath.exp(-2j * (params.theta3 + params.phi3))
    return PerturbativeState(order, int(cutoff), abs(params.tau), c1, c2, F, G, phase)
