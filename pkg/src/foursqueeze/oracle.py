"""Truncated-Fock brute-force oracle.

Everything here is built from ladder-operator matrices and matrix exponentials,
with no use of the closed-form amplitudes.  Modes are ordered
``(1k, 1-k, 2k, 2-k)`` and a state is a flat vector over the C-ordered tensor
``psi[n_1k, n_1-k, n_2k, n_2-k]``.

Two-mode gates may be exponentiated in an auxiliary two-mode space with a
larger cutoff (``aux_cutoff``) and projected back, so that the only truncation
effect left is the norm that leaves the box, reported as leakage.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply

from .errors import DomainError, IntegrationError, TruncationWarning
from .symplectic import J_HEL

MODES = ("1k", "1-k", "2k", "2-k")
DENSE_LIMIT = 4096
LEAKAGE_THRESHOLD = 1e-8


def _mode_index(mode):
    if isinstance(mode, str):
        if mode not in MODES:
            raise DomainError(f"unknown mode {mode!r}")
        return MODES.index(mode)
    if mode not in range(4):
        raise DomainError(f"unknown mode {mode!r}")
    return int(mode)


def _single_annihilator(cutoff):
    return sp.diags(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1, format="csr")


@dataclass
class TruncatedSpace:
    """Product of ``n_modes`` oscillators, each truncated at ``cutoff`` quanta."""

    cutoff: int
    n_modes: int = 4
    _ops: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.cutoff < 0:
            raise DomainError("cutoff must be non-negative")

    @property
    def d(self):
        return self.cutoff + 1

    @property
    def dim(self):
        return self.d ** self.n_modes

    @property
    def shape(self):
        return (self.d,) * self.n_modes

    def index(self, occupations):
        return int(np.ravel_multi_index(tuple(occupations), self.shape))

    def occupations(self, index):
        return tuple(int(v) for v in np.unravel_index(index, self.shape))

    def basis(self, occupations):
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(occupations)] = 1.0
        return v

    def vacuum(self):
        return self.basis((0,) * self.n_modes)

    def annihilator(self, mode):
        mode = int(mode)
        key = ("a", mode)
        if key not in self._ops:
            a = _single_annihilator(self.cutoff)
            eye = sp.identity(self.d, format="csr")
            op = None
            for j in range(self.n_modes):
                f = a if j == mode else eye
                op = f if op is None else sp.kron(op, f, format="csr")
            self._ops[key] = op.astype(complex)
        return self._ops[key]

    def number(self, mode):
        mode = int(mode)
        key = ("n", mode)
        if key not in self._ops:
            occ = np.indices(self.shape).reshape(self.n_modes, -1)[mode]
            self._ops[key] = sp.diags(occ.astype(float), 0, format="csr").astype(complex)
        return self._ops[key]

    def identity(self):
        return sp.identity(self.dim, dtype=complex, format="csr")


def ladder(space, mode, kind):
    """Annihilation or creation operator on one of the four modes."""
    a = space.annihilator(_mode_index(mode) if space.n_modes == 4 else mode)
    if kind == "annihilate":
        return a
    if kind == "create":
        return a.conj().T.tocsr()
    raise DomainError(f"unknown ladder kind {kind!r}")


# ------------------------------------------------------------------ generators

def _sector_modes(i):
    if i not in (1, 2):
        raise DomainError("sector must be 1 or 2")
    return (0, 1) if i == 1 else (2, 3)


def phase_generator(space, i):
    """-i (N_ik + N_i,-k + 1)."""
    p, q = _sector_modes(i)
    return -1j * (space.number(p) + space.number(q) + space.identity())


def squeeze_generator(space, i):
    """a^dag_ik a^dag_i,-k - a_ik a_i,-k."""
    p, q = _sector_modes(i)
    a, b = space.annihilator(p), space.annihilator(q)
    ab = a @ b
    return (ab.conj().T - ab).tocsr()


def transfer_generator(space, i, j):
    """i (a^dag_jk a_ik + a^dag_j,-k a_i,-k)."""
    pi, qi = _sector_modes(i)
    pj, qj = _sector_modes(j)
    ai, bi = space.annihilator(pi), space.annihilator(qi)
    aj, bj = space.annihilator(pj), space.annihilator(qj)
    return (1j * (aj.conj().T @ ai + bj.conj().T @ bi)).tocsr()


def quadratic_operator(space, kernel):
    """Symmetrically ordered a^ Q a for the helicity vector (a_1k, a_2k, a^dag_1-k, a^dag_2-k).

    Products a_{-k} a^dag_{-k} on the same mode are written as N + 1 so that the
    constant matches the untruncated operator.
    """
    q = np.asarray(kernel, dtype=complex)
    a = [space.annihilator(m) for m in range(4)]
    ad = [x.conj().T.tocsr() for x in a]
    # helicity entries: index 0 -> a_1k, 1 -> a_2k, 2 -> a^dag_1-k, 3 -> a^dag_2-k
    vec = [a[0], a[2], ad[1], ad[3]]
    dag = [ad[0], ad[2], a[1], a[3]]
    op = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for mu in range(4):
        for nu in range(4):
            c = q[mu, nu]
            if c == 0:
                continue
            if mu == nu and mu >= 2:
                mode = 1 if mu == 2 else 3
                term = space.number(mode) + space.identity()
            else:
                term = dag[mu] @ vec[nu]
            op = op + c * term
    return op.tocsr()


def algebra_operator(space, x_helicity):
    """Quantum image of a helicity Lie-algebra element X: a^ (iJX) a."""
    return quadratic_operator(space, 1j * J_HEL @ np.asarray(x_helicity))


def hamiltonian_operator(space, kernel):
    """a^ H a for the helicity kernel H."""
    return quadratic_operator(space, kernel)


# ------------------------------------------------------------------ gates

GATE_KINDS = ("phase", "squeeze", "transfer", "displacement")


@dataclass
class GateOperator:
    """exp(parameter * generator) on a truncated space, applied lazily."""

    kind: str
    parameter: complex
    space: TruncatedSpace
    generator: object
    modes: tuple
    aux_cutoff: int | None = None
    label: str = ""

    @property
    def matrix(self):
        if self.space.dim > DENSE_LIMIT:
            raise DomainError(f"dense matrix refused above dimension {DENSE_LIMIT}")
        return expm((self.parameter * self.generator).toarray())

    def apply(self, psi):
        if self.kind == "phase":
            diag = self.generator.diagonal()
            return np.exp(self.parameter * diag) * psi
        if self.aux_cutoff is not None and self.aux_cutoff > self.space.cutoff:
            return _apply_padded(self, psi)
        return expm_multiply(self.parameter * self.generator, psi)


def _squeeze_chain(parameter, aux_cutoff, delta, keep):
    """exp[p (a^dag b^dag - a b)] on the chain n_a - n_b = delta of a two-mode space.

    The chain state j is (n_a, n_b) = (j + max(delta, 0), j + max(-delta, 0)),
    truncated at ``aux_cutoff``; the top-left ``keep`` x ``keep`` corner is returned.
    """
    lo_a, lo_b = max(delta, 0), max(-delta, 0)
    size = aux_cutoff + 1 - max(lo_a, lo_b)
    j = np.arange(size - 1)
    off = np.sqrt((j + lo_a + 1.0) * (j + lo_b + 1.0))
    gen = np.diag(off, -1) - np.diag(off, 1)
    return expm(parameter * gen)[:keep, :keep]


def _apply_padded(g, psi):
    """Squeeze gate exponentiated chain by chain in a larger two-mode space.

    The generator conserves n_a - n_b, so each difference sector is a
    tridiagonal chain; it is exponentiated with ``aux_cutoff`` levels and
    projected back, which avoids the artefacts of a truncated generator.
    """
    if g.kind != "squeeze":
        raise DomainError(f"no padded form for {g.kind!r}")
    sp_ = g.space
    d = sp_.d
    tensor = psi.reshape(sp_.shape)
    p, q = g.modes
    others = [k for k in range(4) if k not in (p, q)]
    moved = np.moveaxis(tensor, (p, q), (0, 1)).reshape(d, d, -1)
    out = np.zeros_like(moved, dtype=complex)
    for delta in range(-(d - 1), d):
        lo_a, lo_b = max(delta, 0), max(-delta, 0)
        keep = d - max(lo_a, lo_b)
        ia = np.arange(keep) + lo_a
        ib = np.arange(keep) + lo_b
        e = _squeeze_chain(g.parameter, g.aux_cutoff, delta, keep)
        out[ia, ib, :] = e @ moved[ia, ib, :]
    back = out.reshape((d, d) + tuple(sp_.shape[k] for k in others))
    return np.moveaxis(back, (0, 1), (p, q)).reshape(-1)


def gate(space, kind, parameter, sector=None, target=None, aux_cutoff=None):
    """Gate operator for one of the circuit primitives.

    ``phase``: exp[-i theta (N_ik + N_i,-k + 1)]; ``squeeze``:
    exp[r (a^dag a^dag - a a)]; ``transfer`` from ``sector`` to ``target``:
    exp[i p (a^dag_jk a_ik + a^dag_j,-k a_i,-k)]; ``displacement`` with a complex
    amplitude on the single mode ``sector`` (0..3).
    """
    if kind == "phase":
        return GateOperator(kind, complex(parameter), space, phase_generator(space, sector), _sector_modes(sector))
    if kind == "squeeze":
        return GateOperator(
            kind, complex(parameter), space, squeeze_generator(space, sector), _sector_modes(sector), aux_cutoff
        )
    if kind == "transfer":
        return GateOperator(
            kind, complex(parameter), space, transfer_generator(space, sector, target), (sector, target)
        )
    if kind == "displacement":
        mode = _mode_index(sector)
        a = space.annihilator(mode)
        alpha = complex(parameter)
        gen = (alpha * a.conj().T - np.conj(alpha) * a).tocsr()
        return GateOperator(kind, 1.0, space, gen, (mode,))
    raise DomainError(f"unknown gate kind {kind!r}")


def circuit_gates(space, params, aux_cutoff=None):
    """Gates of U = R(theta) Z(d) R(phi) in application order (rightmost first)."""
    mix = params.mixing()
    return [
        gate(space, "phase", params.phi3, sector=1),
        gate(space, "phase", params.phi3, sector=2),
        gate(space, "squeeze", params.r1, sector=1, aux_cutoff=aux_cutoff),
        gate(space, "squeeze", params.r2, sector=2, aux_cutoff=aux_cutoff),
        gate(space, "phase", params.theta3, sector=1),
        gate(space, "phase", params.theta3, sector=2),
        gate(space, "transfer", -mix.p_minus, sector=2, target=1),
        gate(space, "phase", -0.5j * mix.p_z, sector=1),
        gate(space, "phase", 0.5j * mix.p_z, sector=2),
        gate(space, "transfer", mix.p_plus, sector=1, target=2),
    ]


@dataclass
class CircuitResult:
    state: np.ndarray
    space: TruncatedSpace
    leakage: float
    gate_norms: list


def run_circuit(space, params, aux_cutoff=None, warn=True):
    """Apply the phase, squeeze and mixing gates to the vacuum.

    ``leakage`` is 1 - |psi|^2 at the end (norm that left the truncated box).
    """
    psi = space.vacuum()
    norms = []
    for g in circuit_gates(space, params, aux_cutoff):
        psi = g.apply(psi)
        norms.append(float(np.linalg.norm(psi)))
    leak = 1.0 - float(np.vdot(psi, psi).real)
    if warn and leak > LEAKAGE_THRESHOLD:
        warnings.warn(f"truncation leakage {leak:.3e} above {LEAKAGE_THRESHOLD:g}", TruncationWarning, stacklevel=2)
    return CircuitResult(psi, space, leak, norms)


def project_box(psi, space, cutoff):
    """Restrict a state to occupations <= cutoff on every mode."""
    t = psi.reshape(space.shape)
    sl = (slice(0, cutoff + 1),) * space.n_modes
    return t[sl].copy()


def circuit_tensor(params, cutoff, working_cutoff=None, aux_cutoff=None, warn=False):
    """Box of the circuit state with every label <= cutoff.

    The transfer gates conserve n_1k + n_2k and n_1-k + n_2-k, so a working
    cutoff of ``2 * cutoff`` evolves every amplitude in the box exactly; the
    squeeze gates are exponentiated in an auxiliary two-mode space.
    """
    if working_cutoff is None:
        working_cutoff = 2 * cutoff
    if aux_cutoff is None:
        aux_cutoff = max(working_cutoff, _aux_cutoff_for(params))
    space = TruncatedSpace(working_cutoff)
    res = run_circuit(space, params, aux_cutoff=aux_cutoff, warn=warn)
    box = project_box(res.state, space, cutoff)
    leak = 1.0 - float(np.sum(np.abs(box) ** 2))
    return box, leak


def _aux_cutoff_for(params, eps=1e-16):
    t = max(abs(math.tanh(params.r1)), abs(math.tanh(params.r2)))
    if t == 0:
        return 0
    return int(min(400, math.ceil(math.log(eps) / math.log(t)) + 10))


# ------------------------------------------------------------------ Schroedinger evolution

_GL_C = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)
_CF_A = ((3 - 2 * math.sqrt(3)) / 12, (3 + 2 * math.sqrt(3)) / 12)


def hamiltonian_evolve(space, kernel_source, t_in, t_end, steps, psi0=None, drift_tol=1e-6):
    """Integrate i d psi/dt = H(t) psi with H = a^ H_k(t) a.

    ``kernel_source(t)`` returns the 4x4 helicity kernel.  A fourth-order
    commutator-free exponential integrator is used; each stage applies a
    sparse matrix exponential.
    """
    if steps < 1 or not t_end > t_in:
        raise DomainError("need steps >= 1 and t_end > t_in")
    psi = space.vacuum() if psi0 is None else np.asarray(psi0, dtype=complex)
    n0 = np.linalg.norm(psi)
    h = (t_end - t_in) / steps
    for k in range(steps):
        t = t_in + k * h
        h1 = hamiltonian_operator(space, kernel_source(t + _GL_C[0] * h))
        h2 = hamiltonian_operator(space, kernel_source(t + _GL_C[1] * h))
        a1, a2 = _CF_A
        psi = expm_multiply(-1j * h * (a2 * h1 + a1 * h2), psi)
        psi = expm_multiply(-1j * h * (a1 * h1 + a2 * h2), psi)
        if not np.all(np.isfinite(psi)):
            raise IntegrationError("non-finite state", time=t + h)
        drift = abs(np.linalg.norm(psi) - n0)
        if drift > drift_tol:
            raise IntegrationError(f"norm drift {drift:.3e}", time=t + h)
    return psi


# ------------------------------------------------------------------ partial traces

def reduced_density(psi, space, keep=1, renormalize=True):
    """Density matrix of sector ``keep`` after tracing the other sector."""
    d = space.d
    t = psi.reshape(d * d, d * d)
    if keep == 2:
        t = t.T
    elif keep != 1:
        raise DomainError("keep must be 1 or 2")
    rho = t @ t.conj().T
    if renormalize:
        rho = rho / np.trace(rho).real
    return rho


def partial_trace_purity(psi, space, keep=1, renormalize=True):
    """Tr(rho_red^2) by explicit contraction over the traced sector."""
    d = space.d if hasattr(space, "d") else int(space)
    t = np.asarray(psi).reshape(d * d, d * d)
    if keep == 2:
        t = t.T
    elif keep != 1:
        raise DomainError("keep must be 1 or 2")
    g = t.conj().T @ t  # same non-zero spectrum as rho_red
    norm = np.trace(g).real
    pur = float(np.sum(np.abs(g) ** 2))
    if renormalize:
        pur /= norm ** 2
    return pur


def project_total(psi, space, nmax):
    """Keep kets with n_1k + n_2k <= nmax and n_1-k + n_2-k <= nmax."""
    t = psi.reshape(space.shape).copy()
    n = np.arange(space.d)
    tot_k = n[:, None, None, None] + n[None, None, :, None]
    tot_mk = n[None, :, None, None] + n[None, None, None, :]
    t[(tot_k > nmax) | (tot_mk > nmax)] = 0.0
    return t


def circuit_state(params, nmax, aux_cutoff=None, warn=False):
    """Circuit state on the blocks n_1k + n_2k <= nmax, which a per-mode cutoff of
    ``nmax`` evolves exactly (the transfers act within each block).

    Returns the (nmax+1)^4 tensor and the discarded probability.
    """
    if aux_cutoff is None:
        aux_cutoff = max(nmax, _aux_cutoff_for(params))
    space = TruncatedSpace(nmax)
    res = run_circuit(space, params, aux_cutoff=aux_cutoff, warn=warn)
    t = project_total(res.state, space, nmax)
    leak = 1.0 - float(np.sum(np.abs(t) ** 2))
    return t, leak
