"""The Lie algebra sp(4, R) and its group for two scalar fields.

Phase-space vectors are ordered ``z = (phi1, phi2, pi1, pi2)`` and the
symplectic form is ``OMEGA = [[0, I], [-I, 0]]``.  The ten generators are
Kronecker products ``sigma_a (x) sigma_b`` where the first factor acts on the
position/momentum index and the second one on the field index.

The helicity (creation/annihilation) basis is reached with ``U @ D_k``, where
``a = (a_1k, a_2k, a^dag_1,-k, a^dag_2,-k) = U D_k z``.  Dimensionless group
elements are conjugated as ``U M U^dag``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import DomainError, SingularDecompositionError, ValidationError

I2 = np.eye(2)
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
ISY = np.array([[0.0, 1.0], [-1.0, 0.0]])  # i * sigma_y

OMEGA = np.block([[np.zeros((2, 2)), I2], [-I2, np.zeros((2, 2))]])
U_HEL = np.kron(np.array([[1.0, 1.0j], [1.0, -1.0j]]), I2) / math.sqrt(2.0)
J_HEL = -1.0j * np.diag([1.0, 1.0, -1.0, -1.0])

SQUEEZINGS = (1, 2)
ROTATIONS = (3, 4, 5, 6)
BOOSTS = (7, 8, 9, 10)

_KRON_FACTORS = {
    1: (SZ, SZ),
    2: (SZ, I2),
    3: (ISY, I2),
    4: (ISY, SZ),
    5: (I2, ISY),
    6: (ISY, SX),
    7: (SX, I2),
    8: (SX, SZ),
    9: (SZ, SX),
    10: (SX, SX),
}

_K = {i: np.kron(a, b).astype(np.int64) for i, (a, b) in _KRON_FACTORS.items()}

# L_i = U K_i U^dag expressed back on the K's: index -> (coefficient, K index)
HELICITY_TABLE = {
    1: (1, 8),
    2: (1, 7),
    3: (-1j, 2),
    4: (-1j, 1),
    5: (1, 5),
    6: (-1j, 9),
    7: (1j, 3),
    8: (1j, 4),
    9: (1, 10),
    10: (1j, 6),
}

# [K_i, K_j] = c K_l as (i, j) -> (c, l), pairs oriented as usually tabulated;
# c = 0 means the pair commutes.
COMMUTATOR_TABLE = {
    (1, 2): (0, 0),
    (3, 5): (0, 0), (3, 6): (0, 0), (3, 4): (0, 0),
    (5, 6): (2, 4), (6, 4): (2, 5), (4, 5): (2, 6),
    (7, 8): (0, 0), (7, 10): (0, 0), (9, 8): (0, 0),
    (9, 7): (2, 6), (8, 10): (2, 5), (9, 10): (2, 3),
    (1, 6): (0, 0), (2, 5): (0, 0),
    (1, 3): (2, 8), (1, 4): (2, 7), (1, 5): (2, 9),
    (2, 3): (2, 7), (2, 4): (2, 8), (2, 6): (2, 10),
    (1, 10): (0, 0), (2, 9): (0, 0),
    (1, 7): (2, 4), (1, 8): (2, 3), (1, 9): (2, 5),
    (2, 7): (2, 3), (2, 8): (2, 4), (2, 10): (2, 6),
    (4, 9): (0, 0), (4, 10): (0, 0), (5, 7): (0, 0), (6, 8): (0, 0),
    (3, 7): (2, 2), (3, 8): (2, 1), (4, 7): (2, 1), (4, 8): (2, 2),
    (5, 9): (2, 1), (6, 10): (2, 2),
    (3, 10): (2, 9), (9, 3): (2, 10), (5, 10): (2, 8), (8, 5): (2, 10),
    (6, 7): (2, 9), (9, 6): (2, 7),
}

SINC_SERIES_BELOW = 1e-4


def _check_index(index):
    if not isinstance(index, (int, np.integer)) or not 1 <= index <= 10:
        raise DomainError(f"generator index must be an integer in 1..10, got {index!r}")


def generator(index, basis="fundamental"):
    """Return K_i (integer 4x4) or its helicity image L_i = U K_i U^dag."""
    _check_index(index)
    if basis == "fundamental":
        return _K[index].copy()
    if basis == "helicity":
        return to_helicity(_K[index])
    raise DomainError(f"unknown basis {basis!r}")


def commutator(i, j):
    """Integer matrix K_i K_j - K_j K_i."""
    _check_index(i)
    _check_index(j)
    return _K[i] @ _K[j] - _K[j] @ _K[i]


def tabulated_commutator(i, j):
    """Right-hand side of [K_i, K_j] as stored in ``COMMUTATOR_TABLE``."""
    _check_index(i)
    _check_index(j)
    if i == j:
        return np.zeros((4, 4), dtype=np.int64)
    sign = 1
    if (i, j) not in COMMUTATOR_TABLE:
        i, j, sign = j, i, -1
    c, l = COMMUTATOR_TABLE[(i, j)]
    if c == 0:
        return np.zeros((4, 4), dtype=np.int64)
    return sign * c * _K[l]


def algebra_check():
    """Compare every commutator with the stored table.

    Returns a list of ``(i, j, exact)`` over the 45 unordered pairs.
    """
    out = []
    for i in range(1, 11):
        for j in range(i + 1, 11):
            out.append((i, j, bool(np.array_equal(commutator(i, j), tabulated_commutator(i, j)))))
    return out


def is_in_algebra(x, tol=1e-12):
    return float(np.max(np.abs(OMEGA @ x + x.T @ OMEGA))) <= tol


def symplectic_residual(m):
    """max |M^T OMEGA M - OMEGA|."""
    m = np.asarray(m)
    return float(np.max(np.abs(m.T @ OMEGA @ m - OMEGA)))


def helicity_residual(m):
    """max |M^dag J M - J| for a helicity-basis matrix."""
    m = np.asarray(m)
    return float(np.max(np.abs(m.conj().T @ J_HEL @ m - J_HEL)))


def to_helicity(m):
    """U M U^dag for a dimensionless matrix."""
    return U_HEL @ m @ U_HEL.conj().T


def from_helicity(mh):
    """Inverse of :func:`to_helicity`; the result is real for helicity-symplectic input."""
    m = U_HEL.conj().T @ mh @ U_HEL
    return m.real


def d_matrix(k):
    """D_k = diag(sqrt(k) I, I / sqrt(k))."""
    if not k > 0:
        raise DomainError(f"wavenumber must be positive, got {k!r}")
    s = math.sqrt(k)
    return np.diag([s, s, 1.0 / s, 1.0 / s])


def sinc(x):
    """sin(x)/x with a short series near the origin."""
    if abs(x) < SINC_SERIES_BELOW:
        x2 = x * x
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    return math.sin(x) / x


def exp_generator(index, angle):
    """Closed-form exp(angle * K_i)."""
    _check_index(index)
    angle = float(angle)
    if not math.isfinite(angle):
        raise DomainError("angle must be finite")
    k = _K[index].astype(float)
    if index in SQUEEZINGS:
        return np.diag(np.exp(angle * np.diag(k)))
    if index in ROTATIONS:
        return math.cos(angle) * np.eye(4) + math.sin(angle) * k
    return math.cosh(angle) * np.eye(4) + math.sinh(angle) * k


def exp_su2(theta4, theta5, theta6):
    """exp(theta4 K4 + theta5 K5 + theta6 K6) as cos(theta) I + sinc(theta) X."""
    x = theta4 * _K[4] + theta5 * _K[5] + theta6 * _K[6]
    th = math.sqrt(theta4 ** 2 + theta5 ** 2 + theta6 ** 2)
    return math.cos(th) * np.eye(4) + sinc(th) * x


S_Z = _K[4] / 2j
S_PLUS = (_K[5] - 1j * _K[6]) / 2j
S_MINUS = (_K[5] + 1j * _K[6]) / 2j


@dataclass(frozen=True)
class MixingFactors:
    """Quantities derived from the su(2) rotation angles."""

    tau: complex
    theta: float
    theta4: float
    p_z: complex
    p_minus: complex
    p_plus: complex
    tau_tilde: complex

    @property
    def sinc_theta(self):
        return sinc(self.theta)

    def factor_matrices(self):
        """(exp(p+ S+), exp(pz Sz), exp(p- S-)) in the fundamental representation."""
        # S+ and S- are nilpotent, S_z squares to I/4
        e_plus = np.eye(4) + self.p_plus * S_PLUS
        e_z = np.cosh(self.p_z / 2) * np.eye(4) - 1j * np.sinh(self.p_z / 2) * _K[4]
        e_minus = np.eye(4) + self.p_minus * S_MINUS
        return e_plus, e_z, e_minus

    def product(self):
        e_plus, e_z, e_minus = self.factor_matrices()
        return e_plus @ e_z @ e_minus


def su2_factor(theta4, theta5, theta6, singular_tol=1e-12):
    """Gauss factorization of exp(theta4 K4 + theta5 K5 + theta6 K6).

    Returns p_z, p_-, p_+ with exp(p+ S+) exp(pz Sz) exp(p- S-) equal to the
    rotation.  The principal logarithm is used for p_z.
    """
    for v in (theta4, theta5, theta6):
        if not math.isfinite(v):
            raise DomainError("rotation angles must be finite")
    theta = math.sqrt(theta4 ** 2 + theta5 ** 2 + theta6 ** 2)
    tau = complex(-theta6, theta5)
    sc = sinc(theta)
    tau_tilde = complex(math.cos(theta), theta4 * sc)
    denom = complex(math.cos(theta), -theta4 * sc)
    if abs(denom) < singular_tol:
        raise SingularDecompositionError(
            f"cos(theta) - i (theta4/theta) sin(theta) vanishes at theta={theta!r}"
        )
    p_z = -2.0 * np.log(denom)
    p_minus = -tau.conjugate() * sc / denom
    p_plus = tau * sc / denom
    return MixingFactors(tau, theta, float(theta4), complex(p_z), complex(p_minus), complex(p_plus), tau_tilde)


@dataclass(frozen=True)
class SqueezeRotParams:
    """Bloch-Messiah parameters of M = R(theta) Z(d) R(phi)."""

    theta3: float = 0.0
    theta4: float = 0.0
    theta5: float = 0.0
    theta6: float = 0.0
    d1: float = 0.0
    d2: float = 0.0
    phi3: float = 0.0
    phi4: float = 0.0
    phi5: float = 0.0
    phi6: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise DomainError(f"{f.name} must be finite, got {v!r}")
            object.__setattr__(self, f.name, float(v))

    @classmethod
    def from_squeezing(cls, r1, r2, **kw):
        """Build from per-sector squeezing amplitudes instead of d1, d2."""
        return cls(d1=(r1 - r2) / 2.0, d2=(r1 + r2) / 2.0, **kw)

    @classmethod
    def from_array(cls, values):
        return cls(*[float(v) for v in values])

    def as_array(self):
        return np.array([getattr(self, f.name) for f in fields(self)])

    @property
    def r1(self):
        return self.d1 + self.d2

    @property
    def r2(self):
        return self.d2 - self.d1

    @property
    def tau(self):
        return complex(-self.theta6, self.theta5)

    @property
    def theta(self):
        return math.sqrt(self.theta4 ** 2 + self.theta5 ** 2 + self.theta6 ** 2)

    def mixing(self):
        return su2_factor(self.theta4, self.theta5, self.theta6)

    def phi_mixing(self):
        return su2_factor(self.phi4, self.phi5, self.phi6)

    def with_tau(self, tau):
        """Same parameters with theta5, theta6 set from a complex tau = -theta6 + i theta5."""
        tau = complex(tau)
        return replace(self, theta5=tau.imag, theta6=-tau.real)


PARAM_NAMES = tuple(f.name for f in fields(SqueezeRotParams))


def _rotation_factors(theta3, theta4, theta5, theta6):
    """[exp(theta4 K4 + theta5 K5 + theta6 K6), exp(theta3 K3)].

    The closed-form su(2) exponential is used rather than the Gauss factors,
    which lose accuracy as cos(theta) - i (theta4/theta) sin(theta) -> 0.
    """
    return [exp_su2(theta4, theta5, theta6), exp_generator(3, theta3)]


def compose_bloch_messiah(params, basis="fundamental"):
    """M = R(theta) Z(d) R(phi) as the product of the ten one-parameter factors."""
    p = params
    factors = _rotation_factors(p.theta3, p.theta4, p.theta5, p.theta6)
    factors += [exp_generator(1, p.d1), exp_generator(2, p.d2)]
    factors += _rotation_factors(p.phi3, p.phi4, p.phi5, p.phi6)
    m = np.eye(4, dtype=complex)
    for f in factors:
        m = m @ f
    m = m.real
    if basis == "fundamental":
        return m
    if basis == "helicity":
        return to_helicity(m)
    raise DomainError(f"unknown basis {basis!r}")


def helicity_blocks(mh):
    """(A, B) upper blocks of a helicity-basis matrix [[A, B], [B*, A*]]."""
    return mh[:2, :2], mh[:2, 2:]


# ---------------------------------------------------------------- decomposition

def _u2_to_angles(v):
    """Map V in U(2) to (theta3, theta4, theta5, theta6) with V = e^{-i theta3} S.

    S = cos(th) I - i sinc(th) (theta6 sx - theta5 sy + theta4 sz); theta3 is
    chosen so that th <= pi/2.
    """
    det = np.linalg.det(v)
    theta3 = -0.5 * float(np.angle(det))
    s = v * np.exp(1j * theta3)
    if s[0, 0].real + s[1, 1].real < 0:
        theta3 += math.pi if theta3 <= 0 else -math.pi
        s = -s
    a = 0.5 * (s[0, 0] + s[1, 1].conjugate())
    b = 0.5 * (s[0, 1] - s[1, 0].conjugate())
    th = math.acos(min(1.0, max(-1.0, a.real)))
    # sin(th) from the off-diagonal norm is better conditioned near th = 0
    sin_th = math.sqrt(max(0.0, a.imag ** 2 + abs(b) ** 2))
    th = math.atan2(sin_th, a.real)
    sc = sinc(th)
    return theta3, -a.imag / sc, b.real / sc, -b.imag / sc


def _angles_to_u2(theta3, theta4, theta5, theta6):
    th = math.sqrt(theta4 ** 2 + theta5 ** 2 + theta6 ** 2)
    sc = sinc(th)
    a = complex(math.cos(th), -theta4 * sc)
    b = sc * complex(theta5, -theta6)
    return np.exp(-1j * theta3) * np.array([[a, b], [-b.conjugate(), a.conjugate()]])


def _nearest_unitary(x):
    w, _, vh = np.linalg.svd(x)
    return w @ vh


def _takagi(x):
    """U unitary, sigma >= 0 (descending) with x = U diag(sigma) U^T for symmetric complex x.

    Positive eigenvectors (p, q) of [[Re x, Im x], [Im x, -Re x]] give the
    columns p + i q; eigh keeps them orthonormal even for clustered sigma.
    """
    n = x.shape[0]
    h = np.block([[x.real, x.imag], [x.imag, -x.real]])
    w, v = np.linalg.eigh(0.5 * (h + h.T))
    top = v[:, ::-1][:, :n]
    return top[:n] + 1j * top[n:], w[::-1][:n]


def _split_blocks(a, b, degenerate_tol=1e-12):
    """Return (V_theta, r, V_phi) with A = V_t cosh(r) V_p and B = V_t sinh(r) conj(V_p).

    A^-1 B = V_p^dag tanh(r) conj(V_p) is complex symmetric, so its Takagi
    factor gives V_p.  The squeezing is read as sinh r_j = |B conj(u_j)|, which
    stays well conditioned for small r.
    """
    sb = np.linalg.svd(b, compute_uv=False)
    if sb[0] < 1e-13:
        # no squeezing at all: A is unitary
        return _nearest_unitary(a), np.zeros(2), np.eye(2, dtype=complex)
    if abs(sb[0] - sb[1]) <= degenerate_tol * sb[0]:
        # r1 = r2: A / cosh r = Vt Vp and B / sinh r = Vt conj(Vp).  Canonical Vp
        # from the symmetric unitary Vp^T Vp = conj(U1^dag U2).
        rr = float(np.mean(np.arcsinh(sb)))
        u1 = _nearest_unitary(a / math.cosh(rr))
        u2 = _nearest_unitary(b / math.sinh(rr))
        c = (u1.conj().T @ u2).conj()
        c = 0.5 * (c + c.T)
        # real and imaginary parts of a symmetric unitary commute: diagonalize with a real rotation
        herm = c.real + 0.5 * c.imag  # generic real combination
        _, o = np.linalg.eigh(herm)
        if np.linalg.det(o) < 0:
            o[:, 1] = -o[:, 1]
        d = np.diag(o.T @ c @ o)
        vp = np.diag(np.sqrt(d)) @ o.T
        vt = u1 @ vp.conj().T
        return vt, np.array([rr, rr]), vp
    x = np.linalg.solve(a, b)
    u, _ = _takagi(0.5 * (x + x.T))
    sh = np.linalg.norm(b @ u.conj(), axis=0)
    order = np.argsort(-sh, kind="stable")
    u, sh = u[:, order], sh[order]
    r = np.arcsinh(sh)
    vt = _nearest_unitary(a @ u / np.cosh(r)[None, :])
    return vt, r, u.conj().T


def decompose_bloch_messiah(m, tol=1e-8, basis="fundamental"):
    """Bloch-Messiah parameters of a real symplectic (or helicity) matrix.

    The result satisfies ``compose_bloch_messiah(params) ~= m`` and r1 >= r2 >= 0.
    When r1 = r2 the rotation split is fixed by a canonical choice of the right
    factor (see ``_split_blocks``).
    """
    m = np.asarray(m)
    if basis == "fundamental":
        if m.shape != (4, 4) or np.iscomplexobj(m) and np.max(np.abs(m.imag)) > tol:
            raise ValidationError("expected a real 4x4 matrix")
        m = np.real(m)
        scale = max(1.0, float(np.max(np.abs(m)))) ** 2
        if symplectic_residual(m) > tol * scale:
            raise ValidationError(f"matrix is not symplectic (residual {symplectic_residual(m):.3e})")
        mh = to_helicity(m)
    elif basis == "helicity":
        mh = m
        scale = max(1.0, float(np.max(np.abs(mh)))) ** 2
        if helicity_residual(mh) > tol * scale:
            raise ValidationError(f"matrix is not helicity-symplectic (residual {helicity_residual(mh):.3e})")
    else:
        raise DomainError(f"unknown basis {basis!r}")
    a, b = helicity_blocks(mh)
    vt, r, vp = _split_blocks(a, b)
    t3, t4, t5, t6 = _u2_to_angles(vt)
    f3, f4, f5, f6 = _u2_to_angles(vp)
    return SqueezeRotParams(t3, t4, t5, t6, (r[0] - r[1]) / 2.0, (r[0] + r[1]) / 2.0, f3, f4, f5, f6)


def gauge_equivalents(params):
    """Finite set of parameter vectors composing to the same matrix as ``params``.

    Covers the sign gauge of the squeezing split and the pi-shift of theta3/phi3
    with the matching SU(2) representative.  Used for continuity anchoring.
    """
    out = []
    vt = _angles_to_u2(params.theta3, params.theta4, params.theta5, params.theta6)
    vp = _angles_to_u2(params.phi3, params.phi4, params.phi5, params.phi6)
    signs = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    for s1, s2 in signs:
        lam = np.diag([s1, s2]).astype(complex)
        for t3, t4, t5, t6 in _u2_representatives(vt @ lam):
            for f3, f4, f5, f6 in _u2_representatives(lam @ vp):
                out.append(SqueezeRotParams(t3, t4, t5, t6, params.d1, params.d2, f3, f4, f5, f6))
    return out


def _u2_representatives(v):
    t3, t4, t5, t6 = _u2_to_angles(v)
    vec = np.array([t4, t5, t6])
    th = float(np.linalg.norm(vec))
    reps = []
    for shift in (-2 * math.pi, -math.pi, 0.0, math.pi, 2 * math.pi):
        # e^{-i(t3 + shift)} = (-1)^{shift/pi} e^{-i t3}; compensate on the SU(2) side
        flip = int(round(shift / math.pi)) % 2 == 1
        if th < 1e-14:
            n = np.array([1.0, 0.0, 0.0])
        else:
            n = vec / th
        base = (th + math.pi) if flip else th
        for wrap in (-2 * math.pi, 0.0, 2 * math.pi):
            length = base + wrap
            v3 = n * length
            reps.append((t3 + shift, *v3))
    return reps


def _nearest_u2_angles(v, ref):
    """Angles of V in U(2) closest to ``ref`` = (theta3, theta4, theta5, theta6).

    The redundancy is theta3 -> theta3 + j pi (compensated by -1 on the SU(2)
    factor) and rotation vectors n * (length + 2 pi w) along a fixed axis n.
    """
    t3, t4, t5, t6 = _u2_to_angles(v)
    vec = np.array([t4, t5, t6])
    rvec = np.asarray(ref[1:], dtype=float)
    th = float(np.linalg.norm(vec))
    if th < 1e-14:
        rn = float(np.linalg.norm(rvec))
        n = rvec / rn if rn > 0 else np.array([1.0, 0.0, 0.0])
    else:
        n = vec / th
    proj = float(n @ rvec)
    best, best_cost = None, math.inf
    j0 = int(round((ref[0] - t3) / math.pi))
    for j in (j0 - 1, j0, j0 + 1):
        base = th + math.pi if j % 2 else th
        w0 = int(round((proj - base) / (2 * math.pi)))
        for w in (w0 - 1, w0, w0 + 1):
            cand = np.concatenate([[t3 + j * math.pi], n * (base + 2 * math.pi * w)])
            cost = float(np.sum((cand - ref) ** 2))
            if cost < best_cost:
                best, best_cost = cand, cost
    return best, best_cost


def anchor(params, previous):
    """Gauge representative of ``params`` closest to ``previous``.

    Searches the squeezing sign gauge, the exchange of the two squeezings and
    the periodicities of both U(2) factors; the theta and phi halves are
    optimized independently.
    """
    if previous is None:
        return params
    ref = previous.as_array()
    vt = _angles_to_u2(params.theta3, params.theta4, params.theta5, params.theta6)
    vp = _angles_to_u2(params.phi3, params.phi4, params.phi5, params.phi6)
    best, best_cost = None, math.inf
    swap = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    for perm, d1 in ((np.eye(2, dtype=complex), params.d1), (swap, -params.d1)):
        # exchanging the two squeezings is compensated by the field swap on both sides
        for s1, s2 in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            lam = np.diag([s1, s2]).astype(complex) @ perm
            t, ct = _nearest_u2_angles(vt @ lam, ref[:4])
            f, cf = _nearest_u2_angles(lam.T @ vp, ref[6:])
            cost = ct + cf + (d1 - ref[4]) ** 2
            if cost < best_cost:
                best_cost = cost
                best = SqueezeRotParams(*t, d1, params.d2, *f)
    return best
