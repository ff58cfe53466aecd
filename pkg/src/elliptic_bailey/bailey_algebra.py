"""Discrete Bailey matrices and the identities they satisfy.

The central objects are the lower-triangular transform matrix

    M[N, m](a, k) = theta(k)_{N+m} theta(k/a)_{N-m}
                    / (theta(qa)_{N+m} theta(q)_{N-m})
                    * theta(a q^{2m}; p) / theta(a; p) * a^{N-m},

(zero for m > N), the diagonal matrix

    D_m(a; b, c) = theta(b)_m theta(c)_m
                   / (theta(aq/b)_m theta(aq/c)_m) * (aq/(bc))^m,

and the key identity, for parameters with k b c = q a t:

    M(a,k) D(a;b,c) M(t,a) = D(k; qt/b, qt/c) M(t,k) D(t;b,c),

which is also the cubic Coxeter relation for the twisted S1/S2 generators
realized below.  All theta Pochhammers carry the implicit nome pair (p, q).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import BaileyPairError, DegenerateParameterError, DomainError
from .report import RESIDUAL_FLOOR, VerificationReport, identity_deviation, relative_residual
from .special_functions import (
    THETA_GUARD,
    NomePair,
    elliptic_pochhammer,
    theta,
    theta_pochhammer_sequence,
)

__all__ = [
    "DiscreteParams",
    "BaileyMatrix",
    "DiagonalOp",
    "BaileySequence",
    "derive_bc",
    "m_entry",
    "build_M",
    "d_entry",
    "build_D",
    "bailey_transform",
    "conditioning_amplification",
    "verify_matrix_bailey",
    "verify_coxeter",
    "bressoud_limit_check",
]

PRODUCT_RULE_TOL = 1e-13


def derive_bc(t_tilde, a, k, y, nome: NomePair):
    """Split the product rule k*b*c = q*a*t_tilde into the two parameters

        b = sqrt(p q t_tilde a / k) * y,     c = sqrt(q t_tilde a / (p k)) / y,

    with principal square roots.  For real positive nomes the two radicands
    share one argument, so the product rule holds to rounding for any complex
    t_tilde, a, k.
    """
    if k == 0:
        raise DomainError("derive_bc requires k != 0")
    p, q = nome.p, nome.q
    b = np.sqrt(complex(p * q * t_tilde * a / k)) * y
    c = np.sqrt(complex(q * t_tilde * a / (p * k))) / y
    return complex(b), complex(c)


@dataclass(frozen=True)
class DiscreteParams:
    """Parameter set for the discrete Bailey lemma.

    Validates the product rule k*b*c = q*a*t_tilde and rejects parameter sets
    whose theta denominators (for indices 0..N) vanish within the guard.
    """

    a: complex
    k: complex
    t_tilde: complex
    b: complex
    c: complex
    y: complex
    N: int
    nome: NomePair

    def __post_init__(self):
        if self.N < 0:
            raise DomainError("N must be a non-negative integer")
        q, t = self.nome.q, self.t_tilde
        lhs, rhs = self.k * self.b * self.c, q * self.a * t
        if abs(lhs - rhs) > PRODUCT_RULE_TOL * max(abs(lhs), abs(rhs)):
            raise DegenerateParameterError(
                f"product rule violated: k*b*c = {lhs}, q*a*t_tilde = {rhs}"
            )
        vals = theta(self._theta_args(), self.nome.p, self.nome.trunc)
        gap = float(np.min(np.abs(vals)))
        if gap < THETA_GUARD:
            z = complex(self._theta_args()[int(np.argmin(np.abs(vals)))])
            raise DegenerateParameterError(
                f"theta({z}; p) = {gap:.3e} in a matrix entry is under the guard"
            )

    def _theta_args(self) -> np.ndarray:
        """q-shifted arguments of every theta factor in the M and D matrices
        the identities use (including the inverse-direction matrices)."""
        q = self.nome.q
        a, k, t, b, c = self.a, self.k, self.t_tilde, self.b, self.c
        wide = np.array(
            [a, k, t, k / a, a / k, a / t, t / a, k / t, t / k, q * a, q * k, q * t],
            dtype=complex,
        )
        narrow = np.array(
            [q, b, c, q * t / b, q * t / c, a * q / b, a * q / c,
             t * q / b, t * q / c, k * b / t, k * c / t],
            dtype=complex,
        )
        shifts_wide = q ** np.arange(2 * self.N + 1)
        shifts_narrow = q ** np.arange(self.N + 1)
        return np.concatenate(
            [np.outer(wide, shifts_wide).ravel(), np.outer(narrow, shifts_narrow).ravel()]
        )

    @classmethod
    def from_y(cls, a, k, t_tilde, y, N, nome: NomePair) -> "DiscreteParams":
        b, c = derive_bc(t_tilde, a, k, y, nome)
        return cls(a=complex(a), k=complex(k), t_tilde=complex(t_tilde),
                   b=b, c=c, y=complex(y), N=int(N), nome=nome)


def _guarded_pochhammer(z, n: int, nome: NomePair, label: str) -> complex:
    """theta(z; p)_n for n >= 0 with the pole guard applied to each factor
    (a product of many small factors is fine; a single vanishing one is not)."""
    if n == 0:
        return 1.0 + 0j
    factors = np.asarray(theta(complex(z) * nome.q ** np.arange(n), nome.p, nome.trunc),
                         dtype=complex)
    small = np.abs(factors).min()
    if small < THETA_GUARD:
        raise DegenerateParameterError(f"a factor of {label} is {small:.3e}, under the guard")
    return complex(np.prod(factors))


def m_entry(N: int, m: int, a, k, nome: NomePair) -> complex:
    """Single entry M[N, m](a, k); exactly 0 for m > N."""
    if m < 0 or N < 0:
        raise DomainError("indices must be non-negative")
    if m > N:
        return 0j
    num = elliptic_pochhammer(k, N + m, nome) * elliptic_pochhammer(k / a, N - m, nome)
    den_qa = _guarded_pochhammer(nome.q * a, N + m, nome, "theta(qa)_{N+m}")
    den_q = _guarded_pochhammer(nome.q, N - m, nome, "theta(q)_{N-m}")
    th_den = complex(theta(a, nome.p, nome.trunc))
    _guard_scalar(th_den, "theta(a; p)")
    if m == 0:
        th_ratio = 1.0
    else:
        th_ratio = complex(theta(a * nome.q ** (2 * m), nome.p, nome.trunc)) / th_den
    return num / (den_qa * den_q) * th_ratio * a ** (N - m)


def _guard_scalar(val, label):
    if abs(val) < THETA_GUARD:
        raise DegenerateParameterError(f"{label} = {val} is under the guard threshold")


@dataclass(frozen=True)
class BaileyMatrix:
    """Dense lower-triangular realization of M[N, m](a, k), entries immutable."""

    entries: np.ndarray
    a: complex
    k: complex

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other):
        if isinstance(other, BaileyMatrix):
            return self.entries @ other.entries
        return self.entries @ other


def build_M(N: int, a, k, nome: NomePair) -> BaileyMatrix:
    """Assemble the (N+1) x (N+1) matrix M(a, k); upper entries are exact zeros.

    Theta factors shared between entries are evaluated once per q-shift and
    combined through cumulative products.
    """
    a, k = complex(a), complex(k)
    q = nome.q
    try:
        shifts = q ** np.arange(max(2 * N, 1))
        fac_qa = np.asarray(theta(q * a * shifts, nome.p, nome.trunc), dtype=complex)
        fac_q = np.asarray(theta(q * shifts, nome.p, nome.trunc), dtype=complex)
        poch_k = theta_pochhammer_sequence(k, 2 * N, nome)
        poch_ka = theta_pochhammer_sequence(k / a, 2 * N, nome)
        th_a2m = np.asarray(
            theta(a * q ** (2 * np.arange(N + 1)), nome.p, nome.trunc), dtype=complex
        ).reshape(N + 1)
    except Exception as exc:
        raise DegenerateParameterError(f"build_M(N={N}, a={a}, k={k}): {exc}") from exc
    for fac, label in ((fac_qa[: 2 * N], "theta(qa q^j)"), (fac_q[: 2 * N], "theta(q q^j)")):
        if fac.size and np.min(np.abs(fac)) < THETA_GUARD:
            raise DegenerateParameterError(f"build_M(N={N}): a factor of {label} is under guard")
    _guard_scalar(th_a2m[0], "theta(a; p)")
    poch_qa = np.concatenate([[1.0], np.cumprod(fac_qa[: 2 * N])])
    poch_q = np.concatenate([[1.0], np.cumprod(fac_q[: 2 * N])])
    # the m = 0 ratio must be exactly 1 (numpy's complex division does not
    # guarantee x/x == 1), so the diagonal corner entries stay exact
    th_ratio = np.empty(N + 1, dtype=complex)
    th_ratio[0] = 1.0
    th_ratio[1:] = th_a2m[1:] / th_a2m[0]
    ent = np.zeros((N + 1, N + 1), dtype=complex)
    for n in range(N + 1):
        m = np.arange(n + 1)
        ent[n, : n + 1] = (
            poch_k[n + m] * poch_ka[n - m] / (poch_qa[n + m] * poch_q[n - m])
            * th_ratio[m] * a ** (n - m)
        )
    return BaileyMatrix(entries=ent, a=a, k=k)


def d_entry(m: int, a, b, c, nome: NomePair) -> complex:
    """Diagonal entry D_m(a; b, c)."""
    if m < 0:
        raise DomainError("m must be non-negative")
    if m == 0:
        return 1.0 + 0j
    q = nome.q
    num = elliptic_pochhammer(b, m, nome) * elliptic_pochhammer(c, m, nome)
    den_b = _guarded_pochhammer(a * q / b, m, nome, "theta(aq/b)_m")
    den_c = _guarded_pochhammer(a * q / c, m, nome, "theta(aq/c)_m")
    return num / (den_b * den_c) * (a * q / (b * c)) ** m


@dataclass(frozen=True)
class DiagonalOp:
    """Diagonal matrix D(a; b, c); off-diagonal entries implicitly zero, D_0 = 1."""

    diag: np.ndarray
    a: complex
    b: complex
    c: complex

    def __post_init__(self):
        self.diag.setflags(write=False)

    @property
    def size(self) -> int:
        return self.diag.shape[0]

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.diag)


def build_D(N: int, a, b, c, nome: NomePair) -> DiagonalOp:
    diag = np.array([d_entry(m, a, b, c, nome) for m in range(N + 1)], dtype=complex)
    return DiagonalOp(diag=diag, a=complex(a), b=complex(b), c=complex(c))


@dataclass(frozen=True)
class BaileySequence:
    """A length-(N+1) alpha or beta column of a discrete Bailey pair."""

    values: np.ndarray
    role: str = "alpha"

    def __post_init__(self):
        if self.role not in ("alpha", "beta"):
            raise DomainError("role must be 'alpha' or 'beta'")
        self.values.setflags(write=False)


def bailey_transform(
    alpha: BaileySequence,
    beta: BaileySequence,
    params: DiscreteParams,
    input_tol: float = 1e-10,
):
    """One step of the discrete Bailey lemma.

    Given a pair (alpha, beta) with beta = M(a, t)*alpha (checked against
    ``input_tol``), returns the new pair

        alpha' = D(a; b, c) alpha,
        beta'  = D(k; qt/b, qt/c) M(t, k) D(t; b, c) beta,

    which satisfies beta' = M(a, k) alpha' within ~10x the input residual.
    """
    a, k, t, b, c = params.a, params.k, params.t_tilde, params.b, params.c
    q = params.nome.q
    n1 = alpha.values.shape[0]
    if beta.values.shape[0] != n1 or n1 != params.N + 1:
        raise DomainError("sequence lengths must equal N + 1")
    m_at = build_M(params.N, a, t, params.nome)
    pair_res = relative_residual(beta.values, m_at.entries @ alpha.values)
    if pair_res > input_tol:
        raise BaileyPairError(
            f"input pair violates beta = M(a,t) alpha: residual {pair_res:.3e} > {input_tol:.3e}"
        )
    d_abc = build_D(params.N, a, b, c, params.nome)
    d_tbc = build_D(params.N, t, b, c, params.nome)
    d_k = build_D(params.N, k, q * t / b, q * t / c, params.nome)
    m_tk = build_M(params.N, t, k, params.nome)
    alpha_new = BaileySequence(values=d_abc.diag * alpha.values, role="alpha")
    beta_new = BaileySequence(
        values=d_k.diag * (m_tk.entries @ (d_tbc.diag * beta.values)), role="beta"
    )
    return alpha_new, beta_new


def conditioning_amplification(params: DiscreteParams, N: int | None = None) -> float:
    """Worst forward-error amplification of the matrix products the identity
    checks perform: sum_n |terms| / |sum_n terms| for the key-identity left
    side, and sum_n |terms| for the inversion products (whose targets are
    order one).  A draw with amplification A cannot be verified below
    ~(N+1) * eps * A in double precision, whatever the truth of the identity;
    the admissible-parameter sampler rejects such draws like any other
    degeneracy.
    """
    if N is None:
        N = params.N
    nome = params.nome
    a, k, t, b, c = params.a, params.k, params.t_tilde, params.b, params.c
    m_ak = build_M(N, a, k, nome).entries
    m_ta = build_M(N, t, a, nome).entries
    d_abc = build_D(N, a, b, c, nome).diag
    scaled = d_abc[:, None] * m_ta
    lhs = m_ak @ scaled
    lhs_abs = np.abs(m_ak) @ np.abs(scaled)
    tri = np.tril_indices(N + 1)
    amp_key = float(np.max(lhs_abs[tri] / np.maximum(np.abs(lhs[tri]), RESIDUAL_FLOOR)))
    m_ka = build_M(N, k, a, nome).entries
    m_at = build_M(N, a, t, nome).entries
    m_tk = build_M(N, t, k, nome).entries
    m_kt = build_M(N, k, t, nome).entries
    amp_inv = max(
        float(np.max(np.abs(m_ak) @ np.abs(m_ka))),
        float(np.max(np.abs(m_at) @ np.abs(m_ta))),
        float(np.max(np.abs(m_tk) @ np.abs(m_kt))),
    )
    return max(amp_key, amp_inv)


def _matrix_bailey_sides(params: DiscreteParams, N: int):
    """Both sides of the key identity as dense matrices.

    Association order: LHS scales M(t,a) rows by D(a;b,c) then left-multiplies
    by M(a,k); RHS scales M(t,k) columns by D(t;b,c) then rows by D(k;...).
    The two sides share no intermediate results.
    """
    a, k, t, b, c = params.a, params.k, params.t_tilde, params.b, params.c
    q = params.nome.q
    nome = params.nome
    m_ak = build_M(N, a, k, nome)
    d_abc = build_D(N, a, b, c, nome)
    m_ta = build_M(N, t, a, nome)
    lhs = m_ak.entries @ (d_abc.diag[:, None] * m_ta.entries)
    d_k = build_D(N, k, q * t / b, q * t / c, nome)
    m_tk = build_M(N, t, k, nome)
    d_tbc = build_D(N, t, b, c, nome)
    rhs = d_k.diag[:, None] * (m_tk.entries * d_tbc.diag[None, :])
    return lhs, rhs


def verify_matrix_bailey(params: DiscreteParams, N: int | None = None, tolerance: float = 1e-9) -> VerificationReport:
    """Check M(a,k) D(a;b,c) M(t,a) = D(k;qt/b,qt/c) M(t,k) D(t;b,c) entrywise."""
    if N is None:
        N = params.N
    start = time.perf_counter()
    lhs, rhs = _matrix_bailey_sides(params, N)
    residual = relative_residual(lhs, rhs)
    idx = _argmax_residual(lhs, rhs)
    return VerificationReport(
        identity="matrix-bailey",
        params=_param_dict(params, N=N),
        lhs=complex(lhs[idx]),
        rhs=complex(rhs[idx]),
        residual=residual,
        tolerance=tolerance,
        settings={"N": N},
        wall_time_s=time.perf_counter() - start,
    )


def verify_coxeter(params: DiscreteParams, N: int | None = None, tolerance: float = 1e-9) -> VerificationReport:
    """Check the twisted Coxeter relations S1^2 = S2^2 = 1 and S1 S2 S1 = S2 S1 S2.

    The generators act on the triple (t, a, k) with S1 = M(first, second) and
    S2 = D(first; b, c); the twisted product S_i S_j = S_i(s_j u) S_j(u) is
    evaluated by carrying (b, c) through the permutations: swapping the first
    two slots leaves (b, c) fixed, swapping the last two maps (b, c) to
    (q*first/c, q*first/b).  The cubic relation is evaluated through the same
    code path as :func:`verify_matrix_bailey`, so the two residuals agree
    bit for bit on identical draws.
    """
    if N is None:
        N = params.N
    start = time.perf_counter()
    a, k, t, b, c = params.a, params.k, params.t_tilde, params.b, params.c
    q = params.nome.q
    nome = params.nome

    # S1^2 = M(a, t) M(t, a)
    s1_sq = build_M(N, a, t, nome).entries @ build_M(N, t, a, nome).entries
    res_s1 = identity_deviation(s1_sq)

    # S2^2 = D(t; qt/c, qt/b) D(t; b, c)
    d_left = build_D(N, t, q * t / c, q * t / b, nome)
    d_right = build_D(N, t, b, c, nome)
    s2_sq = np.diag(d_left.diag * d_right.diag)
    res_s2 = identity_deviation(s2_sq)

    lhs, rhs = _matrix_bailey_sides(params, N)
    res_cubic = relative_residual(lhs, rhs)

    residual = max(res_s1, res_s2, res_cubic)
    return VerificationReport(
        identity="coxeter",
        params=_param_dict(params, N=N),
        lhs=complex(lhs[_argmax_residual(lhs, rhs)]),
        rhs=complex(rhs[_argmax_residual(lhs, rhs)]),
        residual=residual,
        tolerance=tolerance,
        settings={"N": N},
        details={
            "s1_squared_residual": res_s1,
            "s2_squared_residual": res_s2,
            "cubic_residual": res_cubic,
        },
        wall_time_s=time.perf_counter() - start,
    )


def bressoud_limit_check(N: int, a, k, q, tolerance: float = 1e-6) -> VerificationReport:
    """Confirm M(a, k) converges to its p = 0 evaluation as p -> 0.

    Evaluates the matrix at p in {1e-4, 1e-6, 1e-8}, Richardson-extrapolates
    linearly in p, and compares both the extrapolation and the smallest-p
    matrix against the p = 0 matrix (every theta collapsed to 1 - z).
    """
    if not (isinstance(q, (int, float)) and 0 < q < 1):
        raise DomainError("bressoud_limit_check expects real q in (0, 1)")
    start = time.perf_counter()
    p_values = (1e-4, 1e-6, 1e-8)
    mats = [build_M(N, a, k, NomePair(p, q)).entries for p in p_values]
    m_zero = build_M(N, a, k, NomePair(0.0, q)).entries
    # two Richardson steps with ratio 100 kill the O(p) and O(p^2) terms
    a1 = (100.0 * mats[1] - mats[0]) / 99.0
    a1b = (100.0 * mats[2] - mats[1]) / 99.0
    extrap = (1e4 * a1b - a1) / (1e4 - 1.0)
    res_extrap = relative_residual(extrap, m_zero)
    res_small = relative_residual(mats[2], m_zero)
    residual = max(res_extrap, res_small)
    return VerificationReport(
        identity="bressoud-limit",
        params={"N": N, "a": complex(a), "k": complex(k), "q": float(q)},
        lhs=complex(mats[2][N, 0]),
        rhs=complex(m_zero[N, 0]),
        residual=residual,
        tolerance=tolerance,
        settings={"p_values": list(p_values)},
        details={"extrapolation_residual": res_extrap, "smallest_p_residual": res_small},
        wall_time_s=time.perf_counter() - start,
    )


def _argmax_residual(lhs: np.ndarray, rhs: np.ndarray):
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-300)
    return np.unravel_index(np.argmax(np.abs(lhs - rhs) / scale), lhs.shape)


def _param_dict(params: DiscreteParams, **extra):
    d = {
        "a": params.a,
        "k": params.k,
        "t_tilde": params.t_tilde,
        "b": params.b,
        "c": params.c,
        "y": params.y,
        "p": params.nome.p,
        "q": params.nome.q,
    }
    d.update(extra)
    return d
