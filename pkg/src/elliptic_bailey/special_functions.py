"""Elliptic special functions: q-Pochhammer products, the short Jacobi theta
function, the elliptic gamma function and elliptic Pochhammer symbols.

Conventions
-----------
With two nomes ``|p| < 1``, ``|q| < 1``:

    (z; q)_inf      = prod_{j>=0} (1 - z q^j)
    theta(z; p)     = (z; p)_inf (p/z; p)_inf
    Gamma(z; p, q)  = prod_{j,k>=0} (1 - p^{j+1} q^{k+1} / z) / (1 - z p^j q^k)
    theta(z; p)_n   = prod_{j=0}^{n-1} theta(z q^j; p)            for n > 0,
                      1 / prod_{j=1}^{-n} theta(z q^{-j}; p)      for n < 0.

Gamma is accumulated in log space over the rectangular index range
j <= J_p, k <= J_q, with the orders chosen adaptively from the geometric tail
bounds of the two bases; this avoids overflow for large |z| and gives a
controlled truncation error.  All functions accept scalars or numpy arrays in
``z`` and are pure; the default floating type is hardware complex128 (unit
roundoff ~1e-16).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PoleProximityError, DegenerateParameterError, TruncationLimitError

__all__ = [
    "TruncationPolicy",
    "NomePair",
    "qpochhammer_inf",
    "theta",
    "elliptic_gamma",
    "elliptic_pochhammer",
    "theta_pochhammer_sequence",
    "gamma_residue_constant",
    "gamma_quadratic_check",
    "gamma_truncation_orders",
    "POLE_GUARD_FACTOR",
    "THETA_GUARD",
]

# |1 - z p^j q^k| < POLE_GUARD_FACTOR * |z| marks z as numerically on the pole lattice.
POLE_GUARD_FACTOR = 1e-13
# |theta| below this in any denominator marks the parameter set as degenerate.
THETA_GUARD = 1e-10


@dataclass(frozen=True)
class TruncationPolicy:
    """How infinite products are truncated.

    In ``adaptive`` mode the truncation order J is the smallest integer with
    ``C * b**J < target_rel_tol`` where ``b`` is the base modulus and ``C`` the
    tail-bound constant documented in :func:`_qpoch_order` /
    :func:`_gamma_order`.  In ``fixed_terms`` mode exactly ``max_terms``
    product factors are used.
    """

    target_rel_tol: float = 1e-14
    max_terms: int = 500_000
    mode: str = "adaptive"

    def __post_init__(self):
        if self.mode not in ("adaptive", "fixed_terms"):
            raise DomainError(f"unknown truncation mode {self.mode!r}")
        if self.target_rel_tol <= 0 or self.max_terms < 1:
            raise DomainError("target_rel_tol must be positive and max_terms >= 1")


DEFAULT_POLICY = TruncationPolicy()


def _qpoch_order(base_mod: float, scale: float, policy: TruncationPolicy) -> int:
    """Truncation order for (z; b)_inf.

    Tail bound: |log prod_{j>=J} (1 - z b^j)| <= 2 |z| b^J / (1 - b) for
    |z| b^J < 1/2, so C = 2 max(scale, 1) / (1 - b).
    """
    if policy.mode == "fixed_terms":
        return policy.max_terms
    if base_mod == 0.0:
        return 1
    c = 2.0 * max(scale, 1.0) / (1.0 - base_mod)
    j = max(1, int(math.ceil(math.log(policy.target_rel_tol / c) / math.log(base_mod))))
    while c * base_mod**j >= policy.target_rel_tol:
        j += 1
    if j > policy.max_terms:
        raise TruncationLimitError(
            f"q-Pochhammer needs {j} terms (|base|={base_mod:g}), cap is {policy.max_terms}"
        )
    return j


def _qpoch_raw(z: np.ndarray, base: complex, n_terms: int) -> np.ndarray:
    """prod_{j=0}^{n_terms-1} (1 - z base^j), vectorized over z."""
    powers = base ** np.arange(n_terms)
    return np.prod(1.0 - z[..., None] * powers, axis=-1)


def qpochhammer_inf(z, base, policy: TruncationPolicy = DEFAULT_POLICY):
    """Infinite q-Pochhammer symbol (z; base)_inf, truncated per policy.

    The relative truncation error is below ``policy.target_rel_tol`` with the
    tail constant C = 2 max(|z|, 1)/(1 - |base|).  ``z`` may be a scalar or an
    array.  Raises :class:`DomainError` for |base| >= 1.
    """
    base = complex(base)
    if abs(base) >= 1.0:
        raise DomainError(f"q-Pochhammer base must satisfy |base| < 1, got |base|={abs(base):g}")
    z_arr = np.asarray(z, dtype=complex)
    if base == 0.0:
        out = 1.0 - z_arr
        return out if z_arr.ndim else complex(out)
    scale = float(np.max(np.abs(z_arr))) if z_arr.size else 1.0
    n = _qpoch_order(abs(base), scale, policy)
    out = _qpoch_raw(z_arr, base, n)
    return out if z_arr.ndim else complex(out)


def theta(z, p, policy: TruncationPolicy = DEFAULT_POLICY):
    """Short Jacobi theta function theta(z; p) = (z; p)_inf (p/z; p)_inf.

    Zeros sit exactly on z = p^j, j in Z.  Raises :class:`DomainError` on
    z = 0 or |p| >= 1.
    """
    p = complex(p)
    if abs(p) >= 1.0:
        raise DomainError(f"theta nome must satisfy |p| < 1, got |p|={abs(p):g}")
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr == 0):
        raise DomainError("theta(z; p) requires z != 0")
    if p == 0.0:
        out = 1.0 - z_arr
        return out if z_arr.ndim else complex(out)
    scale = float(np.max(np.maximum(np.abs(z_arr), abs(p) / np.abs(z_arr))))
    n = _qpoch_order(abs(p), scale, policy)
    out = _qpoch_raw(z_arr, p, n) * _qpoch_raw(p / z_arr, p, n)
    return out if z_arr.ndim else complex(out)


class NomePair:
    """The two base parameters (p, q) with a truncation policy and cached
    derived constants (p; p)_inf, (q; q)_inf and kappa = (p;p)_inf (q;q)_inf / (4 pi i).

    Immutable after construction; instances are safe to share across threads
    (the internal lattice cache only ever fills in identical values).
    """

    __slots__ = ("p", "q", "trunc", "_pp_inf", "_qq_inf", "_lattice_cache")

    def __init__(self, p, q, trunc: TruncationPolicy = DEFAULT_POLICY):
        p, q = complex(p), complex(q)
        if abs(p) >= 1.0 or abs(q) >= 1.0:
            raise DomainError(f"nomes must satisfy |p|, |q| < 1, got |p|={abs(p):g}, |q|={abs(q):g}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "trunc", trunc)
        object.__setattr__(self, "_pp_inf", qpochhammer_inf(p, p, trunc))
        object.__setattr__(self, "_qq_inf", qpochhammer_inf(q, q, trunc))
        object.__setattr__(self, "_lattice_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError("NomePair is immutable")

    def __repr__(self):
        return f"NomePair(p={self.p!r}, q={self.q!r})"

    def __eq__(self, other):
        return (
            isinstance(other, NomePair)
            and self.p == other.p
            and self.q == other.q
            and self.trunc == other.trunc
        )

    def __hash__(self):
        return hash((self.p, self.q, self.trunc))

    @property
    def pp_inf(self) -> complex:
        """(p; p)_inf."""
        return self._pp_inf

    @property
    def qq_inf(self) -> complex:
        """(q; q)_inf."""
        return self._qq_inf

    @property
    def kappa(self) -> complex:
        """(p;p)_inf (q;q)_inf / (4 pi i), the prefactor of the integral transform."""
        return self._pp_inf * self._qq_inf / (4j * math.pi)

    def swapped(self) -> "NomePair":
        """The pair with p and q exchanged (for base-symmetry checks)."""
        return NomePair(self.q, self.p, self.trunc)

    def gamma_lattice(self, order_p: int, order_q: int) -> np.ndarray:
        """Flattened values p^j q^k over the rectangle j <= order_p, k <= order_q."""
        key = (order_p, order_q)
        w = self._lattice_cache.get(key)
        if w is None:
            pj = self.p ** np.arange(order_p + 1)
            qk = self.q ** np.arange(order_q + 1)
            w = np.outer(pj, qk).ravel()
            self._lattice_cache[key] = w
        return w


def _gamma_order(nome: NomePair, scale: float) -> tuple[int, int]:
    """Truncation orders (J_p, J_q) for the double product of Gamma(z; p, q).

    The rectangle j <= J_p, k <= J_q leaves two geometric tails; each is
    bounded by C * b^{J+1} with C = (|z| + |pq/z| + 1) / ((1-|p|)(1-|q|)),
    and each order is the smallest making its tail < target_rel_tol / 2.
    """
    policy = nome.trunc
    ap, aq = abs(nome.p), abs(nome.q)
    if policy.mode == "fixed_terms":
        side = max(int(math.isqrt(policy.max_terms)) - 1, 0)
        return side, side
    c = (scale + 1.0) / ((1.0 - ap) * (1.0 - aq))
    half = policy.target_rel_tol / 2.0

    def order_for(base):
        if base == 0.0:
            return 0
        j = max(1, int(math.ceil(math.log(half / c) / math.log(base))))
        while c * base ** (j + 1) >= half:
            j += 1
        return j

    jp, jq = order_for(ap), order_for(aq)
    if (jp + 1) * (jq + 1) > policy.max_terms:
        raise TruncationLimitError(
            f"elliptic gamma needs {(jp + 1) * (jq + 1)} terms, cap is {policy.max_terms}"
        )
    return jp, jq


def _log1m(u: np.ndarray) -> np.ndarray:
    """log(1 - u), accurate for small |u| (series below 1e-4, error < |u|^5).

    The series is the bulk path: on a geometric lattice only the leading few
    terms per row exceed the cutoff, so the exact log runs on a small subset.
    """
    out = -u * (1.0 + u * (0.5 + u * (1.0 / 3.0 + 0.25 * u)))
    big = np.abs(u) >= 1e-4
    if np.any(big):
        out[big] = np.log(1.0 - u[big])
    return out


_GAMMA_CHUNK = 2_000_000  # max elements of the (z, lattice) product grid per block


def _gamma_vec(z: np.ndarray, nome: NomePair, guarded: bool = True) -> np.ndarray:
    """Gamma(z; p, q) on a flat complex array, log-space accumulation."""
    pq = nome.p * nome.q
    az = np.abs(z)
    if np.any(az == 0):
        raise DomainError("elliptic gamma is undefined at z = 0")
    scale = float(np.max(np.maximum(az, abs(pq) / az)))
    jp, jq = _gamma_order(nome, scale)
    w = nome.gamma_lattice(jp, jq)
    out = np.empty_like(z)
    step = max(1, _GAMMA_CHUNK // max(w.size, 1))
    for lo in range(0, z.size, step):
        zb = z[lo : lo + step, None]
        den_u = zb * w[None, :]
        if guarded:
            gap = np.abs(1.0 - den_u).min(axis=1)
            bad = gap < POLE_GUARD_FACTOR * np.abs(zb[:, 0])
            if np.any(bad):
                zbad = zb[bad, 0][0]
                raise PoleProximityError(
                    f"z={zbad} is within guard distance of the pole lattice p^-j q^-k"
                )
        num_u = (pq * w)[None, :] / zb
        out[lo : lo + step] = np.exp(np.sum(_log1m(num_u) - _log1m(den_u), axis=1))
    return out


def elliptic_gamma(z, nome: NomePair):
    """Elliptic gamma function Gamma(z; p, q).

    Evaluates the defining double product, which converges for every z off the
    pole lattice z = p^{-j} q^{-k}, j, k >= 0.  Raises
    :class:`PoleProximityError` when a denominator factor is within the guard
    threshold of zero (the caller chose z too close to a pole), and
    :class:`DomainError` at z = 0.
    """
    z_arr = np.asarray(z, dtype=complex)
    out = _gamma_vec(z_arr.ravel(), nome).reshape(z_arr.shape)
    return out if z_arr.ndim else complex(out)


def elliptic_pochhammer(z, n: int, nome: NomePair):
    """Elliptic Pochhammer symbol theta(z; p)_n with q-shifted factors.

    Returns prod_{j=0}^{n-1} theta(z q^j; p) for n > 0, the reciprocal product
    prod_{j=1}^{-n} theta(z q^{-j}; p)^{-1} for n < 0, and 1 for n = 0.
    Raises :class:`DegenerateParameterError` if a factor on the n < 0 branch
    vanishes within the guard threshold.
    """
    z = complex(z)
    if n == 0:
        return 1.0 + 0.0j
    if n > 0:
        factors = theta(z * nome.q ** np.arange(n), nome.p, nome.trunc)
        return complex(np.prod(factors))
    factors = theta(z * nome.q ** (-np.arange(1, -n + 1, dtype=float)), nome.p, nome.trunc)
    small = np.abs(factors) < THETA_GUARD
    if np.any(small):
        j = int(np.argmax(small)) + 1
        raise DegenerateParameterError(
            f"theta(z q^-{j}; p) = {factors[j - 1]} is below the division guard"
        )
    return complex(1.0 / np.prod(factors))


def theta_pochhammer_sequence(z, n_max: int, nome: NomePair) -> np.ndarray:
    """[theta(z; p)_0, theta(z; p)_1, ..., theta(z; p)_{n_max}] via a cumulative product."""
    if n_max == 0:
        return np.ones(1, dtype=complex)
    factors = theta(complex(z) * nome.q ** np.arange(n_max), nome.p, nome.trunc)
    out = np.empty(n_max + 1, dtype=complex)
    out[0] = 1.0
    np.cumprod(factors, out=out[1:])
    return out


def gamma_truncation_orders(z, nome: NomePair) -> tuple[int, int]:
    """The (J_p, J_q) truncation orders elliptic_gamma would use at z."""
    z_arr = np.abs(np.asarray(z, dtype=complex))
    scale = float(np.max(np.maximum(z_arr, abs(nome.p * nome.q) / z_arr)))
    return _gamma_order(nome, scale)


def gamma_residue_constant(nome: NomePair) -> complex:
    """lim_{z -> 1} (1 - z) Gamma(z; p, q) = 1 / ((p; p)_inf (q; q)_inf)."""
    return 1.0 / (nome.pp_inf * nome.qq_inf)


def gamma_quadratic_check(z, nome: NomePair) -> float:
    """Relative residual of the quadratic transformation

        Gamma(z^2; p, q) = prod Gamma(s; p, q)  over the eight arguments
        s in {+-z, +-q^{1/2} z, +-p^{1/2} z, +-(pq)^{1/2} z}

    with principal square roots.  Raises :class:`PoleProximityError` if any of
    the nine evaluation points sits on the pole lattice.
    """
    z = complex(z)
    roots = np.array([1.0, np.sqrt(nome.q), np.sqrt(nome.p), np.sqrt(nome.p * nome.q)], dtype=complex)
    args = np.concatenate([roots * z, -roots * z])
    lhs = complex(elliptic_gamma(z * z, nome))
    rhs = complex(np.prod(elliptic_gamma(args, nome)))
    return abs(lhs - rhs) / abs(lhs)
