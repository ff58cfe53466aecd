"""Contour-quadrature realizations of the integral operators and identities.

All integrals are over circles |z| = r, where the trapezoid rule converges
exponentially for integrands analytic in an annulus around the contour.  The
kernel of the elliptic Fourier transform

    [M(t) f](w) = kappa * integral  Gamma(t w^{+-1} z^{+-1}; p, q)
                  / (Gamma(t^2; p, q) Gamma(z^{+-2}; p, q)) f(z) dz/z

is evaluated through the inverted-denominator form 1/Gamma(z^{+-2}) =
theta(z^2; q) theta(z^{-2}; p), which is an entire function of z on the
contour (the identity is asserted independently in the test suite).  On an
equispaced grid z_k = r w^k with w = exp(2 pi i / n), every gamma-factor
argument lies on a scaled copy of the same root-of-unity ring, so each kernel
needs only a handful of length-n gamma evaluations regardless of how many
grid pairs are combined.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstraintViolationError,
    DegenerateParameterError,
    DomainError,
    QuadratureConvergenceError,
)
from .report import RESIDUAL_FLOOR, VerificationReport, relative_residual
from .special_functions import (
    THETA_GUARD,
    NomePair,
    elliptic_gamma,
    elliptic_pochhammer,
    theta,
    _gamma_vec,
)

__all__ = [
    "QuadratureGrid",
    "QuadratureInfo",
    "SymmetricTestFunction",
    "constant_one",
    "z_plus_inverse",
    "designated_poles",
    "gamma_product_function",
    "OperatorParams",
    "circle_integral",
    "apply_M",
    "elliptic_beta_integral",
    "d_factor",
    "star_triangle_residual",
    "deformation_conditioning",
    "contour_deformation_check",
    "finite_difference_M",
    "finite_difference_oracle",
    "residue_matrix_reduction_check",
    "m_inversion_check",
]

DEFAULT_N0 = 64
DEFAULT_NODE_CAP = 16384
DEFAULT_REL_TOL = 1e-10


# --------------------------------------------------------------------------
# grids and the adaptive trapezoid driver
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureGrid:
    """Equispaced nodes z_j = radius * exp(2 pi i j / n) with uniform weights."""

    radius: float
    n_nodes: int

    def __post_init__(self):
        if self.radius <= 0:
            raise DomainError("grid radius must be positive")
        if self.n_nodes < 2 or self.n_nodes & (self.n_nodes - 1):
            raise DomainError("n_nodes must be a power of two >= 2")

    @property
    def nodes(self) -> np.ndarray:
        return self.radius * _roots(self.n_nodes)

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n_nodes, 2.0 * math.pi / self.n_nodes)


@dataclass(frozen=True)
class QuadratureInfo:
    """Convergence metadata of one adaptive integral."""

    n_nodes: int
    converged: bool
    est_error: float


_ROOT_CACHE: dict[int, np.ndarray] = {}


def _roots(n: int) -> np.ndarray:
    r = _ROOT_CACHE.get(n)
    if r is None:
        r = np.exp(2j * math.pi * np.arange(n) / n)
        r.setflags(write=False)
        _ROOT_CACHE[n] = r
    return r


def _ring_sum(values: np.ndarray) -> complex:
    """Trapezoid value of the contour integral (dz/z measure): (2 pi i / n) sum."""
    n = values.shape[-1]
    return 2j * math.pi / n * np.sum(values, axis=-1)


def _drive(eval_at, rel_tol: float, n0: int = DEFAULT_N0, cap: int = DEFAULT_NODE_CAP,
           label: str = "integral"):
    """Double the node count until successive values differ by less than the
    tolerance.  ``eval_at(n)`` returns (value, magnitude_scale); the scale (an
    L1-type norm of the integrand) sets the rounding floor ~eps * scale, which
    is the accuracy limit of the trapezoid sum itself.  Integrals that are
    exactly zero converge through the same floor."""
    prev = None
    n = n0
    while n <= cap:
        val, scale = eval_at(n)
        if prev is not None:
            diff = float(np.max(np.abs(np.asarray(val) - np.asarray(prev))))
            bound = max(
                rel_tol * float(np.max(np.abs(np.asarray(val)))),
                50.0 * np.finfo(float).eps * scale,
                1e-305,
            )
            if diff <= bound:
                return val, QuadratureInfo(n_nodes=n, converged=True, est_error=diff)
        prev = val
        n *= 2
    raise QuadratureConvergenceError(
        f"{label} did not converge by {cap} nodes (a pole may sit too close to the contour)"
    )


def circle_integral(f, grid: QuadratureGrid, rel_tol: float | None = None,
                    max_nodes: int = DEFAULT_NODE_CAP) -> complex:
    """Contour integral of f(z) dz/z over the circle |z| = grid.radius.

    With ``rel_tol`` set, the node count starts at ``grid.n_nodes`` and doubles
    until successive values agree, raising
    :class:`QuadratureConvergenceError` at the cap.
    """
    def eval_at(n):
        z = grid.radius * _roots(n)
        vals = np.asarray(f(z), dtype=complex)
        return _ring_sum(vals), float(np.mean(np.abs(vals))) * 2 * math.pi

    if rel_tol is None:
        val, _ = eval_at(grid.n_nodes)
        return complex(val)
    val, _info = _drive(eval_at, rel_tol, n0=grid.n_nodes, cap=max_nodes)
    return complex(val)


def _offcenter_residue(f, center: complex, radius: float, rel_tol: float,
                       n0: int = 32, cap: int = 4096) -> complex:
    """(1 / 2 pi i) * integral of f(z) dz around a small positively oriented circle."""
    def eval_at(n):
        rim = center + radius * _roots(n)
        vals = np.asarray(f(rim), dtype=complex) * radius * _roots(n)
        return complex(np.sum(vals) / n), float(np.mean(np.abs(vals)))

    val, _ = _drive(eval_at, rel_tol, n0=n0, cap=cap, label="residue circle")
    return complex(val)


# --------------------------------------------------------------------------
# symmetric test functions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetricTestFunction:
    """A function with alpha(z) = alpha(1/z), optional declared simple poles
    z0 q^m (plus implicit reciprocals), and the residues of alpha(z)/z there."""

    fn: object
    name: str = "alpha"
    poles: tuple = ()
    residues: tuple = ()
    annulus: tuple = (0.0, math.inf)

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=complex))

    def check_symmetry(self, rng, samples: int = 20, tol: float = 1e-13) -> float:
        lo = max(self.annulus[0], 0.05)
        hi = min(self.annulus[1], 20.0)
        r = np.exp(rng.uniform(np.log(max(lo, 1e-3)), np.log(hi), samples))
        z = r * np.exp(2j * np.pi * rng.uniform(size=samples))
        dev = np.abs(self(z) - self(1.0 / z))
        worst = float(np.max(dev))
        if worst > tol:
            raise DomainError(f"{self.name} violates alpha(z) = alpha(1/z): {worst:.3e}")
        return worst

    def check_residues(self, rel_tol: float = 1e-11) -> float:
        """Max relative deviation of declared residues of alpha(z)/z from
        small-circle numerical contour integrals."""
        worst = 0.0
        for pole, res in zip(self.poles, self.residues):
            spacing = min(
                [abs(pole - o) for o in self.poles if o != pole]
                + [abs(pole - 1.0 / o) for o in self.poles]
                + [abs(abs(pole) - 1.0) + 1.0]
            )
            rho = 0.25 * min(spacing, abs(pole))
            got = _offcenter_residue(lambda z: self(z) / z, pole, rho, rel_tol=1e-12)
            worst = max(worst, abs(got - res) / max(abs(res), RESIDUAL_FLOOR))
        if worst > rel_tol:
            raise DomainError(f"{self.name} declared residues deviate by {worst:.3e}")
        return worst


def constant_one() -> SymmetricTestFunction:
    return SymmetricTestFunction(fn=lambda z: np.ones_like(z), name="one")


def z_plus_inverse() -> SymmetricTestFunction:
    return SymmetricTestFunction(
        fn=lambda z: z + 1.0 / z, name="z+1/z", annulus=(0.0, math.inf)
    )


def designated_poles(z0, n_poles: int, q, coeffs) -> SymmetricTestFunction:
    """alpha(z) = sum_m c_m [zeta/(z - zeta) + zeta z/(1 - zeta z)] with
    zeta = z0 q^m; exactly symmetric, simple poles at zeta and 1/zeta, and
    Res_{z=zeta} alpha(z)/z = c_m."""
    z0, q = complex(z0), complex(q)
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (n_poles + 1,):
        raise DomainError("need one coefficient per pole, m = 0..N")
    zetas = z0 * q ** np.arange(n_poles + 1)
    if np.max(np.abs(zetas)) >= 1.0:
        raise DomainError("designated poles must satisfy |z0 q^m| < 1")

    def fn(z):
        zc = z[..., None]
        blocks = zetas / (zc - zetas) + zetas * zc / (1.0 - zetas * zc)
        return np.sum(coeffs * blocks, axis=-1)

    return SymmetricTestFunction(
        fn=fn,
        name=f"poles@{z0:.3g}",
        poles=tuple(complex(v) for v in zetas),
        residues=tuple(complex(c) for c in coeffs),
        annulus=(abs(z0), 1.0 / abs(z0)),
    )


def gamma_product_function(params, nome: NomePair) -> SymmetricTestFunction:
    """alpha(z) = prod_j Gamma(u_j z; p, q) Gamma(u_j / z; p, q), |u_j| < 1;
    analytic in the annulus (max|u_j|, 1/max|u_j|)."""
    params = tuple(complex(u) for u in params)
    if any(abs(u) >= 1 for u in params):
        raise DomainError("gamma-product parameters must have modulus < 1")
    top = max(abs(u) for u in params)

    def fn(z):
        out = np.ones_like(z)
        for u in params:
            out = out * elliptic_gamma(u * z, nome) * elliptic_gamma(u / z, nome)
        return out

    return SymmetricTestFunction(fn=fn, name="gamma-product", annulus=(top, 1.0 / top))


# --------------------------------------------------------------------------
# operator parameters and kernel machinery
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorParams:
    """Operator and spectator parameters (t, s, w, x, y) for the integral
    operators; ``x`` anchors the intermediate contour and stays on |x| = 1."""

    t: complex = 0.0
    s: complex = 0.0
    w: complex = 1.0
    x: complex = 1.0
    y: complex = 1.0

    def validate_star_triangle(self, nome: NomePair, margin: float = 1.0):
        t, s, w, y = self.t, self.s, self.w, self.y
        root = np.sqrt(complex(nome.p * nome.q))
        checks = {
            "|t|": abs(t),
            "|s|": abs(s),
            "|s w|": abs(s * w),
            "|s / w|": abs(s / w),
            "|st w|": abs(s * t * w),
            "|st / w|": abs(s * t / w),
            "|sqrt(pq) y / (s t)|": abs(root * y / (s * t)),
            "|sqrt(pq) / (y s t)|": abs(root / (y * s * t)),
        }
        for label, value in checks.items():
            if value >= margin:
                raise ConstraintViolationError(f"{label} = {value:.4f} >= {margin}")


def _gamma_ring(scale: complex, n: int, nome: NomePair) -> np.ndarray:
    """Gamma(scale * w^m; p, q) for the n-th roots of unity w^m."""
    return _gamma_vec(scale * _roots(n), nome)


def _theta_rings(n: int, radius: float, nome: NomePair):
    """theta((r w^m)^2-type arrays used by 1/Gamma(z^{+-2}) on the grid:
    returns dden[k] = theta(z_k^2; q) * theta(z_k^{-2}; p)."""
    idx = (2 * np.arange(n)) % n
    tq = np.asarray(theta(radius**2 * _roots(n), nome.q, nome.trunc), dtype=complex)
    tp = np.asarray(theta(radius**-2 * _roots(n), nome.p, nome.trunc), dtype=complex)
    return tq[idx] * tp[(-idx) % n]


def _pair_ring(scale: complex, n: int, nome: NomePair) -> np.ndarray:
    """P[m] = Gamma(scale w^m) Gamma(scale w^{-m}), the z^{+-1} pair factor."""
    g = _gamma_ring(scale, n, nome)
    return g * g[(-np.arange(n)) % n]


def _m_kernel_rows(t: complex, x_scale: complex, n: int, radius: float, nome: NomePair,
                   row_chunk: int = 256):
    """Kernel matrix K[j, k] = Gamma(t x_j z_k^{+-1}) Gamma((t / x_j) z_k^{+-1})
    for x_j = x_scale * w^j and z_k = radius * w^k, yielded in row blocks.

    Gamma(t x_j z_k) = G1[(j + k) mod n] with G1[m] = Gamma(t x_scale radius w^m),
    and similarly for the other three factors, so four length-n evaluations
    cover the whole n x n kernel.
    """
    g_a = _gamma_ring(t * x_scale * radius, n, nome)        # t x z
    g_b = _gamma_ring(t * x_scale / radius, n, nome)        # t x / z
    g_c = _gamma_ring(t * radius / x_scale, n, nome)        # t z / x
    g_d = _gamma_ring(t / (x_scale * radius), n, nome)      # t / (x z)
    k_idx = np.arange(n)
    for lo in range(0, n, row_chunk):
        j = np.arange(lo, min(lo + row_chunk, n))
        plus = (j[:, None] + k_idx[None, :]) % n
        minus = (j[:, None] - k_idx[None, :]) % n
        yield j, g_a[plus] * g_b[minus] * g_c[(-minus) % n] * g_d[(-plus) % n]


def _m_apply_grid(t: complex, n: int, radius: float, weighted_alpha: np.ndarray,
                  nome: NomePair) -> np.ndarray:
    """[M(t) alpha](x_j) for every x_j on the same n-grid (radius 1), given the
    vector weighted_alpha[k] = dden[k] * alpha(z_k); includes kappa and measure."""
    out = np.empty(n, dtype=complex)
    for j, rows in _m_kernel_rows(t, 1.0, n, radius, nome):
        out[j] = rows @ weighted_alpha
    g_t2 = complex(elliptic_gamma(t * t, nome))
    return nome.kappa * 2j * math.pi / n * out / g_t2


def _m_single(t: complex, w: complex, n: int, radius: float, alpha_vals: np.ndarray,
              dden: np.ndarray, nome: NomePair) -> tuple[complex, float]:
    """[M(t) alpha](w) for a single off-grid spectator w; returns (value, scale)."""
    g_a = _gamma_ring(t * w * radius, n, nome)
    g_b = _gamma_ring(t * w / radius, n, nome)
    g_c = _gamma_ring(t * radius / w, n, nome)
    g_d = _gamma_ring(t / (w * radius), n, nome)
    k = np.arange(n)
    kern = g_a[k] * g_b[(-k) % n] * g_c[k] * g_d[(-k) % n]
    g_t2 = complex(elliptic_gamma(t * t, nome))
    integrand = kern * dden * alpha_vals / g_t2
    scale = float(np.mean(np.abs(integrand))) * 2 * math.pi * abs(complex(nome.kappa))
    return complex(nome.kappa * _ring_sum(integrand)), scale


def apply_M(t, w, alpha: SymmetricTestFunction, nome: NomePair,
            radius: float = 1.0, rel_tol: float = DEFAULT_REL_TOL,
            n0: int = DEFAULT_N0, max_nodes: int = DEFAULT_NODE_CAP,
            _info_out: dict | None = None) -> complex:
    """Elliptic Fourier transform beta(w) = [M(t) alpha](w) by adaptive
    trapezoid quadrature on the circle |z| = radius.

    Requires the contour to separate the kernel pole ladders:
    max(|t w|, |t / w|) < radius and radius * max(|t w|, |t / w|) < 1.
    """
    t, w = complex(t), complex(w)
    top = max(abs(t * w), abs(t / w))
    if not (top < radius and radius * top < 1.0):
        raise ConstraintViolationError(
            f"contour |z| = {radius} does not separate kernel poles: |t w^+-1| max = {top:.4f}"
        )

    def eval_at(n):
        z = radius * _roots(n)
        dden = _theta_rings(n, radius, nome)
        vals = np.asarray(alpha(z), dtype=complex)
        return _m_single(t, w, n, radius, vals, dden, nome)

    val, info = _drive(eval_at, rel_tol, n0=n0, cap=max_nodes, label="apply_M")
    if _info_out is not None:
        _info_out["quadrature"] = info
    return val


def d_factor(s, y, w, nome: NomePair) -> complex:
    """D(s; y, w) = Gamma(sqrt(pq) s^{-1} y^{+-1} w^{+-1}; p, q), four factors,
    principal square root."""
    s, y, w = complex(s), complex(y), complex(w)
    root = complex(np.sqrt(complex(nome.p * nome.q)))
    args = np.array([root * y * w / s, root * y / (w * s),
                     root * w / (y * s), root / (y * w * s)])
    return complex(np.prod(elliptic_gamma(args, nome)))


# --------------------------------------------------------------------------
# the elliptic beta integral
# --------------------------------------------------------------------------

def elliptic_beta_integral(t1, t2, t3, t4, t5, nome: NomePair,
                           rel_tol: float = DEFAULT_REL_TOL,
                           tolerance: float = 1e-9,
                           n0: int = DEFAULT_N0,
                           max_nodes: int = DEFAULT_NODE_CAP) -> VerificationReport:
    """Verify the beta evaluation: with t6 = pq / (t1 ... t5) and |t_j| < 1 for
    all six parameters,

        kappa * integral prod_j Gamma(t_j z^{+-1}) / Gamma(z^{+-2}) dz/z
            = prod_{j<k} Gamma(t_j t_k).

    The left side is quadrature on |z| = 1, the right side a product of
    fifteen gamma values; the report carries the relative residual.
    """
    start = time.perf_counter()
    ts = [complex(v) for v in (t1, t2, t3, t4, t5)]
    prod5 = np.prod(ts)
    t6 = complex(nome.p * nome.q / prod5)
    ts.append(t6)
    for j, v in enumerate(ts):
        if abs(v) >= 1.0:
            raise ConstraintViolationError(f"|t{j + 1}| = {abs(v):.4f} >= 1")

    def eval_at(n):
        dden = _theta_rings(n, 1.0, nome)
        kern = np.ones(n, dtype=complex)
        for v in ts:
            kern = kern * _pair_ring(v, n, nome)
        integrand = kern * dden
        scale = float(np.mean(np.abs(integrand))) * 2 * math.pi * abs(complex(nome.kappa))
        return complex(nome.kappa * _ring_sum(integrand)), scale

    lhs, info = _drive(eval_at, rel_tol, n0=n0, cap=max_nodes, label="beta integral")
    pairs = np.array([ts[i] * ts[j] for i in range(6) for j in range(i + 1, 6)])
    rhs = complex(np.prod(elliptic_gamma(pairs, nome)))
    residual = relative_residual(lhs, rhs)
    return VerificationReport(
        identity="beta-integral",
        params={f"t{j + 1}": ts[j] for j in range(6)} | {"p": nome.p, "q": nome.q},
        lhs=lhs,
        rhs=rhs,
        residual=residual,
        tolerance=tolerance,
        settings={"n_nodes": info.n_nodes, "quad_rel_tol": rel_tol},
        wall_time_s=time.perf_counter() - start,
    )


# --------------------------------------------------------------------------
# the star-triangle relation
# --------------------------------------------------------------------------

def star_triangle_residual(s, t, y, spectators, alpha: SymmetricTestFunction,
                           nome: NomePair, rel_tol: float = 1e-9,
                           tolerance: float = 1e-8,
                           n0: int = DEFAULT_N0,
                           max_nodes: int = DEFAULT_NODE_CAP,
                           margin: float = 1.0) -> VerificationReport:
    """Verify M(s) D(st; y, .) M(t) = D(t; y, w) M(st) D(s; y, .) applied to
    ``alpha`` at each spectator point w.

    The left side is a nested double quadrature (the inner M(t)-image is
    evaluated on the outer grid in one pass via the shared-ring kernel); the
    right side is a single quadrature of the D-weighted test function.  The
    residual is the worst relative deviation over the spectator set.
    """
    start = time.perf_counter()
    s, t, y = complex(s), complex(t), complex(y)
    spectators = [complex(w) for w in spectators]
    root = complex(np.sqrt(complex(nome.p * nome.q)))
    for w in spectators:
        OperatorParams(t=t, s=s, w=w, y=y).validate_star_triangle(nome, margin=margin)
    if alpha.poles and max(abs(p) for p in alpha.poles) >= 1.0:
        raise ConstraintViolationError("alpha poles must lie strictly inside the unit circle")

    def eval_at(n):
        z = _roots(n)
        dden = _theta_rings(n, 1.0, nome)
        alpha_vals = np.asarray(alpha(z), dtype=complex)
        j = np.arange(n)

        # LHS: beta1 = M(t) alpha on the grid, D(st; y, x) weight, outer M(s)
        beta1 = _m_apply_grid(t, n, 1.0, dden * alpha_vals, nome)
        u_plus = _pair_ring(root * y / (s * t), n, nome)
        u_minus = _pair_ring(root / (y * s * t), n, nome)
        d_st = u_plus * u_minus
        lhs_weighted = dden * d_st * beta1
        g_s2 = complex(elliptic_gamma(s * s, nome))

        # RHS: single quadrature of D(s; y, z) alpha with the M(st) kernel
        v_plus = _pair_ring(root * y / s, n, nome)
        v_minus = _pair_ring(root / (y * s), n, nome)
        rhs_weighted = dden * v_plus * v_minus * alpha_vals
        g_st2 = complex(elliptic_gamma((s * t) ** 2, nome))

        lhs = np.empty(len(spectators), dtype=complex)
        rhs = np.empty(len(spectators), dtype=complex)
        scale = 0.0
        for i, w in enumerate(spectators):
            sw = _gamma_ring(s * w, n, nome)
            swi = _gamma_ring(s / w, n, nome)
            kern_out = sw[j] * sw[(-j) % n] * swi[j] * swi[(-j) % n]
            lhs[i] = nome.kappa * _ring_sum(kern_out * lhs_weighted) / g_s2
            stw = _gamma_ring(s * t * w, n, nome)
            stwi = _gamma_ring(s * t / w, n, nome)
            kern_rhs = stw[j] * stw[(-j) % n] * stwi[j] * stwi[(-j) % n]
            rhs[i] = d_factor(t, y, w, nome) * nome.kappa * _ring_sum(kern_rhs * rhs_weighted) / g_st2
            scale = max(scale, float(np.mean(np.abs(kern_out * lhs_weighted))))
        return np.concatenate([lhs, rhs]), scale

    both, info = _drive(eval_at, rel_tol, n0=n0, cap=max_nodes, label="star-triangle")
    m = len(spectators)
    lhs, rhs = both[:m], both[m:]
    residual = max(relative_residual(lhs[i], rhs[i]) for i in range(m))
    return VerificationReport(
        identity="star-triangle",
        params={"s": s, "t": t, "y": y, "p": nome.p, "q": nome.q,
                "spectators": spectators, "alpha": alpha.name},
        lhs=complex(lhs[0]),
        rhs=complex(rhs[0]),
        residual=residual,
        tolerance=tolerance,
        settings={"n_nodes": info.n_nodes, "quad_rel_tol": rel_tol},
        details={"per_spectator": [relative_residual(lhs[i], rhs[i]) for i in range(m)]},
        wall_time_s=time.perf_counter() - start,
    )


# --------------------------------------------------------------------------
# Cauchy contour deformation
# --------------------------------------------------------------------------

def _kernel_at(t: complex, x: complex, z, nome: NomePair):
    """Bailey kernel Gamma(t x^{+-1} z^{+-1}) / Gamma(t^2, z^{+-2}) at points z."""
    z = np.asarray(z, dtype=complex)
    num = (
        elliptic_gamma(t * x * z, nome) * elliptic_gamma(t * x / z, nome)
        * elliptic_gamma(t * z / x, nome) * elliptic_gamma(t / (x * z), nome)
    )
    dden = np.asarray(theta(z * z, nome.q, nome.trunc), dtype=complex) * np.asarray(
        theta(z**-2, nome.p, nome.trunc), dtype=complex
    )
    return num * dden / complex(elliptic_gamma(t * t, nome))


def deformation_conditioning(alpha: SymmetricTestFunction, t, x, inner_radius: float | None,
                             nome: NomePair, n_probe: int = 64) -> float:
    """Cheap estimate of the smallest relative residual double precision can
    certify for :func:`contour_deformation_check` at these parameters.

    The deformed-contour integrand grows steeply towards z = 0 while the
    identity value stays at the scale of the unit-circle integral, so the
    trapezoid sum's rounding floor (~eps * mean|integrand|) can dominate; a
    draw with a large estimate is numerically inadmissible, not wrong.
    """
    t, x = complex(t), complex(x)
    pole_lo = min(abs(p) for p in alpha.poles)
    kernel_top = max(abs(t * x), abs(t / x))
    if inner_radius is None:
        inner_radius = max(0.93 * pole_lo, math.sqrt(kernel_top * pole_lo))
    z_in = inner_radius * _roots(n_probe)
    scale_in = float(np.mean(np.abs(_kernel_at(t, x, z_in, nome) * np.asarray(alpha(z_in)))))
    z_t = _roots(n_probe)
    vals_t = _kernel_at(t, x, z_t, nome) * np.asarray(alpha(z_t))
    i_t = abs(complex(nome.kappa * _ring_sum(vals_t)))
    residue_term = 0j
    for pole, res in zip(alpha.poles, alpha.residues):
        residue_term += complex(_kernel_at(t, x, np.asarray([pole]), nome)[0]) * res
    value_scale = max(i_t, abs(4j * math.pi * nome.kappa * residue_term), RESIDUAL_FLOOR)
    floor = 50.0 * float(np.finfo(float).eps) * scale_in * abs(complex(nome.kappa)) * 2 * math.pi
    return floor / value_scale


def contour_deformation_check(alpha: SymmetricTestFunction, t, x, inner_radius: float | None,
                              nome: NomePair, rel_tol: float = DEFAULT_REL_TOL,
                              tolerance: float = 1e-8,
                              n0: int = DEFAULT_N0,
                              max_nodes: int = DEFAULT_NODE_CAP) -> VerificationReport:
    """Verify the Cauchy deformation identity

        integral_T = integral_C + 4 pi i kappa sum_m K(x, z0 q^m) alpha_m

    where the deformed contour C excludes the declared poles z0 q^m of alpha
    and includes their reciprocals.  C is realized as the concentric circle
    |z| = inner_radius plus positively oriented excursions around each
    reciprocal pole (numerical small-circle integrals); alpha_m are the
    declared residues of alpha(z)/z.

    ``inner_radius=None`` places the circle at 0.93 of the innermost pole of
    alpha; the kernel grows steeply towards z = 0, so radii far below the pole
    trade quadrature convergence for cancellation in the trapezoid sum.
    """
    start = time.perf_counter()
    t, x = complex(t), complex(x)
    if not alpha.poles:
        raise DomainError("the deformation check needs a test function with declared poles")
    kernel_top = max(abs(t * x), abs(t / x))
    pole_lo = min(abs(p) for p in alpha.poles)
    pole_hi = max(abs(p) for p in alpha.poles)
    if inner_radius is None:
        inner_radius = max(0.93 * pole_lo, math.sqrt(kernel_top * pole_lo))
    if not (kernel_top < inner_radius < pole_lo and pole_hi < 1.0):
        raise ConstraintViolationError(
            f"radius ordering violated: need max|t x^+-1| = {kernel_top:.3f} < r = "
            f"{inner_radius:.3f} < min|pole| = {pole_lo:.3f} and max|pole| < 1"
        )

    def integral_on(radius):
        def eval_at(n):
            z = radius * _roots(n)
            vals = _kernel_at(t, x, z, nome) * np.asarray(alpha(z), dtype=complex)
            return complex(nome.kappa * _ring_sum(vals)), float(np.mean(np.abs(vals)))

        return _drive(eval_at, rel_tol, n0=n0, cap=max_nodes, label="deformation integral")

    i_t, info_t = integral_on(1.0)
    i_c, info_c = integral_on(inner_radius)

    # excursions of C around each reciprocal pole 1/(z0 q^m)
    recip = [1.0 / p for p in alpha.poles]
    outer_kernel_heads = [1.0 / (t * x), x / t]
    for i, centre in enumerate(recip):
        others = [abs(centre - o) for j, o in enumerate(recip) if j != i]
        others += [abs(centre - h) for h in outer_kernel_heads]
        others += [abs(centre) - 1.0]
        rho = 0.25 * min(others)
        if rho <= 0:
            raise ConstraintViolationError("reciprocal pole excursion radius collapsed")
        val = _offcenter_residue(
            lambda z: _kernel_at(t, x, z, nome) * np.asarray(alpha(z), dtype=complex) / z,
            centre, rho, rel_tol=rel_tol,
        )
        i_c += nome.kappa * 2j * math.pi * val

    residue_term = 0j
    for pole, res in zip(alpha.poles, alpha.residues):
        residue_term += complex(_kernel_at(t, x, np.asarray([pole]), nome)[0]) * res
    residue_term *= 4j * math.pi * nome.kappa

    rhs = i_c + residue_term
    residual = relative_residual(i_t, rhs)
    return VerificationReport(
        identity="cauchy-deformation",
        params={"t": t, "x": x, "inner_radius": inner_radius, "p": nome.p, "q": nome.q,
                "alpha": alpha.name, "n_poles": len(alpha.poles)},
        lhs=complex(i_t),
        rhs=complex(rhs),
        residual=residual,
        tolerance=tolerance,
        settings={"n_nodes_unit": info_t.n_nodes, "n_nodes_inner": info_c.n_nodes},
        details={"residue_term": complex(residue_term)},
        wall_time_s=time.perf_counter() - start,
    )


# --------------------------------------------------------------------------
# single-base finite-difference reduction of M
# --------------------------------------------------------------------------

def finite_difference_M(N: int, t_sign: int, x, f, nome: NomePair) -> complex:
    """The finite-difference operator M degenerates to at t = t_sign * q^{-N/2}:

        [M(t) f](x) = Gamma(x^{-2}) / Gamma(t^{-2} x^{-2})
            * sum_{k=0}^N theta((t x)^2 q^{2k}; p) / theta((t x)^2; p)
            * theta(t^2; p)_k theta((t x)^2; p)_k / (theta(q; p)_k theta(q x^2; p)_k)
            * f(t q^k x) / (t^{4k} x^{2k} q^{k^2})

    For N = 0 this is exactly f(x) (t_sign = +1) or f(-x) (t_sign = -1).
    """
    if t_sign not in (1, -1):
        raise DomainError("t_sign must be +1 or -1")
    if N < 0:
        raise DomainError("N must be non-negative")
    x = complex(x)
    q = nome.q
    t = t_sign * q ** (-N / 2.0) if N else complex(t_sign)
    tx2 = (t * x) ** 2
    pre = complex(elliptic_gamma(x**-2, nome)) / complex(elliptic_gamma(x**-2 / (t * t), nome))
    th_tx2 = complex(theta(tx2, nome.p, nome.trunc))
    total = 0j
    for k in range(N + 1):
        den_q = elliptic_pochhammer(q, k, nome)
        den_qx2 = elliptic_pochhammer(q * x * x, k, nome)
        if min(abs(den_q), abs(den_qx2)) < THETA_GUARD:
            raise DegenerateParameterError(f"finite-difference denominator vanishes at k={k}")
        ratio = complex(theta(tx2 * q ** (2 * k), nome.p, nome.trunc)) / th_tx2 if k else 1.0
        num = elliptic_pochhammer(t * t, k, nome) * elliptic_pochhammer(tx2, k, nome)
        term = ratio * num / (den_q * den_qx2) * f(t * q**k * x) / (
            t ** (4 * k) * x ** (2 * k) * q ** (k * k)
        )
        total += term
    return pre * total


def finite_difference_oracle(x, f, nome: NomePair, eps: float,
                             rel_tol: float = DEFAULT_REL_TOL,
                             n0: int = DEFAULT_N0,
                             max_nodes: int = DEFAULT_NODE_CAP) -> complex:
    """Regularized N = 1 evaluation of [M(t) f](x) at t^2 = q^{-1} (1 + eps).

    The contour is the unit circle plus the two escaped first-lattice poles
    z = t x and z = t / x, reinstated through closed-form residue corrections
    (their reciprocal images contribute equally for symmetric f, hence the
    doubled weight):

        kappa * integral_T + Gamma(t^2 x^2, x^{-2}) / Gamma((t x)^{+-2}) f(t x)
                           + Gamma(x^2, t^2 x^{-2}) / Gamma((t/x)^{+-2}) f(t/x)

    Requires real q in (0, 1), 1 < |t x^{+-1}| < min(1/q, 1/|p|), and
    f(1/z) = f(z).
    """
    q = nome.q
    if not (q.imag == 0 and 0 < q.real < 1):
        raise DomainError("the regularized oracle assumes real q in (0, 1)")
    x = complex(x)
    t = complex(np.sqrt((1.0 + eps) / q))
    lim = min(1.0 / q.real, 1.0 / abs(nome.p) if nome.p else math.inf)
    for val, label in ((abs(t * x), "|t x|"), (abs(t / x), "|t / x|")):
        if not (1.0 < val < lim):
            raise ConstraintViolationError(
                f"{label} = {val:.4f} outside the single-escape window (1, {lim:.3f})"
            )

    def eval_at(n):
        z = _roots(n)
        dden = _theta_rings(n, 1.0, nome)
        vals = np.asarray(f(z), dtype=complex)
        return _m_single(t, x, n, 1.0, vals, dden, nome)

    quad, _info = _drive(eval_at, rel_tol, n0=n0, cap=max_nodes, label="fd oracle")

    def g(v):
        return complex(elliptic_gamma(v, nome))

    corr_tx = g(t * t * x * x) * g(x**-2) / (g((t * x) ** 2) * g((t * x) ** -2)) * f(t * x)
    corr_tox = g(x * x) * g(t * t / (x * x)) / (g((t / x) ** 2) * g((t / x) ** -2)) * f(t / x)
    return quad + complex(corr_tx) + complex(corr_tox)


# --------------------------------------------------------------------------
# residue sum -> Bailey matrix bridge
# --------------------------------------------------------------------------

def residue_matrix_reduction_check(alpha: SymmetricTestFunction, z0, t, N: int,
                                   nome: NomePair,
                                   tolerance: float = 1e-9) -> VerificationReport:
    """Verify that the residue sum of the deformed Bailey transform equals the
    triangular-matrix form, with z0 = a^{1/2} and t = (k/a)^{1/2}:

      (i)  sum_m Gamma(k q^{N+m}) Gamma((k/a) q^{N-m}) Gamma(a^{-1} q^{-N-m})
               / (theta(q^{m-N})_{N-m} Gamma(k/a) Gamma((a q^{2m})^{+-1})) alpha_m
      (ii) Gamma(k)/Gamma(a) sum_m M[N, m](a, k) q^{N(N+1) - m(m+1)} alpha_m

    Both exponent normalizations q^{-m(m+1)} and q^{-m(m-1)} are evaluated and
    reported; the matrix form selects m(m+1), which the residual confirms
    (the m(m-1) variant deviates by a factor q^{-2m} per term).
    """
    from .bailey_algebra import build_M  # local import to avoid a cycle

    start = time.perf_counter()
    z0, t = complex(z0), complex(t)
    a = z0 * z0
    k = (t * z0) ** 2
    q = nome.q
    poles = np.asarray(alpha.poles, dtype=complex)
    want = z0 * q ** np.arange(N + 1)
    if poles.shape != (N + 1,) or np.max(np.abs(poles - want)) > 1e-12:
        raise DomainError("alpha must declare poles exactly at z0 q^m, m = 0..N")
    alpha_res = np.asarray(alpha.residues, dtype=complex)

    def g(v):
        return complex(elliptic_gamma(v, nome))

    g_ka = g(k / a)
    sum_res = 0j
    for m in range(N + 1):
        chain = elliptic_pochhammer(q ** (m - N), N - m, nome) if m < N else 1.0
        term = (
            g(k * q ** (N + m)) * g((k / a) * q ** (N - m)) * g(q ** (-N - m) / a)
            / (chain * g_ka * g(a * q ** (2 * m)) * g(q ** (-2 * m) / a))
        )
        sum_res += term * alpha_res[m]

    m_mat = build_M(N, a, k, nome).entries
    ms = np.arange(N + 1)
    weights_plus = q ** (N * (N + 1) - ms * (ms + 1)).astype(float)
    weights_minus = q ** (N * (N + 1) - ms * (ms - 1)).astype(float)
    ratio = g(k) / g(a)
    sum_plus = ratio * np.sum(m_mat[N, :] * weights_plus * alpha_res)
    sum_minus = ratio * np.sum(m_mat[N, :] * weights_minus * alpha_res)

    res_plus = relative_residual(sum_res, sum_plus)
    res_minus = relative_residual(sum_res, sum_minus)
    selected = "m(m+1)" if res_plus <= res_minus else "m(m-1)"
    residual = min(res_plus, res_minus)
    return VerificationReport(
        identity="residue-reduction",
        params={"z0": z0, "t": t, "a": a, "k": k, "N": N, "p": nome.p, "q": nome.q},
        lhs=complex(sum_res),
        rhs=complex(sum_plus if res_plus <= res_minus else sum_minus),
        residual=residual,
        tolerance=tolerance,
        settings={"alpha": alpha.name},
        details={
            "residual_exponent_m_plus_1": res_plus,
            "residual_exponent_m_minus_1": res_minus,
            "selected_exponent": selected,
        },
        wall_time_s=time.perf_counter() - start,
    )


# --------------------------------------------------------------------------
# inversion of the integral transform
# --------------------------------------------------------------------------

def m_inversion_check(t, w, alpha: SymmetricTestFunction, nome: NomePair,
                      rel_tol: float = DEFAULT_REL_TOL,
                      tolerance: float = 1e-6,
                      n0: int = DEFAULT_N0,
                      max_nodes: int = DEFAULT_NODE_CAP) -> VerificationReport:
    """Check [M(1/t) M(t) alpha](w) = alpha(w) for symmetric alpha analytic in
    a wide annulus and |t| in a conservative range.

    M(1/t) needs analytic continuation: its contour must keep the first
    members of the pole ladders w^{+-1}/t (moduli > 1) inside and t w^{+-1}
    (moduli < 1) outside, which no circle does.  The continuation is computed
    as the unit-circle integral plus the four first-lattice residue
    corrections, combined pairwise by the z -> 1/z antisymmetry of the
    residues:

        M(1/t) g(w) = kappa*integral_T + Gamma(w^{-2})/Gamma(t^2 w^{-2}) g(w/t)
                                       + Gamma(w^2)/Gamma(t^2 w^2) g(t w),

    where g = M(t) alpha is itself evaluated at the correction points by
    deformed quadrature plus one residue term.
    """
    start = time.perf_counter()
    t, w = complex(t), complex(w)
    if not (0 < abs(t) <= 0.45):
        raise ConstraintViolationError("inversion check asserts only for 0 < |t| <= 0.45")
    if abs(abs(w) - 1.0) > 0.2:
        raise ConstraintViolationError("spectator w should sit near the unit circle")
    lo, hi = alpha.annulus
    needed_hi = max(abs(w / t), abs(t * w)) * 1.05
    if not (lo < 0.3 and hi > needed_hi):
        raise ConstraintViolationError("alpha must be analytic in a wide annulus")

    b = max(abs(nome.p), abs(nome.q))

    def g_cont(xstar, head_is_recip):
        """g(xstar) = [M(t) alpha](xstar) at a correction point where one
        kernel ladder head sits near the unit circle: the contour shrinks to
        radius r (below the excluded head, above every pole that must stay
        inside) and the head re-enters as a closed-form residue."""
        h1, h2 = abs(t * xstar), abs(t / xstar)  # ladder heads t*xstar, t/xstar
        excl = h2 if head_is_recip else h1       # the near-unit head handled by the residue
        other = h1 if head_is_recip else h2
        inner_max = max(other, b * h1, b * h2, lo * 1.01)
        upper = 0.95 * min(excl, 1.0 / excl)
        if inner_max * 1.2 >= upper:
            raise ConstraintViolationError("no separating radius for the inversion correction")
        r = min(max(math.sqrt(inner_max * upper), inner_max * 1.2), upper)

        def eval_at(n):
            z = r * _roots(n)
            dden = _theta_rings(n, r, nome)
            vals = np.asarray(alpha(z), dtype=complex)
            return _m_single(t, xstar, n, r, vals, dden, nome)

        quad, _ = _drive(eval_at, rel_tol, n0=n0, cap=max_nodes, label="inversion inner")
        gg = lambda v: complex(elliptic_gamma(v, nome))
        if head_is_recip:
            res = gg(t * t * w**2) / (2.0 * gg(w**2)) * complex(alpha(np.asarray([1 / w]))[0])
        else:
            res = gg(t * t / w**2) / (2.0 * gg(w**-2)) * complex(alpha(np.asarray([w]))[0])
        return quad + res

    def eval_outer(n):
        z = _roots(n)
        dden = _theta_rings(n, 1.0, nome)
        alpha_vals = np.asarray(alpha(z), dtype=complex)
        g_on_grid = _m_apply_grid(t, n, 1.0, dden * alpha_vals, nome)
        val, scale = _m_single(1.0 / t, w, n, 1.0, g_on_grid, dden, nome)
        return val, scale

    outer, info = _drive(eval_outer, rel_tol, n0=n0, cap=max_nodes, label="inversion outer")

    gg = lambda v: complex(elliptic_gamma(v, nome))
    corr1 = gg(w**-2) / gg(t * t / w**2) * g_cont(w / t, head_is_recip=False)
    corr2 = gg(w**2) / gg(t * t * w**2) * g_cont(t * w, head_is_recip=True)
    total = outer + corr1 + corr2
    target = complex(alpha(np.asarray([w]))[0])
    residual = relative_residual(total, target)
    return VerificationReport(
        identity="m-inversion",
        params={"t": t, "w": w, "p": nome.p, "q": nome.q, "alpha": alpha.name},
        lhs=complex(total),
        rhs=target,
        residual=residual,
        tolerance=tolerance,
        settings={"n_nodes": info.n_nodes},
        wall_time_s=time.perf_counter() - start,
    )
