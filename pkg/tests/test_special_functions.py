import numpy as np
import pytest

from elliptic_bailey.errors import (
    DomainError,
    PoleProximityError,
    DegenerateParameterError,
    TruncationLimitError,
)
from elliptic_bailey.special_functions import (
    NomePair,
    TruncationPolicy,
    elliptic_gamma,
    elliptic_pochhammer,
    gamma_quadratic_check,
    gamma_residue_constant,
    qpochhammer_inf,
    theta,
    theta_pochhammer_sequence,
)

import oracles


@pytest.fixture
def nome():
    return NomePair(0.1, 0.2)


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


class TestQPochhammer:
    def test_zero_base_collapses_to_first_factor(self):
        for z in (0.7, -1.3 + 0.4j, 2.0j):
            assert qpochhammer_inf(z, 0.0) == 1 - z

    def test_z_one_vanishes(self):
        assert qpochhammer_inf(1.0, 0.35) == 0.0
        assert qpochhammer_inf(1.0, 0.1 + 0.05j) == 0.0

    def test_against_log_series_oracle(self):
        # oracles.qpoch_log_series(0.3, 0.5), 60 terms at 40 dps
        expected = 0.5101178266339876
        got = qpochhammer_inf(0.3, 0.5)
        assert rel(got, expected) < 1e-14
        assert rel(got, oracles.qpoch_log_series(0.3, 0.5)) < 1e-14

    def test_base_modulus_rejected(self):
        with pytest.raises(DomainError):
            qpochhammer_inf(0.5, 1.0)
        with pytest.raises(DomainError):
            qpochhammer_inf(0.5, -1.2)

    def test_vectorized_matches_scalar(self):
        z = np.array([0.3, 0.5 + 0.1j, -0.8])
        vec = qpochhammer_inf(z, 0.4)
        for zi, vi in zip(z, vec):
            assert vi == qpochhammer_inf(complex(zi), 0.4)

    def test_fixed_terms_mode(self):
        pol_j = TruncationPolicy(mode="fixed_terms", max_terms=30)
        pol_j1 = TruncationPolicy(mode="fixed_terms", max_terms=31)
        a = qpochhammer_inf(0.3, 0.5, pol_j)
        b = qpochhammer_inf(0.3, 0.5, pol_j1)
        assert rel(a, b) < 1e-9

    def test_truncation_cap_raises(self):
        with pytest.raises(TruncationLimitError):
            qpochhammer_inf(0.5, 0.999999, TruncationPolicy(max_terms=100))


class TestTheta:
    def test_p_zero(self):
        assert theta(0.3 + 0.2j, 0.0) == 1 - (0.3 + 0.2j)

    def test_zero_of_theta_at_one(self):
        assert theta(1.0, 0.2) == 0.0
        assert theta(1.0, 0.37) == 0.0

    def test_against_series_oracle(self):
        # oracles.theta_series(0.4+0.1j, 0.2)
        expected = 0.26283737015124947 + 0.01543610681892484j
        got = theta(0.4 + 0.1j, 0.2)
        assert rel(got, expected) < 1e-13
        assert rel(got, oracles.theta_series(0.4 + 0.1j, 0.2)) < 1e-13

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            theta(0.0, 0.2)
        with pytest.raises(DomainError):
            theta(0.5, 1.1)

    def test_reflection_and_quasiperiodicity(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            p = rng.uniform(0.05, 0.4)
            z = rng.uniform(0.3, 1.5) * np.exp(2j * np.pi * rng.uniform())
            t = theta(z, p)
            assert rel(theta(p / z, p), t) < 1e-13
            assert rel(theta(p * z, p), -t / z) < 1e-13


class TestEllipticGamma:
    def test_against_double_product_oracle(self, nome):
        # oracles.elliptic_gamma_product(0.5, 0.1, 0.2)
        expected = 2.31197611095325
        got = elliptic_gamma(0.5, nome)
        assert rel(got, expected) < 1e-13

    def test_inversion_random(self, nome):
        rng = np.random.default_rng(11)
        pq = nome.p * nome.q
        for _ in range(30):
            z = rng.uniform(0.3, 1.6) * np.exp(2j * np.pi * rng.uniform())
            prod = elliptic_gamma(z, nome) * elliptic_gamma(pq / z, nome)
            assert abs(prod - 1) < 1e-13

    def test_base_symmetry_random(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            p = rng.uniform(0.05, 0.3) * np.exp(2j * np.pi * rng.uniform())
            q = rng.uniform(0.1, 0.4) * np.exp(2j * np.pi * rng.uniform())
            nome = NomePair(p, q)
            z = rng.uniform(0.3, 1.5) * np.exp(2j * np.pi * rng.uniform())
            assert rel(elliptic_gamma(z, nome), elliptic_gamma(z, nome.swapped())) < 1e-13

    def test_finite_difference_equations(self, nome):
        rng = np.random.default_rng(17)
        for _ in range(30):
            z = rng.uniform(0.3, 1.4) * np.exp(2j * np.pi * rng.uniform())
            g = elliptic_gamma(z, nome)
            assert rel(elliptic_gamma(nome.q * z, nome), theta(z, nome.p) * g) < 1e-13
            assert rel(elliptic_gamma(nome.p * z, nome), theta(z, nome.q) * g) < 1e-13

    def test_fd_equation_equals_theta_at_example_point(self):
        nome = NomePair(0.15, 0.2)
        lhs = elliptic_gamma(nome.q * 0.5, nome) / elliptic_gamma(0.5, nome)
        # oracles.theta_series(0.5, 0.15)
        assert rel(lhs, 0.3026758941661216) < 1e-13
        assert rel(lhs, theta(0.5, nome.p)) < 1e-13

    def test_sqrt_pq_fixed_point(self):
        for p, q in [(0.1, 0.2), (0.05, 0.45), (0.3, 0.35)]:
            nome = NomePair(p, q)
            assert abs(elliptic_gamma(np.sqrt(p * q), nome) - 1) < 1e-13

    def test_inverse_square_theta_identity(self, nome):
        # 1/Gamma(z^{+-2}) = theta(z^2; q) theta(z^{-2}; p)
        rng = np.random.default_rng(23)
        for _ in range(20):
            z = rng.uniform(0.6, 1.3) * np.exp(2j * np.pi * rng.uniform())
            lhs = 1.0 / (elliptic_gamma(z * z, nome) * elliptic_gamma(z**-2, nome))
            rhs = theta(z * z, nome.q) * theta(z**-2, nome.p)
            assert rel(lhs, rhs) < 1e-12

    def test_pole_guard(self, nome):
        with pytest.raises(PoleProximityError):
            elliptic_gamma(1.0 + 1e-15, nome)
        with pytest.raises(PoleProximityError):
            elliptic_gamma(1.0 / nome.q, nome)

    def test_zero_domain_error(self, nome):
        with pytest.raises(DomainError):
            elliptic_gamma(0.0, nome)

    def test_large_argument(self, nome):
        # log-space evaluation stays finite and inversion-consistent at |z| ~ 1e3
        z = 1234.5 + 321.0j
        g = elliptic_gamma(z, nome)
        assert np.isfinite(g)
        assert abs(g * elliptic_gamma(nome.p * nome.q / z, nome) - 1) < 1e-12

    def test_truncation_monotonicity(self):
        # tightening the tolerance 10x moves the value by less than the looser tolerance
        z = 0.7 + 0.4j
        for tol in (1e-8, 1e-10, 1e-12):
            loose = NomePair(0.15, 0.3, TruncationPolicy(target_rel_tol=tol))
            tight = NomePair(0.15, 0.3, TruncationPolicy(target_rel_tol=tol / 10))
            a, b = elliptic_gamma(z, loose), elliptic_gamma(z, tight)
            assert rel(a, b) < tol


class TestEllipticPochhammer:
    def test_empty_product(self, nome):
        assert elliptic_pochhammer(0.37 + 0.1j, 0, nome) == 1.0

    def test_mutual_reciprocals(self, nome):
        rng = np.random.default_rng(29)
        for _ in range(20):
            z = rng.uniform(0.3, 1.2) * np.exp(2j * np.pi * rng.uniform())
            n = int(rng.integers(1, 6))
            prod = elliptic_pochhammer(z, n, nome) * elliptic_pochhammer(
                z * nome.q**n, -n, nome
            )
            assert abs(prod - 1) < 1e-12

    def test_addition_rule_at_example_point(self):
        nome = NomePair(0.1, 0.25)
        z, n, m = 0.3, 2, 3
        whole = elliptic_pochhammer(z, n + m, nome)
        split = elliptic_pochhammer(z, n, nome) * elliptic_pochhammer(z * nome.q**n, m, nome)
        assert rel(whole, split) < 1e-13
        # oracles.theta_pochhammer(0.3, 5, 0.1, 0.25)
        assert rel(whole, 313.80388449519836) < 1e-12

    def test_gamma_shift_consistency(self, nome):
        # Gamma(z q^n) = theta(z; p)_n Gamma(z)
        z = 0.45 + 0.2j
        for n in (1, 3, -2):
            lhs = elliptic_gamma(z * nome.q**n, nome)
            rhs = elliptic_pochhammer(z, n, nome) * elliptic_gamma(z, nome)
            assert rel(lhs, rhs) < 1e-12

    def test_negative_branch_guard(self):
        nome = NomePair(0.1, 0.25)
        # z q^{-1} = 1 makes theta vanish exactly
        with pytest.raises(DegenerateParameterError):
            elliptic_pochhammer(0.25, -1, nome)

    def test_sequence_matches_single_calls(self, nome):
        z = 0.4 + 0.15j
        seq = theta_pochhammer_sequence(z, 6, nome)
        for n in range(7):
            assert rel(seq[n], elliptic_pochhammer(z, n, nome)) < 1e-13


class TestResidueConstant:
    def test_trivial_nomes(self):
        assert gamma_residue_constant(NomePair(0.0, 0.0)) == 1.0

    def test_definition(self, nome):
        direct = 1.0 / (qpochhammer_inf(nome.p, nome.p) * qpochhammer_inf(nome.q, nome.q))
        assert rel(gamma_residue_constant(nome), direct) < 1e-15

    def test_limit_extrapolation_oracle(self, nome):
        # Richardson on (1 - z) Gamma(z) along z = 1 + h, h in {1e-2, 5e-3, 2.5e-3}
        vals = [complex(-h * elliptic_gamma(1 + h, nome)) for h in (1e-2, 5e-3, 2.5e-3)]
        a1 = [2 * vals[i + 1] - vals[i] for i in range(2)]
        a2 = (4 * a1[1] - a1[0]) / 3
        assert rel(a2, gamma_residue_constant(nome)) < 1e-6


class TestQuadraticTransformation:
    def test_real_point(self):
        assert gamma_quadratic_check(0.6, NomePair(0.1, 0.2)) < 1e-12

    def test_complex_point_complex_nome(self):
        z = 0.5 * np.exp(1j * np.pi / 7)
        assert gamma_quadratic_check(z, NomePair(0.05 + 0.02j, 0.15)) < 1e-12

    def test_inversion_fixed_point(self):
        nome = NomePair(0.1, 0.2)
        z = complex((nome.p * nome.q) ** 0.25)
        assert gamma_quadratic_check(z, nome) < 1e-12


class TestNomePair:
    def test_validation(self):
        with pytest.raises(DomainError):
            NomePair(1.0, 0.2)
        with pytest.raises(DomainError):
            NomePair(0.2, -1.0)

    def test_cached_constants_consistent_with_policy(self):
        nome = NomePair(0.3, 0.4)
        # one extra product factor moves the constants by less than the tolerance
        n_used = 1
        while 2 / (1 - 0.4) * 0.4**n_used >= nome.trunc.target_rel_tol:
            n_used += 1
        refined = qpochhammer_inf(
            nome.q, nome.q, TruncationPolicy(mode="fixed_terms", max_terms=n_used + 1)
        )
        assert rel(nome.qq_inf, refined) < nome.trunc.target_rel_tol

    def test_kappa(self):
        nome = NomePair(0.1, 0.2)
        expect = nome.pp_inf * nome.qq_inf / (4j * np.pi)
        assert nome.kappa == expect

    def test_immutability(self):
        nome = NomePair(0.1, 0.2)
        with pytest.raises(AttributeError):
            nome.p = 0.5
