"""Finite-dimensional oracles: discretization, counting, averaging,
eigenvalue flow, and the irreducibility analogues."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from specshift import oracle
from specshift.model import (
    BaseOperator,
    diagonal_pair,
    make_diag_pert,
    make_v_a,
    rank_one_pair,
    rank_two_pair_reversed,
)
from specshift.oracle import (
    DiscretizedPair,
    SmoothingKernel,
    averaged_ssf,
    commutant_dimension,
    commutant_dimension_dense,
    counting_ssf,
    discretize_pair,
    eigen_flow,
    grid_discretize,
    hermite_discretize,
    jacobi_matrix,
    krylov_dimension,
    smoothed_counting_ssf,
)


def hermite_functions(x, count):
    """Normalized Hermite functions by the stable three-term recurrence."""
    h = np.zeros(count)
    h[0] = np.pi ** -0.25 * math.exp(-0.5 * x * x)
    if count > 1:
        h[1] = math.sqrt(2.0) * x * h[0]
    for n in range(1, count - 1):
        bn = math.sqrt((n + 1) / 2.0)
        bnm = math.sqrt(n / 2.0)
        h[n + 1] = (x * h[n] - bnm * h[n - 1]) / bn
    return h


class TestHermiteDiscretization:
    def test_offdiagonal_entries(self):
        jac = jacobi_matrix(4)
        assert jac[0, 1] == pytest.approx(math.sqrt(0.5), abs=1e-15)
        assert jac[1, 2] == pytest.approx(1.0, abs=1e-15)
        assert jac[2, 3] == pytest.approx(math.sqrt(1.5), abs=1e-15)

    @pytest.mark.parametrize("m,n", [(0, 1), (1, 2), (2, 3), (0, 3)])
    def test_entries_against_quadrature(self, m, n):
        count = 5
        val = quad(lambda x: hermite_functions(x, count)[m]
                   * x * hermite_functions(x, count)[n], -12, 12,
                   limit=200)[0]
        assert jacobi_matrix(count)[m, n] == pytest.approx(val, abs=1e-12)

    def test_perturbation_reproduced_exactly(self):
        pair = hermite_discretize(BaseOperator(-1.0), make_v_a(1.0), 30)
        diff = pair.b_matrix - pair.a_matrix
        eigs = np.sort(np.linalg.eigvalsh(diff))
        assert abs(eigs[-1] - 2.0) <= 1e-10
        assert np.abs(eigs[:-1]).max() <= 1e-10

    def test_rank_two_eigenvalues(self):
        pair = hermite_discretize(BaseOperator(1.0), make_v_a(-1.0), 30)
        diff = pair.b_matrix - pair.a_matrix
        eigs = np.sort(np.linalg.eigvalsh(diff))
        assert eigs[0] == pytest.approx(-math.sqrt(2), abs=1e-10)
        assert eigs[-1] == pytest.approx(math.sqrt(2), abs=1e-10)

    def test_operator_identity_discretized(self):
        left = hermite_discretize(BaseOperator(-1.0), make_v_a(1.0), 80)
        right = hermite_discretize(BaseOperator(1.0), make_v_a(-1.0), 80)
        assert np.abs(left.b_matrix - right.b_matrix).max() <= 1e-13

    def test_minimum_size(self):
        with pytest.raises(ValueError):
            hermite_discretize(BaseOperator(0.0), make_v_a(1.0), 1)


class TestCountingSsf:
    @pytest.mark.parametrize("n", [2, 17, 40])
    @pytest.mark.parametrize("scheme", ["hermite", "grid"])
    def test_step_pair_is_exact_indicator(self, n, scheme):
        pair = discretize_pair(diagonal_pair(), n, scheme)
        for lam in (-3.0, -0.999, -0.5, 0.0, 0.7, 0.999, 1.5, 4.0):
            expected = 1 if -1.0 <= lam <= 1.0 else 0
            assert counting_ssf(pair, lam) == expected

    def test_one_dimensional_toy(self):
        toy = DiscretizedPair(np.array([[0.0]]), np.array([[0.7]]),
                              "grid", 0)
        assert counting_ssf(toy, 0.35) == 1
        assert counting_ssf(toy, 0.8) == 0
        assert counting_ssf(toy, -0.1) == 0

    def test_tie_nudge_is_deterministic(self):
        toy = DiscretizedPair(np.array([[0.0]]), np.array([[0.5]]),
                              "grid", 0)
        assert counting_ssf(toy, 0.0) == counting_ssf(toy, 0.0)
        # the nudge moves the query just past an exact eigenvalue tie
        assert counting_ssf(toy, 0.0) == 1


class TestAveragedSsf:
    def test_step_pair_matches_smoothed_indicator(self):
        kernel = SmoothingKernel(0.2)
        pair = discretize_pair(diagonal_pair(), 120)
        lams = np.linspace(-3.0, 3.0, 61)
        avg = averaged_ssf(pair, lams, 64, kernel)
        expected = kernel.cdf(lams + 1.0) - kernel.cdf(lams - 1.0)
        assert np.abs(avg - expected).max() <= 0.02

    def test_one_dimensional_toy(self):
        kernel = SmoothingKernel(0.15)
        a = 0.8
        toy = DiscretizedPair(np.array([[0.0]]), np.array([[a]]), "grid", 0)
        lams = np.linspace(-1.0, 2.0, 31)
        avg = averaged_ssf(toy, lams, 128, kernel)
        expected = kernel.cdf(lams) - kernel.cdf(lams - a)
        assert np.abs(avg - expected).max() <= 0.02

    def test_agrees_with_smoothed_counting(self):
        kernel = SmoothingKernel(0.2)
        pair = discretize_pair(rank_one_pair(), 120)
        lams = np.linspace(-3.0, 3.0, 61)
        avg = averaged_ssf(pair, lams, 64, kernel)
        cnt = smoothed_counting_ssf(pair, lams, kernel)
        assert np.abs(avg - cnt).max() <= 0.02

    def test_resolution_floor(self):
        pair = discretize_pair(diagonal_pair(), 10)
        with pytest.raises(ValueError):
            averaged_ssf(pair, np.array([0.0]), 32, SmoothingKernel(0.2))


class TestSmoothingKernel:
    def test_unit_mass(self):
        kernel = SmoothingKernel(0.2)
        mass = quad(kernel.pdf, -np.inf, np.inf)[0]
        assert mass == pytest.approx(1.0, abs=1e-12)

    def test_width_validation(self):
        with pytest.raises(ValueError):
            SmoothingKernel(0.0)


class TestEigenFlow:
    def test_step_pair_spectrum_structure(self):
        n = 40
        pair = discretize_pair(diagonal_pair(), n)
        flow = eigen_flow(pair, 64)
        jac_eigs = np.sort(np.linalg.eigvalsh(jacobi_matrix(n)))
        for k, r in enumerate(flow.r_values):
            expected = np.sort(np.concatenate([jac_eigs, [-1.0 + 2.0 * r]]))
            assert np.abs(flow.trajectories[k] - expected).max() <= 1e-12

    def test_net_crossings_match_counting(self):
        for pair_factory, n in ((diagonal_pair, 40), (rank_one_pair, 100)):
            pair = discretize_pair(pair_factory(), n)
            flow = eigen_flow(pair, 96)
            assert flow.net_crossings(0.0) == counting_ssf(pair, 0.0)

    def test_toy_crossing(self):
        toy = DiscretizedPair(np.array([[0.0]]), np.array([[0.7]]),
                              "grid", 0)
        flow = eigen_flow(toy, 50)
        assert flow.net_crossings(0.35) == 1

    def test_minimum_resolution(self):
        with pytest.raises(ValueError):
            eigen_flow(discretize_pair(diagonal_pair(), 10), 20)


class TestTraceFormulaAtMatrixScale:
    def test_random_pairs(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = rng.integers(2, 9)
            a = rng.normal(size=(n, n))
            a = (a + a.T) / 2
            b = a + rng.normal(size=(n, n)) * 0.5
            b = (b + b.T) / 2
            coeffs = rng.normal(size=5)

            def phi(x):
                return sum(c * x ** k for k, c in enumerate(coeffs))

            ea = np.sort(np.linalg.eigvalsh(a))
            eb = np.sort(np.linalg.eigvalsh(b))
            lhs = phi(eb).sum() - phi(ea).sum()
            nodes = np.sort(np.concatenate([ea, eb]))
            rhs = 0.0
            for lo, hi in zip(nodes[:-1], nodes[1:]):
                if hi <= lo:
                    continue
                mid = 0.5 * (lo + hi)
                xi = (np.searchsorted(ea, mid) - np.searchsorted(eb, mid))
                rhs += xi * (phi(hi) - phi(lo))
            assert lhs == pytest.approx(rhs, abs=1e-8)


class TestCommutant:
    def test_two_by_two_examples(self):
        assert commutant_dimension(np.diag([1.0, 2.0]), np.eye(2)) == 2
        flip = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert commutant_dimension(np.diag([1.0, 2.0]), flip) == 1

    # near-threshold couplings at these sizes legitimately warn
    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_matches_dense_reference(self):
        rng = np.random.default_rng(5)
        for n in (5, 8):
            a = rng.normal(size=(n, n))
            a = (a + a.T) / 2
            b = rng.normal(size=(n, n))
            b = (b + b.T) / 2
            assert commutant_dimension(a, b) == commutant_dimension_dense(
                a, b)
        for n in (16, 30):
            jac = jacobi_matrix(n)
            rank_one = np.zeros((n, n))
            rank_one[0, 0] = 1.0
            assert commutant_dimension(jac, rank_one) == (
                commutant_dimension_dense(jac, rank_one))

    def test_reducible_control_scales(self):
        n = 120
        dims = commutant_dimension(np.diag(np.arange(1.0, n + 1)),
                                   np.eye(n))
        assert dims == n

    def test_requires_symmetry(self):
        with pytest.raises(ValueError):
            commutant_dimension(np.array([[0.0, 1.0], [0.0, 0.0]]),
                                np.eye(2))

    def test_borderline_coupling_warns(self):
        a = np.diag([0.0, 1.0, 2.0])
        b = np.zeros((3, 3))
        b[0, 1] = b[1, 0] = 5e-8
        b[1, 2] = b[2, 1] = 1.0
        with pytest.warns(RuntimeWarning):
            commutant_dimension(a, b)

    def test_dense_size_guard(self):
        with pytest.raises(ValueError):
            commutant_dimension_dense(np.eye(50), np.eye(50))


class TestKrylov:
    def test_jacobi_first_vector_is_cyclic(self):
        n = 60
        e0 = np.zeros(n)
        e0[0] = 1.0
        assert krylov_dimension(jacobi_matrix(n), e0) == n

    def test_identity_has_dimension_one(self):
        rng = np.random.default_rng(9)
        b = rng.normal(size=12)
        assert krylov_dimension(np.eye(12), b) == 1

    def test_coupled_vector_defect(self):
        pair = discretize_pair(rank_one_pair(), 100)
        vec = np.zeros(101)
        vec[0] = 1.0
        vec[100] = 1.0
        dim = krylov_dimension(pair.a_matrix, vec)
        assert dim in (100, 101)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            krylov_dimension(np.eye(3), np.zeros(3))


class TestGridScheme:
    def test_channel_vector_normalized(self):
        pair = grid_discretize(BaseOperator(-1.0), make_v_a(1.0), 200)
        diff = pair.b_matrix - pair.a_matrix
        eigs = np.sort(np.linalg.eigvalsh(diff))
        assert abs(eigs[-1] - 2.0) <= 1e-10

    def test_reversed_orientation_swaps_matrices(self):
        fwd = discretize_pair(rank_one_pair(), 20)
        rev_pair = rank_two_pair_reversed()
        rev = discretize_pair(rev_pair, 20)
        # reversed pair starts from the perturbed operator
        assert np.abs(rev.a_matrix - rev.b_matrix).max() > 0
        assert counting_ssf(rev, 0.0) == -counting_ssf(
            DiscretizedPair(rev.b_matrix, rev.a_matrix, rev.scheme, rev.n),
            0.0)
        assert fwd.scheme == "hermite"
