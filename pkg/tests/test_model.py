"""Operator model: compressed perturbations and resolvent Gram data."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from specshift.model import (
    BaseOperator,
    FiniteRankPerturbation,
    OperatorPair,
    PoleError,
    det_weights,
    diagonal_pair,
    make_diag_pert,
    make_v_a,
    operator_identity_check,
    rank_one_pair,
    rank_two_pair_reversed,
    reduced_matrix,
    resolvent_gram,
)
from specshift.specfun import SQRT_PI


def gram_entry_quadrature(level, ci, di, cj, dj, z):
    """Oracle: <psi_i, (base - z)^-1 psi_j> by direct quadrature."""
    z = complex(z)

    def re_part(x):
        return math.exp(-x * x) / SQRT_PI * (x - z.real) / abs(x - z) ** 2

    def im_part(x):
        return math.exp(-x * x) / SQRT_PI * z.imag / abs(x - z) ** 2

    channel = complex(quad(re_part, -30, 30, limit=300)[0],
                      quad(im_part, -30, 30, limit=300)[0])
    return ci * cj * channel + di * dj / (level - z)


class TestReducedMatrix:
    def test_entries(self):
        assert np.array_equal(reduced_matrix(0.25),
                              [[1.0, 1.0], [1.0, 0.25]])

    @pytest.mark.parametrize("a,expected", [
        (1.0, {2.0, 0.0}),
        (-1.0, {math.sqrt(2.0), -math.sqrt(2.0)}),
        (0.0, {(1 + math.sqrt(5)) / 2, (1 - math.sqrt(5)) / 2}),
    ])
    def test_eigenvalues(self, a, expected):
        eigs = np.linalg.eigvalsh(reduced_matrix(a))
        for e in expected:
            assert np.abs(eigs - e).min() < 1e-14


class TestMakeVa:
    def test_rank_one_case(self):
        pert = make_v_a(1.0)
        assert pert.rank == 1
        assert pert.mus[0] == pytest.approx(2.0, abs=1e-14)
        c, d = pert.vecs[0]
        assert (c, d) == pytest.approx((1 / math.sqrt(2),) * 2, abs=1e-14)

    def test_rank_two_case(self):
        pert = make_v_a(-1.0)
        assert pert.rank == 2
        assert sorted(pert.mus) == pytest.approx(
            [-math.sqrt(2), math.sqrt(2)], abs=1e-14)
        # eigenvectors proportional to (1, -1 +- sqrt(2))
        for mu, (c, d) in zip(pert.mus, pert.vecs):
            assert d / c == pytest.approx(-1 + mu, abs=1e-12)

    @pytest.mark.parametrize("a", [-1.0, 0.0, 0.5, 1.0, 2.7])
    def test_orthonormality_and_reconstruction(self, a):
        pert = make_v_a(a)
        V = pert.coeff_array
        gram = V @ V.T
        assert np.abs(gram - np.eye(pert.rank)).max() <= 1e-14
        assert np.abs(pert.reconstruct() - reduced_matrix(a)).max() <= 1e-13

    def test_rejects_bad_vectors(self):
        with pytest.raises(ValueError):
            FiniteRankPerturbation((1.0, 1.0), ((1.0, 0.0), (1.0, 0.0)))
        with pytest.raises(ValueError):
            FiniteRankPerturbation((0.0,), ((1.0, 0.0),))


class TestDiagPert:
    def test_structure(self):
        pert = make_diag_pert()
        assert pert.rank == 1
        assert pert.mus == (2.0,)
        assert pert.vecs == ((0.0, 1.0),)

    def test_moves_level_to_plus_one(self):
        # base(-1) + diag pert equals base(+1) on the level coordinate
        assert det_weights(make_diag_pert()) == (0.0, 2.0, 0.0)


class TestResolventGram:
    def test_diag_pert_closed_form(self):
        G = resolvent_gram(BaseOperator(-1.0), make_diag_pert(), 1j)
        assert G.shape == (1, 1)
        assert G[0, 0] == pytest.approx((-1 + 1j) / 2, abs=1e-15)

    def test_rank_one_boundary_value(self):
        G = resolvent_gram(BaseOperator(-1.0), make_v_a(1.0),
                           complex(0.0, 0.0))
        expected = 0.5 * (1j * SQRT_PI - 1.0)
        assert G[0, 0] == pytest.approx(expected, abs=1e-14)

    def test_rank_two_against_quadrature(self):
        base = BaseOperator(1.0)
        pert = make_v_a(-1.0)
        G = resolvent_gram(base, pert, 2j)
        for i in range(2):
            for j in range(2):
                ci, di = pert.vecs[i]
                cj, dj = pert.vecs[j]
                ref = gram_entry_quadrature(1.0, ci, di, cj, dj, 2j)
                assert abs(G[i, j] - ref) <= 1e-8

    def test_herglotz_matrix_property(self):
        base = BaseOperator(1.0)
        pert = make_v_a(-1.0)
        for re in np.linspace(-4.0, 4.0, 10):
            for im in np.linspace(0.05, 4.0, 10):
                G = resolvent_gram(base, pert, complex(re, im))
                assert np.linalg.eigvalsh(G.imag).min() >= -1e-14

    def test_symmetric(self):
        G = resolvent_gram(BaseOperator(1.0), make_v_a(-1.0), 0.3 + 0.4j)
        assert G[0, 1] == G[1, 0]

    def test_pole_window(self):
        with pytest.raises(PoleError):
            resolvent_gram(BaseOperator(-1.0), make_v_a(1.0),
                           complex(-1.005, 0.0))

    def test_rejects_lower_half_plane(self):
        with pytest.raises(ValueError):
            resolvent_gram(BaseOperator(-1.0), make_v_a(1.0), -1j)


class TestOperatorIdentity:
    def test_single_points(self):
        assert operator_identity_check([1j]) <= 1e-12
        assert operator_identity_check([3 + 2j]) <= 1e-12

    def test_default_point_set(self):
        assert operator_identity_check() <= 1e-10


class TestOperatorPair:
    def test_factories(self):
        assert diagonal_pair().base.level == -1.0
        assert rank_one_pair().pert.rank == 1
        pair = rank_two_pair_reversed()
        assert pair.orientation == -1
        assert pair.base.level == 1.0

    def test_orientation_validation(self):
        with pytest.raises(ValueError):
            OperatorPair(BaseOperator(0.0), make_diag_pert(), 2)


class TestDetWeights:
    @pytest.mark.parametrize("a", [-1.0, 0.3, 1.0])
    def test_weights_reproduce_compression(self, a):
        w_f, w_s, w_x = det_weights(make_v_a(a))
        assert w_f == pytest.approx(1.0, abs=1e-13)
        assert w_s == pytest.approx(a, abs=1e-13)
        assert w_x == pytest.approx(a - 1.0, abs=1e-13)
