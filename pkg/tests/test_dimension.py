import math

import numpy as np
import pytest
import sympy

from polyharm import balls, dimension, inequalities
from polyharm.groups import Heisenberg, Lattice
from polyharm.harmonic import ScalarField


@pytest.mark.parametrize("D,expected", [(1, [1, 2, 2, 2, 2]), (2, [1, 3, 5, 7, 9]), (3, [1, 4, 9, 16, 25])])
def test_symbolic_kernel_dims(D, expected):
    assert [dimension.symbolic_kernel_dim(D, d) for d in range(5)] == expected


def _harmonic_poly_count(D, d):
    # dim of harmonic polynomials of degree <= d on Z^D: graded count C(D+k-1,k) - C(D+k-3,k-2)
    total = 0
    for k in range(d + 1):
        total += math.comb(D + k - 1, k) - (math.comb(D + k - 3, k - 2) if k >= 2 else 0)
    return total


@pytest.mark.parametrize("D,d", [(1, 3), (2, 4), (3, 3), (4, 2)])
def test_oracle_matches_continuum_count(D, d):
    # discrete and continuous harmonic polynomial spaces have equal dimension by degree
    assert dimension.symbolic_kernel_dim(D, d) == _harmonic_poly_count(D, d)


@pytest.mark.parametrize("D,d", [(2, 3), (3, 2), (2, 5)])
def test_bareiss_rank_matches_sympy(D, d):
    table = dimension.polynomial_table(D, d)
    assert dimension.bareiss_rank(table.matrix) == sympy.Matrix(table.matrix).rank()


def test_bareiss_small_cases():
    assert dimension.bareiss_rank([[0, 0], [0, 0]]) == 0
    assert dimension.bareiss_rank([[2, 4], [1, 2]]) == 1
    assert dimension.bareiss_rank([[1, 2, 3], [4, 5, 6], [7, 8, 10]]) == 3
    assert dimension.bareiss_rank([]) == 0


def test_polynomial_table_laplacian_of_x_squared():
    t = dimension.polynomial_table(1, 2)
    # L x^2 = 2 in the basis (1, x, x^2)
    col = [row[t.exponents.index((2,))] for row in t.matrix]
    assert col[t.exponents.index((0,))] == 2 and sum(col) == 2


def test_gram_and_rank():
    ball = balls.enumerate_ball(Lattice(2), radius=4)
    fs = [ScalarField.from_function(ball, lambda x, a=a: inequalities.monomial_values(x, a))
          for a in [(0, 0), (1, 0), (0, 1)]]
    dup = fs + [fs[1] * 2.0]
    g = dimension.gram(dup, 4)
    assert g.k == 4
    assert dimension.numerical_rank(g) == 3
    assert dimension.numerical_rank(np.zeros((2, 2))) == 0
    with pytest.raises(ValueError):
        dimension.gram(fs, 5)


def test_estimate_dimension_small():
    est = dimension.estimate_dimension(Lattice(2), 2, (4, 6))
    assert est.ranks == [5, 5] and est.saturated and est.oracle == 5
    assert est.as_dict()["oracle"] == 5
    assert est.ranks_at(1e-6) == est.ranks


def test_heisenberg_has_no_oracle():
    est = dimension.estimate_dimension(Heisenberg(), 1, (3, 4))
    assert est.oracle is None
    assert est.as_dict()["oracle"] == "no oracle"
    assert "no oracle" in est.notes


def test_schedule_guards():
    with pytest.raises(ValueError, match="schedule insufficient"):
        dimension.check_schedule(Lattice(2), 9999, (8, 12))
    with pytest.raises(ValueError, match="schedule insufficient"):
        dimension.check_schedule(Lattice(2), 6, (2, 12))
    with pytest.raises(ValueError):
        dimension.check_schedule(Lattice(2), 1, (8,))
    with pytest.raises(ValueError):
        dimension.check_schedule(Lattice(2), 1, (8, 8))
    with pytest.raises(ValueError):
        dimension.candidate_fields(Lattice(2), 1, 10, 4)


def test_energy_probe_constants_exact():
    ball = balls.enumerate_ball(Lattice(2), radius=10)
    one = ScalarField(ball, np.ones(ball.n))
    probe = dimension.energy_probe([one], 5, 2.0)
    # |B(5)| / |B(10)| = 61 / 221
    assert probe.ratio == pytest.approx(61 / 221, rel=1e-14)


def test_energy_probe_basis_independent_and_guarded():
    ball = balls.enumerate_ball(Lattice(2), radius=20)
    fs = [ScalarField.from_function(ball, lambda x, a=a: inequalities.monomial_values(x, a))
          for a in [(0, 0), (1, 0), (0, 1)]]
    p1 = dimension.energy_probe(fs, 10, 2.0)
    M = np.array([[1.0, 2.0, 0.5], [0.0, 1.0, 3.0], [1.0, 0.0, 1.0]])
    mixed = [ScalarField(ball, sum(M[i, j] * fs[j].values for j in range(3))) for i in range(3)]
    p2 = dimension.energy_probe(mixed, 10, 2.0)
    assert abs(p1.ratio - p2.ratio) <= 1e-8 * p1.ratio
    assert p1.lower_bound(1, 2, 0.1) == 3 * 2 ** -4.1
    with pytest.raises(dimension.BelowR1):
        dimension.energy_probe(fs + [fs[0] * 3.0], 10, 2.0)
    with pytest.raises(ValueError):
        dimension.energy_probe(fs, 10, 0.5)


def test_first_definite_radius_reported():
    est = dimension.estimate_dimension(Lattice(2), 1, (4, 6))
    assert est.first_definite_R == 4
    assert est.as_dict()["first_definite_R"] == 4
