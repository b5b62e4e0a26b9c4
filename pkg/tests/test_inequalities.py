import math
from fractions import Fraction

import numpy as np
import pytest

from polyharm import balls, harmonic, inequalities
from polyharm.groups import Heisenberg, Lattice
from polyharm.harmonic import ScalarField


def test_mean_value_hand_example_exact():
    ball = balls.enumerate_ball(Lattice(2), center=(1, 0), radius=2)
    f = ScalarField.from_function(ball, lambda x: x[:, 0])
    c = inequalities.mean_value_constant(f, 1)
    vals = [int(v) for v in ball.vertices[:ball.size(1), 0]]
    exact = Fraction(vals[0] ** 2 * len(vals), sum(v * v for v in vals))
    assert exact == Fraction(5, 7)
    assert c == float(exact)


def test_mean_value_rejects_non_harmonic_and_zero():
    ball = balls.enumerate_ball(Lattice(2), radius=3)
    with pytest.raises(ValueError):
        inequalities.mean_value_constant(ScalarField.from_function(ball, lambda x: x[:, 0] ** 2), 2)
    assert math.isnan(inequalities.mean_value_constant(ScalarField(ball, np.zeros(ball.n)), 2))


def test_poincare_hand_example():
    # Z^1, n = 1, u = x: variance over {-1,0,1} is 2, energy over edges in B(3) is 6
    ball = balls.enumerate_ball(Lattice(1), radius=3)
    f = ScalarField.from_function(ball, lambda x: x[:, 0])
    assert inequalities.poincare_constant(f, 1) == pytest.approx(2 / 6)
    const = ScalarField(ball, np.ones(ball.n))
    assert inequalities.poincare_constant(const, 1) == 0.0


def test_edge_energy_counts_unordered_edges():
    ball = balls.enumerate_ball(Lattice(1), radius=2)
    f = ScalarField.from_function(ball, lambda x: x[:, 0])
    assert inequalities.edge_energy(ball, f.values, 2) == 4.0


def test_monomials():
    exps = inequalities.monomial_exponents(2, 2)
    assert exps == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert inequalities.monomial_name((2, 1)) == "x1^2*x2"
    assert inequalities.monomial_name((0, 0)) == "1"


def test_battery_stable_on_z2():
    rep = inequalities.battery(Lattice(2), [2, 4, 8])
    pc = rep["poincare"].constants
    assert max(pc) / min(pc) <= 3
    assert rep["poincare"].label.startswith("lower bound")
    assert rep["mean_value"].as_csv().startswith("scale,constant,field_id\n")


def test_battery_deterministic_and_parallel_identical():
    a = inequalities.battery(Heisenberg(), [1, 2], seed=11)
    b = inequalities.battery(Heisenberg(), [1, 2], seed=11, jobs=2)
    assert a["poincare"].rows == b["poincare"].rows
    assert all(math.isfinite(c) for c in a["poincare"].constants)


def test_battery_validation():
    with pytest.raises(ValueError):
        inequalities.battery(Lattice(2), [2], kinds=())
    with pytest.raises(ValueError):
        inequalities.battery(Lattice(2), [], kinds=("monomials",))
    with pytest.raises(ValueError):
        inequalities.battery(Lattice(2), [2], kinds=("dirichlet",), n_random=0)
