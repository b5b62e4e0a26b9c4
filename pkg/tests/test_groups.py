import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyharm import groups
from polyharm.groups import Heisenberg, Lattice, Product

small = st.integers(-50, 50)


def heis_matrix(g):
    a, b, c = g
    return np.array([[1, a, c], [0, 1, b], [0, 0, 1]], dtype=object)


def from_matrix(m):
    return (int(m[0, 1]), int(m[1, 2]), int(m[0, 2]))


SPECS = [Lattice(1), Lattice(3), Heisenberg(), Product(Lattice(2), 7), Product(Heisenberg(), 4)]


def element(spec):
    if isinstance(spec, Product):
        return st.tuples(*([small] * groups.dim(spec.base)), st.integers(0, spec.q - 1))
    return st.tuples(*([small] * groups.dim(spec)))


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_group_axioms(spec):
    @settings(max_examples=60, deadline=None)
    @given(element(spec), element(spec), element(spec))
    def check(g, h, k):
        m = groups.multiply
        assert m(spec, m(spec, g, h), k) == m(spec, g, m(spec, h, k))
        e = groups.identity(spec)
        assert m(spec, g, e) == g == m(spec, e, g)
        assert m(spec, g, groups.inverse(spec, g)) == e
    check()


@settings(max_examples=100, deadline=None)
@given(st.tuples(small, small, small), st.tuples(small, small, small))
def test_heisenberg_law_matches_unitriangular_matrices(g, h):
    prod = groups.multiply(Heisenberg(), g, h)
    assert prod == from_matrix(heis_matrix(g).dot(heis_matrix(h)))
    inv = groups.inverse(Heisenberg(), g)
    assert from_matrix(heis_matrix(g).dot(heis_matrix(inv))) == (0, 0, 0)


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_standard_generators_symmetric_without_identity(spec):
    S = groups.standard_generators(spec)
    assert len(set(S)) == len(S)
    assert groups.identity(spec) not in S
    assert {groups.inverse(spec, s) for s in S} == set(S)


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_vectorised_forms_agree(spec):
    rng = np.random.default_rng(0)
    k = groups.dim(spec)
    g = rng.integers(-20, 21, size=(50, k))
    h = rng.integers(-20, 21, size=(50, k))
    if isinstance(spec, Product):
        g[:, -1] %= spec.q
        h[:, -1] %= spec.q
    many = groups.multiply_many(spec, g, h)
    inv = groups.inverse_many(spec, g)
    for i in range(50):
        assert tuple(many[i]) == groups.multiply(spec, tuple(g[i]), tuple(h[i]))
        assert tuple(inv[i]) == groups.inverse(spec, tuple(g[i]))
    # broadcasting one element against many keeps the coordinate count
    one = groups.multiply_many(spec, g[:1], h)
    assert one.shape == h.shape
    assert groups.multiply_many(spec, g[:1], h[:0]).shape == (0, k)


def test_representation_errors():
    with pytest.raises(groups.RepresentationError):
        groups.multiply(Lattice(2), (1, 2, 3), (0, 0))
    with pytest.raises(groups.RepresentationError):
        groups.multiply(Product(Lattice(1), 4), (0, 4), (0, 0))
    with pytest.raises(ValueError):
        Lattice(0)
    with pytest.raises(ValueError):
        Product(Lattice(1), 0)
    with pytest.raises(OverflowError):
        groups.multiply(Heisenberg(), (2**40, 0, 0), (0, 2**40, 0))


@pytest.mark.parametrize("text,expected", [
    ("z2", Lattice(2)), ("Z3", Lattice(3)), ("heis", Heisenberg()), ("h3", Heisenberg()),
    ("heisenberg", Heisenberg()), ("z2xz16", Product(Lattice(2), 16)),
    ("heisxz4", Product(Heisenberg(), 4)),
    ('{"kind": "product", "base": {"kind": "lattice", "D": 1}, "q": 5}', Product(Lattice(1), 5)),
])
def test_parse_group(text, expected):
    assert groups.parse_group(text) == expected


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_spec_round_trip(spec):
    assert groups.spec_from_dict(json.loads(groups.spec_text(spec))) == spec


def test_parse_group_rejects_garbage():
    with pytest.raises(ValueError):
        groups.parse_group("free2")


def test_word_length_closed_form():
    g = np.array([[3, -4], [0, 0]])
    assert groups.word_length_closed_form(Lattice(2), g).tolist() == [7, 0]
    p = np.array([[1, -1, 15], [0, 0, 8]])
    assert groups.word_length_closed_form(Product(Lattice(2), 16), p).tolist() == [3, 8]
    assert groups.word_length_closed_form(Heisenberg(), np.zeros((1, 3), dtype=np.int64)) is None
