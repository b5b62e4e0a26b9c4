"""Exact arithmetic for Z^D, the discrete Heisenberg group and products with Z_q.

Elements are flat tuples of Python ints. A product element is the base
element's coordinates followed by one residue in ``[0, q)``. Heisenberg
``(a, b, c)`` stands for the upper-triangular matrix ``[[1, a, c], [0, 1, b],
[0, 0, 1]]``.

Every operation also has a vectorised twin (``*_many``) acting on ``(n, k)``
int64 arrays; those are what the ball enumerator uses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np

Element = tuple[int, ...]

INT64_SAFE = 2**62


@dataclass(frozen=True)
class Lattice:
    D: int

    def __post_init__(self):
        if self.D < 1:
            raise ValueError(f"lattice dimension must be >= 1, got {self.D}")


@dataclass(frozen=True)
class Heisenberg:
    pass


@dataclass(frozen=True)
class Product:
    base: "GroupSpec"
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"cyclic order must be >= 1, got {self.q}")


GroupSpec = Union[Lattice, Heisenberg, Product]

GENERATOR_CONVENTION = "standard"


class RepresentationError(ValueError):
    """An element does not have the shape its group requires."""


def dim(spec: GroupSpec) -> int:
    """Number of integer coordinates of an element."""
    if isinstance(spec, Lattice):
        return spec.D
    if isinstance(spec, Heisenberg):
        return 3
    if isinstance(spec, Product):
        return dim(spec.base) + 1
    raise TypeError(f"unknown group spec {spec!r}")


def _check(spec: GroupSpec, g) -> Element:
    g = tuple(int(c) for c in g)
    if len(g) != dim(spec):
        raise RepresentationError(f"{g!r} has {len(g)} coordinates, {spec!r} needs {dim(spec)}")
    if isinstance(spec, Product) and not 0 <= g[-1] < spec.q:
        raise RepresentationError(f"residue {g[-1]} outside [0, {spec.q})")
    return g


def _checked(values: Element) -> Element:
    for v in values:
        if abs(v) >= INT64_SAFE:
            raise OverflowError(f"coordinate {v} exceeds the 64-bit working range")
    return values


def identity(spec: GroupSpec) -> Element:
    return (0,) * dim(spec)


def multiply(spec: GroupSpec, g, h) -> Element:
    g, h = _check(spec, g), _check(spec, h)
    if isinstance(spec, Lattice):
        return _checked(tuple(a + b for a, b in zip(g, h)))
    if isinstance(spec, Heisenberg):
        a, b, c = g
        a2, b2, c2 = h
        return _checked((a + a2, b + b2, c + c2 + a * b2))
    base = multiply(spec.base, g[:-1], h[:-1])
    return base + ((g[-1] + h[-1]) % spec.q,)


def inverse(spec: GroupSpec, g) -> Element:
    g = _check(spec, g)
    if isinstance(spec, Lattice):
        return tuple(-a for a in g)
    if isinstance(spec, Heisenberg):
        a, b, c = g
        return _checked((-a, -b, a * b - c))
    return inverse(spec.base, g[:-1]) + ((-g[-1]) % spec.q,)


def standard_generators(spec: GroupSpec) -> list[Element]:
    """Symmetric generating set: ``{±e_i}``, ``{(±1,0,0), (0,±1,0)}``, or ``S×{0} ∪ {(e,±1)}``.

    For ``q <= 2`` the two cyclic generators coincide (or vanish for ``q = 1``)
    and are deduplicated.
    """
    if isinstance(spec, Lattice):
        gens = []
        for i in range(spec.D):
            for sign in (1, -1):
                e = [0] * spec.D
                e[i] = sign
                gens.append(tuple(e))
        return gens
    if isinstance(spec, Heisenberg):
        return [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]
    gens = [s + (0,) for s in standard_generators(spec.base)]
    e = identity(spec.base)
    for r in (1 % spec.q, (-1) % spec.q):
        cand = e + (r,)
        if r != 0 and cand not in gens:
            gens.append(cand)
    return gens


# --- vectorised forms -------------------------------------------------------

def _guard(arr: np.ndarray) -> None:
    if arr.size and int(np.abs(arr).max()) >= 2**31:
        # products of two coordinates must stay inside int64
        raise OverflowError("coordinates too large for checked 64-bit products")


def multiply_many(spec: GroupSpec, g: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Row-wise products of two broadcastable ``(n, k)`` int64 arrays."""
    g = np.asarray(g, dtype=np.int64)
    h = np.asarray(h, dtype=np.int64)
    if isinstance(spec, Lattice):
        _guard(g), _guard(h)
        return g + h
    if isinstance(spec, Heisenberg):
        _guard(g), _guard(h)
        out = g + h
        out = np.broadcast_to(out, np.broadcast_shapes(g.shape, h.shape)).copy()
        out[..., 2] += g[..., 0] * h[..., 1]
        return out
    base = multiply_many(spec.base, g[..., :-1], h[..., :-1])
    res = (g[..., -1:] + h[..., -1:]) % spec.q
    lead = np.broadcast_shapes(base.shape[:-1], res.shape[:-1])
    base = np.broadcast_to(base, lead + base.shape[-1:])
    res = np.broadcast_to(res, lead + (1,))
    return np.concatenate([base, res], axis=-1)


def inverse_many(spec: GroupSpec, g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=np.int64)
    if isinstance(spec, Lattice):
        return -g
    if isinstance(spec, Heisenberg):
        _guard(g)
        out = -g
        out[..., 2] = g[..., 0] * g[..., 1] - g[..., 2]
        return out
    base = inverse_many(spec.base, g[..., :-1])
    return np.concatenate([base, (-g[..., -1:]) % spec.q], axis=-1)


def word_length_closed_form(spec: GroupSpec, g: np.ndarray) -> np.ndarray | None:
    """Word length w.r.t. the standard generators when a closed form exists.

    ℓ¹ norm on Z^D; base length plus cyclic distance on products (the two
    generator families commute). ``None`` for Heisenberg, where callers fall
    back to a BFS table.
    """
    g = np.asarray(g, dtype=np.int64)
    if isinstance(spec, Lattice):
        return np.abs(g).sum(axis=-1)
    if isinstance(spec, Product):
        base = word_length_closed_form(spec.base, g[..., :-1])
        if base is None:
            return None
        r = g[..., -1] % spec.q
        return base + np.minimum(r, spec.q - r)
    return None


# --- serialisation ----------------------------------------------------------

def spec_to_dict(spec: GroupSpec) -> dict:
    if isinstance(spec, Lattice):
        return {"kind": "lattice", "D": spec.D}
    if isinstance(spec, Heisenberg):
        return {"kind": "heisenberg"}
    return {"kind": "product", "base": spec_to_dict(spec.base), "q": spec.q}


def spec_from_dict(d: dict) -> GroupSpec:
    kind = d.get("kind")
    if kind == "lattice":
        return Lattice(int(d["D"]))
    if kind == "heisenberg":
        return Heisenberg()
    if kind == "product":
        return Product(spec_from_dict(d["base"]), int(d["q"]))
    raise ValueError(f"unknown group kind {kind!r}")


def spec_text(spec: GroupSpec) -> str:
    """Canonical JSON text, used in cache keys and report headers."""
    return json.dumps(spec_to_dict(spec), sort_keys=True, separators=(",", ":"))


def parse_group(name: str) -> GroupSpec:
    """Short names used on the command line: ``z2``, ``heis``, ``z2xz16`` or JSON."""
    name = name.strip()
    if name.startswith("{"):
        return spec_from_dict(json.loads(name))
    low = name.lower()
    if "xz" in low:
        base, _, q = low.rpartition("xz")
        if not base or not q.isdigit():
            raise ValueError(f"cannot parse group name {name!r}")
        return Product(parse_group(base), int(q))
    if low in ("h3", "heis", "heisenberg"):
        return Heisenberg()
    if low.startswith("z") and low[1:].isdigit():
        return Lattice(int(low[1:]))
    raise ValueError(f"cannot parse group name {name!r}")


def format_element(g) -> str:
    return ",".join(str(int(c)) for c in g)
