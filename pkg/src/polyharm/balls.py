"""Word-metric balls ``B_p(n)`` of Cayley graphs, enumerated by layered BFS.

Vertices are ordered by (distance to the centre, lexicographic coordinates),
so ``B_p(r)`` for any ``r <= radius`` is a prefix of the vertex list.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import groups
from .groups import Element, GroupSpec

DEFAULT_MEMORY_CAP = 20_000_000

CACHE_MAGIC = b"POLYHARMBALL"
CACHE_VERSION = 1


class MemoryCapExceeded(RuntimeError):
    pass


class CacheError(RuntimeError):
    pass


class CacheMismatch(CacheError):
    pass


class CacheCorrupt(CacheError):
    pass


@dataclass(frozen=True)
class GeneratingSet:
    convention: str
    elements: tuple[Element, ...]

    def __len__(self):
        return len(self.elements)

    def as_array(self) -> np.ndarray:
        return np.array(self.elements, dtype=np.int64).reshape(len(self.elements), -1)


def generating_set(spec: GroupSpec, elements=None) -> GeneratingSet:
    """The standard generating set, or a validated custom one."""
    if elements is None:
        return GeneratingSet(groups.GENERATOR_CONVENTION, tuple(groups.standard_generators(spec)))
    elems: list[Element] = []
    for g in elements:
        g = groups._check(spec, g)
        if g not in elems:
            elems.append(g)
    e = groups.identity(spec)
    if e in elems:
        raise ValueError("generating set contains the identity")
    for g in elems:
        if groups.inverse(spec, g) not in elems:
            raise ValueError(f"generating set is not symmetric: inverse of {g} missing")
    tag = hashlib.sha256(repr(sorted(elems)).encode()).hexdigest()[:12]
    return GeneratingSet(f"custom-{tag}", tuple(elems))


def _coord_bounds(spec: GroupSpec, radius: int) -> list[tuple[int, int]]:
    """Inclusive coordinate ranges of elements of word length <= radius."""
    if isinstance(spec, groups.Lattice):
        return [(-radius, radius)] * spec.D
    if isinstance(spec, groups.Heisenberg):
        c = radius * radius
        return [(-radius, radius), (-radius, radius), (-c, c)]
    return _coord_bounds(spec.base, radius) + [(0, spec.q - 1)]


class ElementIndex:
    """Exact element -> vertex index map over a fixed element array.

    Elements are keyed by their translate ``center^{-1} x`` encoded as one
    int64; the encoding is only valid for word length <= ``bound_radius``
    (generators of word length 1 assumed). Lookups of elements outside that
    range return -1.
    """

    def __init__(self, spec: GroupSpec, center: Element, bound_radius: int, elements: np.ndarray,
                 step: int = 1):
        self.spec = spec
        self.center = np.array(center, dtype=np.int64)
        self.center_inv = groups.inverse_many(spec, self.center[None, :])[0]
        bounds = _coord_bounds(spec, bound_radius * step)
        self.lo = np.array([b[0] for b in bounds], dtype=np.int64)
        self.hi = np.array([b[1] for b in bounds], dtype=np.int64)
        span = self.hi - self.lo + 1
        total = 1
        for s in span:
            total *= int(s)
        if total >= 2**62:
            raise OverflowError("ball too large for 64-bit element keys")
        self.mult = np.ones(len(span), dtype=np.int64)
        for i in range(len(span) - 2, -1, -1):
            self.mult[i] = self.mult[i + 1] * span[i + 1]
        keys = self.encode(elements)
        if np.any(keys < 0):
            raise OverflowError("element outside the encodable range")
        self.order = np.argsort(keys, kind="stable")
        self.sorted_keys = keys[self.order]

    def encode(self, elements: np.ndarray) -> np.ndarray:
        elements = np.asarray(elements, dtype=np.int64).reshape(-1, len(self.lo))
        rel = groups.multiply_many(self.spec, self.center_inv[None, :], elements)
        inside = np.all((rel >= self.lo) & (rel <= self.hi), axis=1)
        keys = ((rel - self.lo) * self.mult).sum(axis=1)
        keys[~inside] = -1
        return keys

    def lookup(self, elements: np.ndarray) -> np.ndarray:
        keys = self.encode(elements)
        pos = np.searchsorted(self.sorted_keys, keys)
        pos = np.minimum(pos, len(self.sorted_keys) - 1)
        found = (keys >= 0) & (self.sorted_keys[pos] == keys)
        return np.where(found, self.order[pos], -1)


@dataclass(eq=False)
class CayleyBall:
    spec: GroupSpec
    generators: GeneratingSet
    center: Element
    radius: int
    vertices: np.ndarray
    dist: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    _index: ElementIndex | None = field(default=None, repr=False)

    def __post_init__(self):
        counts = np.bincount(self.dist, minlength=self.radius + 1)
        self.layer_offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def index(self) -> ElementIndex:
        if self._index is None:
            self._index = ElementIndex(self.spec, self.center, self.radius, self.vertices)
        return self._index

    def size(self, r: int) -> int:
        """``|B(r)|`` for ``r <= radius``; the ball is the first ``size(r)`` vertices."""
        if r < 0:
            return 0
        if r > self.radius:
            raise ValueError(f"r={r} exceeds ball radius {self.radius}")
        return int(self.layer_offsets[r + 1])

    def profile(self) -> dict[int, int]:
        return {r: int(self.layer_offsets[r + 1] - self.layer_offsets[r]) for r in range(self.radius + 1)}

    def index_of(self, element) -> int:
        idx = int(self.index.lookup(np.array([element], dtype=np.int64))[0])
        if idx < 0:
            raise KeyError(f"{element} not in ball")
        return idx

    def lookup(self, elements: np.ndarray) -> np.ndarray:
        return self.index.lookup(elements)

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def element(self, v: int) -> Element:
        return tuple(int(c) for c in self.vertices[v])

    def truncate(self, radius: int) -> "CayleyBall":
        """The sub-ball ``B(radius)`` with adjacency restricted to it."""
        if radius == self.radius:
            return self
        m = self.size(radius)
        rows = np.repeat(np.arange(m), np.diff(self.indptr[:m + 1]))
        cols = self.indices[:self.indptr[m]]
        keep = cols < m
        counts = np.bincount(rows[keep], minlength=m)
        indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        return CayleyBall(self.spec, self.generators, self.center, radius, self.vertices[:m],
                          self.dist[:m], indptr, cols[keep].astype(np.int64))

    def same_as(self, other: "CayleyBall") -> bool:
        return (self.spec == other.spec and self.generators == other.generators
                and tuple(self.center) == tuple(other.center) and self.radius == other.radius
                and np.array_equal(self.vertices, other.vertices)
                and np.array_equal(self.dist, other.dist)
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("index,coordinates,dist\n")
            for i in range(self.n):
                fh.write(f'{i},"{groups.format_element(self.vertices[i])}",{int(self.dist[i])}\n')


@dataclass(frozen=True)
class VertexSubset:
    ball: CayleyBall
    indices: np.ndarray

    def __len__(self):
        return len(self.indices)

    def elements(self) -> list[Element]:
        return [self.ball.element(i) for i in self.indices]


def _unique_rows(a: np.ndarray) -> np.ndarray:
    if len(a) == 0:
        return a
    return np.unique(a, axis=0)


def _drop_known(cand: np.ndarray, index: ElementIndex, known_keys: np.ndarray) -> np.ndarray:
    keys = index.encode(cand)
    return cand[~np.isin(keys, known_keys)]


def enumerate_ball(spec: GroupSpec, generators: GeneratingSet | None = None, center=None,
                   radius: int = 0, memory_cap: int = DEFAULT_MEMORY_CAP) -> CayleyBall:
    """BFS-enumerate ``B_center(radius)`` with exact distances and internal adjacency."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if generators is None:
        generators = generating_set(spec)
    center = groups._check(spec, groups.identity(spec) if center is None else center)
    gens = generators.as_array()
    step = 1
    if generators.convention != groups.GENERATOR_CONVENTION:
        # custom generators may have long words; widen the key range accordingly
        step = max(1, int(max(np.abs(gens).max(), 1)))
    keyer = ElementIndex(spec, center, radius, np.empty((0, groups.dim(spec)), dtype=np.int64), step=step)

    layers = [np.array([center], dtype=np.int64)]
    layer_keys = [keyer.encode(layers[0])]
    total = 1
    for _ in range(radius):
        frontier = layers[-1]
        cand = groups.multiply_many(spec, frontier[:, None, :], gens[None, :, :]).reshape(-1, frontier.shape[1])
        cand = _unique_rows(cand)
        known = layer_keys[-1] if len(layers) == 1 else np.concatenate(layer_keys[-2:])
        cand = _drop_known(cand, keyer, known)
        total += len(cand)
        if total > memory_cap:
            raise MemoryCapExceeded(f"ball exceeds the memory cap of {memory_cap} vertices")
        layers.append(cand)
        layer_keys.append(keyer.encode(cand))
        if len(cand) == 0:
            break

    vertices = np.concatenate(layers)
    dist = np.concatenate([np.full(len(l), r, dtype=np.int32) for r, l in enumerate(layers)])
    index = ElementIndex(spec, center, radius, vertices, step=step)

    nbr = groups.multiply_many(spec, vertices[:, None, :], gens[None, :, :]).reshape(-1, vertices.shape[1])
    nbr_idx = index.lookup(nbr).reshape(len(vertices), len(gens))
    mask = nbr_idx >= 0
    indptr = np.concatenate([[0], np.cumsum(mask.sum(axis=1))]).astype(np.int64)
    indices = nbr_idx[mask].astype(np.int64)
    return CayleyBall(spec, generators, center, radius, vertices, dist, indptr, indices, index)


def boundary(ball: CayleyBall, r: int) -> VertexSubset:
    """``∂B(r)``: the vertices at distance exactly ``r + 1``."""
    if not 0 <= r < ball.radius:
        raise ValueError(f"inner radius {r} must lie in [0, {ball.radius})")
    lo, hi = ball.layer_offsets[r + 1], ball.layer_offsets[r + 2]
    return VertexSubset(ball, np.arange(lo, hi, dtype=np.int64))


def interior(ball: CayleyBall, r: int) -> VertexSubset:
    return VertexSubset(ball, np.arange(ball.size(r), dtype=np.int64))


class WordMetric:
    """``d^S(g, h) = |g^{-1} h|``, closed form when available, else a BFS table."""

    def __init__(self, spec: GroupSpec, generators: GeneratingSet | None = None, table_radius: int = 0):
        self.spec = spec
        self.generators = generators or generating_set(spec)
        self._closed = self.generators.convention == groups.GENERATOR_CONVENTION and \
            groups.word_length_closed_form(spec, np.zeros((1, groups.dim(spec)), dtype=np.int64)) is not None
        self.table = None
        if not self._closed:
            self.table = enumerate_ball(spec, self.generators, radius=table_radius)

    def length(self, elements: np.ndarray) -> np.ndarray:
        """Word lengths; -1 where a BFS table is used and the element lies outside it."""
        elements = np.asarray(elements, dtype=np.int64)
        if self._closed:
            return groups.word_length_closed_form(self.spec, elements)
        idx = self.table.lookup(elements.reshape(-1, elements.shape[-1]))
        out = np.where(idx >= 0, self.table.dist[np.maximum(idx, 0)], -1)
        return out.reshape(elements.shape[:-1])

    def distance(self, g: np.ndarray, h: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=np.int64)
        h = np.asarray(h, dtype=np.int64)
        return self.length(groups.multiply_many(self.spec, groups.inverse_many(self.spec, g), h))


# --- disk cache -------------------------------------------------------------

def _cache_key(spec, generators, center) -> str:
    text = json.dumps([groups.spec_text(spec), generators.convention, [list(s) for s in generators.elements],
                       list(center)])
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def cache_path(spec, generators, center, radius, directory) -> Path:
    return Path(directory) / _cache_key(spec, generators, center) / f"r{radius}.ball"


def cache_store(ball: CayleyBall, directory) -> Path:
    """Write ``ball`` atomically; returns the file path."""
    buf = io.BytesIO()
    np.savez(buf, vertices=ball.vertices, dist=ball.dist, indptr=ball.indptr, indices=ball.indices)
    payload = buf.getvalue()
    header = json.dumps({
        "format_version": CACHE_VERSION,
        "spec": groups.spec_text(ball.spec),
        "generator_convention": ball.generators.convention,
        "generators": [list(s) for s in ball.generators.elements],
        "center": list(ball.center),
        "radius": ball.radius,
        "sha256": hashlib.sha256(payload).hexdigest(),
    }, sort_keys=True).encode()
    path = cache_path(ball.spec, ball.generators, ball.center, ball.radius, directory)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(CACHE_MAGIC)
            fh.write(CACHE_VERSION.to_bytes(4, "little"))
            fh.write(len(header).to_bytes(4, "little"))
            fh.write(header)
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_ball_file(path, spec, generators, center, radius) -> CayleyBall:
    raw = Path(path).read_bytes()
    if not raw.startswith(CACHE_MAGIC):
        raise CacheCorrupt(f"{path}: bad magic")
    pos = len(CACHE_MAGIC)
    version = int.from_bytes(raw[pos:pos + 4], "little")
    if version != CACHE_VERSION:
        raise CacheMismatch(f"{path}: format version {version}, expected {CACHE_VERSION}")
    hlen = int.from_bytes(raw[pos + 4:pos + 8], "little")
    try:
        header = json.loads(raw[pos + 8:pos + 8 + hlen])
    except ValueError as exc:
        raise CacheCorrupt(f"{path}: unreadable header") from exc
    payload = raw[pos + 8 + hlen:]
    if hashlib.sha256(payload).hexdigest() != header.get("sha256"):
        raise CacheCorrupt(f"{path}: checksum mismatch")
    expected = {
        "spec": groups.spec_text(spec),
        "generator_convention": generators.convention,
        "center": list(center),
        "radius": radius,
    }
    for key, val in expected.items():
        if header.get(key) != val:
            raise CacheMismatch(f"{path}: {key} is {header.get(key)!r}, requested {val!r}")
    data = np.load(io.BytesIO(payload))
    return CayleyBall(spec, generators, tuple(center), radius, data["vertices"], data["dist"],
                      data["indptr"], data["indices"])


def cache_load(spec, generators, center, radius, directory) -> CayleyBall:
    generators = generators or generating_set(spec)
    center = groups._check(spec, groups.identity(spec) if center is None else center)
    path = cache_path(spec, generators, center, radius, directory)
    if not path.exists():
        raise FileNotFoundError(path)
    return read_ball_file(path, spec, generators, center, radius)


def cached_ball(spec, generators=None, center=None, radius=0, directory=None,
                memory_cap: int = DEFAULT_MEMORY_CAP) -> CayleyBall:
    """Load from ``directory`` when present, else enumerate (and store)."""
    generators = generators or generating_set(spec)
    center = groups._check(spec, groups.identity(spec) if center is None else center)
    if directory is None:
        return enumerate_ball(spec, generators, center, radius, memory_cap)
    try:
        return cache_load(spec, generators, center, radius, directory)
    except FileNotFoundError:
        pass
    ball = enumerate_ball(spec, generators, center, radius, memory_cap)
    cache_store(ball, directory)
    return ball
