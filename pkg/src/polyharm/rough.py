"""Rough isometries from finite graph windows into Cayley graphs, and the extension operator.

A rough isometry ``phi: X -> G`` with parameters ``(a, b)`` satisfies

    d^X(x, y) / a - b <= d^G(phi x, phi y) <= a d^X(x, y) + b

and every point of ``G`` is within ``b`` of the image. Everything here works on
finite windows of infinite graphs; assertions skip a margin of width ``a*b + b``
near the window edge, where truncation inflates distances.

Injectivization multiplies the target by ``Z_q`` and separates each fiber by
residues. Extension ``E`` then turns a function on ``X`` into one on
``G x Z_q``: the value at an image point is copied, other points get the
average over the preimages of nearby image points.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import _kernels, balls, groups
from .harmonic import solve_graph_dirichlet


class RoughIsometryError(ValueError):
    """A precondition of a rough-isometry construction failed."""


# --------------------------------------------------------------------------
# finite graphs
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiniteGraph:
    """A connected finite window of a bounded-geometry graph.

    ``truncated`` marks vertices whose neighbourhood in the ambient graph is cut
    by the window; harmonicity is only imposed off these. ``complete_radius`` is
    the largest ``R`` for which the window's ``B_root(R)`` is the ambient ball.
    """

    indptr: np.ndarray
    indices: np.ndarray
    labels: np.ndarray
    degree_bound: int
    root: int = 0
    truncated: np.ndarray | None = None
    complete_radius: int | None = None

    def __post_init__(self):
        n = len(self.indptr) - 1
        if n < 1:
            raise ValueError("graph has no vertices")
        if len(self.labels) != n:
            raise ValueError("one label per vertex required")
        rows = np.repeat(np.arange(n), np.diff(self.indptr))
        if np.any(rows == self.indices):
            raise ValueError("self-loop")
        A = sparse.csr_matrix((np.ones(len(self.indices)), self.indices, self.indptr), shape=(n, n))
        if A.nnz and A.max() > 1:
            raise ValueError("multi-edge")
        if (A != A.T).nnz:
            raise ValueError("adjacency is not symmetric")
        if self.degree.max() > self.degree_bound:
            raise ValueError(f"a vertex has degree above the bound {self.degree_bound}")
        depth = _kernels.bfs_many(self.indptr, self.indices, np.array([self.root]), -1)[0]
        if np.any(depth < 0):
            raise ValueError("graph is not connected")
        object.__setattr__(self, "depth", depth)
        if self.truncated is None:
            object.__setattr__(self, "truncated", depth == depth.max())
        if self.complete_radius is None:
            object.__setattr__(self, "complete_radius", int(depth.max()) - 1)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def distances(self, sources, maxdepth: int = -1) -> np.ndarray:
        return _kernels.bfs_many(self.indptr, self.indices, np.asarray(sources, dtype=np.int64), maxdepth)

    def ball(self, p: int, R: int) -> np.ndarray:
        return np.flatnonzero(self.distances([p], R)[0] >= 0)

    @classmethod
    def from_edges(cls, n: int, edges, labels=None, degree_bound=None, root: int = 0, **kw) -> "FiniteGraph":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        A = sparse.coo_matrix((np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])),
                              shape=(n, n)).tocsr()
        A.sum_duplicates()
        A.sort_indices()
        labels = np.arange(n)[:, None] if labels is None else np.asarray(labels)
        deg = np.diff(A.indptr)
        return cls(A.indptr.astype(np.int64), A.indices.astype(np.int64), labels,
                   int(deg.max()) if degree_bound is None else int(degree_bound), root, **kw)


def load_graph_csv(path) -> FiniteGraph:
    """Edge list ``u,v`` of integer vertex ids (optional header); vertex 0 of the sorted ids is the root."""
    pairs = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                pairs.append((int(row[0]), int(row[1])))
            except ValueError:
                if pairs:
                    raise ValueError(f"bad edge row {row!r}") from None
    if not pairs:
        raise ValueError("edge list is empty")
    ids = np.unique(np.asarray(pairs))
    pos = {v: i for i, v in enumerate(ids.tolist())}
    edges = [(pos[u], pos[v]) for u, v in pairs]
    return FiniteGraph.from_edges(len(ids), edges, labels=ids[:, None])


# --------------------------------------------------------------------------
# rough isometries
# --------------------------------------------------------------------------

@dataclass(eq=False)
class RoughIsometry:
    """Vertex map ``X window -> G``; ``covered_radius``: targets within it have all preimages in the window."""

    graph: FiniteGraph
    spec: groups.GroupSpec
    generators: balls.GeneratingSet
    images: np.ndarray
    a: float
    b: float
    covered_radius: int
    q: int | None = None
    base_b: float | None = None
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.int64)
        if self.images.shape != (self.graph.n, groups.dim(self.spec)):
            raise ValueError("one target element per source vertex required")
        if self.a < 1 or self.b < 0:
            raise ValueError("need a >= 1 and b >= 0")

    @property
    def center(self) -> np.ndarray:
        return self.images[self.graph.root]

    @property
    def margin(self) -> int:
        return int(math.ceil(self.a * self.b + self.b))

    def metric(self, reach: int) -> balls.WordMetric:
        return balls.WordMetric(self.spec, self.generators, reach)


def load_map_csv(path, graph: FiniteGraph, spec, a: float, b: float, covered_radius=None) -> RoughIsometry:
    """Rows ``vertex_id,c1,...,ck`` giving the image of every vertex (ids as in the edge list)."""
    ids = {int(v): i for i, v in enumerate(graph.labels[:, 0].tolist())}
    k = groups.dim(spec)
    images = np.full((graph.n, k), np.iinfo(np.int64).min, dtype=np.int64)
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                v = int(row[0])
            except ValueError:
                continue
            if v not in ids or len(row) != k + 1:
                raise ValueError(f"bad map row {row!r}")
            images[ids[v]] = [int(c) for c in row[1:]]
    if np.any(images == np.iinfo(np.int64).min):
        raise ValueError("map does not cover every vertex")
    gens = balls.generating_set(spec)
    if covered_radius is None:
        # images of cut vertices bound how far the window is known to reach
        metric = balls.WordMetric(spec, gens, 0) if groups.word_length_closed_form(
            spec, images[:1]) is not None else None
        if metric is None:
            covered_radius = 0
        else:
            cut = metric.distance(images[graph.root][None], images[graph.truncated])
            covered_radius = max(0, int(cut.min()) - int(math.ceil(b)) - 1)
    return RoughIsometry(graph, spec, gens, images, a, b, int(covered_radius))


def make_subdivided_lattice(D: int, window_radius: int) -> RoughIsometry:
    """Edge-subdivided ``Z^D`` on the ``l1`` window of radius ``window_radius``, with its map to ``Z^D``.

    Vertex labels are doubled coordinates: ``2x`` for lattice points, ``2x + e_i``
    for the midpoint of ``[x, x + e_i]``. Lattice points come first, so every
    lattice point is the smallest index in its fiber. Midpoints map to the
    lexicographically smaller endpoint ``x``; ``(a, b) = (2, 1)``.
    """
    if D not in (1, 2, 3):
        raise ValueError("D must be 1, 2 or 3")
    if window_radius < 0:
        raise ValueError("window radius must be >= 0")
    rho = int(window_radius)
    lat = balls.enumerate_ball(groups.Lattice(D), radius=rho)
    pts = lat.vertices
    eye = np.eye(D, dtype=np.int64)
    mids, mid_img, mid_depth = [], [], []
    norm = np.abs(pts).sum(axis=1)
    for i in range(D):
        nb = lat.lookup(pts + eye[i])
        ok = nb >= 0
        mids.append(2 * pts[ok] + eye[i])
        mid_img.append(pts[ok])
        mid_depth.append(2 * np.minimum(norm[ok], norm[nb[ok]]) + 1)
    mids = np.concatenate(mids) if mids else np.zeros((0, D), dtype=np.int64)
    mid_img = np.concatenate(mid_img)
    mid_depth = np.concatenate(mid_depth)
    order = np.lexsort(tuple(mids[:, j] for j in range(D - 1, -1, -1)) + (mid_depth,))
    mids, mid_img = mids[order], mid_img[order]

    labels = np.concatenate([2 * pts, mids])
    images = np.concatenate([pts, mid_img])
    n_lat = len(pts)
    # edges: midpoint 2x + e_i joins lattice points x and x + e_i
    mid_ids = np.arange(n_lat, len(labels))
    lo = lat.lookup(mid_img)
    axis = np.argmax(mids - 2 * mid_img, axis=1)
    hi = lat.lookup(mid_img + eye[axis])
    edges = np.concatenate([np.stack([mid_ids, lo], 1), np.stack([mid_ids, hi], 1)])
    truncated = np.zeros(len(labels), dtype=bool)
    truncated[:n_lat] = norm == rho
    graph = FiniteGraph.from_edges(len(labels), edges, labels, degree_bound=2 * D, root=0,
                                   truncated=truncated, complete_radius=2 * rho)
    return RoughIsometry(graph, groups.Lattice(D), balls.generating_set(groups.Lattice(D)), images,
                         2.0, 1.0, max(rho - 1, 0))


# --------------------------------------------------------------------------
# checks
# --------------------------------------------------------------------------

@dataclass
class RoughCheck:
    a: float
    b: float
    margin: int
    n_sources: int
    n_pairs: int
    n_density_targets: int
    lower: list[tuple]
    upper: list[tuple]
    density: list[tuple]
    n_lower: int
    n_upper: int
    n_density: int
    ok: bool
    min_b: float = 0.0

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


LIST_LIMIT = 50


def _pair_check(dX: np.ndarray, dY: np.ndarray, a: float, b: float, ids_src, ids_tgt=None):
    """Violations of ``dX/a - b <= dY <= a dX + b`` on all pairs; plus the smallest b that works with this a."""
    lower_bad = dX > a * (dY + b)
    upper_bad = dY > a * dX + b
    need = np.maximum(dX / a - dY, dY - a * dX)
    min_b = float(max(0.0, need.max())) if need.size else 0.0

    def listing(mask):
        i, j = np.nonzero(np.triu(mask, 1))
        rows = [(int(ids_src[x]), int(ids_src[y]), int(dX[x, y]), int(dY[x, y]))
                for x, y in zip(i[:LIST_LIMIT], j[:LIST_LIMIT])]
        return rows, int(len(i))

    lo, n_lo = listing(lower_bad)
    up, n_up = listing(upper_bad)
    return lo, n_lo, up, n_up, min_b


def _source_interior(phi: RoughIsometry) -> np.ndarray:
    g = phi.graph
    return np.flatnonzero(g.depth <= g.depth.max() - phi.margin) if g.n > 1 else np.array([0])


def _image_lookup(phi: RoughIsometry, radius: int):
    """Target ball about ``phi(root)`` and, per ball vertex, the smallest source index mapping to it (-1 if none)."""
    tball = balls.enumerate_ball(phi.spec, phi.generators, center=phi.center, radius=radius)
    pos = tball.lookup(phi.images)
    first = np.full(tball.n, -1, dtype=np.int64)
    inside = np.flatnonzero(pos >= 0)
    # reversed assignment leaves the smallest source index in place
    first[pos[inside][::-1]] = inside[::-1]
    return tball, first


def _offsets_by_length(phi: RoughIsometry, b: float):
    ob = balls.enumerate_ball(phi.spec, phi.generators, radius=int(math.floor(b)))
    return [(t, ob.vertices[ob.dist == t]) for t in range(ob.radius + 1)]


def _nearest_image(phi: RoughIsometry, targets: np.ndarray, b: float, tball, first):
    """Per target: (distance to the closest image within b, smallest source index at that distance); -1 if none."""
    n = len(targets)
    best_d = np.full(n, -1, dtype=np.int64)
    best_x = np.full(n, -1, dtype=np.int64)
    big = np.iinfo(np.int64).max
    for t, offs in _offsets_by_length(phi, b):
        todo = np.flatnonzero(best_d < 0)
        if not len(todo):
            break
        cand = np.full(len(todo), big)
        for s in offs:
            w = groups.multiply_many(phi.spec, targets[todo], np.broadcast_to(s, targets[todo].shape))
            idx = tball.lookup(w)
            src = np.where(idx >= 0, first[np.maximum(idx, 0)], -1)
            cand = np.where(src >= 0, np.minimum(cand, src), cand)
        hit = cand < big
        best_d[todo[hit]] = t
        best_x[todo[hit]] = cand[hit]
    return best_d, best_x


def check_rough_isometry(phi: RoughIsometry, a: float | None = None, b: float | None = None) -> RoughCheck:
    """Exhaustive pair check on the interior window and b-density on the covered target subwindow."""
    a = phi.a if a is None else float(a)
    b = phi.b if b is None else float(b)
    if a < 1 or b < 0:
        raise ValueError("need a >= 1 and b >= 0")
    margin = int(math.ceil(a * b + b))
    src = np.flatnonzero(phi.graph.depth <= phi.graph.depth.max() - margin)
    if not len(src):
        src = np.array([phi.graph.root])
    dX = phi.graph.distances(src)[:, src].astype(np.float64)
    img = phi.images[src]
    reach = int(math.ceil(a * dX.max() + b)) + 1 if dX.size else 1
    metric = phi.metric(reach)
    dY = np.empty_like(dX)
    for i in range(len(src)):
        dY[i] = metric.distance(np.broadcast_to(img[i], img.shape), img)
    if np.any(dY < 0):
        raise ValueError("target metric table too small for the window")
    lo, n_lo, up, n_up, min_b = _pair_check(dX, dY, a, b, src)

    r_dense = phi.covered_radius - margin
    dens, n_dens, n_targets = [], 0, 0
    if r_dense >= 0:
        tball, first = _image_lookup(phi, phi.covered_radius + int(math.floor(b)))
        targets = tball.vertices[:tball.size(r_dense)]
        n_targets = len(targets)
        d, _ = _nearest_image(phi, targets, b, tball, first)
        bad = np.flatnonzero(d < 0)
        n_dens = len(bad)
        dens = [tuple(int(c) for c in targets[i]) for i in bad[:LIST_LIMIT]]
    return RoughCheck(a, b, margin, len(src), len(src) * (len(src) - 1) // 2, n_targets,
                      lo, up, dens, n_lo, n_up, n_dens, n_lo + n_up + n_dens == 0, min_b)


@dataclass(eq=False)
class RoughInverse:
    """``psi`` on a target ball: ``sources[i]`` is the X-vertex chosen for ``ball.vertices[i]``."""

    phi: RoughIsometry
    ball: balls.CayleyBall
    sources: np.ndarray


def rough_inverse(phi: RoughIsometry, radius: int | None = None) -> RoughInverse:
    """``psi(y) = x`` with ``d(y, phi x) <= b``: closest image first, then the smallest source index."""
    radius = phi.covered_radius - phi.margin if radius is None else int(radius)
    if radius < 0 or radius > phi.covered_radius:
        raise RoughIsometryError(f"inverse radius {radius} outside the covered window {phi.covered_radius}")
    tball, first = _image_lookup(phi, radius + int(math.floor(phi.b)))
    targets = tball.vertices[:tball.size(radius)]
    _, src = _nearest_image(phi, targets, phi.b, tball, first)
    bad = np.flatnonzero(src < 0)
    if len(bad):
        raise RoughIsometryError(f"{len(bad)} target vertices have no image within b={phi.b}, e.g. "
                                 f"{groups.format_element(tuple(targets[bad[0]]))}")
    return RoughInverse(phi, tball.truncate(radius), src)


def check_inverse(psi: RoughInverse) -> RoughCheck:
    """``psi`` as an ``(a, 3ab)``-rough isometry: pairs over its domain, density over ``phi^{-1}`` of it."""
    phi = psi.phi
    a, b = phi.a, 3 * phi.a * phi.b
    n = psi.ball.n
    reach = 2 * psi.ball.radius + 1
    metric = phi.metric(reach)
    T = psi.ball.vertices
    dG = np.empty((n, n))
    for i in range(n):
        dG[i] = metric.distance(np.broadcast_to(T[i], T.shape), T)
    uniq, inv = np.unique(psi.sources, return_inverse=True)
    dXu = phi.graph.distances(uniq)[:, uniq].astype(np.float64)
    dX = dXu[np.ix_(inv, inv)]
    # roles: the inequality is about d^X(psi y, psi z) against d^G(y, z)
    lo, n_lo, up, n_up, min_b = _pair_check(dG, dX, a, b, np.arange(n))
    in_domain = psi.ball.lookup(phi.images) >= 0
    xs = np.flatnonzero(in_domain)
    dist_to_image = phi.graph.distances(uniq)[:, xs].min(axis=0)
    bad = xs[dist_to_image > b]
    dens = [int(x) for x in bad[:LIST_LIMIT]]
    return RoughCheck(a, b, 0, n, n * (n - 1) // 2, len(xs), lo, up, dens, n_lo, n_up, len(bad),
                      n_lo + n_up + len(bad) == 0, min_b)


def check_composition(psi: RoughInverse) -> RoughCheck:
    """``psi o phi`` on the sources whose image lies in the domain of ``psi``, as an ``(a^2, 4ab)``-rough isometry."""
    phi = psi.phi
    pos = psi.ball.lookup(phi.images)
    xs = np.flatnonzero(pos >= 0)
    comp = psi.sources[pos[xs]]
    dX = phi.graph.distances(xs)[:, xs].astype(np.float64)
    uniq, inv = np.unique(comp, return_inverse=True)
    dC = phi.graph.distances(uniq)[:, uniq].astype(np.float64)[np.ix_(inv, inv)]
    a, b = phi.a ** 2, 4 * phi.a * phi.b
    lo, n_lo, up, n_up, min_b = _pair_check(dX, dC, a, b, xs)
    return RoughCheck(a, b, 0, len(xs), len(xs) * (len(xs) - 1) // 2, 0, lo, up, [], n_lo, n_up, 0,
                      n_lo + n_up == 0, min_b)


# --------------------------------------------------------------------------
# injectivization
# --------------------------------------------------------------------------

def injectivize(phi: RoughIsometry, Delta: int | None = None) -> RoughIsometry:
    """``phi' = (phi, residue)`` into ``G x Z_q`` with ``q = Delta^(floor(ab) + 1)``.

    Residues number each fiber in source-index order. The returned map carries
    ``b' = b + floor(q/2)``: moving around ``Z_q`` costs up to ``floor(q/2)``, and
    without that slack points of ``G x Z_q`` far from the used residues would
    have no image within ``b``.
    """
    if isinstance(phi.spec, groups.Product):
        raise RoughIsometryError("target is already a product with a cyclic factor")
    Delta = phi.graph.degree_bound if Delta is None else int(Delta)
    if Delta < 1:
        raise ValueError("Delta must be >= 1")
    q = Delta ** (int(math.floor(phi.a * phi.b)) + 1)
    _, inv = np.unique(phi.images, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    order = np.lexsort((np.arange(phi.graph.n), inv))
    starts = np.r_[0, np.flatnonzero(np.diff(inv[order])) + 1]
    run_start = np.repeat(starts, np.diff(np.r_[starts, len(order)]))
    residue = np.empty(phi.graph.n, dtype=np.int64)
    residue[order] = np.arange(len(order)) - run_start
    if residue.max() >= q:
        raise RoughIsometryError(f"a fiber has {residue.max() + 1} points, more than q={q}")
    spec2 = groups.Product(phi.spec, q)
    if phi.generators.convention == groups.GENERATOR_CONVENTION:
        gens2 = balls.generating_set(spec2)
    else:
        k = groups.dim(phi.spec)
        els = [tuple(s) + (0,) for s in phi.generators.elements]
        els += [(0,) * k + (1,), (0,) * k + (q - 1,)] if q > 2 else ([(0,) * k + (1,)] if q == 2 else [])
        gens2 = balls.generating_set(spec2, els)
    images2 = np.concatenate([phi.images, residue[:, None]], axis=1)
    if len(np.unique(images2, axis=0)) != phi.graph.n:
        raise AssertionError("injectivized map is not injective")
    if not np.array_equal(images2[:, :-1], phi.images):
        raise AssertionError("projection of the injectivized map differs from phi")
    out = RoughIsometry(phi.graph, spec2, gens2, images2, phi.a, phi.b + q // 2, phi.covered_radius,
                        q=q, base_b=phi.b)
    out.notes.append(f"q = {Delta}^{int(math.floor(phi.a * phi.b)) + 1} = {q}; "
                     f"max fiber {int(residue.max()) + 1}; b' = {phi.b} + {q // 2}")
    return out


def is_injective(phi: RoughIsometry) -> bool:
    return len(np.unique(phi.images, axis=0)) == phi.graph.n


# --------------------------------------------------------------------------
# extension operator
# --------------------------------------------------------------------------

@dataclass(eq=False)
class ExtensionField:
    """``E u`` on a ball of the target; ``direct`` marks image points (value copied, not averaged).

    ``sums``/``counts`` are the numerator and ``|W_y|`` of the average, kept so
    callers can redo the division exactly.
    """

    phi: RoughIsometry
    ball: balls.CayleyBall
    values: np.ndarray
    direct: np.ndarray
    sums: np.ndarray
    counts: np.ndarray
    source_of_direct: np.ndarray
    harmonic: np.ndarray
    b_used: float

    @property
    def provenance(self) -> np.ndarray:
        return np.where(self.direct, "direct", "averaged")


def _split_target(phi: RoughIsometry):
    if isinstance(phi.spec, groups.Product):
        base = phi.spec.base
        k = groups.dim(base)
        gens = phi.generators.as_array()
        base_gens = gens[gens[:, -1] == 0][:, :k]
        bg = balls.generating_set(base) if phi.generators.convention == groups.GENERATOR_CONVENTION \
            else balls.generating_set(base, [tuple(r) for r in base_gens])
        return base, bg, phi.images[:, :k], phi.images[:, k], phi.spec.q
    return phi.spec, phi.generators, phi.images, np.zeros(phi.graph.n, dtype=np.int64), 1


def harmonic_mask(graph: FiniteGraph, u: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Per column: is ``L u = 0`` (to ``tol``) at every vertex not cut by the window."""
    u2 = u if u.ndim == 2 else u[:, None]
    lap = _kernels.graph_laplacian(graph.indptr, graph.indices, np.ascontiguousarray(u2, dtype=np.float64))
    inner = ~graph.truncated
    scale = np.maximum(1.0, np.abs(u2).max(axis=0))
    tol = 1e-9 * scale if tol is None else np.full(u2.shape[1], tol)
    worst = np.abs(lap[inner]).max(axis=0) if inner.any() else np.zeros(u2.shape[1])
    return worst <= tol


def extend(phi: RoughIsometry, u: np.ndarray, radius: int) -> ExtensionField:
    """``E u`` on the target ball of ``radius`` about ``phi(root)``; ``phi`` must be injective.

    ``W_y`` is the set of sources whose image lies within ``phi.b`` of ``y``. On
    ``G x Z_q`` the ball ``B_b((g, r))`` is the union over residues ``rho`` of
    ``B^G_{b - cyc(r - rho)}(g) x {rho}``, so the sums are cumulative ball sums in
    ``G``, one pass per used residue.
    """
    u = np.asarray(u, dtype=np.float64)
    squeeze = u.ndim == 1
    U = u[:, None] if squeeze else u
    if U.shape[0] != phi.graph.n or not np.all(np.isfinite(U)):
        raise ValueError("field must give a finite value at every source vertex")
    if not is_injective(phi):
        raise RoughIsometryError("extension needs an injective map; injectivize first")
    radius = int(radius)
    b_int = int(math.floor(phi.b))
    if radius + b_int > phi.covered_radius:
        raise RoughIsometryError(f"radius {radius} + b {b_int} exceeds the covered window {phi.covered_radius}")
    base, base_gens, gimg, res, q = _split_target(phi)
    k = groups.dim(base)
    center = phi.center
    big = balls.enumerate_ball(base, base_gens, center=center[:k], radius=radius + b_int)
    n_src = big.size(radius)
    gpos = big.lookup(gimg)
    m = U.shape[1]

    out = balls.enumerate_ball(phi.spec, phi.generators, center=center, radius=radius)
    og = out.vertices[:, :k]
    o_idx = big.lookup(og)
    if np.any(o_idx < 0) or np.any(o_idx >= n_src):
        raise AssertionError("target ball does not project into the base ball")
    o_res = out.vertices[:, k] if q > 1 else np.zeros(out.n, dtype=np.int64)

    sums = np.zeros((out.n, m))
    counts = np.zeros(out.n)
    for rho in np.unique(res[gpos >= 0]):
        sel = np.flatnonzero((res == rho) & (gpos >= 0))
        V = np.zeros((big.n, m + 1))
        V[gpos[sel], :m] = U[sel]
        V[gpos[sel], m] = 1.0
        layer = _kernels.ball_layer_sums(big.indptr, big.indices, np.arange(n_src), V, b_int)
        diff = np.abs(o_res - rho) % q if q > 1 else np.zeros(out.n, dtype=np.int64)
        cyc = np.minimum(diff, q - diff) if q > 1 else diff
        t = b_int - cyc
        ok = t >= 0
        picked = layer[o_idx[ok], t[ok]]
        sums[ok] += picked[:, :m]
        counts[ok] += picked[:, m]

    opos = out.lookup(phi.images)
    direct = np.zeros(out.n, dtype=bool)
    src_of = np.full(out.n, -1, dtype=np.int64)
    hit = np.flatnonzero(opos >= 0)
    direct[opos[hit]] = True
    src_of[opos[hit]] = hit
    empty = np.flatnonzero(~direct & (counts == 0))
    if len(empty):
        raise RoughIsometryError(f"W_y is empty at {len(empty)} target vertices, e.g. "
                                 f"{groups.format_element(tuple(out.vertices[empty[0]]))}")
    vals = np.empty((out.n, m))
    avg = ~direct
    vals[avg] = sums[avg] / counts[avg][:, None]
    vals[direct] = U[src_of[direct]]
    harm = harmonic_mask(phi.graph, U)
    if squeeze:
        vals, sums = vals[:, 0], sums[:, 0]
    return ExtensionField(phi, out, vals, direct, sums, counts, src_of, harm, phi.b)


@dataclass
class EProperties:
    n_fields: int
    n_vertices: int
    alpha: float
    beta: float
    linear: bool
    cancels: bool
    injective: bool
    sup_norm: bool
    delta_visible: bool

    @property
    def ok(self) -> bool:
        return self.linear and self.cancels and self.injective and self.sup_norm and self.delta_visible

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["ok"] = self.ok
        return d


def seeded_integer_fields(graph: FiniteGraph, n_fields: int, seed: int, bound: int = 1000) -> np.ndarray:
    return np.random.default_rng([seed, 1]).integers(-bound, bound + 1, size=(graph.n, n_fields)).astype(np.float64)


def _exact_integers(a: np.ndarray) -> np.ndarray:
    if np.any(np.abs(a) >= 2.0 ** 52) or np.any(a != np.round(a)):
        raise ValueError("integer sums lost exactness")
    return a.astype(np.int64)


def operator_E_properties(phi: RoughIsometry, fields: np.ndarray, radius: int,
                          alpha: int = 2, beta: int = 3) -> EProperties:
    """Linearity, injectivity and the sup-norm bound of ``E`` on integer-valued sample fields.

    Every ``E u`` is ``S/|W|`` with the same ``|W|`` for all fields, and the
    sums of integers are exact in double precision, so comparing numerators as
    integers is an exact rational comparison.
    """
    F = np.asarray(fields, dtype=np.float64)
    if F.ndim != 2 or F.shape[1] < 1 or np.any(F != np.round(F)):
        raise ValueError("fields must be an integer-valued (n, m) array")
    m = F.shape[1]
    V = np.roll(F, -1, axis=1)
    W = alpha * F + beta * V
    delta = np.zeros((phi.graph.n, 1))
    probe = phi.graph.n // 2
    delta[probe] = 1.0
    ext = extend(phi, np.concatenate([F, V, W, F - F, delta], axis=1), radius)
    S = _exact_integers(ext.sums)
    sF, sV, sW, sZ = S[:, :m], S[:, m:2 * m], S[:, 2 * m:3 * m], S[:, 3 * m:4 * m]
    vals = ext.values
    vF, vV, vW, vZ = vals[:, :m], vals[:, m:2 * m], vals[:, 2 * m:3 * m], vals[:, 3 * m:4 * m]
    d = ext.direct
    linear = bool(np.array_equal(sW[~d], alpha * sF[~d] + beta * sV[~d])
                  and np.array_equal(vW[d], alpha * vF[d] + beta * vV[d]))
    cancels = bool(np.all(sZ == 0) and np.all(vZ == 0))
    covered = ext.source_of_direct[d]
    injective = bool(np.array_equal(vF[d], F[covered]))
    sup = bool(np.all(np.abs(vF).max(axis=0) <= np.abs(F).max(axis=0)))
    pos = ext.ball.lookup(phi.images[probe][None])[0]
    delta_visible = bool(pos < 0 or vals[pos, -1] != 0)
    return EProperties(m, ext.ball.n, alpha, beta, linear, cancels, injective, sup, delta_visible)


def mvl_constant(ext: ExtensionField, y, R: int, columns=None, require_harmonic: bool = True):
    """``C = Eu(y)^2 |B_y(R)| / sum_{B_y(R)} (Eu)^2`` per column (array, or float for a single field)."""
    vals = ext.values if ext.values.ndim == 2 else ext.values[:, None]
    cols = np.arange(vals.shape[1]) if columns is None else np.atleast_1d(columns)
    if require_harmonic and not np.all(ext.harmonic[cols]):
        raise ValueError("source field is not harmonic on the window")
    y = np.asarray(y, dtype=np.int64)
    yb = balls.enumerate_ball(ext.phi.spec, ext.phi.generators, center=y, radius=int(R))
    idx = ext.ball.lookup(yb.vertices)
    if np.any(idx < 0):
        raise ValueError(f"B_y({R}) leaves the extension window")
    sub = vals[np.ix_(idx, cols)]
    denom = np.einsum("ij,ij->j", sub, sub)
    if np.any(denom == 0):
        raise ZeroDivisionError("Eu vanishes on the whole ball")
    C = sub[0] ** 2 * len(idx) / denom
    return float(C[0]) if ext.values.ndim == 1 and columns is None else C


def random_harmonic_fields(graph: FiniteGraph, n_fields: int, seed: int) -> np.ndarray:
    """Harmonic on every uncut vertex, with seeded Gaussian data on the cut vertices."""
    rng = np.random.default_rng([seed, 2])
    data = np.zeros((graph.n, n_fields))
    data[graph.truncated] = rng.standard_normal((int(graph.truncated.sum()), n_fields))
    return solve_graph_dirichlet(graph.indptr, graph.indices, ~graph.truncated, data)


def mean_value_on_graph(graph: FiniteGraph, u: np.ndarray, radii, p: int | None = None) -> np.ndarray:
    """``u(p)^2 |B_p(R)| / sum_{B_p(R)} u^2`` on the source graph, shape (len(radii), m)."""
    p = graph.root if p is None else p
    U = u if u.ndim == 2 else u[:, None]
    d = graph.distances([p])[0]
    out = []
    for R in radii:
        if p == graph.root and R > graph.complete_radius:
            raise ValueError(f"B_p({R}) is not complete in the window")
        sub = U[d <= R]
        out.append(U[p] ** 2 * len(sub) / np.einsum("ij,ij->j", sub, sub))
    return np.array(out)


# --------------------------------------------------------------------------
# volume sandwich
# --------------------------------------------------------------------------

@dataclass
class Sandwich:
    C1: float
    radii: list[int]
    source_volumes: list[int]
    target_volumes: list[int]
    ratios: list[float]
    proof_C2: float
    measured_C2: float
    ok: bool

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def volume_sandwich(phi: RoughIsometry, radii=None, C1: float | None = None) -> Sandwich:
    """``|B^X_p(R)| >= C2 |B^G_{phi p}(C1 R)|`` on the grid.

    Fibers of a rough inverse lie in ``b``-balls, which gives ``C2 = 1/|B_e(b)|``;
    the measured ``C2`` is the smallest ratio on the grid.
    """
    C1 = 1.0 / (2 * phi.a) if C1 is None else float(C1)
    if radii is None:
        lo = int(math.ceil(6 * phi.a * phi.b))
        radii = list(range(max(lo, 1), phi.graph.complete_radius + 1))
    radii = [int(R) for R in radii]
    if not radii:
        raise ValueError("empty probe grid")
    if max(radii) > phi.graph.complete_radius:
        raise ValueError("probe radius beyond the complete part of the window")
    d = phi.graph.depth
    src = [int(np.sum(d <= R)) for R in radii]
    top = int(math.floor(C1 * max(radii)))
    tb = balls.enumerate_ball(phi.spec, phi.generators, center=phi.center, radius=top)
    tgt = [int(tb.size(int(math.floor(C1 * R)))) for R in radii]
    ratios = [s / t for s, t in zip(src, tgt)]
    bvol = balls.enumerate_ball(phi.spec, phi.generators, radius=int(math.floor(phi.b))).n
    proof = 1.0 / bvol
    return Sandwich(C1, radii, src, tgt, ratios, proof, min(ratios), min(ratios) >= proof)


# --------------------------------------------------------------------------
# the whole suite on the subdivided lattice
# --------------------------------------------------------------------------

DEFAULT_PROBE_POINTS = ((0, 0, 0), (1, 0, 1), (0, -1, 3), (0, 0, 5))


def probe_floor(a: float, b: float) -> int:
    """Lower end of the default mean-value probe grid."""
    return int(math.ceil(max(6 * a * b, 2 * b / a, 10)))


def rough_suite(D: int = 2, radii=(10, 20, 40), n_fields: int = 20, seed: int = 0x4841524D,
                check_window: int = 15, probe_points=None) -> dict:
    """Every check of the rough-isometry machinery on edge-subdivided ``Z^D``."""
    radii = [int(R) for R in radii]
    report: dict = {"D": D, "radii": radii, "n_fields": n_fields, "seed": seed}

    if 2 * check_window < 12:
        raise ValueError("check window too small: the sandwich grid starts at 6ab = 12")
    small = make_subdivided_lattice(D, check_window)
    chk = check_rough_isometry(small)
    psi = rough_inverse(small)
    report["check"] = chk.as_dict()
    report["inverse"] = check_inverse(psi).as_dict()
    report["composition"] = check_composition(psi).as_dict()

    if probe_points is None:
        probe_points = [p[:D] + p[-1:] for p in DEFAULT_PROBE_POINTS]
    probe_points = [tuple(int(c) for c in p) for p in probe_points]
    inj_small = injectivize(small)
    metric = balls.WordMetric(inj_small.spec, inj_small.generators, 0)
    reach = int(metric.length(np.array(probe_points)).max())
    T = max(radii) + reach
    window = T + int(math.floor(inj_small.b)) + 1
    phi = make_subdivided_lattice(D, window)
    inj = injectivize(phi)
    report["injectivize"] = {"q": inj.q, "Delta": phi.graph.degree_bound, "a": phi.a, "b": phi.b,
                             "b_extension": inj.b, "injective": is_injective(inj),
                             "projection_ok": bool(np.array_equal(inj.images[:, :D], phi.images)),
                             "notes": inj.notes}

    ints = seeded_integer_fields(phi.graph, n_fields, seed)
    report["E"] = operator_E_properties(inj, ints, T).as_dict()

    U = random_harmonic_fields(phi.graph, n_fields, seed)
    ext = extend(inj, U, T)
    table = []
    for R in radii:
        per_point = [mvl_constant(ext, y, R) for y in probe_points]
        table.append({"R": R, "max": float(np.max(per_point)), "by_point": [float(np.max(c)) for c in per_point]})
    maxes = [row["max"] for row in table]
    report["mvl"] = {"probe_points": [list(p) for p in probe_points], "rows": table,
                     "spread": max(maxes) / min(maxes), "probe_floor": probe_floor(phi.a, phi.b),
                     "harmonic": bool(ext.harmonic.all()),
                     "notes": ["probe grid lower end is a calibration choice"]
                     + [f"R={R} is below the default probe floor" for R in radii if R < probe_floor(phi.a, phi.b)]}
    mv_x = mean_value_on_graph(phi.graph, U, [2 * R for R in radii])
    report["mean_value_X"] = {"radii": [2 * R for R in radii], "max": [float(r.max()) for r in mv_x]}
    sw = volume_sandwich(small, C1=1 / 4)
    report["sandwich"] = sw.as_dict()
    report["ok"] = bool(chk.ok and report["inverse"]["ok"] and report["composition"]["ok"]
                        and report["injectivize"]["injective"] and report["E"]["ok"] and sw.ok)
    return report
