"""Uniform spanning trees on quotient multigraphs and lifted edge statistics.

The sampler is Wilson's algorithm: loop-erased random walks from each
unvisited vertex into the growing tree, which yields the exact uniform law
on spanning trees with parallel edges handled by weighting steps
proportionally to multiplicity.  Orientation toward the root gives a finite
analogue of the oriented forest model, and lifting tree indicators through
a chain of quotients estimates forest edge marginals on the group itself.

Randomness is counter-based: every (seed, quotient, sample) triple owns an
independent stream, so results do not depend on scheduling or batching.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import math

import numpy as np

from .errors import (
    DisconnectedGraphError,
    FamilyMismatchError,
    ResourceLimitError,
    WindowError,
)
from .groups import (
    GroupWord,
    QuotientChain,
    format_word,
    injectivity_radius,
    word_ball,
)
from .linalg import QuotientLaplacian, build_laplacian
from .walks import GroupRingElement, require_well_balanced

_MASK64 = (1 << 64) - 1


def rng_stream(seed: int, quotient_index: int = 0, sample_index: int = 0) -> np.random.Generator:
    """Independent counter-based stream for one (seed, quotient, sample) cell."""
    bits = np.random.Philox(
        counter=[0, 0, 0, int(sample_index) & _MASK64],
        key=[int(seed) & _MASK64, int(quotient_index) & _MASK64],
    )
    return np.random.Generator(bits)


class _BlockUniform:
    """Uniform doubles drawn 64 at a time to amortize generator call cost."""

    __slots__ = ("gen", "buf", "pos")

    def __init__(self, gen: np.random.Generator):
        self.gen = gen
        self.buf = gen.random(64)
        self.pos = 0

    def next(self) -> float:
        if self.pos == 64:
            self.buf = self.gen.random(64)
            self.pos = 0
        v = self.buf[self.pos]
        self.pos += 1
        return v


class QuotientMultigraph:
    """Undirected multigraph on the cosets, one bundle per unordered pair.

    bundles[b] = (u, v, multiplicity) with u < v and multiplicity -M[u][v];
    loops never appear (the Laplacian folds them away).  An edge copy is
    addressed as (bundle, slot).  When the Laplacian remembers its quotient
    and group ring element, each slot of a bundle decodes to a (word, copy)
    symbol as read from the lower endpoint, i.e. lower * word = upper.
    """

    def __init__(self, laplacian: QuotientLaplacian):
        M = laplacian.matrix
        n = int(M.shape[0])
        self.laplacian = laplacian
        self.n = n
        bundles = []
        for u in range(n):
            row = M[u]
            for v in range(u + 1, n):
                mult = -int(row[v])
                if mult:
                    bundles.append((u, v, mult))
        self.bundles = tuple(bundles)
        self.bundle_index = {(u, v): b for b, (u, v, _) in enumerate(bundles)}
        incidence = [[] for _ in range(n)]
        for b, (u, v, mult) in enumerate(bundles):
            for slot in range(mult):
                incidence[u].append((v, b, slot))
                incidence[v].append((u, b, slot))
        self.incidence = tuple(tuple(inc) for inc in incidence)
        self.degrees = tuple(len(inc) for inc in incidence)
        self.symbols = None
        q, f = laplacian.quotient, laplacian.source
        if q is not None and f is not None:
            self.symbols = self._decode_symbols(q, f)

    @property
    def edge_count(self) -> int:
        return sum(m for _, _, m in self.bundles)

    def is_connected(self) -> bool:
        return self.laplacian.is_connected()

    def endpoints(self, bundle: int) -> tuple:
        u, v, _ = self.bundles[bundle]
        return u, v

    def _decode_symbols(self, quotient, f):
        neg = [(w, int(-c)) for w, c in f.items() if c < 0 and not w.is_identity()]
        perms = {w.normal: quotient.word_permutation(w) for w, _ in neg}
        out = []
        for u, v, mult in self.bundles:
            slots = []
            for w, m in neg:
                if int(perms[w.normal][u]) == v:
                    slots.extend((w, j) for j in range(m))
            if len(slots) != mult:
                raise AssertionError("bundle multiplicity disagrees with symbol decode")
            out.append(tuple(slots))
        return tuple(out)

    def slot_of(self, bundle: int, word: GroupWord, copy: int) -> int:
        """Slot of the copy that reads as (word, copy) from the lower endpoint."""
        if self.symbols is None:
            raise ValueError("graph carries no symbol decode")
        for slot, (w, j) in enumerate(self.symbols[bundle]):
            if j == copy and w == word:
                return slot
        raise KeyError(f"no slot for ({word}, {copy}) in bundle {bundle}")

    def __repr__(self):
        return f"<QuotientMultigraph n={self.n} bundles={len(self.bundles)} edges={self.edge_count}>"


@dataclass(frozen=True)
class SpanningTree:
    """N-1 edge copies forming a spanning tree, plus the sampling root."""

    graph: QuotientMultigraph
    root: int
    edges: tuple

    def validate(self) -> None:
        n = self.graph.n
        if len(self.edges) != n - 1:
            raise AssertionError(f"expected {n - 1} edges, got {len(self.edges)}")
        if len(set(self.edges)) != len(self.edges):
            raise AssertionError("repeated edge copy")
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for b, _ in self.edges:
            u, v = self.graph.endpoints(b)
            ru, rv = find(u), find(v)
            if ru == rv:
                raise AssertionError("edge set contains a cycle")
            parent[ru] = rv
        # n-1 acyclic edges on n vertices must span

    def degrees(self) -> tuple:
        deg = [0] * self.graph.n
        for b, _ in self.edges:
            u, v = self.graph.endpoints(b)
            deg[u] += 1
            deg[v] += 1
        return tuple(deg)

    def as_edge_list(self) -> list:
        """(u, v, slot) triples, u < v, sorted; slots distinguish parallel copies."""
        out = []
        for b, slot in self.edges:
            u, v = self.graph.endpoints(b)
            out.append((u, v, slot))
        return sorted(out)


def wilson_sample(graph: QuotientMultigraph, root: int = 0, rng=0, max_steps=None) -> SpanningTree:
    """One uniform spanning tree via loop-erased random walks.

    rng may be an integer seed (expanded through the stream contract) or a
    ready Generator.  The walk picks uniformly among incident edge copies,
    which weights parallel bundles by multiplicity.  A step cap guards the
    nominally impossible disconnected case and pathological hand-built
    graphs.
    """
    n = graph.n
    if not 0 <= root < n:
        raise ValueError(f"root {root} out of range")
    if not graph.is_connected():
        raise DisconnectedGraphError("spanning trees need a connected multigraph")
    gen = rng if isinstance(rng, np.random.Generator) else rng_stream(rng)
    uniforms = _BlockUniform(gen)
    if max_steps is None:
        max_steps = max(1_000_000, 200 * n * n)
    in_tree = bytearray(n)
    in_tree[root] = 1
    nxt = [None] * n
    incidence = graph.incidence
    steps = 0
    for start in range(n):
        if in_tree[start]:
            continue
        v = start
        while not in_tree[v]:
            steps += 1
            if steps > max_steps:
                raise ResourceLimitError(
                    f"random walk exceeded {max_steps} steps; graph may be malformed"
                )
            inc = incidence[v]
            idx = int(uniforms.next() * len(inc))
            nxt[v] = inc[idx]
            v = inc[idx][0]
        v = start
        while not in_tree[v]:
            in_tree[v] = 1
            v = nxt[v][0]
    edges = sorted((nxt[v][1], nxt[v][2]) for v in range(n) if v != root)
    return SpanningTree(graph=graph, root=root, edges=tuple(edges))


@dataclass(frozen=True)
class DegreeStatistics:
    """Per-vertex tree degrees with histogram and exact mean."""

    degrees: tuple
    histogram: dict
    mean: Fraction


def degree_statistics(tree: SpanningTree) -> DegreeStatistics:
    deg = tree.degrees()
    hist: dict = {}
    for d in deg:
        hist[d] = hist.get(d, 0) + 1
    # sum of degrees is 2(N-1) for any tree, so the mean is exact
    return DegreeStatistics(
        degrees=deg,
        histogram=dict(sorted(hist.items())),
        mean=Fraction(sum(deg), len(deg)),
    )


@dataclass(frozen=True)
class OrientedForestConfig:
    """Every non-root vertex points along its unique tree edge toward the root.

    parent[v] is the next vertex on the path to the root (-1 at the root),
    edge_for[v] the (bundle, slot) copy carrying that step, and symbols[v]
    the (word, copy) decode when the graph knows one: parent = v * word on
    cosets.  Words from upper endpoints are inverses of stored bundle
    symbols, so they need not lie in the support itself.
    """

    root: int
    parent: tuple
    edge_for: tuple
    symbols: tuple

    def validate(self) -> None:
        n = len(self.parent)
        if self.parent[self.root] != -1:
            raise AssertionError("root must not point anywhere")
        for v in range(n):
            if v == self.root:
                continue
            w = self.parent[v]
            if not 0 <= w < n:
                raise AssertionError(f"vertex {v} points outside the graph")
            # no 2-cycles among non-root vertices
            if w != self.root and self.parent[w] == v:
                raise AssertionError(f"2-cycle between {v} and {w}")
        # no directed cycles: every pointer path must reach the root
        for v in range(n):
            seen = 0
            w = v
            while w != self.root:
                w = self.parent[w]
                seen += 1
                if seen > n:
                    raise AssertionError(f"directed cycle reachable from {v}")


def orient_to_root(tree: SpanningTree) -> OrientedForestConfig:
    """Breadth-first orientation of a spanning tree toward its root."""
    graph = tree.graph
    n = graph.n
    adj = [[] for _ in range(n)]
    for b, slot in tree.edges:
        u, v = graph.endpoints(b)
        adj[u].append((v, b, slot))
        adj[v].append((u, b, slot))
    parent = [-1] * n
    edge_for: list = [None] * n
    symbols: list = [None] * n
    seen = bytearray(n)
    seen[tree.root] = 1
    frontier = [tree.root]
    while frontier:
        nxt_frontier = []
        for p in frontier:
            for child, b, slot in adj[p]:
                if seen[child]:
                    continue
                seen[child] = 1
                parent[child] = p
                edge_for[child] = (b, slot)
                if graph.symbols is not None:
                    word, j = graph.symbols[b][slot]
                    lower, _ = graph.endpoints(b)
                    # stored symbol reads lower -> upper; flip if the child
                    # sits at the upper endpoint
                    symbols[child] = (word, j) if child == lower else (word.inverse(), j)
                nxt_frontier.append(child)
        frontier = nxt_frontier
    if not all(seen):
        raise AssertionError("tree does not span; run validate() on it")
    return OrientedForestConfig(
        root=tree.root,
        parent=tuple(parent),
        edge_for=tuple(edge_for),
        symbols=tuple(symbols),
    )


@dataclass(frozen=True)
class MarginalRow:
    """Empirical inclusion data for one lifted window edge."""

    key: tuple
    label: str
    count: int
    frequency: float
    halfwidth: float


@dataclass(frozen=True)
class MarginalTable:
    """Window edge marginals for one quotient of a chain."""

    quotient_index: int
    radius: int
    samples: int
    rows: tuple

    def frequency(self, label: str) -> float:
        for row in self.rows:
            if row.label == label:
                return row.frequency
        raise KeyError(label)

    def csv_rows(self) -> list:
        out = []
        for row in self.rows:
            out.append(
                f"{self.quotient_index},{row.label},{row.frequency:.6f},"
                f"{row.halfwidth:.6f},{self.samples}"
            )
        return out


MARGINAL_CSV_HEADER = "quotient_index,edge_word,frequency,halfwidth,samples"


def _window_edges(f: GroupRingElement, radius: int):
    """Canonical window of group edges: (g, word, copy) with g in the ball.

    Each undirected edge {(g, s, j), (gs, s^-1, j)} appears once, represented
    from the endpoint closer to the identity (ties broken by ball order).
    """
    fam = f.family
    neg = [(w, int(-c)) for w, c in f.items() if c < 0 and not w.is_identity()]
    gens = [w for w, _ in neg]
    ball = word_ball(fam, radius, generators=gens)
    position = {w.normal: i for i, w in enumerate(ball)}
    chosen = []
    seen = set()
    for g in ball:
        for s, mult in neg:
            partner_g = g * s
            partner_s = s.inverse()
            for j in range(mult):
                key = (position[g.normal], g.normal, s.normal, j)
                rep = (g, s, j)
                alt_pos = position.get(partner_g.normal)
                if alt_pos is not None:
                    alt = (alt_pos, partner_g.normal, partner_s.normal, j)
                    if alt < key:
                        key = alt
                        rep = (partner_g, partner_s, j)
                if key in seen:
                    continue
                seen.add(key)
                label = f"{format_word(rep[0])}:{format_word(rep[1])}"
                if mult > 1:
                    label += f"#{j}"
                chosen.append((key, rep, label))
    chosen.sort(key=lambda t: t[0])
    return [(rep, label) for _, rep, label in chosen]


def lift_marginals(
    chain: QuotientChain,
    f: GroupRingElement,
    radius: int,
    samples: int,
    seed: int = 0,
) -> list:
    """Estimate forest edge marginals on the group through a quotient chain.

    For each quotient, the window of group edges within the given radius is
    pulled back to multigraph edge copies (injectivity radius at least
    radius + 1 makes this well defined and injective), and the empirical
    inclusion frequency over uniform spanning tree samples is tabulated.
    Rows are aligned across quotients for convergence display.
    """
    require_well_balanced(f)
    if f.family != chain.family:
        raise FamilyMismatchError("chain and element families differ")
    if samples < 1:
        raise ValueError("need at least one sample")
    if radius < 0:
        raise ValueError("window radius must be >= 0")
    window = _window_edges(f, radius)
    gens = [w for w, c in f.items() if c < 0 and not w.is_identity()]
    tables = []
    for qi, quotient in enumerate(chain):
        inj = injectivity_radius(quotient, r_max=radius + 1, generators=gens)
        if inj < radius + 1:
            raise WindowError(
                f"quotient {qi} has injectivity radius {inj}; the window "
                f"needs at least {radius + 1}"
            )
        L = build_laplacian(quotient, f)
        graph = QuotientMultigraph(L)
        copy_ids = []
        for (g, s, j), _ in window:
            u = quotient.coset_of(g)
            v = quotient.act(u, s)
            if u == v:
                raise AssertionError("window edge collapsed to a loop")
            if u < v:
                b = graph.bundle_index[(u, v)]
                slot = graph.slot_of(b, s, j)
            else:
                b = graph.bundle_index[(v, u)]
                slot = graph.slot_of(b, s.inverse(), j)
            copy_ids.append((b, slot))
        counts = [0] * len(copy_ids)
        for sample_index in range(samples):
            gen = rng_stream(seed, qi, sample_index)
            tree = wilson_sample(graph, root=0, rng=gen)
            in_tree = set(tree.edges)
            for i, cid in enumerate(copy_ids):
                if cid in in_tree:
                    counts[i] += 1
        rows = []
        for ((g, s, j), label), count in zip(window, counts):
            p = count / samples
            halfwidth = 1.96 * math.sqrt(p * (1.0 - p) / samples)
            rows.append(
                MarginalRow(
                    key=(g.normal, s.normal, j),
                    label=label,
                    count=count,
                    frequency=p,
                    halfwidth=halfwidth,
                )
            )
        tables.append(
            MarginalTable(
                quotient_index=qi, radius=radius, samples=samples, rows=tuple(rows)
            )
        )
    return tables
