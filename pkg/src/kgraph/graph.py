"""Finite k-graphs given by a coloured skeleton and factorization squares.

A k-graph document names its vertices, lists the edges of each colour and
either lists the factorization squares explicitly or asks for them to be
derived (``"squares": "auto"``), which only works when every pairing of
two-coloured paths is forced.

Paths are composed range-first: the path ``(e, f)`` means "traverse ``f``
then ``e``", so ``source(e) == range(f)`` and the range of the path is
``range(e)``.  Every morphism is stored in rainbow normal form: its edge
sequence uses the colour word produced by :func:`rainbow_word`, which cycles
through the colours ``1..k`` and skips a colour once its budget from the
degree is used up.  Square degrees therefore read ``1,2,..,k,1,2,..,k,...``.
"""

from __future__ import annotations

import builtins
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Mapping, Sequence

import jsonschema
import numpy as np
from scipy.sparse.csgraph import connected_components

Degree = tuple[int, ...]

_NAME = r"^[^/:,\s]+$"

DOCUMENT_SCHEMA = {
    "type": "object",
    "required": ["k", "vertices", "edges", "squares"],
    "additionalProperties": False,
    "properties": {
        "k": {"type": "integer", "minimum": 1},
        "vertices": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "string", "pattern": _NAME},
        },
        "edges": {
            "type": "object",
            "patternProperties": {
                r"^[1-9][0-9]*$": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["id", "source", "range"],
                        "additionalProperties": False,
                        "properties": {
                            "id": {"type": "string", "pattern": _NAME},
                            "source": {"type": "string"},
                            "range": {"type": "string"},
                        },
                    },
                }
            },
            "additionalProperties": False,
        },
        "squares": {
            "oneOf": [
                {"const": "auto"},
                {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["colors", "path_ij", "path_ji"],
                        "additionalProperties": False,
                        "properties": {
                            "colors": {
                                "type": "array",
                                "items": {"type": "integer", "minimum": 1},
                                "minItems": 2,
                                "maxItems": 2,
                            },
                            "path_ij": {
                                "type": "array",
                                "items": {"type": "string"},
                                "minItems": 2,
                                "maxItems": 2,
                            },
                            "path_ji": {
                                "type": "array",
                                "items": {"type": "string"},
                                "minItems": 2,
                                "maxItems": 2,
                            },
                        },
                    },
                },
            ]
        },
    },
}


class KGraphError(ValueError):
    """Base class for invalid k-graph input."""


class SchemaError(KGraphError):
    pass


class NonCommutingError(KGraphError):
    pass


class SourceError(KGraphError):
    pass


class SquareError(KGraphError):
    pass


class AmbiguousSquaresError(SquareError):
    pass


class HexagonError(KGraphError):
    pass


@dataclass(frozen=True)
class Edge:
    id: str
    color: int
    source: int
    range: int


@dataclass(frozen=True)
class FactorizationSquare:
    """A square ``path_ij == path_ji`` with ``colors = (i, j)``, ``i < j``.

    ``path_ij`` is (colour-i edge, colour-j edge) and ``path_ji`` is
    (colour-j edge, colour-i edge), both range-first; entries are edge
    indices into :attr:`KGraph.edges`.
    """

    colors: tuple[int, int]
    path_ij: tuple[int, int]
    path_ji: tuple[int, int]


@dataclass(frozen=True)
class Morphism:
    range: int
    source: int
    degree: Degree
    edges: tuple[int, ...]

    @property
    def is_vertex(self) -> bool:
        return not self.edges

    @property
    def length(self) -> int:
        return len(self.edges)


def degree_le(m: Sequence[int], n: Sequence[int]) -> bool:
    return all(a <= b for a, b in zip(m, n))


def degree_join(m: Sequence[int], n: Sequence[int]) -> Degree:
    return tuple(max(a, b) for a, b in zip(m, n))


def degree_add(m: Sequence[int], n: Sequence[int]) -> Degree:
    return tuple(a + b for a, b in zip(m, n))


def degree_sub(m: Sequence[int], n: Sequence[int]) -> Degree:
    return tuple(a - b for a, b in zip(m, n))


@lru_cache(maxsize=None)
def rainbow_word(degree: Degree) -> tuple[int, ...]:
    """Colour word of the normal form for ``degree`` (colours are 1-based)."""
    remaining = list(degree)
    word = []
    while any(remaining):
        for i, left in enumerate(remaining):
            if left:
                word.append(i + 1)
                remaining[i] -= 1
    return tuple(word)


def degrees_up_to(bound: Sequence[int]) -> list[Degree]:
    """All degrees ``n <= bound`` in lexicographic order."""
    return [tuple(n) for n in itertools.product(*(range(b + 1) for b in bound))]


def degrees_of_total(k: int, total_max: int) -> list[Degree]:
    """All degrees with ``|n| <= total_max``, ordered by total then lexicographically."""
    out = [n for n in itertools.product(range(total_max + 1), repeat=k) if sum(n) <= total_max]
    return sorted(out, key=lambda n: (sum(n), n))


@dataclass(frozen=True)
class Skeleton:
    """Vertices and coloured edges of a k-graph, before squares are attached."""

    k: int
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def matrices(self) -> tuple[np.ndarray, ...]:
        """Vertex matrices ``A_i[range, source] = #colour-i edges``."""
        out = []
        for color in range(1, self.k + 1):
            a = np.zeros((self.n_vertices, self.n_vertices), dtype=np.int64)
            for e in self.edges:
                if e.color == color:
                    a[e.range, e.source] += 1
            out.append(a)
        return tuple(out)

    def edge_index(self) -> dict[tuple[int, str], int]:
        return {(e.color, e.id): idx for idx, e in enumerate(self.edges)}

    def bicolored_paths(self, first: int, second: int) -> list[tuple[int, int]]:
        """Composable pairs (colour ``first`` edge, colour ``second`` edge)."""
        by_range: dict[int, list[int]] = {}
        for idx, e in enumerate(self.edges):
            if e.color == second:
                by_range.setdefault(e.range, []).append(idx)
        out = []
        for idx, e in enumerate(self.edges):
            if e.color == first:
                out.extend((idx, f) for f in by_range.get(e.source, ()))
        return out


def parse_skeleton(document: Mapping) -> Skeleton:
    try:
        jsonschema.validate(document, DOCUMENT_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"schema violation: {exc.message}") from None
    k = document["k"]
    vertices = tuple(document["vertices"])
    if len(set(vertices)) != len(vertices):
        raise SchemaError("duplicate vertex names")
    vindex = {name: i for i, name in enumerate(vertices)}
    edges: list[Edge] = []
    for key, items in document["edges"].items():
        color = int(key)
        if not 1 <= color <= k:
            raise SchemaError(f"edge colour {color} outside 1..{k}")
        seen = set()
        for item in items:
            if item["id"] in seen:
                raise SchemaError(f"duplicate edge id {item['id']!r} in colour {color}")
            seen.add(item["id"])
            for end in ("source", "range"):
                if item[end] not in vindex:
                    raise SchemaError(f"edge {color}:{item['id']} has undeclared {end} {item[end]!r}")
            edges.append(Edge(item["id"], color, vindex[item["source"]], vindex[item["range"]]))
    edges.sort(key=lambda e: (e.color, e.id))
    return Skeleton(k, vertices, tuple(edges))


def derive_squares_unique(skeleton: Skeleton) -> list[FactorizationSquare]:
    """Derive the factorization squares when every pairing is forced.

    For each colour pair ``i < j`` and vertex pair ``(v, w)`` the ``i``-then-``j``
    and ``j``-then-``i`` paths from ``w`` to ``v`` must number at most one
    each; otherwise more than one bijection exists and the squares have to
    be supplied explicitly.
    """
    squares = []
    for i in range(1, skeleton.k + 1):
        for j in range(i + 1, skeleton.k + 1):
            ij: dict[tuple[int, int], list] = {}
            ji: dict[tuple[int, int], list] = {}
            for a, b in skeleton.bicolored_paths(i, j):
                ij.setdefault((skeleton.edges[a].range, skeleton.edges[b].source), []).append((a, b))
            for a, b in skeleton.bicolored_paths(j, i):
                ji.setdefault((skeleton.edges[a].range, skeleton.edges[b].source), []).append((a, b))
            for key in sorted(set(ij) | set(ji)):
                left, right = ij.get(key, []), ji.get(key, [])
                v, w = (skeleton.vertices[x] for x in key)
                if len(left) != len(right):
                    raise NonCommutingError(
                        f"matrices do not commute: colours ({i},{j}) give {len(left)} vs "
                        f"{len(right)} paths from {w} to {v}"
                    )
                if len(left) > 1:
                    raise AmbiguousSquaresError(
                        f"squares are not forced for colours ({i},{j}) between range {v} and "
                        f"source {w}: {len(left)} paths each way"
                    )
                squares.append(FactorizationSquare((i, j), left[0], right[0]))
    return squares


def _resolve_squares(skeleton: Skeleton, raw: Sequence[Mapping]) -> list[FactorizationSquare]:
    index = skeleton.edge_index()
    squares = []
    for item in raw:
        i, j = item["colors"]
        if not (1 <= i < j <= skeleton.k):
            raise SchemaError(f"square colours {item['colors']} must satisfy 1 <= i < j <= k")
        try:
            pij = (index[(i, item["path_ij"][0])], index[(j, item["path_ij"][1])])
            pji = (index[(j, item["path_ji"][0])], index[(i, item["path_ji"][1])])
        except KeyError as exc:
            raise SchemaError(f"square refers to unknown edge {exc.args[0]}") from None
        squares.append(FactorizationSquare((i, j), pij, pji))
    return squares


class KGraph:
    """A validated finite k-graph.

    Vertices and edges are addressed by integer index; ``vertices`` holds
    the declared names and ``edges`` is sorted by (colour, id).  Instances
    are immutable; path tables are cached lazily.
    """

    def __init__(self, skeleton: Skeleton, squares: Sequence[FactorizationSquare]):
        self.k = skeleton.k
        self.vertices = skeleton.vertices
        self.edges = skeleton.edges
        self.skeleton = skeleton
        self.matrices = skeleton.matrices()
        self.squares = tuple(sorted(squares, key=lambda s: (s.colors, s.path_ij)))
        self._vindex = {name: i for i, name in enumerate(self.vertices)}
        self._eindex = skeleton.edge_index()
        self._swap: dict[tuple[int, int], tuple[int, int]] = {}
        self._in_edges = [[[] for _ in self.vertices] for _ in range(self.k + 1)]
        for idx, e in enumerate(self.edges):
            self._in_edges[e.color][e.range].append(idx)
        self._path_cache: dict[tuple, tuple[Morphism, ...]] = {}
        self._compose_cache: dict[tuple, Morphism] = {}
        self._factor_cache: dict[tuple, tuple[Morphism, Morphism]] = {}
        self._check_no_sources()
        self._check_commuting()
        self._install_squares()
        if self.k >= 3:
            self._check_hexagons()

    # -- validation -------------------------------------------------------

    def _check_commuting(self) -> None:
        for i, j in itertools.combinations(range(self.k), 2):
            a, b = self.matrices[i], self.matrices[j]
            if not np.array_equal(a @ b, b @ a):
                raise NonCommutingError(f"matrices do not commute: A{i + 1}A{j + 1} != A{j + 1}A{i + 1}")

    def _check_no_sources(self) -> None:
        for i, a in enumerate(self.matrices):
            for v, total in enumerate(a.sum(axis=1)):
                if total == 0:
                    raise SourceError(f"vertex {self.vertices[v]} receives no edge of colour {i + 1}")

    def _install_squares(self) -> None:
        for sq in self.squares:
            i, j = sq.colors
            a, b = sq.path_ij
            c, d = sq.path_ji
            ea, eb, ec, ed = (self.edges[x] for x in (a, b, c, d))
            if (ea.color, eb.color, ec.color, ed.color) != (i, j, j, i):
                raise SquareError(f"square {sq} has edges of the wrong colours")
            if ea.source != eb.range or ec.source != ed.range:
                raise SquareError(f"square {self._square_label(sq)} contains a non-composable path")
            if ea.range != ec.range or eb.source != ed.source:
                raise SquareError(f"square {self._square_label(sq)} paths differ in range or source")
            if (a, b) in self._swap:
                raise SquareError(f"path {self._pair_label(a, b)} appears in more than one square")
            if (c, d) in self._swap:
                raise SquareError(f"path {self._pair_label(c, d)} appears in more than one square")
            self._swap[(a, b)] = (c, d)
            self._swap[(c, d)] = (a, b)
        for i in range(1, self.k + 1):
            for j in range(1, self.k + 1):
                if i == j:
                    continue
                for pair in self.skeleton.bicolored_paths(i, j):
                    if pair not in self._swap:
                        raise SquareError(f"path {self._pair_label(*pair)} is in no factorization square")

    def _check_hexagons(self) -> None:
        for i, j, l in itertools.combinations(range(1, self.k + 1), 3):
            for a, b in self.skeleton.bicolored_paths(i, j):
                for c in self._in_edges[l][self.edges[b].source]:
                    left = self._apply_swaps([a, b, c], (0, 1, 0))
                    right = self._apply_swaps([a, b, c], (1, 0, 1))
                    if left != right:
                        raise HexagonError(
                            f"associativity fails on path {self._path_label((a, b, c))}: "
                            f"{self._path_label(left)} != {self._path_label(right)}"
                        )

    def _apply_swaps(self, seq: list[int], positions: Sequence[int]) -> tuple[int, ...]:
        seq = list(seq)
        for p in positions:
            seq[p], seq[p + 1] = self._swap[(seq[p], seq[p + 1])]
        return tuple(seq)

    def _pair_label(self, a: int, b: int) -> str:
        return self._path_label((a, b))

    def _square_label(self, sq: FactorizationSquare) -> str:
        return f"{self._path_label(sq.path_ij)} = {self._path_label(sq.path_ji)}"

    def _path_label(self, edges: Sequence[int]) -> str:
        return "/".join(f"{self.edges[e].color}:{self.edges[e].id}" for e in edges)

    # -- basic accessors --------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def vertex_index(self, name: str) -> int:
        return self._vindex[name]

    def identity(self, v: int) -> Morphism:
        return Morphism(v, v, (0,) * self.k, ())

    def zero_degree(self) -> Degree:
        return (0,) * self.k

    def square_degree(self, j: int) -> Degree:
        return (j,) * self.k

    def path_id(self, lam: Morphism) -> str:
        """Stable text id: the vertex name, or ``colour:id`` tokens joined by ``/``."""
        if lam.is_vertex:
            return self.vertices[lam.range]
        return self._path_label(lam.edges)

    def parse_path(self, text: str) -> Morphism:
        """Inverse of :meth:`path_id`; edge tokens may come in any composable order."""
        if text in self._vindex:
            return self.identity(self._vindex[text])
        edges = []
        for token in text.split("/"):
            color, _, eid = token.partition(":")
            try:
                edges.append(self._eindex[(int(color), eid)])
            except (KeyError, ValueError):
                raise KeyError(f"unknown edge token {token!r}") from None
        for a, b in zip(edges, edges[1:]):
            if self.edges[a].source != self.edges[b].range:
                raise ValueError(f"edges {self._pair_label(a, b)} are not composable")
        return self._normalize(edges)

    # -- morphisms ----------------------------------------------------------

    def _make(self, edges: Sequence[int]) -> Morphism:
        deg = [0] * self.k
        for e in edges:
            deg[self.edges[e].color - 1] += 1
        return Morphism(self.edges[edges[0]].range, self.edges[edges[-1]].source, tuple(deg), tuple(edges))

    def _reorder(self, edges: Sequence[int], word: Sequence[int]) -> list[int]:
        """Rewrite a composable edge sequence to colour word ``word`` using squares."""
        seq = list(edges)
        for p, color in enumerate(word):
            if self.edges[seq[p]].color == color:
                continue
            q = p + 1
            while self.edges[seq[q]].color != color:
                q += 1
            for t in range(q - 1, p - 1, -1):
                seq[t], seq[t + 1] = self._swap[(seq[t], seq[t + 1])]
        return seq

    def _normalize(self, edges: Sequence[int]) -> Morphism:
        deg = [0] * self.k
        for e in edges:
            deg[self.edges[e].color - 1] += 1
        return self._make(self._reorder(edges, rainbow_word(tuple(deg))))

    def compose(self, lam: Morphism, nu: Morphism) -> Morphism:
        """The composite ``lam nu`` (traverse ``nu`` first) in normal form."""
        if lam.source != nu.range:
            raise ValueError(
                f"cannot compose: source {self.vertices[lam.source]} != range {self.vertices[nu.range]}"
            )
        if not nu.edges:
            return lam
        if not lam.edges:
            return nu
        key = (lam.edges, nu.edges)
        hit = self._compose_cache.get(key)
        if hit is None:
            deg = degree_add(lam.degree, nu.degree)
            seq = lam.edges + nu.edges
            word = rainbow_word(deg)
            hit = self._make(self._reorder(seq, word))
            self._compose_cache[key] = hit
        return hit

    def factor(self, lam: Morphism, m: Sequence[int]) -> tuple[Morphism, Morphism]:
        """The unique ``(mu, nu)`` with ``lam == mu nu`` and ``d(mu) == m``."""
        m = tuple(m)
        if len(m) != self.k or not degree_le(m, lam.degree) or min(m) < 0:
            raise ValueError(f"degree {m} is not between 0 and {lam.degree}")
        key = (lam.range, lam.edges, m)
        hit = self._factor_cache.get(key)
        if hit is None:
            rest = degree_sub(lam.degree, m)
            split = sum(m)
            if split == 0:
                hit = (self.identity(lam.range), lam)
            elif split == lam.length:
                hit = (lam, self.identity(lam.source))
            else:
                seq = self._reorder(lam.edges, rainbow_word(m) + rainbow_word(rest))
                hit = (self._make(seq[:split]), self._make(seq[split:]))
            self._factor_cache[key] = hit
        return hit

    def segment(self, lam: Morphism, m: Sequence[int], n: Sequence[int]) -> Morphism:
        """``lam(m, n)``: the piece of ``lam`` between degrees ``m <= n``."""
        _, tail = self.factor(lam, m)
        head, _ = self.factor(tail, degree_sub(n, m))
        return head

    # -- enumeration ------------------------------------------------------

    def _paths_from(self, v: int, degree: Degree) -> tuple[Morphism, ...]:
        key = (v, degree)
        hit = self._path_cache.get(key)
        if hit is None:
            hit = tuple(self.iter_paths(v, degree))
            self._path_cache[key] = hit
        return hit

    def iter_paths(self, v: int, degree: Sequence[int]) -> Iterator[Morphism]:
        """Lazily yield ``v Λ^degree`` in lexicographic edge order."""
        degree = tuple(degree)
        word = rainbow_word(degree)
        if not word:
            yield self.identity(v)
            return
        stack = [(v, 0, ())]
        while stack:
            at, pos, prefix = stack.pop()
            if pos == len(word):
                yield self._make(prefix)
                continue
            for e in reversed(self._in_edges[word[pos]][at]):
                stack.append((self.edges[e].source, pos + 1, prefix + (e,)))

    def paths(
        self, degree: Sequence[int], range: int | None = None, source: int | None = None
    ) -> list[Morphism]:
        degree = tuple(degree)
        ranges = [range] if range is not None else list(builtins.range(self.n_vertices))
        out: list[Morphism] = []
        for v in ranges:
            out.extend(self._paths_from(v, degree))
        if source is not None:
            out = [p for p in out if p.source == source]
        if not sum(degree):
            return sorted(out, key=lambda p: p.range)
        return sorted(out, key=lambda p: p.edges)

    def path_count_matrix(self, degree: Sequence[int]) -> np.ndarray:
        """Exact ``prod_i A_i^{n_i}`` as a Python-int object array."""
        out = np.identity(self.n_vertices, dtype=object)
        for a, n in zip(self.matrices, degree):
            for _ in range(n):
                out = out.dot(a.astype(object))
        return out


def load_kgraph(document: Mapping) -> KGraph:
    """Validate a k-graph document and build the :class:`KGraph`."""
    skeleton = parse_skeleton(document)
    mats = skeleton.matrices()
    for i, j in itertools.combinations(range(skeleton.k), 2):
        if not np.array_equal(mats[i] @ mats[j], mats[j] @ mats[i]):
            raise NonCommutingError(f"matrices do not commute: A{i + 1}A{j + 1} != A{j + 1}A{i + 1}")
    if document["squares"] == "auto":
        squares = derive_squares_unique(skeleton)
    else:
        squares = _resolve_squares(skeleton, document["squares"])
    return KGraph(skeleton, squares)


def load_kgraph_file(path) -> KGraph:
    import json

    with open(path, encoding="utf-8") as fh:
        try:
            document = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not a JSON document: {exc}") from None
    return load_kgraph(document)


def to_document(g: KGraph) -> dict:
    """Serialise ``g`` back to the document format with explicit squares."""
    edges: dict[str, list] = {str(c): [] for c in range(1, g.k + 1)}
    for e in g.edges:
        edges[str(e.color)].append({"id": e.id, "source": g.vertices[e.source], "range": g.vertices[e.range]})
    squares = [
        {
            "colors": list(sq.colors),
            "path_ij": [g.edges[x].id for x in sq.path_ij],
            "path_ji": [g.edges[x].id for x in sq.path_ji],
        }
        for sq in g.squares
    ]
    return {"k": g.k, "vertices": list(g.vertices), "edges": edges, "squares": squares}


# -- whole-graph queries ------------------------------------------------------


def enumerate_paths(
    g: KGraph, degree: Sequence[int], range: int | None = None, source: int | None = None
) -> list[Morphism]:
    return g.paths(degree, range=range, source=source)


def compose(g: KGraph, lam: Morphism, nu: Morphism) -> Morphism:
    return g.compose(lam, nu)


def factor(g: KGraph, lam: Morphism, m: Sequence[int]) -> tuple[Morphism, Morphism]:
    return g.factor(lam, m)


def lambda_min(g: KGraph, mu: Morphism, nu: Morphism) -> list[tuple[Morphism, Morphism]]:
    """Minimal common extensions: pairs ``(eta, zeta)`` with ``mu eta == nu zeta``
    of degree ``d(mu) v d(nu)``, in lexicographic order of ``eta``."""
    if mu.range != nu.range:
        return []
    join = degree_join(mu.degree, nu.degree)
    out = []
    for eta in g.paths(degree_sub(join, mu.degree), range=mu.source):
        head, zeta = g.factor(g.compose(mu, eta), nu.degree)
        if head == nu:
            out.append((eta, zeta))
    return out


def is_strongly_connected(g: KGraph) -> bool:
    union = sum(g.matrices) > 0
    n_comp, _ = connected_components(union.astype(np.int8), directed=True, connection="strong")
    return n_comp == 1


@dataclass(frozen=True)
class PeriodicWitness:
    vertex: int
    m: Degree
    n: Degree


@dataclass(frozen=True)
class NoPeriodicityUpToDepth:
    depth_bound: int


def aperiodicity_probe(g: KGraph, depth_bound: int) -> PeriodicWitness | NoPeriodicityUpToDepth:
    """Look for ``v, m != n`` such that every path from ``v`` agrees after
    shifting by ``m`` and by ``n`` on a window of degree ``depth_bound*(1..1)``.

    ``m`` and ``n`` range over ``0 <= m, n <= depth_bound*(1..1)``.  A
    witness means the uniform shift agreement held on every examined
    window; no witness is evidence of aperiodicity, not a proof.
    """
    if depth_bound < 1:
        raise ValueError("depth_bound must be at least 1")
    window = g.square_degree(depth_bound)
    shifts = degrees_up_to(window)
    for v in range(g.n_vertices):
        for m, n in itertools.combinations(shifts, 2):
            top = degree_add(degree_join(m, n), window)
            agree = all(
                g.segment(lam, m, degree_add(m, window)) == g.segment(lam, n, degree_add(n, window))
                for lam in g.iter_paths(v, top)
            )
            if agree:
                return PeriodicWitness(v, m, n)
    return NoPeriodicityUpToDepth(depth_bound)
