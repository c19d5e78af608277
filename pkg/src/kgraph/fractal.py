"""N-adic embedding of the path space of a {0,1} k-graph into [0, 1].

With {0,1} vertex matrices a path is determined by the vertices it visits,
read in rainbow order ``r(lam), s(e_1), s(e_2), ...``.  Writing the vertex
indices as base-N digits (``N = |Λ^0|``, first digit weighted ``1/N``) sends
a path to a point of [0, 1]; a finite path with ``L`` vertex labels
determines the closed-open cell ``[value, value + N^-L)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .graph import KGraph, Morphism, rainbow_word
from .measure import cylinder_measure
from .reports import Check, Report
from .spectral import PFData


class HypothesisError(ValueError):
    """The graph is not a {0,1} graph with {0,1} product matrix."""


def validate_zero_one(g: KGraph) -> Report:
    report = Report("zero-one hypotheses")
    mats = [np.asarray(a, dtype=object) for a in g.matrices]
    product = mats[0]
    for a in mats[1:]:
        product = product.dot(a)
    named = [(f"A{i + 1}", a) for i, a in enumerate(mats)] + [("A1...Ak", product)]
    for name, a in named:
        bad = [
            f"{name}[{g.vertices[v]},{g.vertices[w]}]={a[v, w]}"
            for v in range(g.n_vertices)
            for w in range(g.n_vertices)
            if a[v, w] > 1
        ]
        worst = max((int(x) for x in a.flat), default=0)
        report.add(
            Check(
                f"{name} is a 0-1 matrix",
                a.size,
                float(max(0, worst - 1)),
                not bad,
                witness=bad[0] if bad else None,
                details={"offending": bad} if bad else {},
            )
        )
    return report


def require_zero_one(g: KGraph) -> None:
    report = validate_zero_one(g)
    if not report.passed:
        offending = [c.witness for c in report.checks if not c.passed]
        raise HypothesisError("zero-one hypotheses fail: " + ", ".join(offending))


@dataclass(frozen=True)
class VertexString:
    labels: tuple[int, ...]


@dataclass(frozen=True)
class EmbeddingCell:
    """The interval ``[numerator / N^power, (numerator + 1) / N^power)``."""

    numerator: int
    power: int
    base: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.base**self.power)

    @property
    def width(self) -> Fraction:
        return Fraction(1, self.base**self.power)

    def contains(self, other: "EmbeddingCell") -> bool:
        if other.power < self.power:
            return False
        return other.numerator // self.base ** (other.power - self.power) == self.numerator

    def disjoint(self, other: "EmbeddingCell") -> bool:
        return not (self.contains(other) or other.contains(self))


def _is_rainbow_prefix(k: int, degree) -> bool:
    word = rainbow_word(tuple(degree))
    return all(c == t % k + 1 for t, c in enumerate(word))


def vertex_string(g: KGraph, lam: Morphism) -> VertexString:
    require_zero_one(g)
    if not _is_rainbow_prefix(g.k, lam.degree):
        raise HypothesisError(f"degree {lam.degree} is not an initial segment of the rainbow order")
    return VertexString((lam.range,) + tuple(g.edges[e].source for e in lam.edges))


def path_from_vertex_string(g: KGraph, labels) -> Morphism:
    """Inverse of :func:`vertex_string`: the rainbow path through ``labels``."""
    labels = list(labels)
    if len(labels) == 1:
        return g.identity(labels[0])
    edges = []
    for t, (v, w) in enumerate(zip(labels, labels[1:])):
        color = t % g.k + 1
        hits = [i for i, e in enumerate(g.edges) if e.color == color and e.range == v and e.source == w]
        if len(hits) != 1:
            raise HypothesisError(f"{len(hits)} colour-{color} edges from {g.vertices[w]} to {g.vertices[v]}")
        edges.append(hits[0])
    return g.parse_path("/".join(g.path_id(g._make([e])) for e in edges))


def psi_cell(g: KGraph, lam: Morphism) -> EmbeddingCell:
    labels = vertex_string(g, lam).labels
    n = g.n_vertices
    numerator = 0
    for label in labels:
        numerator = numerator * n + label
    return EmbeddingCell(numerator, len(labels), n)


def hausdorff_dimension(g: KGraph, pf: PFData) -> float:
    """``s = ln(rho_1 ... rho_k) / (k ln N)``, from ``N^{ks} = rho(A_1 ... A_k)``."""
    require_zero_one(g)
    n = g.n_vertices
    if n == 1:
        return 0.0
    return math.log(pf.rho_product) / (g.k * math.log(n))


def admissible_string_counts(g: KGraph, lengths) -> list[int]:
    """Number of vertex strings of each length that follow the rainbow colour cycle."""
    mats = [np.asarray(a, dtype=object) for a in g.matrices]
    counts = []
    row = np.ones(g.n_vertices, dtype=object)
    done = 1
    for length in sorted(lengths):
        while done < length:
            row = row.dot(mats[(done - 1) % g.k])
            done += 1
        counts.append(int(row.sum()))
    return counts


def box_counting_estimate(g: KGraph, depth: int) -> float:
    """Least-squares slope of ``ln(#strings of length L)`` against ``L ln N``
    for ``L = k, 2k, ..., k * depth``."""
    require_zero_one(g)
    if depth < 2:
        raise ValueError("box counting needs depth >= 2")
    n = g.n_vertices
    if n == 1:
        return 0.0
    lengths = [g.k * j for j in range(1, depth + 1)]
    counts = admissible_string_counts(g, lengths)
    x = np.array([length * math.log(n) for length in lengths])
    y = np.array([math.log(c) for c in counts])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


POINTCLOUD_HEADER = ("path_id", "value_numerator", "denominator_power", "measure")


def pointcloud_records(g: KGraph, pf: PFData, depth: int) -> list[tuple[str, int, int, float]]:
    """One record per path of degree ``(depth, ..., depth)``, in path order."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    out = []
    for lam in g.paths(g.square_degree(depth)):
        cell = psi_cell(g, lam)
        out.append((g.path_id(lam), cell.numerator, cell.power, float(cylinder_measure(g, pf, lam))))
    return out


def export_pointcloud(g: KGraph, pf: PFData, depth: int, destination) -> int:
    """Write the depth-``depth`` cells as CSV; returns the record count.

    The cell of a record is ``[value_numerator, value_numerator + 1) / N^denominator_power``.
    """
    records = pointcloud_records(g, pf, depth)
    with open(Path(destination), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(POINTCLOUD_HEADER)
        for path_id, numerator, power, mass in records:
            writer.writerow([path_id, numerator, power, repr(mass)])
    return len(records)
