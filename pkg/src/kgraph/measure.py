"""The Perron-Frobenius measure on cylinder sets and the canonical
semibranching data (prefixing by paths, coding by the shift).

Infinite paths are never materialised: every statement is checked on finite
paths, where ``Z(lam)`` is represented by ``lam`` itself.  Values are
:class:`~fractions.Fraction` when the spectral data is exact and ``float``
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import (
    KGraph,
    Morphism,
    degree_add,
    degree_le,
    degree_sub,
    degrees_of_total,
    degrees_up_to,
)
from .reports import Check, Report, Tally
from .spectral import PFData


class InconsistentScalingError(ValueError):
    """No probability measure has the requested constant scaling factors."""


def cylinder_measure(g: KGraph, pf: PFData, lam: Morphism):
    """``M(Z(lam)) = rho(Λ)^{-d(lam)} x_{s(lam)}``."""
    return pf.rho_power(tuple(-n for n in lam.degree)) * pf.vertex_mass(lam.source)


@dataclass(frozen=True, eq=False)
class SBFSSpec:
    """Coefficient-level description of the canonical semibranching system.

    The prefixing map of ``lam`` sends ``Z(s(lam))`` onto ``Z(lam)`` by
    prepending ``lam``; the coding map of degree ``m`` is the shift by ``m``.
    Radon-Nikodym derivatives are the constants ``rho(Λ)^{-d(lam)}``.
    """

    g: KGraph
    pf: PFData

    def rn(self, lam: Morphism):
        return self.pf.rho_power(tuple(-n for n in lam.degree))

    def domain(self, lam: Morphism) -> int:
        """``D_lam = Z(s(lam))``, identified by its vertex."""
        return lam.source

    def range_cell(self, lam: Morphism) -> Morphism:
        """``R_lam = Z(lam)``, identified by ``lam``."""
        return lam

    def prefix(self, lam: Morphism, word: Morphism) -> Morphism:
        return self.g.compose(lam, word)

    def coding(self, m: Sequence[int], word: Morphism) -> Morphism:
        """Shift a finite word by ``m``: drop its initial segment of degree ``m``."""
        return self.g.factor(word, m)[1]

    def check_conditions(self, depth: int = 2) -> Report:
        """Finite shadows of the semibranching axioms on words of degree
        ``<= depth * (1, ..., 1)``.

        * positivity and multiplicativity of the derivatives;
        * range cells of one degree partition every longer word set;
        * the coding map of ``d(lam)`` undoes prefixing by ``lam``;
        * coding maps compose additively.
        """
        g = self.g
        bound = g.square_degree(depth)
        degrees = degrees_up_to(bound)
        report = Report("semibranching function system")
        exact = self.pf.exact

        positive = Tally("derivative positive", 0)
        mult = Tally("derivative multiplicative", 0 if exact else 1e-12)
        for m in degrees:
            for lam in g.paths(m):
                phi = self.rn(lam)
                positive.record(0 if phi > 0 else 1, lambda: g.path_id(lam))
                for n in degrees:
                    if not degree_le(degree_add(m, n), bound):
                        continue
                    for nu in g.paths(n, range=lam.source):
                        lhs = self.rn(g.compose(lam, nu))
                        rhs = phi * self.rn(nu)
                        mult.record(abs(lhs - rhs) / max(1.0, abs(float(lhs))), lambda: f"{g.path_id(lam)} * {g.path_id(nu)}")
        report.add(positive.check())
        report.add(mult.check())

        # the cells Z(lam), d(lam) = m, cut the words of degree `bound` into disjoint pieces
        partition = Tally("range cells partition", 0)
        inverse = Tally("coding inverts prefixing", 0)
        words = g.paths(bound)
        for m in degrees:
            images = []
            for lam in g.paths(m):
                for rest in g.paths(degree_sub(bound, m), range=lam.source):
                    w = self.prefix(lam, rest)
                    images.append(w)
                    inverse.record(0 if self.coding(m, w) == rest else 1, lambda: f"{g.path_id(lam)} . {g.path_id(rest)}")
            overlap = len(images) - len(set(images))
            partition.record(overlap + len(set(images) ^ set(words)), lambda: f"degree {m}")
        report.add(partition.check())
        report.add(inverse.check())

        additive = Tally("coding maps compose", 0)
        for m in degrees:
            for n in degrees:
                if not degree_le(degree_add(m, n), bound):
                    continue
                for w in words:
                    twice = self.coding(m, self.coding(n, w))
                    once = self.coding(degree_add(m, n), w)
                    additive.record(0 if twice == once else 1, lambda: f"{g.path_id(w)} by {m}+{n}")
        report.add(additive.check())
        return report


def standard_sbfs(g: KGraph, pf: PFData) -> SBFSSpec:
    return SBFSSpec(g, pf)


def check_additivity(g: KGraph, pf: PFData, depth: int) -> Report:
    """Finite additivity ``M(Z(mu)) = sum_{lam in s(mu)Λ^n} M(Z(mu lam))`` for
    ``|d(mu)|, |n| <= depth``, the scaling identity, and total mass 1 on
    every ``Λ^n`` with ``|n| <= depth``."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    tol = 0 if pf.exact else 1e-12
    degrees = degrees_of_total(g.k, depth)
    add = Tally("cylinder additivity", tol)
    scaling = Tally("scaling identity", tol)
    unity = Tally("partition of unity", tol)
    for m in degrees:
        total = sum(cylinder_measure(g, pf, lam) for lam in g.paths(m))
        unity.record(abs(total - 1), lambda: f"degree {m}")
        for mu in g.paths(m):
            mass = cylinder_measure(g, pf, mu)
            expected = pf.rho_power(tuple(-n for n in m)) * cylinder_measure(g, pf, g.identity(mu.source))
            scaling.record(abs(mass - expected), lambda: g.path_id(mu))
            for n in degrees:
                split = sum(cylinder_measure(g, pf, g.compose(mu, lam)) for lam in g.paths(n, range=mu.source))
                add.record(abs(mass - split), lambda: f"{g.path_id(mu)} over degree {n}")
    return Report("measure", [add.check(), scaling.check(), unity.check()])


@dataclass(frozen=True, eq=False)
class ScaledMeasure:
    """The measure determined by vertex masses ``x`` and constant scaling ``C``."""

    C: tuple[float, ...]
    x: np.ndarray
    residual: float

    def cylinder(self, lam: Morphism) -> float:
        scale = float(np.prod([c ** (-n) for c, n in zip(self.C, lam.degree)]))
        return scale * float(self.x[lam.source])


def measure_from_rn_derivative(g: KGraph, C: Sequence[float], tol: float = 1e-8) -> ScaledMeasure:
    """Recover the probability measure whose prefixing derivatives are ``C^{-d}``.

    Such a measure satisfies ``mu(Z(lam)) = C^{-d(lam)} mu(Z(s(lam)))``;
    additivity over the colour-i edges into ``v`` then forces the vertex
    masses ``y`` to solve ``A_i y = C_i y`` for every ``i``.  A positive
    unimodular solution exists, and is unique, only when ``C`` is the
    vector of spectral radii.
    """
    C = tuple(float(c) for c in C)
    if len(C) != g.k:
        raise ValueError(f"expected {g.k} scaling factors, got {len(C)}")
    if any(c <= 0 for c in C):
        raise InconsistentScalingError("scaling factors must be positive")
    n = g.n_vertices
    eye = np.identity(n)
    stacked = np.vstack([a.astype(float) - c * eye for a, c in zip(g.matrices, C)])
    _, sv, vt = np.linalg.svd(stacked)
    scale = max(1.0, max(C))
    y = vt[-1]
    if y.sum() < 0:
        y = -y
    if abs(y.sum()) <= tol:
        raise InconsistentScalingError("no unimodular solution of the scaling equations")
    y = y / y.sum()
    residual = max(float(np.max(np.abs(a @ y - c * y))) for a, c in zip(g.matrices, C))
    if residual > tol * scale:
        raise InconsistentScalingError(
            f"scaling {C} admits no invariant vertex masses (residual {residual:.3e})"
        )
    if n > 1 and sv[-2] <= tol * scale:
        raise InconsistentScalingError(f"scaling {C} does not determine the vertex masses uniquely")
    if y.min() <= 0:
        raise InconsistentScalingError(f"scaling {C} forces a non-positive vertex mass {y.min():.3e}")
    return ScaledMeasure(C, y, residual)


def compare_with_measure(g: KGraph, pf: PFData, scaled: ScaledMeasure, depth: int) -> Check:
    """Largest ``|scaled(Z(lam)) - M(Z(lam))|`` over ``|d(lam)| <= depth``."""
    tally = Tally("matches Perron-Frobenius measure", 1e-8)
    for m in degrees_of_total(g.k, depth):
        for lam in g.paths(m):
            tally.record(abs(scaled.cylinder(lam) - float(cylinder_measure(g, pf, lam))), lambda: g.path_id(lam))
    return tally.check()

