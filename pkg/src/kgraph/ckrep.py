"""Operators ``S_lam`` and ``S*_lam`` on finite combinations of cylinder
indicators, and a verifier for the Cuntz-Krieger relations.

``S_lam`` prepends ``lam`` and rescales by ``rho(Λ)^{d(lam)/2}``;
``S*_lam`` strips a prefix ``lam`` and rescales by ``rho(Λ)^{-d(lam)/2}``.
With exact spectral data the scale factors live in :class:`~kgraph.surd.Surd`
so every relation residual is exactly zero.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Mapping

from .graph import (
    KGraph,
    Morphism,
    degree_add,
    degree_join,
    degree_le,
    degree_sub,
    degrees_up_to,
    lambda_min,
)
from .measure import cylinder_measure
from .reports import Check, Report, Tally
from .spectral import PFData
from .surd import Surd


class CylinderFunction:
    """A finite sum ``sum_lam c_lam Θ_lam``; zero coefficients are dropped."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Morphism, object] | Iterable[tuple[Morphism, object]] = ()):
        items = terms.items() if isinstance(terms, dict) else terms
        out: dict[Morphism, object] = {}
        for lam, c in items:
            out[lam] = out[lam] + c if lam in out else c
        self.terms = {lam: c for lam, c in out.items() if c != 0}

    @classmethod
    def indicator(cls, lam: Morphism, coefficient=1) -> "CylinderFunction":
        return cls({lam: coefficient})

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    def __add__(self, other: "CylinderFunction") -> "CylinderFunction":
        return CylinderFunction(list(self.terms.items()) + list(other.terms.items()))

    def __sub__(self, other: "CylinderFunction") -> "CylinderFunction":
        return self + other.scale(-1)

    def scale(self, c) -> "CylinderFunction":
        return CylinderFunction({lam: c * v for lam, v in self.terms.items()})

    def degrees(self) -> set:
        return {lam.degree for lam in self.terms}

    def __repr__(self):
        return f"CylinderFunction({len(self.terms)} terms)"


def zero_function() -> CylinderFunction:
    return CylinderFunction()


@lru_cache(maxsize=8192)
def half_power(pf: PFData, degree: tuple[int, ...]):
    """``rho(Λ)^{degree/2}``; a :class:`Surd` in exact mode."""
    if pf.exact:
        return Surd.sqrt(pf.rho_power(degree))
    return math.sqrt(pf.rho_power(degree))


def refine(g: KGraph, f: CylinderFunction, n) -> CylinderFunction:
    """Rewrite ``f`` using ``Θ_mu = sum_{lam in s(mu)Λ^{t-d(mu)}} Θ_{mu lam}``.

    Every term is refined to ``t``, the join of ``n`` with all degrees in
    ``f`` (so ``t == n`` whenever ``n`` dominates them).
    """
    target = tuple(n)
    for d in f.degrees():
        target = degree_join(target, d)
    out = []
    for mu, c in f:
        if mu.degree == target:
            out.append((mu, c))
            continue
        for lam in g.paths(degree_sub(target, mu.degree), range=mu.source):
            out.append((g.compose(mu, lam), c))
    return CylinderFunction(out)


def _conj(c):
    return c.conjugate() if hasattr(c, "conjugate") else c


def inner_product(g: KGraph, f: CylinderFunction, h: CylinderFunction, pf: PFData):
    """``<f, h> = sum conj(f_lam) h_lam M(Z(lam))`` after a common refinement."""
    if not f or not h:
        return 0
    target = g.zero_degree()
    for d in f.degrees() | h.degrees():
        target = degree_join(target, d)
    ff = refine(g, f, target)
    hh = refine(g, h, target)
    total = 0
    for lam, c in ff:
        other = hh.terms.get(lam)
        if other is not None:
            total = total + _conj(c) * other * cylinder_measure(g, pf, lam)
    return total


def norm(g: KGraph, f: CylinderFunction, pf: PFData) -> float:
    value = inner_product(g, f, f, pf)
    return math.sqrt(max(0.0, float(abs(value))))


def apply_S(g: KGraph, pf: PFData, lam: Morphism, f: CylinderFunction) -> CylinderFunction:
    """``Θ_mu -> rho^{d(lam)/2} Θ_{lam mu}`` when ``s(lam) = r(mu)``, else 0."""
    c = half_power(pf, lam.degree)
    return CylinderFunction((g.compose(lam, mu), c * v) for mu, v in f if mu.range == lam.source)


def apply_S_star(g: KGraph, pf: PFData, lam: Morphism, f: CylinderFunction) -> CylinderFunction:
    """``Θ_{lam mu'} -> rho^{-d(lam)/2} Θ_{mu'}``; terms without prefix ``lam`` vanish.

    Terms shorter than ``lam`` are first refined to the join of the degrees.
    """
    c = half_power(pf, tuple(-n for n in lam.degree))
    out = []
    for mu, v in f:
        if mu.range != lam.range:
            continue
        if degree_le(lam.degree, mu.degree):
            pieces = [(mu, v)]
        else:
            pieces = refine(g, CylinderFunction.indicator(mu, v), degree_join(mu.degree, lam.degree))
        for nu, w in pieces:
            head, tail = g.factor(nu, lam.degree)
            if head == lam:
                out.append((tail, c * w))
    return CylinderFunction(out)


@lru_cache(maxsize=None)
def _mass(pf: PFData, degree: tuple[int, ...], source: int):
    return pf.rho_power(tuple(-n for n in degree)) * pf.vertex_mass(source)


# Batched evaluation for the verifier: a batch is a list of
# (basis index, morphism, coefficient) single terms, one column per basis vector.


def _S(g: KGraph, pf: PFData, lam: Morphism, batch: list) -> list:
    c = half_power(pf, lam.degree)
    src = lam.source
    return [(i, g.compose(lam, mu), c * v) for i, mu, v in batch if mu.range == src]


def _S_star(g: KGraph, pf: PFData, lam: Morphism, batch: list) -> list:
    c = half_power(pf, tuple(-n for n in lam.degree))
    out = []
    for i, mu, v in batch:
        if mu.range != lam.range:
            continue
        if degree_le(lam.degree, mu.degree):
            head, tail = g.factor(mu, lam.degree)
            if head == lam:
                out.append((i, tail, c * v))
        else:
            out.extend((i, nu, w) for nu, w in apply_S_star(g, pf, lam, CylinderFunction.indicator(mu, v)))
    return out


def _residuals(g: KGraph, pf: PFData, lhs: list, rhs: list, size: int) -> list[float]:
    """Per-column L2 norm of ``lhs - rhs``."""
    diff: dict = {}
    for i, mu, v in lhs:
        key = (i, mu)
        diff[key] = diff[key] + v if key in diff else v
    for i, mu, v in rhs:
        key = (i, mu)
        diff[key] = diff[key] - v if key in diff else -v
    columns: dict[int, list] = {}
    for (i, mu), v in diff.items():
        if v != 0:
            columns.setdefault(i, []).append((mu, v))
    out = [0.0] * size
    for i, terms in columns.items():
        if len({mu.degree for mu, _ in terms}) == 1:
            sq = sum(_conj(v) * v * _mass(pf, mu.degree, mu.source) for mu, v in terms)
            out[i] = math.sqrt(max(0.0, float(abs(sq))))
        else:
            out[i] = norm(g, CylinderFunction(terms), pf)
    return out


def verify_ck(g: KGraph, pf: PFData, depth: int) -> Report:
    """Check the Cuntz-Krieger relations on every ``Θ_beta`` with
    ``d(beta) = depth * (1, ..., 1)``.

    * CK1 ``S_v S_w = delta_vw S_v`` for all vertices;
    * CK2 ``S_lam S_nu = S_{lam nu}`` for composable pairs with
      ``|d(lam nu)| <= depth * k``;
    * CK3 ``S*_lam S_lam = S_{s(lam)}`` for ``d(lam) <= depth * 1``;
    * CK4 ``sum_{lam in vΛ^n} S_lam S*_lam = S_v`` for ``n <= depth * 1``;
    * ``S*_mu S_nu = sum_{(eta, zeta) in Λ^min(mu, nu)} S_eta S*_zeta`` for
      ``d(mu), d(nu) <= depth * 1``;
    * ``S_lam S*_lam S_lam = S_lam`` and ``<S_lam f, h> = <f, S*_lam h>``.

    Residuals are L2 norms of the difference of the two sides, one per basis
    vector.  Exact mode requires them to vanish; float mode allows 1e-12.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    tol = 0 if pf.exact else 1e-12
    bound = g.square_degree(depth)
    betas = g.paths(bound)
    basis = [(i, beta, 1) for i, beta in enumerate(betas)]
    size = len(basis)
    vertices = [g.identity(v) for v in range(g.n_vertices)]
    small = [lam for n in degrees_up_to(bound) for lam in g.paths(n)]

    def record(tally: Tally, lhs: list, rhs: list, what) -> None:
        tally.record_many(_residuals(g, pf, lhs, rhs, size), lambda i: f"{what()} on {g.path_id(betas[i])}")

    ck1 = Tally("CK1", tol)
    for v in vertices:
        for w in vertices:
            lhs = _S(g, pf, v, _S(g, pf, w, basis))
            rhs = _S(g, pf, v, basis) if v == w else []
            record(ck1, lhs, rhs, lambda: f"v={g.path_id(v)} w={g.path_id(w)}")

    ck2 = Tally("CK2", tol)
    total = depth * g.k
    short = [lam for n in degrees_up_to(g.square_degree(total)) if sum(n) <= total for lam in g.paths(n)]
    for lam in short:
        for nu in short:
            if nu.range != lam.source or sum(lam.degree) + sum(nu.degree) > total:
                continue
            lhs = _S(g, pf, lam, _S(g, pf, nu, basis))
            rhs = _S(g, pf, g.compose(lam, nu), basis)
            record(ck2, lhs, rhs, lambda: f"{g.path_id(lam)} . {g.path_id(nu)}")

    ck3 = Tally("CK3", tol)
    partial = Tally("partial isometry", tol)
    for lam in small:
        s_f = _S(g, pf, lam, basis)
        record(ck3, _S_star(g, pf, lam, s_f), _S(g, pf, g.identity(lam.source), basis), lambda: g.path_id(lam))
        record(partial, _S(g, pf, lam, _S_star(g, pf, lam, s_f)), s_f, lambda: g.path_id(lam))

    ck4 = Tally("CK4", tol)
    for n in degrees_up_to(bound):
        for v in vertices:
            lhs = []
            for lam in g.paths(n, range=v.range):
                lhs.extend(_S(g, pf, lam, _S_star(g, pf, lam, basis)))
            record(ck4, lhs, _S(g, pf, v, basis), lambda: f"v={g.path_id(v)} n={n}")

    mce = Tally("MCE", tol)
    for mu in small:
        for nu in small:
            lhs = _S_star(g, pf, mu, _S(g, pf, nu, basis))
            rhs = []
            for eta, zeta in lambda_min(g, mu, nu):
                rhs.extend(_S(g, pf, eta, _S_star(g, pf, zeta, basis)))
            record(mce, lhs, rhs, lambda: f"mu={g.path_id(mu)} nu={g.path_id(nu)}")

    # the relations above hold for any positive scale factors; adjointness is
    # what ties S*_lam to the measure
    adjoint = Tally("adjoint", tol)
    for lam in small:
        for beta in betas:
            if beta.range != lam.source:
                continue
            theta = CylinderFunction.indicator(beta)
            image = CylinderFunction.indicator(g.compose(lam, beta))
            lhs = inner_product(g, apply_S(g, pf, lam, theta), image, pf)
            rhs = inner_product(g, theta, apply_S_star(g, pf, lam, image), pf)
            adjoint.record(abs(lhs - rhs), lambda: f"{g.path_id(lam)} on {g.path_id(beta)}")

    nondegenerate = Tally("S_v nonzero", 0)
    for v in vertices:
        nondegenerate.record(0 if apply_S(g, pf, v, CylinderFunction.indicator(v)) else 1, g.path_id(v))

    report = Report("Cuntz-Krieger relations")
    for tally in (ck1, ck2, ck3, ck4, mce, partial, adjoint, nondegenerate):
        report.add(tally.check())
    return report
