"""The state ``phi(s_mu s*_nu) = delta_{mu,nu} M(Z(mu))`` and finite checks
of the KMS condition on spanning elements.

For ``a = s_mu s*_nu`` and ``b = s_sigma s*_tau`` the product is expanded
with minimal common extensions,

    ab = sum_{(eta, zeta) in Λ^min(nu, sigma)} s_{mu eta} s*_{tau zeta},

and the identity ``phi(ab) = exp(-beta r.(d(mu) - d(nu))) phi(ba)`` is
tested for every pair with degrees below a bound.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import KGraph, Morphism, degree_le, degree_sub, degrees_up_to, lambda_min
from .measure import cylinder_measure
from .reports import Check, Report, Tally
from .spectral import PFData


@dataclass(frozen=True)
class Dynamics:
    """``alpha_t(s_mu s*_nu) = exp(i t r.(d(mu) - d(nu))) s_mu s*_nu``."""

    r: tuple[float, ...]

    def __post_init__(self):
        if not all(math.isfinite(x) for x in self.r):
            raise ValueError("dynamics exponents must be finite")


def preferred_dynamics(pf: PFData) -> Dynamics:
    return Dynamics(tuple(math.log(r) for r in pf.rho))


@dataclass(frozen=True)
class SpanningElement:
    """``s_mu s*_nu`` with ``s(mu) = s(nu)``."""

    mu: Morphism
    nu: Morphism

    def __post_init__(self):
        if self.mu.source != self.nu.source:
            raise ValueError("s_mu s*_nu needs s(mu) = s(nu)")

    def adjoint(self) -> "SpanningElement":
        return SpanningElement(self.nu, self.mu)


def vertex_element(g: KGraph, v: int) -> SpanningElement:
    return SpanningElement(g.identity(v), g.identity(v))


def state_value(g: KGraph, pf: PFData, e: SpanningElement):
    return cylinder_measure(g, pf, e.mu) if e.mu == e.nu else 0


def multiply_spanning(g: KGraph, a: SpanningElement, b: SpanningElement) -> list[SpanningElement]:
    """``(s_mu s*_nu)(s_sigma s*_tau)`` as a sum of spanning elements (all
    coefficients 1; an empty list is zero)."""
    return [
        SpanningElement(g.compose(a.mu, eta), g.compose(b.nu, zeta))
        for eta, zeta in lambda_min(g, a.nu, b.mu)
    ]


def state_of_product(g: KGraph, pf: PFData, a: SpanningElement, b: SpanningElement):
    return sum((state_value(g, pf, e) for e in multiply_spanning(g, a, b)), 0)


def spanning_elements(g: KGraph, bound: Sequence[int]) -> list[SpanningElement]:
    """All ``s_mu s*_nu`` with ``d(mu), d(nu) <= bound``, ordered by source then paths."""
    by_source: dict[int, list[Morphism]] = defaultdict(list)
    for n in degrees_up_to(bound):
        for lam in g.paths(n):
            by_source[lam.source].append(lam)
    out = []
    for w in range(g.n_vertices):
        for mu in by_source[w]:
            for nu in by_source[w]:
                out.append(SpanningElement(mu, nu))
    return out


def _label(g: KGraph, e: SpanningElement) -> str:
    return f"s[{g.path_id(e.mu)}] s*[{g.path_id(e.nu)}]"


def kms_check(
    g: KGraph, pf: PFData, dyn: Dynamics, beta: float, degree_bound: Sequence[int], tol: float = 1e-10
) -> Report:
    """Test ``phi(ab) = exp(-beta r.(d(mu) - d(nu))) phi(ba)`` for all spanning
    pairs with degrees ``<= degree_bound``.

    Both sides vanish unless ``r(nu) = r(sigma)``, ``r(mu) = r(tau)`` and
    ``d(mu) - d(nu) = d(tau) - d(sigma)``: otherwise neither product has a
    term ``s_lam s*_lam``.  Such pairs are counted as pruned rather than
    evaluated.
    """
    bound = tuple(degree_bound)
    if len(bound) != g.k:
        raise ValueError(f"degree bound needs {g.k} entries")
    if len(dyn.r) != g.k:
        raise ValueError(f"dynamics needs {g.k} exponents")
    elements = spanning_elements(g, bound)
    groups: dict[tuple, list[SpanningElement]] = defaultdict(list)
    for e in elements:
        groups[(e.mu.range, e.nu.range, degree_sub(e.mu.degree, e.nu.degree))].append(e)

    lmin: dict = {}
    mass: dict = {}

    def phi(a: SpanningElement, b: SpanningElement) -> float:
        key = (a.nu, b.mu)
        pairs = lmin.get(key)
        if pairs is None:
            pairs = lmin[key] = lambda_min(g, a.nu, b.mu)
        total = 0.0
        for eta, zeta in pairs:
            left = g.compose(a.mu, eta)
            if left == g.compose(b.nu, zeta):
                m = mass.get(left)
                if m is None:
                    m = mass[left] = float(cylinder_measure(g, pf, left))
                total += m
        return total

    tally = Tally("KMS condition", tol)
    evaluated = 0
    for (r_mu, r_nu, delta), group in groups.items():
        partners = groups.get((r_nu, r_mu, tuple(-x for x in delta)), [])
        factor = math.exp(-beta * float(np.dot(dyn.r, delta)))
        for a in group:
            for b in partners:
                lhs = phi(a, b)
                rhs = factor * phi(b, a)
                evaluated += 1
                tally.record(abs(lhs - rhs), lambda: f"a={_label(g, a)} b={_label(g, b)}: {lhs:.6g} vs {rhs:.6g}")
    report = Report("KMS")
    report.add(
        tally.check(
            beta=float(beta),
            r=[float(x) for x in dyn.r],
            degree_bound=list(bound),
            spanning_elements=len(elements),
            pruned_pairs=len(elements) ** 2 - evaluated,
        )
    )
    return report


def state_checks(g: KGraph, pf: PFData, depth: int = 1) -> Report:
    """``phi(1) = 1`` and positive semidefiniteness of ``[phi(e_i* e_j)]`` over
    spanning elements with degrees ``<= depth * (1, ..., 1)``."""
    report = Report("state")
    unit = sum(float(state_value(g, pf, vertex_element(g, v))) for v in range(g.n_vertices))
    report.add(Check("phi(1) = 1", 1, abs(unit - 1.0), abs(unit - 1.0) <= 1e-12))
    elements = spanning_elements(g, g.square_degree(depth))
    n = len(elements)
    gram = np.zeros((n, n))
    adjoints = [e.adjoint() for e in elements]
    for i, ei in enumerate(adjoints):
        for j, ej in enumerate(elements):
            gram[i, j] = float(state_of_product(g, pf, ei, ej))
    asym = float(np.max(np.abs(gram - gram.T))) if n else 0.0
    low = float(np.linalg.eigvalsh((gram + gram.T) / 2).min()) if n else 0.0
    report.add(Check("Gram symmetric", n * n, asym, asym <= 1e-12))
    report.add(Check("Gram positive semidefinite", n, max(0.0, -low), low >= -1e-12, details={"min_eigenvalue": low}))
    return report


def hausdorff_kms_check(
    g: KGraph, pf: PFData, s: float, degree_bound: Sequence[int], tol: float = 1e-10
) -> Report:
    """KMS check for the rescaled dynamics at inverse temperature ``s``.

    The dynamics is ``r = ln rho(Λ) / s_0`` with ``s_0`` the dimension
    ``ln prod rho / (k ln N)`` of the embedded path space, and the check runs
    at ``beta = s``.  It passes exactly when ``s = s_0``.  When every
    ``rho_i = 1`` the dynamics is trivial and ``r = 0``.
    """
    from .fractal import hausdorff_dimension

    s_true = hausdorff_dimension(g, pf)
    log_rho = [math.log(r) for r in pf.rho]
    if s_true == 0:
        if any(abs(x) > 1e-12 for x in log_rho):
            raise ValueError("zero dimension with a nontrivial spectral radius")
        r = tuple(0.0 for _ in log_rho)
    else:
        r = tuple(x / s_true for x in log_rho)
    report = kms_check(g, pf, Dynamics(r), s, degree_bound, tol)
    report.title = "KMS at the dimension"
    report.checks[0].details["dimension"] = s_true
    return report


def oa_identity_check(g: KGraph, pf: PFData, tol: float = 1e-12) -> Report:
    """For a 1-graph: ``phi(s_e* s_e) = rho(A) phi(s_e s_e*)`` for every edge."""
    if g.k != 1:
        raise ValueError("the edge identity is stated for 1-graphs")
    tally = Tally("phi(S*_e S_e) = rho phi(S_e S*_e)", tol)
    for e in g.paths((1,)):
        s_e = SpanningElement(e, g.identity(e.source))
        lhs = float(state_of_product(g, pf, s_e.adjoint(), s_e))
        rhs = pf.rho[0] * float(state_of_product(g, pf, s_e, s_e.adjoint()))
        tally.record(abs(lhs - rhs), lambda: g.path_id(e))
    return Report("Cuntz-Krieger algebra state", [tally.check()])
