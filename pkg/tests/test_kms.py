import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, graph
from kgraph.builders import ledrappier_document
from kgraph.ckrep import CylinderFunction, apply_S, apply_S_star, refine
from kgraph.graph import degree_sub
from kgraph.kms import (
    Dynamics,
    SpanningElement,
    hausdorff_kms_check,
    kms_check,
    multiply_spanning,
    oa_identity_check,
    preferred_dynamics,
    spanning_elements,
    state_checks,
    state_of_product,
    state_value,
    vertex_element,
)
from kgraph.measure import cylinder_measure
from oracle import Oracle


def key(g, lam):
    return g.vertices[lam.range], tuple((g.edges[e].color, g.edges[e].id) for e in lam.edges)


def oracle_state_of_product(g, pf, oracle, a, b):
    """phi(ab) from grid-search common extensions and the measure formula."""
    total = 0
    for eta_key, zeta_key in oracle.lambda_min(key(g, a.nu), a.nu.degree, key(g, b.mu), b.mu.degree):
        eta = g.parse_path("/".join(f"{c}:{e}" for c, e in eta_key[1])) if eta_key[1] else g.identity(g.vertex_index(eta_key[0]))
        zeta = g.parse_path("/".join(f"{c}:{e}" for c, e in zeta_key[1])) if zeta_key[1] else g.identity(g.vertex_index(zeta_key[0]))
        left, right = g.compose(a.mu, eta), g.compose(b.nu, zeta)
        if left == right:
            total += cylinder_measure(g, pf, left)
    return total


def operator(g, pf, e, f):
    return apply_S(g, pf, e.mu, apply_S_star(g, pf, e.nu, f))


def test_state_on_vertices_and_diagonal(ledrappier):
    g, pf = ledrappier
    assert sum(state_value(g, pf, vertex_element(g, v)) for v in range(4)) == 1
    lam = g.paths((1, 1))[0]
    assert state_value(g, pf, SpanningElement(lam, lam)) == Fraction(1, 16)
    other = next(p for p in g.paths((1, 1), source=lam.source) if p != lam)
    assert state_value(g, pf, SpanningElement(lam, other)) == 0


def test_spanning_element_needs_matching_sources(ledrappier):
    g, _ = ledrappier
    with pytest.raises(ValueError):
        SpanningElement(g.identity(0), g.identity(1))


def test_spanning_element_count(ledrappier):
    g, _ = ledrappier
    # sum over w of (number of paths ending at w with degree <= (1,1))^2
    per_source = 1 + 2 + 2 + 4
    assert len(spanning_elements(g, (1, 1))) == 4 * per_source**2


def test_products_match_grid_oracle(ledrappier):
    g, pf = ledrappier
    oracle = Oracle(ledrappier_document())
    elements = spanning_elements(g, (1, 0))
    for a in elements[::3]:
        for b in elements[::2]:
            assert state_of_product(g, pf, a, b) == oracle_state_of_product(g, pf, oracle, a, b)


@pytest.mark.parametrize("name", ["ledrappier", "full_shift_2", "multi_loop"])
def test_products_agree_with_operators(name):
    g, pf = graph(name)
    basis = g.paths(g.square_degree(2))
    elements = spanning_elements(g, g.square_degree(1) if g.k == 1 else (1, 0))
    for a in elements[::5]:
        for b in elements[::3]:
            terms = multiply_spanning(g, a, b)
            for beta in basis:
                f = CylinderFunction.indicator(beta)
                lhs = operator(g, pf, a, operator(g, pf, b, f))
                rhs = CylinderFunction()
                for e in terms:
                    rhs = rhs + operator(g, pf, e, f)
                diff = refine(g, lhs - rhs, g.square_degree(4))
                assert not diff


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_kms_at_beta_one(name):
    g, pf = graph(name)
    report = kms_check(g, pf, preferred_dynamics(pf), 1.0, g.square_degree(1))
    assert report.passed, report.to_dict()
    check = report["KMS condition"]
    assert check.instances + check.details["pruned_pairs"] == check.details["spanning_elements"] ** 2


def test_wrong_beta_fails_with_witness(ledrappier):
    g, pf = ledrappier
    report = kms_check(g, pf, preferred_dynamics(pf), 2.0, (1, 1))
    check = report["KMS condition"]
    assert not check.passed
    assert check.witness.startswith("a=s[")
    # worst pair: a = s_v s*_lam, b = s_lam s*_v with d(lam) = (1, 1) gives
    # phi(ab) = 1/4 against 2^(2 * 2) * phi(ba) = 16 / 16
    assert check.max_residual == pytest.approx(0.75)


def test_pruned_pairs_really_vanish(ledrappier):
    g, pf = ledrappier
    elements = spanning_elements(g, (1, 0))
    for a in elements:
        for b in elements:
            same = (
                a.mu.range == b.nu.range
                and a.nu.range == b.mu.range
                and degree_sub(a.mu.degree, a.nu.degree) == degree_sub(b.nu.degree, b.mu.degree)
            )
            if not same:
                assert state_of_product(g, pf, a, b) == 0
                assert state_of_product(g, pf, b, a) == 0


def test_argument_lengths(ledrappier):
    g, pf = ledrappier
    with pytest.raises(ValueError):
        kms_check(g, pf, preferred_dynamics(pf), 1.0, (1,))
    with pytest.raises(ValueError):
        kms_check(g, pf, Dynamics((1.0,)), 1.0, (1, 1))
    with pytest.raises(ValueError):
        Dynamics((math.inf, 0.0))


def test_preferred_dynamics_is_log_radius(ledrappier):
    _, pf = ledrappier
    assert preferred_dynamics(pf).r == pytest.approx((math.log(2), math.log(2)))


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_state_is_positive_and_unital(name):
    g, pf = graph(name)
    report = state_checks(g, pf, 1)
    assert report.passed, report.to_dict()
    assert report["Gram positive semidefinite"].details["min_eigenvalue"] >= -1e-12


def test_hausdorff_dynamics(ledrappier):
    g, pf = ledrappier
    good = hausdorff_kms_check(g, pf, 0.5, (1, 1))
    assert good.passed
    assert good["KMS condition"].details["dimension"] == pytest.approx(0.5)
    assert good["KMS condition"].details["r"] == pytest.approx([2 * math.log(2)] * 2)
    assert not hausdorff_kms_check(g, pf, 1.0, (1, 1)).passed


@pytest.mark.parametrize("name", ["full_shift_2", "full_shift_3"])
def test_edge_identity_for_one_graphs(name):
    g, pf = graph(name)
    assert oa_identity_check(g, pf).passed


def test_edge_identity_needs_rank_one(ledrappier):
    with pytest.raises(ValueError):
        oa_identity_check(*ledrappier)


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_kms_ratio_on_random_pairs(data):
    g, pf = graph(data.draw(st.sampled_from(sorted(FIXTURES))))
    elements = spanning_elements(g, g.square_degree(1))
    a = data.draw(st.sampled_from(elements))
    b = data.draw(st.sampled_from(elements))
    r = preferred_dynamics(pf).r
    shift = np.dot(r, degree_sub(a.mu.degree, a.nu.degree))
    lhs = float(state_of_product(g, pf, a, b))
    rhs = math.exp(-shift) * float(state_of_product(g, pf, b, a))
    assert lhs == pytest.approx(rhs, abs=1e-12)
