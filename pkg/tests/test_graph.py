import copy
import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, graph
from kgraph.builders import LEDRAPPIER_MATRICES, ledrappier_document, single_vertex_document
from kgraph.graph import (
    AmbiguousSquaresError,
    HexagonError,
    KGraphError,
    NoPeriodicityUpToDepth,
    NonCommutingError,
    PeriodicWitness,
    SchemaError,
    SourceError,
    SquareError,
    aperiodicity_probe,
    compose,
    degrees_of_total,
    degrees_up_to,
    enumerate_paths,
    factor,
    is_strongly_connected,
    lambda_min,
    load_kgraph,
    load_kgraph_file,
    rainbow_word,
    to_document,
)
from oracle import Oracle, matrix_product_counts


def key(g, lam):
    return g.vertices[lam.range], tuple((g.edges[e].color, g.edges[e].id) for e in lam.edges)


def one_vertex(loops_per_color, squares):
    k = len(loops_per_color)
    edges = {
        str(c + 1): [{"id": name, "source": "v", "range": "v"} for name in names]
        for c, names in enumerate(loops_per_color)
    }
    return {"k": k, "vertices": ["v"], "edges": edges, "squares": squares}


# -- loading ------------------------------------------------------------------


def test_ledrappier_loads_with_sixteen_squares(ledrappier):
    g, _ = ledrappier
    assert g.k == 2
    assert len(g.vertices) == 4
    assert len(g.edges) == 16
    assert len(g.squares) == 16
    for a, expected in zip(g.matrices, LEDRAPPIER_MATRICES):
        assert a.tolist() == expected


def test_single_loop_per_colour_has_one_square():
    g = load_kgraph(one_vertex([["a"], ["b"]], "auto"))
    assert len(g.squares) == 1


def test_ambiguous_squares_are_rejected():
    with pytest.raises(AmbiguousSquaresError, match="not forced"):
        load_kgraph(one_vertex([["a", "b"], ["c"]], "auto"))


def test_non_commuting_matrices_are_rejected():
    doc = {
        "k": 2,
        "vertices": ["u", "w"],
        "edges": {
            "1": [{"id": "a", "source": "w", "range": "u"}, {"id": "b", "source": "u", "range": "w"}],
            "2": [{"id": "c", "source": "u", "range": "u"}, {"id": "d", "source": "w", "range": "u"}],
        },
        "squares": "auto",
    }
    with pytest.raises(NonCommutingError, match="A1A2"):
        load_kgraph(doc)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("squares"),
        lambda d: d.update(k=0),
        lambda d: d.update(extra=1),
        lambda d: d["vertices"].append("bad name"),
        lambda d: d["edges"]["1"][0].pop("source"),
        lambda d: d["edges"].update({"x": []}),
    ],
)
def test_schema_errors(mutate):
    doc = ledrappier_document()
    mutate(doc)
    with pytest.raises(SchemaError):
        load_kgraph(doc)


def test_unknown_vertex_and_duplicate_ids_are_errors():
    doc = ledrappier_document()
    doc["edges"]["1"][0]["range"] = "nowhere"
    with pytest.raises(KGraphError):
        load_kgraph(doc)
    doc = ledrappier_document()
    doc["edges"]["1"][1]["id"] = doc["edges"]["1"][0]["id"]
    with pytest.raises(KGraphError):
        load_kgraph(doc)


def test_vertex_without_incoming_edge_of_a_colour_is_a_source():
    doc = one_vertex([["a"], []], "auto")
    with pytest.raises(SourceError):
        load_kgraph(doc)


def test_explicit_squares_must_be_a_bijection():
    doc = one_vertex([["a0", "a1"], ["b"]], [])
    doc["squares"] = [
        {"colors": [1, 2], "path_ij": ["a0", "b"], "path_ji": ["b", "a0"]},
        {"colors": [1, 2], "path_ij": ["a1", "b"], "path_ji": ["b", "a0"]},
    ]
    with pytest.raises(SquareError):
        load_kgraph(doc)
    doc["squares"] = doc["squares"][:1]
    with pytest.raises(SquareError):
        load_kgraph(doc)


def _twisted_rank_three():
    """Three colours of two loops, with the (1, 3) squares twisted by
    ``(s, t) -> (s + t, t)`` and the (2, 3) squares by ``(s, t) -> (t, s)``.
    Each twist alone is consistent; together they break associativity."""
    doc = one_vertex([["a0", "a1"], ["b0", "b1"], ["c0", "c1"]], [])
    squares = []
    for (i, p), (j, q) in itertools.combinations(enumerate("abc", start=1), 2):
        for s, t in itertools.product(range(2), repeat=2):
            s2, t2 = {(1, 3): ((s + t) % 2, t), (2, 3): (t, s)}.get((i, j), (s, t))
            squares.append({"colors": [i, j], "path_ij": [f"{p}{s}", f"{q}{t}"], "path_ji": [f"{q}{t2}", f"{p}{s2}"]})
    doc["squares"] = squares
    return doc


def test_hexagon_condition_is_enforced_in_rank_three():
    load_kgraph(single_vertex_document([2, 1, 2]))
    with pytest.raises(HexagonError, match="associativity"):
        load_kgraph(_twisted_rank_three())


def test_document_round_trip(fixture_graph, tmp_path):
    _, g, _ = fixture_graph
    doc = to_document(g)
    again = load_kgraph(doc)
    assert again.vertices == g.vertices
    assert [m.tolist() for m in again.matrices] == [m.tolist() for m in g.matrices]
    path = tmp_path / "g.json"
    path.write_text(json.dumps(doc))
    assert len(load_kgraph_file(path).squares) == len(g.squares)


def test_bad_json_file_is_a_schema_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{ nope")
    with pytest.raises(SchemaError):
        load_kgraph_file(path)


# -- degrees and normal form ----------------------------------------------------


def test_rainbow_word_cycles_colours():
    assert rainbow_word((2, 2)) == (1, 2, 1, 2)
    assert rainbow_word((3, 1)) == (1, 2, 1, 1)
    assert rainbow_word((0, 2, 1)) == (2, 3, 2)
    assert rainbow_word((0, 0)) == ()


def test_degree_enumerations():
    assert len(degrees_up_to((2, 1))) == 6
    assert len(degrees_of_total(2, 4)) == 15
    assert all(sum(d) <= 4 for d in degrees_of_total(3, 4))


def test_path_ids_round_trip(fixture_graph):
    _, g, _ = fixture_graph
    for n in degrees_up_to(g.square_degree(2)):
        for lam in g.paths(n):
            assert g.parse_path(g.path_id(lam)) == lam


def test_parse_path_accepts_any_composable_order(ledrappier):
    g, _ = ledrappier
    lam = g.paths((1, 1))[5]
    first, second = lam.edges
    swapped = g._swap[(first, second)]
    text = "/".join(g.path_id(g._make([e])) for e in swapped)
    assert g.parse_path(text) == lam
    with pytest.raises(KeyError):
        g.parse_path("9:nothing")


# -- enumeration against brute force ------------------------------------------------


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_path_counts_match_matrix_products(name):
    g, _ = graph(name)
    mats = [a.tolist() for a in g.matrices]
    for n in degrees_of_total(g.k, 4):
        expected = matrix_product_counts(mats, n)
        counted = np.zeros((g.n_vertices, g.n_vertices), dtype=int)
        for lam in enumerate_paths(g, n):
            counted[lam.range, lam.source] += 1
        assert counted.tolist() == expected
        assert g.path_count_matrix(n).tolist() == expected


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_paths_match_oracle_grids(name):
    g, _ = graph(name)
    oracle = Oracle(FIXTURES[name]())
    for n in degrees_of_total(g.k, 3):
        ours = {key(g, lam) for lam in g.paths(n)}
        theirs = {oracle.key(grid) for grid in oracle.grids(n)}
        assert ours == theirs


def test_ledrappier_oracle_counts():
    oracle = Oracle(ledrappier_document())
    assert len(oracle.grids((1, 1))) == 16
    assert len(oracle.grids((2, 2))) == 64


def test_compose_and_factor_match_oracle(ledrappier):
    g, _ = ledrappier
    oracle = Oracle(ledrappier_document())
    zero = (0, 0)
    for grid in oracle.grids((2, 1)):
        lam = g.parse_path("/".join(f"{c}:{e}" for c, e in oracle.rainbow(grid)))
        for m in degrees_up_to((2, 1)):
            head, tail = factor(g, lam, m)
            assert key(g, head) == oracle.key(oracle.restrict(grid, zero, m))
            assert key(g, tail) == oracle.key(oracle.restrict(grid, m, (2, 1)))
            assert compose(g, head, tail) == lam


def test_compose_rejects_mismatched_ends(ledrappier):
    g, _ = ledrappier
    lam = g.paths((1, 0), range=0)[0]
    other = next(p for p in g.paths((1, 0)) if p.range != lam.source)
    with pytest.raises(ValueError, match="cannot compose"):
        g.compose(lam, other)
    with pytest.raises(ValueError):
        g.factor(lam, (0, 1))


def test_factor_respects_identities(fixture_graph):
    _, g, _ = fixture_graph
    for lam in g.paths(g.square_degree(1)):
        head, tail = g.factor(lam, g.zero_degree())
        assert head == g.identity(lam.range) and tail == lam
        head, tail = g.factor(lam, lam.degree)
        assert head == lam and tail == g.identity(lam.source)


def test_lambda_min_matches_oracle_on_ledrappier(ledrappier):
    g, _ = ledrappier
    oracle = Oracle(ledrappier_document())
    for dm, dn in [((1, 0), (0, 1)), ((1, 1), (0, 1)), ((2, 0), (1, 1)), ((1, 0), (1, 0))]:
        for mu in g.paths(dm):
            for nu in g.paths(dn):
                ours = {(key(g, e), key(g, z)) for e, z in lambda_min(g, mu, nu)}
                assert ours == oracle.lambda_min(key(g, mu), dm, key(g, nu), dn)


def test_lambda_min_of_equal_paths_is_trivial(ledrappier):
    g, _ = ledrappier
    for lam in g.paths((1, 1)):
        assert lambda_min(g, lam, lam) == [(g.identity(lam.source), g.identity(lam.source))]


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_factorisation_is_unique_and_associative(data):
    g, _ = graph(data.draw(st.sampled_from(sorted(FIXTURES))))
    n = tuple(data.draw(st.integers(0, 2)) for _ in range(g.k))
    paths = g.paths(n)
    lam = data.draw(st.sampled_from(paths))
    m = tuple(data.draw(st.integers(0, x)) for x in n)
    head, tail = g.factor(lam, m)
    assert head.degree == m
    assert g.compose(head, tail) == lam
    # every other composable pair of the same degrees gives a different path
    rest = tuple(a - b for a, b in zip(n, m))
    hits = [
        (a, b)
        for a in g.paths(m, range=lam.range)
        for b in g.paths(rest, range=a.source)
        if g.compose(a, b) == lam
    ]
    assert hits == [(head, tail)]


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_composition_is_associative(data):
    g, _ = graph(data.draw(st.sampled_from(sorted(FIXTURES))))

    def draw_from(v):
        n = tuple(data.draw(st.integers(0, 1)) for _ in range(g.k))
        return data.draw(st.sampled_from(g.paths(n, range=v)))

    a = draw_from(data.draw(st.integers(0, g.n_vertices - 1)))
    b = draw_from(a.source)
    c = draw_from(b.source)
    assert g.compose(g.compose(a, b), c) == g.compose(a, g.compose(b, c))


# -- connectivity and aperiodicity ------------------------------------------------


def test_strong_connectivity(fixture_graph):
    _, g, _ = fixture_graph
    assert is_strongly_connected(g)


def test_disconnected_graph_is_detected():
    doc = {
        "k": 1,
        "vertices": ["u", "w"],
        "edges": {"1": [{"id": "a", "source": "u", "range": "u"}, {"id": "b", "source": "w", "range": "w"}]},
        "squares": "auto",
    }
    assert not is_strongly_connected(load_kgraph(doc))


def test_aperiodicity_probe():
    g, _ = graph("ledrappier")
    assert aperiodicity_probe(g, 1) == NoPeriodicityUpToDepth(1)
    # one loop per colour: every shift looks the same
    periodic = load_kgraph(one_vertex([["a"], ["b"]], "auto"))
    witness = aperiodicity_probe(periodic, 1)
    assert isinstance(witness, PeriodicWitness)
    assert witness.m != witness.n
    with pytest.raises(ValueError):
        aperiodicity_probe(g, 0)


def test_documents_are_not_mutated():
    doc = ledrappier_document()
    before = copy.deepcopy(doc)
    load_kgraph(doc)
    assert doc == before
