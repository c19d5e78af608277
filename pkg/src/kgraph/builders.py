"""Small k-graph documents used as fixtures and CLI examples."""

from __future__ import annotations

import itertools
import json
from importlib import resources
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

LEDRAPPIER_MATRICES = (
    [[1, 0, 0, 1], [1, 0, 0, 1], [0, 1, 1, 0], [0, 1, 1, 0]],
    [[1, 0, 1, 0], [1, 0, 1, 0], [0, 1, 0, 1], [0, 1, 0, 1]],
)

_COLOR_PREFIX = "abcdefghij"


def zero_one_document(matrices: Sequence, names: Sequence[str] | None = None) -> dict:
    """Document for {0,1} vertex matrices with squares left to auto-derivation.

    The colour-``i`` edge from ``w`` to ``v`` gets id ``<letter><v>.<w>``.
    """
    mats = [np.asarray(a, dtype=int) for a in matrices]
    n = mats[0].shape[0]
    names = list(names) if names is not None else [f"v{i}" for i in range(n)]
    edges = {}
    for c, a in enumerate(mats, start=1):
        if a.max(initial=0) > 1:
            raise ValueError("zero_one_document needs {0,1} matrices")
        prefix = _COLOR_PREFIX[c - 1]
        edges[str(c)] = [
            {"id": f"{prefix}{v}.{w}", "source": names[w], "range": names[v]}
            for v in range(n)
            for w in range(n)
            if a[v, w]
        ]
    return {"k": len(mats), "vertices": names, "edges": edges, "squares": "auto"}


def ledrappier_document() -> dict:
    return json.loads(resources.files("kgraph.data").joinpath("ledrappier.json").read_text())


def full_shift_document(n: int) -> dict:
    """The 1-graph whose vertex matrix is the all-ones ``n x n`` matrix."""
    return zero_one_document([np.ones((n, n), dtype=int)])


def single_vertex_document(loops: Sequence[int]) -> dict:
    """One vertex with ``loops[i]`` loops of colour ``i+1``.

    Squares pair ``(x, y)`` with ``(y, x)``, which satisfies the hexagon
    condition for any rank.
    """
    k = len(loops)
    edges = {
        str(c): [{"id": f"{_COLOR_PREFIX[c - 1]}{t}", "source": "v", "range": "v"} for t in range(count)]
        for c, count in enumerate(loops, start=1)
    }
    squares = []
    for i, j in itertools.combinations(range(1, k + 1), 2):
        for s in range(loops[i - 1]):
            for t in range(loops[j - 1]):
                x, y = f"{_COLOR_PREFIX[i - 1]}{s}", f"{_COLOR_PREFIX[j - 1]}{t}"
                squares.append({"colors": [i, j], "path_ij": [x, y], "path_ji": [y, x]})
    return {"k": k, "vertices": ["v"], "edges": edges, "squares": squares}


def _random_irreducible(rng: np.random.Generator, n: int, density: float) -> np.ndarray:
    while True:
        a = (rng.random((n, n)) < density).astype(int)
        if a.sum(axis=1).min() == 0:
            continue
        n_comp, _ = connected_components(a, directed=True, connection="strong")
        if n_comp == 1:
            return a


def random_product_document(seed: int, sizes: tuple[int, int] = (2, 3), density: float = 0.6) -> dict:
    """A strongly connected {0,1} 2-graph built as the product of two random
    irreducible 1-graphs, with vertices shuffled.

    ``A_1 = B (x) I`` and ``A_2 = I (x) C`` commute and their product
    ``B (x) C`` is again {0,1}, so the squares are forced.
    """
    rng = np.random.default_rng(seed)
    b = _random_irreducible(rng, sizes[0], density)
    c = _random_irreducible(rng, sizes[1], density)
    a1 = np.kron(b, np.identity(sizes[1], dtype=int))
    a2 = np.kron(np.identity(sizes[0], dtype=int), c)
    perm = rng.permutation(a1.shape[0])
    a1 = a1[np.ix_(perm, perm)]
    a2 = a2[np.ix_(perm, perm)]
    return zero_one_document([a1, a2])
