"""Orthonormal wavelet decomposition of the square-depth cylinder spaces.

``V0`` holds the normalised vertex indicators ``x_v^{-1/2} Θ_v``.  For each
vertex ``v`` the functions ``f^{m,v} = sum_{lam in D_v} c_lam Θ_lam`` on the
paths ``D_v = vΛ^{(1,...,1)}`` span the complement of ``Θ_v``; level ``j``
consists of the translates ``S_lam f^{m,v}`` with ``s(lam) = v`` and
``d(lam) = (j, ..., j)``.  Up to depth ``n`` these families together are an
orthonormal basis of the span of ``{Θ_mu : d(mu) = (n, ..., n)}``.

Everything here is floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ckrep import CylinderFunction, apply_S, inner_product, refine
from .graph import KGraph, Morphism
from .measure import cylinder_measure
from .reports import Check, Report
from .spectral import PFData

DROP_TOL = 1e-10


class WaveletError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WaveletVector:
    level: int | str
    base_vertex: int
    index: int
    shift: Morphism
    coefficients: CylinderFunction


@dataclass(eq=False)
class WaveletBasis:
    v0: list[WaveletVector]
    levels: list[list[WaveletVector]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.levels)

    def vectors(self) -> list[WaveletVector]:
        out = list(self.v0)
        for level in self.levels:
            out.extend(level)
        return out

    def __len__(self) -> int:
        return len(self.v0) + sum(len(level) for level in self.levels)


def _float(pf: PFData) -> PFData:
    return pf.float_mode() if pf.exact else pf


def build_v0(g: KGraph, pf: PFData) -> list[WaveletVector]:
    pf = _float(pf)
    out = []
    for v in range(g.n_vertices):
        vid = g.identity(v)
        coeff = 1.0 / math.sqrt(float(pf.x[v]))
        out.append(WaveletVector("V0", v, 0, vid, CylinderFunction.indicator(vid, coeff)))
    return out


def _complement_basis(weights: np.ndarray) -> np.ndarray:
    """Rows: an orthonormal basis, for ``<a, b> = sum a_i b_i w_i``, of the
    complement of the constant vector, by Gram-Schmidt on the deflected
    standard basis."""
    total = weights.sum()
    accepted: list[np.ndarray] = []
    for i in range(len(weights)):
        vec = -weights[i] / total * np.ones(len(weights))
        vec[i] += 1.0
        # two passes of modified Gram-Schmidt keep the rows orthogonal to rounding
        for _ in range(2):
            for q in accepted:
                vec = vec - np.dot(q * weights, vec) * q
        size = math.sqrt(max(0.0, float(np.dot(vec * weights, vec))))
        if size <= DROP_TOL:
            continue
        vec = vec / size
        lead = next(x for x in vec if abs(x) > DROP_TOL)
        if lead < 0:
            vec = -vec
        accepted.append(vec)
    return np.array(accepted).reshape(len(accepted), len(weights))


def build_w0(g: KGraph, pf: PFData) -> list[WaveletVector]:
    pf = _float(pf)
    one = g.square_degree(1)
    out = []
    for v in range(g.n_vertices):
        dv = g.paths(one, range=v)
        weights = np.array([float(cylinder_measure(g, pf, lam)) for lam in dv])
        rows = _complement_basis(weights)
        if len(rows) != len(dv) - 1:
            raise WaveletError(
                f"vertex {g.vertices[v]}: Gram-Schmidt kept {len(rows)} vectors, expected {len(dv) - 1}"
            )
        for m, row in enumerate(rows, start=1):
            f = CylinderFunction(zip(dv, (float(c) for c in row)))
            out.append(WaveletVector(0, v, m, g.identity(v), f))
    return out


def build_level(g: KGraph, pf: PFData, j: int, w0: list[WaveletVector]) -> list[WaveletVector]:
    """``S_lam f^{m,v}`` for ``lam in C_{j,v}``, ordered by ``(v, lam, m)``."""
    pf = _float(pf)
    if j == 0:
        return list(w0)
    by_vertex: dict[int, list[WaveletVector]] = {}
    for w in w0:
        by_vertex.setdefault(w.base_vertex, []).append(w)
    out = []
    degree = g.square_degree(j)
    for v in range(g.n_vertices):
        for lam in g.paths(degree, source=v):
            for w in by_vertex.get(v, []):
                out.append(WaveletVector(j, v, w.index, lam, apply_S(g, pf, lam, w.coefficients)))
    return out


def build_basis(g: KGraph, pf: PFData, n: int) -> WaveletBasis:
    if n < 1:
        raise ValueError("depth must be at least 1")
    w0 = build_w0(g, pf)
    return WaveletBasis(build_v0(g, pf), [build_level(g, pf, j, w0) for j in range(n)])


def _matrix(g: KGraph, vectors: list[WaveletVector], n: int) -> tuple[list[Morphism], np.ndarray]:
    cells = g.paths(g.square_degree(n))
    column = {lam: i for i, lam in enumerate(cells)}
    b = np.zeros((len(vectors), len(cells)))
    for r, vec in enumerate(vectors):
        for lam, c in refine(g, vec.coefficients, g.square_degree(n)):
            b[r, column[lam]] = float(c)
    return cells, b


def _describe(g: KGraph, vec: WaveletVector) -> str:
    if vec.level == "V0":
        return f"V0[{g.vertices[vec.base_vertex]}]"
    return f"W{vec.level}[{g.vertices[vec.base_vertex]}, m={vec.index}, shift={g.path_id(vec.shift)}]"


def verify_decomposition(g: KGraph, pf: PFData, n: int, basis: WaveletBasis | None = None) -> Report:
    """Orthonormality, the dimension count and completeness at depth ``n``."""
    pf = _float(pf)
    basis = basis if basis is not None else build_basis(g, pf, n)
    vectors = basis.vectors()
    cells, b = _matrix(g, vectors, n)
    weights = np.array([float(cylinder_measure(g, pf, lam)) for lam in cells])
    report = Report("wavelet decomposition")

    gram = (b * weights) @ b.T
    err = np.abs(gram - np.identity(len(vectors)))
    worst = float(err.max()) if err.size else 0.0
    witness = None
    if worst > 1e-10:
        i, j = np.unravel_index(int(err.argmax()), err.shape)
        witness = f"<{_describe(g, vectors[i])}, {_describe(g, vectors[j])}> = {gram[i, j]:.3e}"
    report.add(Check("Gram matrix is the identity", err.size, worst, worst <= 1e-10, witness=witness))

    one = g.square_degree(1)
    d = [len(g.paths(one, range=v)) for v in range(g.n_vertices)]
    predicted = g.n_vertices + sum(
        len(g.paths(g.square_degree(j), source=v)) * (d[v] - 1) for j in range(n) for v in range(g.n_vertices)
    )
    target = int(g.path_count_matrix(g.square_degree(n)).sum())
    sizes = [len(basis.v0)] + [len(level) for level in basis.levels]
    ok = len(vectors) == predicted == target
    report.add(
        Check(
            "cardinality",
            1,
            float(abs(len(vectors) - target) + abs(predicted - target)),
            ok,
            witness=None if ok else f"{sizes} sum to {len(vectors)}, formula {predicted}, paths {target}",
            details={"family_sizes": sizes, "formula": predicted, "paths": target},
        )
    )

    # expanding Θ_mu in the basis: coefficients <b_i, Θ_mu> = b[i, mu] w_mu
    recon = b.T @ (b * weights)
    err = np.abs(recon - np.identity(len(cells)))
    worst = float(err.max()) if err.size else 0.0
    witness = None
    if worst > 1e-10:
        col = int(err.max(axis=0).argmax())
        witness = g.path_id(cells[col])
    report.add(Check("cylinder reconstruction", len(cells), worst, worst <= 1e-10, witness=witness))

    # f^{m,v} lives under Θ_v, so its integral is <Θ_v, f^{m,v}>
    w0 = basis.levels[0] if basis.levels else []
    means = [abs(float(inner_product(g, CylinderFunction.indicator(g.identity(w.base_vertex)), w.coefficients, pf))) for w in w0]
    mean = max(means, default=0.0)
    report.add(Check("wavelets have mean zero", len(means), mean, mean <= 1e-10))
    return report


def basis_document(g: KGraph, basis: WaveletBasis) -> dict:
    """Serialisable listing of every basis vector."""
    out = []
    for vec in basis.vectors():
        terms = sorted(vec.coefficients, key=lambda t: t[0].edges)
        out.append(
            {
                "level": vec.level,
                "vertex": g.vertices[vec.base_vertex],
                "index": vec.index,
                "shift": g.path_id(vec.shift),
                "support": [g.path_id(lam) for lam, _ in terms],
                "coefficients": [repr(float(c)) for _, c in terms],
            }
        )
    return {"depth": basis.n, "vectors": out}
