"""Perron-Frobenius data of a strongly connected k-graph.

The common positive eigenvector is found by damped power iteration on the
product ``A_1 ... A_k``; each spectral radius is then read off as
``sum(A_i x)`` (``x`` has unit l1 norm).  When the product fails to pin
down a common eigenvector (it may be reducible even though the family is
irreducible) the iteration is repeated on ``A_1 + ... + A_k``, which is
irreducible exactly when the graph is strongly connected.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from .graph import Degree, KGraph, is_strongly_connected
from .reports import Check, Report


class PerronFrobeniusError(ValueError):
    pass


class ConvergenceError(PerronFrobeniusError):
    pass


@dataclass(frozen=True, eq=False)
class PFData:
    rho: tuple[float, ...]
    x: np.ndarray
    residuals: tuple[float, ...]
    iterations: int = 0
    method: str = "product"
    exact_rho: tuple[int, ...] | None = None
    exact_x: tuple[Fraction, ...] | None = None

    @property
    def exact(self) -> bool:
        return self.exact_rho is not None

    @property
    def rho_product(self) -> float:
        return math.prod(self.rho)

    def float_mode(self) -> "PFData":
        """The same data with exact arithmetic switched off."""
        return dataclasses.replace(self, exact_rho=None, exact_x=None)

    def rho_power(self, degree: Degree):
        """``rho(Λ)^degree`` (negative entries allowed); exact when available."""
        if self.exact:
            out = Fraction(1)
            for r, n in zip(self.exact_rho, degree):
                out *= Fraction(r) ** n
            return out
        return math.prod(r**n for r, n in zip(self.rho, degree))

    def vertex_mass(self, v: int):
        return self.exact_x[v] if self.exact else float(self.x[v])

    def to_dict(self, g: KGraph) -> dict:
        out = {
            "rho": [float(r) for r in self.rho],
            "rho_product": self.rho_product,
            "x": {name: float(self.x[i]) for i, name in enumerate(g.vertices)},
            "residuals": [float(r) for r in self.residuals],
            "iterations": self.iterations,
            "method": self.method,
            "exact": self.exact,
        }
        if self.exact:
            out["exact_rho"] = list(self.exact_rho)
            out["exact_x"] = {name: str(self.exact_x[i]) for i, name in enumerate(g.vertices)}
        return out


def _power_iteration(a: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, int]:
    n = a.shape[0]
    x = np.full(n, 1.0 / n)
    for it in range(1, max_iter + 1):
        y = a @ x
        y /= y.sum()
        # averaging consecutive iterates damps the oscillation of periodic matrices
        new = 0.5 * (x + y)
        if np.max(np.abs(y - x)) <= tol * 1e-2:
            return y, it
        x = new
    raise ConvergenceError(f"power iteration did not converge within {max_iter} iterations")


def _rayleigh(mats, x: np.ndarray) -> tuple[list[float], list[float]]:
    rho, res = [], []
    for a in mats:
        ax = a @ x
        r = float(ax.sum())
        rho.append(r)
        res.append(float(np.max(np.abs(ax - r * x))))
    return rho, res


def _rational_nullspace(rows: list[list[Fraction]], n: int) -> list[list[Fraction]]:
    """Basis of ``{y : rows @ y == 0}`` by exact Gaussian elimination."""
    m = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fcol in free:
        y = [Fraction(0)] * n
        y[fcol] = Fraction(1)
        for row, pc in enumerate(pivots):
            y[pc] = -m[row][fcol]
        basis.append(y)
    return basis


def _exact_eigendata(g: KGraph, rho: list[float], x: np.ndarray, tol: float):
    ints = [round(r) for r in rho]
    if any(abs(r - i) > max(tol, 1e-9) * max(1.0, abs(r)) for r, i in zip(rho, ints)):
        return None
    n = g.n_vertices
    rows = []
    for a, r in zip(g.matrices, ints):
        for v in range(n):
            rows.append([Fraction(int(a[v, w]) - (r if v == w else 0)) for w in range(n)])
    basis = _rational_nullspace(rows, n)
    if len(basis) != 1:
        return None
    y = basis[0]
    total = sum(y)
    if total == 0:
        return None
    y = [v / total for v in y]
    if any(v <= 0 for v in y):
        return None
    if max(abs(float(v) - float(xv)) for v, xv in zip(y, x)) > 1e-9:
        return None
    return tuple(ints), tuple(y)


def perron_frobenius(
    g: KGraph, tol: float = 1e-12, max_iter: int = 100_000, detect_exact: bool = True
) -> PFData:
    """Spectral radii and the unimodular common Perron-Frobenius eigenvector.

    Raises :class:`PerronFrobeniusError` for graphs that are not strongly
    connected or when no common positive eigenvector passes the residual
    check, and :class:`ConvergenceError` when iteration stalls.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not is_strongly_connected(g):
        raise PerronFrobeniusError("graph is not strongly connected")
    mats = [a.astype(float) for a in g.matrices]
    attempts = [("product", reduce(np.matmul, mats)), ("sum", sum(mats))]
    failure = None
    for method, target in attempts:
        try:
            x, iterations = _power_iteration(target, tol, max_iter)
        except ConvergenceError as exc:
            failure = exc
            continue
        rho, res = _rayleigh(mats, x)
        if x.min() <= 0:
            failure = PerronFrobeniusError(f"eigenvector has non-positive entry {x.min():.3e}")
            continue
        if all(r <= tol * max(1.0, p) for r, p in zip(res, rho)):
            exact = _exact_eigendata(g, rho, x, tol) if detect_exact else None
            pf = PFData(tuple(rho), x, tuple(res), iterations, method)
            if exact is not None:
                pf = dataclasses.replace(pf, exact_rho=exact[0], exact_x=exact[1])
            return pf
        failure = PerronFrobeniusError(
            f"{method} iteration gave no common eigenvector (residuals {', '.join(f'{r:.2e}' for r in res)})"
        )
    raise failure


def verify_common_eigenvector(g: KGraph, pf: PFData, tol: float = 1e-12) -> Report:
    """Residual ``max_v |A_i x - rho_i x|`` per vertex matrix, using ``pf`` as given."""
    report = Report("common eigenvector")
    x = np.asarray(pf.x, dtype=float)
    for i, a in enumerate(g.matrices):
        if pf.exact:
            ax = [sum(int(a[v, w]) * pf.exact_x[w] for w in range(g.n_vertices)) for v in range(g.n_vertices)]
            res = float(max(abs(ax[v] - pf.exact_rho[i] * pf.exact_x[v]) for v in range(g.n_vertices)))
        else:
            res = float(np.max(np.abs(a @ x - pf.rho[i] * x)))
        report.add(Check(f"A{i + 1} x = rho_{i + 1} x", g.n_vertices, res, res <= tol))
    total = float(np.sum(x))
    report.add(Check("unimodular", 1, abs(total - 1.0), abs(total - 1.0) <= 1e-12))
    report.add(Check("positive", g.n_vertices, max(0.0, -float(x.min())), bool(x.min() > 0)))
    return report
