"""Command-line front end.

Every command prints a JSON run report to stdout and a short summary to
stderr.  Exit status: 0 when all checks pass, 1 when a check fails, 2 for
unreadable input or bad flags.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from contextlib import contextmanager
from pathlib import Path

from . import ckrep, fractal, kms, measure, spectral, wavelets
from .graph import (
    KGraph,
    KGraphError,
    NoPeriodicityUpToDepth,
    SchemaError,
    aperiodicity_probe,
    is_strongly_connected,
    load_kgraph,
)
from .reports import Check, Report

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


class Run:
    def __init__(self, command: str, path: str):
        self.command = command
        self.path = path
        self.digest = None
        self.checks: list[Check] = []
        self.data: dict = {}
        self.timing: dict[str, float] = {}
        self.mode = None

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timing[name] = round(time.perf_counter() - start, 6)

    def add(self, report: Report | Check) -> None:
        if isinstance(report, Check):
            self.checks.append(report)
        else:
            self.checks.extend(report.checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    def document(self) -> dict:
        out = {
            "command": self.command,
            "input": {"path": self.path, "sha256": self.digest},
            "mode": self.mode,
            "pass": self.passed,
            "results": [c.to_dict() for c in self.checks],
        }
        if self.data:
            out["data"] = self.data
        out["timing"] = self.timing
        return out


def _read(run: Run) -> dict:
    try:
        raw = Path(run.path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {run.path}: {exc.strerror}") from None
    run.digest = hashlib.sha256(raw).hexdigest()
    try:
        return json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"{run.path} is not a JSON document: {exc}") from None


def _load(run: Run) -> KGraph:
    doc = _read(run)
    with run.phase("load"):
        try:
            return load_kgraph(doc)
        except KGraphError as exc:
            raise InputError(str(exc)) from None


def _spectral(run: Run, g: KGraph, args, **kw) -> spectral.PFData:
    with run.phase("perron_frobenius"):
        try:
            pf = spectral.perron_frobenius(g, **kw)
        except spectral.ConvergenceError:
            raise
        except spectral.PerronFrobeniusError as exc:
            raise InputError(str(exc)) from None
    if getattr(args, "float", False):
        pf = pf.float_mode()
    run.mode = "exact" if pf.exact else "float"
    return pf


def _parse_degree(text: str, k: int, name: str) -> tuple[int, ...]:
    try:
        parts = [int(p) for p in text.split(",")]
    except ValueError:
        raise InputError(f"{name} must be comma-separated integers, got {text!r}") from None
    if len(parts) == 1:
        parts = parts * k
    if len(parts) != k or min(parts) < 0:
        raise InputError(f"{name} needs {k} nonnegative entries, got {text!r}")
    return tuple(parts)


# -- commands ---------------------------------------------------------------


def cmd_validate(args, run: Run) -> None:
    doc = _read(run)
    with run.phase("load"):
        try:
            g = load_kgraph(doc)
        except SchemaError as exc:
            raise InputError(str(exc)) from None
        except KGraphError as exc:
            run.add(Check("k-graph invariants", 1, 1.0, False, witness=str(exc)))
            return
    run.add(Check("k-graph invariants", len(g.squares), 0.0, True, details={"squares": len(g.squares)}))
    run.data["graph"] = {"k": g.k, "vertices": len(g.vertices), "edges": len(g.edges), "squares": len(g.squares)}
    connected = is_strongly_connected(g)
    run.add(Check("strongly connected", 1, 0.0 if connected else 1.0, connected))
    if connected:
        with run.phase("aperiodicity"):
            probe = aperiodicity_probe(g, args.probe_depth)
        if isinstance(probe, NoPeriodicityUpToDepth):
            verdict = {"result": "no periodicity found", "depth_bound": probe.depth_bound}
        else:
            verdict = {
                "result": "periodic",
                "vertex": g.vertices[probe.vertex],
                "m": list(probe.m),
                "n": list(probe.n),
            }
        run.add(Check("aperiodicity probe", 1, 0.0, True, informational=True, details=verdict))


def cmd_eigen(args, run: Run) -> None:
    g = _load(run)
    pf = _spectral(run, g, args, tol=args.tol, max_iter=args.max_iter)
    run.data["pf"] = pf.to_dict(g)
    run.add(spectral.verify_common_eigenvector(g, pf, args.tol))


def cmd_measure(args, run: Run) -> None:
    g = _load(run)
    pf = _spectral(run, g, args)
    if args.path is not None:
        try:
            paths = [g.parse_path(p) for p in args.path]
        except (KeyError, ValueError) as exc:
            raise InputError(str(exc).strip("'\"")) from None
    else:
        paths = g.paths(_parse_degree(args.degree, g.k, "--degree"))
    values = []
    for lam in paths:
        m = measure.cylinder_measure(g, pf, lam)
        entry = {"path": g.path_id(lam), "degree": list(lam.degree), "measure": float(m)}
        if pf.exact:
            entry["exact"] = str(m)
        values.append(entry)
    run.data["values"] = values
    if args.path is None:
        total = sum(measure.cylinder_measure(g, pf, lam) for lam in paths)
        resid = abs(float(total) - 1.0)
        run.add(Check("total mass of degree", 1, resid, total == 1 if pf.exact else resid <= 1e-12))


def cmd_ck_check(args, run: Run) -> None:
    g = _load(run)
    pf = _spectral(run, g, args)
    with run.phase("verify_ck"):
        run.add(ckrep.verify_ck(g, pf, args.depth))
    with run.phase("measure"):
        run.add(measure.check_additivity(g, pf, args.depth))
        run.add(measure.standard_sbfs(g, pf).check_conditions(args.depth))


def _dynamics(choice: str, g: KGraph, pf) -> tuple[kms.Dynamics, float | None]:
    if choice == "preferred":
        return kms.preferred_dynamics(pf), None
    if choice == "hausdorff":
        s = fractal.hausdorff_dimension(g, pf)
        if s == 0:
            return kms.Dynamics((0.0,) * g.k), s
        return kms.Dynamics(tuple(math.log(r) / s for r in pf.rho)), s
    if choice.startswith("custom:"):
        try:
            r = tuple(float(x) for x in choice[len("custom:"):].split(","))
        except ValueError:
            raise InputError(f"bad dynamics {choice!r}") from None
        if len(r) != g.k:
            raise InputError(f"custom dynamics needs {g.k} exponents")
        return kms.Dynamics(r), None
    raise InputError(f"unknown dynamics {choice!r}; use preferred, hausdorff or custom:r1,...,rk")


def cmd_kms_check(args, run: Run) -> None:
    g = _load(run)
    pf = _spectral(run, g, args)
    bound = _parse_degree(args.bound, g.k, "--bound")
    try:
        dyn, s = _dynamics(args.dynamics, g, pf)
    except fractal.HypothesisError as exc:
        raise InputError(str(exc)) from None
    beta = args.beta if args.beta is not None else (s if s is not None else 1.0)
    run.data["dynamics"] = {"r": list(dyn.r), "beta": beta}
    if s is not None:
        run.data["dynamics"]["dimension"] = s
    with run.phase("kms"):
        run.add(kms.kms_check(g, pf, dyn, beta, bound))
    with run.phase("state"):
        run.add(kms.state_checks(g, pf, 1))
        if g.k == 1:
            run.add(kms.oa_identity_check(g, pf))


def cmd_dimension(args, run: Run) -> None:
    g = _load(run)
    pf = _spectral(run, g, args)
    try:
        s = fractal.hausdorff_dimension(g, pf)
        est = fractal.box_counting_estimate(g, args.box_depth)
    except fractal.HypothesisError as exc:
        raise InputError(str(exc)) from None
    gap = abs(est - s)
    run.data.update({"formula": s, "estimate": est, "gap": gap, "box_depth": args.box_depth})
    run.add(Check("box counting agrees with formula", 1, gap, gap <= args.gap_tol))


def cmd_embed(args, run: Run) -> None:
    g = _load(run)
    pf = _spectral(run, g, args)
    try:
        fractal.require_zero_one(g)
    except fractal.HypothesisError as exc:
        raise InputError(str(exc)) from None
    with run.phase("export"):
        try:
            count = fractal.export_pointcloud(g, pf, args.depth, args.out)
        except OSError as exc:
            raise InputError(f"cannot write {args.out}: {exc.strerror}") from None
    lams = g.paths(g.square_degree(args.depth))
    cells = sorted((fractal.psi_cell(g, lam) for lam in lams), key=lambda c: c.numerator)
    overlaps = sum(1 for a, b in zip(cells, cells[1:]) if not a.disjoint(b))
    run.add(Check("cells disjoint", len(cells), float(overlaps), overlaps == 0))
    total = sum(measure.cylinder_measure(g, pf, lam) for lam in lams)
    resid = abs(float(total) - 1.0)
    run.add(Check("total measure", 1, resid, resid <= 1e-12))
    run.data.update({"records": count, "out": args.out, "depth": args.depth})


def cmd_wavelets(args, run: Run) -> None:
    g = _load(run)
    pf = _spectral(run, g, args)
    with run.phase("build"):
        try:
            basis = wavelets.build_basis(g, pf, args.levels)
        except wavelets.WaveletError as exc:
            run.add(Check("wavelet construction", 1, 1.0, False, witness=str(exc)))
            return
    with run.phase("verify"):
        run.add(wavelets.verify_decomposition(g, pf, args.levels, basis))
    if args.out:
        try:
            Path(args.out).write_text(json.dumps(wavelets.basis_document(g, basis), indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot write {args.out}: {exc.strerror}") from None
        run.data["out"] = args.out
    run.data["family_sizes"] = [len(basis.v0)] + [len(level) for level in basis.levels]


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be a nonnegative integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgraph", description="Checks and constructions for finite k-graphs.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="k-graph JSON document")
    common.add_argument("--float", action="store_true", help="disable exact rational arithmetic")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="load and validate a document")
    p.add_argument("--probe-depth", type=_positive_int, default=3)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("eigen", parents=[common], help="Perron-Frobenius data")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=_positive_int, default=100_000)
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("measure", parents=[common], help="cylinder measures")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--path", action="append", help="path id (repeatable)")
    group.add_argument("--degree", help="all paths of this degree, e.g. 1,1")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("ck-check", parents=[common], help="Cuntz-Krieger relations and measure axioms")
    p.add_argument("--depth", type=_positive_int, default=2)
    p.set_defaults(func=cmd_ck_check)

    p = sub.add_parser("kms-check", parents=[common], help="KMS condition on spanning elements")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--dynamics", default="preferred", help="preferred, hausdorff or custom:r1,...,rk")
    p.add_argument("--bound", default="2", help="degree bound, e.g. 2,2 (a single number applies to every colour)")
    p.set_defaults(func=cmd_kms_check)

    p = sub.add_parser("dimension", parents=[common], help="Hausdorff dimension and box counting")
    p.add_argument("--box-depth", type=_positive_int, default=8)
    p.add_argument("--gap-tol", type=float, default=0.05)
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("embed", parents=[common], help="export the embedded cells as CSV")
    p.add_argument("--depth", type=_nonnegative_int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("wavelets", parents=[common], help="wavelet basis and decomposition check")
    p.add_argument("--levels", type=_positive_int, default=2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_wavelets)
    return parser


def _summary(run: Run, stream) -> None:
    for c in run.checks:
        tag = "INFO" if c.informational else ("PASS" if c.passed else "FAIL")
        line = f"{tag} {c.name}: {c.instances} instances, max residual {c.max_residual:.3g}"
        if c.witness and not c.passed:
            line += f" [{c.witness}]"
        print(line, file=stream)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.command == "dimension" and args.box_depth < 2:
        parser.print_usage(sys.stderr)
        print("kgraph: --box-depth must be at least 2", file=sys.stderr)
        return EXIT_INPUT
    run = Run(args.command, args.file)
    try:
        args.func(args, run)
    except InputError as exc:
        print(json.dumps({"command": args.command, "input": {"path": args.file, "sha256": run.digest}, "error": str(exc)}, indent=2))
        print(f"kgraph {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except spectral.ConvergenceError as exc:
        run.add(Check("Perron-Frobenius iteration", 1, math.inf, False, witness=str(exc)))
    print(json.dumps(run.document(), indent=2))
    _summary(run, sys.stderr)
    return EXIT_OK if run.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
