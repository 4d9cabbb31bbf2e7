"""Command-line front end.

Exit codes: 0 success, 1 I/O or parse error, 2 validation failure,
3 max-entropy solver did not converge.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import operators as ops
from . import report as rep
from .classicality import MAX_ITER, SOLVER_TOL, build_constraints, classicality_report
from .decoherence import DEFAULT_TOL, classify, decoherence_matrix
from .errors import HistoriesError, NotStronglyDecoherent, ValidationError
from .histories import HistorySet, family_from_basis, make_family, sum_identity_check
from .models import ModelSpec, build_model
from .records import check_strong, find_records, implication_chain_report, is_full

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2, 3
COMMANDS = ("validate", "decohere", "records", "classicality")


class ConfigError(Exception):
    """Unreadable or schema-invalid configuration (exit code 1)."""


# config parsing -----------------------------------------------------------------

def _location(path) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def load_config(path) -> dict:
    import jsonschema

    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    check_config(doc, jsonschema, str(path))
    return doc


def check_config(doc: dict, jsonschema=None, where: str = "config") -> None:
    if jsonschema is None:
        import jsonschema
    validator = jsonschema.Draft202012Validator(rep.load_schema("config"))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"{where}: at {_location(e.absolute_path)}: {e.message}")
    if "model" in doc:
        clash = sorted(k for k in ("dimension", "qubit_factors", "hamiltonian", "initial_state", "families", "t0")
                       if k in doc)
        if clash:
            raise ConfigError(f"{where}: keys {clash} cannot be combined with 'model'")
    elif "families" not in doc:
        raise ConfigError(f"{where}: at $: either 'model' or 'families' is required")
    if "dimension" in doc and "qubit_factors" in doc and doc["dimension"] != 2 ** doc["qubit_factors"]:
        raise ConfigError(f"{where}: 'dimension' disagrees with 'qubit_factors'")


def _state_kwargs(value, dim: int) -> dict:
    if value == "ind":
        return {"rho": ops.maximally_mixed(dim)}
    if isinstance(value[0][0], list):
        return {"rho": rep.decode_matrix(value)}
    return {"psi": rep.decode_vector(value)}


def _family(spec: dict, dim: int, n_qubits: int | None, k: int):
    labels = spec.get("labels")
    if "projectors" in spec:
        return make_family(spec["time"], [rep.decode_matrix(p) for p in spec["projectors"]], labels)
    basis = spec["basis"]
    if basis == "computational":
        if "qubit" in spec:
            raise ValidationError(f"family {k}: 'qubit' is not used with the computational basis")
        return family_from_basis(spec["time"], np.eye(dim, dtype=complex), spec.get("grouping"), labels)
    qubit = spec.get("qubit", 0)
    if n_qubits is None:
        if dim != 2:
            raise ValidationError(f"family {k}: basis {basis!r} needs 'qubit_factors' (or dimension 2)")
        n_qubits = 1
    if qubit >= n_qubits:
        raise ValidationError(f"family {k}: qubit {qubit} out of range for {n_qubits} factors")
    vecs = ops.qubit_basis(basis)
    singles = [ops.embed(ops.projector_onto(vecs[:, j]), qubit, [2] * n_qubits) for j in range(2)]
    grouping = spec.get("grouping") or [[0], [1]]
    for group in grouping:
        if any(j > 1 for j in group):
            raise ValidationError(f"family {k}: grouping index out of range for a qubit basis")
    projectors = [sum(singles[j] for j in group) for group in grouping]
    return make_family(spec["time"], projectors, labels)


def history_set_from_config(doc: dict, seed: int | None = None) -> HistorySet:
    """Build the history set described by a (schema-valid) config document."""
    if "model" in doc:
        params = dict(doc["model"].get("params", {}))
        if doc["model"]["name"] == "random" and "seed" not in params and seed is not None:
            params["seed"] = seed
        return build_model(ModelSpec(doc["model"]["name"], params)).history_set
    n_qubits = doc.get("qubit_factors")
    dim = doc.get("dimension", 2 ** n_qubits if n_qubits else None)
    h = doc.get("hamiltonian", "zero")
    if dim is None:
        if isinstance(h, list):
            dim = len(h)
        else:
            raise ValidationError("cannot infer the dimension; give 'dimension' or 'qubit_factors'")
    h = np.zeros((dim, dim), dtype=complex) if h == "zero" else rep.decode_matrix(h)
    if h.shape != (dim, dim):
        raise ValidationError(f"hamiltonian has shape {h.shape}, expected ({dim}, {dim})")
    fams = [_family(f, dim, n_qubits, k) for k, f in enumerate(doc["families"])]
    return HistorySet(h, fams, t0=doc.get("t0", 0.0), **_state_kwargs(doc.get("initial_state", "ind"), dim))


def parse_params(text: str | None) -> dict:
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--param: expected key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


# pipeline ----------------------------------------------------------------------

def run_pipeline(doc: dict, *, seed: int | None = None, tol: float | None = None,
                 solver_tol: float | None = None, source: dict | None = None) -> tuple:
    """Run the requested commands; returns ``(report, exit_code)``."""
    start = time.perf_counter()
    tols = doc.get("tolerances", {})
    dec_tol = tol if tol is not None else tols.get("decoherence", DEFAULT_TOL)
    sol_tol = solver_tol if solver_tol is not None else tols.get("solver", SOLVER_TOL)
    seed = seed if seed is not None else doc.get("seed")
    requested = set(doc.get("commands", COMMANDS))
    if "records" in requested:
        requested.add("decohere")
    commands = [c for c in COMMANDS if c in requested]
    solver = doc.get("solver", {})

    report = {"meta": {
        "tool": "qhistories", "version": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
        "commands": commands, "seed": seed, "source": source or {},
        "tolerances": {"decoherence": dec_tol, "solver": sol_tol, "hermiticity": ops.HERM_TOL},
        "status": "ok",
    }}
    code = EXIT_OK
    try:
        hs = history_set_from_config(doc, seed)
        if "validate" in commands:
            report["validate"] = rep.validate_section(hs, sum_identity_check(hs), ops.HERM_TOL)
        if "decohere" in commands:
            dm = decoherence_matrix(hs, tol=dec_tol)
            report["decohere"] = rep.decohere_section(hs, dm, classify(dm, dec_tol))
        if "records" in commands:
            records = find_records(hs, dec_tol)
            strong = check_strong(hs, records) if records is not None else None
            chain = implication_chain_report(hs, records, dec_tol)
            try:
                full = is_full(hs, dec_tol).full
            except NotStronglyDecoherent:
                full = None
            report["records"] = rep.records_section(hs, records, strong, chain, full, dec_tol)
        if "classicality" in commands:
            picture = solver.get("picture", "heisenberg")
            cr = classicality_report(hs, tol=sol_tol, max_iter=solver.get("max_iter", MAX_ITER),
                                     method=solver.get("method", "newton"), picture=picture)
            provenance = build_constraints(hs, picture).provenance
            report["classicality"] = rep.classicality_section(hs, cr, provenance, sol_tol, picture)
            if not cr.solver.converged:
                report["meta"]["status"] = "not-converged"
                code = EXIT_NOT_CONVERGED
    except (ValidationError, HistoriesError) as exc:
        report["meta"]["status"] = "validation-failed"
        report["meta"]["error"] = f"{type(exc).__name__}: {exc}"
        code = EXIT_INVALID
    report["meta"]["timestamp"] = {
        "utc": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "wall_time_s": round(time.perf_counter() - start, 6),
    }
    return report, code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qhistories", description=(
        "Evaluate decoherence, records and classicality measures for a set of histories."))
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", metavar="PATH", help="JSON config document")
    src.add_argument("--model", metavar="NAME", help="named model (measurement, environment, random, ...)")
    p.add_argument("--param", metavar="K=V,...", help="model parameters")
    p.add_argument("--out", metavar="PATH", help="write the JSON report here")
    p.add_argument("--format", choices=("json", "text"), default="text", help="stdout format")
    p.add_argument("--tol", type=float, help="decoherence tolerance (default 1e-8)")
    p.add_argument("--solver-tol", type=float, help="max-entropy residual tolerance (default 1e-8)")
    p.add_argument("--seed", type=int, help="seed for random models")
    p.add_argument("--commands", help="comma-separated subset of validate,decohere,records,classicality")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            if args.param:
                raise ConfigError("--param is only used with --model")
            doc = load_config(args.config)
            source = {"config": Path(args.config).name}
        else:
            params = parse_params(args.param)
            doc = {"model": {"name": args.model, "params": params}}
            source = {"model": args.model, "params": params}
        if args.commands:
            doc["commands"] = [c.strip() for c in args.commands.split(",") if c.strip()]
            check_config(doc, where="--commands")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    report, code = run_pipeline(doc, seed=args.seed, tol=args.tol, solver_tol=args.solver_tol, source=source)
    if code == EXIT_INVALID:
        print(f"error: {report['meta']['error']}", file=sys.stderr)
    text = rep.dumps(report)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_IO
    sys.stdout.write(text if args.format == "json" else rep.emit_text_tables(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
