"""Report sections, JSON serialization and text tables."""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from . import operators as ops
from .classicality import ClassicalityReport
from .decoherence import DecoherenceMatrix, DecoherenceReport
from .histories import HistorySet, IdentityCheck
from .records import ImplicationReport, RecordSet, StrongReport

MATRIX_DIM_LIMIT = 64  # record projectors above this dimension are not written out


def encode_complex(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[encode_complex(z) for z in row] for row in m]


def encode_vector(v) -> list:
    return [encode_complex(z) for z in np.asarray(v, dtype=complex).reshape(-1)]


def decode_complex(pair) -> complex:
    return complex(float(pair[0]), float(pair[1]))


def decode_matrix(rows) -> np.ndarray:
    return np.array([[decode_complex(p) for p in row] for row in rows], dtype=complex)


def decode_vector(items) -> np.ndarray:
    return np.array([decode_complex(p) for p in items], dtype=complex)


def _finite(x):
    x = float(x)
    return x if np.isfinite(x) else None


def validate_section(hs: HistorySet, check: IdentityCheck, tol: float) -> dict:
    return {
        "ok": bool(check.ok),
        "dimension": hs.dim,
        "t0": float(hs.t0),
        "times": [float(t) for t in hs.times],
        "family_sizes": [len(f) for f in hs.families],
        "n_histories": len(hs.histories),
        "pure": bool(hs.is_pure),
        "sum_identity_deviation": float(check.deviation),
        "tolerance": tol,
    }


def decohere_section(hs: HistorySet, dm: DecoherenceMatrix, rep: DecoherenceReport) -> dict:
    labels = [hs.label_string(i) for i in dm.indices]
    probs = None
    if rep.weak:
        probs = {lab: float(np.real(dm.entries[i, i])) for i, lab in enumerate(labels)}
    return {
        "histories": labels,
        "entries": encode_matrix(dm.entries),
        "level": rep.level,
        "max_weak_violation": rep.max_weak_violation,
        "max_medium_violation": rep.max_medium_violation,
        "max_normalized_overlap": rep.max_normalized_overlap,
        "normalized_overlaps": [[float(x) for x in row] for row in rep.normalized_overlaps],
        "probabilities": probs,
        "axiom_residuals": {k: float(v) for k, v in dm.axiom_residuals().items()},
        "tolerance": rep.tolerance,
    }


def records_section(hs: HistorySet, records: RecordSet | None, strong: StrongReport | None,
                    chain: ImplicationReport, full: bool | None, tol: float) -> dict:
    implication = {"strong": chain.strong, "medium": chain.medium, "weak": chain.weak,
                   "consistent": chain.consistent}
    if chain.note:
        implication["note"] = chain.note
    if records is None:
        status = "undetermined" if chain.medium else "absent"
        return {"status": status, "complement_policy": None, "projectors": [], "strong": chain.strong,
                "strong_residual": None, "exhaustiveness": None, "exclusivity": None,
                "implication": implication, "full": full, "tolerance": tol}
    write = hs.dim <= MATRIX_DIM_LIMIT
    projectors = [{"history": hs.label_string(idx), "rank": ops.rank(p),
                   "matrix": encode_matrix(p) if write else []}
                  for idx, p in zip(records.indices, records.projectors)]
    return {
        "status": "verified" if strong.strong else "undetermined",
        "complement_policy": records.complement_policy,
        "projectors": projectors,
        "strong": bool(strong.strong),
        "strong_residual": float(strong.residual),
        "exhaustiveness": float(records.exhaustiveness()),
        "exclusivity": float(records.exclusivity()),
        "implication": implication,
        "full": full,
        "tolerance": tol,
    }


def _provenance_string(hs: HistorySet, prov) -> str:
    if prov[0] == "norm":
        return "norm"
    a, b, part = prov
    return f"({hs.label_string(a)}|{hs.label_string(b)}):{part}"


def classicality_section(hs: HistorySet, rep: ClassicalityReport, provenance, tol: float,
                         picture: str) -> dict:
    return {
        "unit": rep.unit,
        "s_hat": rep.s_hat,
        "q_hat": {hs.label_string(i): float(q) for i, q in rep.q_hat.items()},
        "s_maxent": rep.s_maxent,
        "s_rho": rep.s_rho,
        "residual": rep.solver.final_residual,
        "iterations": rep.solver.iterations,
        "converged": bool(rep.solver.converged),
        "method": rep.solver.method,
        "picture": picture,
        "constraints_before": rep.constraints_before,
        "constraints_after": rep.constraints_after,
        "informative_pairs": [_provenance_string(hs, p) for p in provenance],
        "tolerance": tol,
    }


# serialization ---------------------------------------------------------------

def dumps(report: dict) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def without_timestamp(report: dict) -> dict:
    """Copy of ``report`` with the run-dependent ``meta.timestamp`` removed."""
    out = json.loads(dumps(report))
    out.get("meta", {}).pop("timestamp", None)
    return out


def load_schema(name: str) -> dict:
    text = resources.files("qhistories").joinpath("schema", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate_report(report: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if the report violates its schema."""
    import jsonschema

    jsonschema.validate(report, load_schema("report"))


# text tables -----------------------------------------------------------------

def _g(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def table(headers, rows) -> str:
    cells = [[_g(c) for c in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
              for i, h in enumerate(headers)]
    line = lambda row: "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
    out = [line(headers), line(["-" * w for w in widths])]
    out += [line(r) for r in cells]
    return "\n".join(out)


def emit_text_tables(report: dict) -> str:
    """Aligned, deterministic tables (six significant digits) for a report."""
    parts = []
    meta = report["meta"]
    parts.append(f"status: {meta['status']}" + (f" ({meta['error']})" if "error" in meta else ""))
    if "validate" in report:
        v = report["validate"]
        parts.append("validate\n" + table(
            ["dimension", "families", "histories", "pure", "sum identity dev"],
            [[v["dimension"], len(v["times"]), v["n_histories"], v["pure"], v["sum_identity_deviation"]]]))
    if "decohere" in report:
        d = report["decohere"]
        labels = d["histories"]
        mags = [[lab] + [abs(decode_complex(z)) for z in row] for lab, row in zip(labels, d["entries"])]
        parts.append("|D(a', a)|\n" + table(["history"] + labels, mags))
        probs = d["probabilities"]
        rows = [[lab, probs[lab] if probs is not None else None] for lab in labels]
        parts.append("probabilities\n" + table(["history", "p"], rows))
        parts.append("decoherence\n" + table(
            ["level", "max |Re D|", "max |D|", "max overlap", "tol"],
            [[d["level"], d["max_weak_violation"], d["max_medium_violation"],
              d["max_normalized_overlap"], d["tolerance"]]]))
    if "records" in report:
        r = report["records"]
        imp = r["implication"]
        parts.append("records\n" + table(
            ["status", "strong residual", "strong", "medium", "weak", "full"],
            [[r["status"], r["strong_residual"], imp["strong"], imp["medium"], imp["weak"], r["full"]]]))
    if "classicality" in report:
        c = report["classicality"]
        parts.append("classicality (nats)\n" + table(
            ["S_hat", "S_maxent", "S_rho", "residual", "iterations", "converged", "constraints"],
            [[c["s_hat"], c["s_maxent"], c["s_rho"], c["residual"], c["iterations"], c["converged"],
              f"{c['constraints_after']}/{c['constraints_before']}"]]))
    return "\n\n".join(parts) + "\n"
