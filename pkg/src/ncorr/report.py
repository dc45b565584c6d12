"""Run an analysis config and serialise the results."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Any

import jsonschema
import numpy as np

from . import __version__
from .atom import HAMILTONIAN_CONVENTION, AtomProvider, g2
from .config import AnalysisConfig, AtomProviderConfig, Task
from .moments import MultiIndex, StateProvider
from .states import SQUEEZING_CONVENTION
from .witness import (
    NONCLASSICAL,
    CLASSICAL_CONSISTENT,
    CriterionResult,
    OperatorBasis,
    PhaseShifted,
    Tolerances,
    build_witness_matrix,
    check_antibunching,
    check_field_intensity,
    check_higher_order_intensity,
    check_second_order,
    check_third_order_minor,
    enumerate_basis,
    field_variance,
    optimal_phase,
    principal_minors,
    witness_coefficients,
)

CONVENTIONS = {
    "squeezing": SQUEEZING_CONVENTION,
    "atom": HAMILTONIAN_CONVENTION,
    "field_normalization": "E+(point) is the mode annihilator (states) or sigma_minus at the retarded time (atom), unit prefactor",
    "time_unit": "1/gamma",
    "ordering": "creators with times increasing left to right, annihilators with times increasing right to left",
}

FORMATS = ("json-report", "csv-series")


class RunError(RuntimeError):
    """The provider could not be constructed; ``report`` holds a diagnostic report."""

    def __init__(self, message: str, report: "AnalysisReport"):
        super().__init__(message)
        self.report = report


@dataclass
class AnalysisReport:
    config: dict
    results: list[dict]
    status: str = "ok"
    error: str | None = None
    version: str = __version__
    conventions: dict = field(default_factory=lambda: dict(CONVENTIONS))
    timing: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "tool": {"name": "ncorr", "version": self.version},
            "status": self.status,
            "error": self.error,
            "conventions": self.conventions,
            "config": self.config,
            "results": self.results,
            "timing": self.timing,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisReport":
        jsonschema.validate(d, REPORT_SCHEMA)
        return cls(
            config=d["config"], results=d["results"], status=d["status"], error=d["error"],
            version=d["tool"]["version"], conventions=d["conventions"], timing=d["timing"],
        )


def build_provider(config: AnalysisConfig):
    prov = config.provider
    if isinstance(prov, AtomProviderConfig):
        return AtomProvider(prov.params, prov.points)
    return StateProvider(prov.spec.build(), prov.points)


def run(config: AnalysisConfig) -> AnalysisReport:
    """Run every task; a failing task is recorded without stopping the others."""
    started = time.perf_counter()
    echo = config.to_dict()
    try:
        provider = build_provider(config)
    except Exception as exc:  # noqa: BLE001 - reported, then re-raised as RunError
        report = AnalysisReport(echo, [], status="failed", error=f"provider construction failed: {exc}")
        raise RunError(report.error, report) from exc
    results, task_times = [], []
    for position, task in enumerate(config.tasks):
        t0 = time.perf_counter()
        entry = {"task": position, "name": task.name, "type": task.type}
        try:
            entry.update(status="ok", **_run_task(provider, task, config.tolerances))
        except Exception as exc:  # noqa: BLE001 - per-task isolation
            entry.update(status="error", error=f"{type(exc).__name__}: {exc}")
        results.append(entry)
        task_times.append(time.perf_counter() - t0)
    timing = {"total_s": time.perf_counter() - started, "tasks_s": task_times}
    return AnalysisReport(echo, results, timing=timing)


def _cplx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def criterion_dict(res: CriterionResult, tol: Tolerances) -> dict:
    return {
        "criterion": res.criterion,
        "lhs": res.lhs,
        "rhs": res.rhs,
        "relation": res.relation,
        "threshold": res.threshold,
        "violated": res.violated,
        "verdict": res.verdict,
        "inputs": res.inputs,
        "flags": list(res.flags),
        "radicand_factors": list(res.radicand_factors),
        "eps_abs": tol.eps_abs,
        "eps_rel": tol.eps_rel,
    }


def _phased(provider, point: int, phase):
    if phase == "optimal":
        theta = optimal_phase(provider, point)
    else:
        theta = float(phase or 0.0)
    return (PhaseShifted(provider, {point: theta}) if theta else provider), theta


def _run_task(provider, task: Task, tol: Tolerances) -> dict:
    p = task.params
    if task.type == "witness":
        return _witness(provider, p, tol)
    if task.type == "second_order":
        res = check_second_order(provider, MultiIndex(tuple(map(tuple, p["a"]))),
                                 MultiIndex(tuple(map(tuple, p["b"]))), tol)
    elif task.type == "third_order_minor":
        res = check_third_order_minor(provider, p["m"], p["n"], p["p"], p["points"], tol)
    elif task.type == "antibunching":
        res = check_antibunching(provider, *p["points"], tol=tol)
    elif task.type == "higher_order_intensity":
        res = check_higher_order_intensity(provider, p["N"], p["M"], p["n"], p["m"], *p["points"], tol=tol)
    elif task.type == "field_intensity":
        prov, theta = _phased(provider, p["points"][0], p.get("phase", 0.0))
        res = check_field_intensity(prov, p["variant"], p["points"], p.get("exponents"), p.get("l"), tol)
        if p["variant"] == "full_field":
            res.inputs["phase"] = theta
    elif task.type == "field_variance":
        prov, theta = _phased(provider, p["point"], p.get("phase", 0.0))
        value = field_variance(prov, p["point"])
        threshold = tol.inequality_threshold(value)
        res = CriterionResult("field_variance", value, 0.0, "<", threshold, value < -threshold,
                              {"point": p["point"], "phase": theta})
    elif task.type == "g2_sweep":
        if not isinstance(provider, AtomProvider):
            raise TypeError("g2_sweep requires the atom provider")
        taus = np.linspace(p["tau_start"], p["tau_stop"], p["num"])
        values = g2(provider.params, taus)
        return {"series": {
            "quantity": "g2",
            "tau": [float(t) for t in taus],
            "value_re": [float(v.real) for v in values],
            "value_im": [float(v.imag) for v in values],
        }}
    else:
        raise ValueError(f"unknown task type {task.type!r}")
    return criterion_dict(res, tol)


def _witness(provider, p: dict, tol: Tolerances) -> dict:
    if "basis" in p:
        basis = OperatorBasis(tuple(MultiIndex(tuple(map(tuple, e))) for e in p["basis"]))
        degree = max(e.degree for e in basis.entries)
    else:
        degree = p.get("max_degree", 1)
        basis = enumerate_basis(provider.k, degree)
    w = build_witness_matrix(provider, basis)
    max_order = min(p.get("max_order", 0), len(basis))
    if max_order:
        mr = principal_minors(w, max_order, tol.eps_rel)
        minors, min_eig, norm = mr.minors, mr.min_eigenvalue, mr.norm
        negative = bool(mr.negative_minors)
    else:
        evals = np.linalg.eigvalsh(w.entries)
        minors, min_eig, norm = (), float(evals[0]), float(np.max(np.abs(evals)))
        negative = False
    eig_threshold = tol.eps_rel * norm
    eig_negative = min_eig < -eig_threshold
    verdict = NONCLASSICAL if negative or eig_negative else CLASSICAL_CONSISTENT
    normalized = [mn.normalized for mn in minors] + ([min_eig / norm] if norm > 0 else [])
    return {
        "basis": [e.to_list() for e in basis.entries],
        "basis_degree": degree,
        "matrix": [[_cplx(z) for z in row] for row in w.entries],
        "hermiticity_deviation": w.hermiticity_deviation,
        "min_eigenvalue": min_eig,
        "norm": norm,
        "eigenvalue_threshold": eig_threshold,
        "eigenvalue_negative": bool(eig_negative),
        "max_order": max_order,
        "minors": [
            {"subset": list(mn.subset), "order": mn.order, "determinant": mn.determinant,
             "scale": mn.scale, "threshold": tol.eps_rel * mn.scale}
            for mn in minors
        ],
        "negative_minor_count": sum(mn.determinant < -tol.eps_rel * mn.scale for mn in minors),
        "margin": min(normalized, default=0.0),
        "eps_rel": tol.eps_rel,
        "verdict": verdict,
        "summary": NONCLASSICAL if verdict == NONCLASSICAL else f"no violation found up to degree {degree}",
        "witness_coefficients": [_cplx(z) for z in witness_coefficients(w)],
    }


# ---------------------------------------------------------------- serialisation


def _dump(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            out.append("null")
        else:
            text = format(x, ".17g")
            if not any(c in text for c in ".e"):
                text += ".0"
            out.append(text)
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(",")
            _dump(str(key), out)
            out.append(":")
            _dump(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _dump(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def canonical_json(obj: Any) -> str:
    """Sorted keys, no whitespace, floats with 17 significant digits."""
    out: list[str] = []
    _dump(obj, out)
    return "".join(out)


def sweep_rows(report: AnalysisReport, task: str | int | None = None) -> list[tuple[float, float, float]]:
    sweeps = [r for r in report.results if r.get("status") == "ok" and "series" in r]
    if task is not None:
        sweeps = [r for r in sweeps if r["name"] == task or r["task"] == task]
    if not sweeps:
        raise ValueError("report contains no correlation sweep")
    s = sweeps[0]["series"]
    return list(zip(s["tau"], s["value_re"], s["value_im"]))


def emit(report: AnalysisReport, fmt: str = "json-report", task: str | int | None = None) -> bytes:
    if fmt == "json-report":
        return (canonical_json(report.to_dict()) + "\n").encode("utf-8")
    if fmt == "csv-series":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["tau", "value_re", "value_im"])
        for row in sweep_rows(report, task):
            writer.writerow([format(v, ".17g") for v in row])
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unsupported format {fmt!r}; expected one of {FORMATS}")


def without_timing(report_json: bytes | str) -> str:
    """The json-report with its timing block blanked, for determinism checks."""
    d = json.loads(report_json)
    d["timing"] = {}
    return canonical_json(d)


_NUM = {"type": ["number", "null"]}
REPORT_SCHEMA = {
    "type": "object",
    "required": ["tool", "status", "error", "conventions", "config", "results", "timing"],
    "additionalProperties": False,
    "properties": {
        "tool": {
            "type": "object",
            "required": ["name", "version"],
            "properties": {"name": {"const": "ncorr"}, "version": {"type": "string"}},
        },
        "status": {"enum": ["ok", "failed"]},
        "error": {"type": ["string", "null"]},
        "conventions": {
            "type": "object",
            "required": ["squeezing", "atom", "field_normalization"],
            "additionalProperties": {"type": "string"},
        },
        "config": {"type": "object", "required": ["provider", "tasks", "tolerances"]},
        "timing": {"type": "object"},
        "results": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["task", "name", "type", "status"],
                "properties": {
                    "task": {"type": "integer", "minimum": 0},
                    "name": {"type": "string"},
                    "type": {"type": "string"},
                    "status": {"enum": ["ok", "error"]},
                    "error": {"type": "string"},
                    "lhs": _NUM,
                    "rhs": _NUM,
                    "threshold": {"type": "number"},
                    "relation": {"enum": [">", "<"]},
                    "violated": {"type": "boolean"},
                    "verdict": {"enum": [NONCLASSICAL, CLASSICAL_CONSISTENT]},
                    "flags": {"type": "array", "items": {"type": "string"}},
                    "radicand_factors": {"type": "array", "items": {"type": "number"}},
                    "min_eigenvalue": {"type": "number"},
                    "minors": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["subset", "order", "determinant", "scale", "threshold"],
                        },
                    },
                    "series": {
                        "type": "object",
                        "required": ["tau", "value_re", "value_im"],
                        "properties": {
                            "tau": {"type": "array", "items": {"type": "number"}},
                            "value_re": {"type": "array", "items": {"type": "number"}},
                            "value_im": {"type": "array", "items": {"type": "number"}},
                        },
                    },
                },
                "allOf": [
                    {
                        "if": {"properties": {"status": {"const": "ok"}, "relation": {}}, "required": ["relation"]},
                        "then": {"required": ["lhs", "rhs", "threshold", "violated", "verdict", "eps_abs"]},
                    },
                    {
                        "if": {"properties": {"status": {"const": "error"}}},
                        "then": {"required": ["error"]},
                    },
                ],
            },
        },
    },
}
