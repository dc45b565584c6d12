"""Analysis configuration: parsing and validation.

Configs are YAML (JSON is accepted too, being a subset). Every problem in
a document is collected and reported together, each with its path.

.. code-block:: yaml

    provider:
      state:                      # or `atom:`, never both
        cutoff: 32                # default per-mode cutoff
        modes:                    # one product state ...
          - {kind: coherent, alpha: [1.0, 0.5]}
        # mixture:                # ... or a classical mixture of products
        #   - {weight: 0.5, modes: [{kind: thermal, nbar: 2}]}
        points: [0, 0]            # mode observed at each point
      # atom:
      #   rabi: 6.0               # units of gamma
      #   detuning: 0.0
      #   gamma: 1.0
      #   points: [{t: 0.0, r: 0.0}, {t: 0.5}]
    tasks:
      - {type: witness, max_degree: 2, max_order: 3}
      - {type: antibunching, points: [0, 1]}
    tolerances: {eps_rel: 1.0e-9, eps_abs: 1.0e-9}
    output: {report: report.json, csv: g2.csv}

Task types and their keys are listed in ``TASK_KEYS``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import yaml

from .atom import AtomParams, SpaceTimePoint
from .states import MODE_KINDS, ModeSpec, StateSpec
from .witness import FIELD_INTENSITY_VARIANTS, Tolerances

# key -> required?
TASK_KEYS: dict[str, dict[str, bool]] = {
    "witness": {"max_degree": False, "max_order": False, "basis": False},
    "second_order": {"a": True, "b": True},
    "third_order_minor": {"m": True, "n": True, "p": True, "points": False},
    "antibunching": {"points": False},
    "higher_order_intensity": {"N": True, "M": True, "n": True, "m": True, "points": False},
    "field_intensity": {"variant": True, "points": False, "exponents": False, "l": False, "phase": False},
    "field_variance": {"point": False, "phase": False},
    "g2_sweep": {"tau_start": False, "tau_stop": False, "num": False},
}
COMMON_TASK_KEYS = {"type", "name"}

MODE_KEYS = {
    "vacuum": set(),
    "fock": {"n"},
    "coherent": {"alpha"},
    "thermal": {"nbar"},
    "squeezed": {"r", "phi"},
}


class ConfigError(ValueError):
    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("\n".join(f"{path}: {msg}" for path, msg in errors))


@dataclass(frozen=True)
class StateProviderConfig:
    spec: StateSpec
    points: tuple[int, ...]


@dataclass(frozen=True)
class AtomProviderConfig:
    params: AtomParams
    points: tuple[SpaceTimePoint, ...]


@dataclass(frozen=True)
class Task:
    type: str
    name: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AnalysisConfig:
    provider: StateProviderConfig | AtomProviderConfig
    tasks: tuple[Task, ...]
    tolerances: Tolerances = Tolerances()
    output: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.provider.points)

    def to_dict(self) -> dict:
        """Normalised echo; ``parse_config`` of its JSON gives an equal config."""
        prov = self.provider
        if isinstance(prov, AtomProviderConfig):
            pdict = {"atom": {
                "rabi": prov.params.rabi, "detuning": prov.params.detuning, "gamma": prov.params.gamma,
                "points": [{"t": p.t, "r": p.r} for p in prov.points],
            }}
        else:
            pdict = {"state": {
                "mixture": [
                    {"weight": w, "modes": [_mode_dict(m) for m in modes]}
                    for w, modes in prov.spec.components
                ],
                "points": list(prov.points),
            }}
        return {
            "provider": pdict,
            "tasks": [{"type": t.type, "name": t.name, **t.params} for t in self.tasks],
            "tolerances": {"eps_rel": self.tolerances.eps_rel, "eps_abs": self.tolerances.eps_abs},
            "output": dict(self.output),
        }


def _mode_dict(m: ModeSpec) -> dict:
    d: dict[str, Any] = {"kind": m.kind, "cutoff": m.cutoff}
    if m.kind == "fock":
        d["n"] = m.n
    elif m.kind == "coherent":
        d["alpha"] = [m.alpha.real, m.alpha.imag]
    elif m.kind == "thermal":
        d["nbar"] = m.nbar
    elif m.kind == "squeezed":
        d.update(r=m.r, phi=m.phi)
    return d


class _Checker:
    def __init__(self):
        self.errors: list[tuple[str, str]] = []

    def fail(self, path: str, msg: str) -> None:
        self.errors.append((path, msg))

    def mapping(self, value, path) -> dict | None:
        if not isinstance(value, dict):
            self.fail(path, f"expected a mapping, got {type(value).__name__}")
            return None
        return value

    def keys(self, d: dict, allowed: set, path: str, required: set = frozenset()) -> None:
        for key in d:
            if key not in allowed:
                self.fail(f"{path}.{key}", "unknown key")
        for key in sorted(required - set(d)):
            self.fail(f"{path}.{key}", "missing required key")

    def number(self, value, path, *, minimum=None, exclusive=False, integer=False):
        if isinstance(value, str) and not integer:
            # YAML 1.1 reads "1e-9" (no dot) as a string
            try:
                value = float(value)
            except ValueError:
                pass
        ok_type = (int,) if integer else (int, float)
        if isinstance(value, bool) or not isinstance(value, ok_type):
            self.fail(path, f"expected {'an integer' if integer else 'a number'}, got {value!r}")
            return None
        if minimum is not None and (value <= minimum if exclusive else value < minimum):
            self.fail(path, f"must be {'>' if exclusive else '>='} {minimum}, got {value}")
            return None
        return value

    def complex_(self, value, path):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return complex(value)
        if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            return complex(value[0], value[1])
        if isinstance(value, str):
            try:
                return complex(value.replace(" ", ""))
            except ValueError:
                pass
        self.fail(path, f"expected a complex number (number, [re, im] or '1+2j'), got {value!r}")
        return None

    def int_list(self, value, path, *, length=None, minimum=0) -> list[int] | None:
        if not isinstance(value, list):
            self.fail(path, "expected a list of integers")
            return None
        out = []
        for i, v in enumerate(value):
            iv = self.number(v, f"{path}[{i}]", minimum=minimum, integer=True)
            if iv is None:
                return None
            out.append(iv)
        if length is not None and len(out) != length:
            self.fail(path, f"expected {length} entries, got {len(out)}")
            return None
        return out

    def index(self, value, path, k) -> list[list[int]] | None:
        if not isinstance(value, list) or (k is not None and len(value) != k):
            self.fail(path, f"expected {k or 'one'} [n, m] pair(s), one per point")
            return None
        pairs = []
        for i, pair in enumerate(value):
            p = self.int_list(pair, f"{path}[{i}]", length=2)
            if p is None:
                return None
            pairs.append(p)
        return pairs


def parse_config(text: str | bytes) -> AnalysisConfig:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except ValueError:
        doc = None
    else:
        return config_from_dict(doc)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([("$", f"not a valid YAML/JSON document: {exc}")]) from exc
    return config_from_dict(doc)


def config_from_dict(doc: Any) -> AnalysisConfig:
    ck = _Checker()
    doc = ck.mapping(doc, "$")
    if doc is None:
        raise ConfigError(ck.errors)
    ck.keys(doc, {"provider", "tasks", "tolerances", "output"}, "$", {"provider", "tasks"})

    provider = None
    pdoc = ck.mapping(doc.get("provider"), "$.provider") if "provider" in doc else None
    if pdoc is not None:
        ck.keys(pdoc, {"state", "atom"}, "$.provider")
        present = [key for key in ("state", "atom") if key in pdoc]
        if len(present) == 2:
            ck.fail("$.provider", "exactly one provider is allowed, got both 'state' and 'atom'")
        elif not present:
            ck.fail("$.provider", "missing provider: give either 'state' or 'atom'")
        elif present[0] == "state":
            provider = _state_provider(ck, pdoc["state"], "$.provider.state")
        else:
            provider = _atom_provider(ck, pdoc["atom"], "$.provider.atom")

    tol = Tolerances()
    if "tolerances" in doc:
        tdoc = ck.mapping(doc["tolerances"], "$.tolerances")
        if tdoc is not None:
            ck.keys(tdoc, {"eps_rel", "eps_abs"}, "$.tolerances")
            vals = {key: ck.number(tdoc[key], f"$.tolerances.{key}", minimum=0, exclusive=True)
                    for key in ("eps_rel", "eps_abs") if key in tdoc}
            tol = Tolerances(**{key: float(v) for key, v in vals.items() if v is not None})

    output = {}
    if "output" in doc:
        odoc = ck.mapping(doc["output"], "$.output")
        if odoc is not None:
            ck.keys(odoc, {"report", "csv"}, "$.output")
            for key, value in odoc.items():
                if not isinstance(value, str) or not value:
                    ck.fail(f"$.output.{key}", "expected a path string")
                else:
                    output[key] = value

    tasks: list[Task] = []
    if "tasks" in doc:
        tdocs = doc["tasks"]
        if not isinstance(tdocs, list) or not tdocs:
            ck.fail("$.tasks", "expected a nonempty list of tasks")
        else:
            k = len(provider.points) if provider is not None else None
            is_atom = isinstance(provider, AtomProviderConfig)
            for i, tdoc in enumerate(tdocs):
                task = _task(ck, tdoc, f"$.tasks[{i}]", i, k, is_atom)
                if task is not None:
                    tasks.append(task)
            seen: dict[str, int] = {}
            for i, task in enumerate(tasks):
                if task.name in seen:
                    ck.fail(f"$.tasks[{i}].name", f"duplicate task name {task.name!r} (also task {seen[task.name]})")
                seen.setdefault(task.name, i)

    if ck.errors:
        raise ConfigError(ck.errors)
    return AnalysisConfig(provider, tuple(tasks), tol, output)


def _mode(ck: _Checker, mdoc, path, default_cutoff) -> ModeSpec | None:
    mdoc = ck.mapping(mdoc, path)
    if mdoc is None:
        return None
    kind = mdoc.get("kind")
    if kind not in MODE_KINDS:
        ck.fail(f"{path}.kind", f"expected one of {list(MODE_KINDS)}, got {kind!r}")
        return None
    ck.keys(mdoc, {"kind", "cutoff"} | MODE_KEYS[kind], path)
    n_errors = len(ck.errors)
    cutoff = mdoc.get("cutoff", default_cutoff)
    if cutoff is None:
        ck.fail(f"{path}.cutoff", "missing cutoff (set it here or as the state default)")
    else:
        cutoff = ck.number(cutoff, f"{path}.cutoff", minimum=2, integer=True)
    kw: dict[str, Any] = {}
    if kind == "fock":
        kw["n"] = ck.number(mdoc.get("n", 0), f"{path}.n", minimum=0, integer=True)
    elif kind == "coherent":
        kw["alpha"] = ck.complex_(mdoc.get("alpha", 0), f"{path}.alpha")
    elif kind == "thermal":
        kw["nbar"] = ck.number(mdoc.get("nbar", 0.0), f"{path}.nbar", minimum=0)
    elif kind == "squeezed":
        kw["r"] = ck.number(mdoc.get("r", 0.0), f"{path}.r", minimum=0)
        kw["phi"] = ck.number(mdoc.get("phi", 0.0), f"{path}.phi")
    if len(ck.errors) != n_errors:
        return None
    kw = {key: (float(v) if key in ("nbar", "r", "phi") else v) for key, v in kw.items()}
    return ModeSpec(kind, int(cutoff), **kw)


def _modes(ck, value, path, default_cutoff):
    if not isinstance(value, list) or not value:
        ck.fail(path, "expected a nonempty list of modes")
        return None
    modes = [_mode(ck, m, f"{path}[{i}]", default_cutoff) for i, m in enumerate(value)]
    return None if any(m is None for m in modes) else tuple(modes)


def _state_provider(ck: _Checker, sdoc, path) -> StateProviderConfig | None:
    sdoc = ck.mapping(sdoc, path)
    if sdoc is None:
        return None
    ck.keys(sdoc, {"cutoff", "modes", "mixture", "points"}, path)
    n_errors = len(ck.errors)
    default_cutoff = None
    if "cutoff" in sdoc:
        default_cutoff = ck.number(sdoc["cutoff"], f"{path}.cutoff", minimum=2, integer=True)
    components = []
    if ("modes" in sdoc) == ("mixture" in sdoc):
        ck.fail(path, "give exactly one of 'modes' or 'mixture'")
    elif "modes" in sdoc:
        modes = _modes(ck, sdoc["modes"], f"{path}.modes", default_cutoff)
        if modes is not None:
            components.append((1.0, modes))
    else:
        mix = sdoc["mixture"]
        if not isinstance(mix, list) or not mix:
            ck.fail(f"{path}.mixture", "expected a nonempty list of components")
        else:
            for i, cdoc in enumerate(mix):
                cpath = f"{path}.mixture[{i}]"
                cdoc = ck.mapping(cdoc, cpath)
                if cdoc is None:
                    continue
                ck.keys(cdoc, {"weight", "modes"}, cpath, {"weight", "modes"})
                w = ck.number(cdoc.get("weight"), f"{cpath}.weight", minimum=0) if "weight" in cdoc else None
                modes = _modes(ck, cdoc.get("modes"), f"{cpath}.modes", default_cutoff) if "modes" in cdoc else None
                if w is not None and modes is not None:
                    components.append((float(w), modes))
            if len(components) == len(mix):
                total = sum(w for w, _ in components)
                if abs(total - 1.0) > 1e-12:
                    ck.fail(f"{path}.mixture", f"weights must sum to 1, got {total}")
                if len({len(m) for _, m in components}) != 1:
                    ck.fail(f"{path}.mixture", "components must have the same number of modes")
                elif len({tuple(x.cutoff for x in m) for _, m in components}) != 1:
                    ck.fail(f"{path}.mixture", "components must use the same cutoffs")
    mode_count = _raw_mode_count(sdoc)
    points = None
    if "points" in sdoc:
        points = ck.int_list(sdoc["points"], f"{path}.points")
        if points is not None and not points:
            ck.fail(f"{path}.points", "expected at least one point")
        elif points is not None and mode_count is not None:
            bad = [p for p in points if p >= mode_count]
            if bad:
                ck.fail(f"{path}.points", f"mode labels {bad} out of range for {mode_count} modes")
    if len(ck.errors) != n_errors or not components:
        return None
    spec = StateSpec(tuple(components))
    if points is None:
        points = list(range(spec.mode_count))
    return StateProviderConfig(spec, tuple(points))


def _raw_mode_count(sdoc) -> int | None:
    """Number of modes as written, known even when some mode entries are invalid."""
    modes = sdoc.get("modes")
    if modes is None and isinstance(sdoc.get("mixture"), list) and sdoc["mixture"]:
        first = sdoc["mixture"][0]
        modes = first.get("modes") if isinstance(first, dict) else None
    return len(modes) if isinstance(modes, list) else None


def _atom_provider(ck: _Checker, adoc, path) -> AtomProviderConfig | None:
    adoc = ck.mapping(adoc, path)
    if adoc is None:
        return None
    ck.keys(adoc, {"rabi", "detuning", "gamma", "points"}, path, {"points"})
    n_errors = len(ck.errors)
    rabi = ck.number(adoc.get("rabi", 1.0), f"{path}.rabi", minimum=0)
    detuning = ck.number(adoc.get("detuning", 0.0), f"{path}.detuning")
    gamma = ck.number(adoc.get("gamma", 1.0), f"{path}.gamma", minimum=0, exclusive=True)
    points = []
    pdocs = adoc.get("points")
    if "points" in adoc:
        if not isinstance(pdocs, list) or not pdocs:
            ck.fail(f"{path}.points", "expected a nonempty list of {t, r} points")
        else:
            for i, pdoc in enumerate(pdocs):
                ppath = f"{path}.points[{i}]"
                pdoc = ck.mapping(pdoc, ppath)
                if pdoc is None:
                    continue
                ck.keys(pdoc, {"t", "r"}, ppath, {"t"})
                t = ck.number(pdoc.get("t", 0.0), f"{ppath}.t")
                r = ck.number(pdoc.get("r", 0.0), f"{ppath}.r", minimum=0)
                if t is not None and r is not None:
                    points.append(SpaceTimePoint(float(t), float(r)))
    if len(ck.errors) != n_errors:
        return None
    return AtomProviderConfig(AtomParams(float(rabi), float(detuning), float(gamma)), tuple(points))


def _label(ck, value, path, k):
    v = ck.number(value, path, minimum=0, integer=True)
    if v is not None and k is not None and v >= k:
        ck.fail(path, f"point label {v} out of range for {k} points")
        return None
    return v


def _labels(ck, value, path, k, length=None):
    labels = ck.int_list(value, path, length=length)
    if labels is None:
        return None
    if k is not None and any(v >= k for v in labels):
        ck.fail(path, f"point labels {labels} out of range for {k} points")
        return None
    return labels


def _task(ck: _Checker, tdoc, path, position, k, is_atom) -> Task | None:
    tdoc = ck.mapping(tdoc, path)
    if tdoc is None:
        return None
    ttype = tdoc.get("type")
    if ttype not in TASK_KEYS:
        ck.fail(f"{path}.type", f"expected one of {sorted(TASK_KEYS)}, got {ttype!r}")
        return None
    spec = TASK_KEYS[ttype]
    ck.keys(tdoc, COMMON_TASK_KEYS | set(spec), path, {key for key, req in spec.items() if req})
    n_errors = len(ck.errors)
    name = tdoc.get("name", f"{position}:{ttype}")
    if not isinstance(name, str) or not name:
        ck.fail(f"{path}.name", "expected a nonempty string")
    p: dict[str, Any] = {}

    def num(key, default=None, **kw):
        if key in tdoc:
            return ck.number(tdoc[key], f"{path}.{key}", **kw)
        return default

    if ttype == "witness":
        p["max_degree"] = num("max_degree", 1, minimum=1, integer=True)
        p["max_order"] = num("max_order", 0, minimum=0, integer=True)
        if "basis" in tdoc:
            bdoc = tdoc["basis"]
            if not isinstance(bdoc, list) or not bdoc:
                ck.fail(f"{path}.basis", "expected a nonempty list of multi-indices")
            else:
                basis = [ck.index(e, f"{path}.basis[{i}]", k) for i, e in enumerate(bdoc)]
                if all(b is not None for b in basis):
                    if any(x != 0 for pair in basis[0] for x in pair):
                        ck.fail(f"{path}.basis[0]", "the first basis entry must be the all-zero index")
                    if len({str(b) for b in basis}) != len(basis):
                        ck.fail(f"{path}.basis", "basis entries must be distinct")
                    p["basis"] = basis
    elif ttype == "second_order":
        for key in ("a", "b"):
            if key in tdoc:
                p[key] = ck.index(tdoc[key], f"{path}.{key}", k)
    elif ttype == "third_order_minor":
        for key in ("m", "n", "p"):
            p[key] = num(key, minimum=1, integer=True)
        p["points"] = _labels(ck, tdoc.get("points", [0, 1, 2]), f"{path}.points", k, 3)
    elif ttype in ("antibunching", "higher_order_intensity"):
        if ttype == "higher_order_intensity":
            for key in ("N", "M", "n", "m"):
                p[key] = num(key, minimum=0, integer=True)
            if None not in (p["N"], p["M"], p["n"], p["m"]):
                if p["n"] > p["N"] or p["m"] > p["M"]:
                    ck.fail(path, "need N >= n and M >= m")
                if p["N"] + p["M"] < 1:
                    ck.fail(path, "need N + M >= 1")
        p["points"] = _labels(ck, tdoc.get("points", [0, 1]), f"{path}.points", k, 2)
        if p["points"] and p["points"][0] == p["points"][1]:
            ck.fail(f"{path}.points", "the two point labels must differ")
    elif ttype == "field_intensity":
        variant = tdoc.get("variant")
        if variant not in FIELD_INTENSITY_VARIANTS:
            ck.fail(f"{path}.variant", f"expected one of {list(FIELD_INTENSITY_VARIANTS)}, got {variant!r}")
        p["variant"] = variant
        default_points = list(range(k)) if variant in ("general", "multipoint") and k else [0, 1]
        p["points"] = _labels(ck, tdoc.get("points", default_points), f"{path}.points", k)
        if variant == "general":
            ex = tdoc.get("exponents")
            if ex is None:
                ck.fail(f"{path}.exponents", "general variant needs one [p, m] pair per point")
            elif p["points"] is not None:
                p["exponents"] = ck.index(ex, f"{path}.exponents", len(p["points"]))
        elif "exponents" in tdoc:
            ck.fail(f"{path}.exponents", f"not used by variant {variant!r}")
        if variant == "multipoint":
            p["l"] = num("l", minimum=1, integer=True)
            if p["l"] is None and "l" not in tdoc:
                ck.fail(f"{path}.l", "multipoint variant needs l")
            elif p["l"] is not None and p["points"] is not None and not 1 < p["l"] < len(p["points"]):
                ck.fail(f"{path}.l", f"need 1 < l < k, got l={p['l']}, k={len(p['points'])}")
        elif "l" in tdoc:
            ck.fail(f"{path}.l", f"not used by variant {variant!r}")
        if variant in ("lowest", "alternate", "full_field") and p["points"] is not None:
            if len(p["points"]) != 2 or p["points"][0] == p["points"][1]:
                ck.fail(f"{path}.points", "this variant needs two distinct point labels")
        p["phase"] = _phase(ck, tdoc, path, variant == "full_field")
    elif ttype == "field_variance":
        p["point"] = _label(ck, tdoc.get("point", 0), f"{path}.point", k)
        p["phase"] = _phase(ck, tdoc, path, True)
    elif ttype == "g2_sweep":
        if not is_atom:
            ck.fail(path, "g2_sweep requires the atom provider")
        p["tau_start"] = float(num("tau_start", 0.0) or 0.0)
        p["tau_stop"] = float(num("tau_stop", 10.0) or 0.0)
        p["num"] = num("num", 201, minimum=2, integer=True)
        if p["tau_stop"] <= p["tau_start"]:
            ck.fail(f"{path}.tau_stop", "must exceed tau_start")
    if len(ck.errors) != n_errors:
        return None
    p = {key: v for key, v in p.items() if v is not None}
    return Task(ttype, name, p)


def _phase(ck, tdoc, path, allowed):
    if "phase" not in tdoc:
        return 0.0 if allowed else None
    if not allowed:
        ck.fail(f"{path}.phase", "phase is only used with the full field")
        return None
    value = tdoc["phase"]
    if value == "optimal":
        return "optimal"
    return ck.number(value, f"{path}.phase")
