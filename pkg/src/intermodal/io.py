"""JSON instance files (strict schema), round-trip serialization and run manifests.

Document layout (see docs/instance-schema.md for the field reference)::

    {"periods": 6,
     "origins":  [{"id", "prep_cost", "kappa", "arcs": {hub: {"travel_time", "cost", ...}}}],
     "hubs":     [{"id"}],
     "trains":   [{"id", "stops": [{"hub", "departure"}]}],
     "cost":     {"unmet_penalty", "emissions_penalty"},
     "emissions": {"cap", "rate": [per period] | scalar},
     "scenarios": [{"probability", "demand": {train: n}, "capacity": {train: {hub: k}}}],
     "sampler":  {...}}            # optional, used when "scenarios" is absent

Times may be fractional in files; they are rounded up to whole periods here.
"""

from __future__ import annotations

import hashlib
import json
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from . import __version__
from .errors import InputError, Violation
from .instance import Arc, CostParams, EmissionParams, Hub, Instance, Origin, Stop, Train, ceil_period, validate_instance
from .scenarios import Distribution, SamplerConfig, Scenario, ScenarioSet, sample_scenarios, validate_scenarios

_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_COUNT = {"type": "integer", "minimum": 0}
_ID = {"type": "string", "minLength": 1}

_DIST = {
    "oneOf": [
        _COUNT,
        {"type": "object", "additionalProperties": False, "required": ["low", "high"],
         "properties": {"low": _COUNT, "high": _COUNT}},
        {"type": "object", "additionalProperties": False, "required": ["values", "pmf"],
         "properties": {"values": {"type": "array", "items": _COUNT, "minItems": 1},
                        "pmf": {"type": "array", "items": _NONNEG, "minItems": 1}}},
    ]
}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["periods", "origins", "hubs", "trains", "cost", "emissions"],
    "anyOf": [{"required": ["scenarios"]}, {"required": ["sampler"]}],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "periods": {"type": "integer", "minimum": 1},
        "origins": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["id", "prep_cost", "kappa", "arcs"],
            "properties": {
                "id": _ID, "prep_cost": _NONNEG, "kappa": _COUNT,
                "arcs": {"type": "object", "additionalProperties": {
                    "type": "object", "additionalProperties": False, "required": ["travel_time", "cost"],
                    "properties": {"travel_time": _NONNEG, "cost": _NONNEG,
                                   "transfer_time": _NONNEG, "transfer_cost": _NONNEG}}},
            }}},
        "hubs": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["id"], "properties": {"id": _ID}}},
        "trains": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["id", "stops"],
            "properties": {"id": _ID, "stops": {"type": "array", "items": {
                "type": "object", "additionalProperties": False, "required": ["hub", "departure"],
                "properties": {"hub": _ID, "departure": _NONNEG}}}}}},
        "cost": {"type": "object", "additionalProperties": False,
                 "required": ["unmet_penalty", "emissions_penalty"],
                 "properties": {"unmet_penalty": _NONNEG, "emissions_penalty": _NONNEG}},
        "emissions": {"type": "object", "additionalProperties": False, "required": ["cap", "rate"],
                      "properties": {"cap": _NONNEG,
                                     "rate": {"oneOf": [_NONNEG, {"type": "array", "items": _NONNEG}]}}},
        "scenarios": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["probability", "demand", "capacity"],
            "properties": {
                "probability": _NUM,
                "demand": {"type": "object", "additionalProperties": _COUNT},
                "capacity": {"type": "object", "additionalProperties": {
                    "type": "object", "additionalProperties": _COUNT}},
                "unmet_penalty": _NONNEG,
            }}},
        "sampler": {"type": "object", "additionalProperties": False,
                    "required": ["scenario_count", "demand", "capacity"],
                    "properties": {
                        "scenario_count": {"type": "integer", "minimum": 1},
                        "seed": {"type": "integer", "minimum": 0},
                        "extreme_fraction": {"type": "number", "minimum": 0, "maximum": 1},
                        "scenario_pmf": {"type": "array", "items": _NONNEG},
                        "demand": {"type": "object", "additionalProperties": _DIST},
                        "capacity": {"type": "object", "additionalProperties": {
                            "type": "object", "additionalProperties": _DIST}},
                    }},
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def _pointer(parts) -> str:
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in parts) if parts else "/"


def schema_violations(doc: Any) -> list[Violation]:
    out = []
    for err in sorted(_VALIDATOR.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message)):
        out.append(Violation("SCHEMA", err.message, _pointer(list(err.absolute_path))))
    return out


# ---------------------------------------------------------------- documents -> objects


def _dist(raw) -> Distribution:
    if isinstance(raw, int):
        return Distribution(low=raw, high=raw)
    if "values" in raw:
        return Distribution(values=tuple(raw["values"]), pmf=tuple(float(p) for p in raw["pmf"]))
    return Distribution(low=raw["low"], high=raw["high"])


def sampler_from_doc(raw: dict) -> SamplerConfig:
    return SamplerConfig(
        scenario_count=raw["scenario_count"],
        demand={t: _dist(d) for t, d in raw["demand"].items()},
        capacity={(hub, train): _dist(d) for train, per in raw["capacity"].items() for hub, d in per.items()},
        extreme_fraction=float(raw.get("extreme_fraction", 0.0)),
        scenario_pmf=tuple(raw["scenario_pmf"]) if "scenario_pmf" in raw else None,
        seed=raw.get("seed"),
    )


def instance_from_doc(doc: dict) -> Instance:
    periods = doc["periods"]
    rate = doc["emissions"]["rate"]
    rate = tuple(float(r) for r in rate) if isinstance(rate, list) else (float(rate),) * periods
    origins = tuple(
        Origin(o["id"], float(o["prep_cost"]), int(o["kappa"]),
               {hub: Arc(ceil_period(a["travel_time"]), float(a["cost"]), ceil_period(a.get("transfer_time", 0)),
                         float(a.get("transfer_cost", 0.0))) for hub, a in o["arcs"].items()})
        for o in doc["origins"])
    trains = tuple(Train(t["id"], tuple(Stop(s["hub"], ceil_period(s["departure"])) for s in t["stops"]))
                   for t in doc["trains"])
    return Instance(origins=origins, hubs=tuple(Hub(h["id"]) for h in doc["hubs"]), trains=trains,
                    periods=periods, cost=CostParams(float(doc["cost"]["unmet_penalty"]),
                                                     float(doc["cost"]["emissions_penalty"])),
                    emissions=EmissionParams(float(doc["emissions"]["cap"]), rate))


def scenarios_from_doc(doc: dict, seed: int | None = None) -> ScenarioSet:
    if "scenarios" in doc:
        out = []
        for s in doc["scenarios"]:
            cap = {(hub, train): int(k) for train, per in s["capacity"].items() for hub, k in per.items()}
            out.append(Scenario(cap, {t: int(d) for t, d in s["demand"].items()}, float(s["probability"]),
                                float(s["unmet_penalty"]) if "unmet_penalty" in s else None))
        return ScenarioSet(tuple(out))
    cfg = sampler_from_doc(doc["sampler"])
    use = seed if seed is not None else (cfg.seed if cfg.seed is not None else 0)
    return sample_scenarios(cfg, use)


def load_document(doc: Any, seed: int | None = None) -> tuple[Instance, ScenarioSet]:
    """Schema-check, build and validate an in-memory document."""
    bad = schema_violations(doc)
    if bad:
        raise InputError("SCHEMA_VIOLATION", f"{len(bad)} schema violation(s); first: {bad[0]}", bad)
    inst = instance_from_doc(doc)
    problems = validate_instance(inst)
    if problems:
        raise InputError(problems[0].code, f"{len(problems)} validation error(s); first: {problems[0]}", problems)
    try:
        scen = scenarios_from_doc(doc, seed)
    except Exception as exc:  # sampler config errors carry a code already
        code = getattr(exc, "code", "INVALID_CONFIG")
        raise InputError(code, str(exc), [Violation(code, str(exc), "/sampler")]) from exc
    problems = validate_scenarios(scen, inst)
    if problems:
        raise InputError(problems[0].code, f"{len(problems)} validation error(s); first: {problems[0]}", problems)
    return inst, scen


def resolve_input(name: str | Path) -> Path:
    """A filesystem path, or the bare name of a bundled instance (``tiny``, ``medium``, ``capacity``)."""
    path = Path(name)
    if path.exists():
        return path
    stem = path.name[:-5] if path.name.endswith(".json") else path.name
    bundled = resources.files("intermodal") / "instances" / f"{stem}.json"
    if bundled.is_file():
        return Path(str(bundled))
    raise InputError("FILE_NOT_FOUND", f"no such file or bundled instance: {name}",
                     [Violation("FILE_NOT_FOUND", str(name))])


def load(path: str | Path, seed: int | None = None) -> tuple[Instance, ScenarioSet]:
    path = resolve_input(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError("PARSE_ERROR", f"{path}: {exc}", [Violation("PARSE_ERROR", str(exc))]) from exc
    return load_document(doc, seed)


# ---------------------------------------------------------------- objects -> documents


def _num(v: float):
    return int(v) if float(v).is_integer() else float(v)


def to_document(inst: Instance, scen: ScenarioSet) -> dict:
    origins = []
    for o in inst.origins:
        arcs = {}
        for hub, a in o.arcs.items():
            entry = {"travel_time": a.travel_time, "cost": _num(a.cost)}
            if a.transfer_time:
                entry["transfer_time"] = a.transfer_time
            if a.transfer_cost:
                entry["transfer_cost"] = _num(a.transfer_cost)
            arcs[hub] = entry
        origins.append({"id": o.id, "prep_cost": _num(o.prep_cost), "kappa": o.max_prepare, "arcs": arcs})
    scenarios = []
    for s in scen:
        cap: dict[str, dict[str, int]] = {}
        for (hub, train), k in s.capacity.items():
            cap.setdefault(train, {})[hub] = int(k)
        entry = {"probability": s.probability, "demand": {t: int(d) for t, d in s.demand.items()}, "capacity": cap}
        if s.unmet_penalty is not None:
            entry["unmet_penalty"] = _num(s.unmet_penalty)
        scenarios.append(entry)
    return {
        "periods": inst.periods,
        "origins": origins,
        "hubs": [{"id": h.id} for h in inst.hubs],
        "trains": [{"id": t.id, "stops": [{"hub": s.hub, "departure": s.departure} for s in t.stops]}
                   for t in inst.trains],
        "cost": {"unmet_penalty": _num(inst.cost.unmet_penalty),
                 "emissions_penalty": _num(inst.cost.emissions_penalty)},
        "emissions": {"cap": _num(inst.emissions.cap), "rate": [_num(r) for r in inst.emissions.rate]},
        "scenarios": scenarios,
    }


def save(path: str | Path, inst: Instance, scen: ScenarioSet) -> None:
    write_json(path, to_document(inst, scen))


def write_json(path: str | Path, payload: Any) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- manifest


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict[str, Any]
    inputs: dict[str, str] = field(default_factory=dict)  # path -> sha256
    outputs: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    wall_time: float = 0.0
    exit_code: int = 0
    version: str = __version__

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0

    def write(self, directory: str | Path) -> Path:
        path = Path(directory) / "manifest.json"
        write_json(path, asdict(self))
        return path
