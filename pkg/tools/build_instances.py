"""Regenerate the bundled instances under src/intermodal/instances/.

    python3 tools/build_instances.py

The tiny instance is written by hand; the others draw their scenarios from a
seeded sampler and are stored with explicit scenarios so the files do not
depend on the random generator of a particular numpy release.
"""

from __future__ import annotations

import json
from pathlib import Path

from intermodal.io import load_document, to_document

OUT = Path(__file__).resolve().parents[1] / "src" / "intermodal" / "instances"

TINY = {
    "name": "tiny",
    "description": "one origin, one hub, one train; optimum 136 (prepare 3, ship 3, leave 1 unmet)",
    "periods": 1,
    "origins": [{"id": "O1", "prep_cost": 2, "kappa": 5, "arcs": {"H1": {"travel_time": 1, "cost": 10}}}],
    "hubs": [{"id": "H1"}],
    "trains": [{"id": "T1", "stops": [{"hub": "H1", "departure": 1}]}],
    "cost": {"unmet_penalty": 100, "emissions_penalty": 1},
    "emissions": {"cap": 10, "rate": [0.5]},
    "scenarios": [{"probability": 1.0, "demand": {"T1": 4}, "capacity": {"T1": {"H1": 3}}}],
}


def _arc(tt, cost, transfer_time=1, transfer_cost=40):
    return {"travel_time": tt, "cost": cost, "transfer_time": transfer_time, "transfer_cost": transfer_cost}


MEDIUM = {
    "name": "medium",
    "description": "three origins, four hubs, three trains, six scenarios; emissions bind at low caps",
    "periods": 8,
    "origins": [
        {"id": "O1", "prep_cost": 120, "kappa": 30,
         "arcs": {"H1": _arc(2, 300), "H2": _arc(4, 220), "H3": _arc(6, 160)}},
        {"id": "O2", "prep_cost": 150, "kappa": 25,
         "arcs": {"H2": _arc(1, 380), "H3": _arc(3, 260), "H4": _arc(5, 190)}},
        {"id": "O3", "prep_cost": 100, "kappa": 20,
         "arcs": {"H1": _arc(5, 210), "H4": _arc(2, 330)}},
    ],
    "hubs": [{"id": "H1"}, {"id": "H2"}, {"id": "H3"}, {"id": "H4"}],
    "trains": [
        {"id": "T1", "stops": [{"hub": "H1", "departure": 3}, {"hub": "H2", "departure": 5},
                               {"hub": "H3", "departure": 8}]},
        {"id": "T2", "stops": [{"hub": "H4", "departure": 4}, {"hub": "H3", "departure": 7}]},
        {"id": "T3", "stops": [{"hub": "H2", "departure": 6}, {"hub": "H4", "departure": 8}]},
    ],
    "cost": {"unmet_penalty": 1500, "emissions_penalty": 60},
    "emissions": {"cap": 120, "rate": [1.4, 1.2, 1.0, 0.8, 0.8, 1.0, 1.2, 1.4]},
    "sampler": {
        "scenario_count": 6, "seed": 2024, "extreme_fraction": 0.34,
        "demand": {"T1": {"low": 4, "high": 14}, "T2": {"low": 3, "high": 10}, "T3": {"low": 2, "high": 9}},
        "capacity": {"T1": {"H1": {"low": 1, "high": 6}, "H2": {"low": 1, "high": 5}, "H3": {"low": 2, "high": 7}},
                     "T2": {"H4": {"low": 1, "high": 6}, "H3": {"low": 1, "high": 5}},
                     "T3": {"H2": {"low": 1, "high": 5}, "H4": {"low": 1, "high": 6}}},
    },
}

CAPACITY = {
    "name": "capacity",
    "description": "four trains, eight scenarios; spot capacity is overridden uniformly by the capacity sweep",
    "periods": 6,
    "origins": [
        {"id": "O1", "prep_cost": 80, "kappa": 40, "arcs": {"H1": _arc(1, 200), "H2": _arc(2, 260)}},
        {"id": "O2", "prep_cost": 90, "kappa": 40, "arcs": {"H2": _arc(1, 210), "H3": _arc(2, 240)}},
    ],
    "hubs": [{"id": "H1"}, {"id": "H2"}, {"id": "H3"}],
    "trains": [
        {"id": "T1", "stops": [{"hub": "H1", "departure": 2}, {"hub": "H2", "departure": 4}]},
        {"id": "T2", "stops": [{"hub": "H2", "departure": 3}, {"hub": "H3", "departure": 5}]},
        {"id": "T3", "stops": [{"hub": "H1", "departure": 4}, {"hub": "H3", "departure": 6}]},
        {"id": "T4", "stops": [{"hub": "H3", "departure": 3}]},
    ],
    "cost": {"unmet_penalty": 1200, "emissions_penalty": 50},
    "emissions": {"cap": 200, "rate": 0.9},
    "sampler": {
        "scenario_count": 8, "seed": 7, "extreme_fraction": 0.25,
        "demand": {"T1": {"low": 6, "high": 14}, "T2": {"low": 5, "high": 12}, "T3": {"low": 4, "high": 12},
                   "T4": {"low": 3, "high": 9}},
        "capacity": {"T1": {"H1": {"low": 2, "high": 6}, "H2": {"low": 2, "high": 6}},
                     "T2": {"H2": {"low": 2, "high": 6}, "H3": {"low": 2, "high": 6}},
                     "T3": {"H1": {"low": 2, "high": 6}, "H3": {"low": 2, "high": 6}},
                     "T4": {"H3": {"low": 2, "high": 6}}},
    },
}


def materialise(doc: dict) -> dict:
    inst, scen = load_document(doc)
    out = to_document(inst, scen)
    return {"name": doc["name"], "description": doc["description"], **out}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for doc in (TINY, MEDIUM, CAPACITY):
        path = OUT / f"{doc['name']}.json"
        path.write_text(json.dumps(materialise(doc), indent=2) + "\n", encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
