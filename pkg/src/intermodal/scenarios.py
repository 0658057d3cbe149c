"""Scenario sets: spot capacities, demands and probabilities.

Sampling is seeded and pure; the extreme-scenario knob forces a share of the
scenarios to the bounds of every distribution (alternating low/high).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import PlannerError, Violation
from .instance import Instance

PROB_TOL = 1e-9


@dataclass(frozen=True)
class Scenario:
    capacity: Mapping[tuple[str, str], int]  # (hub, train) -> spot capacity K
    demand: Mapping[str, int]  # train -> demand D
    probability: float
    unmet_penalty: float | None = None  # overrides the instance-wide penalty


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[Scenario, ...]
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def __getitem__(self, k: int) -> Scenario:
        return self.scenarios[k]

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios], dtype=float)


@dataclass(frozen=True)
class Distribution:
    """Integer distribution: uniform on ``low..high`` or a discrete pmf."""

    low: int = 0
    high: int = 0
    values: tuple[int, ...] = ()
    pmf: tuple[float, ...] = ()

    @property
    def is_discrete(self) -> bool:
        return bool(self.values)

    @property
    def minimum(self) -> int:
        return min(self.values) if self.values else self.low

    @property
    def maximum(self) -> int:
        return max(self.values) if self.values else self.high

    def draw(self, rng: np.random.Generator) -> int:
        if self.values:
            return int(rng.choice(np.asarray(self.values), p=np.asarray(self.pmf)))
        return int(rng.integers(self.low, self.high, endpoint=True))


@dataclass(frozen=True)
class SamplerConfig:
    scenario_count: int
    demand: Mapping[str, Distribution]
    capacity: Mapping[tuple[str, str], Distribution]
    extreme_fraction: float = 0.0
    scenario_pmf: tuple[float, ...] | None = None
    seed: int | None = None

    def problems(self) -> list[str]:
        out = []
        if self.scenario_count < 1:
            out.append("scenario_count must be >= 1")
        if not 0.0 <= self.extreme_fraction <= 1.0:
            out.append("extreme_fraction must lie in [0, 1]")
        if self.scenario_pmf is not None:
            if len(self.scenario_pmf) != self.scenario_count:
                out.append("scenario_pmf length differs from scenario_count")
            elif any(p < 0 for p in self.scenario_pmf) or abs(sum(self.scenario_pmf) - 1.0) > PROB_TOL:
                out.append("scenario_pmf must be non-negative and sum to 1")
        dists = [(f"demand[{k}]", d) for k, d in self.demand.items()]
        dists += [(f"capacity[{k[0]},{k[1]}]", d) for k, d in self.capacity.items()]
        for name, d in dists:
            if d.values:
                if len(d.values) != len(d.pmf) or any(v < 0 for v in d.values):
                    out.append(f"{name}: values must be non-negative and match pmf length")
                elif any(p < 0 for p in d.pmf) or abs(sum(d.pmf) - 1.0) > PROB_TOL:
                    out.append(f"{name}: pmf must be non-negative and sum to 1")
            elif d.low < 0 or d.high < d.low:
                out.append(f"{name}: need 0 <= low <= high")
        return out


def sample_scenarios(cfg: SamplerConfig, seed: int) -> ScenarioSet:
    problems = cfg.problems()
    if problems:
        raise PlannerError("INVALID_CONFIG", "; ".join(problems))
    rng = np.random.default_rng(seed)
    count = cfg.scenario_count
    n_extreme = int(math.floor(cfg.extreme_fraction * count + 0.5))
    if cfg.scenario_pmf is None:
        probs = [1.0 / count] * count
    else:
        probs = list(cfg.scenario_pmf)

    demand_keys = sorted(cfg.demand)
    cap_keys = sorted(cfg.capacity)
    out = []
    for k in range(count):
        if k < n_extreme:
            pick = (lambda d: d.minimum) if k % 2 == 0 else (lambda d: d.maximum)
        else:
            pick = lambda d: d.draw(rng)  # noqa: E731
        demand = {key: pick(cfg.demand[key]) for key in demand_keys}
        capacity = {key: pick(cfg.capacity[key]) for key in cap_keys}
        out.append(Scenario(capacity=capacity, demand=demand, probability=probs[k]))
    return ScenarioSet(tuple(out), seed=seed)


def _half_up(x: float) -> int:
    # float noise below 1e-9 must not flip the rounding direction
    return int(math.floor(x + 0.5 + 1e-9))


def mean_value_scenario(scen: ScenarioSet, default_penalty: float | None = None) -> Scenario:
    """Probability-weighted mean scenario, counts rounded half-up, p = 1.

    Per-scenario unmet penalties are averaged too (no rounding); scenarios
    without an override use ``default_penalty``.
    """
    if len(scen) == 1:
        only = scen[0]
        return Scenario(dict(only.capacity), dict(only.demand), 1.0, only.unmet_penalty)
    probs = scen.probabilities
    probs = probs / probs.sum()
    cap_keys = sorted({k for s in scen for k in s.capacity})
    dem_keys = sorted({k for s in scen for k in s.demand})
    capacity = {k: _half_up(sum(p * s.capacity.get(k, 0) for p, s in zip(probs, scen))) for k in cap_keys}
    demand = {k: _half_up(sum(p * s.demand.get(k, 0) for p, s in zip(probs, scen))) for k in dem_keys}
    penalty = None
    if any(s.unmet_penalty is not None for s in scen):
        if default_penalty is None and any(s.unmet_penalty is None for s in scen):
            raise PlannerError("INVALID_CONFIG", "mixed per-scenario penalties need default_penalty")
        penalty = float(resolve_penalties(scen, default_penalty or 0.0) @ probs)
    return Scenario(capacity, demand, 1.0, penalty)


def resolve_penalties(scen: ScenarioSet, default: float) -> np.ndarray:
    return np.array([default if s.unmet_penalty is None else s.unmet_penalty for s in scen], dtype=float)


def validate_scenarios(scen: ScenarioSet, inst: Instance) -> list[Violation]:
    out: list[Violation] = []
    if len(scen) == 0:
        out.append(Violation("EMPTY_SET", "at least one scenario is required", "/scenarios"))
        return out
    total = float(sum(s.probability for s in scen))
    if abs(total - 1.0) > PROB_TOL:
        out.append(Violation("PROB_SUM", f"probabilities sum to {total:.12g}, expected 1", "/scenarios"))

    on_route = {(stop.hub, train.id) for train in inst.trains for stop in train.stops}
    trains = {t.id for t in inst.trains}
    for w, s in enumerate(scen):
        base = f"/scenarios/{w}"
        if not 0.0 <= s.probability <= 1.0:
            out.append(Violation("BAD_PROBABILITY", f"probability {s.probability} outside [0, 1]",
                                 base + "/probability"))
        if s.unmet_penalty is not None and s.unmet_penalty < 0:
            out.append(Violation("NEGATIVE_COST", "unmet_penalty < 0", base + "/unmet_penalty"))
        for (hub, train), k in s.capacity.items():
            path = f"{base}/capacity/{train}/{hub}"
            if (hub, train) not in on_route:
                out.append(Violation("CAPACITY_OFF_ROUTE", f"train {train!r} does not stop at hub {hub!r}", path))
            if k < 0:
                out.append(Violation("NEGATIVE_VALUE", f"capacity {k} < 0", path))
        for key in sorted(on_route - set(s.capacity)):
            out.append(Violation("MISSING_CAPACITY", f"no capacity for train {key[1]!r} at hub {key[0]!r}",
                                 f"{base}/capacity"))
        for train, d in s.demand.items():
            path = f"{base}/demand/{train}"
            if train not in trains:
                out.append(Violation("DANGLING_TRAIN_REF", f"demand for undeclared train {train!r}", path))
            if d < 0:
                out.append(Violation("NEGATIVE_VALUE", f"demand {d} < 0", path))
        for train in sorted(trains - set(s.demand)):
            out.append(Violation("MISSING_DEMAND", f"no demand for train {train!r}", f"{base}/demand"))
    return out


def with_uniform_capacity(scen: ScenarioSet, value: int) -> ScenarioSet:
    """Copy of ``scen`` with every spot capacity set to ``value``."""
    return ScenarioSet(
        tuple(Scenario({k: value for k in s.capacity}, dict(s.demand), s.probability, s.unmet_penalty)
              for s in scen),
        seed=scen.seed,
    )


def single(scenario: Scenario) -> ScenarioSet:
    """Wrap one scenario as a certain (p = 1) scenario set."""
    return ScenarioSet((Scenario(dict(scenario.capacity), dict(scenario.demand), 1.0, scenario.unmet_penalty),))
