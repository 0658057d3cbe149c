"""Deterministic problem data: origins, hubs, trains, costs and emissions.

Times are integer periods (one period is one hour by convention). Entities are
referenced by string ids in files and by position inside the model builder;
``Instance`` offers both views.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Mapping, Sequence

from .errors import PlannerError, Violation


@dataclass(frozen=True)
class Arc:
    travel_time: int
    cost: float
    transfer_time: int = 0
    transfer_cost: float = 0.0


@dataclass(frozen=True)
class Origin:
    id: str
    prep_cost: float
    max_prepare: int
    arcs: Mapping[str, Arc] = field(default_factory=dict)


@dataclass(frozen=True)
class Hub:
    id: str


@dataclass(frozen=True)
class Stop:
    hub: str
    departure: int


@dataclass(frozen=True)
class Train:
    """A scheduled train; ``stops`` run from the first station to the last."""

    id: str
    stops: tuple[Stop, ...]

    def stop_index(self, hub: str) -> int | None:
        for k, stop in enumerate(self.stops):
            if stop.hub == hub:
                return k
        return None


@dataclass(frozen=True)
class CostParams:
    unmet_penalty: float
    emissions_penalty: float


@dataclass(frozen=True)
class EmissionParams:
    cap: float
    rate: tuple[float, ...]  # per dispatch period, length == periods


@dataclass(frozen=True)
class Instance:
    origins: tuple[Origin, ...]
    hubs: tuple[Hub, ...]
    trains: tuple[Train, ...]
    periods: int
    cost: CostParams
    emissions: EmissionParams

    @cached_property
    def hub_index(self) -> dict[str, int]:
        return {h.id: k for k, h in enumerate(self.hubs)}

    @cached_property
    def origin_index(self) -> dict[str, int]:
        return {o.id: k for k, o in enumerate(self.origins)}

    @cached_property
    def train_index(self) -> dict[str, int]:
        return {t.id: k for k, t in enumerate(self.trains)}

    @property
    def stop_count(self) -> int:
        return sum(len(t.stops) for t in self.trains)

    def stops(self) -> Iterator[tuple[int, int, Stop]]:
        """Yield ``(train_idx, position, stop)`` in train then route order."""
        for n, train in enumerate(self.trains):
            for k, stop in enumerate(train.stops):
                yield n, k, stop


def ceil_period(value: float) -> int:
    """Round a time up to a whole period; tiny float noise is not rounded up."""
    nearest = round(value)
    if abs(value - nearest) < 1e-9:
        return int(nearest)
    return int(math.ceil(value))


def validate_instance(inst: Instance) -> list[Violation]:
    """Return every invariant violation of ``inst`` (empty list means valid)."""
    out: list[Violation] = []

    def add(code: str, message: str, path: str = "") -> None:
        out.append(Violation(code, message, path))

    if inst.periods < 1:
        add("BAD_PERIODS", f"periods must be >= 1, got {inst.periods}", "/periods")
    if not inst.origins:
        add("EMPTY_SET", "at least one origin is required", "/origins")
    if not inst.hubs:
        add("EMPTY_SET", "at least one hub is required", "/hubs")
    if not inst.trains:
        add("EMPTY_SET", "at least one train is required", "/trains")

    for kind, items in (("origin", inst.origins), ("hub", inst.hubs), ("train", inst.trains)):
        seen: set[str] = set()
        for item in items:
            if item.id in seen:
                add("DUPLICATE_ID", f"{kind} id {item.id!r} declared twice")
            seen.add(item.id)

    hubs = {h.id for h in inst.hubs}
    for a, origin in enumerate(inst.origins):
        base = f"/origins/{a}"
        if origin.prep_cost < 0:
            add("NEGATIVE_COST", f"origin {origin.id!r} prep_cost < 0", base + "/prep_cost")
        if origin.max_prepare < 0:
            add("NEGATIVE_CAPACITY", f"origin {origin.id!r} kappa < 0", base + "/kappa")
        for hub_id, arc in origin.arcs.items():
            apath = f"{base}/arcs/{hub_id}"
            if hub_id not in hubs:
                add("DANGLING_HUB_REF", f"origin {origin.id!r} has an arc to undeclared hub {hub_id!r}", apath)
            if arc.travel_time < 0 or arc.transfer_time < 0:
                add("NEGATIVE_TIME", f"arc {origin.id!r}->{hub_id!r} has a negative time", apath)
            if arc.cost < 0 or arc.transfer_cost < 0:
                add("NEGATIVE_COST", f"arc {origin.id!r}->{hub_id!r} has a negative cost", apath)

    for n, train in enumerate(inst.trains):
        base = f"/trains/{n}"
        if not train.stops:
            add("EMPTY_ROUTE", f"train {train.id!r} has no stops", base + "/stops")
            continue
        visited: set[str] = set()
        for k, stop in enumerate(train.stops):
            if stop.hub not in hubs:
                add("DANGLING_HUB_REF", f"train {train.id!r} stops at undeclared hub {stop.hub!r}",
                    f"{base}/stops/{k}/hub")
            if stop.hub in visited:
                add("REPEATED_STOP", f"train {train.id!r} visits hub {stop.hub!r} twice", f"{base}/stops/{k}")
            visited.add(stop.hub)
            if stop.departure < 0:
                add("NEGATIVE_TIME", f"train {train.id!r} departs before period 0", f"{base}/stops/{k}/departure")
            if k > 0 and stop.departure <= train.stops[k - 1].departure:
                add("NON_INCREASING_SCHEDULE",
                    f"train {train.id!r} departs {stop.hub!r} no later than the previous stop",
                    f"{base}/stops/{k}/departure")

    if inst.cost.unmet_penalty < 0:
        add("NEGATIVE_COST", "unmet_penalty < 0", "/cost/unmet_penalty")
    if inst.cost.emissions_penalty < 0:
        add("NEGATIVE_COST", "emissions_penalty < 0", "/cost/emissions_penalty")
    if inst.emissions.cap < 0:
        add("NEGATIVE_EMISSIONS", "emission cap < 0", "/emissions/cap")
    if len(inst.emissions.rate) != inst.periods:
        add("RATE_LENGTH", f"emission rate has {len(inst.emissions.rate)} entries for {inst.periods} periods",
            "/emissions/rate")
    if any(r < 0 for r in inst.emissions.rate):
        add("NEGATIVE_EMISSIONS", "emission rate < 0", "/emissions/rate")
    return out


def _lookup(items: Sequence, idx: int, kind: str):
    if not isinstance(idx, int) or not 0 <= idx < len(items):
        raise PlannerError("INDEX_OUT_OF_RANGE", f"{kind} index {idx!r} outside 0..{len(items) - 1}")
    return items[idx]


def time_feasible(inst: Instance, i: int, j: int, n: int, t: int, use_transfer: bool = False) -> bool:
    """True iff a dispatch from origin ``i`` at period ``t`` reaches hub ``j``
    before train ``n`` departs from it. Returns False when there is no road arc."""
    origin = _lookup(inst.origins, i, "origin")
    hub = _lookup(inst.hubs, j, "hub")
    train = _lookup(inst.trains, n, "train")
    if not isinstance(t, int) or not 0 <= t < inst.periods:
        raise PlannerError("INDEX_OUT_OF_RANGE", f"period {t!r} outside 0..{inst.periods - 1}")
    k = train.stop_index(hub.id)
    if k is None:
        raise PlannerError("NOT_ON_ROUTE", f"train {train.id!r} does not stop at hub {hub.id!r}")
    arc = origin.arcs.get(hub.id)
    if arc is None:
        return False
    lead = arc.travel_time + (arc.transfer_time if use_transfer else 0)
    return t + lead <= train.stops[k].departure


def latest_dispatch(inst: Instance, i: int, n: int, k: int, use_transfer: bool = False) -> int:
    """Last feasible dispatch period for (origin i, stop k of train n); -1 if none."""
    stop = inst.trains[n].stops[k]
    arc = inst.origins[i].arcs.get(stop.hub)
    if arc is None:
        return -1
    lead = arc.travel_time + (arc.transfer_time if use_transfer else 0)
    return min(inst.periods - 1, stop.departure - lead)
