import pytest

from intermodal.errors import PlannerError
from intermodal.io import load
from intermodal.scenarios import (Distribution, SamplerConfig, Scenario, ScenarioSet, mean_value_scenario,
                                  sample_scenarios, single, validate_scenarios, with_uniform_capacity)


def _cfg(**kw):
    base = dict(scenario_count=6,
                demand={"T1": Distribution(2, 9), "T2": Distribution(values=(0, 5, 10), pmf=(0.2, 0.5, 0.3))},
                capacity={("H1", "T1"): Distribution(1, 4)})
    base.update(kw)
    return SamplerConfig(**base)


def test_same_seed_same_scenarios():
    assert sample_scenarios(_cfg(), 11) == sample_scenarios(_cfg(), 11)
    draws = {tuple(s.demand["T1"] for s in sample_scenarios(_cfg(), seed)) for seed in range(8)}
    assert len(draws) > 1


def test_draws_stay_in_support():
    for s in sample_scenarios(_cfg(scenario_count=200), 0):
        assert 2 <= s.demand["T1"] <= 9
        assert s.demand["T2"] in (0, 5, 10)
        assert 1 <= s.capacity[("H1", "T1")] <= 4


def test_extreme_share_alternates_low_and_high():
    scen = sample_scenarios(_cfg(extreme_fraction=0.5), 3)
    # round(0.5 * 6) = 3 forced scenarios: min, max, min
    assert [s.demand["T1"] for s in scen[:3]] == [2, 9, 2]
    assert [s.demand["T2"] for s in scen[:3]] == [0, 10, 0]
    assert [s.capacity[("H1", "T1")] for s in scen[:3]] == [1, 4, 1]


def test_uniform_probabilities_by_default_and_pmf_when_given():
    assert all(s.probability == pytest.approx(1 / 6) for s in sample_scenarios(_cfg(), 0))
    pmf = (0.1, 0.1, 0.2, 0.2, 0.2, 0.2)
    assert [s.probability for s in sample_scenarios(_cfg(scenario_pmf=pmf), 0)] == list(pmf)


@pytest.mark.parametrize("kw", [
    dict(scenario_count=0),
    dict(extreme_fraction=1.5),
    dict(scenario_pmf=(0.5, 0.5)),
    dict(scenario_pmf=(0.5, 0.5, 0.5, -0.5, 0.0, 0.0)),
    dict(demand={"T1": Distribution(5, 2)}),
    dict(demand={"T1": Distribution(values=(1, 2), pmf=(0.6, 0.6))}),
])
def test_bad_sampler_config_rejected(kw):
    with pytest.raises(PlannerError) as exc:
        sample_scenarios(_cfg(**kw), 0)
    assert exc.value.code == "INVALID_CONFIG"


def test_mean_value_rounds_half_up():
    scen = ScenarioSet((Scenario({("H1", "T1"): 2}, {"T1": 3}, 0.5),
                        Scenario({("H1", "T1"): 3}, {"T1": 6}, 0.5)))
    mv = mean_value_scenario(scen)
    assert mv.capacity[("H1", "T1")] == 3  # 2.5 -> 3
    assert mv.demand["T1"] == 5  # 4.5 -> 5
    assert mv.probability == 1.0


def test_mean_value_survives_float_noise():
    # 0.1 * 5 + 0.9 * 0 reads 0.5000000000000001 or 0.49999999999999994 depending on order
    scen = ScenarioSet(tuple(Scenario({}, {"T1": d}, p) for d, p in [(5, 0.1)] + [(0, 0.1)] * 9))
    assert mean_value_scenario(scen).demand["T1"] == 1


def test_mean_value_averages_penalties():
    scen = ScenarioSet((Scenario({}, {"T1": 1}, 0.5, 10.0), Scenario({}, {"T1": 1}, 0.5)))
    with pytest.raises(PlannerError):
        mean_value_scenario(scen)
    assert mean_value_scenario(scen, default_penalty=30.0).unmet_penalty == 20.0


def test_single_scenario_mean_is_itself():
    _, scen = load("tiny")
    mv = mean_value_scenario(single(scen[0]))
    assert mv.demand == dict(scen[0].demand) and mv.capacity == dict(scen[0].capacity)
    assert mv.probability == 1.0


def test_validation_reports_each_problem():
    inst, scen = load("tiny")
    good = scen[0]
    bad = ScenarioSet((
        Scenario({**good.capacity, ("H9", "T1"): -1}, {"T9": -2}, 0.7, -5.0),
        Scenario({}, dict(good.demand), 0.1),
    ))
    codes = {v.code for v in validate_scenarios(bad, inst)}
    assert {"PROB_SUM", "NEGATIVE_COST", "CAPACITY_OFF_ROUTE", "NEGATIVE_VALUE", "MISSING_CAPACITY",
            "DANGLING_TRAIN_REF", "MISSING_DEMAND"} <= codes
    assert validate_scenarios(ScenarioSet(()), inst)[0].code == "EMPTY_SET"
    assert validate_scenarios(scen, inst) == []


def test_uniform_capacity_copy():
    _, scen = load("capacity")
    flat = with_uniform_capacity(scen, 7)
    assert all(v == 7 for s in flat for v in s.capacity.values())
    assert [s.demand for s in flat] == [s.demand for s in scen]
