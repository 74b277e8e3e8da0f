import json
import math
from pathlib import Path

import pytest

import netsurv

DATA = Path(__file__).resolve().parent.parent / "data"


def test_version():
    assert netsurv.__version__ == "0.1.0"


def test_closed_form_q():
    bins = [(a, a + 10, 0.01) for a in range(15, 65, 10)]
    expected = 1 - (1 - 0.1 / 1.05) ** 4 * (1 - 0.05 / 1.025)
    assert netsurv.conditional_q(bins) == pytest.approx(expected, abs=1e-15)
    assert netsurv.conditional_q([(a, a + 10, 0.0) for a in range(15, 65, 10)]) == 0.0


def test_bad_schedule_raises_library_error():
    with pytest.raises(netsurv.Error):
        netsurv.conditional_q([(15, 25, 0.01), (35, 65, 0.01)])
    assert issubclass(netsurv.Error, ValueError)


def test_sensitivity_multiplier():
    f = netsurv.AdjustmentFactors()
    f.delta = 0.5
    f.eta = 1.5
    assert f.multiplier() == 3.0
    assert netsurv.apply_sensitivity(0.002, f) == 0.002 * 3.0


def test_k_index_and_interval():
    assert netsurv.imperfect_sampling_index([2, 2, 2], [1, 5, 9]) == 0.0
    lo, hi = netsurv.percentile_interval(list(range(1, 101)), 0.95)
    assert lo == pytest.approx(3.475)
    assert hi == pytest.approx(97.525)


def test_deaths_per_interview_fixture():
    d = netsurv.deaths_per_interview(str(DATA / "descriptive/respondents.csv"), str(DATA / "descriptive/deaths.csv"))
    assert d["acquaintance"][:2] == (1681, 2259)
    assert round(d["meal"][2], 2) == 0.39


def test_simulate_then_estimate_matches_truth(tmp_path):
    config = {
        "population_size": 3000,
        "frame_age_range": {"female": [15, 65], "male": [15, 65]},
        "death_rates": 0.02,
        "degree": {"law": "fixed", "mean": 16},
        "seed": 3,
    }
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps(config))
    status, out, err = netsurv.run_command(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path / "w")])
    assert status == 0, err
    assert out.startswith("simulate:")
    truth = json.loads((tmp_path / "w/truth.json").read_text())
    assert truth == json.loads(netsurv.simulate_truth(json.dumps(config)))
    rates = netsurv.estimate(str(tmp_path / "w/respondents.csv"), str(tmp_path / "w/deaths.csv"),
                             str(tmp_path / "w/known_populations.csv"), population_total=truth["frame_size"])
    for g in truth["groups"]:
        assert math.isclose(rates[g["group"]], g["death_rate"], rel_tol=1e-12)


def test_usage_error_status():
    status, _, _ = netsurv.run_command(["nope"])
    assert status == 2
