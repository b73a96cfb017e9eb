import json

import pytest

from meanreflect import ExperimentConfig, load_config
from meanreflect.config import config_from_dict
from meanreflect.errors import ConfigError


def write(tmp_path, payload):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload) if isinstance(payload, dict) else payload)
    return path


def test_minimal_config_fills_defaults(tmp_path):
    config = load_config(write(tmp_path, {}))
    assert config.mode == "full_sde"
    assert config.solver.tol == 1e-10
    assert config.solver.contraction_guard == 0.5
    assert config.problem.p == 2.0
    assert config.problem.loss.name == "linear"
    assert config.outputs.csv == "trace.csv"


def test_round_trip_is_identity():
    default = ExperimentConfig()
    assert config_from_dict(default.to_dict()) == default
    probe = config_from_dict({
        "mode": "gexp_probe",
        "problem": {"payoff": {"name": "square"}},
    })
    assert config_from_dict(probe.to_dict()) == probe


def test_parse_error_reports_position(tmp_path):
    with pytest.raises(ConfigError, match="line 1"):
        load_config(write(tmp_path, "{not json"))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.json")


def test_band_inversion_names_both_fields(tmp_path):
    payload = {"problem": {"sigma_low_sq": 4.0, "sigma_high_sq": 1.0}}
    with pytest.raises(ConfigError, match="sigma_low_sq"):
        load_config(write(tmp_path, payload))


def test_unknown_loss_lists_available(tmp_path):
    payload = {"problem": {"loss": {"name": "quadratic-x"}}}
    with pytest.raises(ConfigError, match="arctan_shift, linear, smooth_sin"):
        load_config(write(tmp_path, payload))


def test_unknown_field_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown field"):
        load_config(write(tmp_path, {"problems": {}}))
    with pytest.raises(ConfigError, match="unknown field"):
        load_config(write(tmp_path, {"problem": {"steps": 4}}))


def test_step_cap_enforced(tmp_path):
    with pytest.raises(ConfigError, match="n_steps"):
        load_config(write(tmp_path, {"problem": {"n_steps": 11}}))


def test_probe_mode_requires_payoff(tmp_path):
    with pytest.raises(ConfigError, match="payoff"):
        load_config(write(tmp_path, {"mode": "gexp_probe"}))


def test_initial_constraint_checked_eagerly(tmp_path):
    payload = {"problem": {"x0": -1.0, "loss": {"name": "linear", "params": {"c0": 0.0, "c1": 1.0}}}}
    with pytest.raises(ConfigError, match="x0"):
        load_config(write(tmp_path, payload))


def test_solver_knob_validation(tmp_path):
    with pytest.raises(ConfigError, match="tol"):
        load_config(write(tmp_path, {"solver": {"tol": -1.0}}))
    with pytest.raises(ConfigError, match="contraction_guard"):
        load_config(write(tmp_path, {"solver": {"contraction_guard": 1.5}}))


def test_loss_constant_overrides_apply():
    config = config_from_dict({
        "problem": {"loss": {"name": "linear", "c_l": 0.5, "C_l": 2.0}}
    })
    spec = config.loss_spec()
    assert spec.c_l == 0.5 and spec.C_l == 2.0


def test_horizon_propagates_to_loss_growth():
    config = config_from_dict({"problem": {"horizon": 1.0, "n_steps": 4}})
    spec = config.loss_spec()
    assert spec.kappa_growth >= 1.0


def test_mode_must_be_known():
    with pytest.raises(ConfigError, match="mode"):
        config_from_dict({"mode": "banana"})
