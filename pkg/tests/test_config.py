"""Strict-parsing checks for the TOML run descriptions."""

import json
from pathlib import Path

import pytest

from replicamps.config import (
    ConfigError,
    PlanEntry,
    SimulationConfig,
    config_to_dict,
    load_config,
    parse_config,
)

MINIMAL = """
[model]
length = 8
"""

FULL = """
seed = 11
realizations = 3

[model]
length = 8
coupling = 1.0
anisotropy = 0.5
disorder = 0.2

[schedule]
dt = 0.05
t_max = 2.0
order = 2
measure_every = 4

[truncation]
max_rank = 64
weight_cutoff = 1e-10

[[pe_plan]]
k = 2
chi = 32

[[pe_plan]]
k = 2
method = "sampling"
n_samples = 500
every = 2

[[sre_plan]]
n = 2
chi = 128
weight_cutoff = 1e-11

[observables]
profile = true
transfer = true
entanglement = true
measure_chi = 48
fit_window = [1.0, 8.0]

[output]
directory = "runs/demo"
formats = ["csv"]
"""


class TestDefaults:
    def test_minimal_config_fills_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.model.length == 8
        assert cfg.model.coupling == 1.0
        assert cfg.model.anisotropy == 0.0
        assert cfg.seed == 0
        assert cfg.realizations == 1
        assert cfg.disorder == 0.0
        assert cfg.truncation.max_rank == 128
        assert cfg.truncation.weight_cutoff == 1e-12
        assert cfg.pe_plan == () and cfg.sre_plan == ()
        assert cfg.observables.profile and cfg.observables.transfer
        assert not cfg.observables.entanglement
        assert cfg.observables.fit_window is None
        assert cfg.output.directory == Path("runs/out")
        assert cfg.output.formats == ("csv", "json")

    def test_full_config_parses(self):
        cfg = parse_config(FULL)
        assert cfg.seed == 11
        assert cfg.realizations == 3
        assert cfg.disorder == 0.2
        assert cfg.model.anisotropy == 0.5
        assert cfg.schedule.n_steps == 40
        assert cfg.pe_plan == (
            PlanEntry(index=2, chi=32),
            PlanEntry(index=2, chi=0, method="sampling", n_samples=500, every=2),
        )
        assert cfg.sre_plan == (PlanEntry(index=2, chi=128, weight_cutoff=1e-11),)
        assert cfg.observables.measure_chi == 48
        assert cfg.observables.fit_window == (1.0, 8.0)
        assert cfg.output.formats == ("csv",)

    def test_disorder_spec_wiring(self):
        cfg = parse_config(FULL)
        spec = cfg.disorder_spec
        assert spec.strength == 0.2
        assert spec.n_realizations == 3
        assert spec.seed == 11
        fields = spec.fields(8, 1)
        assert len(fields) == 8
        assert all(abs(h) <= 0.2 for h in fields)
        # counter-based: independent of how many were drawn before
        assert spec.fields(8, 1) == fields

    def test_load_config_reads_a_file(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(MINIMAL)
        cfg = load_config(path)
        assert isinstance(cfg, SimulationConfig)
        assert cfg.model.length == 8


class TestRejections:
    def test_invalid_toml_names_the_source(self):
        with pytest.raises(ConfigError, match="run.toml"):
            parse_config("length = = 3", source="run.toml")

    def test_unknown_top_level_key_carries_its_line(self):
        text = MINIMAL + "\nspeed = 3\n"
        with pytest.raises(ConfigError, match=r"<config>:5: unknown key 'speed'"):
            parse_config(text)

    def test_unknown_model_key(self):
        with pytest.raises(ConfigError, match="unknown key 'jz'"):
            parse_config("[model]\nlength = 8\njz = 1.0\n")

    def test_model_section_required(self):
        with pytest.raises(ConfigError, match=r"\[model\] section is required"):
            parse_config("seed = 1\n")

    def test_length_required(self):
        with pytest.raises(ConfigError, match="needs 'length'"):
            parse_config("[model]\ncoupling = 1.0\n")

    def test_wrong_type_is_named(self):
        with pytest.raises(ConfigError, match="'length' in \\[model\\] must be int"):
            parse_config('[model]\nlength = "eight"\n')

    def test_bool_is_not_an_int(self):
        with pytest.raises(ConfigError, match="must be an integer, got a boolean"):
            parse_config("[model]\nlength = 8\n[truncation]\nmax_rank = true\n")

    def test_negative_disorder(self):
        with pytest.raises(ConfigError, match="disorder strength"):
            parse_config("[model]\nlength = 8\ndisorder = -0.1\n")

    def test_realizations_without_disorder(self):
        with pytest.raises(ConfigError, match="meaningless without"):
            parse_config("realizations = 4\n" + MINIMAL)

    def test_transfer_needs_even_chain(self):
        with pytest.raises(ConfigError, match="even chain"):
            parse_config("[model]\nlength = 7\n")
        # profile alone is fine on odd chains
        cfg = parse_config("[model]\nlength = 7\n[observables]\ntransfer = false\n")
        assert cfg.model.length == 7

    def test_bad_schedule_is_reported(self):
        with pytest.raises(ConfigError, match=r"\[schedule\] rejected"):
            parse_config(MINIMAL + "[schedule]\ndt = -0.1\n")

    def test_bad_fit_window(self):
        base = MINIMAL + "[observables]\n"
        with pytest.raises(ConfigError, match="fit_window"):
            parse_config(base + "fit_window = [1.0]\n")
        with pytest.raises(ConfigError, match="t_min < t_max"):
            parse_config(base + "fit_window = [4.0, 1.0]\n")

    def test_bad_output_format(self):
        with pytest.raises(ConfigError, match="formats entries"):
            parse_config(MINIMAL + '[output]\nformats = ["csv", "parquet"]\n')


class TestPlanValidation:
    def test_pe_plan_uses_k_not_n(self):
        with pytest.raises(ConfigError, match="unknown key 'n'"):
            parse_config(MINIMAL + "[[pe_plan]]\nn = 2\nchi = 16\n")

    def test_index_key_required(self):
        with pytest.raises(ConfigError, match="needs 'n'"):
            parse_config(MINIMAL + "[[sre_plan]]\nchi = 16\n")

    def test_replica_below_two_is_rejected(self):
        with pytest.raises(ConfigError, match="replica method needs k >= 2"):
            parse_config(MINIMAL + "[[pe_plan]]\nk = 1\nchi = 16\n")

    def test_replica_needs_a_bond_budget(self):
        with pytest.raises(ConfigError, match="chi >= 1"):
            parse_config(MINIMAL + "[[pe_plan]]\nk = 2\n")

    def test_sampling_needs_samples(self):
        with pytest.raises(ConfigError, match="n_samples >= 2"):
            parse_config(MINIMAL + '[[pe_plan]]\nk = 2\nmethod = "sampling"\n')

    def test_sampling_index_one_is_allowed(self):
        cfg = parse_config(
            MINIMAL + '[[pe_plan]]\nk = 1\nmethod = "sampling"\nn_samples = 100\n'
        )
        assert cfg.pe_plan[0].index == 1

    def test_exact_is_gated_by_chain_length(self):
        text = '[model]\nlength = 16\n[[sre_plan]]\nn = 2\nmethod = "exact"\n'
        with pytest.raises(ConfigError, match="needs L <= 14"):
            parse_config(text)
        ok = parse_config('[model]\nlength = 14\n[[sre_plan]]\nn = 2\nmethod = "exact"\n')
        assert ok.sre_plan[0].method == "exact"

    def test_unknown_method(self):
        with pytest.raises(ConfigError, match="method must be one of"):
            parse_config(MINIMAL + '[[pe_plan]]\nk = 2\nchi = 8\nmethod = "magic"\n')

    def test_every_must_be_positive(self):
        with pytest.raises(ConfigError, match="'every' must be >= 1"):
            parse_config(MINIMAL + "[[pe_plan]]\nk = 2\nchi = 8\nevery = 0\n")

    def test_negative_weight_cutoff(self):
        with pytest.raises(ConfigError, match="weight_cutoff must be >= 0"):
            parse_config(MINIMAL + "[[pe_plan]]\nk = 2\nchi = 8\nweight_cutoff = -1e-9\n")


class TestManifestEcho:
    def test_config_round_trips_to_json(self):
        cfg = parse_config(FULL)
        echo = config_to_dict(cfg)
        text = json.dumps(echo)  # must be serializable as-is
        back = json.loads(text)
        assert back["model"]["length"] == 8
        assert back["output"]["directory"] == "runs/demo"
        assert back["observables"]["fit_window"] == [1.0, 8.0]
        assert back["pe_plan"][1]["method"] == "sampling"
        assert back["model"]["fields"] == [0.0] * 8
