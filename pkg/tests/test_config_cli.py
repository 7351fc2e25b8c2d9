import json
import math

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from enzchannel.analytic import ModelTag
from enzchannel.cli import cli
from enzchannel.config import (
    StepRegimeWarning,
    document_from_spec,
    load_config,
    load_preset,
    preset_document,
    spec_from_document,
)
from enzchannel.engine import EmissionMode
from enzchannel.errors import ConfigurationError
from enzchannel.harness import ExperimentMode, run_experiment
from enzchannel.physics import Species
from enzchannel.results import build_bundle, read_series, write_series


class TestPresets:
    def test_fig3_parameters(self):
        spec = load_preset("fig3")
        config = spec.base_config
        assert spec.mode is ExperimentMode.FULL_KINETICS
        assert spec.trial_count == 1000
        assert config.emitter.molecule_count == 10_000
        assert config.emitter.mode is EmissionMode.PACKED_SPHERE
        assert config.enzyme_count == 200_000
        assert config.rates.k1 == 1e-19
        assert config.rates.k_minus1 == 1e4
        assert config.rates.k2 == 1e6
        assert config.dt == 0.5e-6
        assert config.duration == 100e-6
        assert config.species[Species.A].radius == 0.5e-9
        assert config.species[Species.E].radius == 2.5e-9
        assert config.species[Species.EA].radius == 3.0e-9
        assert config.enzyme_box.extents == (1e-6, 1e-6, 1e-6)
        radii = [rx.receiver_radius for rx in config.receivers]
        dists = [rx.distance for rx in config.receivers]
        assert radii == [25e-9, 45e-9]
        assert dists == pytest.approx([150e-9, 300e-9])

    def test_fig4_is_limiting_case_with_point_emission(self):
        spec = load_preset("fig4")
        config = spec.base_config
        assert spec.mode is ExperimentMode.LIMITING_CASE
        assert config.instant_degradation
        assert math.isinf(config.rates.k2)
        assert config.rates.k_minus1 == 0.0
        assert config.emitter.mode is EmissionMode.POINT
        assert config.derived.degrade_probability == 1.0
        assert config.derived.unbind_probability == 0.0

    def test_unknown_preset(self):
        with pytest.raises(ConfigurationError, match="preset"):
            preset_document("fig5")


class TestDocumentRoundTrip:
    @pytest.mark.parametrize("name", ["fig3", "fig4"])
    def test_load_echo_load_identical(self, name):
        spec = load_preset(name)
        echo = document_from_spec(spec)
        again = spec_from_document(echo)
        assert again == spec

    def test_yaml_file_round_trip(self, tmp_path):
        doc = preset_document("fig3")
        path = tmp_path / "experiment.yaml"
        path.write_text(yaml.safe_dump(doc))
        spec = load_config(path)
        assert spec == load_preset("fig3")

    def test_yaml_inf_survives(self, tmp_path):
        doc = preset_document("fig4")
        path = tmp_path / "limit.yaml"
        path.write_text(yaml.safe_dump(doc))
        spec = load_config(path)
        assert math.isinf(spec.base_config.rates.k2)

    def test_yaml_signless_exponent_literals(self, tmp_path):
        # hand-written configs use 1.0e4 style literals; stock YAML 1.1
        # would read them as strings
        doc = preset_document("fig3")
        text = yaml.safe_dump(doc).replace("10000.0", "1.0e4").replace("1e-19", "1.0e-19")
        path = tmp_path / "literal.yaml"
        path.write_text(text)
        spec = load_config(path)
        assert spec.base_config.rates.k_minus1 == 1.0e4
        assert spec.base_config.rates.k1 == 1.0e-19


class TestValidationErrors:
    def test_missing_timestep_names_field(self):
        doc = preset_document("fig3")
        del doc["timestep_s"]
        with pytest.raises(ConfigurationError, match="timestep_s"):
            spec_from_document(doc)

    def test_missing_species_entry(self):
        doc = preset_document("fig3")
        del doc["species"]["EA"]
        with pytest.raises(ConfigurationError, match="species.EA"):
            spec_from_document(doc)

    def test_bad_mode(self):
        doc = preset_document("fig3")
        doc["mode"] = "figure_three"
        with pytest.raises(ConfigurationError, match="mode"):
            spec_from_document(doc)

    def test_receiver_outside_box(self):
        doc = preset_document("fig3")
        doc["receivers"][0]["center_m"] = [9.8e-7, 0.0, 0.0]
        with pytest.raises(ConfigurationError, match="receiver"):
            spec_from_document(doc)

    def test_infinite_k2_requires_limiting_mode(self):
        doc = preset_document("fig3")
        doc["rates"]["k2_per_s"] = math.inf
        with pytest.raises(ConfigurationError, match="k2"):
            spec_from_document(doc)

    def test_malformed_yaml_reports_parse_error(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("mode: [unclosed\n")
        with pytest.raises(ConfigurationError, match="YAML"):
            load_config(path)

    def test_short_step_regime_warns(self):
        doc = preset_document("fig3")
        doc["timestep_s"] = 5e-10
        doc["duration_s"] = 5e-9
        doc["emitter"]["schedule"] = [{"time_s": 0.0, "bit": 1}]
        with pytest.warns(StepRegimeWarning):
            spec_from_document(doc)


def small_document(trials=3):
    doc = preset_document("fig3")
    doc["trials"] = trials
    doc["enzymes"]["count"] = 300
    doc["emitter"]["molecule_count"] = 200
    doc["duration_s"] = 5e-6
    return doc


class TestResultsIO:
    def _bundle(self, trials=3):
        spec = spec_from_document(small_document(trials))
        averaged = run_experiment(spec, workers=1)
        return spec, build_bundle(spec, averaged)

    def test_table_shape_and_roundtrip(self, tmp_path):
        spec, bundle = self._bundle()
        path = tmp_path / "series.csv"
        write_series(bundle, path)
        header, data, meta = read_series(path)
        n_steps = spec.base_config.n_steps
        assert data.shape == (n_steps, 1 + 4 * len(spec.base_config.receivers))
        assert header[0] == "time_s"
        assert header[1:5] == [
            "rx0_sim_mean",
            "rx0_sim_stderr",
            "rx0_analytic_diffusion",
            "rx0_analytic_enzyme",
        ]
        # text round trip is exact at this precision
        assert np.array_equal(
            data[:, 1], np.array([float(f"{v:.9e}") for v in bundle.series.mean_counts[0]])
        )
        assert meta["provenance"]["trial_count"] == 3

    def test_sidecar_regenerates_series(self, tmp_path):
        spec, bundle = self._bundle()
        path = tmp_path / "series.csv"
        write_series(bundle, path)
        _header, data, meta = read_series(path)
        respec = spec_from_document(meta["config_document"])
        assert respec == spec
        averaged = run_experiment(respec, workers=1)
        assert np.array_equal(averaged.count_sum, bundle.series.count_sum)

    def test_analytic_columns_match_models(self, tmp_path):
        spec, bundle = self._bundle()
        path = tmp_path / "series.csv"
        write_series(bundle, path)
        _header, data, _meta = read_series(path)
        curve = bundle.curves[(0, ModelTag.DIFFUSION_ONLY)]
        assert np.allclose(data[:, 3], curve.expected_counts, rtol=1e-9)


class TestCli:
    def test_derive_reports_published_step_parameters(self):
        result = CliRunner().invoke(cli, ["derive", "--preset", "fig3"])
        assert result.exit_code == 0
        rms_nm = float(result.output.split("rms relative step:")[1].split("(")[1].split("nm")[0])
        rb_nm = float(result.output.split("binding radius:")[1].split("(")[1].split("nm")[0])
        assert rms_nm == pytest.approx(22.9, rel=0.01)
        assert rb_nm == pytest.approx(2.28, rel=0.01)
        assert "[ok]" in result.output

    def test_derive_fig4_instant_probabilities(self):
        result = CliRunner().invoke(cli, ["derive", "--preset", "fig4"])
        assert result.exit_code == 0
        assert "degrade probability per step: 1" in result.output

    def test_requires_exactly_one_source(self):
        result = CliRunner().invoke(cli, ["derive"])
        assert result.exit_code != 0
        result = CliRunner().invoke(cli, ["derive", "--preset", "fig3", "--config", "x"])
        assert result.exit_code != 0

    def test_unknown_preset_usage_error(self):
        result = CliRunner().invoke(cli, ["derive", "--preset", "fig9"])
        assert result.exit_code != 0

    def test_curve_writes_table(self, tmp_path):
        result = CliRunner().invoke(
            cli, ["curve", "--preset", "fig3", "--out", str(tmp_path)]
        )
        assert result.exit_code == 0
        lines = (tmp_path / "fig3_curves.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 200
        assert lines[0].startswith("time_s,rx0_analytic_diffusion")

    def test_run_is_reproducible(self, tmp_path):
        config_path = tmp_path / "small.yaml"
        config_path.write_text(yaml.safe_dump(small_document()))
        args = [
            "run", "--config", str(config_path), "--trials", "2", "--seed", "7",
            "--workers", "1", "--out",
        ]
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert CliRunner().invoke(cli, args + [str(out_a)]).exit_code == 0
        assert CliRunner().invoke(cli, args + [str(out_b)]).exit_code == 0
        name = "small_series.csv"
        assert (out_a / name).read_text() == (out_b / name).read_text()
        meta_a = json.loads((out_a / (name + ".meta.json")).read_text())
        meta_b = json.loads((out_b / (name + ".meta.json")).read_text())
        assert meta_a == meta_b
        assert meta_a["provenance"]["base_seed"] == 7
        assert meta_a["config_document"]["trials"] == 2

    def test_compare_reads_stored_bundle(self, tmp_path):
        config_path = tmp_path / "small.yaml"
        config_path.write_text(yaml.safe_dump(small_document()))
        run_result = CliRunner().invoke(
            cli,
            ["run", "--config", str(config_path), "--trials", "2", "--workers", "1",
             "--out", str(tmp_path)],
        )
        assert run_result.exit_code == 0
        result = CliRunner().invoke(
            cli,
            ["compare", "--results", str(tmp_path / "small_series.csv"), "--t-min", "1e-6"],
        )
        assert result.exit_code == 0
        assert "max |z|" in result.output
        assert "bound-violation fraction" in result.output
