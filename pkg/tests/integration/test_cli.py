"""
Integration tests for the command-line interface.
"""
import json

import numpy as np
import pandas as pd
import pytest

from cspcr.main import main
from cspcr.schemas.ratio import SamplerModelFile


@pytest.fixture
def files(tmp_path, file_service, source_dataset, source_pool, target_pool, small_params):
    """Data, pools and the known sampler written to a temporary directory."""
    paths = {
        "data": tmp_path / "data.csv",
        "weighted": tmp_path / "weighted.csv",
        "zero": tmp_path / "zero.csv",
        "source": tmp_path / "source.csv",
        "target": tmp_path / "target.csv",
        "sampler": tmp_path / "sampler.json",
    }
    file_service.write_dataset(source_dataset, paths["data"])
    file_service.write_dataset(
        source_dataset, paths["weighted"], weights=np.linspace(0.5, 1.5, source_dataset.n)
    )
    file_service.write_dataset(source_dataset, paths["zero"], weights=np.zeros(source_dataset.n))
    file_service.write_pool(source_pool, paths["source"])
    file_service.write_pool(target_pool, paths["target"])
    file_service.write_model(
        SamplerModelFile(kind="gaussian-linear", coefficients=list(small_params.u)),
        paths["sampler"],
    )
    return {name: str(path) for name, path in paths.items()}


def run_test(files, out, *extra: str) -> int:
    return main(
        [
            "test",
            "--data", files["weighted"],
            "--sampler-model", files["sampler"],
            "--k", "5",
            "--seed", "42",
            "--out", str(out),
            *extra,
        ]
    )


class TestTestCommand:
    """Test `cspcr test`."""

    def test_weight_column_run_is_deterministic(self, files, tmp_path, capsys):
        first, second = tmp_path / "a.json", tmp_path / "b.json"

        assert run_test(files, first, "--weight-col", "w") == 0
        assert run_test(files, second, "--weight-col", "w") == 0

        assert first.read_bytes() == second.read_bytes()
        report = json.loads(first.read_text())
        assert report["method"] == "cspcr"
        assert report["K"] == 5
        assert "reject=" in capsys.readouterr().out

    def test_pcr_needs_no_ratio(self, files, tmp_path):
        out = tmp_path / "pcr.json"

        assert run_test(files, out, "--method", "pcr") == 0
        assert json.loads(out.read_text())["method"] == "pcr"

    def test_power_enhanced_with_target_pool(self, files, tmp_path):
        out = tmp_path / "pe.json"

        code = run_test(
            files, out, "--method", "cspcr-pe", "--weight-col", "w", "--target-pool", files["target"]
        )

        assert code == 0
        assert len(json.loads(out.read_text())["per_label"]["gamma"]) == 3

    def test_power_enhanced_custom_column(self, files, tmp_path):
        out = tmp_path / "pe.json"

        code = run_test(
            files,
            out,
            "--method", "cspcr-pe",
            "--weight-col", "w",
            "--control-variate", "custom-col", "z_1",
            "--target-mean-a", "1.0",
        )

        assert code == 0

    def test_power_enhanced_without_target_information(self, files, tmp_path, capsys):
        code = run_test(files, tmp_path / "pe.json", "--method", "cspcr-pe", "--weight-col", "w")

        assert code == 2
        assert "target" in capsys.readouterr().err

    def test_fitted_pools(self, files, tmp_path):
        out = tmp_path / "pools.json"

        assert run_test(files, out, "--pools", files["source"], files["target"]) == 0
        assert json.loads(out.read_text())["n"] == 80

    def test_ratio_split(self, files, tmp_path):
        out = tmp_path / "split.json"

        code = run_test(
            files, out, "--ratio-split", "0.5", "--target-pool", files["target"]
        )

        assert code == 0
        assert json.loads(out.read_text())["n"] == 40

    def test_importance_resampling(self, files, tmp_path):
        out = tmp_path / "is.json"

        assert run_test(files, out, "--method", "is", "--weight-col", "w", "--m-resample", "30") == 0
        assert json.loads(out.read_text())["n"] == 30

    def test_missing_ratio_source(self, files, tmp_path):
        assert run_test(files, tmp_path / "x.json") == 2

    def test_missing_data_flag(self, files, tmp_path, capsys):
        code = main(["test", "--sampler-model", files["sampler"], "--out", str(tmp_path / "x.json")])

        assert code == 2
        assert "--data" in capsys.readouterr().err

    def test_missing_data_file(self, files, tmp_path):
        code = main(
            [
                "test",
                "--data", str(tmp_path / "absent.csv"),
                "--sampler-model", files["sampler"],
                "--method", "pcr",
                "--out", str(tmp_path / "x.json"),
            ]
        )

        assert code == 2

    def test_zero_weights_are_numerical_error(self, files, tmp_path, capsys):
        code = main(
            [
                "test",
                "--data", files["zero"],
                "--sampler-model", files["sampler"],
                "--weight-col", "w",
                "--k", "5",
                "--out", str(tmp_path / "x.json"),
            ]
        )

        assert code == 3
        assert "error: " in capsys.readouterr().err

    @pytest.mark.parametrize("bad_weight", [np.nan, -1.0])
    def test_bad_weight_column_is_input_error(self, files, tmp_path, capsys, bad_weight):
        frame = pd.read_csv(files["weighted"])
        frame.loc[3, "w"] = bad_weight
        path = tmp_path / "bad.csv"
        frame.to_csv(path, index=False)

        code = main(
            [
                "test",
                "--data", str(path),
                "--sampler-model", files["sampler"],
                "--weight-col", "w",
                "--k", "5",
                "--out", str(tmp_path / "x.json"),
            ]
        )

        assert code == 2
        assert "row 3" in capsys.readouterr().err

    def test_surrogate_rank_needs_target_pool(self, files, tmp_path):
        code = run_test(
            files,
            tmp_path / "pe.json",
            "--method", "cspcr-pe",
            "--weight-col", "w",
            "--target-mean-a", "0.5",
        )

        assert code == 2

    def test_surrogate_rank_reports_target_shares(self, files, tmp_path):
        out = tmp_path / "pe.json"

        code = run_test(
            files,
            out,
            "--method", "cspcr-pe",
            "--weight-col", "w",
            "--control-variate", "surrogate-rank", "v_1",
            "--target-pool", files["target"],
        )

        assert code == 0
        shares = json.loads(out.read_text())["per_label"]["a_target_mean"]
        assert sum(shares) == pytest.approx(1.0)

    def test_weights_normalized_unless_disabled(self, files, tmp_path):
        frame = pd.read_csv(files["weighted"])
        frame["w"] *= 2.0
        doubled = tmp_path / "doubled.csv"
        frame.to_csv(doubled, index=False)
        out = tmp_path / "report.json"

        def weight_mean(*extra: str) -> float:
            assert run_test({**files, "weighted": str(doubled)}, out, "--weight-col", "w", *extra) == 0
            return json.loads(out.read_text())["diagnostics"]["weight_mean"]

        assert weight_mean() == pytest.approx(1.0)
        assert weight_mean("--no-normalize-weights") == pytest.approx(2.0)

    def test_invalid_config_is_usage_error(self, files, tmp_path):
        assert run_test(files, tmp_path / "x.json", "--method", "pcr", "--l", "1") == 2


class TestRatioCommands:
    """Test `cspcr ratio-fit` and `cspcr sampler-fit`."""

    def test_ratio_model_feeds_test(self, files, tmp_path):
        model = tmp_path / "ratio.json"
        out = tmp_path / "report.json"

        assert main(
            [
                "ratio-fit",
                "--source", files["source"],
                "--target", files["target"],
                "--mode", "factorized",
                "--out", str(model),
            ]
        ) == 0
        assert json.loads(model.read_text())["schema_version"] == 1
        assert run_test(files, out, "--ratio-model", str(model)) == 0

    def test_classifier_ratio(self, files, tmp_path):
        model = tmp_path / "ratio.json"

        code = main(
            [
                "ratio-fit",
                "--source", files["source"],
                "--target", files["target"],
                "--mode", "classifier",
                "--out", str(model),
            ]
        )

        assert code == 0
        assert json.loads(model.read_text())["mode"] == "classifier"

    def test_sampler_fit(self, files, tmp_path):
        model = tmp_path / "sampler.json"

        code = main(["sampler-fit", "--pool", files["target"], "--out", str(model)])

        assert code == 0
        assert json.loads(model.read_text())["kind"] == "gaussian-linear"


class TestSimulateCommand:
    """Test `cspcr simulate`."""

    def _simulate(self, out, *extra: str) -> int:
        return main(
            [
                "simulate",
                "--preset", "l-sweep",
                "--reps", "1",
                "--k", "3",
                "--seed", "9",
                "--set", "n_labeled=40",
                "--set", "q=2",
                "--out", str(out),
                *extra,
            ]
        )

    def test_single_rep_table(self, tmp_path):
        out = tmp_path / "rates.csv"

        assert self._simulate(out) == 0

        frame = pd.read_csv(out)
        assert list(frame["sweep_value"]) == [2.0, 3.0, 5.0, 10.0, 15.0, 20.0]
        assert set(frame["reject_rate"]) <= {0.0, 1.0}

    def test_threads_do_not_change_table(self, tmp_path):
        serial, parallel = tmp_path / "serial.csv", tmp_path / "parallel.csv"

        assert self._simulate(serial, "--threads", "1") == 0
        assert self._simulate(parallel, "--threads", "2") == 0

        assert serial.read_bytes() == parallel.read_bytes()

    def test_unknown_override(self, tmp_path):
        assert self._simulate(tmp_path / "x.csv", "--set", "colour=3") == 2

    def test_unknown_preset(self, tmp_path):
        code = main(["simulate", "--preset", "nope", "--out", str(tmp_path / "x.csv")])

        assert code == 2
