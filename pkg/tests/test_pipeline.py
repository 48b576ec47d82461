"""Pipeline, serialization and CLI tests on small synthetic datasets."""

import csv
import subprocess
import sys

import numpy as np
import pytest

from mtsgen import (ArmaGarchParams, ConfigError, InputError, PipelineConfig,
                    load_dataset, load_model, run_pipeline, save_model)
from mtsgen.datagen import GaussianCopulaSampler, equicorrelation, simulate_mts
from mtsgen.pipeline import Dataset, fit_mts, write_metrics


def write_csv(path, values, times=None):
    d = values.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"s{j}" for j in range(d)])
        for i, row in enumerate(values):
            w.writerow([times[i] if times else i] + [repr(float(v)) for v in row])


@pytest.fixture(scope="module")
def synthetic_csv(tmp_path_factory):
    """A small 2-dim series with GARCH margins and a Gaussian copula."""
    params = [ArmaGarchParams(mu=0.0, phi=[0.2], gamma=[0.0], omega=0.05,
                              alpha=[0.1], beta=[0.8], nu=6.0)
              for _ in range(2)]
    cop = GaussianCopulaSampler(equicorrelation(2, 0.6))
    x = simulate_mts(params, cop, 260, np.random.default_rng(0))
    path = tmp_path_factory.mktemp("data") / "series.csv"
    write_csv(path, x)
    return str(path)


class TestLoadDataset:
    def test_difference_transform(self, tmp_path):
        p = tmp_path / "d.csv"
        write_csv(p, np.array([[1.0], [3.0], [6.0]]))
        ds = load_dataset(p, transform="difference", tau=1)
        np.testing.assert_allclose(ds.values[:, 0], [2.0, 3.0])

    def test_log_returns(self, tmp_path):
        p = tmp_path / "lr.csv"
        write_csv(p, np.array([[1.0], [np.e], [np.e]]))
        ds = load_dataset(p, transform="log_returns", tau=1)
        assert ds.values[0, 0] == pytest.approx(1.0)

    def test_log_returns_nonpositive_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        write_csv(p, np.array([[1.0], [-2.0], [3.0]]))
        with pytest.raises(InputError, match="row 2, column 1"):
            load_dataset(p, transform="log_returns", tau=1)

    def test_non_numeric_cell_named(self, tmp_path):
        p = tmp_path / "nn.csv"
        p.write_text("t,a\n0,1.0\n1,oops\n2,2.0\n")
        with pytest.raises(InputError, match="row 3, column 2"):
            load_dataset(p, tau=1)

    def test_unsorted_times_rejected(self, tmp_path):
        p = tmp_path / "ts.csv"
        write_csv(p, np.ones((3, 1)) * [[1], [2], [3]], times=[3, 1, 2])
        with pytest.raises(InputError, match="strictly increasing"):
            load_dataset(p, tau=1)

    def test_default_train_fraction(self, tmp_path):
        p = tmp_path / "tf.csv"
        write_csv(p, np.arange(10, dtype=float)[:, None] ** 1.5)
        assert load_dataset(p).tau == 7

    def test_missing_file(self):
        with pytest.raises(InputError):
            load_dataset("/no/such/file.csv")

    def test_tau_bounds(self):
        with pytest.raises(InputError):
            Dataset(name="x", times=[0, 1], values=np.ones((2, 1)),
                    columns=["a"], transform="none", tau=2)


class TestPipelineConfig:
    def test_round_trip_dict(self):
        cfg = PipelineConfig(dependence="empirical", seed=9)
        assert PipelineConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict({"not_a_key": 1})

    def test_unknown_dependence_rejected(self):
        with pytest.raises(ConfigError):
            PipelineConfig(dependence="vine")

    def test_hash_stable_and_sensitive(self):
        a = PipelineConfig(seed=1)
        b = PipelineConfig(seed=1)
        c = PipelineConfig(seed=2)
        assert a.config_hash == b.config_hash
        assert a.config_hash != c.config_hash
        assert len(a.config_hash) == 12


@pytest.fixture(scope="module")
def small_cfg():
    return PipelineConfig(dependence="empirical", n_pth=200, n_rep=10, seed=7)


@pytest.fixture(scope="module")
def pipeline_run(synthetic_csv, small_cfg):
    ds = load_dataset(synthetic_csv, tau=200)
    return ds, run_pipeline(small_cfg, ds)


class TestRunPipeline:
    def test_one_row_per_metric(self, pipeline_run, small_cfg):
        _, result = pipeline_run
        metrics = {r["metric"] for r in result.metrics}
        assert metrics == {"AMMD", "AMSE", "AVS^0.25", "VEAR_0.05"}
        assert all(r["config_hash"] == small_cfg.config_hash
                   for r in result.metrics)

    def test_rerun_is_byte_identical(self, pipeline_run, small_cfg):
        ds, result = pipeline_run
        again = run_pipeline(small_cfg, ds)
        assert again.metrics == result.metrics

    def test_shapes(self, pipeline_run):
        ds, result = pipeline_run
        n_test = ds.n_obs - ds.tau
        assert result.paths.shape == (n_test, 200, 2)
        assert result.u_test.shape == (n_test, 2)
        assert result.var_series.shape == (n_test,)

    def test_metrics_file_format(self, pipeline_run, tmp_path):
        _, result = pipeline_run
        out = tmp_path / "metrics.csv"
        write_metrics(result.metrics, out)
        with open(out, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
        assert set(rows[0]) == {"dataset", "model", "metric", "value",
                                "n_pth", "n_rep", "seed", "config_hash"}


class TestPcaPath:
    def test_reduction_and_empirical_margins(self, synthetic_csv):
        cfg = PipelineConfig(dependence="independence", pca_enabled=True,
                             pca_k_min=1, pca_threshold=0.5,
                             n_pth=100, n_rep=5, seed=3)
        ds = load_dataset(synthetic_csv, tau=200)
        model = fit_mts(cfg, ds)
        assert model.pca_enabled
        assert model.quantile_maps.mode == "empirical"
        assert 1 <= model.d_star <= 2

    def test_no_reduction_uses_scaled_t(self, pipeline_run):
        _, result = pipeline_run
        assert result.model.quantile_maps.mode == "scaled_t"
        assert result.model.pca.k == 2


class TestBootstrapPath:
    def test_mixture_forecasts_run(self, synthetic_csv):
        cfg = PipelineConfig(dependence="empirical", bootstrap_n_bt=3,
                             n_pth=100, n_rep=5, seed=4)
        ds = load_dataset(synthetic_csv, tau=200)
        result = run_pipeline(cfg, ds)
        assert result.model.dependence.n_bt == 3
        assert all(r["model"] == "empirical_bt" for r in result.metrics)


class TestSerialization:
    def test_round_trip_forecasts_identical(self, pipeline_run, tmp_path):
        ds, result = pipeline_run
        path = tmp_path / "model.npz"
        save_model(result.model, path)
        loaded = load_model(path)
        from mtsgen import forecast_paths
        a = forecast_paths(result.model, ds.values[:200], 50, 1,
                           np.random.default_rng(5))
        b = forecast_paths(loaded, ds.values[:200], 50, 1,
                           np.random.default_rng(5))
        np.testing.assert_array_equal(a.values, b.values)

    def test_bootstrap_round_trip(self, synthetic_csv, tmp_path):
        cfg = PipelineConfig(dependence="empirical_beta", bootstrap_n_bt=2,
                             n_pth=50, n_rep=5, seed=6)
        ds = load_dataset(synthetic_csv, tau=200)
        model = fit_mts(cfg, ds)
        path = tmp_path / "mix.npz"
        save_model(model, path)
        loaded = load_model(path)
        a = model.dependence.sample(30, np.random.default_rng(7))
        b = loaded.dependence.sample(30, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)

    def test_version_mismatch_rejected(self, pipeline_run, tmp_path):
        import json
        _, result = pipeline_run
        path = tmp_path / "model.npz"
        save_model(result.model, path)
        data = dict(np.load(path))
        meta = json.loads(bytes(data["__meta__"]).decode())
        meta["version"] = "something-else"
        data["__meta__"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
        np.savez(path, **data)
        with pytest.raises(InputError, match="version"):
            load_model(path)

    def test_truncated_file_rejected(self, pipeline_run, tmp_path):
        _, result = pipeline_run
        path = tmp_path / "model.npz"
        save_model(result.model, path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) // 3])
        with pytest.raises(InputError):
            load_model(path)


class TestCli:
    def run_cli(self, *args):
        return subprocess.run([sys.executable, "-m", "mtsgen.cli", *args],
                              capture_output=True, text=True)

    def test_fit_assess_report(self, synthetic_csv, tmp_path):
        model_path = tmp_path / "m.npz"
        r = self.run_cli("fit", "--data", synthetic_csv, "--seed", "7",
                         "--tau", "200", "--dependence", "empirical",
                         "--out", str(model_path))
        assert r.returncode == 0, r.stderr
        assert model_path.exists()

        metrics_path = tmp_path / "metrics.csv"
        r = self.run_cli("assess", "--data", synthetic_csv, "--seed", "7",
                         "--tau", "200", "--dependence", "empirical",
                         "--n-pth", "100", "--n-rep", "5",
                         "--model", str(model_path), "--out", str(metrics_path))
        assert r.returncode == 0, r.stderr

        report_path = tmp_path / "report.csv"
        r = self.run_cli("report", str(metrics_path), "--out", str(report_path))
        assert r.returncode == 0, r.stderr
        assert "AMMD" in report_path.read_text()

    def test_forecast_subcommand(self, synthetic_csv, tmp_path):
        model_path = tmp_path / "m.npz"
        self.run_cli("fit", "--data", synthetic_csv, "--seed", "1",
                     "--tau", "200", "--dependence", "independence",
                     "--out", str(model_path))
        out = tmp_path / "fc.npz"
        r = self.run_cli("forecast", "--data", synthetic_csv, "--seed", "1",
                         "--tau", "200", "--n-pth", "50",
                         "--model", str(model_path), "--out", str(out))
        assert r.returncode == 0, r.stderr
        saved = np.load(out)
        assert saved["paths"].shape == (60, 50, 2)

    def test_missing_data_exit_code(self, tmp_path):
        r = self.run_cli("fit", "--data", "/no/such.csv", "--seed", "1",
                         "--out", str(tmp_path / "m.npz"))
        assert r.returncode == 2

    def test_bad_config_exit_code(self, synthetic_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"dependence": "vine"}')
        r = self.run_cli("fit", "--data", synthetic_csv, "--seed", "1",
                         "--config", str(cfg), "--out", str(tmp_path / "m.npz"))
        assert r.returncode == 2

    def test_constant_series_numerical_exit_code(self, tmp_path):
        p = tmp_path / "const.csv"
        vals = np.ones((120, 1))
        write_csv(p, vals)
        r = self.run_cli("fit", "--data", str(p), "--seed", "1",
                         "--tau", "100", "--out", str(tmp_path / "m.npz"))
        assert r.returncode == 3
