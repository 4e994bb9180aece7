"""Command-line workflow: configs, artifacts, exit codes, determinism."""

import json

import numpy as np
import pytest

from tsbayes.cli import main

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")


def write_config(path, **overrides):
    cfg = {
        "data": {"path": "builtin:ar1", "column": "y", "frequency": 1},
        "model": {"family": "sarima", "order": [1, 0, 0]},
        "sampler": {"chains": 2, "iter": 300, "seed": 1},
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture(scope="module")
def fit_dir(tmp_path_factory):
    td = tmp_path_factory.mktemp("cli")
    cfg = write_config(td / "cfg.json")
    out = td / "fit"
    assert main(["fit", str(cfg), "--out", str(out)]) == 0
    return out


class TestFit:
    def test_summary_header_line(self, fit_dir, capsys):
        text = (fit_dir / "summary.txt").read_text()
        assert text.splitlines()[0] == "y ~ Sarima(1,0,0)(0,0,0)[1]"

    def test_artifacts_present(self, fit_dir):
        for name in ("draws.csv", "udraws.csv", "sampler_report.json",
                     "summary.csv", "pointwise_loglik.csv",
                     "fitted_quantiles.csv", "residual_quantiles.csv",
                     "series.csv", "acf.csv", "pacf.csv", "model.json"):
            assert (fit_dir / name).exists(), name

    def test_rerun_same_seed_is_byte_identical(self, fit_dir, tmp_path):
        cfg = write_config(tmp_path / "cfg.json")
        assert main(["fit", str(cfg), "--out", str(tmp_path / "again")]) == 0
        for name in ("draws.csv", "udraws.csv", "summary.csv"):
            assert (tmp_path / "again" / name).read_bytes() == (fit_dir / name).read_bytes()

    def test_missing_config(self, tmp_path, capsys):
        assert main(["fit", str(tmp_path / "nope.json")]) == 2
        assert "not found" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["fit", str(bad)]) == 2
        assert "JSON" in capsys.readouterr().err

    def test_unknown_prior_parameter(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "cfg.json", priors={"theta9": "normal(0,1)"})
        assert main(["fit", str(cfg), "--out", str(tmp_path / "x")]) == 2
        assert "theta9" in capsys.readouterr().err

    def test_missing_data_file(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "cfg.json",
                           data={"path": "no_such.csv", "column": 0})
        assert main(["fit", str(cfg), "--out", str(tmp_path / "x")]) == 2
        assert "no_such.csv" in capsys.readouterr().err

    def test_prior_override_lands_in_model_json(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", priors={"ar": "normal(0, 0.3)"})
        out = tmp_path / "p"
        assert main(["fit", str(cfg), "--out", str(out)]) == 0
        meta = json.loads((out / "model.json").read_text())
        assert any("normal (mu = 0 , sd = 0.3 )" in line
                   for line in meta["model"]["priors"])


class TestAuto:
    def test_search_trace_artifact(self, tmp_path, capsys):
        out = tmp_path / "a"
        rc = main(["auto", "--data", "src/tsbayes/data/ar1.csv",
                   "--column", "y", "--chains", "1", "--iter", "200",
                   "--out", str(out), "--trace"])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "order search:" in stdout
        assert "selected order" in stdout
        trace = (out / "search_trace.csv").read_text().splitlines()
        assert trace[0] == "p,d,q,P,D,Q,bic,converged"
        assert len(trace) > 4
        assert (out / "summary.txt").exists()


class TestForecast:
    def test_rows_and_ordering(self, fit_dir, capsys):
        assert main(["forecast", str(fit_dir), "--horizon", "12",
                     "--seed", "5"]) == 0
        rows = (fit_dir / "forecast.csv").read_text().splitlines()
        assert rows[0] == "horizon,mean,q5,q50,q95"
        assert len(rows) == 13
        for line in rows[1:]:
            _, _, q5, q50, q95 = map(float, line.split(","))
            assert q5 <= q50 <= q95

    def test_deterministic_under_seed(self, fit_dir, tmp_path):
        out1, out2 = tmp_path / "f1", tmp_path / "f2"
        main(["forecast", str(fit_dir), "--horizon", "6", "--seed", "5",
              "--out", str(out1), "--draws"])
        main(["forecast", str(fit_dir), "--horizon", "6", "--seed", "5",
              "--out", str(out2), "--draws"])
        assert (out1 / "forecast.csv").read_bytes() == (out2 / "forecast.csv").read_bytes()
        assert (out1 / "forecast_draws.csv").read_bytes() == (out2 / "forecast_draws.csv").read_bytes()

    def test_flat_forecast_for_near_deterministic_ramp(self, tmp_path, capsys):
        t = np.arange(120.0)
        y = 3.0 + 1.0 * t + np.random.default_rng(0).normal(0, 1e-3, 120)
        data = tmp_path / "ramp.csv"
        data.write_text("y\n" + "\n".join(f"{v:.17g}" for v in y))
        cfg = write_config(
            tmp_path / "cfg.json",
            data={"path": str(data), "column": "y", "frequency": 1},
            model={"family": "sarima", "order": [0, 1, 0]},
            sampler={"chains": 1, "iter": 300, "seed": 2},
        )
        out = tmp_path / "ramp-fit"
        assert main(["fit", str(cfg), "--out", str(out)]) == 0
        assert main(["forecast", str(out), "--horizon", "5", "--seed", "1"]) == 0
        rows = (out / "forecast.csv").read_text().splitlines()[1:]
        for h, line in enumerate(rows, start=1):
            _, mean, q5, _, q95 = map(float, line.split(","))
            assert abs(mean - (y[-1] + h)) < 0.05
            assert q95 - q5 < 0.1

    def test_bad_horizon(self, fit_dir, capsys):
        assert main(["forecast", str(fit_dir), "--horizon", "0"]) == 2

    def test_not_a_fit_dir(self, tmp_path, capsys):
        assert main(["forecast", str(tmp_path), "--horizon", "3"]) == 2


class TestCompare:
    @staticmethod
    @pytest.fixture(scope="class")
    def two_fits(tmp_path_factory):
        td = tmp_path_factory.mktemp("cmp")
        a = write_config(td / "a.json")
        b = write_config(td / "b.json",
                         model={"family": "sarima", "order": [0, 0, 1]})
        assert main(["fit", str(a), "--out", str(td / "ar")]) == 0
        assert main(["fit", str(b), "--out", str(td / "ma")]) == 0
        return td / "ar", td / "ma"

    def test_loo_table(self, two_fits, capsys):
        ar, ma = two_fits
        assert main(["compare", str(ar), str(ma), "--method", "loo"]) == 0
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert "elpd_diff" in lines[0]
        assert lines[1].split()[1] == "0.00"  # best row, zero difference
        assert {lines[1].split()[0], lines[2].split()[0]} == {"ar", "ma"}

    def test_identical_fits_zero_diff(self, two_fits, tmp_path, capsys):
        import shutil

        ar, _ = two_fits
        clone = tmp_path / "clone"
        shutil.copytree(ar, clone)
        assert main(["compare", str(ar), str(clone), "--method", "loo"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert float(lines[1].split()[1]) == 0.0
        assert float(lines[2].split()[1]) == 0.0

    def test_bf_line_format(self, two_fits, capsys):
        ar, ma = two_fits
        assert main(["compare", str(ar), str(ma), "--method", "bf"]) == 0
        out = capsys.readouterr().out.strip()
        assert out.startswith("Estimated log Bayes factor in favor of ar over ma: ")
        float(out.rsplit(":", 1)[1])  # value parses

    def test_bf_needs_exactly_two(self, two_fits, capsys):
        ar, ma = two_fits
        assert main(["compare", str(ar), str(ma), str(ar), "--method", "bf"]) == 2

    def test_waic_and_bic_tables(self, two_fits, capsys):
        ar, ma = two_fits
        assert main(["compare", str(ar), str(ma), "--method", "waic"]) == 0
        assert "elpd_waic" in capsys.readouterr().out
        assert main(["compare", str(ar), str(ma), "--method", "bic"]) == 0
        assert "bic" in capsys.readouterr().out

    def test_mismatched_lengths(self, two_fits, tmp_path, capsys):
        ar, _ = two_fits
        short = write_config(
            tmp_path / "s.json",
            data={"path": "builtin:monthly", "column": "value", "frequency": 1},
            sampler={"chains": 1, "iter": 200, "seed": 1},
        )
        assert main(["fit", str(short), "--out", str(tmp_path / "short")]) == 0
        assert main(["compare", str(ar), str(tmp_path / "short"),
                     "--method", "loo"]) == 2
        assert "incomparable" in capsys.readouterr().err
