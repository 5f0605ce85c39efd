"""Command-line front end: JSON on stdout, exit statuses, artifacts."""
import math

import orjson
import pandas as pd
import pytest
from click.testing import CliRunner

from app.cli import cli
from app.services.presets import PRESETS
from tests.conftest import TORUS_K2


@pytest.fixture
def invoke():
    runner = CliRunner()

    def _invoke(*args):
        result = runner.invoke(cli, list(args), catch_exceptions=False)
        return result, (orjson.loads(result.stdout) if result.stdout.strip() else None)
    return _invoke


class TestConstant:

    def test_torus_preset(self, invoke):
        result, record = invoke("constant", "--model", "torus-taikov")
        assert result.exit_code == 0
        assert record["constant_sq"] == pytest.approx(TORUS_K2, abs=1e-8)
        assert record["constant"] == pytest.approx(math.sqrt(TORUS_K2), abs=1e-8)
        assert record["status"] == "converged"
        assert record["mode"] == "mean-squared"

    def test_output_is_byte_identical(self, invoke):
        first, _ = invoke("constant", "--model", "torus-taikov")
        second, _ = invoke("constant", "--model", "torus-taikov")
        assert first.stdout_bytes == second.stdout_bytes

    def test_hlp_flag(self, invoke):
        result, record = invoke("constant", "--model", "torus-hlp", "--hlp")
        assert result.exit_code == 0
        assert record["mode"] == "hlp"
        assert record["constant_sq"] == pytest.approx(0.5)

    def test_weights_flag(self, invoke):
        _, record = invoke("constant", "--model", "torus-taikov", "--h", "1,4")
        assert record["h"] == [1.0, 4.0]
        assert record["constant_sq"] == pytest.approx(math.pi / 2 / math.tanh(math.pi / 2) - 1, abs=1e-8)

    def test_multiplicative_hlp(self, invoke):
        result, record = invoke("constant", "--model", "torus-hlp", "--multiplicative", "--hlp")
        assert result.exit_code == 0
        assert record["mode"] == "multiplicative-hlp"
        assert record["sharp_factor"] == pytest.approx(1.0, rel=1e-8)
        assert record["lambda"] == [0.5, 0.5]

    def test_multiplicative_needs_lambda(self, invoke):
        result, record = invoke("constant", "--model", "torus-unfolded", "--multiplicative")
        assert result.exit_code == 1
        assert record["error"]["type"] == "DomainError"

    def test_vacuous_spec_exits_2(self, invoke, tmp_path):
        spec = tmp_path / "vacuous.yaml"
        spec.write_text("family: torus\nk: 1\nr_list: [0, 1]\n", encoding="utf-8")
        result, record = invoke("constant", "--model", str(spec))
        assert result.exit_code == 2
        assert record["constant_sq"] == "inf"
        assert record["model"] == "vacuous"

    def test_malformed_spec_reports_line(self, invoke, tmp_path):
        spec = tmp_path / "bad.yaml"
        spec.write_text("family: torus\nr_list: [0, 1]\nfunctional: pointwise\n", encoding="utf-8")
        result, record = invoke("constant", "--model", str(spec))
        assert result.exit_code == 1
        assert record["error"]["type"] == "ModelSpecError"
        assert record["error"]["line"] == 3
        assert record["error"]["field"] == "functional"

    def test_unknown_model(self, invoke):
        result, record = invoke("constant", "--model", "nowhere")
        assert result.exit_code == 1
        assert record["error"]["field"] == "model"

    def test_curve_csv(self, invoke, tmp_path):
        path = tmp_path / "curve.csv"
        result, _ = invoke("constant", "--model", "torus-taikov", "--curve", str(path), "--curve-level", "50")
        assert result.exit_code == 0
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["N", "partial_sum"]
        assert frame["N"].tolist() == list(range(1, 51))
        assert frame["partial_sum"].iloc[0] == pytest.approx(1.0)

    def test_output_file(self, invoke, tmp_path):
        path = tmp_path / "record.json"
        result, record = invoke("constant", "--model", "torus-taikov", "--output", str(path))
        assert result.exit_code == 0
        assert record is None
        assert orjson.loads(path.read_bytes())["constant_sq"] == pytest.approx(TORUS_K2, abs=1e-8)

    def test_config_file_overrides_flags(self, invoke, tmp_path):
        config = tmp_path / "run.yaml"
        config.write_text("h: [1, 4]\n", encoding="utf-8")
        _, record = invoke("--config", str(config), "constant", "--model", "torus-taikov", "--h", "1,1")
        assert record["h"] == [1.0, 4.0]

    def test_invalid_config_key(self, invoke, tmp_path):
        config = tmp_path / "run.yaml"
        config.write_text("bogus: 1\n", encoding="utf-8")
        result, record = invoke("--config", str(config), "constant", "--model", "torus-taikov")
        assert result.exit_code == 1
        assert "bogus" in record["error"]["message"]


class TestStechkin:

    def test_single_budget(self, invoke):
        result, record = invoke("stechkin", "--model", "stechkin-single", "--budget", "0.25")
        assert result.exit_code == 0
        assert record["mu"] == pytest.approx(1.0, rel=1e-12)
        assert record["error"] == pytest.approx(0.5, rel=1e-12)
        assert record["n_star"] == 0.0

    def test_sqrt_convention_and_lower_bound(self, invoke):
        _, record = invoke("stechkin", "--model", "stechkin-single", "--budget", "0.5",
                           "--convention", "sqrt", "--lower-level", "1")
        row = record["solutions"][0]
        assert record["convention"] == "sqrt"
        assert row["lower_bound"] == pytest.approx(row["error"], rel=1e-12)

    def test_below_n_star_exits_2(self, invoke, tmp_path):
        spec = tmp_path / "two.yaml"
        spec.write_text(
            "family: explicit\n"
            "entries:\n"
            "  - {index: 1, c: 1.0, b: [1.0], d: [0.0]}\n"
            "  - {index: 2, c: 1.0, b: [1.0], d: [1.0]}\n"
            "stechkin: {c_orders: [0], d_orders: [0]}\n",
            encoding="utf-8",
        )
        result, record = invoke("stechkin", "--model", str(spec), "--budget", "0.5")
        assert result.exit_code == 2
        assert record["error"] == "inf"
        assert record["solutions"][0]["status"] == "below-n-star"

    def test_grid_writes_tradeoff_table(self, invoke, tmp_path):
        path = tmp_path / "tradeoff.csv"
        result, record = invoke("stechkin", "--model", "torus-stechkin", "--grid", "5", "--curve", str(path))
        assert result.exit_code == 0
        assert len(record["solutions"]) == 5
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["N", "mu", "E_N", "status"]
        assert frame["E_N"].is_monotonic_decreasing

    def test_needs_budget_or_grid(self, invoke):
        result, record = invoke("stechkin", "--model", "stechkin-single")
        assert result.exit_code == 1
        assert record["error"]["type"] == "DomainError"


class TestVerify:

    def test_solyar_harmonic(self, invoke):
        result, record = invoke("verify", "solyar", "--harmonic", "1")
        assert result.exit_code == 0
        assert record["ratio"] == pytest.approx(1.0, abs=1e-12)

    def test_solyar_scan(self, invoke):
        result, record = invoke("verify", "solyar", "--p", "3", "--trials", "30", "--seed", "4")
        assert result.exit_code == 0
        assert not record["violated"]
        assert record["max_ratio"] <= 1 + 1e-8

    def test_taikov_scan(self, invoke):
        result, record = invoke("verify", "taikov", "--model", "torus-taikov", "--trials", "200", "--seed", "1")
        assert result.exit_code == 0
        assert not record["violated"]
        assert record["trials"] == 200
        assert record["max_ratio"] <= record["constant_sq"]

    def test_taikov_needs_model(self, invoke):
        result, record = invoke("verify", "taikov")
        assert result.exit_code == 1
        assert "needs a model" in record["error"]["message"]


class TestCatalog:

    def test_list(self, invoke):
        result, record = invoke("catalog", "list")
        assert result.exit_code == 0
        assert [p["name"] for p in record["presets"]] == sorted(PRESETS)

    def test_show(self, invoke):
        _, record = invoke("catalog", "show", "torus-hlp")
        assert record["spec"]["functional"] == "norm"
        assert record["spec"]["lambda"] == [0.5, 0.5]

    def test_show_unknown(self, invoke):
        result, record = invoke("catalog", "show", "nope")
        assert result.exit_code == 1
        assert record["error"]["type"] == "ModelSpecError"
