import json

import pytest
import yaml
from click.testing import CliRunner

from abba_ids import encoding
from abba_ids.cli import main
from abba_ids.config import ConfigError, config_echo, parse_config


def _write(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data) if name.endswith(".yaml") else json.dumps(data))
    return str(path)


def _invoke(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


def _strip_time(text):
    report = json.loads(text)
    report.pop("wall_time_s")
    return report


BASE = {
    "encoder": {"levels": 4, "seed_space": "0x10000"},
    "source": {"mean_gap": 15, "count": 20},
    "horizon": 800,
}


class TestRun:
    def test_honest_batch_has_no_detections(self, tmp_path):
        cfg = _write(tmp_path, {**BASE, "attack": {"kind": "none"}, "trials": 100})
        res = _invoke("run", cfg, "--json")
        assert res.exit_code == 0
        agg = json.loads(res.stdout)["aggregate"]
        assert agg["detected"] == 0 and agg["clean"] == 100

    def test_reproducible_except_wall_time(self, tmp_path):
        cfg = _write(tmp_path, {**BASE, "attack": {"kind": "tamper", "index": 3}, "trials": 30,
                                "rng_seed": 4})
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert _invoke("run", cfg, "--out", str(out1)).exit_code == 0
        assert _invoke("run", cfg, "--out", str(out2)).exit_code == 0
        assert _strip_time(out1.read_text()) == _strip_time(out2.read_text())

    def test_single_trial_report_has_streams(self, tmp_path):
        cfg = _write(tmp_path, {**BASE, "attack": {"kind": "delete"}}, "s.yaml")
        report = json.loads(_invoke("run", cfg, "--json").stdout)
        assert report["mode"] == "single"
        rec = report["trials"][0]
        assert len(rec["delivered_events"]) == len(rec["source_events"]) - 1
        assert "encoder.g_key" in report["defaults_applied"]

    def test_seed_and_trials_overrides(self, tmp_path):
        cfg = _write(tmp_path, {**BASE, "attack": {"kind": "tamper"}})
        report = json.loads(_invoke("run", cfg, "--json", "--seed", "7", "--trials", "5").stdout)
        assert report["config"]["rng_seed"] == 7 and report["aggregate"]["trials"] == 5

    def test_analytic_block_for_fixed_gap(self, tmp_path):
        data = {"encoder": {"seed_space": 2**64, "levels": 2},
                "source": {"fixed_gap": 2, "count": 2}, "attack": {"kind": "tamper", "index": 0},
                "horizon": 6, "trials": 10}
        report = json.loads(_invoke("run", _write(tmp_path, data), "--json").stdout)
        assert report["analytic"]["gap_agreement_prob"] == 0.5
        assert report["analytic"]["tree"]["permanent_escape"] == 0

    def test_echo_round_trips(self, tmp_path):
        cfg, _ = parse_config({**BASE, "attack": {"kind": "inject", "tick": 50, "symbol": 1}})
        again, defaults = parse_config(config_echo(cfg))
        assert again == cfg and defaults == []


class TestConfigErrors:
    def test_levels_below_two(self, tmp_path):
        cfg = _write(tmp_path, {"encoder": {"levels": 1}})
        res = _invoke("run", cfg)
        assert res.exit_code == 2
        assert res.stderr.startswith("config error: encoder.levels:")

    @pytest.mark.parametrize("data,path", [
        ({"encoder": {"bogus": 1}}, "encoder.bogus"),
        ({"encoder": {"o_family": {"kind": "affine", "offsets": [1, 1, 2, 3]}}}, "encoder.o_family"),
        ({"source": {"symbol_dist": [1.0]}}, "source.symbol_dist"),
        ({"attack": {"kind": "inject", "symbol": 0}}, "attack.tick"),
        ({"attack": {"kind": "teleport"}}, "attack.kind"),
        ({"trials": 0}, "trials"),
        ({"horizon": "soon"}, "horizon"),
    ])
    def test_paths(self, data, path):
        with pytest.raises(ConfigError) as info:
            parse_config(data)
        assert info.value.path == path

    def test_missing_file(self, tmp_path):
        res = _invoke("run", str(tmp_path / "nope.json"))
        assert res.exit_code == 2 and "cannot read" in res.stderr


class TestAnalyze:
    def test_gap_prob(self):
        res = _invoke("analyze", "--json", "gap-prob", "--gap", "2", "--levels", "2")
        assert json.loads(res.stdout)["result"]["probability"] == 0.5

    def test_tree(self, tmp_path):
        out = tmp_path / "tree.json"
        res = _invoke("analyze", "--out", str(out), "tree", "--p", "0.5,0.25", "--q", "0,0.1")
        assert res.exit_code == 0
        result = json.loads(out.read_text())["result"]
        assert result["undetected_by_level"] == [0.5, 0.125]
        assert result["permanent_escape"] == pytest.approx(0.0125)

    def test_tree_rejects_bad_probability(self):
        res = _invoke("analyze", "tree", "--p", "1.5", "--q", "0")
        assert res.exit_code == 2

    def test_correlation_families(self):
        mod = json.loads(_invoke("analyze", "--json", "correlation", "--family", "modular",
                                 "--pairs", "10", "--n-max", "16", "--p-max", "8").stdout)
        assert len(mod["result"]["violations"]) == 10
        prf = json.loads(_invoke("analyze", "--json", "correlation", "--pairs", "20").stdout)
        assert prf["result"]["violations"] == []

    def test_fixed_point(self, tmp_path):
        cfg = _write(tmp_path, {"encoder": {"seed_space": 16,
                                            "o_family": {"kind": "prf", "key": "0xabba"}}})
        res = json.loads(_invoke("analyze", "--json", "fixed-point", "--config", cfg).stdout)
        assert res["result"]["fixed_point_free"] is True
        assert res["result"]["checked"] == 64


class TestSelftest:
    def test_passes_and_is_deterministic(self):
        first = _invoke("selftest", "--json")
        assert first.exit_code == 0
        assert all(r["ok"] for r in json.loads(first.stdout))
        assert _invoke("selftest", "--json").stdout == first.stdout

    def test_sabotaged_seed_update_fails(self, monkeypatch):
        real = encoding.seed_update

        def broken(cfg, s, x):
            return s if x == 0 else real(cfg, s, x)

        monkeypatch.setattr(encoding, "seed_update", broken)
        res = _invoke("selftest")
        assert res.exit_code == 3
        assert "FAIL fixed-point freeness" in res.stdout
