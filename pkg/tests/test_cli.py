import json
from pathlib import Path

import numpy as np
import pytest

from rlsm.chain import load_chain
from rlsm.cli import run
from rlsm.network import load_network


def write_config(path, payload):
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def dir_bytes(root, skip=()):
    out = {}
    for p in sorted(Path(root).rglob("*")):
        if p.is_file() and p.name not in skip:
            out[p.relative_to(root).as_posix()] = p.read_bytes()
    return out


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One simulated network plus two short fits, shared across tests."""
    root = tmp_path_factory.mktemp("cli")
    assert run(["simulate", "--config", write_config(root / "sim.json", {"n": 20}),
                "--out", str(root / "sim"), "--seed", "5"]) == 0
    fit_cfg = {"warmup_iters": 150, "sampling_iters": 300}
    assert run(["fit", "--config", write_config(root / "fit.json", fit_cfg),
                "--network", str(root / "sim/network.csv"),
                "--out", str(root / "fit_dd"), "--seed", "1"]) == 0
    assert run(["fit", "--config", write_config(root / "fit.json", fit_cfg),
                "--network", str(root / "sim/network.csv"),
                "--out", str(root / "fit_ei"), "--seed", "1",
                "--variant", "edge-independent"]) == 0
    return root


class TestValidation:
    def test_missing_required_key_is_exit_one(self, tmp_path):
        assert run(["simulate", "--out", str(tmp_path / "o")]) == 1

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", {"n": 10, "bogus": 1})
        assert run(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 1

    def test_wrong_type_rejected(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", {"n": "twenty"})
        assert run(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 1

    def test_malformed_json_rejected(self, tmp_path):
        bad = tmp_path / "c.json"
        bad.write_text("{not json", encoding="utf-8")
        assert run(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1

    def test_missing_config_file_rejected(self, tmp_path):
        assert run(["simulate", "--config", str(tmp_path / "nope.json"),
                    "--out", str(tmp_path / "o")]) == 1

    def test_unknown_variant_rejected(self, workspace, tmp_path):
        assert run(["fit", "--network", str(workspace / "sim/network.csv"),
                    "--out", str(tmp_path / "o"), "--variant", "quadratic"]) == 1

    def test_missing_network_file_rejected(self, tmp_path):
        assert run(["init", "--network", str(tmp_path / "none.csv"),
                    "--out", str(tmp_path / "o")]) == 1

    def test_missing_chain_rejected(self, workspace, tmp_path):
        cfg = write_config(tmp_path / "c.json", {"chain": str(tmp_path / "no.csv")})
        assert run(["summarize", "--config", cfg, "--out", str(tmp_path / "o")]) == 1

    def test_unknown_flag_is_exit_one(self, tmp_path):
        assert run(["simulate", "--frobnicate", "3"]) == 1

    def test_unknown_subcommand_is_exit_one(self):
        assert run(["transmogrify"]) == 1

    def test_failed_marker_written_on_late_validation_error(self, workspace, tmp_path):
        # compare discovers the invalid chain only after the run dir exists
        cfg = write_config(
            tmp_path / "c.json",
            {"network": str(workspace / "sim/network.csv"), "chains": []},
        )
        out = tmp_path / "o"
        assert run(["compare", "--config", cfg, "--out", str(out)]) == 1
        assert (out / "FAILED").is_file()


class TestSimulateCommand:
    def test_outputs_exist_and_parse(self, workspace):
        out = workspace / "sim"
        net = load_network(out / "network.csv")
        assert net.n == 20
        truth = read_json(out / "truth.json")
        assert len(truth["theta"]["s"]) == 20
        assert np.isfinite(truth["theta"]["rho"])
        stats = read_json(out / "stats.json")
        assert 0.0 <= stats["realized_density"] <= 1.0
        assert stats["realized_mean_rho_ij"] == pytest.approx(np.log(2.0), abs=1e-9)

    def test_outputs_carry_config_hash(self, workspace):
        out = workspace / "sim"
        digest = read_json(out / "config.json")["config_sha256"]
        assert len(digest) == 64
        for name in ("truth.json", "stats.json"):
            assert read_json(out / name)["config_sha256"] == digest

    def test_rerun_into_other_directory_is_byte_identical(self, workspace, tmp_path):
        cfg = write_config(tmp_path / "sim.json", {"n": 20})
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["simulate", "--config", cfg, "--out", str(a), "--seed", "5"]) == 0
        assert run(["simulate", "--config", cfg, "--out", str(b), "--seed", "5"]) == 0
        assert dir_bytes(a, skip=("config.json",)) == dir_bytes(b, skip=("config.json",))
        assert dir_bytes(a) == dir_bytes(workspace / "sim", skip=("config.json",)) | {
            "config.json": (a / "config.json").read_bytes()
        }

    def test_different_seed_changes_network(self, workspace, tmp_path):
        cfg = write_config(tmp_path / "sim.json", {"n": 20})
        out = tmp_path / "o"
        assert run(["simulate", "--config", cfg, "--out", str(out), "--seed", "6"]) == 0
        assert (out / "network.csv").read_bytes() != (
            workspace / "sim/network.csv"
        ).read_bytes()


class TestInitCommand:
    def test_writes_report(self, workspace, tmp_path):
        out = tmp_path / "ini"
        assert run(["init", "--network", str(workspace / "sim/network.csv"),
                    "--out", str(out)]) == 0
        report = read_json(out / "init.json")
        assert len(report["s0"]) == 20
        assert len(report["z0"]) == 20
        assert "config_sha256" in report
        assert "network_sha256" in report


class TestFitCommand:
    def test_chain_round_trips(self, workspace):
        chain = load_chain(
            workspace / "fit_dd/chain.csv", workspace / "fit_dd/chain.meta.json"
        )
        assert chain.n == 20
        assert chain.n_draws == 300
        assert chain.aligned
        assert "config_sha256" in chain.meta
        assert "network_sha256" in chain.meta

    def test_edge_independent_pins_reciprocity_columns(self, workspace):
        chain = load_chain(
            workspace / "fit_ei/chain.csv", workspace / "fit_ei/chain.meta.json"
        )
        assert np.all(chain.col("rho") == 0.0)
        assert np.all(chain.col("phi") == 0.0)

    def test_same_seed_reruns_byte_identical(self, workspace, tmp_path):
        cfg = write_config(
            tmp_path / "fit.json", {"warmup_iters": 150, "sampling_iters": 300}
        )
        out = tmp_path / "refit"
        assert run(["fit", "--config", cfg,
                    "--network", str(workspace / "sim/network.csv"),
                    "--out", str(out), "--seed", "1"]) == 0
        assert (out / "chain.csv").read_bytes() == (
            workspace / "fit_dd/chain.csv"
        ).read_bytes()
        assert (out / "summary.json").read_bytes() == (
            workspace / "fit_dd/summary.json"
        ).read_bytes()

    def test_summary_and_map_written(self, workspace):
        summary = read_json(workspace / "fit_dd/summary.json")
        assert "rho" in summary["params"]
        assert set(summary["phi_probs"]) == {"negative", "unit_interval", "above_one"}
        map_out = read_json(workspace / "fit_dd/map.json")
        assert np.isfinite(map_out["log_posterior"])
        assert len(map_out["theta"]["z"]) == 20


class TestCompareCommand:
    def test_two_variant_table(self, workspace, tmp_path):
        cfg = write_config(
            tmp_path / "cmp.json",
            {"chains": [str(workspace / "fit_dd/chain.csv"),
                        str(workspace / "fit_ei/chain.csv")]},
        )
        out = tmp_path / "cmp"
        assert run(["compare", "--config", cfg,
                    "--network", str(workspace / "sim/network.csv"),
                    "--out", str(out)]) == 0
        table = read_json(out / "comparison.json")
        assert len(table["rows"]) == 2
        by_variant = {row["variant"]: row for row in table["rows"]}
        assert (
            by_variant["distance-dependent"]["n_params"]
            - by_variant["edge-independent"]["n_params"]
            == 2
        )
        assert set(table["best"]) == {"aic", "bic", "dic"}
        lines = (out / "comparison.csv").read_text().strip().split("\n")
        assert len(lines) == 3
        assert lines[0].startswith("chain,variant,n_params")

    def test_single_chain_gives_one_row(self, workspace, tmp_path):
        cfg = write_config(
            tmp_path / "cmp.json", {"chains": [str(workspace / "fit_dd/chain.csv")]}
        )
        out = tmp_path / "cmp"
        assert run(["compare", "--config", cfg,
                    "--network", str(workspace / "sim/network.csv"),
                    "--out", str(out)]) == 0
        table = read_json(out / "comparison.json")
        assert len(table["rows"]) == 1
        assert all(table["rows"][0][f"best_{c}"] for c in ("aic", "bic", "dic"))

    def test_mismatched_network_rejected(self, workspace, tmp_path):
        other = tmp_path / "other"
        cfg_sim = write_config(tmp_path / "sim.json", {"n": 20})
        assert run(["simulate", "--config", cfg_sim, "--out", str(other),
                    "--seed", "77"]) == 0
        cfg = write_config(
            tmp_path / "cmp.json", {"chains": [str(workspace / "fit_dd/chain.csv")]}
        )
        assert run(["compare", "--config", cfg,
                    "--network", str(other / "network.csv"),
                    "--out", str(tmp_path / "cmp")]) == 1


class TestDiagnoseCommand:
    def test_outputs(self, workspace, tmp_path):
        cfg = write_config(
            tmp_path / "d.json",
            {"chain": str(workspace / "fit_dd/chain.csv"), "ppc_draws": 50},
        )
        out = tmp_path / "diag"
        assert run(["diagnose", "--config", cfg,
                    "--network", str(workspace / "sim/network.csv"),
                    "--out", str(out)]) == 0
        ppc = read_json(out / "ppc.json")
        assert 0.0 <= ppc["tail_probability"] <= 1.0
        assert len(ppc["replicates"]) == 50
        curve_lines = (out / "odds_curve.csv").read_text().strip().split("\n")
        assert curve_lines[0].startswith("low,high,midpoint,log_odds")

    def test_ppc_alias_matches_diagnose_bytes(self, workspace, tmp_path):
        cfg = write_config(
            tmp_path / "d.json",
            {"chain": str(workspace / "fit_dd/chain.csv"), "ppc_draws": 25},
        )
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["diagnose", "--config", cfg,
                    "--network", str(workspace / "sim/network.csv"),
                    "--out", str(a), "--seed", "3"]) == 0
        assert run(["ppc", "--config", cfg,
                    "--network", str(workspace / "sim/network.csv"),
                    "--out", str(b), "--seed", "3"]) == 0
        assert dir_bytes(a, skip=("config.json",)) == dir_bytes(b, skip=("config.json",))


class TestSummarizeCommand:
    def test_matches_fit_summary_content(self, workspace, tmp_path):
        cfg = write_config(
            tmp_path / "s.json", {"chain": str(workspace / "fit_dd/chain.csv")}
        )
        out = tmp_path / "summ"
        assert run(["summarize", "--config", cfg, "--out", str(out)]) == 0
        fresh = read_json(out / "summary.json")
        from_fit = read_json(workspace / "fit_dd/summary.json")
        assert fresh["params"] == from_fit["params"]
        assert fresh["phi_probs"] == from_fit["phi_probs"]
