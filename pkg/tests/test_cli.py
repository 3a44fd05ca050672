"""CLI orchestration, file schemas, and export round-trips."""

import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from spillnet import exports
from spillnet.cli import load_config, main
from spillnet.connect import measures

from test_connect import vd_from_theta
from test_identify import contiguous_spec

GEXF_NS = {"g": exports.GEXF_NAMESPACE}


def run_cli(*args):
    return main(list(args))


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    """One generated panel + config shared by the read-only CLI tests."""
    base = tmp_path_factory.mktemp("cli")
    code = run_cli(
        "gen-synth", "--out", str(base / "prices.csv"), "--config-out", str(base / "run.toml"),
        "--weeks", "130", "--seed", "11",
    )
    assert code == 0
    return base


def snapshot(directory: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.is_file()}


class TestFullRun:
    def test_outputs_exist_and_parse(self, synth_dir):
        out = synth_dir / "out_full"
        code = run_cli("--config", str(synth_dir / "run.toml"), "--out", str(out), "--dump-model")
        assert code == 0
        for scheme in ("clustered", "generalized", "orthogonalized"):
            for stem in ("vd", "report", "density", "network"):
                ext = {"vd": "csv", "report": "json", "density": "csv", "network": "gexf"}[stem]
                assert (out / f"{stem}_{scheme}.{ext}").exists()
        assert (out / "stats.csv").exists()
        assert (out / "model.json").exists()
        assert (out / "effective_config.toml").exists()

        report = json.loads((out / "report_clustered.json").read_text())
        assert report["ordering"] == "averaged"
        assert report["within_cluster"] + report["cross_cluster"] == pytest.approx(
            report["system_wide"], abs=1e-6
        )
        model = json.loads((out / "model.json").read_text())
        assert len(model["phi"]) == 3 and len(model["labels"]) == 6

        tree = ET.parse(out / "network_generalized.gexf")
        assert tree.getroot().tag == f"{{{exports.GEXF_NAMESPACE}}}gexf"
        nodes = tree.getroot().findall(".//g:node", GEXF_NS)
        assert len(nodes) == 6

    def test_vd_rows_sum_to_100_percent(self, synth_dir):
        out = synth_dir / "out_rows"
        assert run_cli(
            "--config", str(synth_dir / "run.toml"), "--out", str(out),
            "--scheme", "orthogonalized",
        ) == 0
        with (out / "vd_orthogonalized.csv").open() as handle:
            rows = list(csv.reader(handle))
        header = rows[0]
        assert header[0] == "label" and header[-1] == "from"
        for row in rows[1:7]:
            total = sum(float(c) for c in row[1:-1])
            assert total == pytest.approx(100.0, abs=1e-6)
        assert rows[7][0] == "to" and rows[8][0] == "net"

    def test_density_csv_schema(self, synth_dir):
        out = synth_dir / "out_rows"
        with (out / "density_orthogonalized.csv").open() as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["measure", "x", "density"]
        measures_seen = {r[0] for r in rows[1:]}
        assert measures_seen == {"to", "from", "net"}

    def test_two_runs_byte_identical(self, synth_dir):
        out = synth_dir / "out_det"
        args = ("--config", str(synth_dir / "run.toml"), "--out", str(out), "--dump-model")
        assert run_cli(*args) == 0
        first = snapshot(out)
        assert run_cli(*args) == 0
        assert snapshot(out) == first

    def test_effective_config_reproduces_run(self, synth_dir):
        out = synth_dir / "out_rt"
        assert run_cli("--config", str(synth_dir / "run.toml"), "--out", str(out)) == 0
        first = snapshot(out)
        assert run_cli("--config", str(out / "effective_config.toml")) == 0
        assert snapshot(out) == first

    def test_flag_overrides_apply(self, synth_dir):
        out = synth_dir / "out_flags"
        assert run_cli(
            "--config", str(synth_dir / "run.toml"), "--out", str(out),
            "--scheme", "generalized", "--horizon", "6", "--lags", "1",
        ) == 0
        report = json.loads((out / "report_generalized.json").read_text())
        assert report["horizon"] == 6
        assert not (out / "report_clustered.json").exists()
        effective = load_config(out / "effective_config.toml")
        assert effective.horizon == 6 and effective.lag_order == 1

    def test_node_attributes_attached_and_mismatch_tolerated(self, synth_dir):
        attrs = synth_dir / "caps.csv"
        attrs.write_text("label,size\nA1,1000\nA2,500\nZZ,1\n")
        config = synth_dir / "run_attrs.toml"
        config.write_text(
            f'node_attributes = "{attrs.name}"\n' + (synth_dir / "run.toml").read_text()
        )
        out = synth_dir / "out_attrs"
        assert run_cli("--config", str(config), "--out", str(out), "--scheme", "generalized") == 0
        tree = ET.parse(out / "network_generalized.gexf")
        values = {
            node.get("id"): {
                att.get("for"): att.get("value")
                for att in node.findall(".//g:attvalue", GEXF_NS)
            }
            for node in tree.getroot().findall(".//g:node", GEXF_NS)
        }
        assert values["A1"]["size"] == "1000"
        assert "size" not in values["B1"]  # not in the attribute file: omitted


class TestRollingRun:
    def test_rolling_outputs(self, synth_dir):
        out = synth_dir / "out_roll"
        assert run_cli(
            "--config", str(synth_dir / "run.toml"), "--out", str(out),
            "--mode", "rolling", "--window", "60", "--step", "10",
            "--scheme", "clustered,generalized", "--lags", "1", "--workers", "2",
        ) == 0
        for scheme in ("clustered", "generalized"):
            path = out / f"rolling_{scheme}.csv"
            with path.open() as handle:
                rows = list(csv.reader(handle))
            assert rows[0][:4] == ["date", "system_wide", "within", "cross"]
            assert "A1_to" in rows[0] and "A_net" in rows[0]
            assert len(rows) == 1 + (130 - 60) // 10 + 1
        with (out / "rolling_diff.csv").open() as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["date", "total_diff", "within_diff", "cross_diff"]
        totals = [float(r[1]) for r in rows[1:] if r[1]]
        assert totals and all(t > 0 for t in totals)


class TestDefaults:
    def test_minimal_config_gets_reference_constants(self, synth_dir):
        cfg = load_config(synth_dir / "run.toml")
        assert cfg.lag_order == 3
        assert cfg.horizon == 12
        assert cfg.window == 104
        assert cfg.step == 1
        assert cfg.cluster_order == "average"
        assert cfg.schemes == ("clustered", "generalized", "orthogonalized")


class TestExitCodes:
    def test_bad_config_returns_1(self, tmp_path):
        config = tmp_path / "bad.toml"
        config.write_text('inptu = "x.csv"\n')
        assert run_cli("--config", str(config)) == 1

    def test_missing_config_returns_1(self, tmp_path):
        assert run_cli("--config", str(tmp_path / "absent.toml")) == 1

    def test_bad_data_returns_2(self, tmp_path):
        prices = tmp_path / "prices.csv"
        prices.write_text("date,a\n2010-01-06,100\n2010-01-07,-5\n")
        config = tmp_path / "run.toml"
        config.write_text('input = "prices.csv"\n[clusters]\nx = ["a"]\n')
        assert run_cli("--config", str(config)) == 2

    def test_unknown_cluster_member_returns_2(self, synth_dir, tmp_path):
        config = tmp_path / "run.toml"
        config.write_text(
            f'input = "{synth_dir / "prices.csv"}"\n[clusters]\nx = ["NOPE"]\n'
        )
        assert run_cli("--config", str(config)) == 2


class TestGexfExport:
    def test_identity_theta_emits_no_edges(self, tmp_path):
        spec = contiguous_spec([2, 2])
        vdm = vd_from_theta(np.eye(4))
        report = measures(vdm, spec)
        path = tmp_path / "net.gexf"
        exports.write_gexf(vdm, report, path)
        tree = ET.parse(path)
        assert tree.getroot().findall(".//g:edge", GEXF_NS) == []
        assert len(tree.getroot().findall(".//g:node", GEXF_NS)) == 4

    def test_uniform_three_nodes_six_equal_edges(self, tmp_path):
        spec = contiguous_spec([3])
        theta = np.full((3, 3), 1.0 / 3.0)
        vdm = vd_from_theta(theta)
        report = measures(vdm, spec)
        path = tmp_path / "net.gexf"
        exports.write_gexf(vdm, report, path)
        edges = ET.parse(path).getroot().findall(".//g:edge", GEXF_NS)
        assert len(edges) == 6
        weights = {e.get("weight") for e in edges}
        assert len(weights) == 1

    def test_weight_text_round_trip(self, tmp_path, rng):
        theta = rng.uniform(0.01, 1.0, size=(3, 3))
        theta /= theta.sum(axis=1, keepdims=True)
        vdm = vd_from_theta(theta, labels=("x", "y", "z"))
        report = measures(vdm, contiguous_spec([3], labels=("x", "y", "z")))
        path = tmp_path / "net.gexf"
        exports.write_gexf(vdm, report, path)
        labels = {"x": 0, "y": 1, "z": 2}
        for edge in ET.parse(path).getroot().findall(".//g:edge", GEXF_NS):
            i = labels[edge.get("target")]
            j = labels[edge.get("source")]
            assert edge.get("weight") == f"{theta[i, j]:.10g}"

    def test_threshold_prunes_edges(self, tmp_path):
        theta = np.array([[0.9, 0.1], [5e-5, 0.99995]])
        theta /= theta.sum(axis=1, keepdims=True)
        vdm = vd_from_theta(theta)
        report = measures(vdm, contiguous_spec([2]))
        path = tmp_path / "net.gexf"
        exports.write_gexf(vdm, report, path)
        edges = ET.parse(path).getroot().findall(".//g:edge", GEXF_NS)
        assert len(edges) == 1  # the 5e-5 edge falls below the default threshold


class TestEntryPoint:
    def test_module_invocation(self, synth_dir):
        proc = subprocess.run(
            [sys.executable, "-m", "spillnet.cli", "--config", str(synth_dir / "run.toml"),
             "--out", str(synth_dir / "out_proc"), "--scheme", "generalized"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert "system-wide" in proc.stdout
