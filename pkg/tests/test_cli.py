import csv
import io
import json
from fractions import Fraction

import pytest

from codedmr.cli import ExperimentConfig, compare_rows, main, render_csv
from codedmr.protocol import proposed_load


def test_gen_design_example(capsys, tmp_path):
    out = tmp_path / "d.json"
    assert main(["gen-design", "--q", "2", "--k", "3", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "K=6 N=4 groups=4" in text
    assert "L_prop=1/4 (0.25)" in text
    doc = json.loads(out.read_text())
    assert doc["classes"][0] == [[1, 2], [3, 4]]


def test_gen_design_k2_warns(capsys):
    assert main(["gen-design", "--q", "2", "--k", "2"]) == 0
    assert "k=2: no coding gain" in capsys.readouterr().err


def test_gen_design_large(capsys):
    assert main(["gen-design", "--q", "4", "--k", "4"]) == 0
    assert "N=64 groups=192" in capsys.readouterr().out


def test_gen_design_bad_params(capsys):
    assert main(["gen-design", "--q", "1", "--k", "3"]) == 2
    assert "error" in capsys.readouterr().err


def run_json(capsys, argv):
    rc = main(argv)
    return rc, json.loads(capsys.readouterr().out)


def test_run_terasort_coded(capsys, tmp_path):
    log = tmp_path / "log.csv"
    rc, doc = run_json(
        capsys,
        ["run", "--q", "2", "--k", "3", "--records", "100000", "--strategy", "coded", "--log-csv", str(log)],
    )
    assert rc == 0 and doc["verified"]
    assert abs(doc["measured_load"] - 0.25) <= 0.05 * 0.25
    assert log.read_text().splitlines()[0] == "sender,receiver_count,bytes,start_s,end_s,phase"
    assert len(log.read_text().splitlines()) == 1 + 12


def test_run_wordcount_single_copy_load(capsys):
    rc, doc = run_json(
        capsys,
        ["run", "--q", "2", "--k", "2", "--workload", "wordcount", "--records", "500", "--strategy", "uncoded1"],
    )
    assert rc == 0
    assert doc["measured_load"] == 0.75


def test_run_empty(capsys):
    rc, doc = run_json(capsys, ["run", "--records", "0", "--strategy", "coded"])
    assert rc == 0
    assert doc["shuffle_bits"] == 0


def test_run_bad_funcs(capsys):
    assert main(["run", "--q", "2", "--k", "3", "--funcs", "7"]) == 2


def test_run_writes_out(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", "--records", "1000", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["strategy"] == "coded"


def test_config_overrides_flags(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k": 4, "records": 2000, "strategy": "uncodedk"}))
    rc, doc = run_json(capsys, ["run", "--k", "3", "--records", "10", "--config", str(cfg)])
    assert rc == 0
    assert (doc["k"], doc["strategy"]) == (4, "uncodedk")


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["run", "--config", str(cfg)]) == 2


def test_env_seed(capsys, monkeypatch):
    monkeypatch.setenv("CODEDMR_SEED", "7")
    _, a = run_json(capsys, ["run", "--records", "500"])
    _, b = run_json(capsys, ["run", "--records", "500", "--seed", "7"])
    _, c = run_json(capsys, ["run", "--records", "500", "--seed", "8"])
    assert a["output_sha256"] == b["output_sha256"] != c["output_sha256"]
    monkeypatch.setenv("CODEDMR_SEED", "x")
    assert main(["run", "--records", "5"]) == 2


def test_gen_data(tmp_path, capsys):
    out = tmp_path / "recs.bin"
    assert main(["gen-data", "--records", "50", "--seed", "3", "--out", str(out)]) == 0
    assert out.stat().st_size == 5000
    capsys.readouterr()
    rc, doc = run_json(capsys, ["run", "--input", str(out), "--strategy", "uncoded1"])
    assert rc == 0 and doc["verified"]


BALANCED_16 = dict(workload="balanced", records=14336, headers=False)


def test_compare_speedup_13_125():
    cfg = ExperimentConfig(**BALANCED_16)
    table = compare_rows(cfg, [("uncoded1", 2, 8), ("coded", 2, 8)])
    assert table[0]["measured_load"] == Fraction(15, 16)
    assert table[1]["measured_load"] == Fraction(1, 14)
    assert Fraction(table[0]["shuffle_bits"], table[1]["shuffle_bits"]) == Fraction(105, 8)
    assert table[1]["speedup_bits"] == 13.125


def test_compare_identical_rows():
    table = compare_rows(ExperimentConfig(records=2000), [("coded", 2, 3), ("coded", 2, 3)])
    assert table[1]["speedup_bits"] == 1.0
    assert table[0]["shuffle_bits"] == table[1]["shuffle_bits"]


def test_compare_sweep_k_at_16_servers():
    rows = [("coded", 8, 2), ("coded", 4, 4), ("coded", 2, 8)]
    # 24-byte records keep every value length divisible by k - 1 for k in {2, 4, 8}
    table = compare_rows(ExperimentConfig(**BALANCED_16, record_size=24), rows)
    text = render_csv(table)
    parsed = list(csv.DictReader(io.StringIO(text)))
    for row, (_, q, k) in zip(parsed, rows):
        assert Fraction(row["analytic_load"]) == proposed_load(k, 16)
        assert Fraction(row["measured_load"]) == proposed_load(k, 16)


def test_compare_cli_output(capsys, tmp_path):
    out = tmp_path / "t.csv"
    argv = ["compare", "--records", "3000", "--row", "uncodedk:2:3", "--row", "coded:2:3", "--out", str(out)]
    assert main(argv) == 0
    text = capsys.readouterr().out
    header = text.splitlines()[0].split()
    assert header.index("codegen_s") < header.index("map_s") < header.index("encode_s")
    assert header.index("shuffle_s") < header.index("decode_s") < header.index("reduce_s") < header.index("total_s")
    first = out.read_text()
    assert main(argv) == 0
    assert out.read_text() == first


def test_compare_needs_two_rows():
    assert main(["compare", "--row", "coded:2:3"]) == 2


@pytest.mark.parametrize("row", ["coded:2", "fancy:2:3", "coded:1:3"])
def test_compare_bad_rows(row):
    assert main(["compare", "--row", row, "--row", "coded:2:3"]) == 2
