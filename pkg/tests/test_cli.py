import csv
import subprocess
import sys

import pytest

from shardlab.cli import (
    ExperimentPlan,
    fit_loglog_slope,
    main,
    read_config,
    run_experiment,
)
from shardlab.corpus import SyntheticSpec


def run_cli(*argv):
    return main(list(argv))


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "corpus.txt"
    lines = [
        "a.gov/p0\talpha shared",
        "a.gov/p1\tbravo shared",
        "b.gov/p0\talpha bravo shared",
        "b.gov/p1\tcharlie shared",
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_plan_validation_before_any_work(tmp_path):
    with pytest.raises(ValueError, match="scheme"):
        ExperimentPlan(outdir=str(tmp_path), synthetic=SyntheticSpec(), schemes=("alphabetic",))
    with pytest.raises(ValueError, match="policy"):
        ExperimentPlan(outdir=str(tmp_path), synthetic=SyntheticSpec(), policies=("by-hash",))
    with pytest.raises(ValueError, match="codec"):
        ExperimentPlan(outdir=str(tmp_path), synthetic=SyntheticSpec(), codecs=("golomb",))
    with pytest.raises(ValueError, match="m_values"):
        ExperimentPlan(outdir=str(tmp_path), synthetic=SyntheticSpec(), m_values=(0,))
    with pytest.raises(ValueError, match="corpus source"):
        ExperimentPlan(outdir=str(tmp_path))


def test_run_experiment_golden_row(tmp_path, corpus_file):
    plan = ExperimentPlan(outdir=str(tmp_path / "out"), corpus_path=str(corpus_file),
                          schemes=("url",), policies=("round-robin",), codecs=("delta",),
                          m_values=(1,), seeds=(0,))
    written = run_experiment(plan)
    rows = read_rows(written["sizes"])
    assert len(rows) == 1
    row = rows[0]
    assert row["policy"] == "round-robin" and row["scheme"] == "url" and row["codec"] == "delta"
    assert row["docs"] == "4" and row["postings"] == "9"
    # URL order = input order here; lists: alpha [1,3], bravo [2,3], charlie [4],
    # shared [1,2,3,4] -> (1+4) + (4+1) + 5 + 4 = 19 bits.
    assert row["total_bits"] == "19"
    assert row["bpp"] == f"{19 / 9:.3f}"
    assert float(row["bpp_oh"]) >= float(row["bpp"])


def test_run_experiment_four_doc_instance_rnd(tmp_path):
    # The running 4-doc incidence (two private pairs plus one shared term): N=8.
    path = tmp_path / "four.txt"
    path.write_text("a.gov/p0\tshared alpha\na.gov/p1\tshared beta\n"
                    "a.gov/p2\tshared alpha\na.gov/p3\tshared beta\n", encoding="utf-8")
    plan = ExperimentPlan(outdir=str(tmp_path / "out"), corpus_path=str(path),
                          schemes=("rnd",), policies=("random",), codecs=("delta",),
                          m_values=(1,), seeds=(0,))
    (row,) = read_rows(run_experiment(plan)["sizes"])
    assert row["postings"] == "8"
    assert int(row["total_bits"]) >= 8  # delta spends at least one bit per posting


def test_run_experiment_deterministic_bytes(tmp_path, corpus_file):
    kwargs = dict(corpus_path=str(corpus_file), schemes=("rnd", "url"),
                  policies=("random",), codecs=("delta", "pfd"),
                  m_values=(1, 2), seeds=(3,))
    a = run_experiment(ExperimentPlan(outdir=str(tmp_path / "a"), **kwargs))
    b = run_experiment(ExperimentPlan(outdir=str(tmp_path / "b"), **kwargs))
    assert a["sizes"].read_bytes() == b["sizes"].read_bytes()


def test_run_experiment_cartesian_row_count_and_postings_constant(tmp_path, corpus_file):
    plan = ExperimentPlan(outdir=str(tmp_path / "out"), corpus_path=str(corpus_file),
                          schemes=("rnd", "url"), policies=("random", "m-slice"),
                          codecs=("delta",), m_values=(1, 2, 4), seeds=(0,))
    rows = read_rows(run_experiment(plan)["sizes"])
    assert len(rows) == 2 * 2 * 1 * 3 * 1
    assert {row["postings"] for row in rows} == {"9"}
    expected_order = [(p, s, str(m)) for p in ("random", "m-slice")
                      for s in ("rnd", "url") for m in (1, 2, 4)]
    assert [(r["policy"], r["scheme"], r["m"]) for r in rows] == expected_order


def test_run_experiment_surrogates(tmp_path, corpus_file):
    queries = tmp_path / "queries.txt"
    queries.write_text("alpha shared\nzzzz\n", encoding="utf-8")
    plan = ExperimentPlan(outdir=str(tmp_path / "out"), corpus_path=str(corpus_file),
                          schemes=("url",), policies=("round-robin", "m-slice"),
                          codecs=("delta",), m_values=(1, 2), seeds=(0,),
                          queries_path=str(queries))
    written = run_experiment(plan)
    rows = read_rows(written["surrogates"])
    # m-slice emits no surrogate rows (schema carries no scheme tag).
    assert [(r["policy"], r["m"]) for r in rows] == [("round-robin", "1"), ("round-robin", "2")]
    # m=1: T_d = df(alpha)+df(shared) = 2+4, T_c = min = 2.
    assert rows[0]["avg_td"] == "6.000" and rows[0]["avg_tc"] == "2.000"
    assert rows[0]["queries_evaluated"] == "1"


def test_fit_loglog_slope(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("m,avg_td\n1,100\n2,50\n4,25\n", encoding="utf-8")
    assert fit_loglog_slope(path, "m", "avg_td") == pytest.approx(-1.0)

    flat = tmp_path / "flat.csv"
    flat.write_text("m,avg_td\n1,7\n2,7\n4,7\n", encoding="utf-8")
    assert fit_loglog_slope(flat, "m", "avg_td") == pytest.approx(0.0)


def test_fit_loglog_slope_errors(tmp_path):
    single = tmp_path / "single.csv"
    single.write_text("m,avg_td\n2,100\n2,50\n", encoding="utf-8")
    with pytest.raises(ValueError, match="distinct"):
        fit_loglog_slope(single, "m", "avg_td")

    negative = tmp_path / "neg.csv"
    negative.write_text("m,avg_td\n1,100\n2,-5\n", encoding="utf-8")
    with pytest.raises(ValueError, match="positive"):
        fit_loglog_slope(negative, "m", "avg_td")

    missing = tmp_path / "missing.csv"
    missing.write_text("m,other\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="avg_td"):
        fit_loglog_slope(missing, "m", "avg_td")


def test_read_config(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# sweep\nm-values = 1,2,4\nschemes=rnd,url\n\n", encoding="utf-8")
    assert read_config(cfg) == {"m-values": "1,2,4", "schemes": "rnd,url"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("no equals sign\n", encoding="utf-8")
    with pytest.raises(ValueError, match="line 1"):
        read_config(bad)


def test_cli_ingest_and_synth(tmp_path, corpus_file, capsys):
    assert run_cli("ingest", "--corpus", str(corpus_file)) == 0
    assert "docs=4 terms=4 postings=9" in capsys.readouterr().out

    out = tmp_path / "synth.txt"
    assert run_cli("synth", "--out", str(out), "--docs", "30", "--hosts", "3", "--synth-seed", "5") == 0
    assert out.exists()
    assert run_cli("ingest", "--corpus", str(out)) == 0
    assert "docs=30" in capsys.readouterr().out


def test_cli_experiment_with_config_and_flag_override(tmp_path, corpus_file, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(f"corpus={corpus_file}\nschemes=rnd\nm-values=1\noutdir={tmp_path / 'cfgout'}\n",
                   encoding="utf-8")
    assert run_cli("experiment", "--config", str(cfg), "--m-values", "1,2") == 0
    rows = read_rows(tmp_path / "cfgout" / "sizes.csv")
    assert [r["m"] for r in rows] == ["1", "2"]  # flag overrode config's m-values


def test_cli_experiment_rejects_bad_names(tmp_path, corpus_file, capsys):
    code = run_cli("experiment", "--corpus", str(corpus_file), "--outdir", str(tmp_path),
                   "--schemes", "sorted-by-vibes")
    assert code == 1
    assert "unknown scheme" in capsys.readouterr().err


def test_cli_query_sim(tmp_path, corpus_file, capsys):
    queries = tmp_path / "queries.txt"
    queries.write_text("alpha shared\n", encoding="utf-8")
    out = tmp_path / "qs"
    assert run_cli("query-sim", "--corpus", str(corpus_file), "--queries", str(queries),
                   "--policies", "random,url-slice", "--m-values", "1,2", "--seeds", "1",
                   "--outdir", str(out)) == 0
    rows = read_rows(out / "surrogates.csv")
    assert len(rows) == 4
    assert {r["policy"] for r in rows} == {"random", "url-slice"}


def test_cli_verify_all_targets(tmp_path, capsys):
    assert run_cli("verify", "slice", "--m-values", "2,4") == 0
    assert "PASS" in capsys.readouterr().out
    csv_path = tmp_path / "delta.csv"
    assert run_cli("verify", "delta-m", "--m-values", "1,2,4", "--csv", str(csv_path)) == 0
    out = capsys.readouterr().out
    assert "identity=exact" in out
    assert csv_path.exists() and len(read_rows(csv_path)) == 3
    assert run_cli("verify", "url-example") == 0
    assert "exact_increase=158" in capsys.readouterr().out
    assert run_cli("verify", "urn", "--balls", "10000", "--urns", "50", "--trials", "500") == 0
    assert "PASS" in capsys.readouterr().out


def test_cli_query_sim_rejects_m_slice(tmp_path, corpus_file, capsys):
    queries = tmp_path / "queries.txt"
    queries.write_text("alpha\n", encoding="utf-8")
    code = run_cli("query-sim", "--corpus", str(corpus_file), "--queries", str(queries),
                   "--policies", "m-slice", "--outdir", str(tmp_path))
    assert code == 1
    assert "assignment policies" in capsys.readouterr().err


def test_cli_verify_invalid_m_reports_error(capsys):
    assert run_cli("verify", "slice", "--m-values", "3") == 1
    assert "divide" in capsys.readouterr().err


def test_cli_slope_roundtrip(tmp_path, capsys):
    path = tmp_path / "pts.csv"
    path.write_text("m,avg_td\n1,100\n2,50\n4,25\n", encoding="utf-8")
    assert run_cli("slope", "--csv", str(path), "--x", "m", "--y", "avg_td") == 0
    assert capsys.readouterr().out.strip() == "-1.000"


def test_cli_entrypoint_subprocess(tmp_path, corpus_file):
    result = subprocess.run(
        [sys.executable, "-m", "shardlab", "ingest", "--corpus", str(corpus_file)],
        capture_output=True, text=True,
    )
    assert result.returncode == 0
    assert "docs=4" in result.stdout
