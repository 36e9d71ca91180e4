import json

import pytest

from strongscale.cli import main
from strongscale.runstore import load_store


@pytest.fixture
def store(tmp_path):
    return str(tmp_path / "store.json")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_ingest_table2(capsys, store, data_dir):
    code, out, _ = run(capsys, "ingest", data_dir / "table2.csv", "--store", store)
    assert code == 0
    assert "in 3 series" in out
    assert sorted({r.n for r in load_store(store)}) == [95_011_000, 161_518_700, 1_615_187_000]


def test_ingest_append(capsys, store, data_dir):
    run(capsys, "ingest", data_dir / "table2.csv", "--store", store)
    run(capsys, "ingest", data_dir / "table1.csv", "--store", store, "--append")
    assert len(load_store(store)) == 12


def test_ingest_empty_file_warns(capsys, caplog, store, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    code, _, _ = run(capsys, "ingest", empty, "--store", store)
    assert code == 0
    assert "no records" in caplog.text


def test_ingest_rejects_inconsistent_grid(capsys, store, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("platform,P,n,E,N,t_step\nX,1,999,7168,7,1.0\n")
    code, _, err = run(capsys, "ingest", bad, "--store", store)
    assert code == 2
    assert "row 2" in err


def test_knee_two_point(capsys, store, tmp_path):
    recs = tmp_path / "r.csv"
    recs.write_text(f"platform,P,n,t_step\nX,1,4000000,1.0\nX,4,4000000,{1 / 2.4!r}\n")
    run(capsys, "ingest", recs, "--store", store)
    code, out, _ = run(capsys, "knee", "--series", "platform=X", "--store", store, "--format", "json")
    assert code == 0
    result = json.loads(out)["knee"]
    assert result["n_at_target"] == pytest.approx(2e6, rel=1e-12)
    assert not result["extrapolated"]


def test_knee_extrapolated_notice(capsys, store, tmp_path):
    recs = tmp_path / "r.csv"
    recs.write_text("platform,P,n,t_step\nX,1,1000000,1.0\nX,2,1000000,0.5\n")
    run(capsys, "ingest", recs, "--store", store)
    code, out, _ = run(capsys, "knee", "--series", "platform=X", "--store", store)
    assert code == 0
    assert "extrapolated" in out


def test_knee_unknown_series(capsys, store, data_dir):
    run(capsys, "ingest", data_dir / "table2.csv", "--store", store)
    code, _, _ = run(capsys, "knee", "--series", "platform=Nowhere", "--store", store)
    assert code == 2


def test_plan(capsys, tmp_path):
    out_path = tmp_path / "plan.json"
    code, _, _ = run(
        capsys, "plan", "--n", 1600000000, "--n-at-target", 3e6, "--t-step", 0.05,
        "--ranks-per-node", 8, "--steps", 2000, "--out", out_path,
    )
    assert code == 0
    (p,) = json.loads(out_path.read_text())
    assert p["P_target"] == 534
    assert p["node_hours"] == pytest.approx(1.854, abs=1e-3)


def test_plan_usage_errors(capsys):
    code, _, _ = run(capsys, "plan", "--n", 10, "--ranks-per-node", 8, "--steps", 1, "--t-step", 1)
    assert code == 1
    code, _, _ = run(capsys, "plan", "--n", 10, "--n-at-target", 5, "--ranks-per-node", 8, "--steps", 1)
    assert code == 1


def test_compare_logs(capsys, data_dir):
    code, out, _ = run(capsys, "compare-logs", data_dir / "ss10.log", data_dir / "ss11.log")
    assert code == 0
    assert "pMG smoother" in out
    assert "coarse grid" not in out.split("kernels")[0]
    assert "54.5" in out and "91.8" in out


def test_compare_logs_json(capsys, data_dir):
    code, out, _ = run(capsys, "compare-logs", data_dir / "ss10.log", data_dir / "ss11.log", "--format", "json")
    flagged = {r["path"][-1] for r in json.loads(out)["regressions"] if r["flagged"]}
    assert "pMG smoother" in flagged and "makef" not in flagged


def test_speedup(capsys, store, data_dir):
    run(capsys, "ingest", data_dir / "table1.csv", "--store", store)
    args = ["speedup", "--reference", "Summit", "--store", store, "--claimed", "Crusher=1.32", "--claimed", "Spock=0.84"]
    code, out, _ = run(capsys, *args)
    assert code == 0
    assert "MISMATCH" in out
    code, _, _ = run(capsys, *args, "--strict")
    assert code == 2
    code, _, _ = run(capsys, "speedup", "--reference", "Summit", "--store", store, "--claimed", "Crusher")
    assert code == 1


def test_divisibility(capsys, store, tmp_path):
    lines = ["platform,P,n,t_step"]
    for P in range(8, 65, 4):
        t = 1e6 / P * (2.0 if P % 8 else 1.0)
        lines.append(f"Crusher,{P},100000000,{t!r}")
    recs = tmp_path / "c.csv"
    recs.write_text("\n".join(lines) + "\n")
    run(capsys, "ingest", recs, "--store", store)
    code, out, _ = run(capsys, "divisibility", "--series", "platform=Crusher", "--store", store, "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["flagged"] and payload["slowdown"] == pytest.approx(2.0, rel=1e-9)


def test_synth_ingest_round_trip(capsys, store, tmp_path):
    synth_csv = tmp_path / "synth.csv"
    again = tmp_path / "again.csv"
    argv = ["synth", "--a", 1e-8, "--b", 1e-3, "--c", 1e-4, "--noise", 0.01, "--seed", 5,
            "--n", 10**9, "--P", "8,16,32,64", "--config", "fp32;kv4", "--out", synth_csv]
    assert run(capsys, *argv)[0] == 0
    first = synth_csv.read_bytes()
    assert run(capsys, *argv)[0] == 0
    assert synth_csv.read_bytes() == first
    run(capsys, "ingest", synth_csv, "--store", store, "--csv-out", again)
    assert again.read_bytes() == first


def test_synth_to_stdout(capsys):
    code, out, _ = run(capsys, "synth", "--a", 1e-8, "--n", 1000, "--P", "1,2")
    assert code == 0
    assert out.splitlines()[0].startswith("platform,config,P")


def test_plot(capsys, store, data_dir, tmp_path):
    run(capsys, "ingest", data_dir / "table2.csv", "--store", store)
    out = tmp_path / "fig"
    code, _, _ = run(capsys, "plot", "--kind", "eta_vs_nP", "--store", store, "--out", out)
    assert code == 0
    assert (tmp_path / "fig.svg").read_text().startswith("<?xml")
    rows = (tmp_path / "fig.csv").read_text().splitlines()
    assert rows[0] == "series,x,y" and len(rows) == 7


def test_parse_log(capsys, data_dir):
    code, out, _ = run(capsys, "parse-log", data_dir / "ss10.log", "--format", "json")
    assert code == 0
    assert json.loads(out)["aggregate_flops"] == 3.36729e13
    code, out, err = run(capsys, "parse-log", data_dir / "ss10.log")
    assert code == 0 and "pMG smoother" in out and "skipped 0" in err


def test_exit_codes(capsys, tmp_path):
    assert run(capsys)[0] == 1
    assert run(capsys, "--help")[0] == 0
    assert run(capsys, "knee")[0] == 1
    assert run(capsys, "parse-log", tmp_path / "missing.log")[0] == 3
    bad = tmp_path / "bad.log"
    bad.write_text("flop/s lots\n")
    assert run(capsys, "parse-log", bad)[0] == 2
    assert run(capsys, "knee", "--series", "platform=X", "--store", tmp_path / "none.json")[0] == 3
