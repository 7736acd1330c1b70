import json

import pytest

from sivtwin import cavity, cli
from sivtwin import scenarios as S
from sivtwin import io as sio


def read_json(path):
    return json.loads(path.read_text())


def test_cavity_report_defaults(tmp_path, capsys):
    assert cli.main(["cavity-report", "--out", str(tmp_path)]) == cli.EXIT_OK
    doc = read_json(tmp_path / "cavity_report.json")
    assert doc["mode"]["order"] == 8
    assert doc["geometry"]["eff_length"] == pytest.approx(cavity.effective_length_from_order(8, S.WAVELENGTH))
    assert doc["quality"]["finesse"] == pytest.approx(S.FINESSE)
    assert doc["purcell"]["purcell_curved"] < doc["purcell"]["purcell_flat"]
    assert "purcell_curved" in capsys.readouterr().out


def test_g2_simulate_then_fit(tmp_path):
    assert cli.main(["g2", "simulate", "--seed", "3", "--out", str(tmp_path)]) == cli.EXIT_OK
    assert (tmp_path / "g2_mirrored.csv").exists()
    assert cli.main(["g2", "fit", "--input", str(tmp_path / "g2.csv"), "--out", str(tmp_path)]) == cli.EXIT_OK
    fit = read_json(tmp_path / "g2_fit.json")
    assert abs(fit["lifetime"] - 1e-9) <= 3 * fit["lifetime_sigma"]
    assert abs(fit["rabi_hz"] - 290e6) <= 3 * fit["rabi_sigma"]


def test_reruns_are_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert cli.main(["ple", "--seed", "11", "--out", str(tmp_path / d)]) == cli.EXIT_OK
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_config_file_run(tmp_path):
    cfg = {"scenario": "spin", "seed": 5, "spin": {"repetitions": 20000}}
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == cli.EXIT_OK
    doc = read_json(tmp_path / "o" / "spin.json")
    assert doc["truth"]["t1"] == pytest.approx(350e-9)
    assert (tmp_path / "o" / "spin_init_trace.csv").exists()


def test_sweep_writes_index(tmp_path):
    cfg = {"scenario": "sweep", "seed": 1, "cavity": {"roc": 8e-6},
           "sweep": {"scenario": "cavity-report", "parameter": "cavity.order", "values": [7, 8, 9]}}
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["run", "--config", str(path), "--out", str(tmp_path)]) == cli.EXIT_OK
    index = read_json(tmp_path / "index.json")
    assert [r["value"] for r in index["runs"]] == [7, 8, 9]
    assert len({r["seed"] for r in index["runs"]}) == 3
    for r in index["runs"]:
        assert (tmp_path / r["dir"] / "cavity_report.json").exists()
    lengths = [r["result"]["geometry"]["eff_length"] for r in index["runs"]]
    assert lengths == sorted(lengths)


@pytest.mark.parametrize("argv,content", [
    (["run"], None),
    (["run", "--config", "{missing}"], None),
    (["run", "--config", "{cfg}"], "not json"),
    (["run", "--config", "{cfg}"], '{"scenario": "teleport"}'),
    (["run", "--config", "{cfg}"], '{"scenario": "ple", "seed": -1}'),
    (["run", "--config", "{cfg}"], '{"scenario": "cavity-report", "cavity": {"order": 0}}'),
    (["g2", "fit"], None),
])
def test_invalid_input_exits_2(tmp_path, capsys, argv, content):
    cfg = tmp_path / "c.json"
    if content is not None:
        cfg.write_text(content)
    argv = [a.format(cfg=cfg, missing=tmp_path / "nope.json") for a in argv] + ["--out", str(tmp_path / "o")]
    assert cli.main(argv) == cli.EXIT_INVALID
    assert capsys.readouterr().err.startswith("error:")


def test_non_converged_fit_exits_3(tmp_path):
    # a flat histogram has no dip or oscillation to fit
    table = sio.Table("g2", [("tau", "s"), ("g2", ""), ("sigma", "")],
                      [[k * 1e-10, 1.0, 1e-9] for k in range(50)])
    sio.write_table(tmp_path / "flat.csv", table)
    code = cli.main(["g2", "fit", "--input", str(tmp_path / "flat.csv"), "--out", str(tmp_path)])
    assert code == cli.EXIT_NOT_CONVERGED
    assert (tmp_path / "g2_failed.json").exists()


def test_document_output_is_json(capsys, tmp_path):
    assert cli.main(["modes-infer", "--format", "document", "--out", str(tmp_path)]) == cli.EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["order"] >= 1


def test_reproduce_prints_twelve_rows(capsys, tmp_path):
    code = cli.main(["reproduce", "--out", str(tmp_path)])
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("[")]
    assert len(lines) == 12
    assert code == cli.EXIT_OK
    assert read_json(tmp_path / "reference_checks.json")["passed"] is True
