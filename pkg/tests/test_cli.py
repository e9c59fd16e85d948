import csv
import io

import numpy as np
import pytest

from splitwit.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def meta(text):
    out = {}
    for line in text.splitlines():
        if line.startswith("# ") and " = " in line:
            key, val = line[2:].split(" = ", 1)
            out[key] = val
    return out


def test_state_examples(capsys):
    code, out, _ = run(["state", "--n", "500", "--chi-t", "0.0058"], capsys)
    assert code == 0 and abs(float(rows(out)[0]["xi2_db"]) + 10.0) < 0.1
    code, out, _ = run(["state", "--n", "500", "--target-db", "-10"], capsys)
    assert abs(float(rows(out)[0]["chi_t"]) - 0.0058) < 1e-4
    code, out, _ = run(["state", "--n", "2", "--chi-t", "0"], capsys)
    assert float(rows(out)[0]["xi2"]) == 1.0
    code, out, _ = run(["state", "--n", "50", "--chi-t", "0", "0.01", "0.02"], capsys)
    assert [r["chi_t"] for r in rows(out)] == ["0", "0.01", "0.02"]


def test_header_echoes_configuration(capsys):
    _, out, _ = run(["state", "--n", "7", "--seed", "3"], capsys)
    m = meta(out)
    assert m["config.n"] == "7" and m["config.seed"] == "3" and m["config.backend"] == "auto"
    assert out.startswith("# splitwit ")


def test_witness_examples(capsys):
    _, out, _ = run(["witness", "S", "--n", "40", "--chi-t", "0"], capsys)
    r = rows(out)[0]
    assert abs(float(r["value"]) - float(r["threshold"])) < 1e-8 and r["violated"] == "false"
    for name in ("S", "D"):
        _, out, _ = run(["witness", name, "--n", "500", "--target-db", "-10"], capsys)
        assert rows(out)[0]["violated"] == "true"


def test_custom_spec_files(tmp_path, capsys):
    zero = tmp_path / "zero.spec"
    zero.write_text(" ".join(["0"] * 15))
    code, _, err = run(["witness", str(zero), "--n", "10"], capsys)
    assert code == 1 and "zero" in err
    s_file = tmp_path / "s.spec"
    s_file.write_text("# S written out\n1 0 0 0 1 0 0 0 -1\n0 0 0 0 0 0\n")
    code, out, _ = run(["bound", str(s_file), "--n", "8"], capsys)
    assert code == 0 and abs(float(meta(out)["binomial_bound"]) - 8 * 7 / 16) < 1e-8
    assert len(rows(out)) == 9


def test_usage_errors(tmp_path, capsys):
    assert run(["state", "--n", "0"], capsys)[0] == 1
    assert run(["witness", "S", "--n", "40", "--backend", "oracle"], capsys)[0] == 1
    assert run(["state", "--chi-t", "0.1", "--target-db", "-3"], capsys)[0] == 1
    assert run(["state", "--p-white", "2"], capsys)[0] == 1
    with pytest.raises(SystemExit) as exc:
        main(["reproduce", "fig9"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_numerical_failure_exit_code(capsys):
    code, _, err = run(["state", "--n", "2", "--chi-t", str(np.pi / 2)], capsys)
    assert code == 2 and "numerical" in err


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\nn = 12\nchi-t = 0.05\nsigma_c = 1.5  # atoms\n")
    _, out, _ = run(["state", "--config", str(cfg)], capsys)
    assert rows(out)[0]["n_atoms"] == "12" and meta(out)["config.sigma_c"] == "1.5"
    _, out, _ = run(["state", "--config", str(cfg), "--n", "14"], capsys)
    assert rows(out)[0]["n_atoms"] == "14" and rows(out)[0]["chi_t"] == "0.05"
    cfg.write_text("bogus = 1\n")
    assert run(["state", "--config", str(cfg)], capsys)[0] == 1
    cfg.write_text("n = many\n")
    assert run(["state", "--config", str(cfg)], capsys)[0] == 1


def test_stats_command(capsys):
    _, out, _ = run(["stats", "D", "--n", "500", "--target-db", "-6", "--sigma-p-deg", "1",
                     "--sigma-c", "5"], capsys)
    r = rows(out)[0]
    assert int(r["required_runs"]) > 0 and meta(out)["config.variance_model"] == "state"
    _, out, _ = run(["stats", "S", "--n", "20", "--chi-t", "0"], capsys)
    assert rows(out)[0]["required_runs"] == ""


def test_optimize_writes_spec(tmp_path, capsys):
    out_csv = tmp_path / "opt.csv"
    code, _, _ = run(["optimize", "--order", "1", "--n", "6", "--chi-t", "0.05", "--restarts", "1",
                      "--out", str(out_csv)], capsys)
    assert code == 0
    spec_file = tmp_path / "opt.spec"
    from splitwit.specs import WitnessSpec
    spec = WitnessSpec.from_text(spec_file.read_text())
    assert spec.order == 1 and abs(np.linalg.norm(spec.to_vector()) - 1) < 1e-12
    r = rows(out_csv.read_text())[0]
    assert r["detected"] == "true" and 0 < float(r["p_star"]) < 1


def test_reproduce_fig5_is_byte_identical(tmp_path, capsys):
    args = ["reproduce", "fig5", "--sigma-grid", "3.2,3.4,3.6"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--out", str(a)], capsys)[0] == 0
    assert run(args + ["--out", str(b)], capsys)[0] == 0
    strip = lambda p: "\n".join(l for l in p.read_text().splitlines() if "config.out" not in l)
    assert strip(a) == strip(b)
    assert a.with_suffix(".svg").read_bytes() == b.with_suffix(".svg").read_bytes()
    m = meta(a.read_text())
    assert m["desk_scale_override"] == "true"
    assert abs(float(m["s_violation_vanishes_at_deg"]) - 3.4) < 0.2
    assert "N(N+1)/16" in m["s_threshold_note"]


def test_jobs_do_not_change_rows(capsys):
    args = ["reproduce", "fig6", "--db-grid=-7,-6,-5", "--no-plot"]
    _, one, _ = run(args + ["--jobs", "1"], capsys)
    _, two, _ = run(args + ["--jobs", "2"], capsys)
    assert rows(one) == rows(two)
    assert "config.variance_model" not in meta(one) and "run_count_crossover_db" in meta(one)
