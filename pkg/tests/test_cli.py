"""Config parsing, CSV/plot emission, and end-to-end command-line runs."""

import csv
import io
import json
import os

import pytest

import noma_lab.cli as cli
from noma_lab.cli import (
    ConfigError,
    apply_preset,
    main,
    outage_csv_lines,
    outage_plot_lines,
    parse_config,
    run,
    throughput_csv_lines,
    throughput_plot_lines,
    _build_grid,
    _parse_snr_flag,
)
from noma_lab.montecarlo import PartialResultError, SweepSpec, run_sweep
from noma_lab.schemes import Scheme, SystemParams


def test_empty_config_gives_documented_defaults():
    cfg = parse_config("{}")
    assert cfg.params == SystemParams.defaults()
    assert cfg.sweep.snr_grid_db == tuple(float(d) for d in range(0, 41, 2))
    assert cfg.sweep.trials_per_point == 100_000
    assert cfg.sweep.master_seed == 42
    assert cfg.sweep.chunk_size == 65536
    assert cfg.sweep.schemes == tuple(Scheme)
    assert cfg.quad.n_terms == 100
    assert cfg.quad.oracle_tol == 1e-10
    assert cfg.prefix == "noma_sweep"
    assert cfg.preset is None
    assert cfg.emit_outage and cfg.emit_throughput


def test_full_config_round_trip():
    doc = {
        "system": {
            "beta_bs_ue1": 2.0,
            "beta_bs_ue2": 0.1,
            "beta_ue1_ue2": 0.5,
            "alpha_ue1_t1": 0.2,
            "alpha_ue2_t1": 0.8,
            "alpha_bs_t2": 0.3,
            "alpha_ue2_t2": 0.7,
            "rate_ue1_dl": 0.5,
            "rate_ue2_dl": 0.6,
            "rate_ue1_ul": 0.7,
            "rate_ue2_ul": 0.8,
        },
        "sweep": {
            "snr_db_start": 5,
            "snr_db_stop": 15,
            "snr_db_step": 5,
            "trials": 1234,
            "seed": 99,
            "chunk_size": 512,
            "schemes": ["cnoma"],
        },
        "quadrature": {"n_terms": 32, "oracle_tol": 1e-8},
        "output": {"prefix": "mylab"},
    }
    cfg = parse_config(json.dumps(doc))
    assert cfg.params.stats.beta_bs_ue1 == 2.0
    assert cfg.params.power.a_bs_t2 == 0.3
    assert cfg.params.rates.r_ue2_ul == 0.8
    assert cfg.sweep.snr_grid_db == (5.0, 10.0, 15.0)
    assert cfg.sweep.trials_per_point == 1234
    assert cfg.sweep.master_seed == 99
    assert cfg.sweep.schemes == (Scheme.CNOMA,)
    assert cfg.quad.n_terms == 32
    assert cfg.prefix == "mylab"


def test_config_rejects_unknown_names():
    with pytest.raises(ConfigError, match="unknown section 'systemx'"):
        parse_config('{"systemx": {}}')
    with pytest.raises(ConfigError, match="unknown key 'sweep.trils'"):
        parse_config('{"sweep": {"trils": 10}}')
    with pytest.raises(ConfigError, match="unknown key 'system.beta_bs_ue3'"):
        parse_config('{"system": {"beta_bs_ue3": 1.0}}')


def test_config_rejects_invalid_values_with_section_context():
    with pytest.raises(ConfigError, match="system"):
        parse_config('{"system": {"beta_bs_ue2": 2.0}}')  # above near-user mean
    with pytest.raises(ConfigError, match="system"):
        parse_config('{"system": {"alpha_ue1_t1": 0.6, "alpha_ue2_t1": 0.4}}')
    with pytest.raises(ConfigError, match="sweep"):
        parse_config('{"sweep": {"trials": 0}}')
    with pytest.raises(ConfigError, match="unknown scheme 'bogus'"):
        parse_config('{"sweep": {"schemes": ["bogus"]}}')
    with pytest.raises(ConfigError, match="quadrature"):
        parse_config('{"quadrature": {"n_terms": 0}}')
    with pytest.raises(ConfigError, match="valid JSON"):
        parse_config("not json")
    with pytest.raises(ConfigError, match="root"):
        parse_config("[1, 2]")


def test_build_grid():
    assert _build_grid(0.0, 40.0, 2.0) == tuple(float(d) for d in range(0, 41, 2))
    assert _build_grid(0.0, 1.0, 0.3) == (0.0, 0.3, 0.6, 0.9)
    assert _build_grid(5.0, 5.0, 2.0) == (5.0,)
    with pytest.raises(ConfigError):
        _build_grid(0.0, 10.0, 0.0)
    with pytest.raises(ConfigError):
        _build_grid(10.0, 0.0, 2.0)


def test_parse_snr_flag():
    assert _parse_snr_flag("0:40:10") == (0.0, 40.0, 10.0)
    with pytest.raises(ConfigError):
        _parse_snr_flag("0:40")
    with pytest.raises(ConfigError):
        _parse_snr_flag("a:b:c")


def test_presets():
    fig3 = parse_config('{"output": {"preset": "fig3"}}')
    assert fig3.sweep.schemes == (Scheme.HDU_CNOMA, Scheme.CNOMA)
    assert fig3.emit_outage and not fig3.emit_throughput
    assert fig3.preset == "fig3"

    fig4 = apply_preset(parse_config("{}"), "fig4")
    assert fig4.sweep.schemes == tuple(Scheme)
    assert not fig4.emit_outage and fig4.emit_throughput

    with pytest.raises(ConfigError, match="unknown preset"):
        apply_preset(parse_config("{}"), "fig9")


def _tiny_results(schemes=tuple(Scheme)):
    spec = SweepSpec(
        snr_grid_db=(10.0, 20.0),
        trials_per_point=400,
        master_seed=3,
        schemes=schemes,
        chunk_size=400,
    )
    return run_sweep(SystemParams.defaults(), spec, workers=1)


def test_outage_csv_round_trips_exactly():
    results = _tiny_results()
    lines = outage_csv_lines(results)
    assert lines[0] == "scheme,link,snr_db,analytic,mc_estimate,ci_low,ci_high,trials"
    rows = list(csv.DictReader(io.StringIO("\n".join(lines))))
    assert len(rows) == sum(len(r.points) * len(r.scheme.links) for r in results)
    by_scheme = {r.scheme.value: r for r in results}
    for row in rows:
        res = by_scheme[row["scheme"]]
        point = next(p for p in res.points if p.snr_db == float(row["snr_db"]))
        est = point.links[row["link"]]
        assert float(row["mc_estimate"]) == est.mc_estimate  # exact, not approx
        assert float(row["ci_low"]) == est.ci_low
        assert float(row["ci_high"]) == est.ci_high
        assert int(row["trials"]) == point.trials
        if row["scheme"] == "noncoop_noma":
            assert row["analytic"] == "NA"
        else:
            assert float(row["analytic"]) == est.analytic


def test_throughput_csv_round_trips_exactly():
    results = _tiny_results()
    lines = throughput_csv_lines(results)
    assert lines[0] == "scheme,snr_db,throughput_mc,throughput_analytic"
    rows = list(csv.DictReader(io.StringIO("\n".join(lines))))
    by_scheme = {r.scheme.value: r for r in results}
    for row in rows:
        res = by_scheme[row["scheme"]]
        idx = [p.snr_db for p in res.points].index(float(row["snr_db"]))
        assert float(row["throughput_mc"]) == res.throughput_mc[idx]
        if row["scheme"] == "hdu_cnoma":
            assert float(row["throughput_analytic"]) == res.throughput_analytic[idx]
        else:
            assert row["throughput_analytic"] == "NA"


def test_plot_scripts_reference_available_columns():
    results = _tiny_results()
    outage_gp = "\n".join(outage_plot_lines("x_outage.csv", results))
    assert "set datafile missing 'NA'" in outage_gp
    assert "set logscale y" in outage_gp
    assert "strcol(1) eq 'hdu_cnoma' && strcol(2) eq 'ue2_dl'" in outage_gp
    assert "hdu_cnoma ue2_dl (analytic)" in outage_gp
    assert "noncoop_noma ue2_dl (mc)" in outage_gp
    assert "noncoop_noma ue2_dl (analytic)" not in outage_gp

    thr_gp = "\n".join(throughput_plot_lines("x_throughput.csv", results))
    assert "set logscale y" not in thr_gp
    assert "title 'hdu_cnoma (analytic)'" in thr_gp
    assert "title 'cnoma (analytic)'" not in thr_gp
    assert "title 'noncoop_noma (mc)'" in thr_gp


def _write_config(tmp_path, doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def test_main_fig3_end_to_end(tmp_path, capsys):
    cfg_path = _write_config(tmp_path, {"sweep": {"trials": 300, "chunk_size": 128}})
    prefix = str(tmp_path / "out" / "fig3run")
    rc = main(
        [
            "--config",
            cfg_path,
            "--preset",
            "fig3",
            "--snr",
            "0:20:10",
            "--seed",
            "9",
            "--out",
            prefix,
        ]
    )
    assert rc == 0
    assert os.path.exists(prefix + "_outage.csv")
    assert os.path.exists(prefix + "_outage.gp")
    assert not os.path.exists(prefix + "_throughput.csv")

    with open(prefix + "_outage.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert {row["scheme"] for row in rows} == {"hdu_cnoma", "cnoma"}
    assert {float(row["snr_db"]) for row in rows} == {0.0, 10.0, 20.0}
    assert all(int(row["trials"]) == 300 for row in rows)

    summary = capsys.readouterr().out
    assert "== hdu_cnoma ==" in summary
    assert "wrote:" in summary


def test_main_fig4_end_to_end(tmp_path):
    cfg_path = _write_config(
        tmp_path,
        {
            "sweep": {"trials": 200, "snr_db_start": 10, "snr_db_stop": 20,
                      "snr_db_step": 10, "chunk_size": 200},
            "output": {"preset": "fig4", "prefix": str(tmp_path / "fig4run")},
        },
    )
    assert main(["--config", cfg_path]) == 0
    base = str(tmp_path / "fig4run")
    assert os.path.exists(base + "_throughput.csv")
    assert os.path.exists(base + "_throughput.gp")
    assert not os.path.exists(base + "_outage.csv")
    with open(base + "_throughput.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    # three schemes x two grid points
    assert len(rows) == 6


def test_main_is_deterministic_across_invocations(tmp_path):
    cfg_path = _write_config(tmp_path, {"sweep": {"trials": 500, "chunk_size": 256}})
    args = ["--config", cfg_path, "--preset", "fig3", "--snr", "0:10:5"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a_outage.csv").read_bytes()
    b = (tmp_path / "b_outage.csv").read_bytes()
    assert a == b


def test_main_error_exits(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "missing.json")]) == 2
    assert "cannot read config" in capsys.readouterr().err

    bad = tmp_path / "bad.json"
    bad.write_text('{"sweep": {"trials": -5}}', encoding="utf-8")
    assert main(["--config", str(bad)]) == 2
    assert "sweep" in capsys.readouterr().err

    assert main(["--snr", "oops"]) == 2
    assert "--snr" in capsys.readouterr().err


def test_run_flushes_partial_results_and_signals_failure(tmp_path, monkeypatch, capsys):
    def exploding(params, spec, *, quad, workers):
        raise PartialResultError("sweep aborted mid-run", ())

    monkeypatch.setattr(cli, "run_sweep", exploding)
    cfg = parse_config(json.dumps({"output": {"prefix": str(tmp_path / "part")}}))
    rc = run(cfg)
    assert rc == 3
    captured = capsys.readouterr()
    assert "sweep aborted mid-run" in captured.err
    # whatever exists (here: just headers) is still written out
    text = (tmp_path / "part_outage.csv").read_text(encoding="utf-8")
    assert text.splitlines()[0].startswith("scheme,link,")


def test_run_reports_unwritable_output(tmp_path, capsys):
    target = tmp_path / "blocked"
    target.write_text("a file, not a directory", encoding="utf-8")
    cfg = parse_config(
        json.dumps(
            {
                "sweep": {"trials": 50, "snr_db_stop": 0.0, "chunk_size": 50},
                "output": {"prefix": str(target / "x")},
            }
        )
    )
    assert run(cfg) == 2
    assert "could not write" in capsys.readouterr().err
