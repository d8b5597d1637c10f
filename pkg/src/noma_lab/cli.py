"""Command-line front end: JSON config in, CSVs + gnuplot script + summary out.

The config document has four flat sections (all optional, all keys
optional); unknown keys are rejected so typos fail loudly instead of
silently running defaults::

    {
      "system":     {"beta_bs_ue1": 1.0, ..., "rate_ue2_ul": 1.0},
      "sweep":      {"snr_db_start": 0, "snr_db_stop": 40, "snr_db_step": 2,
                     "trials": 100000, "seed": 42, "chunk_size": 65536,
                     "schemes": ["hdu_cnoma", "cnoma", "noncoop_noma"]},
      "quadrature": {"n_terms": 100, "oracle_tol": 1e-10},
      "output":     {"prefix": "noma_sweep", "preset": "fig3"}
    }

Presets: ``fig3`` sweeps outage for the hybrid scheme and the conventional
cooperative baseline; ``fig4`` sweeps throughput for all three schemes.
Command-line flags override config-file values.  All SNR values cross this
boundary in dB.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence, TextIO

from .analysis import QuadratureConfig
from .channel import ChannelStats
from .montecarlo import (
    PartialResultError,
    SweepResult,
    SweepSpec,
    resolve_workers,
    run_sweep,
)
from .schemes import PowerAllocation, RateTargets, Scheme, SystemParams

PRESETS = ("fig3", "fig4")


class ConfigError(Exception):
    """Configuration document or flag value is invalid."""


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams
    sweep: SweepSpec
    quad: QuadratureConfig
    prefix: str = "noma_sweep"
    preset: Optional[str] = None
    emit_outage: bool = True
    emit_throughput: bool = True


def _take_section(doc: dict, name: str) -> dict:
    section = doc.pop(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"section '{name}' must be an object")
    return dict(section)


def _reject_unknown(section: dict, sect_name: str) -> None:
    if section:
        key = sorted(section)[0]
        raise ConfigError(f"unknown key '{sect_name}.{key}'")


def _build_grid(start: float, stop: float, step: float) -> tuple[float, ...]:
    if step <= 0:
        raise ConfigError(f"sweep.snr_db_step must be positive, got {step}")
    if stop < start:
        raise ConfigError(
            f"sweep.snr_db_stop ({stop}) must not be below snr_db_start ({start})"
        )
    n = int((stop - start) / step + 1e-9) + 1
    return tuple(round(start + i * step, 10) for i in range(n))


def _parse_schemes(tokens) -> tuple[Scheme, ...]:
    by_value = {s.value: s for s in Scheme}
    result = []
    for tok in tokens:
        if tok not in by_value:
            raise ConfigError(
                f"sweep.schemes: unknown scheme '{tok}' "
                f"(expected one of {sorted(by_value)})"
            )
        result.append(by_value[tok])
    return tuple(result)


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a JSON config document.

    An empty document yields the default parameterization: unit near-user
    link, (0.05, 0.8) far and inter-user means, downlink split (0.05, 0.95),
    cooperative-slot split (0.1, 0.9), all rate targets 1 bit/s/Hz, 100
    quadrature terms, 0-40 dB grid in steps of 2.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    doc = dict(doc)

    system = _take_section(doc, "system")
    sweep = _take_section(doc, "sweep")
    quadrature = _take_section(doc, "quadrature")
    output = _take_section(doc, "output")
    if doc:
        raise ConfigError(f"unknown section '{sorted(doc)[0]}'")

    try:
        stats = ChannelStats(
            beta_bs_ue1=float(system.pop("beta_bs_ue1", 1.0)),
            beta_bs_ue2=float(system.pop("beta_bs_ue2", 0.05)),
            beta_ue1_ue2=float(system.pop("beta_ue1_ue2", 0.8)),
        )
        power = PowerAllocation(
            a_ue1_t1=float(system.pop("alpha_ue1_t1", 0.05)),
            a_ue2_t1=float(system.pop("alpha_ue2_t1", 0.95)),
            a_bs_t2=float(system.pop("alpha_bs_t2", 0.1)),
            a_ue2_t2=float(system.pop("alpha_ue2_t2", 0.9)),
        )
        rates = RateTargets(
            r_ue1_dl=float(system.pop("rate_ue1_dl", 1.0)),
            r_ue2_dl=float(system.pop("rate_ue2_dl", 1.0)),
            r_ue1_ul=float(system.pop("rate_ue1_ul", 1.0)),
            r_ue2_ul=float(system.pop("rate_ue2_ul", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from None
    _reject_unknown(system, "system")

    start = float(sweep.pop("snr_db_start", 0.0))
    stop = float(sweep.pop("snr_db_stop", 40.0))
    step = float(sweep.pop("snr_db_step", 2.0))
    trials = sweep.pop("trials", 100_000)
    seed = sweep.pop("seed", 42)
    chunk_size = sweep.pop("chunk_size", 65536)
    scheme_tokens = sweep.pop("schemes", [s.value for s in Scheme])
    _reject_unknown(sweep, "sweep")
    try:
        sweep_spec = SweepSpec(
            snr_grid_db=_build_grid(start, stop, step),
            trials_per_point=int(trials),
            master_seed=int(seed),
            schemes=_parse_schemes(scheme_tokens),
            chunk_size=int(chunk_size),
        )
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None

    try:
        quad = QuadratureConfig(
            n_terms=int(quadrature.pop("n_terms", 100)),
            oracle_tol=float(quadrature.pop("oracle_tol", 1e-10)),
        )
    except ValueError as exc:
        raise ConfigError(f"quadrature: {exc}") from None
    _reject_unknown(quadrature, "quadrature")

    prefix = str(output.pop("prefix", "noma_sweep"))
    preset = output.pop("preset", None)
    _reject_unknown(output, "output")

    cfg = RunConfig(params=SystemParams(stats, power, rates), sweep=sweep_spec,
                    quad=quad, prefix=prefix)
    if preset is not None:
        cfg = apply_preset(cfg, str(preset))
    return cfg


def apply_preset(cfg: RunConfig, preset: str) -> RunConfig:
    """Point the run at one of the bundled sweep presets."""
    if preset == "fig3":
        sweep = dataclasses.replace(
            cfg.sweep, schemes=(Scheme.HDU_CNOMA, Scheme.CNOMA)
        )
        return dataclasses.replace(
            cfg, sweep=sweep, preset=preset, emit_outage=True, emit_throughput=False
        )
    if preset == "fig4":
        sweep = dataclasses.replace(cfg.sweep, schemes=tuple(Scheme))
        return dataclasses.replace(
            cfg, sweep=sweep, preset=preset, emit_outage=False, emit_throughput=True
        )
    raise ConfigError(f"unknown preset '{preset}' (expected one of {PRESETS})")


def _fmt(value: float) -> str:
    """17 significant digits: enough for exact float round-trips."""
    return format(float(value), ".17g")


def outage_csv_lines(results: Sequence[SweepResult]) -> list[str]:
    lines = ["scheme,link,snr_db,analytic,mc_estimate,ci_low,ci_high,trials"]
    for res in results:
        for point in res.points:
            for link in res.scheme.links:
                est = point.links[link]
                lines.append(
                    ",".join(
                        (
                            res.scheme.value,
                            link,
                            _fmt(point.snr_db),
                            _fmt(est.analytic) if est.analytic is not None else "NA",
                            _fmt(est.mc_estimate),
                            _fmt(est.ci_low),
                            _fmt(est.ci_high),
                            str(point.trials),
                        )
                    )
                )
    return lines


def throughput_csv_lines(results: Sequence[SweepResult]) -> list[str]:
    lines = ["scheme,snr_db,throughput_mc,throughput_analytic"]
    for res in results:
        for point, thr_mc, thr_an in zip(
            res.points, res.throughput_mc, res.throughput_analytic
        ):
            lines.append(
                ",".join(
                    (
                        res.scheme.value,
                        _fmt(point.snr_db),
                        _fmt(thr_mc),
                        _fmt(thr_an) if thr_an is not None else "NA",
                    )
                )
            )
    return lines


def _plot_header(ylabel: str, logscale: bool) -> list[str]:
    lines = [
        "# generated by noma-lab; requires gnuplot (or read the CSV directly)",
        "set datafile separator ','",
        "set datafile missing 'NA'",
        "set key outside",
        "set grid",
        "set xlabel 'transmit SNR (dB)'",
        f"set ylabel '{ylabel}'",
    ]
    if logscale:
        lines.append("set logscale y")
    return lines


def outage_plot_lines(csv_name: str, results: Sequence[SweepResult]) -> list[str]:
    lines = _plot_header("outage probability", logscale=True)
    entries = []
    for res in results:
        has_analytic = any(
            pt.links[link].analytic is not None
            for pt in res.points
            for link in res.scheme.links
        )
        for link in res.scheme.links:
            sel = f"strcol(1) eq '{res.scheme.value}' && strcol(2) eq '{link}'"
            entries.append(
                f"  '{csv_name}' using 3:({sel} ? column(5) : 1/0) "
                f"with points title '{res.scheme.value} {link} (mc)'"
            )
            if has_analytic:
                entries.append(
                    f"  '{csv_name}' using 3:({sel} ? column(4) : 1/0) "
                    f"with lines title '{res.scheme.value} {link} (analytic)'"
                )
    lines.append("plot \\")
    lines.append(", \\\n".join(entries))
    return lines


def throughput_plot_lines(csv_name: str, results: Sequence[SweepResult]) -> list[str]:
    lines = _plot_header("outage throughput (bit/s/Hz)", logscale=False)
    entries = []
    for res in results:
        sel = f"strcol(1) eq '{res.scheme.value}'"
        entries.append(
            f"  '{csv_name}' using 2:({sel} ? column(3) : 1/0) "
            f"with linespoints title '{res.scheme.value} (mc)'"
        )
        if any(t is not None for t in res.throughput_analytic):
            entries.append(
                f"  '{csv_name}' using 2:({sel} ? column(4) : 1/0) "
                f"with lines title '{res.scheme.value} (analytic)'"
            )
    lines.append("plot \\")
    lines.append(", \\\n".join(entries))
    return lines


def _write_text(path: str, lines: Sequence[str]) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _print_summary(results: Sequence[SweepResult], out: TextIO) -> None:
    for res in results:
        links = res.scheme.links
        print(f"\n== {res.scheme.value} ==", file=out)
        header = f"{'snr_db':>7}" + "".join(f"{link:>11}" for link in links)
        header += f"{'thr_mc':>11}{'thr_ana':>11}"
        print(header, file=out)
        for point, thr_mc, thr_an in zip(
            res.points, res.throughput_mc, res.throughput_analytic
        ):
            row = f"{point.snr_db:>7.4g}"
            for link in links:
                row += f"{point.links[link].mc_estimate:>11.4g}"
            row += f"{thr_mc:>11.4g}"
            row += f"{thr_an:>11.4g}" if thr_an is not None else f"{'NA':>11}"
            print(row, file=out)


def run(
    cfg: RunConfig, out: Optional[TextIO] = None, err: Optional[TextIO] = None
) -> int:
    """Execute the sweep described by cfg and emit all requested artifacts.

    Returns 0 on success, 3 when only partial results could be computed
    (whatever finished is still flushed to disk), 2 on I/O failure.
    """
    # resolve the streams late so redirection (and test capture) works
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    partial: Optional[PartialResultError] = None
    try:
        results: Sequence[SweepResult] = run_sweep(
            cfg.params, cfg.sweep, quad=cfg.quad, workers=resolve_workers()
        )
    except PartialResultError as exc:
        partial = exc
        results = exc.results

    try:
        emitted = []
        if cfg.emit_outage:
            csv_path = f"{cfg.prefix}_outage.csv"
            _write_text(csv_path, outage_csv_lines(results))
            _write_text(
                f"{cfg.prefix}_outage.gp",
                outage_plot_lines(os.path.basename(csv_path), results),
            )
            emitted += [csv_path, f"{cfg.prefix}_outage.gp"]
        if cfg.emit_throughput:
            csv_path = f"{cfg.prefix}_throughput.csv"
            _write_text(csv_path, throughput_csv_lines(results))
            _write_text(
                f"{cfg.prefix}_throughput.gp",
                throughput_plot_lines(os.path.basename(csv_path), results),
            )
            emitted += [csv_path, f"{cfg.prefix}_throughput.gp"]
    except OSError as exc:
        print(f"error: could not write outputs: {exc}", file=err)
        return 2

    _print_summary(results, out)
    print(f"\nwrote: {', '.join(emitted) if emitted else 'nothing (no outputs requested)'}",
          file=out)
    if partial is not None:
        print(f"error: {partial}", file=err)
        return 3
    return 0


def _parse_snr_flag(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--snr expects 'lo:hi:step', got '{text}'")
    try:
        return float(parts[0]), float(parts[1]), float(parts[2])
    except ValueError:
        raise ConfigError(f"--snr expects numeric 'lo:hi:step', got '{text}'") from None


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noma-lab",
        description="Monte Carlo and closed-form evaluation of a three-slot "
        "hybrid downlink-uplink cooperative NOMA system.",
    )
    parser.add_argument("--config", metavar="PATH", help="JSON config file")
    parser.add_argument("--preset", choices=PRESETS, help="bundled sweep preset")
    parser.add_argument("--trials", type=int, metavar="N", help="Monte Carlo trials per grid point")
    parser.add_argument("--seed", type=int, metavar="U64", help="master seed")
    parser.add_argument("--out", metavar="PREFIX", help="output path prefix")
    parser.add_argument("--snr", metavar="LO:HI:STEP", help="SNR grid in dB")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        if args.config is not None:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = "{}"
        cfg = parse_config(text)
        if args.preset is not None:
            cfg = apply_preset(cfg, args.preset)
        sweep = cfg.sweep
        if args.snr is not None:
            lo, hi, step = _parse_snr_flag(args.snr)
            sweep = dataclasses.replace(sweep, snr_grid_db=_build_grid(lo, hi, step))
        if args.trials is not None:
            sweep = dataclasses.replace(sweep, trials_per_point=args.trials)
        if args.seed is not None:
            sweep = dataclasses.replace(sweep, master_seed=args.seed)
        cfg = dataclasses.replace(cfg, sweep=sweep)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, prefix=args.out)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
