"""Command-line experiment runner.

Each command writes CSV data plus a JSON metadata file into ``--out``.
Value precedence is ``--set`` flag > ``--config`` file > built-in default.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import BerBoundParams, baseline_ber, ber_bound, ser_bound
from .config import ConfigError, ExperimentConfig, parse_config
from .errors import InvalidInputError
from .modem import ModemConfig
from .predistort import am_am_inverse, pm_correction
from .saleh import am_am, am_pm
from .sim import SweepError, spectral_regrowth, sweep

log = logging.getLogger("padlin")

COMMANDS = ("trace-hpa", "trace-pd", "bounds", "compare", "simulate", "psd")


class _Output:
    def __init__(self, out: Path, command: str, cfg: ExperimentConfig, seed: int | None = None):
        self.out = out
        self.command = command
        self.cfg = cfg
        self.seed = seed
        self.files: list[str] = []

    def header(self) -> str:
        seed = "" if self.seed is None else f" seed={self.seed}"
        return f"# padlin {__version__} command={self.command} config_sha256={self.cfg.fingerprint()}{seed}\n"

    def csv(self, name: str, columns: list[str], rows) -> None:
        buf = io.StringIO()
        buf.write(self.header())
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        self.write(name, buf.getvalue())

    def write(self, name: str, text: str) -> None:
        (self.out / name).write_text(text)
        self.files.append(name)

    def metadata(self, extra: dict | None = None) -> None:
        doc = {
            "toolkit": "padlin",
            "version": __version__,
            "command": self.command,
            "config_sha256": self.cfg.fingerprint(),
            "config": self.cfg.model_dump(mode="json"),
            "files": list(self.files),
        }
        if self.seed is not None:
            doc["seed"] = self.seed
        doc.update(extra or {})
        self.write(f"{self.command}.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


def trace_hpa(cfg: ExperimentConfig, o: _Output) -> None:
    p = cfg.saleh_params()
    u = np.linspace(0.0, cfg.trace.u_max, cfg.trace.points)
    o.csv("trace_hpa.csv", ["u", "am_am", "am_pm"], zip(u, am_am(u, p), am_pm(u, p)))
    o.metadata({"input_sat": p.input_sat, "output_max": p.output_max})


def trace_pd(cfg: ExperimentConfig, o: _Output) -> None:
    p = cfg.saleh_params()
    u = np.linspace(0.0, p.output_max, cfg.trace.points)
    o.csv("trace_pd.csv", ["u", "am_am_inverse", "pm_correction"], zip(u, am_am_inverse(u, p), pm_correction(u, p)))
    spec = cfg.predistorter_spec()
    if spec.lut is not None:
        o.write("lut.csv", o.header() + spec.lut.to_csv())
    o.metadata({"output_max": p.output_max})


def _bound_rows(cfg: ExperimentConfig, with_baselines: bool):
    b = cfg.bounds
    m = b.compare_m
    for n in b.n_values:
        params = BerBoundParams(N=n, d_min_sq=b.d_min_sq, q=b.q)
        for e in b.grid():
            row = [e, n, ber_bound(params, e), ser_bound(params, e)]
            if with_baselines:
                row += [baseline_ber("mpsk", m, e), baseline_ber("mqam", m, e)]
            yield row


def bounds(cfg: ExperimentConfig, o: _Output) -> None:
    o.csv("bounds.csv", ["ebno_db", "n", "ber_bound", "ser_bound"], _bound_rows(cfg, False))
    o.metadata()


def compare(cfg: ExperimentConfig, o: _Output) -> None:
    cols = ["ebno_db", "n", "ber_bound", "ser_bound", "mpsk_ber", "mqam_ber"]
    o.csv("compare.csv", cols, _bound_rows(cfg, True))
    o.metadata({"baseline_m": cfg.bounds.compare_m, "baseline_note": "Gray-coded high-SNR approximations"})


def simulate(cfg: ExperimentConfig, o: _Output) -> None:
    from dataclasses import replace

    base = cfg.link_config()
    workers = cfg.link.workers
    curves = []
    if cfg.simulate.linear:
        (c,) = sweep(replace(base, hpa=None), "ebno", base.ebno_db_grid, workers)
        curves.append(("linear", c))
    if cfg.simulate.ibo_values:
        for c in sweep(base, "ibo", cfg.simulate.ibo_values, workers):
            curves.append((f"ibo_{c.config.hpa.ibo_db:g}", c))
    if cfg.simulate.predistorted:
        (c,) = sweep(replace(base, pd=cfg.predistorter_spec()), "ebno", base.ebno_db_grid, workers)
        curves.append((f"pd_ibo_{base.hpa.ibo_db:g}", c))
    for name, c in curves:
        o.write(f"simulate_{name}.csv", o.header() + c.to_csv())
    o.metadata({"curves": {name: c.to_json() for name, c in curves}})


def psd(cfg: ExperimentConfig, o: _Output) -> None:
    M = cfg.modem.M
    S = cfg.psd.samples_per_symbol or 4 * M
    modem = ModemConfig(M, S, cfg.modem.energy_per_symbol)
    r = spectral_regrowth(
        modem,
        cfg.predistorter_spec(),
        n_symbols=cfg.psd.n_symbols,
        seed=cfg.psd.seed,
        drive=cfg.psd.drive,
        segment=cfg.psd.segment,
        overlap=cfg.psd.overlap,
        band_edge=cfg.psd.band_edge,
    )
    for name, est in (("linear", r.linear), ("hpa", r.hpa), ("pd", r.pd)):
        o.csv(f"psd_{name}.csv", ["freq", "density_db"], zip(est.frequencies, est.density_db()))
    o.metadata(
        {
            "band_edge": r.band_edge,
            "oob_power_ratio_db": {"linear": r.oob_linear_db, "hpa": r.oob_hpa_db, "pd": r.oob_pd_db},
        }
    )


_RUNNERS = {
    "trace-hpa": trace_hpa,
    "trace-pd": trace_pd,
    "bounds": bounds,
    "compare": compare,
    "simulate": simulate,
    "psd": psd,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="padlin",
        description="MF-MSK through a Saleh amplifier with predistortion: traces, bounds and simulations.",
        epilog="Precedence: --set flag > --config file > default. Exit codes: 0 ok, 1 usage/config, 2 runtime.",
    )
    parser.add_argument("--version", action="version", version=f"padlin {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="JSON experiment document (defaults if omitted)")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory (created if missing)")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override a config field, e.g. --set link.seed=7 (value parsed as JSON)",
    )
    parser.add_argument("--dump-config", action="store_true", help="write the resolved config and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        text = args.config.read_text() if args.config else ""
        cfg = parse_config(text, args.overrides)
    except (ConfigError, OSError) as exc:
        print(f"padlin: config error: {exc}", file=sys.stderr)
        return 1
    if args.dump_config:
        sys.stdout.write(cfg.to_json())
        return 0
    seed = cfg.link.seed if args.command == "simulate" else cfg.psd.seed if args.command == "psd" else None
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        out = _Output(args.out, args.command, cfg, seed)
        _RUNNERS[args.command](cfg, out)
    except (InvalidInputError, SweepError, RuntimeError, OSError) as exc:
        print(f"padlin: {args.command} failed: {exc}", file=sys.stderr)
        return 2
    log.info("wrote %s", ", ".join(out.files))
    return 0


if __name__ == "__main__":
    sys.exit(main())
