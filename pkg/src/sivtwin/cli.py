"""Command-line entry point: scenario runs, file artifacts and the reference-check table.

Examples::

    sivtwin cavity-report --out out/
    sivtwin g2 simulate --seed 3 --out out/
    sivtwin g2 fit --input out/g2.csv --out out/
    sivtwin run --config experiment.json
    sivtwin reproduce

A configuration document is JSON with a ``scenario`` id, an optional
``seed`` and one parameter block named after the scenario's section (see
README).  Exit codes: 0 success, 1 failed reference check, 2 invalid input,
3 fit did not converge.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import acceptance, cavity, levels
from . import io as sio
from . import scenarios as S
from .dynamics.correlation import TwoLevelParams, mirror, simulate_g2_histogram
from .dynamics.ple import PLEModel, simulate_ple_scan
from .estimation import (
    LinewidthSeries,
    fit_g2,
    fit_lorentzian,
    purcell_from_linewidths,
)
from .spin import (
    PulseSequence,
    PumpModel,
    extract_init_time,
    extract_t1,
    init_fidelity,
    simulate_pulse_train,
)

log = logging.getLogger("sivtwin")

SCENARIOS = ("cavity-report", "modes-infer", "ple", "g2", "zeeman", "spin", "purcell-fit", "sensitivity", "sweep")
SEED_MAX = 2**64 - 1
EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


class NotConverged(RuntimeError):
    def __init__(self, message, document):
        super().__init__(message)
        self.document = document


@dataclass
class ExperimentConfig:
    scenario: str
    params: dict = field(default_factory=dict)
    seed: Optional[int] = 0
    out: Path = Path("sivtwin_out")
    action: Optional[str] = None
    input: Optional[Path] = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario: unknown id {self.scenario!r} (expected one of {', '.join(SCENARIOS)})")
        if self.seed is not None:
            if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed <= SEED_MAX:
                raise ConfigError("seed: must be an integer in [0, 2^64 - 1]")
        self.out = Path(self.out)


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config: file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be an object")
    if "scenario" not in doc:
        raise ConfigError("scenario: missing")
    known = {"scenario", "seed", "out", "action", "input", "params"}
    params = dict(doc.get("params", {}))
    params.update({k: v for k, v in doc.items() if k not in known})
    return ExperimentConfig(doc["scenario"], params, doc.get("seed", 0), doc.get("out", "sivtwin_out"),
                            doc.get("action"), doc.get("input"))


def _block(cfg: ExperimentConfig, name: str) -> dict:
    block = cfg.params.get(name, {})
    if not isinstance(block, dict):
        raise ConfigError(f"{name}: must be an object")
    return block


def _number(block: dict, key: str, default=None, section: str = "", positive: bool = False) -> float:
    if key not in block:
        if default is None:
            raise ConfigError(f"{section}.{key}: missing")
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{section}.{key}: must be a finite number")
    if positive and value <= 0:
        raise ConfigError(f"{section}.{key}: must be positive")
    return float(value)


def _require_seed(cfg: ExperimentConfig):
    if cfg.seed is None:
        raise ConfigError("seed: required for scenarios that generate noise")


def _check_fit(result, document: dict):
    # a singular fit has no usable uncertainties, so it counts as a failure
    if not result.converged or "singular" in result.flags:
        raise NotConverged(f"fit {result.model} did not converge ({', '.join(result.flags) or 'no flags'})", document)
    for flag in result.flags:
        log.warning("fit %s flagged %s", result.model, flag)


# scenarios; each returns (summary document, {filename: Table or dict})

def run_cavity_report(cfg):
    b = _block(cfg, "cavity")
    if cfg.params and "cavity" not in cfg.params:
        raise ConfigError("cavity: missing")
    roc = _number(b, "roc", S.ROC if not cfg.params else None, "cavity", positive=True)
    wavelength = _number(b, "wavelength", S.WAVELENGTH, "cavity", positive=True)
    finesse = _number(b, "finesse", S.FINESSE, "cavity", positive=True)
    order = b.get("order", 8)
    if "eff_length" in b:
        length = _number(b, "eff_length", None, "cavity", positive=True)
        order = None
    else:
        if not isinstance(order, int) or order < 1:
            raise ConfigError("cavity.order: must be a positive integer")
        length = cavity.effective_length_from_order(order, wavelength)
    try:
        coupling = cavity.EmitterCouplingParams(**b.get("coupling", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cavity.coupling: {exc}") from None
    t_a = _number(b, "transmission_a", 500.0, "cavity")
    t_b = _number(b, "transmission_b", 500.0, "cavity")
    if "excess_loss" in b and "finesse" not in b:
        excess = _number(b, "excess_loss", None, "cavity")
        finesse = cavity.finesse_from_losses(t_a, t_b, excess)
    else:
        # attribute whatever the mirror transmissions do not explain to excess loss
        excess = cavity.excess_loss_for_finesse(finesse, t_a, t_b)
    try:
        geom = cavity.CavityGeometry(roc, length, wavelength, t_a, t_b, excess)
        report = cavity.cavity_report(geom, order, coupling, finesse=finesse)
    except ValueError as exc:
        raise ConfigError(f"cavity: {exc}") from None
    doc = report.to_dict()
    return doc, {"cavity_report.json": doc}


def run_modes_infer(cfg):
    b = _block(cfg, "modes")
    long_ = _number(b, "lambda_long", 841.9e-9, "modes", positive=True)
    short = _number(b, "lambda_short", S.WAVELENGTH, "modes", positive=True)
    try:
        res = cavity.infer_mode_order(long_, short, tol=_number(b, "tol", 0.05, "modes"))
    except ValueError as exc:
        raise ConfigError(f"modes: {exc}") from None
    doc = asdict(res)
    doc["eff_length"] = cavity.effective_length_from_order(res.order, short)
    return doc, {"modes.json": doc}


def _ple_model(b):
    return PLEModel(_number(b, "gamma0", S.LINEWIDTH_GAMMA0, "ple", True), _number(b, "p_sat", 1.0, "ple", True),
                    _number(b, "max_rate", S.PLE_MAX_RATE, "ple", True), _number(b, "background", S.PLE_BACKGROUND, "ple"))


def run_ple(cfg):
    _require_seed(cfg)
    b = _block(cfg, "ple")
    model = _ple_model(b)
    step = _number(b, "step", 10e6, "ple", True)
    grid = S.scan_grid(_number(b, "half_span", 1.5e9, "ple", True), step)
    dwell = _number(b, "dwell", S.scan_dwell(step), "ple", True)
    power = _number(b, "power", 1.0, "ple")
    spec = simulate_ple_scan(model, _number(b, "center", 0.0, "ple"), grid, power, dwell, seed=cfg.seed)
    spec.metadata.update(seed=cfg.seed, power=power)
    fit = fit_lorentzian(spec)
    doc = {"fit": fit.result.to_dict(), "center": fit.center, "fwhm": fit.fwhm,
           "fwhm_expected": model.fwhm(power / model.saturation_power), "flagged": fit.flagged}
    _check_fit(fit.result, doc)
    return doc, {"ple_spectrum.csv": sio.spectrum_to_table(spec), "ple_fit.json": doc}


def run_g2(cfg):
    action = cfg.action or "simulate"
    b = _block(cfg, "g2")
    if action == "simulate":
        _require_seed(cfg)
        params = TwoLevelParams.from_lifetime(_number(b, "lifetime", 1e-9, "g2", True),
                                              _number(b, "rabi_hz", 290e6, "g2", True))
        tau = np.round(np.arange(0, _number(b, "tau_max", 20e-9, "g2", True) + 1e-15,
                                 _number(b, "tau_step", 0.1e-9, "g2", True)), 15)
        trace = simulate_g2_histogram(params, tau, _number(b, "coincidences", S.G2_COINCIDENCES, "g2", True),
                                      seed=cfg.seed,
                                      signal_to_background=_number(b, "signal_to_background", math.inf, "g2", True),
                                      irf_fwhm=_number(b, "irf_fwhm", 0.0, "g2"))
        doc = {"points": int(tau.size), "metadata": trace.metadata}
        files = {"g2.csv": sio.correlation_to_table(trace), "g2_mirrored.csv": sio.correlation_to_table(mirror(trace))}
        return doc, files
    if action == "fit":
        if cfg.input is None:
            raise ConfigError("input: g2 fit needs --input <g2.csv>")
        try:
            trace = sio.table_to_correlation(sio.read_table(cfg.input))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"input: {exc}") from None
        fit = fit_g2(trace)
        doc = {"fit": fit.result.to_dict(), "lifetime": fit.lifetime, "lifetime_sigma": fit.lifetime_sigma,
               "rabi_hz": fit.rabi_hz, "rabi_sigma": fit.rabi_sigma}
        _check_fit(fit.result, doc)
        return doc, {"g2_fit.json": doc}
    raise ConfigError(f"action: unknown g2 action {action!r} (simulate or fit)")


def _branch(b: dict, name: str, default: levels.BranchParams) -> levels.BranchParams:
    values = asdict(default)
    values.update(b.get(name, {}))
    try:
        return levels.BranchParams(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"levels.{name}: {exc}") from None


def run_zeeman(cfg):
    b = _block(cfg, "levels")
    if "ground" in b or "excited" in b:
        ground, excited = _branch(b, "ground", levels.GROUND), _branch(b, "excited", levels.EXCITED)
    else:
        ground, excited = S.zeeman_parameters()
    fields = b.get("fields", list(S.SPLITTING_FIELDS))
    angle = _number(b, "polar_angle", 0.0, "levels")
    template = levels.FieldConfig(0.0, angle)
    try:
        series = levels.splitting_vs_field(ground, excited, fields, template)
    except ValueError as exc:
        raise ConfigError(f"levels.fields: {exc}") from None
    spectra = [levels.transition_spectrum(ground, excited, levels.FieldConfig(f, angle)) for f in fields]
    table = sio.transitions_to_table(fields, spectra, {"ground": asdict(ground), "excited": asdict(excited),
                                                       "polar_angle": angle})
    doc = {"fields": list(map(float, fields)), "splittings": series.splittings.tolist(), "slope": series.slope,
           "ground": asdict(ground), "excited": asdict(excited)}
    return doc, {"transitions.csv": table, "zeeman.json": doc}


def run_spin(cfg):
    _require_seed(cfg)
    b = _block(cfg, "spin")
    reps = int(_number(b, "repetitions", S.SPIN_REPETITIONS, "spin", True))
    try:
        model = PumpModel.from_init_time(_number(b, "tau_init", S.TAU_INIT, "spin", True),
                                         _number(b, "t1", S.T1_SPIN, "spin", True),
                                         counts_per_population=_number(b, "counts_per_population", S.SPIN_COUNTS, "spin"),
                                         background=_number(b, "background", S.SPIN_BACKGROUND, "spin"))
        bin_w = _number(b, "bin_width", S.SPIN_BIN, "spin", True)
        init_len = _number(b, "init_pulse", S.INIT_PULSE, "spin", True)
        init_seq = PulseSequence(init_len, 1, init_len, bin_width=bin_w, repetitions=reps)
        rec_seq = PulseSequence(_number(b, "pulse_length", 750e-9, "spin", True),
                                int(_number(b, "n_pulses", 10, "spin", True)),
                                _number(b, "wait_initial", 75e-9, "spin", True),
                                _number(b, "wait_increment", 75e-9, "spin"), bin_width=bin_w, repetitions=reps)
    except ValueError as exc:
        raise ConfigError(f"spin: {exc}") from None
    child = S.seeds(cfg.seed, 2)
    init_trace = simulate_pulse_train(model, init_seq, child[0])
    rec_trace = simulate_pulse_train(model, rec_seq, child[1])
    tau, tau_sigma, decay = extract_init_time(init_trace)
    fid = init_fidelity(init_trace, model=model)
    t1 = extract_t1(rec_trace)
    doc = {"tau_init": tau, "tau_init_sigma": tau_sigma, "fidelity_count_ratio": fid.count_ratio,
           "fidelity_model": fid.model_fidelity, "t1": t1.t1, "t1_sigma": t1.t1_sigma,
           "init_fit": decay.result.to_dict(), "t1_fit": t1.result.to_dict(),
           "truth": {"tau_init": model.init_time, "t1": model.t1_spin, "pump_rate": model.pump_rate}}
    _check_fit(decay.result, doc)
    _check_fit(t1.result, doc)
    return doc, {"spin_init_trace.csv": sio.fluorescence_to_table(init_trace),
                 "spin_recovery_trace.csv": sio.fluorescence_to_table(rec_trace), "spin.json": doc}


def run_purcell_fit(cfg):
    b = _block(cfg, "purcell")
    try:
        series = LinewidthSeries(b["orders"], b["fwhm"], b["sigma"]) if "orders" in b else S.PURCELL_SERIES
        fit = purcell_from_linewidths(series, _number(b, "roc", S.ROC, "purcell", True),
                                      _number(b, "wavelength", S.WAVELENGTH, "purcell", True),
                                      _number(b, "finesse", S.FINESSE, "purcell", True),
                                      b.get("mode", "fixed"), _number(b, "gamma_free", S.GAMMA_FREE_FIXED, "purcell"))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"purcell: {exc}") from None
    doc = {"mode": fit.mode, "purcell": fit.purcell, "purcell_sigma": fit.purcell_sigma,
           "gamma_free": fit.gamma_free, "gamma_free_sigma": fit.gamma_free_sigma,
           "coupling_scale": fit.coupling_scale, "fit": fit.result.to_dict()}
    _check_fit(fit.result, doc)
    return doc, {"purcell_fit.json": doc}


def run_sensitivity(cfg):
    _require_seed(cfg)
    b = _block(cfg, "sensitivity")
    scans = S.field_scans(cfg.seed)
    dep = S.field_dependence(scans, _number(b, "at_field", 3.2, "sensitivity"))
    doc = {"sensitivity": dep.sensitivity, "acquisition_time": dep.acquisition_time,
           "fields": dep.fields.tolist(), "positions": dep.positions.tolist(), "sigmas": dep.sigmas.tolist(),
           "fit": dep.fit.to_dict()}
    files = {f"field_scan_{b_:.1f}T.csv": sio.spectrum_to_table(s) for b_, s in zip(scans.fields, scans.spectra)}
    files["sensitivity.json"] = doc
    _check_fit(dep.fit, doc)
    return doc, files


def _set_path(params: dict, dotted: str, value):
    keys = dotted.split(".")
    node = params
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def run_sweep(cfg):
    b = _block(cfg, "sweep")
    inner = b.get("scenario")
    if inner not in SCENARIOS or inner == "sweep":
        raise ConfigError("sweep.scenario: must name a non-sweep scenario")
    if "parameter" not in b or not isinstance(b.get("values"), list) or not b["values"]:
        raise ConfigError("sweep.parameter/values: need a dotted parameter path and a non-empty list")
    base = {k: v for k, v in cfg.params.items() if k != "sweep"}
    child = S.seeds(cfg.seed if cfg.seed is not None else 0, len(b["values"]))
    index = []
    for k, value in enumerate(b["values"]):
        params = copy.deepcopy(base)
        _set_path(params, b["parameter"], value)
        sub = ExperimentConfig(inner, params, child[k], cfg.out / f"{k:03d}", b.get("action"))
        doc, files = RUNNERS[inner](sub)
        _write(sub.out, files)
        index.append({"index": k, "value": value, "seed": child[k], "dir": f"{k:03d}", "result": doc})
    summary = {"scenario": inner, "parameter": b["parameter"], "runs": index}
    return summary, {"index.json": summary}


RUNNERS = {
    "cavity-report": run_cavity_report,
    "modes-infer": run_modes_infer,
    "ple": run_ple,
    "g2": run_g2,
    "zeeman": run_zeeman,
    "spin": run_spin,
    "purcell-fit": run_purcell_fit,
    "sensitivity": run_sensitivity,
    "sweep": run_sweep,
}


def _write(out: Path, files: dict):
    out.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        if isinstance(content, sio.Table):
            sio.write_table(out / name, content)
        else:
            sio.write_document(out / name, content)


def run(cfg: ExperimentConfig):
    """Execute one configured scenario and write its artifacts; returns (exit code, summary)."""
    try:
        doc, files = RUNNERS[cfg.scenario](cfg)
    except NotConverged as exc:
        log.error("%s", exc)
        _write(cfg.out, {f"{cfg.scenario}_failed.json": exc.document})
        return EXIT_NOT_CONVERGED, exc.document
    _write(cfg.out, files)
    log.info("wrote %d artifacts to %s", len(files), cfg.out)
    return EXIT_OK, doc


def _summary_text(doc, indent=0) -> str:
    lines = []
    pad = "  " * indent
    for key, value in doc.items():
        if isinstance(value, dict):
            if key in ("fit", "init_fit", "t1_fit"):
                continue
            lines.append(f"{pad}{key}:")
            lines.append(_summary_text(value, indent + 1))
        elif isinstance(value, list) and len(value) > 8:
            lines.append(f"{pad}{key}: [{len(value)} values]")
        else:
            lines.append(f"{pad}{key}: {value}")
    return "\n".join(l for l in lines if l)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sivtwin", description=__doc__.split("\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON configuration document")
    common.add_argument("--seed", type=int, help="64-bit seed for every noise source")
    common.add_argument("--out", type=Path, help="directory for data files and documents")
    common.add_argument("--format", choices=("text", "document"), default="text", help="stdout format")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the scenario named in --config")
    for name in SCENARIOS:
        p = sub.add_parser(name, parents=[common], help=f"run the {name} scenario")
        if name == "g2":
            p.add_argument("action", nargs="?", choices=("simulate", "fit"), default="simulate")
            p.add_argument("--input", type=Path, help="histogram table for 'g2 fit'")
    rep = sub.add_parser("reproduce", parents=[common], help="run the reference checks and print the table")
    rep.add_argument("--verbose", action="store_true", help="list every sub-check")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = load_config(args.config)
        if args.command not in ("run", cfg.scenario):
            raise ConfigError(f"scenario: config names {cfg.scenario!r} but command is {args.command!r}")
    elif args.command == "run":
        raise ConfigError("config: 'run' needs --config")
    else:
        cfg = ExperimentConfig(args.command)
    if args.seed is not None:
        cfg.seed = args.seed
        ExperimentConfig.__post_init__(cfg)
    if args.out is not None:
        cfg.out = args.out
    if getattr(args, "action", None) and args.command == "g2":
        cfg.action = args.action
    if getattr(args, "input", None) is not None:
        cfg.input = args.input
    return cfg


def main(argv=None) -> int:
    level = os.environ.get("SIVTWIN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(asctime)s %(levelname)s %(message)s")
    args = build_parser().parse_args(argv)

    if args.command == "reproduce":
        rows = acceptance.run_all()
        if args.format == "document":
            sys.stdout.write(sio.dumps_document(acceptance.as_document(rows)))
        else:
            print(acceptance.format_rows(rows, verbose=args.verbose))
        if args.out is not None:
            _write(args.out, {"reference_checks.json": acceptance.as_document(rows)})
        return EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK_FAILED

    try:
        cfg = _config_from_args(args)
        code, doc = run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.format == "document":
        sys.stdout.write(sio.dumps_document(doc))
    else:
        print(_summary_text(doc))
    if code == EXIT_NOT_CONVERGED:
        print("error: fit did not converge", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
