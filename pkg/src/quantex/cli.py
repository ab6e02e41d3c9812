"""Config-driven scenario runner.

Scenarios are JSON documents validated against the published schema
(``quantex/schema/scenario.schema.json``; unknown keys are rejected).  A
run writes CSV/JSON artifacts plus ``manifest.json`` (config hash,
constants-table version and hash, tolerances) into the output directory;
every write is temp-file + rename and nothing is written until the whole
computation has finished, so a failed run leaves no partial artifacts.

Exit codes: 0 success, 2 validation failure, 3 numerical-tolerance abort,
64 unknown subcommand.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .analysis import (
    conditioned_energy_deficit,
    default_initial_state,
    detuning_scan,
    energy_ledger,
    golden_rule_fit,
    intensity_scan,
    ledger_to_csv,
    rabi_peak_scan,
    scan_to_csv,
    signature_report,
    time_scan,
)
from .constants import PhysicalConstants
from .dynamics import (
    EvolutionConfig,
    HybridState,
    Method,
    evolve_driven,
    evolve_hybrid,
    evolve_unitary,
)
from .errors import CoherentTailError, ConfigError, ToleranceError
from .hilbert import basis_state, ground_state
from .models import (
    BeamSplitterParams,
    DrivenOscillatorParams,
    GravitoParams,
    JaynesCummingsParams,
    ModelFamily,
    ModelSpec,
    QubitSemiClassicalParams,
    build_beam_splitter_hamiltonian,
    build_jc_hamiltonian,
    gravito_classical_params,
    gravito_interaction_coefficient,
    gravito_vacuum_coupling,
    gw_energy_density,
)

COMMANDS = ("run", "list-scenarios", "validate", "version")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3
EXIT_USAGE = 64

_PARAM_TYPES = {
    "qubit_drive": QubitSemiClassicalParams,
    "jaynes_cummings": JaynesCummingsParams,
    "beam_splitter": BeamSplitterParams,
    "oscillator_drive": DrivenOscillatorParams,
}

_QUANTUM = ("jaynes_cummings", "beam_splitter")


# ---------------------------------------------------------------------------
# config loading and validation


def _schema() -> dict:
    text = resources.files("quantex").joinpath(
        "schema/scenario.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def bundled_scenarios() -> dict[str, str]:
    """Name -> JSON text of every scenario shipped with the package."""
    root = resources.files("quantex").joinpath("scenarios")
    out = {}
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            out[entry.name[:-5]] = entry.read_text(encoding="utf-8")
    return out


def load_config(source: str) -> dict:
    """Load a scenario from a filesystem path or a bundled scenario name."""
    if os.path.exists(source):
        with open(source, "r", encoding="utf-8") as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{source} is not valid JSON: {exc}") from exc
    bundle = bundled_scenarios()
    if source in bundle:
        return json.loads(bundle[source])
    raise ConfigError(f"no file or bundled scenario named {source!r}")


@dataclass
class Scenario:
    name: str
    kind: str
    config: dict
    model: ModelSpec | None = None
    evolution: EvolutionConfig | None = None
    target: tuple[int, int] | None = None


def _build_model(block: dict) -> ModelSpec:
    family = ModelFamily(block["family"])
    params = _PARAM_TYPES[block["family"]](**block["params"])
    return ModelSpec(family, params, bool(block.get("back_reaction", False)))


def _build_axis(block: dict, name: str) -> np.ndarray:
    start, stop, points = block["start"], block["stop"], block["points"]
    if start == stop:
        raise ConfigError(f"{name} axis must span a nonzero range")
    if block.get("scale", "linear") == "log":
        if start <= 0 or stop <= 0:
            raise ConfigError(f"{name} axis on a log scale needs positive bounds")
        return np.geomspace(start, stop, points)
    return np.linspace(start, stop, points)


def validate_config(cfg: dict) -> Scenario:
    """Schema plus physics-domain validation; builds the typed pieces but
    runs nothing."""
    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"schema violation at {list(exc.absolute_path)}: "
                          f"{exc.message}") from exc

    scenario = Scenario(name=cfg["scenario"], kind=cfg["kind"], config=cfg)
    try:
        if "model" in cfg:
            scenario.model = _build_model(cfg["model"])
        if "evolution" in cfg:
            ev = dict(cfg["evolution"])
            ev["method"] = Method(ev["method"])
            scenario.evolution = EvolutionConfig(**ev)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    model, kind = scenario.model, scenario.kind
    if model is not None and scenario.evolution is not None:
        method = scenario.evolution.method
        if model.family.value in _QUANTUM and method is not Method.MATRIX_EXPONENTIAL:
            raise ConfigError("quantized-field models evolve exactly; "
                              "use method matrix_exponential")
        if model.is_driven and not model.back_reaction \
                and method is Method.MATRIX_EXPONENTIAL:
            raise ConfigError("driven models need midpoint_piecewise or rk4")
        if model.back_reaction and method is not Method.MIDPOINT:
            raise ConfigError("mean-field runs use the fixed split scheme; "
                              "set method midpoint_piecewise")

    if "target" in cfg:
        t = (cfg["target"]["factor"], cfg["target"]["level"])
        dims = model.params.space.dims if model is not None else ()
        if model is None or t[0] >= len(dims) or t[1] >= dims[t[0]]:
            raise ConfigError(f"target {t} outside the model space")
        scenario.target = t

    if "initial_state" in cfg:
        if kind != "audit":
            raise ConfigError("initial_state applies to audit scenarios only")
        _check_initial(cfg["initial_state"], model)

    if kind == "scan":
        if model.back_reaction:
            raise ConfigError("scans drive the prescribed or quantized models only")
        _check_scan_axes(cfg["scan"]["axis"], _build_axis(cfg["scan"], "scan"), model)
    elif kind == "signatures":
        if model.back_reaction:
            raise ConfigError("signature scans drive the prescribed or quantized "
                              "models only")
        if model.family is ModelFamily.JAYNES_CUMMINGS:
            raise ConfigError("intensity scans need a coherent-field or driven model")
        for axis_name in ("detuning", "intensity", "time"):
            _check_scan_axes(axis_name,
                             _build_axis(cfg["scans"][axis_name], axis_name), model)
    elif kind == "audit":
        if model.back_reaction and cfg.get("initial_state", {"type": "default"})["type"] \
                not in ("default", "hybrid"):
            raise ConfigError("mean-field audits start from a hybrid (x, p) point")
    elif kind == "golden_rule":
        if cfg["golden_rule"]["ratio_max"] <= cfg["golden_rule"]["ratio_min"]:
            raise ConfigError("golden_rule needs ratio_max > ratio_min")
    elif kind == "constants":
        g = cfg["gravito"]
        if g["points"] > 1 and g["nu_stop"] == g["nu_start"]:
            raise ConfigError("constants grid needs distinct nu bounds")
    return scenario


def _check_initial(block: dict, model: ModelSpec):
    kind = block["type"]
    if kind == "hybrid":
        if not model.back_reaction:
            raise ConfigError("hybrid initial state needs a back_reaction model")
        return
    if model.back_reaction and kind not in ("default",):
        raise ConfigError("mean-field audits start from a hybrid (x, p) point")
    if kind == "fock":
        dims = model.params.space.dims
        levels = block["levels"]
        if len(levels) != len(dims):
            raise ConfigError(f"fock levels must list {len(dims)} entries")
        for lv, d in zip(levels, dims):
            if lv >= d:
                raise ConfigError(f"fock level {lv} exceeds factor dim {d}")


def _check_scan_axes(axis_name: str, axis: np.ndarray, model: ModelSpec):
    if axis_name == "detuning":
        if np.min(axis) + model.params.omega <= 0:
            raise ConfigError("detuning scan would push the field frequency "
                              "to zero or below")
    elif axis_name == "intensity":
        if np.min(axis) <= 0:
            raise ConfigError("intensity scan needs positive intensities")
        if model.family is ModelFamily.JAYNES_CUMMINGS:
            raise ConfigError("intensity scans need a coherent-field or driven model")
    elif axis_name == "time":
        if np.min(axis) <= 0:
            raise ConfigError("time scan needs positive readout times")


# ---------------------------------------------------------------------------
# execution


def _initial_quantum_state(scenario: Scenario):
    block = scenario.config.get("initial_state", {"type": "default"})
    model = scenario.model
    if block["type"] == "default":
        return default_initial_state(model)
    if block["type"] == "ground":
        return ground_state(model.params.space)
    if block["type"] == "fock":
        return basis_state(model.params.space, block["levels"])
    raise ConfigError(f"unsupported quantum initial state {block['type']!r}")


def _run_audit(scenario: Scenario, workers: int) -> dict:
    model, cfg = scenario.model, scenario.evolution
    if model.back_reaction:
        block = scenario.config.get("initial_state", {"type": "default"})
        if block["type"] == "hybrid":
            x, p = float(block["x"]), float(block["p"])
        else:
            x, p = 0.0, float(model.params.x0)
        s0 = HybridState(x, p, ground_state(model.params.space))
        traj = evolve_hybrid(model, s0, cfg)
    elif model.family.value in _QUANTUM:
        builder = build_beam_splitter_hamiltonian \
            if model.family is ModelFamily.BEAM_SPLITTER else build_jc_hamiltonian
        traj = evolve_unitary(builder(model.params), _initial_quantum_state(scenario), cfg)
    else:
        traj = evolve_driven(model.params, _initial_quantum_state(scenario), cfg)

    ledger = energy_ledger(traj, model)
    results = {"ledger": ledger}
    if "json" in scenario.config["output"]:
        if model.back_reaction:
            residual = ledger.backreaction_residual
            results["summary"] = {
                "model": model.family.value + "+back_reaction",
                "max_total_drift": ledger.total_drift(),
                "max_abs_residual": float(np.nanmax(np.abs(residual)))
                if residual is not None else None,
                "e_classical_delta": float(ledger.e_classical[-1]
                                           - ledger.e_classical[0]),
            }
        else:
            level = scenario.target[1] if scenario.target else 1
            report = conditioned_energy_deficit(traj, model, level=level)
            results["summary"] = {"model": model.family.value, **report.to_dict()}
    return results


def _run_scan(scenario: Scenario, workers: int) -> dict:
    cfg = scenario.config
    axis = _build_axis(cfg["scan"], "scan")
    name = cfg["scan"]["axis"]
    runner = {"detuning": detuning_scan, "intensity": intensity_scan,
              "time": time_scan}[name]
    scan = runner(scenario.model, scenario.evolution, axis,
                  target=scenario.target, workers=workers)
    return {"scan": scan}


def _run_signatures(scenario: Scenario, workers: int) -> dict:
    cfg = scenario.config
    scans = {
        "detuning": detuning_scan(scenario.model, scenario.evolution,
                                  _build_axis(cfg["scans"]["detuning"], "detuning"),
                                  target=scenario.target, workers=workers),
        "intensity": intensity_scan(scenario.model, scenario.evolution,
                                    _build_axis(cfg["scans"]["intensity"], "intensity"),
                                    target=scenario.target, workers=workers),
        "time": time_scan(scenario.model, scenario.evolution,
                          _build_axis(cfg["scans"]["time"], "time"),
                          target=scenario.target, workers=workers),
    }
    report = signature_report(scans["detuning"], scans["intensity"], scans["time"])
    return {"scans": scans, "report": report}


def _run_golden_rule(scenario: Scenario) -> dict:
    block = scenario.config["golden_rule"]
    deltas = block["g"] * np.geomspace(block["ratio_min"], block["ratio_max"],
                                       block["points"])
    scan = rabi_peak_scan(block["g"], deltas)
    fit = golden_rule_fit(scan)
    return {"scan": scan, "fit": fit}


def _run_constants(scenario: Scenario) -> dict:
    block = scenario.config["gravito"]
    constants = PhysicalConstants.from_env()
    if block["points"] == 1:
        nus = np.array([block["nu_start"]])
    else:
        nus = np.linspace(block["nu_start"], block["nu_stop"], block["points"])
    rows, worst = [], 0.0
    for nu in nus:
        p = GravitoParams(mass=block["mass"], length=block["length"], nu=float(nu),
                          omega0=block["omega0"], strain=block["strain"],
                          volume=block["volume"])
        mapped = gravito_classical_params(p, constants=constants)
        coeff = gravito_interaction_coefficient(p, constants=constants)
        rows.append({
            "nu": float(nu),
            "vacuum_coupling": gravito_vacuum_coupling(p, constants=constants),
            "drive_coupling": mapped.coupling,
            "zero_point_x0": mapped.x0,
            "interaction_coefficient": coeff,
            "wave_energy_density": gw_energy_density(p, constants=constants),
        })
        worst = max(worst, abs(mapped.coupling * mapped.x0 - coeff) / coeff)
    return {"rows": rows, "constants": constants, "identity_dev": worst}


# ---------------------------------------------------------------------------
# artifact writing


def _atomic_write_text(path: Path, content: str):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="ascii", newline="\n") as fh:
        fh.write(content)
    os.replace(tmp, path)


def _atomic_csv(write_fn, obj, path: Path):
    tmp = path.with_name(path.name + ".tmp")
    write_fn(obj, tmp)
    os.replace(tmp, path)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _constants_csv(rows) -> str:
    cols = ["nu", "vacuum_coupling", "drive_coupling", "zero_point_x0",
            "interaction_coefficient", "wave_energy_density"]
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(repr(float(row[c])) for c in cols))
    return "\n".join(lines) + "\n"


def write_artifacts(scenario: Scenario, results: dict, out_dir: Path) -> list[str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    output = scenario.config["output"]
    written: list[str] = []

    def emit_json(name: str, payload: dict):
        _atomic_write_text(out_dir / name, _json_text(payload))
        written.append(name)

    kind = scenario.kind
    if kind == "audit":
        if "csv" in output:
            _atomic_csv(ledger_to_csv, results["ledger"], out_dir / output["csv"])
            written.append(output["csv"])
        if "json" in output:
            emit_json(output["json"], results["summary"])
    elif kind == "scan":
        _atomic_csv(scan_to_csv, results["scan"], out_dir / output["csv"])
        written.append(output["csv"])
    elif kind == "signatures":
        prefix = output.get("csv_prefix", "scan")
        for axis_name, scan in results["scans"].items():
            name = f"{prefix}_{axis_name}.csv"
            _atomic_csv(scan_to_csv, scan, out_dir / name)
            written.append(name)
        if "json" in output:
            emit_json(output["json"], results["report"].to_dict())
    elif kind == "golden_rule":
        if "csv" in output:
            _atomic_csv(scan_to_csv, results["scan"], out_dir / output["csv"])
            written.append(output["csv"])
        if "json" in output:
            emit_json(output["json"], {"fit": results["fit"].to_dict(),
                                       "expected_slope": -2.0})
    elif kind == "constants":
        if "csv" in output:
            _atomic_write_text(out_dir / output["csv"],
                               _constants_csv(results["rows"]))
            written.append(output["csv"])
        if "json" in output:
            c = results["constants"]
            emit_json(output["json"], {
                "constants_version": c.version,
                "constants_hash": c.table_hash(),
                "identity_max_relative_deviation": results["identity_dev"],
            })

    manifest = {
        "scenario": scenario.name,
        "package_version": __version__,
        "config_sha256": hashlib.sha256(
            json.dumps(scenario.config, sort_keys=True).encode()).hexdigest(),
        "constants": {
            "version": PhysicalConstants.from_env().version,
            "hash": PhysicalConstants.from_env().table_hash(),
        },
        "tolerances": {
            "norm_drift_tol": scenario.evolution.norm_drift_tol
            if scenario.evolution else None,
            "top_level_tol": scenario.evolution.top_level_tol
            if scenario.evolution else None,
        },
        "artifacts": sorted(written),
    }
    _atomic_write_text(out_dir / "manifest.json", _json_text(manifest))
    written.append("manifest.json")
    return written


def run_scenario(scenario: Scenario, out_dir: Path, workers: int = 1) -> list[str]:
    """Compute everything first, then write; returns written artifact names."""
    if scenario.kind == "audit":
        results = _run_audit(scenario, workers)
    elif scenario.kind == "scan":
        results = _run_scan(scenario, workers)
    elif scenario.kind == "signatures":
        results = _run_signatures(scenario, workers)
    elif scenario.kind == "golden_rule":
        results = _run_golden_rule(scenario)
    elif scenario.kind == "constants":
        results = _run_constants(scenario)
    else:  # pragma: no cover - schema forbids it
        raise ConfigError(f"unknown kind {scenario.kind!r}")
    return write_artifacts(scenario, results, out_dir)


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantex",
        description="Run, validate, and list energy-exchange scenarios.")
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="execute a scenario and write artifacts")
    run.add_argument("config", help="bundled scenario name or path to a JSON config")
    run.add_argument("--output-dir", default=None,
                     help="artifact directory (default: ./<scenario name>)")
    run.add_argument("--workers", type=int, default=1,
                     help="scan-point parallelism (output is order-independent)")
    run.add_argument("--dt", type=float, default=None,
                     help="override the evolution time step")
    run.add_argument("--t-max", type=float, default=None,
                     help="override the evolution horizon")

    val = sub.add_parser("validate",
                         help="schema + physics checks without running")
    val.add_argument("config")

    sub.add_parser("list-scenarios", help="list bundled scenarios")
    sub.add_parser("version", help="print package and constants-table versions")
    return parser


def _apply_overrides(cfg: dict, dt: float | None, t_max: float | None) -> dict:
    if dt is None and t_max is None:
        return cfg
    if "evolution" not in cfg:
        raise ConfigError("dt/t_max overrides need a scenario with an evolution block")
    cfg = json.loads(json.dumps(cfg))  # deep copy, JSON-safe by construction
    if dt is not None:
        cfg["evolution"]["dt"] = dt
    if t_max is not None:
        cfg["evolution"]["t_max"] = t_max
    return cfg


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and not argv[0].startswith("-") and argv[0] not in COMMANDS:
        print(f"unknown subcommand {argv[0]!r}; expected one of: "
              + ", ".join(COMMANDS), file=sys.stderr)
        return EXIT_USAGE
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    if args.command == "version":
        constants = PhysicalConstants.from_env()
        print(f"quantex {__version__}")
        print(f"constants {constants.version} {constants.table_hash()}")
        return EXIT_OK

    if args.command == "list-scenarios":
        for name, text in bundled_scenarios().items():
            desc = json.loads(text).get("description", "")
            print(f"{name}: {desc}")
        return EXIT_OK

    try:
        cfg = load_config(args.config)
        if args.command == "run":
            cfg = _apply_overrides(cfg, args.dt, args.t_max)
        scenario = validate_config(cfg)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"{scenario.name}: configuration valid")
        return EXIT_OK

    out_dir = Path(args.output_dir) if args.output_dir else Path(scenario.name)
    try:
        written = run_scenario(scenario, out_dir, workers=max(1, args.workers))
    except (ToleranceError, CoherentTailError) as exc:
        print(f"numerical-tolerance abort: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for name in written:
        print(out_dir / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
