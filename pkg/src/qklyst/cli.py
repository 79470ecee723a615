"""
Command-line interface.

    qklyst gain-curve [--gamma-min 0] [--gamma-max 4pi] [--steps 2000] [--format csv|json] [--out FILE]
    qklyst design --frequency HZ --gap-width M [--gamma G]
    qklyst rates [--config FILE] [device/sweep overrides] [--format csv|json] [--out FILE]
    qklyst amplify --bell PhiPlus --n 1 --eta 0
    qklyst werner (--si S --sm S --sf S [--convention ...] | --p P)
    qklyst verify [--suite all|quadrature|golden-rule|expansion|identity|ppt]

Exit codes: 0 success, 1 verification failed, 2 usage or I/O error,
3 physically invalid parameters, 4 model output out of range.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
import warnings

from qklyst import design_solver, oracle
from qklyst.errors import ModelRangeError, PhysicalValidityError
from qklyst.klystron_model import KlystronParams, ModelValidityWarning, rate_total
from qklyst.quantum_state import (
    BASIS,
    Bell,
    WernerConvention,
    WernerSpec,
    amplify_channel,
    bell_state,
    concurrence,
    werner_p,
    werner_state,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_PHYSICAL = 3
EXIT_RANGE = 4

CONFIG_ENV = "QKLYST_CONFIG"

# key -> (required unit or None for dimensionless, parser)
_NUM = float
CONFIG_SCHEMA: dict[str, dict[str, tuple[str | None, object]]] = {
    "gain-curve": {
        "gamma_min": (None, _NUM),
        "gamma_max": (None, _NUM),
        "steps": (None, int),
        "format": ("text", str),
    },
    "design": {
        "frequency": ("Hz", _NUM),
        "gap_width": ("m", _NUM),
        "gamma": (None, _NUM),
    },
    "device": {
        "frequency": ("Hz", _NUM),
        "angular_frequency": ("rad/s", _NUM),
        "gap_width": ("m", _NUM),
        "capacitance": ("F", _NUM),
        "effective_area": ("m^2", _NUM),
        "quant_volume": ("m^3", _NUM),
        "velocity": ("m/s", _NUM),
        "transit_angle": (None, _NUM),
        "drift_length": ("m", _NUM),
        "box_length": ("m", _NUM),
        "electrons": (None, _NUM),
        "photons": (None, _NUM),
    },
    "sweep": {
        "axis": ("text", str),
        "start": ("axis", _NUM),
        "stop": ("axis", _NUM),
        "steps": (None, int),
    },
    "rates": {
        "format": ("text", str),
    },
    "amplify": {
        "bell": ("text", str),
        "n": (None, int),
        "eta": (None, _NUM),
    },
    "werner": {
        "si": (None, _NUM),
        "sm": (None, _NUM),
        "sf": (None, _NUM),
        "convention": ("text", str),
        "p": (None, _NUM),
        "bell": ("text", str),
    },
    "verify": {
        "suite": ("text", str),
    },
}

AXIS_UNITS = {"omega": "rad/s", "d": "m", "v": "m/s", "n": None, "N": None}


class UsageError(ValueError):
    pass


def _parse_value(section: str, key: str, raw: str, axis: str | None = None):
    unit, parse = CONFIG_SCHEMA[section][key]
    raw = raw.strip()
    if unit == "text":
        return raw
    if unit == "axis":
        unit = AXIS_UNITS.get(axis or "", None)
    parts = raw.split()
    if unit is None:
        if len(parts) != 1:
            raise UsageError(f"[{section}] {key} is dimensionless; got {raw!r}")
        number = parts[0]
    else:
        if len(parts) != 2:
            raise UsageError(f"[{section}] {key} needs a unit suffix '{unit}', got {raw!r}")
        number, given = parts
        if given != unit:
            raise UsageError(f"[{section}] {key} must be given in {unit}, got {given!r}")
    try:
        return parse(number)
    except ValueError:
        raise UsageError(f"[{section}] {key}: cannot parse {number!r}") from None


def load_config(path: str) -> dict[str, dict]:
    """Read a ``key = value unit`` config file into ``{section: {key: value}}``."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from None

    result: dict[str, dict] = {}
    for section in parser.sections():
        if section not in CONFIG_SCHEMA:
            raise UsageError(f"unknown config section [{section}]")
        items = dict(parser.items(section))
        unknown = sorted(set(items) - set(CONFIG_SCHEMA[section]))
        if unknown:
            raise UsageError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
        axis = items.get("axis", "").strip() if section == "sweep" else None
        result[section] = {k: _parse_value(section, k, v, axis) for k, v in items.items()}
    return result


def _config_for(args) -> dict[str, dict]:
    path = args.config or os.environ.get(CONFIG_ENV)
    return load_config(path) if path else {}


def _merge(file_values: dict, args, mapping: dict[str, str], defaults: dict | None = None) -> dict:
    """Flags (non-None) override file values, which override defaults."""
    merged = dict(defaults or {})
    merged.update(file_values)
    for key, dest in mapping.items():
        value = getattr(args, dest, None)
        if value is not None:
            merged[key] = value
    return merged


# --------------------------------------------------------------------------
# output helpers


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc.strerror}") from None


# --------------------------------------------------------------------------
# commands


def cmd_gain_curve(args) -> int:
    values = _merge(
        _config_for(args).get("gain-curve", {}),
        args,
        {"gamma_min": "gamma_min", "gamma_max": "gamma_max", "steps": "steps", "format": "format"},
        {"gamma_min": 0.0, "gamma_max": 4.0 * math.pi, "steps": 2000, "format": "csv"},
    )
    curve = design_solver.sweep_gain(values["gamma_min"], values["gamma_max"], values["steps"])
    if values["format"] == "json":
        text = _dump_json({
            "columns": ["gamma", "g"],
            "rows": [[float(gm), float(g)] for gm, g in curve],
        })
    elif values["format"] == "csv":
        text = _csv_text(["gamma", "g"], [[float(gm), float(g)] for gm, g in curve])
    else:
        raise UsageError(f"unknown format {values['format']!r}")
    _emit(text, args.out)
    return EXIT_OK


def cmd_design(args) -> int:
    values = _merge(
        _config_for(args).get("design", {}),
        args,
        {"frequency": "frequency", "gap_width": "gap_width", "gamma": "gamma"},
    )
    for key in ("frequency", "gap_width"):
        if key not in values:
            raise UsageError(f"missing --{key.replace('_', '-')}")
    report = design_solver.design_for(values["frequency"], values["gap_width"], values.get("gamma"))
    _emit(_dump_json(report.as_json()), args.out)
    return EXIT_OK


_DEVICE_FLAGS = {
    "frequency": "frequency",
    "angular_frequency": "angular_frequency",
    "gap_width": "gap_width",
    "capacitance": "capacitance",
    "effective_area": "effective_area",
    "quant_volume": "quant_volume",
    "velocity": "velocity",
    "transit_angle": "transit_angle",
    "drift_length": "drift_length",
    "box_length": "box_length",
    "electrons": "electrons",
    "photons": "photons",
}
_SWEEP_FLAGS = {"axis": "sweep_axis", "start": "sweep_start", "stop": "sweep_stop", "steps": "sweep_steps"}


def params_from_device(device: dict) -> KlystronParams:
    """Build :class:`KlystronParams` from a merged ``[device]`` mapping."""
    if ("frequency" in device) == ("angular_frequency" in device):
        raise UsageError("give exactly one of frequency (Hz) or angular_frequency (rad/s)")
    omega = device.get("angular_frequency")
    if omega is None:
        omega = 2.0 * math.pi * device["frequency"]
    for key in ("gap_width", "quant_volume"):
        if key not in device:
            raise UsageError(f"missing device parameter {key}")
    if ("velocity" in device) == ("transit_angle" in device):
        raise UsageError("give exactly one of velocity (m/s) or transit_angle")
    d = device["gap_width"]
    v = device.get("velocity")
    if v is None:
        v = omega * d / (2.0 * device["transit_angle"])
    if ("capacitance" in device) == ("effective_area" in device):
        raise UsageError("give exactly one of capacitance (F) or effective_area (m^2)")
    return KlystronParams(
        omega=omega,
        d=d,
        v=v,
        quant_volume=device["quant_volume"],
        capacitance=device.get("capacitance"),
        effective_area=device.get("effective_area"),
        drift_length=device.get("drift_length"),
        box_length=device.get("box_length"),
        N=device.get("electrons", 1.0),
        n=device.get("photons", 0.0),
    )


def cmd_rates(args) -> int:
    config = _config_for(args)
    device = _merge(config.get("device", {}), args, _DEVICE_FLAGS)
    sweep = _merge(config.get("sweep", {}), args, _SWEEP_FLAGS)
    fmt = _merge(config.get("rates", {}), args, {"format": "format"}, {"format": "csv"})["format"]
    if fmt not in ("csv", "json"):
        raise UsageError(f"unknown format {fmt!r}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ModelValidityWarning)
        params = params_from_device(device)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)

    if sweep:
        missing = [k for k in ("axis", "start", "stop", "steps") if k not in sweep]
        if missing:
            raise UsageError(f"incomplete sweep; missing {', '.join(missing)}")
        axis = sweep["axis"]
        rows = design_solver.sweep_rates(params, axis, (sweep["start"], sweep["stop"]), sweep["steps"])
    else:
        axis = None
        rows = [design_solver.SweepRow(math.nan, rate_total(params))]

    for row in rows:
        if row.error:
            print(f"warning: {axis}={row.value!r}: {row.error}", file=sys.stderr)

    if fmt == "csv":
        table = []
        for row in rows:
            r = row.rates
            table.append([
                "" if axis is None else float(row.value),
                None if r is None else float(r.stimulated),
                None if r is None else float(r.spontaneous),
                None if r is None else float(r.total),
            ])
        text = _csv_text(["axis", "stimulated", "spontaneous", "total"], table)
    else:
        text = _dump_json({
            "axis": axis,
            "parameters": _params_json(params),
            "rows": [
                {
                    "axis_value": None if axis is None else float(row.value),
                    "stimulated_pairs_per_s": None if row.rates is None else float(row.rates.stimulated),
                    "spontaneous_pairs_per_s": None if row.rates is None else float(row.rates.spontaneous),
                    "total_pairs_per_s": None if row.rates is None else float(row.rates.total),
                    "error": row.error,
                }
                for row in rows
            ],
        })
    _emit(text, args.out)
    return EXIT_OK


def _params_json(p: KlystronParams) -> dict:
    return {
        "omega_rad_per_s": p.omega,
        "gap_width_m": p.d,
        "capacitance_F": p.C,
        "quant_volume_m3": p.quant_volume,
        "velocity_m_per_s": p.v,
        "electrons": p.N,
        "photons": p.n,
        "transit_angle": p.gamma,
        "alpha": p.alpha,
        "electron_flux": p.J0,
    }


def _matrix_json(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def cmd_amplify(args) -> int:
    values = _merge(
        _config_for(args).get("amplify", {}),
        args,
        {"bell": "bell", "n": "n", "eta": "eta"},
        {"n": 1, "eta": 0.0},
    )
    if "bell" not in values:
        raise UsageError("missing --bell")
    try:
        bell = Bell(values["bell"])
    except ValueError:
        raise UsageError(f"unknown Bell state {values['bell']!r}") from None
    rho = amplify_channel(bell_state(bell), values["n"], values["eta"])
    entangled, negativity = oracle.ppt_negativity(rho)
    payload = {
        "bell": bell.value,
        "n": int(values["n"]),
        "eta": float(values["eta"]),
        "basis": list(BASIS),
        "density_matrix": _matrix_json(rho.matrix),
        "concurrence": concurrence(rho),
        "ppt_negativity": negativity,
        "entangled": entangled,
    }
    _emit(_dump_json(payload), args.out)
    return EXIT_OK


def cmd_werner(args) -> int:
    values = _merge(
        _config_for(args).get("werner", {}),
        args,
        {"si": "si", "sm": "sm", "sf": "sf", "convention": "convention", "p": "p", "bell": "bell"},
        {"convention": WernerConvention.EXAMPLE_CONSISTENT.value, "bell": Bell.PHI_MINUS.value},
    )
    spins = [values.get(k) for k in ("si", "sm", "sf")]
    have_spins = any(s is not None for s in spins)
    if have_spins == ("p" in values):
        raise UsageError("give either all of --si/--sm/--sf or --p")
    payload: dict = {}
    if have_spins:
        if any(s is None for s in spins):
            raise UsageError("--si, --sm and --sf must all be given")
        try:
            convention = WernerConvention(values["convention"])
        except ValueError:
            raise UsageError(f"unknown convention {values['convention']!r}") from None
        p = werner_p(WernerSpec(*spins, convention=convention))
        payload.update({"S_I": spins[0], "S_M": spins[1], "S_F": spins[2], "convention": convention.value})
        if convention is WernerConvention.AS_PRINTED:
            alt = None
            try:
                alt = werner_p(WernerSpec(*spins))
            except ModelRangeError as exc:
                alt = exc.raw_value
            payload["note"] = (
                "as-printed sign convention: gives p(0, 1/2, 0) = 0 although the singlet-to-singlet "
                f"example requires p = 1; example-consistent value here is {alt!r}"
            )
    else:
        p = float(values["p"])
    try:
        bell = Bell(values["bell"])
    except ValueError:
        raise UsageError(f"unknown Bell state {values['bell']!r}") from None
    rho = werner_state(p, bell)
    c = concurrence(rho)
    entangled, negativity = oracle.ppt_negativity(rho)
    payload.update({"p": p, "bell": bell.value, "concurrence": c, "entangled": c > 0, "ppt_negativity": negativity})
    _emit(_dump_json(payload), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    values = _merge(_config_for(args).get("verify", {}), args, {"suite": "suite"}, {"suite": "all"})
    suite = values["suite"]
    if suite != "all" and suite not in oracle.SUITES:
        raise UsageError(f"unknown suite {suite!r}")
    reports = oracle.run_suite(suite, tolerance=args.tolerance_override)
    _emit(_dump_json([r.as_json() for r in reports]), args.out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY_FAILED


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qklyst",
        description="Klystron amplification of entangled photon pairs: gain, rates, entanglement, oracles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=False):
        p.add_argument("--config", help=f"key = value config file (default: ${CONFIG_ENV})")
        p.add_argument("--out", help="output file (default: stdout)")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"))

    p = sub.add_parser("gain-curve", help="tabulate g(gamma)")
    common(p, fmt=True)
    p.add_argument("--gamma-min", type=float)
    p.add_argument("--gamma-max", type=float)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_gain_curve)

    p = sub.add_parser("design", help="beam speed and voltage for a target transit angle")
    common(p)
    p.add_argument("--frequency", type=float, help="photon frequency, Hz")
    p.add_argument("--gap-width", type=float, help="gap width, m")
    p.add_argument("--gamma", type=float, help="target transit angle (default: gain peak)")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("rates", help="photon-pair output rates, optionally swept")
    common(p, fmt=True)
    p.add_argument("--frequency", type=float, help="Hz")
    p.add_argument("--angular-frequency", type=float, help="rad/s")
    p.add_argument("--gap-width", type=float, help="m")
    p.add_argument("--capacitance", type=float, help="F")
    p.add_argument("--effective-area", type=float, help="m^2")
    p.add_argument("--quant-volume", type=float, help="m^3")
    p.add_argument("--velocity", type=float, help="m/s")
    p.add_argument("--transit-angle", type=float)
    p.add_argument("--drift-length", type=float, help="m")
    p.add_argument("--box-length", type=float, help="m")
    p.add_argument("--electrons", type=float)
    p.add_argument("--photons", type=float)
    p.add_argument("--sweep-axis", choices=design_solver.SWEEP_AXES)
    p.add_argument("--sweep-start", type=float)
    p.add_argument("--sweep-stop", type=float)
    p.add_argument("--sweep-steps", type=int)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("amplify", help="reduced photon state after amplification")
    common(p)
    p.add_argument("--bell", choices=[b.value for b in Bell])
    p.add_argument("--n", type=int)
    p.add_argument("--eta", type=float)
    p.set_defaults(func=cmd_amplify)

    p = sub.add_parser("werner", help="Werner entanglement parameter and concurrence")
    common(p)
    p.add_argument("--si", type=float)
    p.add_argument("--sm", type=float)
    p.add_argument("--sf", type=float)
    p.add_argument("--convention", choices=[c.value for c in WernerConvention])
    p.add_argument("--p", type=float)
    p.add_argument("--bell", choices=[b.value for b in Bell])
    p.set_defaults(func=cmd_werner)

    p = sub.add_parser("verify", help="run the oracle suite")
    common(p)
    p.add_argument("--suite", choices=("all",) + oracle.SUITES)
    # test hook: force every tolerance to this value
    p.add_argument("--tolerance-override", type=float, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PhysicalValidityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICAL
    except ModelRangeError as exc:
        print(f"error: {exc} (raw value {exc.raw_value!r})", file=sys.stderr)
        return EXIT_RANGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
