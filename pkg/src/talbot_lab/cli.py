"""Command-line front end: ``talbot-lab run | validate | version``.

A run reads one JSON document, computes a scan, a carpet or a fit and
writes a CSV file (plus an optional SVG line plot).  Field names carry
their units as suffixes (``_m``, ``_s``, ``_u``, ``_W``, ``_J``, ``_Pa``,
``_K``, ``_A3`` for polarizability volumes in cubic angstrom).

Exit codes: 0 success, 2 invalid configuration, 3 numerical accuracy
failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .carpet import carpet
from .core import (
    AMU,
    GratingSpec,
    InterferometerConfig,
    ParticleSpec,
    Scheme,
    VelocityDist,
    polarizability_from_volume,
)
from .decoherence import CslParams, collisional_channel, csl_as_channel, thermal_emission_channel
from .errors import AccuracyError, DegenerateSignalError, TalbotLabError
from .gratings import talbot_coeff_classical, talbot_coeff_quantum
from .metrology import fit_visibility_curve, kdtli_power_model
from .signal import averaged_fringe, evaluate, otima_signal, tl_fringe, visibility, with_pulse_energies

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_ACCURACY = 3
EXIT_IO = 4


class SchemaError(Exception):
    pass


def _fmt(x):
    """Shortest round-trip decimal for floats; plain text otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def _load_schema():
    text = resources.files("talbot_lab").joinpath("schema/run_config.schema.json").read_text()
    return json.loads(text)


def load_config(path):
    """Parse and schema-check a run configuration.

    Raises
    ------
    OSError
        If the file cannot be read.
    SchemaError
        On malformed JSON or a schema violation.
    """
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    validator = jsonschema.Draft202012Validator(_load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for err in errors:
            field = "/".join(str(p) for p in err.absolute_path) or "<root>"
            msgs.append(f"{path}: field '{field}': {err.message}")
        raise SchemaError("\n".join(msgs))
    return doc


def config_hash(doc):
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# building domain objects


def _grating(entry, period):
    kind = entry["kind"]
    if kind == "mask":
        return GratingSpec.mask(period, entry["open_fraction"])
    if kind == "phase":
        return GratingSpec.phase(period, entry["phi0"])
    return GratingSpec.ionizing(period, entry["phi0"], entry["n0"])


def _velocity_dist(p):
    if "velocities_m_s" in p:
        weights = p.get("velocity_weights")
        if weights is None or len(weights) != len(p["velocities_m_s"]):
            raise SchemaError("particle: velocity_weights must match velocities_m_s")
        return VelocityDist.tabulated(p["velocities_m_s"], weights)
    if "velocity_m_s" not in p:
        return None
    if "velocity_fwhm_m_s" in p:
        return VelocityDist.gaussian(p["velocity_m_s"], p["velocity_fwhm_m_s"])
    return VelocityDist.delta(p["velocity_m_s"])


def build_particle(doc, mass_u=None):
    p = doc["particle"]
    return ParticleSpec(
        mass=(p["mass_u"] if mass_u is None else mass_u) * AMU,
        alpha_opt=float(polarizability_from_volume(p.get("alpha_opt_A3", 0.0))),
        sigma_abs=p.get("sigma_abs_m2", 0.0),
        velocity_dist=_velocity_dist(p),
    )


def build_interferometer(doc, **overrides):
    ifm = doc["interferometer"]
    d = ifm["period_m"]
    kwargs = dict(
        scheme=Scheme(ifm["scheme"]),
        gratings=tuple(_grating(g, d) for g in doc["gratings"]),
        separation_length=ifm.get("separation_m"),
        separation_time=ifm.get("separation_s"),
        acceleration=ifm.get("acceleration_m_s2", 0.0),
        fourier_order=ifm.get("fourier_order", 5),
        laser_power=ifm.get("laser_power_W"),
        waist_y=ifm.get("waist_y_m"),
        spot_peak=ifm.get("spot_peak_per_m2"),
        grating_shifts=tuple(ifm.get("grating_shifts_m", (0.0, 0.0, 0.0))),
        tilt_height=ifm.get("tilt_height_m", 0.0),
        tilt_angle=ifm.get("tilt_angle_rad", 0.0),
        divergence=ifm.get("divergence_rad", 0.0),
        timing_imbalance=ifm.get("timing_imbalance_s", 0.0),
    )
    kwargs.update(overrides)
    return InterferometerConfig(**kwargs)


def build_channels(entries, mass):
    out = []
    for e in entries:
        kind = e["kind"]
        if kind == "collisional":
            out.append(
                collisional_channel(
                    e["pressure_Pa"],
                    e["sigma_eff_m2"],
                    e.get("gas_mass_u", 28.0134),
                    e.get("gas_temperature_K", 293.15),
                    kernel_width=e.get("kernel_width_m"),
                )
            )
        elif kind == "csl":
            out.append(csl_as_channel(CslParams(e["lambda_per_s"], e.get("r_c_m", 100e-9)), mass))
        else:
            sigma = e["sigma_abs_m2"]
            out.append(thermal_emission_channel(lambda w, s=sigma: np.full_like(w, s), e["temperature_K"]))
    return out


# ---------------------------------------------------------------------------
# scans

SCAN_COLUMNS = (
    "v_sin_quantum",
    "v_sin_classical",
    "v_full_quantum",
    "v_full_classical",
    "signal_ratio_quantum",
)

AXIS_UNITS = {
    "power": "W",
    "length": "m",
    "time": "s",
    "mass": "u",
    "tilt_height": "m",
    "timing_imbalance": "s",
    "pressure": "Pa",
    "temperature": "K",
    "csl_lambda": "per_s",
}

CHANNEL_FOR_AXIS = {"pressure": ("collisional", "pressure_Pa"), "temperature": ("thermal", "temperature_K"), "csl_lambda": ("csl", "lambda_per_s")}


def scan_values(scan):
    if "values" in scan:
        return np.array(scan["values"], dtype=float)
    if scan.get("spacing", "linear") == "log":
        if scan["start"] <= 0 or scan["stop"] <= 0:
            raise SchemaError("scan: log spacing needs positive start and stop")
        return np.geomspace(scan["start"], scan["stop"], scan["points"])
    return np.linspace(scan["start"], scan["stop"], scan["points"])


def _point_setup(doc, axis, value):
    """Interferometer, particle, channel list and pulse energies for one scan value."""
    ifm = doc["interferometer"]
    scheme = ifm["scheme"]
    overrides = {}
    energies = ifm.get("pulse_energies_J")
    mass_u = None
    chans = [dict(c) for c in doc.get("decoherence", [])]
    if axis == "power":
        if scheme == "KDTLI":
            overrides["laser_power"] = value
        elif scheme == "OTIMA" and energies is not None:
            energies = (energies[0], value, energies[2])
        else:
            raise SchemaError("scan: 'power' needs a KDTLI laser or OTIMA pulse_energies_J")
    elif axis == "length":
        if "separation_m" not in ifm:
            raise SchemaError("scan: 'length' needs a stationary interferometer (separation_m)")
        overrides["separation_length"] = value
    elif axis == "time":
        if "separation_s" not in ifm:
            raise SchemaError("scan: 'time' needs a pulsed interferometer (separation_s)")
        overrides["separation_time"] = value
    elif axis == "mass":
        mass_u = value
    elif axis == "tilt_height":
        overrides["tilt_height"] = value
    elif axis == "timing_imbalance":
        overrides["timing_imbalance"] = value
    else:
        kind, key = CHANNEL_FOR_AXIS[axis]
        targets = [c for c in chans if c["kind"] == kind]
        if not targets:
            raise SchemaError(f"scan: axis '{axis}' needs a '{kind}' decoherence entry")
        targets[0][key] = value
    particle = build_particle(doc, mass_u)
    if axis == "mass" and ifm.get("scale_with_mass", False):
        factor = mass_u / doc["particle"]["mass_u"]
        particle = ParticleSpec(
            particle.mass, particle.alpha_opt * factor, particle.sigma_abs * factor, velocity_dist=particle.velocity_dist
        )
    config = build_interferometer(doc, **overrides)
    return config, particle, build_channels(chans, particle.mass), energies


def _signal(config, particle, channels, energies, mode, n_points):
    if config.scheme is Scheme.OTIMA:
        velocity = particle.velocity_dist.mean if particle.velocity_dist is not None else None
        if mode == "quantum":
            return otima_signal(config, particle, energies, velocity, channels)
        if energies is not None:
            config = with_pulse_energies(config, particle, energies)
        return tl_fringe(config, particle, velocity, mode, channels)
    return averaged_fringe(config, particle, mode, channels, n_points)


def _visibilities(sig):
    try:
        vis = visibility(sig)
    except DegenerateSignalError:
        return math.nan, math.nan, math.nan
    ratio = (evaluate(sig, 0.0) - sig.offset) / sig.offset
    return vis.v_sin, vis.v_full, ratio


def run_scan(doc):
    scan = doc["scan"]
    axis = scan["axis"]
    n_points = doc["particle"].get("velocity_nodes", 32)
    rows = []
    for value in scan_values(scan):
        config, particle, channels, energies = _point_setup(doc, axis, float(value))
        q = _signal(config, particle, channels, energies, "quantum", n_points)
        c = _signal(config, particle, channels, energies, "classical", n_points)
        vq, fq, rq = _visibilities(q)
        vc, fc, _ = _visibilities(c)
        rows.append((float(value), vq, vc, fq, fc, rq))
    header = (f"{axis}_{AXIS_UNITS[axis]}",) + SCAN_COLUMNS
    return header, rows


def run_carpet(doc):
    spec = doc["carpet"]
    grating = _grating(spec["grating"], 1.0)
    t = spec["times_TT"]
    times = np.linspace(t["start"], t["stop"], t["points"])
    positions = np.arange(spec["positions"]) / spec["positions"]
    order = spec.get("order_max")
    results = {"quantum": carpet(talbot_coeff_quantum(grating), times, positions, order)}
    if spec.get("classical", False):
        results["classical"] = carpet(talbot_coeff_classical(grating), times, positions, order)
    header = ("t_over_TT",) + tuple(f"x_over_d={_fmt(float(x))}" for x in positions)
    tables = {}
    for label, grid in results.items():
        tables[label] = (header, [(float(ti),) + tuple(row) for ti, row in zip(times, grid.density)])
    return tables


def _read_fit_data(path):
    rows = []
    seen_header = False
    for k, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except (ValueError, IndexError):
            if rows or seen_header:
                raise SchemaError(f"{path}: line {k}: expected 'power_W,visibility'")
            seen_header = True
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return np.array(rows)


def run_fit(doc, base_dir):
    spec = doc["fit"]
    path = Path(spec["data_path"])
    if not path.is_absolute():
        path = base_dir / path
    data = _read_fit_data(path)
    config = build_interferometer(doc)
    particle = build_particle(doc)
    box = {"alpha": tuple(float(polarizability_from_volume(a)) for a in spec["alpha_bounds_A3"])}
    if "sigma_bounds_m2" in spec:
        box["sigma"] = tuple(spec["sigma_bounds_m2"])
    n_points = doc["particle"].get("velocity_nodes", 16)
    res = fit_visibility_curve(data, config, particle, box, n_points=n_points)
    scale = float(polarizability_from_volume(1.0))
    summary = (
        ("parameter", "value", "halfwidth"),
        [
            ("alpha_opt_A3", res.alpha_opt / scale, res.alpha_halfwidth / scale),
            ("sigma_abs_m2", res.sigma_abs, res.sigma_halfwidth),
            ("residual_norm", res.residual_norm, math.nan),
            ("iterations", res.iterations, math.nan),
            ("at_boundary", int(res.at_boundary), math.nan),
        ],
    )
    model = kdtli_power_model(config, particle, data[:, 0], res.alpha_opt, res.sigma_abs, n_points)
    curve = (("power_W", "v_sin_measured", "v_sin_model"), [(p, m, f) for (p, m), f in zip(data, model)])
    return {"fit": summary, "curve": curve}


# ---------------------------------------------------------------------------
# output


def render_csv(header, rows, meta):
    lines = [f"# {k}: {v}" for k, v in meta]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def render_svg(header, rows, title, max_series=8):
    """Self-contained line plot: one polyline per numeric column."""
    width, height, pad = 640, 400, 50
    data = np.array([[float(x) for x in r] for r in rows], dtype=float)
    xs = data[:, 0]
    series = list(range(1, data.shape[1]))
    if len(series) > max_series:
        series = [int(round(k)) for k in np.linspace(1, data.shape[1] - 1, max_series)]
    ys = data[:, series]
    finite = ys[np.isfinite(ys)]
    y_lo, y_hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    x_lo, x_hi = float(xs.min()), float(xs.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    def px(x):
        return pad + (x - x_lo) / (x_hi - x_lo) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y_lo) / (y_hi - y_lo) * (height - 2 * pad)

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<polyline fill="none" stroke="black" points="{pad},{pad} {pad},{height - pad} {width - pad},{height - pad}"/>',
        f'<text x="{width / 2:.1f}" y="{height - 10}" text-anchor="middle" font-size="12">{header[0]}</text>',
        f'<text x="{pad}" y="{height - pad + 15}" font-size="10">{_fmt(x_lo)}</text>',
        f'<text x="{width - pad}" y="{height - pad + 15}" text-anchor="end" font-size="10">{_fmt(x_hi)}</text>',
        f'<text x="{pad - 5}" y="{height - pad}" text-anchor="end" font-size="10">{_fmt(y_lo)}</text>',
        f'<text x="{pad - 5}" y="{pad}" text-anchor="end" font-size="10">{_fmt(y_hi)}</text>',
    ]
    for k, col in enumerate(series):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, data[:, col]) if np.isfinite(y))
        color = colors[k % len(colors)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{width - pad + 2}" y="{pad + 14 * k}" font-size="10" fill="{color}">{header[col]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


@dataclass
class RunOutput:
    name: str
    header: tuple
    rows: list
    plottable: bool = True


def execute(doc, base_dir):
    mode = doc["mode"]
    stem = doc.get("output", {}).get("name", mode)
    if mode == "scan":
        header, rows = run_scan(doc)
        return [RunOutput(stem, header, rows)]
    if mode == "carpet":
        tables = run_carpet(doc)
        return [RunOutput(f"{stem}_{label}", h, r) for label, (h, r) in tables.items()]
    tables = run_fit(doc, base_dir)
    # the parameter summary is a labelled table, not a curve
    return [RunOutput(f"{stem}_{label}", h, r, label != "fit") for label, (h, r) in tables.items()]


def _check_semantics(doc, base_dir):
    """Build every domain object a run would need without computing it."""
    if doc["mode"] == "carpet":
        _grating(doc["carpet"]["grating"], 1.0)
        return
    build_interferometer(doc)
    particle = build_particle(doc)
    build_channels(doc.get("decoherence", []), particle.mass)
    if doc["mode"] == "scan":
        scan = doc["scan"]
        values = scan_values(scan)
        if not np.all(np.isfinite(values)):
            raise SchemaError("scan: range must be finite")
        _point_setup(doc, scan["axis"], float(values[0]))
    else:
        path = Path(doc["fit"]["data_path"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise FileNotFoundError(f"fit data file not found: {path}")


def cmd_validate(args):
    doc = load_config(args.config)
    _check_semantics(doc, Path(args.config).resolve().parent)
    print(f"{args.config}: ok")
    return EXIT_OK


def cmd_run(args):
    doc = load_config(args.config)
    base_dir = Path(args.config).resolve().parent
    _check_semantics(doc, base_dir)
    outputs = execute(doc, base_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = (("talbot-lab", __version__), ("config-sha256", config_hash(doc)), ("mode", doc["mode"]))
    for out in outputs:
        path = out_dir / f"{out.name}.csv"
        path.write_text(render_csv(out.header, out.rows, meta))
        print(path)
        if args.svg and out.plottable:
            svg_path = out_dir / f"{out.name}.svg"
            svg_path.write_text(render_svg(out.header, out.rows, out.name))
            print(svg_path)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="talbot-lab", description="Near-field matter-wave interferometry engine")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a configuration and write CSV output")
    run.add_argument("config")
    run.add_argument("--out", default=".", help="output directory (default: current directory)")
    run.add_argument("--svg", action="store_true", help="also write an SVG line plot")
    run.set_defaults(func=cmd_run)
    val = sub.add_parser("validate", help="check a configuration without running it")
    val.add_argument("config")
    val.set_defaults(func=cmd_validate)
    ver = sub.add_parser("version", help="print the version")
    ver.set_defaults(func=lambda args: print(__version__) or EXIT_OK)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except AccuracyError as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TalbotLabError as exc:
        # inconsistent but schema-valid settings, e.g. a phase grating in an OTIMA setup
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
