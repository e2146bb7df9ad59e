"""Command-line front end: ``spectro-bench <command> [options]``.

Every length takes an explicit unit suffix (nm, um, mm, m) and groove
densities take /mm or /m. Options may also come from a flat ``key=value``
file given with ``--config``; keys are the long option names without the
leading dashes (``f=75mm``, ``grooves=300/mm``, ``aperture=slit:w=450um``).
Command-line flags override the file.

Exit status: 0 success, 2 configuration or validation error, 3 numerical
contract failure. Errors print one line ``error: <code>: <message>`` to
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from spectrobench import io, plotting
from spectrobench.analytic_blur import (
    RATIO_TOLERANCE,
    SWEEP_HEADER,
    reciprocal_fit,
    spatial_blur,
    spectral_blur,
    tradeoff_sweep,
    uncertainty_product,
)
from spectrobench.aperture import describe, parse_aperture
from spectrobench.core import NumericalContractError, OpticalSystem, SpectroError, ValidationError
from spectrobench.metrics import MTF_HEADER, mtf_tradeoff_sweep
from spectrobench.spectral_filtering import (
    filter_scene,
    parse_mask,
    bar_target_cube,
    psf_vs_offset_sweep,
    two_laser_cube,
)
from spectrobench.units import parse_density, parse_length, parse_length_list
from spectrobench.wave_propagation import (
    Plane,
    PointSource,
    measure,
    oracle_agreement,
    plan_propagation,
    propagate,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

DEFAULTS = {
    "f": "75mm",
    "grooves": "300/mm",
    "lambda_min": "400nm",
    "lambda_max": "700nm",
    "lambda": "500nm",
    "window": "1mm",
    "out": "out",
    "format": "csv,svg",
    "aperture": "gaussian:sigma=500um",
    "family": "gaussian",
    "threshold": "0.3",
    "tol": "1e-3",
    "x0": "0um",
    "mask_family": "gaussmask",
    "mask_width": "500um",
    "offsets": "0nm,4nm,8nm,12nm",
    "pixel_pitch": "2um",
    "kind": "two-laser",
    "width": "256",
    "height": "32",
}
# keys that never influence results, excluded from the provenance hash
_NON_RESULT_KEYS = {"out", "format", "config"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def read_config_file(path: str) -> dict[str, str]:
    cfg = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc.strerror}") from None
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ValidationError(f"{path}:{n}: expected key=value")
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


@dataclass
class RunConfig:
    command: str
    raw: dict[str, str]
    system: OpticalSystem
    out_dir: Path
    formats: set[str] = field(default_factory=set)

    def get(self, key: str) -> str:
        value = self.raw.get(key)
        if value is None:
            raise ValidationError(f"missing required option --{key.replace('_', '-')}")
        return value

    def length(self, key: str) -> float:
        return parse_length(self.get(key))

    def digest(self) -> str:
        cfg = {k: v for k, v in self.raw.items() if k not in _NON_RESULT_KEYS and v is not None}
        cfg["command"] = self.command
        return io.config_hash(cfg)

    def csv(self, name: str, header, rows) -> Path:
        return io.write_csv(self.out_dir / name, self.command, self.digest(), header, rows)

    @property
    def svg(self) -> bool:
        return "svg" in self.formats

    @classmethod
    def resolve(cls, command: str, args: argparse.Namespace) -> "RunConfig":
        raw = dict(DEFAULTS)
        if getattr(args, "config", None):
            raw.update(read_config_file(args.config))
        for key, value in vars(args).items():
            if key in ("command", "handler") or value is None:
                continue
            raw[key] = ";".join(value) if isinstance(value, list) else value
        system = OpticalSystem(
            parse_length(raw["f"]),
            parse_density(raw["grooves"]),
            parse_length(raw["lambda_min"]),
            parse_length(raw["lambda_max"]),
        )
        formats = {f.strip() for f in raw["format"].split(",") if f.strip()}
        if not formats <= {"csv", "svg"}:
            raise ValidationError(f"unknown output format in {raw['format']!r}")
        return cls(command, raw, system, Path(raw["out"]), formats)


def _apertures(cfg: RunConfig):
    return [parse_aperture(s) for s in cfg.get("aperture").split(";") if s.strip()]


def _widths(cfg: RunConfig) -> list[float]:
    widths = parse_length_list(cfg.get("widths"))
    if not widths:
        raise ValidationError("sweep needs at least one width")
    return widths


def _lam_tag(lam: float) -> str:
    return f"{lam * 1e9:g}nm"


def cmd_blur(cfg: RunConfig) -> int:
    lam = cfg.length("lambda")
    window = cfg.length("window")
    apertures = _apertures(cfg)
    for i, ap in enumerate(apertures):
        sfx = f"_{i}" if len(apertures) > 1 else ""
        h_lam = spectral_blur(ap, cfg.system)
        h_x = spatial_blur(ap, cfg.system, lam, window=window)
        rep = uncertainty_product(ap, cfg.system, lam, window)
        cfg.csv(f"h_lambda{sfx}.csv", ("lambda_m", "h_lambda"), zip(h_lam.coords, h_lam.values))
        cfg.csv(f"h_x{sfx}.csv", ("x_m", "h_x"), zip(h_x.coords, h_x.values))

        # map axes span +-4 std of each kernel, clipped to the kernel grids
        xs = np.linspace(-1, 1, 101) * min(4 * rep.sigma_x, h_x.grid.stop)
        ls = np.linspace(-1, 1, 101) * min(4 * rep.sigma_lambda, h_lam.grid.stop)
        hx = np.interp(xs, h_x.coords, h_x.values)
        hl = np.interp(ls, h_lam.coords, h_lam.values)
        cfg.csv(
            f"xlambda_map{sfx}.csv",
            ("x_m", "lambda_m", "intensity"),
            ((x, l, a * b) for l, b in zip(ls, hl / hl.max()) for x, a in zip(xs, hx / hx.max())),
        )
        summary = {
            "aperture": describe(ap),
            **rep.as_dict(),
            "product_nm_um": rep.product * 1e15,
            "bound_nm_um": rep.bound * 1e15,
        }
        with io.atomic_open(cfg.out_dir / f"summary{sfx}.json") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(json.dumps(summary, sort_keys=True))
        if cfg.svg:
            plotting.blur_map(xs, hx, ls, hl, cfg.out_dir / f"xlambda_map{sfx}.svg", describe(ap))
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    family = cfg.get("family")
    rows = tradeoff_sweep(family, _widths(cfg), cfg.system, cfg.length("lambda"), cfg.length("window"))
    cfg.csv("sweep.csv", SWEEP_HEADER, (r.csv_fields() for r in rows))
    status = EXIT_OK
    if len(rows) >= 2:
        fit = reciprocal_fit(rows)
        cfg.csv(
            "fit.csv",
            ("slope", "r_squared", "expected_slope", "slope_error"),
            [(fit.slope, fit.r_squared, fit.expected_slope, fit.slope_error)],
        )
        print(f"slope={fit.slope:.6g} expected={fit.expected_slope:.6g} r2={fit.r_squared:.8f}")
        if cfg.svg:
            plotting.reciprocal_line(
                [r.report.sigma_lambda for r in rows],
                [r.report.sigma_x for r in rows],
                fit.slope,
                cfg.out_dir / "sweep.svg",
                family,
            )
    low = [r for r in rows if r.report.ratio < 1.0 - RATIO_TOLERANCE]
    if low:
        raise NumericalContractError(
            f"uncertainty ratio below bound for width {low[0].width:.6g} m ({low[0].report.ratio:.6g})"
        )
    return status


def cmd_propagate(cfg: RunConfig) -> int:
    window = cfg.length("window")
    tol = float(cfg.get("tol"))
    x0 = cfg.length("x0")
    lams = parse_length_list(cfg.raw.get("lambdas") or cfg.get("lambda"))
    failures = []
    agreement_rows, peak_rows = [], []
    for ap in _apertures(cfg):
        for lam in lams:
            cfg.system.check_wavelength(lam)
            tag = _lam_tag(lam)
            plan = plan_propagation(ap, cfg.system, [lam], window)
            fields = propagate(x0, 1.0, lam, ap, cfg.system, plan)
            for plane, fld in fields.items():
                cfg.csv(f"field_{plane.value}_{tag}.csv", ("x_m", "magnitude"),
                        zip(fld.grid.coords, np.abs(fld.values)))
            rep = oracle_agreement(ap, cfg.system, lam, window)
            name = describe(ap)
            agreement_rows += [(f"spectral@{tag}:{name}", rep.spectral_linf),
                               (f"spatial@{tag}:{name}", rep.spatial_linf)]
            peak_rows.append((lam, rep.p4_peak, rep.p4_expected, rep.p4_step, rep.peak_offset_steps))
            if rep.spectral_linf > tol or rep.spatial_linf > tol or rep.peak_offset_steps > 1.0:
                failures.append(f"{name} at {tag}")
            if cfg.svg:
                src = PointSource(0.0, ((lam, 1.0),))
                m5 = measure(src, ap, cfg.system, Plane.P5, plan=plan)
                psf = spatial_blur(ap, cfg.system, lam, m5.grid)
                sel = np.abs(m5.grid.coords) <= window
                plotting.agreement(m5.grid.coords[sel], m5.intensity[sel], psf.values[sel],
                                   cfg.out_dir / f"p5_agreement_{tag}.svg", "x (mm)")
    cfg.csv("agreement.csv", ("kernel", "linf_rel_error"), agreement_rows)
    cfg.csv("p4_peaks.csv", ("wavelength_m", "p4_peak_m", "expected_m", "grid_step_m", "offset_steps"),
            peak_rows)
    for k, e in agreement_rows:
        print(f"{k} linf_rel_error={e:.3e}")
    if failures:
        raise NumericalContractError(f"oracle disagreement above {tol:g}: {', '.join(failures)}")
    return EXIT_OK


def cmd_filter_psf(cfg: RunConfig) -> int:
    family = cfg.get("mask_family")
    lam = cfg.length("source_lambda" if cfg.raw.get("source_lambda") else "lambda")
    offsets = parse_length_list(cfg.get("offsets"))
    if not offsets:
        raise ValidationError("filter-psf needs at least one offset")
    (ap,) = _apertures(cfg)[:1]
    rows = psf_vs_offset_sweep(ap, family, cfg.length("mask_width"), offsets, cfg.system, lam,
                               window=cfg.length("window"))
    cfg.csv(
        "filter_psf.csv",
        ("offset_m", "psf_std_m", "peak_intensity", "blocked"),
        ((r.offset, r.psf_std, r.peak_intensity, int(r.blocked)) for r in rows),
    )
    if cfg.svg:
        plotting.offset_curve([r.offset for r in rows], [r.psf_std for r in rows],
                              cfg.out_dir / "filter_psf.svg", f"{describe(ap)} + {family}")
    return EXIT_OK


def _read_filter(path: str, wavelengths: np.ndarray) -> np.ndarray:
    header, rows = io.read_csv(path)
    data = np.array([[float(v) for v in r[:2]] for r in rows])
    if data.shape[0] != wavelengths.size or not np.allclose(data[:, 0], wavelengths, rtol=1e-9, atol=0):
        raise ValidationError("filter wavelengths do not match the cube's wavelength axis")
    return data[:, 1]


def cmd_scene(cfg: RunConfig) -> int:
    cube = io.read_cube(cfg.get("cube"))
    (ap,) = _apertures(cfg)[:1]
    pitch = cfg.length("pixel_pitch")
    mask = parse_mask(cfg.raw["mask"]) if cfg.raw.get("mask") else None
    spectral = _read_filter(cfg.raw["filter"], cube.wavelengths) if cfg.raw.get("filter") else None
    central = cfg.length("central_lambda") if cfg.raw.get("central_lambda") else None
    img = filter_scene(cube, ap, cfg.system, pitch, spectral_filter=spectral, mask=mask,
                       central_wavelength=central)
    scale = io.write_pgm16(img, cfg.out_dir / "image.pgm")
    cfg.csv("image.csv", ("row", "col", "intensity"),
            ((r, c, img[r, c]) for r in range(img.shape[0]) for c in range(img.shape[1])))
    print(json.dumps({"energy": float(img.sum()), "pgm_scale": scale}, sort_keys=True))
    if cfg.svg:
        plotting.image(img, pitch, cfg.out_dir / "image.svg", describe(ap))
    return EXIT_OK


def cmd_mtf(cfg: RunConfig) -> int:
    family = cfg.get("family")
    rows = mtf_tradeoff_sweep(family, _widths(cfg), cfg.system, cfg.length("lambda"),
                              float(cfg.get("threshold")), cfg.length("window"))
    cfg.csv("mtf.csv", MTF_HEADER, (r.csv_fields() for r in rows))
    if cfg.svg:
        plotting.mtf_tradeoff([r.spectral_res for r in rows], [r.spatial_res for r in rows],
                              cfg.out_dir / "mtf.svg", family)
    return EXIT_OK


def cmd_gen_cube(cfg: RunConfig) -> int:
    kind = cfg.get("kind")
    width, height = int(cfg.get("width")), int(cfg.get("height"))
    if kind == "two-laser":
        cube = two_laser_cube(width, height, columns=(int(width * 3 / 8), int(width * 5 / 8)))
    elif kind == "bars":
        cube = bar_target_cube(width, height)
    else:
        raise ValidationError(f"unknown cube kind {kind!r}")
    cube.check_range(cfg.system)
    path = Path(cfg.raw.get("output") or cfg.out_dir / f"{kind}.hsicube")
    io.write_cube(cube, path)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("system and output")
    g.add_argument("--config", help="flat key=value file; flags override its keys")
    g.add_argument("--f", help="focal length of every lens, e.g. 75mm")
    g.add_argument("--grooves", help="grating groove density, e.g. 300/mm")
    g.add_argument("--lambda-min", dest="lambda_min", help="shortest wavelength, e.g. 400nm")
    g.add_argument("--lambda-max", dest="lambda_max", help="longest wavelength, e.g. 700nm")
    g.add_argument("--window", help="sensor half-width for PSF moments, e.g. 1mm")
    g.add_argument("--out", help="output directory")
    g.add_argument("--format", help="comma list of csv,svg")

    parser = _Parser(
        prog="spectro-bench",
        description=__doc__.split("\n\n")[0],
        epilog=__doc__.split("\n\n", 1)[1],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, handler, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(handler=handler)
        return p

    p = add("blur", cmd_blur, "spectral/spatial blur kernels and the uncertainty product")
    p.add_argument("--aperture", action="append",
                   help="gaussian:sigma=500um | slit:w=450um | open[:w=10mm] | sampled:file=x.csv (repeatable)")
    p.add_argument("--lambda", dest="lambda", help="evaluation wavelength")

    p = add("sweep", cmd_sweep, "width sweep of an aperture family with a reciprocal-line fit")
    p.add_argument("--family", choices=["gaussian", "slit", "open"])
    p.add_argument("--widths", help="comma list of sigmas or slit widths, e.g. 250um,500um")
    p.add_argument("--lambda", dest="lambda")

    p = add("propagate", cmd_propagate, "wave-propagation oracle and agreement report")
    p.add_argument("--aperture", action="append")
    p.add_argument("--lambdas", help="comma list of source lines, default --lambda")
    p.add_argument("--lambda", dest="lambda")
    p.add_argument("--x0", help="source position on P1 for the field dumps")
    p.add_argument("--tol", help="L-infinity tolerance for the agreement check")

    p = add("filter-psf", cmd_filter_psf, "PSF width versus rainbow-mask offset")
    p.add_argument("--aperture", action="append")
    p.add_argument("--mask-family", dest="mask_family", choices=["slitmask", "gaussmask", "blocker"])
    p.add_argument("--mask-width", dest="mask_width", help="mask width or sigma on P4")
    p.add_argument("--offsets", help="comma list of wavelength gaps, e.g. 0nm,4nm")
    p.add_argument("--source-lambda", dest="source_lambda")
    p.add_argument("--lambda", dest="lambda")

    p = add("scene", cmd_scene, "filter an HSICUBE scene through the camera")
    p.add_argument("--cube", help="HSICUBE v1 file")
    p.add_argument("--aperture", action="append")
    p.add_argument("--mask", help="slitmask:... | gaussmask:... | blocker:center=532nm,w=300um")
    p.add_argument("--filter", help="CSV of wavelength_m,transmission on the cube's wavelengths")
    p.add_argument("--pixel-pitch", dest="pixel_pitch")
    p.add_argument("--central-lambda", dest="central_lambda",
                   help="use a single PSF at this wavelength for all slices")

    p = add("mtf", cmd_mtf, "MTF contrast-threshold resolution sweep")
    p.add_argument("--family", choices=["gaussian", "slit", "open"])
    p.add_argument("--widths")
    p.add_argument("--threshold")
    p.add_argument("--lambda", dest="lambda")

    p = add("gen-cube", cmd_gen_cube, "write a synthetic HSICUBE test scene")
    p.add_argument("--kind", choices=["two-laser", "bars"])
    p.add_argument("--width")
    p.add_argument("--height")
    p.add_argument("--output", help="cube path (default <out>/<kind>.hsicube)")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig.resolve(args.command, args)
        return args.handler(cfg)
    except ValidationError as exc:
        code, msg = EXIT_CONFIG, str(exc)
    except NumericalContractError as exc:
        code, msg = EXIT_NUMERIC, str(exc)
    except SpectroError as exc:
        code, msg = EXIT_CONFIG, str(exc)
    except OSError as exc:
        code, msg = EXIT_CONFIG, f"{exc.strerror}: {exc.filename}"
    print(f"error: {code}: {' '.join(msg.split())}", file=sys.stderr)
    return code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
