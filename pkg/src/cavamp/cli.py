"""Scenario runner: TOML configs in, CSV/PGM field maps and summaries out.

One config file describes one scenario (cavity, optics, detector, grid,
object). Subcommands evaluate gain and noise-figure maps, amplified
images, Monte Carlo detection runs, mode-basis diagnostics, and the
validity figure. Field CSVs carry a one-line header

    # n=<n> extent=<L> quantity=<name>

followed by row-major values at full double precision, so a reload is
bit-identical. PGM output is 16-bit min-max normalized for quick visual
inspection, with the normalization recorded in the header comment.

Exit codes: 0 success, 2 validation or configuration error, 3 numeric
error.
"""

from __future__ import annotations

import argparse
import re
import sys
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .detection import detection_report, monte_carlo_image, noise_figure_empirical
from .errors import ConfigError, GridMismatch, NumericalError, ParameterError
from .modes import build_basis
from .params import (
    CavityParams,
    ComplexField,
    DetectorParams,
    Geometry,
    OpticalTrain,
    PupilSpec,
    TransverseGrid,
    derive_scales,
    validity_check,
)
from .propagation import amplify
from .transfer import gain_map, noise_figure_map

_HEADER_RE = re.compile(r"^#\s*n=(\d+)\s+extent=(\S+)\s+quantity=(\S+)\s*$")


# ---------------------------------------------------------------------------
# field file formats


def write_field_csv(path: Path, grid: TransverseGrid, values, quantity: str) -> None:
    values = np.asarray(values, dtype=np.float64)
    with open(path, "w") as fh:
        fh.write(f"# n={grid.n} extent={grid.extent:.17g} quantity={quantity}\n")
        for row in values:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_field_csv(path: Path) -> tuple[TransverseGrid, np.ndarray, str]:
    with open(path) as fh:
        header = fh.readline()
    match = _HEADER_RE.match(header)
    if not match:
        raise ConfigError(f"{path}: missing or malformed field header")
    n = int(match.group(1))
    grid = TransverseGrid(n=n, extent=float(match.group(2)))
    values = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if values.shape != (n, n):
        raise ConfigError(f"{path}: expected {n}x{n} values, got {values.shape}")
    return grid, values, match.group(3)


def write_field_pgm(path: Path, values, quantity: str) -> None:
    values = np.asarray(values, dtype=np.float64)
    finite = np.isfinite(values)
    nan_count = int(values.size - np.count_nonzero(finite))
    if finite.any():
        vmin = float(values[finite].min())
        vmax = float(values[finite].max())
    else:
        vmin = vmax = 0.0
    if vmax > vmin:
        scaled = (values - vmin) / (vmax - vmin)
    else:
        scaled = np.zeros_like(values)
    scaled = np.where(finite, scaled, 0.0)
    pixels = np.round(scaled * 65535.0).astype(">u2")
    header = (
        f"P5\n# quantity={quantity} min={vmin:.17g} max={vmax:.17g} "
        f"nan={nan_count}\n{values.shape[1]} {values.shape[0]}\n65535\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(pixels.tobytes())


# ---------------------------------------------------------------------------
# scenario loading


@dataclass(frozen=True)
class Scenario:
    cavity: CavityParams
    train: OpticalTrain
    det: DetectorParams
    grid: TransverseGrid
    obj: ComplexField
    seed: int
    shots: int
    threshold: float
    waist: float
    p_max: int
    l_max: int

    def with_geometry(self, geometry: Geometry) -> "Scenario":
        return replace(self, cavity=replace(self.cavity, geometry=geometry))


def _table(config: dict, name: str) -> dict:
    table = config.get(name, {})
    if not isinstance(table, dict):
        raise ConfigError(f"[{name}] must be a table")
    return table


def _need(table: dict, section: str, key: str):
    if key not in table:
        raise ConfigError(f"[{section}] missing required key '{key}'")
    return table[key]


def _number(table: dict, section: str, key: str, default=None) -> float:
    value = table.get(key, default)
    if value is None:
        raise ConfigError(f"[{section}] missing required key '{key}'")
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"[{section}] {key} must be a number")
    return float(value)


def _length(table: dict, section: str, key: str, rho0: float, default=None) -> float:
    """A length given either in meters (key) or in units of rho0 (key_rho0)."""
    scaled = f"{key}_rho0"
    if key in table and scaled in table:
        raise ConfigError(f"[{section}] give only one of '{key}' and '{scaled}'")
    if scaled in table:
        return _number(table, section, scaled) * rho0
    if key in table or default is not None:
        return _number(table, section, key, default)
    raise ConfigError(f"[{section}] missing required key '{key}' (or '{scaled}')")


def _parse_pupil(table: dict) -> PupilSpec:
    kind = table.get("pupil", "infinite")
    if kind == "infinite":
        return PupilSpec.infinite()
    if kind == "square":
        return PupilSpec.square(_number(table, "optics", "side"))
    if kind == "circular":
        return PupilSpec.circular(_number(table, "optics", "radius"))
    raise ConfigError(f"[optics] pupil must be infinite|square|circular, got {kind!r}")


def _parse_geometry(value: str) -> Geometry:
    try:
        return Geometry(value)
    except ValueError:
        raise ConfigError(
            f"[cavity] geometry must be planar|confocal, got {value!r}"
        ) from None


def _build_object(table: dict, grid: TransverseGrid, rho0: float, base: Path) -> ComplexField:
    kind = table.get("kind", "uniform")
    amplitude = _number(table, "object", "amplitude", 1.0)
    if kind == "uniform":
        values = np.full(grid.shape, amplitude, dtype=np.complex128)
    elif kind == "gaussian":
        w = _length(table, "object", "width", rho0)
        return ComplexField.from_function(
            grid,
            lambda x, y: amplitude * np.exp(-(x * x + y * y) / w**2),
            feature_scale=w,
        )
    elif kind == "two-gaussian":
        w = _length(table, "object", "width", rho0)
        off = _length(table, "object", "offset", rho0)
        return ComplexField.from_function(
            grid,
            lambda x, y: amplitude
            * (
                np.exp(-((x - off) ** 2 + y * y) / w**2)
                + np.exp(-((x + off) ** 2 + y * y) / w**2)
            ),
            feature_scale=w,
        )
    elif kind == "file":
        path = base / str(_need(table, "object", "path"))
        if not path.exists():
            raise ConfigError(f"[object] file not found: {path}")
        file_grid, values, _ = read_field_csv(path)
        if file_grid != grid:
            raise ConfigError(
                f"[object] file grid (n={file_grid.n}, extent={file_grid.extent}) "
                f"does not match [grid] (n={grid.n}, extent={grid.extent})"
            )
    else:
        raise ConfigError(
            f"[object] kind must be uniform|gaussian|two-gaussian|file, got {kind!r}"
        )
    return ComplexField(grid, values)


def load_scenario(path: Path) -> Scenario:
    if not path.exists():
        raise ConfigError(f"config not found: {path}")
    with open(path, "rb") as fh:
        try:
            config = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    cav_t = _table(config, "cavity")
    cavity = CavityParams(
        gamma=_number(cav_t, "cavity", "gamma"),
        detuning=_number(cav_t, "cavity", "detuning", 0.0),
        pump=_number(cav_t, "cavity", "pump"),
        geometry=_parse_geometry(cav_t.get("geometry", "planar")),
    )

    opt_t = _table(config, "optics")
    train = derive_scales(
        cavity,
        wavelength=_number(opt_t, "optics", "wavelength"),
        focal=_number(opt_t, "optics", "focal"),
        pupil=_parse_pupil(opt_t),
    )

    det_t = _table(config, "detector")
    det = DetectorParams(
        eta=_number(det_t, "detector", "eta", 1.0),
        pixel_area=_number(det_t, "detector", "pixel_area"),
        window=_number(det_t, "detector", "window"),
    )

    grid_t = _table(config, "grid")
    n = int(_number(grid_t, "grid", "n", 64))
    grid = TransverseGrid(n=n, extent=_length(grid_t, "grid", "extent", train.rho0))

    obj = _build_object(_table(config, "object"), grid, train.rho0, path.parent)

    run_t = _table(config, "run")
    modes_t = _table(config, "modes")
    return Scenario(
        cavity=cavity,
        train=train,
        det=det,
        grid=grid,
        obj=obj,
        seed=int(_number(run_t, "run", "seed", 0)),
        shots=int(_number(run_t, "run", "shots", 1000)),
        threshold=_number(run_t, "run", "threshold", 10.0),
        waist=_length(modes_t, "modes", "waist", train.rho0, train.rho0),
        p_max=int(_number(modes_t, "modes", "p_max", 4)),
        l_max=int(_number(modes_t, "modes", "l_max", 4)),
    )


# ---------------------------------------------------------------------------
# subcommands

DEFAULT_ARTIFACTS = {
    "validate": (),
    "gain-map": ("gain-map",),
    "noise-map": ("noise-map",),
    "amplify": ("image",),
    "simulate": ("report", "mc"),
    "modes": ("gram",),
}


def _emit_field(out_dir: Path, stem: str, grid: TransverseGrid, values, quantity: str) -> None:
    write_field_csv(out_dir / f"{stem}.csv", grid, values, quantity)
    write_field_pgm(out_dir / f"{stem}.pgm", values, quantity)
    print(f"wrote {out_dir / f'{stem}.csv'}")
    print(f"wrote {out_dir / f'{stem}.pgm'}")


def _summarize_maps(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    g = gain_map(scenario.cavity, scenario.train, scenario.grid)
    f = noise_figure_map(scenario.cavity, scenario.train, scenario.grid, scenario.det.eta)
    return g, f


def _print_summary(scenario: Scenario, g: np.ndarray, f: np.ndarray) -> None:
    print(f"geometry={scenario.cavity.geometry.value}")
    print(f"peak_gain G={np.max(g):.6f}")
    print(f"min_noise_figure F={np.nanmin(f):.6f}")
    vc = validity_check(
        scenario.obj.peak_flux(), scenario.train, scenario.cavity, scenario.threshold
    )
    print(vc.describe())
    if not scenario.det.long_window_ok(scenario.cavity.gamma):
        print("warning: detection window is short: window*gamma < 100")


def _run_field_commands(
    scenario: Scenario, wanted: set[str], out_dir: Path, suffix: str
) -> ComplexField | None:
    g, f = _summarize_maps(scenario)
    _print_summary(scenario, g, f)
    if "gain-map" in wanted:
        _emit_field(out_dir, f"gain_map{suffix}", scenario.grid, g, "gain")
    if "noise-map" in wanted:
        _emit_field(out_dir, f"noise_figure_map{suffix}", scenario.grid, f, "noise_figure")
    if "object" in wanted:
        _emit_field(
            out_dir, f"object_amplitude{suffix}", scenario.grid,
            scenario.obj.values.real, "object_amplitude",
        )

    image = None
    if "image" in wanted:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = amplify(
                scenario.obj, scenario.cavity, scenario.train,
                validity_threshold=scenario.threshold,
            )
        for warning in caught:
            print(f"warning: {warning.message}")
        image = result.image
        _emit_field(
            out_dir, f"image_magnitude{suffix}", scenario.grid,
            np.abs(image.values), "image_magnitude",
        )
        _emit_field(
            out_dir, f"image_phase{suffix}", scenario.grid,
            np.angle(image.values), "image_phase",
        )

    if "report" in wanted or "mc" in wanted:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report = detection_report(
                scenario.obj, scenario.cavity, scenario.train, scenario.det,
                scenario.threshold,
            )
        for warning in caught:
            print(f"warning: {warning.message}")
        if "report" in wanted:
            _emit_field(out_dir, f"image_mean{suffix}", scenario.grid,
                        report.image_mean, "image_mean")
            _emit_field(out_dir, f"image_variance{suffix}", scenario.grid,
                        report.image_variance, "image_variance")
            _emit_field(out_dir, f"noise_figure_empirical{suffix}", scenario.grid,
                        noise_figure_empirical(report), "noise_figure_empirical")
        if "mc" in wanted:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                mc = monte_carlo_image(
                    report.image_mean, report.image_variance,
                    scenario.seed, scenario.shots,
                )
            for warning in caught:
                print(f"warning: {warning.message}")
            _emit_field(out_dir, f"mc_sample{suffix}", scenario.grid,
                        mc.sample, "mc_sample")
            _emit_field(out_dir, f"mc_empirical_mean{suffix}", scenario.grid,
                        mc.empirical_mean, "mc_empirical_mean")
            _emit_field(out_dir, f"mc_empirical_variance{suffix}", scenario.grid,
                        mc.empirical_variance, "mc_empirical_variance")
            peak = np.unravel_index(int(np.argmax(report.image_mean)), scenario.grid.shape)
            mean_at = mc.empirical_mean[peak]
            var_at = mc.empirical_variance[peak]
            if mean_at > 0 and var_at > 0:
                r_i = mean_at * mean_at / var_at
                r_o = report.object_snr[peak]
                print(f"empirical_F_at_peak={r_o / r_i:.6f}")
            print(f"seed={scenario.seed} shots={scenario.shots}")
    return image


def _cmd_validate(scenario: Scenario, args, out_dir: Path) -> int:
    vc = validity_check(
        scenario.obj.peak_flux(), scenario.train, scenario.cavity, scenario.threshold
    )
    print(f"geometry={scenario.cavity.geometry.value}")
    print(f"gamma={scenario.cavity.gamma:.6e} detuning={scenario.cavity.detuning:.6f} "
          f"pump={scenario.cavity.pump:.6f}")
    print(f"rho0={scenario.train.rho0:.6e} wavenumber={scenario.train.wavenumber:.6e}")
    print(f"grid n={scenario.grid.n} extent={scenario.grid.extent:.6e} "
          f"spacing={scenario.grid.spacing:.6e}")
    print(vc.describe())
    if not scenario.det.long_window_ok(scenario.cavity.gamma):
        print("warning: detection window is short: window*gamma < 100")
    return 0


def _cmd_modes(scenario: Scenario, args, out_dir: Path) -> int:
    p_max = args.pmax if args.pmax is not None else scenario.p_max
    l_max = args.lmax if args.lmax is not None else scenario.l_max
    basis = build_basis(scenario.grid, scenario.waist, p_max, l_max)
    gram = basis.gram_matrix()
    off_diag = gram - np.diag(np.diag(gram))
    print(f"modes={len(basis)} p_max={p_max} l_max={l_max} waist={basis.waist:.6e}")
    print(f"gram_max_offdiag={np.max(np.abs(off_diag)):.6e}")
    print(f"gram_max_diag_error={np.max(np.abs(np.diag(gram) - 1.0)):.6e}")
    wanted = set(DEFAULT_ARTIFACTS["modes"]) | _emit_set(args)
    if "gram" in wanted:
        path = out_dir / "gram_matrix.csv"
        with open(path, "w") as fh:
            fh.write(f"# modes={len(basis)} quantity=gram_matrix\n")
            for row in gram:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
        print(f"wrote {path}")
    if "modes" in wanted:
        for idx, values in zip(basis.indices, basis.functions):
            stem = f"mode_p{idx.p}_l{idx.l}_{idx.parity}"
            write_field_csv(out_dir / f"{stem}.csv", scenario.grid, values, stem)
            print(f"wrote {out_dir / f'{stem}.csv'}")
    return 0


def _emit_set(args) -> set[str]:
    if not args.emit:
        return set()
    return {token.strip() for token in args.emit.split(",") if token.strip()}


def _geometries(scenario: Scenario, args) -> list[tuple[Scenario, str]]:
    choice = args.geometry
    if choice is None:
        return [(scenario, "")]
    if choice == "both":
        return [
            (scenario.with_geometry(Geometry.PLANAR), "_planar"),
            (scenario.with_geometry(Geometry.CONFOCAL), "_confocal"),
        ]
    return [(scenario.with_geometry(Geometry(choice)), "")]


def _run(args) -> int:
    scenario = load_scenario(args.config)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    if args.shots is not None:
        scenario = replace(scenario, shots=args.shots)
    if args.threshold is not None:
        scenario = replace(scenario, threshold=args.threshold)
    out_dir = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.command == "validate":
        return _cmd_validate(scenario, args, out_dir)
    if args.command == "modes":
        return _cmd_modes(scenario, args, out_dir)

    wanted = set(DEFAULT_ARTIFACTS[args.command]) | _emit_set(args)
    images = []
    for variant, suffix in _geometries(scenario, args):
        images.append(_run_field_commands(variant, wanted, out_dir, suffix))
    if len(images) == 2 and images[0] is not None and images[1] is not None:
        diff = images[0].values - images[1].values
        norm = images[1].l2_norm()
        l2 = float(np.sqrt(np.sum(np.abs(diff) ** 2))) * scenario.grid.spacing
        print(f"l2_difference={l2 / norm if norm else l2:.6e}")
        center = scenario.grid.n // 2
        print(f"on_axis_difference={abs(diff[center, center]):.6e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavamp",
        description="Parametric amplification of optical images in planar "
        "and confocal ring cavities",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("validate", "check a config and print the validity figure"),
        ("gain-map", "emit the transverse gain map at Omega = 0"),
        ("noise-map", "emit the transverse noise-figure map"),
        ("amplify", "emit the amplified image field (magnitude/phase)"),
        ("simulate", "closed-form detection statistics plus Monte Carlo"),
        ("modes", "Gauss-Laguerre basis diagnostics"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", type=Path, required=True, help="scenario TOML file")
        cmd.add_argument("--out-dir", type=Path, default=Path("out"))
        cmd.add_argument("--emit", default="", help="comma-separated extra artifacts "
                         "(gain-map,noise-map,image,report,mc,object,gram,modes)")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--shots", type=int, default=None)
        cmd.add_argument("--geometry", choices=["planar", "confocal", "both"], default=None)
        cmd.add_argument("--threshold", type=float, default=None)
        if name == "modes":
            cmd.add_argument("--pmax", type=int, default=None)
            cmd.add_argument("--lmax", type=int, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (ConfigError, ParameterError, GridMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
