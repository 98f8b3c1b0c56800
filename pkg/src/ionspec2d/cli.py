"""Scenario runner: config parsing, artifact output, run manifest.

Four scenarios: ``kerr`` (self-interaction spectrum near the structural
transition), ``resonance`` (zigzag-stretch exchange spectrum under heating),
``tables`` (effective-parameter tables only), and ``noise-table`` (the laser
phase-noise contrast-loss table).  Every run, successful or not, leaves a
manifest.json with the resolved configuration, derived parameters and
checksums of all outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
from scipy import constants

from . import __version__, anharmonic, matio, phasenoise, protocol, scenarios, spectrum
from .crystal import TrapConfig

SCENARIOS = ("kerr", "resonance", "tables", "noise-table")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str
    n_ions: int = 3
    mass_amu: float = 39.9625909
    omega_z_hz: float = 2.0e6
    omega_x_hz: float = 3.1012e6
    omega_y_hz: float = 5.0e6
    dims: tuple[int, ...] = (9, 15, 15)
    nbar: tuple[float, ...] = (1.0, 4.0, 4.0)
    heating_quanta_per_ms: tuple[float, ...] = (0.0, 0.0)
    alpha: float = 0.25
    n_phases: tuple[int, int, int] = (4, 4, 4)
    signature: tuple[int, int, int] = (1, -1, -1)
    t_max_s: float = 2.0e-3
    dt_s: float = 25.3e-6
    grid_scale: float = 1.0
    seed: int = 0
    threads: int = 1
    out_dir: str = "out"
    window: str = "none"
    zero_pad: int = 1
    baseline_notch: bool = False
    fast_path: bool = True
    peak_threshold: float = 0.05
    phase_noise_diffusion: float = 0.0
    noise_t1_s: float = 2.5e-3
    noise_t3_s: float = 2.5e-3
    mc_paths: int = 100_000

    def trap(self) -> TrapConfig:
        return TrapConfig(
            n_ions=self.n_ions,
            mass=self.mass_amu * constants.atomic_mass,
            omega_x=2 * np.pi * self.omega_x_hz,
            omega_y=2 * np.pi * self.omega_y_hz,
            omega_z=2 * np.pi * self.omega_z_hz,
        )

    def sequence(self) -> protocol.PulseSequence:
        return protocol.PulseSequence(
            amplitudes=(self.alpha,) * 4,
            n_phases=tuple(self.n_phases),
            signature=tuple(self.signature),
            target=0,
        )

    @property
    def effective_t_max(self) -> float:
        return self.t_max_s * self.grid_scale


# per-scenario defaults layered over the dataclass defaults
_SCENARIO_DEFAULTS = {
    "kerr": {
        "dims": (9, 15, 15),
        "nbar": (1.0, 4.0, 4.0),
        "dt_s": 25.3e-6,
        "heating_quanta_per_ms": (0.0, 0.0, 0.0),
    },
    "resonance": {
        "omega_x_hz": 2.0e6 * float(np.sqrt(63.0 / 20.0)),
        "dims": (9, 6),
        "nbar": (0.7, 0.2),
        "heating_quanta_per_ms": (0.2, 0.1),
        "dt_s": 10.6e-6,
    },
    "tables": {},
    "noise-table": {},
}

_TUPLE_FIELDS = {
    "dims": int,
    "nbar": float,
    "heating_quanta_per_ms": float,
    "n_phases": int,
    "signature": int,
}


def build_config(raw: dict) -> RunConfig:
    """Validated config from a JSON-compatible dict; unknown keys rejected."""
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    scenario = raw.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    merged = dict(_SCENARIO_DEFAULTS[scenario])
    merged.update(raw)
    cfg_kwargs = {}
    for f in fields(RunConfig):
        if f.name not in merged:
            continue
        value = merged[f.name]
        if f.name in _TUPLE_FIELDS:
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{f.name} must be a list")
            value = tuple(_TUPLE_FIELDS[f.name](v) for v in value)
        elif f.name in ("scenario", "out_dir", "window"):
            if not isinstance(value, str):
                raise ConfigError(f"{f.name} must be a string")
        elif f.name in ("baseline_notch", "fast_path"):
            if not isinstance(value, bool):
                raise ConfigError(f"{f.name} must be a boolean")
        elif f.name in ("n_ions", "seed", "threads", "zero_pad", "mc_paths"):
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{f.name} must be an integer")
        else:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{f.name} must be a number")
            value = float(value)
        cfg_kwargs[f.name] = value
    cfg = RunConfig(**cfg_kwargs)
    if cfg.grid_scale <= 0:
        raise ConfigError("grid_scale must be positive")
    if cfg.window not in ("none", "cosine"):
        raise ConfigError("window must be 'none' or 'cosine'")
    if cfg.scenario in ("kerr", "resonance") and len(cfg.dims) != len(cfg.nbar):
        raise ConfigError("dims and nbar must have matching lengths")
    return cfg


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _mode_columns(labels) -> list[str]:
    """Table column order: x modes, then y, then z, ascending mode number."""
    rank = {"x": 0, "y": 1, "z": 2}
    return sorted(
        (lab for lab in labels if lab != "zz"),
        key=lambda lab: (rank[lab[0]], int(lab[1:])),
    )


def _kerr_tables(params: anharmonic.EffectiveParams) -> tuple[list, list, list, list]:
    """Header and rows for the shift and dephasing CSV tables (kHz)."""
    khz = 2 * np.pi * 1e3
    deph_modes = _mode_columns(params.effective.dephasing)
    shift_cols = (
        [c for c in deph_modes if c[0] == "x"]
        + ["zz"]
        + [c for c in deph_modes if c[0] != "x"]
    )
    deph_cols = (
        [c for c in deph_modes if c[0] == "x"]
        + ["si_half"]
        + [c for c in deph_modes if c[0] != "x"]
    )
    shift_rows, deph_rows = [], []
    for order_name, par in (
        ("third", params.third),
        ("fourth", params.fourth),
        ("effective", params.effective),
    ):
        shift_rows.append([order_name] + [par.delta[c] / khz for c in shift_cols])
        deph_rows.append(
            [order_name]
            + [
                par.omega_si / 2 / khz if c == "si_half" else par.dephasing[c] / khz
                for c in deph_cols
            ]
        )
    shift_header = ["order"] + [f"dw_{c}" for c in shift_cols]
    deph_header = ["order"] + [
        "osi_half" if c == "si_half" else f"od_{c}" for c in deph_cols
    ]
    return shift_header, shift_rows, deph_header, deph_rows


def _write_tables(out: Path, params: anharmonic.EffectiveParams) -> list[Path]:
    shift_header, shift_rows, deph_header, deph_rows = _kerr_tables(params)
    shifts = out / "freq_shifts_khz.csv"
    deph = out / "dephasing_rates_khz.csv"
    matio.write_csv(shifts, shift_header, shift_rows)
    matio.write_csv(deph, deph_header, deph_rows)
    return [shifts, deph]


def _write_spectrum_products(
    out: Path, cfg: RunConfig, grid, spec, proj1, proj3, peaks
) -> list[Path]:
    paths = []

    def put(name, writer):
        path = out / name
        writer(path)
        paths.append(path)

    put("signal_grid.bin", lambda p: matio.write_matrix(p, grid.values))
    put("spectrum.bin", lambda p: matio.write_matrix(p, spec.values))
    w1, w3 = np.meshgrid(spec.omega1, spec.omega3, indexing="ij")
    rows = np.column_stack([w1.ravel(), w3.ravel(), spec.magnitude.ravel()])
    put(
        "spectrum.csv",
        lambda p: matio.write_csv(
            p, ["omega1_rad_s", "omega3_rad_s", "magnitude"], rows.tolist()
        ),
    )
    for name, proj in (("projection_omega1.csv", proj1), ("projection_omega3.csv", proj3)):
        put(
            name,
            lambda p, pr=proj: matio.write_csv(
                p,
                ["omega_rad_s", "magnitude"],
                np.column_stack([pr.omega, pr.magnitude]).tolist(),
            ),
        )
    put(
        "peaks.csv",
        lambda p: matio.write_csv(
            p,
            ["omega1_rad_s", "omega3_rad_s", "magnitude", "label"],
            [[pk.omega1, pk.omega3, pk.magnitude, pk.label] for pk in peaks],
        ),
    )
    return paths


def _apply_phase_noise(grid, signature, diffusion):
    """Pointwise analytic attenuation of the phase-cycled grid."""
    t1, t3 = np.meshgrid(grid.t1, grid.t3, indexing="ij")
    loss = 0.5 * diffusion * (
        (sum(signature)) ** 2 * t1 + signature[2] ** 2 * t3
    )
    return protocol.SignalGrid(t1=grid.t1, t3=grid.t3, values=grid.values * (1 - loss))


def run_scenario(cfg: RunConfig) -> dict:
    """Execute the configured scenario; returns the manifest dict."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    manifest = {
        "tool": "ionspec2d",
        "version": __version__,
        "scenario": cfg.scenario,
        "status": "running",
        "resolved_config": asdict(cfg),
    }
    try:
        outputs = _dispatch(cfg, out, manifest)
        manifest["status"] = "ok"
    except Exception as exc:
        manifest["status"] = "error"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        manifest["wall_time_s"] = time.time() - started
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
        raise
    manifest["wall_time_s"] = time.time() - started
    manifest["outputs"] = {p.name: _sha256(p) for p in outputs}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest


def _dispatch(cfg: RunConfig, out: Path, manifest: dict) -> list[Path]:
    if cfg.scenario == "noise-table":
        rows = phasenoise.loss_table(
            t1=cfg.noise_t1_s,
            t3=cfg.noise_t3_s,
            diffusion=cfg.phase_noise_diffusion or phasenoise.DEFAULT_DIFFUSION,
            n_paths=cfg.mc_paths,
            seed=cfg.seed,
        )
        path = out / "noise_loss.csv"
        matio.write_csv(
            path,
            ["p2", "p3", "p4", "loss_analytic", "loss_mc"],
            [[r["p2"], r["p3"], r["p4"], r["loss"], r.get("loss_mc", "")] for r in rows],
        )
        manifest["derived"] = {"diffusion_rad2_s": cfg.phase_noise_diffusion or phasenoise.DEFAULT_DIFFUSION}
        return [path]

    data = scenarios.derive_modes(cfg.trap())
    derived = {
        "omega_zz_hz": data.omega_zz / (2 * np.pi),
        "lambda_z": data.modes.lambda_z.tolist(),
        "gamma_x": data.modes.gamma_x.tolist(),
        "gamma_y": data.modes.gamma_y.tolist(),
    }
    manifest["derived"] = derived

    if cfg.scenario == "tables":
        params = scenarios.kerr_parameters(data)
        derived["omega_si_hz"] = params.omega_si / (2 * np.pi)
        derived["delta_omega_zz_hz"] = params.delta_omega_zz / (2 * np.pi)
        return _write_tables(out, params)

    seq = cfg.sequence()
    t_max = cfg.effective_t_max
    if cfg.scenario == "kerr":
        params = scenarios.kerr_parameters(data)
        derived["omega_si_hz"] = params.omega_si / (2 * np.pi)
        derived["delta_omega_zz_hz"] = params.delta_omega_zz / (2 * np.pi)
        model = scenarios.kerr_model_from_params(
            params, dims=tuple(cfg.dims), nbar=tuple(cfg.nbar)
        )
        manifest["dissipation_free"] = True
        if cfg.fast_path:
            grid = scenarios.kerr_scan_fast(model, seq, t_max, cfg.dt_s, cfg.threads)
        else:
            grid = scenarios.kerr_scan_full(model, seq, t_max, cfg.dt_s, cfg.threads)
        table_paths = _write_tables(out, params)
    else:  # resonance
        res = scenarios.resonance_parameters(data)
        derived["omega_t_hz"] = res.omega_t / (2 * np.pi)
        derived["detuning_hz"] = res.detuning / (2 * np.pi)
        rates = tuple(1e3 * r for r in cfg.heating_quanta_per_ms)
        manifest["dissipation_free"] = not any(rates)
        model = scenarios.resonance_model(
            res.omega_t, dims=tuple(cfg.dims), heating_quanta_per_s=rates
        )
        rho0 = scenarios.resonance_initial_state(tuple(cfg.dims), tuple(cfg.nbar))
        grid = protocol.scan(
            model, rho0, seq, t_max, cfg.dt_s, threads=cfg.threads
        )
        table_paths = []

    if cfg.phase_noise_diffusion > 0:
        grid = _apply_phase_noise(grid, cfg.signature, cfg.phase_noise_diffusion)

    carrier = -data.omega_zz
    spec = spectrum.fft2(
        grid, window=cfg.window, zero_pad=cfg.zero_pad, carrier_offset=carrier
    )
    if cfg.baseline_notch:
        spec = spectrum.notch_carrier(spec)
    proj1 = spectrum.project_1d(
        grid, "t1", window=cfg.window, zero_pad=cfg.zero_pad, carrier_offset=carrier
    )
    proj3 = spectrum.project_1d(
        grid, "t3", window=cfg.window, zero_pad=cfg.zero_pad, carrier_offset=carrier
    )
    peaks = spectrum.find_peaks(spec, threshold=cfg.peak_threshold)
    if cfg.scenario == "resonance":
        tol = 1.5 * spec.bin_width
        scenarios.label_peaks(
            peaks, scenarios.predicted_resonance_peaks(data.omega_zz, derived["omega_t_hz"] * 2 * np.pi), tol
        )
    paths = _write_spectrum_products(out, cfg, grid, spec, proj1, proj3, peaks)
    return table_paths + paths


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ionspec2d",
        description="2D phase-cycled spectroscopy simulations for ion Coulomb crystals",
    )
    parser.add_argument("--config", type=Path, help="JSON configuration file")
    parser.add_argument("--scenario", choices=SCENARIOS)
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--grid-scale", dest="grid_scale", type=float)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--seed", type=int)
    args = parser.parse_args(argv)

    raw: dict = {}
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
            return 2
        if not isinstance(raw, dict):
            print("error: config must be a JSON object", file=sys.stderr)
            return 2
    for key in ("scenario", "out_dir", "grid_scale", "threads", "seed"):
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    if "scenario" not in raw:
        print("error: --scenario (or a config with one) is required", file=sys.stderr)
        return 2
    try:
        cfg = build_config(raw)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run_scenario(cfg)
    except Exception as exc:  # manifest with the error is already on disk
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"status": manifest["status"], "out_dir": cfg.out_dir,
                      "wall_time_s": round(manifest["wall_time_s"], 3)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
