"""Batch commands behind the ``twpa`` CLI.

Each command reads a :class:`ProjectConfig`, writes its artifacts into a
subdirectory of the output directory and records a ``run.json`` manifest.
Numeric tables use :func:`twpa.io.fmt` so identical inputs give identical
bytes.
"""

from __future__ import annotations

import json
import math
import os
import time
from pathlib import Path

import numpy as np

from . import __version__, io
from .config import ProjectConfig
from .errors import MissingArtifacts, PumpInGap
from .film import (
    calibrate_deposition,
    fit_fuchs,
    fit_ivry,
    fit_l0_powerlaw,
    kinetic_inductance_bcs,
)
from .line import (
    LineLayout,
    SuperCell,
    dispersion,
    find_band_gaps,
    half_wave_frequency,
    line_sparameters,
    vswr,
)
from .noise import NoiseChain, analyse_scan
from .nonlinear import (
    NonlinearParams,
    PhaseShiftScan,
    PumpConfig,
    S21Sweep,
    biased_supercell,
    calibrate_pump_ratio,
    cme_gain_sweep,
    extract_scaling_current,
    gain_on_off,
    simulate_s21,
    theoretical_scaling_current,
)

SECTIONS = ("film", "design", "gain", "noise")
REPORT_FILES = {
    "film": "film/film_report.txt",
    "design": "design/design_report.txt",
    "gain": "gain/gain_report.txt",
    "noise": "noise/noise_report.txt",
}


def output_dir(cfg: ProjectConfig, out=None) -> Path:
    if out:
        return Path(out)
    p = cfg.path("output", "directory")
    if p is not None:
        return p
    env = os.environ.get("TWPA_OUT")
    return Path(env) if env else Path("twpa_out")


def _manifest(cfg, command, outdir, inputs, outputs, t0):
    rec = {
        "command": command,
        "toolkit_version": __version__,
        "config_digest": cfg.digest(),
        "input_digests": {str(Path(p).name): io.sha256_file(p) for p in inputs},
        "outputs": {str(Path(p).relative_to(outdir)): io.sha256_file(p) for p in outputs},
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    path = outdir / "run.json"
    path.write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n")
    return rec


# -- builders ------------------------------------------------------------------------


def build_layout(cfg: ProjectConfig, n_supercells: int | None = None) -> LineLayout:
    sc = SuperCell.default(
        l_cell=cfg.number("line", "l_cell_ph") * 1e-12,
        cell_length=cfg.number("line", "cell_length_um") * 1e-6,
        z_unloaded=cfg.number("line", "z_unloaded_ohm"),
        z_loaded=cfg.number("line", "z_loaded_ohm"),
        n_unloaded=cfg.integer("line", "n_unloaded"),
        n_loaded=cfg.integer("line", "n_loaded"),
        placement=cfg.get("line", "loading_pattern"),
    )
    n = cfg.integer("line", "n_supercells") if n_supercells is None else n_supercells
    return LineLayout(sc, n, cfg.number("line", "z_source_ohm"), cfg.number("line", "z_load_ohm"))


def build_chain(cfg: ProjectConfig) -> NoiseChain:
    return NoiseChain.from_db(
        cfg.number("noise", "gain_kitwpa_db"),
        cfg.number("noise", "gain_hemt_db"),
        t_hemt=cfg.number("noise", "t_hemt_k"),
        f1=cfg.number("noise", "f1"),
        f2=cfg.number("noise", "f2"),
        frequency=cfg.number("noise", "frequency_ghz") * 1e9,
    ).validate()


# -- film-fit ------------------------------------------------------------------------


def cmd_film_fit(cfg: ProjectConfig, out=None) -> dict:
    t0 = time.perf_counter()
    root = output_dir(cfg, out)
    d = root / "film"
    d.mkdir(parents=True, exist_ok=True)
    inputs, outputs, report = [], [], {}

    samples_path = cfg.path("film", "samples")
    if samples_path is not None:
        samples = io.read_film_samples(samples_path)
        inputs.append(samples_path)
        h = np.array([s.thickness_nm for s in samples])
        rs = np.array([s.sheet_resistance for s in samples])
        tc = np.array([s.critical_temperature for s in samples])
        l0 = kinetic_inductance_bcs(rs, tc)

        fuchs = fit_fuchs(samples)
        ivry = fit_ivry(samples)
        power = fit_l0_powerlaw(zip(h, l0))

        report.update(
            {
                "n_samples": len(samples),
                "fuchs_rho_bulk_ohm_nm": fuchs.rho_bulk,
                "fuchs_roughness_scale_nm": fuchs.roughness_scale,
                "fuchs_residual_rms_ohm": fuchs.residual_rms,
                "ivry_coeff_a": ivry.coeff_A,
                "ivry_exponent_b": ivry.exponent_B,
                "ivry_residual_rms_k": ivry.residual_rms,
                "l0_prefactor_ph_nm_alpha": power.prefactor,
                "l0_exponent_alpha": power.exponent_alpha,
                "l0_residual_rms_ph": power.residual_rms,
            }
        )
        rows = zip(h, rs, fuchs(h), tc, ivry(rs, h), l0, power(h))
        outputs.append(
            io.write_table(
                d / "film_samples.csv",
                ("thickness_nm", "rs_ohm_sq", "rs_model", "tc_k", "tc_model", "l0_ph_sq", "l0_model"),
                rows,
            )
        )
        hh = np.linspace(h.min(), h.max(), 101)
        rs_m = fuchs(hh)
        outputs.append(
            io.write_table(
                d / "film_curves.csv",
                ("thickness_nm", "rs_model", "tc_model", "l0_model"),
                zip(hh, rs_m, ivry(rs_m, hh), power(hh)),
            )
        )

    dep_path = cfg.path("film", "deposition")
    if dep_path is not None:
        cal = calibrate_deposition(io.read_deposition(dep_path))
        inputs.append(dep_path)
        report.update(
            {
                "deposition_rate_nm_per_min": cal.rate_nm_per_min,
                "deposition_offset_nm": cal.offset_nm,
                "deposition_residual_rms_nm": cal.residual_rms,
            }
        )
    if not inputs:
        raise MissingArtifacts("film-fit needs film.samples and/or film.deposition in the config")

    outputs.append(io.write_keyvalue(d / "film_report.txt", report))
    _manifest(cfg, "film-fit", d, inputs, outputs, t0)
    return report


# -- design --------------------------------------------------------------------------


def cmd_design(cfg: ProjectConfig, out=None) -> dict:
    t0 = time.perf_counter()
    root = output_dir(cfg, out)
    d = root / "design"
    d.mkdir(parents=True, exist_ok=True)
    layout = build_layout(cfg)
    sc = layout.supercell
    fmax = cfg.number("line", "gap_search_max_ghz") * 1e9
    gaps = find_band_gaps(sc, 1e7, fmax, cfg.number("line", "gap_resolution_mhz") * 1e6)

    report = {
        "n_supercells": layout.n_supercells,
        "cells_per_supercell": sc.n_cells,
        "total_cells": layout.n_cells,
        "supercell_length_m": sc.length,
        "line_length_m": layout.length,
        "z_unloaded_ohm": sc.unloaded.impedance,
        "z_loaded_ohm": sc.loaded.impedance,
        "gap_count": len(gaps),
    }
    if gaps:
        for i, (lo, hi) in enumerate(gaps, start=1):
            report[f"gap_{i}_lo_hz"] = lo
            report[f"gap_{i}_hi_hz"] = hi
        f_half = half_wave_frequency(sc, gaps)
        report["half_wave_frequency_hz"] = f_half
        report["total_phase_at_gap_edge_rad"] = layout.n_supercells * math.pi
        report["total_phase_at_gap_edge_over_pi"] = float(layout.n_supercells)
    else:
        report["gaps"] = f"no gap found below {fmax / 1e9:g} GHz"

    f = np.linspace(cfg.number("line", "sweep_start_ghz") * 1e9, cfg.number("line", "sweep_stop_ghz") * 1e9, cfg.integer("line", "sweep_points"))
    s11, s21, s12, s22 = line_sparameters(layout, f)
    disp = dispersion(sc, f)

    vmax_f = cfg.number("line", "vswr_max_ghz") * 1e9
    pb = f[(f <= vmax_f) & ~disp.in_gap]
    if pb.size:
        v = np.array([vswr(layout, x) for x in pb])
        report["vswr_max_below_hz"] = vmax_f
        report["vswr_max"] = float(v.max())
    try:
        report["vswr_at_5ghz"] = vswr(layout, 5e9)
        report["s21_db_at_5ghz"] = 20 * math.log10(abs(line_sparameters(layout, 5e9)[1]))
    except Exception:  # 5 GHz may sit in a gap for odd configs
        pass

    outputs = [
        io.write_touchstone(d / "line.s2p", f, s11, s21, s12, s22, layout.source_impedance, comment="twpa design sweep"),
        io.write_sweep_csv(d / "line_sweep.csv", f, s21, s11),
        io.write_table(
            d / "dispersion.csv",
            ("freq_hz", "bloch_phase_rad", "attenuation_np", "in_gap", "zb_re", "zb_im"),
            zip(f, disp.phase, disp.attenuation, disp.in_gap.astype(int), disp.bloch_impedance.real, disp.bloch_impedance.imag),
        ),
    ]
    outputs.append(io.write_keyvalue(d / "design_report.txt", report))
    _manifest(cfg, "design", d, [cfg.source] if cfg.source else [], outputs, t0)
    return report


# -- gain ----------------------------------------------------------------------------


def cmd_gain(cfg: ProjectConfig, out=None) -> dict:
    t0 = time.perf_counter()
    root = output_dir(cfg, out)
    d = root / "gain"
    d.mkdir(parents=True, exist_ok=True)
    inputs = []
    convention = cfg.get("nonlinear", "slope_convention")

    report = {}
    i_star = cfg.number("nonlinear", "scaling_current_ma") * 1e-3
    i_c = cfg.number("nonlinear", "critical_current_ma") * 1e-3
    scan_path = cfg.path("nonlinear", "phase_scan")
    if scan_path is not None:
        scan = io.read_phase_scan(scan_path)
        # shifts are given relative to N_sc*pi; rescale if theta0 is corrected
        corr = cfg.number("nonlinear", "theta0_correction")
        if corr:
            scan = PhaseShiftScan(scan.dc_currents, scan.relative_phase_shifts / (1.0 + corr))
        i_star, sigma = extract_scaling_current(scan, convention)
        inputs.append(scan_path)
        report["scaling_current_extracted_a"] = i_star
        report["scaling_current_sigma_a"] = sigma
    report["scaling_current_a"] = i_star
    report["scaling_current_theory_a"] = theoretical_scaling_current(i_c)

    params = NonlinearParams(i_star, i_c)
    layout = build_layout(cfg)
    fp = cfg.number("nonlinear", "pump_frequency_ghz") * 1e9
    i_dc = cfg.number("nonlinear", "dc_current_ma") * 1e-3
    fs = np.linspace(
        cfg.number("nonlinear", "signal_start_ghz") * 1e9,
        cfg.number("nonlinear", "signal_stop_ghz") * 1e9,
        cfg.integer("nonlinear", "signal_points"),
    )
    steps = cfg.integer("nonlinear", "steps_per_supercell")

    try:
        ratio_raw = cfg.get("nonlinear", "pump_ratio")
        if ratio_raw == "auto":
            ref = build_layout(cfg, cfg.integer("nonlinear", "calibration_n_supercells"))
            ratio = calibrate_pump_ratio(
                ref, params, fp, i_dc, fs, cfg.number("nonlinear", "target_gain_db"), steps_per_supercell=steps, convention=convention
            )
            report["pump_ratio_source"] = "calibrated"
            report["calibration_n_supercells"] = ref.n_supercells
        else:
            ratio = float(ratio_raw)
            report["pump_ratio_source"] = "config"
        pump = PumpConfig(fp, ratio * i_star, i_dc)
        sol = cme_gain_sweep(layout, params, pump, fs, steps_per_supercell=steps, convention=convention)
    except PumpInGap as exc:
        if not exc.gaps:
            sc = biased_supercell(layout.supercell, i_dc, i_star, convention)
            exc.gaps = find_band_gaps(sc, 0.5 * fp, 1.5 * fp, fp * 1e-3)
        edges = ", ".join(f"{lo / 1e9:.4f}-{hi / 1e9:.4f} GHz" for lo, hi in exc.gaps)
        raise PumpInGap(f"{exc} (stopband {edges})", exc.gaps) from None

    off = simulate_s21(layout, params, pump, fs, pump_on=False)
    on = S21Sweep(fs, off.s21 * sol.final[1] / sol.initial[1])
    profile = gain_on_off(on, off, pump)
    mr = sol.manley_rowe_error()

    report.update(
        {
            "n_supercells": layout.n_supercells,
            "pump_frequency_hz": fp,
            "dc_current_a": i_dc,
            "pump_ratio": ratio,
            "pump_current_a": pump.pump_current,
            "peak_gain_db": profile.peak_db,
            "peak_frequency_hz": profile.peak_frequency,
            "mean_gain_db": profile.mean_db,
            "signal_gain_peak_db": float(sol.gain_db.max()),
            "manley_rowe_signal_minus_idler": mr["signal_minus_idler"],
            "manley_rowe_pump_plus_signal": mr["pump_plus_signal"],
            "cme_steps": sol.steps,
        }
    )
    outputs = [
        io.write_gain_csv(d / "gain.csv", profile),
        io.write_svg_plot(
            d / "gain.svg",
            profile.frequencies / 1e9,
            profile.gain_db,
            xlabel="signal frequency (GHz)",
            ylabel="gain (dB)",
            title=f"pump {fp / 1e9:g} GHz, I_dc {i_dc * 1e3:g} mA, N_sc {layout.n_supercells}",
        ),
    ]
    outputs.append(io.write_keyvalue(d / "gain_report.txt", report))
    _manifest(cfg, "gain", d, inputs, outputs, t0)
    return report


# -- noise-fit -----------------------------------------------------------------------


def cmd_noise_fit(cfg: ProjectConfig, out=None, scan_path=None) -> dict:
    t0 = time.perf_counter()
    root = output_dir(cfg, out)
    d = root / "noise"
    d.mkdir(parents=True, exist_ok=True)
    scan_path = Path(scan_path) if scan_path else cfg.path("noise", "scan")
    if scan_path is None:
        raise MissingArtifacts("noise-fit needs a scan CSV (noise.scan or --scan)")
    scan = io.read_noise_scan(scan_path)
    chain = build_chain(cfg)
    res = analyse_scan(scan, chain, cfg.get("noise", "quanta_convention"))

    report = {
        "t_sys_k": res.t_sys,
        "t_n_k": res.t_n,
        "n_quanta": res.n_quanta,
        "slope": res.fit.slope,
        "intercept": res.fit.intercept,
        "residual_rms": res.fit.residual_rms,
        "frequency_hz": chain.frequency,
        "gain_kitwpa": chain.gain_kitwpa,
        "gain_hemt": chain.gain_hemt,
        "t_hemt_k": chain.t_hemt,
        "f1": chain.f1,
        "f2": chain.f2,
        "clamped": res.clamped,
    }
    outputs = [io.write_keyvalue(d / "noise_report.txt", report)]
    rec = {k: (io.fmt(v) if not isinstance(v, bool) else v) for k, v in report.items()}
    p = d / "noise_result.json"
    p.write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n")
    outputs.append(p)
    _manifest(cfg, "noise-fit", d, [scan_path], outputs, t0)
    return report


# -- report --------------------------------------------------------------------------


def cmd_report(cfg: ProjectConfig, out=None, rebuild: bool = False) -> Path:
    root = output_dir(cfg, out)
    if rebuild:
        cmd_film_fit(cfg, root)
        cmd_design(cfg, root)
        cmd_gain(cfg, root)
        cmd_noise_fit(cfg, root)
    missing = [name for name, rel in REPORT_FILES.items() if not (root / rel).is_file()]
    if missing:
        raise MissingArtifacts(f"run these commands first: {', '.join(missing)} (or use --rebuild)")

    lines = [
        "# KI-TWPA toolkit run report",
        "",
        f"toolkit_version: {__version__}",
        f"config_digest: {cfg.digest()}",
        "",
    ]
    for name in SECTIONS:
        rel = REPORT_FILES[name]
        manifest = json.loads((root / rel).parent.joinpath("run.json").read_text())
        lines += [f"## {name}", ""]
        for k, v in sorted(manifest["input_digests"].items()):
            lines.append(f"input {k}: sha256 {v}")
        lines += ["", "| key | value |", "|---|---|"]
        for row in (root / rel).read_text().splitlines():
            k, _, v = row.partition(" = ")
            lines.append(f"| {k} | {v} |")
        lines.append("")
    path = root / "report.md"
    path.write_text("\n".join(lines))
    return path
