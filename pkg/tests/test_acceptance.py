"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import math
import shutil
import sys
import time
from pathlib import Path

import numpy as np
from scipy import constants

from twpa.cli import run
from twpa.demo import DEFAULT_SEED
from twpa.film import (
    FilmSample,
    calibrate_deposition,
    fit_fuchs,
    fit_ivry,
    fit_l0_powerlaw,
    fuchs_sheet_resistance,
    kinetic_inductance_bcs,
)
from twpa.line import LineLayout, SuperCell, dispersion, find_band_gaps, half_wave_frequency
from twpa.noise import (
    NoiseChain,
    chain_family_from_reference,
    consistent_f1_window,
    db_to_linear,
    fit_noise_scan,
    noise_quanta,
    simulate_scan,
    solve_amplifier_noise,
)
from twpa.nonlinear import (
    NonlinearParams,
    PhaseShiftScan,
    PumpConfig,
    calibrate_pump_ratio,
    cme_gain_sweep,
    extract_scaling_current,
    relative_phase_shift,
)

RESULTS: list[str] = []
DEMO_DIR = Path(__file__).resolve().parent.parent / "demo"


def record(n: int, ok: bool, detail: str) -> bool:
    RESULTS.append(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    print(RESULTS[-1])
    return ok


# 1 -----------------------------------------------------------------------------------


def test_c1_bcs():
    l0 = kinetic_inductance_bcs(86.0, 12.5)
    oracle = constants.hbar * 86.0 / (math.pi * constants.k * 12.5 * 1.762) * 1e12
    rel = abs(l0 - 9.5) / 9.5
    ok = rel <= 0.015 and abs(l0 - oracle) <= 1e-12 * oracle
    assert record(1, ok, f"L0(86 ohm/sq, 12.5 K) = {l0:.4f} pH/sq, {rel:.2%} from 9.5 (tol 1.5%)")


# 2 -----------------------------------------------------------------------------------


def test_c2_noise_quanta():
    n01 = noise_quanta(0.1, 4e9)
    n05 = noise_quanta(0.5, 4e9)
    ok = 0.49 <= n01 <= 0.55 and 2.47 <= n05 <= 2.73
    assert record(2, ok, f"N_q(0.1 K) = {n01:.4f} in [0.49, 0.55]; N_q(0.5 K) = {n05:.4f} in [2.47, 2.73]")


# 3 -----------------------------------------------------------------------------------


def test_c3_noise_round_trip():
    rng = np.random.default_rng(DEFAULT_SEED)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        chain = NoiseChain.from_db(
            rng.uniform(0, 25),
            rng.uniform(20, 45),
            t_hemt=rng.uniform(0, 10),
            f1=rng.uniform(0.05, 1),
            f2=rng.uniform(0.05, 1),
            frequency=rng.uniform(1e9, 12e9),
        )
        t_n = rng.uniform(0.01, 5)
        _, t_sys = fit_noise_scan(simulate_scan(chain, t_n, np.linspace(0.28, 2.5, 12)))
        worst = max(worst, abs(solve_amplifier_noise(chain, t_sys) - t_n) / t_n)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 1.0
    assert record(3, ok, f"100 chains: max relative T_n error {worst:.2e} (tol 1e-9), {dt:.2f} s (< 1 s)")


# 4 -----------------------------------------------------------------------------------


def test_c4_table_consistency():
    t0 = time.perf_counter()
    ref = (float(db_to_linear(7.2)), 1.78, 0.5)
    others = [(float(db_to_linear(9.0)), 1.72, 0.7), (float(db_to_linear(10.0)), 2.06, 1.0)]
    window = consistent_f1_window(ref, others, rel_tol=0.2)
    ok = window is not None
    detail = "no F1 reproduces columns 2 and 3"
    if ok:
        f1 = 0.5 * (window[0] + window[1])
        chain = chain_family_from_reference(*ref, f1=f1)
        errs = []
        for gk, ts, tn in others:
            c = NoiseChain(gk, chain.gain_hemt, chain.t_hemt, chain.f1, chain.f2)
            errs.append(abs(solve_amplifier_noise(c, ts) - tn) / tn)
        ok = max(errs) <= 0.2
        detail = (
            f"F1 window [{window[0]:.3f}, {window[1]:.3f}]; at F1 = {f1:.3f} (T_H = {chain.t_hemt:.2f} K) "
            f"columns 2/3 T_n errors {errs[0]:.1%}, {errs[1]:.1%} (tol 20%)"
        )
    dt = time.perf_counter() - t0
    assert record(4, ok and dt < 1.0, detail + f", {dt:.2f} s")


# 5 -----------------------------------------------------------------------------------


def test_c5_dispersion():
    sc = SuperCell.default()
    t0 = time.perf_counter()
    d = dispersion(sc, np.linspace(1e8, 12e9, 10_000))
    dt = time.perf_counter() - t0
    gaps = find_band_gaps(sc, 1e8, 10e9, 10e6)
    f_half = half_wave_frequency(sc, gaps)
    ok = len(gaps) == 1 and 7e9 <= gaps[0][0] <= 8e9 and f_half is not None and 8e9 <= f_half <= 12e9
    # the per-supercell phase sits at pi from the gap edge upward
    phase_above = dispersion(sc, f_half * (1 + 1e-6)).phase[0]
    ok = ok and abs(phase_above - math.pi) < 1e-2 and d.frequency.size == 10_000 and dt < 5.0
    lo, hi = gaps[0] if gaps else (math.nan, math.nan)
    assert record(
        5,
        ok,
        f"{len(gaps)} gap below 10 GHz at {lo / 1e9:.3f}-{hi / 1e9:.3f} GHz (lower edge in [7, 8]); "
        f"phase = pi at {f_half / 1e9:.3f} GHz (in [8, 12]); 10k-point sweep {dt:.3f} s (< 5 s)",
    )


# 6 -----------------------------------------------------------------------------------


def test_c6_scaling_current():
    i_star = 5.3e-3
    i = np.arange(1, 9) * 0.2e-3
    t0 = time.perf_counter()
    clean, _ = extract_scaling_current(PhaseShiftScan(i, relative_phase_shift(i, i_star)))
    rng = np.random.default_rng(DEFAULT_SEED)
    noisy_shift = relative_phase_shift(i, i_star) * (1 + 0.02 * rng.standard_normal(i.size))
    noisy, sigma = extract_scaling_current(PhaseShiftScan(i, noisy_shift))
    # seed sweep, for information
    hits = 0
    for seed in range(200):
        r = np.random.default_rng(seed)
        s = relative_phase_shift(i, i_star) * (1 + 0.02 * r.standard_normal(i.size))
        hits += abs(extract_scaling_current(PhaseShiftScan(i, s))[0] - i_star) <= 1e-4
    dt = time.perf_counter() - t0
    e_clean = abs(clean - i_star) / i_star
    e_noisy = abs(noisy - i_star)
    ok = e_clean <= 0.01 and e_noisy <= 1e-4 and dt < 1.0
    assert record(
        6,
        ok,
        f"clean I* = {clean * 1e3:.5f} mA ({e_clean:.1e} rel, tol 1%); 2% noise (seed {DEFAULT_SEED}) "
        f"I* = {noisy * 1e3:.4f} +/- {sigma * 1e3:.4f} mA, error {e_noisy * 1e3:.4f} mA (tol 0.1 mA); "
        f"{hits}/200 seeds within tol; {dt:.2f} s",
    )


# 7 and 8 -----------------------------------------------------------------------------

PARAMS = NonlinearParams(5.3e-3, 1.5e-3)
FP = 9.5e9
I_DC = 1e-3
FS = np.linspace(4e9, 5e9, 21)
MR: list[tuple[int, dict]] = []


def _sweep(n, ratio):
    sol = cme_gain_sweep(LineLayout(SuperCell.default(), n), PARAMS, PumpConfig(FP, ratio * PARAMS.scaling_current, I_DC), FS)
    MR.append((n, sol.manley_rowe_error()))
    return float(sol.gain_db.max())


def test_c7_gain_scaling():
    t0 = time.perf_counter()
    ratio = calibrate_pump_ratio(LineLayout.half_size(), PARAMS, FP, I_DC, FS, 10.0)
    lengths = np.array([523, 700, 850, 1000])
    gains = np.array([_sweep(int(n), ratio) for n in lengths])
    g_double = _sweep(1046, ratio)
    dt = time.perf_counter() - t0

    a, b = np.polyfit(lengths, gains, 1)
    lin_err = float(np.max(np.abs(np.polyval([a, b], lengths) - gains) / gains))
    double_err = abs(g_double / gains[0] - 2.0) / 2.0
    ok = abs(gains[0] - 10.0) <= 1.0 and 18.0 <= gains[-1] <= 22.0 and lin_err <= 0.05 and double_err <= 0.05 and dt < 30
    assert record(
        7,
        ok,
        f"pump {FP / 1e9:g} GHz, I_p/I* = {ratio:.5f}: N=523 {gains[0]:.2f} dB (10 +/- 1), "
        f"N=1000 {gains[-1]:.2f} dB (18-22); dB vs length max deviation from a line {lin_err:.2%}, "
        f"doubling 523->1046 gives x{g_double / gains[0]:.3f} (tol 5%); {dt:.1f} s (< 30 s)",
    )


def test_c8_manley_rowe():
    if not MR:
        _sweep(523, 0.0249)
    worst_si = max(e["signal_minus_idler"] for _, e in MR)
    worst_ps = max(e["pump_plus_signal"] for _, e in MR)
    ok = worst_si <= 1e-6 and worst_ps <= 1e-6
    assert record(
        8,
        ok,
        f"{len(MR)} CME runs: max |a_s|^2-|a_i|^2 drift {worst_si:.1e}, pump loss vs signal gain {worst_ps:.1e} (tol 1e-6)",
    )


# 9 -----------------------------------------------------------------------------------


def test_c9_fit_round_trips():
    t0 = time.perf_counter()
    h = np.array([5.0, 10, 15, 20, 30])
    rs = fuchs_sheet_resistance(h, 1700.0, 40.0)
    fu = fit_fuchs([FilmSample(x, r, 10.0) for x, r in zip(h, rs)])
    e_fu = max(abs(fu.rho_bulk / 1700 - 1), abs(fu.roughness_scale / 40 - 1))

    r2 = np.array([300.0, 120, 70, 50, 30])
    iv = fit_ivry([FilmSample(x, r, 9000 * r**-0.7 / x) for x, r in zip(h, r2)])
    e_iv = max(abs(iv.coeff_A / 9000 - 1), abs(iv.exponent_B / 0.7 - 1))

    pl = fit_l0_powerlaw(zip(h, 95 * h**-1.25))
    e_pl = max(abs(pl.prefactor / 95 - 1), abs(pl.exponent_alpha / 1.25 - 1))

    dep = calibrate_deposition([(1, 5.2), (2, 10.4), (6, 31.2)])
    e_dep = abs(dep.rate_nm_per_min - 5.2)
    dt = time.perf_counter() - t0
    ok = max(e_fu, e_iv, e_pl) <= 1e-4 and e_dep <= 1e-12 and dt < 1.0
    assert record(
        9,
        ok,
        f"relative errors Fuchs {e_fu:.1e}, Ivry {e_iv:.1e}, power law {e_pl:.1e} (tol 1e-4); "
        f"deposition rate {dep.rate_nm_per_min:.12g} nm/min (exact 5.2); {dt:.2f} s",
    )


# 10 ----------------------------------------------------------------------------------


def test_c10_determinism(tmp_path):
    t0 = time.perf_counter()
    src = tmp_path / "demo"
    shutil.copytree(DEMO_DIR, src, ignore=shutil.ignore_patterns("out"))
    outs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        assert run(["report", "--rebuild", "--config", str(src / "twpa.ini"), "--out", str(out)]) == 0
        outs.append(out)
    tables = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.suffix in (".csv", ".txt", ".s2p", ".md"))
    same = [(outs[0] / p).read_bytes() == (outs[1] / p).read_bytes() for p in tables]
    dt = time.perf_counter() - t0
    ok = all(same) and len(tables) >= 9 and dt < 60
    assert record(10, ok, f"{sum(same)}/{len(tables)} numeric tables byte-identical across two report runs; {dt:.1f} s (< 60 s)")


if __name__ == "__main__":
    import tempfile

    failures = 0
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_c")]
    tests.sort(key=lambda f: int(f.__name__.split("_")[1][1:]))
    for t in tests:
        try:
            if "tmp_path" in t.__code__.co_varnames[: t.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    t(Path(d))
            else:
                t()
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)
