"""Synthetic demo project: film, phase-scan and noise-scan tables plus a config.

The T_c model is anchored on two reference films, (10.8 nm, 86.0 ohm/sq,
12.5 K) and the six-minute film (31.2 nm, 28 ohm/sq, 13.8 K). The demo sheet resistance passes through the thick film with a small
roughness scale, so that L_0(h) stays close to a pure power law and all three
film fits describe the same table.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import io
from .config import DEFAULTS, write_config
from .film import FUCHS_COEFF, fuchs_sheet_resistance
from .noise import NoiseChain, output_noise
from .nonlinear import relative_phase_shift

DEPOSITION_RATE = 5.2  # nm / min
THIN = (10.8, 86.0, 12.5)
THICK = (31.2, 28.0, 13.8)
DEMO_THICKNESSES = (5.2, 10.8, 15.6, 20.8, 26.0, 31.2)
DEMO_ROUGHNESS = 0.05  # nm
DEMO_I_STAR = 5.3e-3
DEMO_T_N = 0.5
DEFAULT_SEED = 20240501


def anchored_fuchs() -> tuple[float, float]:
    """(rho_bulk, roughness_scale) through both anchor films; R_S h is linear in 1/h."""
    (h1, r1, _), (h2, r2, _) = THIN, THICK
    slope = (r1 * h1 - r2 * h2) / (1 / h1 - 1 / h2)
    rho = r2 * h2 - slope / h2
    return rho, slope / (FUCHS_COEFF * rho)


def anchored_ivry() -> tuple[float, float]:
    """(A, B) of T_c = A R_S^-B / h through both anchor films."""
    (h1, r1, t1), (h2, r2, t2) = THIN, THICK
    B = math.log((h2 * t2) / (h1 * t1)) / math.log(r1 / r2)
    return h1 * t1 * r1**B, B


def demo_fuchs() -> tuple[float, float]:
    h, r, _ = THICK
    return r * h / (1.0 + FUCHS_COEFF * DEMO_ROUGHNESS / h), DEMO_ROUGHNESS


def film_table():
    rho, s = demo_fuchs()
    A, B = anchored_ivry()
    h = np.array(DEMO_THICKNESSES)
    rs = fuchs_sheet_resistance(h, rho, s)
    tc = A * rs ** (-B) / h
    return np.column_stack([h, rs, tc])


def write_demo(directory, seed: int = DEFAULT_SEED, noise: float = 0.0) -> Path:
    """Write the demo inputs and ``twpa.ini`` into ``directory``.

    ``noise`` adds seeded multiplicative scatter to the measured columns.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    def jitter(x):
        return x * (1.0 + noise * rng.standard_normal(np.shape(x))) if noise else x

    film = film_table()
    film[:, 1] = jitter(film[:, 1])
    film[:, 2] = jitter(film[:, 2])
    io.write_table(d / "film_samples.csv", io.FILM_HEADER, film)

    t = np.arange(1.0, 7.0)
    io.write_table(d / "deposition.csv", io.DEPOSITION_HEADER, zip(t, jitter(DEPOSITION_RATE * t)))

    i_dc = np.arange(1, 9) * 0.2e-3
    shift = jitter(relative_phase_shift(i_dc, DEMO_I_STAR))
    io.write_table(d / "phase_scan.csv", io.PHASE_SCAN_HEADER, zip(i_dc * 1e3, shift))

    n = DEFAULTS["noise"]
    chain = NoiseChain.from_db(
        float(n["gain_kitwpa_db"]),
        float(n["gain_hemt_db"]),
        t_hemt=float(n["t_hemt_k"]),
        f1=float(n["f1"]),
        f2=float(n["f2"]),
        frequency=float(n["frequency_ghz"]) * 1e9,
    )
    temps = np.linspace(0.28, 2.5, 12)
    # arbitrary spectrum-analyser units
    v2 = jitter(output_noise(chain, DEMO_T_N, temps) * 1e-12)
    io.write_table(d / "noise_scan.csv", io.NOISE_SCAN_HEADER, zip(temps, v2))

    values = {s: dict(kv) for s, kv in DEFAULTS.items()}
    values["film"]["samples"] = "film_samples.csv"
    values["film"]["deposition"] = "deposition.csv"
    values["nonlinear"]["phase_scan"] = "phase_scan.csv"
    values["noise"]["scan"] = "noise_scan.csv"
    values["output"]["directory"] = "out"
    write_config(values, d / "twpa.ini")
    return d
