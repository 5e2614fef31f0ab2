"""Cascaded noise model of the KI-TWPA + HEMT read-out chain.

Output noise, in temperature units referred to the chain output::

    N_out = G_H T_H + G_K F2 G_H T_n + F1 F2 G_H (2 G_K - 1) T

where T is the physical temperature of the matched hot resistor at the input.
The ``2 G_K - 1`` factor counts the source noise amplified at the signal
frequency plus the copy converted from the idler. A linear fit of measured
V_n^2 against T gives intercept/slope = T_sys, from which T_n follows.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import constants

from .errors import DegenerateFit, InvalidChain, NegativeSlope, NonPositiveFrequency, NonPositiveInput
from .numerics import LinearFitResult, linear_fit

K_B = constants.k
H_PLANCK = constants.h

# Demo chain; typical cryogenic values, not measured ones.
DEFAULT_T_HEMT = 2.0
DEFAULT_F1 = 0.9
DEFAULT_F2 = 0.8
DEFAULT_G_HEMT_DB = 30.0
DEFAULT_FREQUENCY = 4e9

SCAN_T_MIN = 0.28
SCAN_T_MAX = 2.5

QUANTA_CONVENTIONS = ("rayleigh-jeans", "planck")


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(g):
    return 10.0 * np.log10(g)


@dataclass(frozen=True)
class NoiseChain:
    gain_kitwpa: float  # linear power gain
    gain_hemt: float = 10 ** (DEFAULT_G_HEMT_DB / 10)
    t_hemt: float = DEFAULT_T_HEMT
    f1: float = DEFAULT_F1
    f2: float = DEFAULT_F2
    frequency: float = DEFAULT_FREQUENCY

    def validate(self) -> "NoiseChain":
        if not (self.gain_kitwpa > 0 and self.gain_hemt > 0):
            raise InvalidChain("gains must be positive")
        if not (0 < self.f1 <= 1 and 0 < self.f2 <= 1):
            raise InvalidChain(f"transmission factors must lie in (0, 1], got F1={self.f1}, F2={self.f2}")
        if self.t_hemt < 0:
            raise InvalidChain("HEMT noise temperature must be >= 0")
        if not self.frequency > 0:
            raise InvalidChain("frequency must be positive")
        return self

    @classmethod
    def from_db(cls, gain_kitwpa_db, gain_hemt_db=DEFAULT_G_HEMT_DB, **kw) -> "NoiseChain":
        return cls(float(db_to_linear(gain_kitwpa_db)), float(db_to_linear(gain_hemt_db)), **kw)

    @property
    def source_slope(self) -> float:
        """d N_out / d T."""
        return self.f1 * self.f2 * self.gain_hemt * (2.0 * self.gain_kitwpa - 1.0)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class NoiseScan:
    temperatures: np.ndarray
    noise_powers: np.ndarray

    def __post_init__(self):
        self.temperatures = np.asarray(self.temperatures, dtype=float)
        self.noise_powers = np.asarray(self.noise_powers, dtype=float)
        if self.temperatures.shape != self.noise_powers.shape:
            raise DegenerateFit("temperature and noise arrays differ in length")
        if self.temperatures.size < 3:
            raise DegenerateFit("a noise scan needs at least 3 points")
        if np.any(self.temperatures < 0):
            raise NonPositiveInput("noise-source temperatures must be >= 0")


@dataclass
class NoiseResult:
    t_sys: float
    t_n: float
    n_quanta: float
    fit: LinearFitResult
    clamped: bool = False
    chain: NoiseChain | None = None

    def record(self) -> dict:
        rec = {
            "t_sys_k": self.t_sys,
            "t_n_k": self.t_n,
            "n_quanta": self.n_quanta,
            "slope": self.fit.slope,
            "intercept": self.fit.intercept,
            "clamped": self.clamped,
        }
        if self.chain is not None:
            rec["frequency_hz"] = self.chain.frequency
            rec["chain"] = self.chain.as_dict()
        return rec


def output_noise(chain: NoiseChain, t_n, source_temperature):
    chain.validate()
    t_n = np.asarray(t_n, dtype=float)
    t = np.asarray(source_temperature, dtype=float)
    if np.any(t_n < 0) or np.any(t < 0):
        raise NonPositiveInput("temperatures must be >= 0")
    gk, gh = chain.gain_kitwpa, chain.gain_hemt
    out = gh * chain.t_hemt + gk * chain.f2 * gh * t_n + chain.f1 * chain.f2 * gh * (gk + gk - 1.0) * t
    return float(out) if out.ndim == 0 else out


def simulate_scan(chain: NoiseChain, t_n: float, temperatures=None, scale: float = 1.0) -> NoiseScan:
    """Noise-free scan over the hot-resistor range (arbitrary power units)."""
    if temperatures is None:
        temperatures = np.linspace(SCAN_T_MIN, SCAN_T_MAX, 10)
    temperatures = np.asarray(temperatures, dtype=float)
    return NoiseScan(temperatures, scale * output_noise(chain, t_n, temperatures))


def fit_noise_scan(scan: NoiseScan) -> tuple[LinearFitResult, float]:
    fit = linear_fit(np.column_stack([scan.temperatures, scan.noise_powers]))
    if not fit.slope > 0:
        raise NegativeSlope(f"noise power does not rise with source temperature (slope {fit.slope:.3g})")
    return fit, fit.intercept / fit.slope


def solve_amplifier_noise(chain: NoiseChain, t_sys: float, *, return_flag: bool = False):
    """Invert the chain model for the KI-TWPA noise temperature.

    T_sys = intercept/slope = (T_H + G_K F2 T_n) / (F1 F2 (2 G_K - 1)), so
    T_n = (T_sys F1 F2 (2 G_K - 1) - T_H) / (G_K F2). Negative values (which
    measurement scatter can produce) are clamped to zero with a warning.
    """
    chain.validate()
    if not t_sys > 0:
        raise InvalidChain("T_sys must be positive")
    gk = chain.gain_kitwpa
    t_n = (t_sys * chain.f1 * chain.f2 * (2.0 * gk - 1.0) - chain.t_hemt) / (gk * chain.f2)
    clamped = t_n < 0
    if clamped:
        warnings.warn(f"extracted T_n = {t_n:.4g} K is negative; clamped to 0", stacklevel=2)
        t_n = 0.0
    return (t_n, clamped) if return_flag else t_n


def system_temperature(chain: NoiseChain, t_n: float) -> float:
    """Forward model: T_sys implied by a chain and amplifier noise."""
    chain.validate()
    gk = chain.gain_kitwpa
    return (chain.t_hemt + gk * chain.f2 * t_n) / (chain.f1 * chain.f2 * (2.0 * gk - 1.0))


def noise_quanta(t_n, frequency, convention: str = "rayleigh-jeans"):
    """Noise temperature in photons at ``frequency``.

    ``rayleigh-jeans``: k_B T / (h f). ``planck``: the Bose occupation
    1 / (exp(h f / k_B T) - 1), kept for comparison only.
    """
    if not np.all(np.asarray(frequency) > 0):
        raise NonPositiveFrequency("frequency must be positive")
    t = np.asarray(t_n, dtype=float)
    if np.any(t < 0):
        raise NonPositiveInput("noise temperature must be >= 0")
    if convention == "rayleigh-jeans":
        n = K_B * t / (H_PLANCK * np.asarray(frequency, dtype=float))
    elif convention == "planck":
        x = H_PLANCK * np.asarray(frequency, dtype=float) / (K_B * np.where(t > 0, t, 1.0))
        n = np.where(t > 0, 1.0 / np.expm1(x), 0.0)
    else:
        raise ValueError(f"unknown quanta convention {convention!r}")
    return float(n) if np.ndim(n) == 0 else n


def analyse_scan(scan: NoiseScan, chain: NoiseChain, convention: str = "rayleigh-jeans") -> NoiseResult:
    fit, t_sys = fit_noise_scan(scan)
    t_n, clamped = solve_amplifier_noise(chain, t_sys, return_flag=True)
    return NoiseResult(t_sys, t_n, noise_quanta(t_n, chain.frequency, convention), fit, clamped, chain)


# -- consistency across gain settings ----------------------------------------------


def chain_family_from_reference(
    gain_kitwpa: float, t_sys: float, t_n: float, f1: float, f2: float = DEFAULT_F2, **kw
) -> NoiseChain:
    """Chain through a reference (G_K, T_sys, T_n) point, parameterised by F1.

    With F1 and F2 fixed, T_H is whatever makes the reference column exact.
    """
    t_h = t_sys * f1 * f2 * (2.0 * gain_kitwpa - 1.0) - t_n * gain_kitwpa * f2
    if t_h < 0:
        raise InvalidChain(f"F1={f1} needs a negative HEMT temperature ({t_h:.3g} K)")
    return NoiseChain(gain_kitwpa, t_hemt=t_h, f1=f1, f2=f2, **kw).validate()


def consistent_f1_window(reference, others, rel_tol: float = 0.2, f2: float = DEFAULT_F2, n: int = 2001):
    """Range of F1 for which a chain pinned to ``reference`` reproduces ``others``.

    ``reference`` and each entry of ``others`` are (G_K linear, T_sys, T_n)
    triples. Returns (f1_lo, f1_hi) or None when no F1 in (0, 1] works.
    """
    ok = []
    for f1 in np.linspace(1.0 / n, 1.0, n):
        try:
            base = chain_family_from_reference(*reference, f1=f1, f2=f2)
        except InvalidChain:
            continue
        good = True
        for gk, ts, tn in others:
            c = NoiseChain(gk, base.gain_hemt, base.t_hemt, f1, f2, base.frequency)
            pred = (ts * f1 * f2 * (2 * gk - 1) - c.t_hemt) / (gk * f2)
            if abs(pred - tn) > rel_tol * tn:
                good = False
                break
        if good:
            ok.append(f1)
    if not ok:
        return None
    return min(ok), max(ok)


def quantum_limit_temperature(frequency: float) -> float:
    """Temperature equivalent of half a photon, h f / (2 k_B)."""
    return H_PLANCK * frequency / (2.0 * K_B) if frequency > 0 else math.nan
