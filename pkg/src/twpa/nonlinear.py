"""Kinetic-inductance nonlinearity and dc-biased three-wave-mixing gain.

The inductance follows L(I) = L0 (1 + I^2 / I*^2). A dc bias I_dc turns the
quadratic nonlinearity into an effective quadratic (three-wave) one with
strength proportional to I_dc / I*^2. Gain is obtained by integrating the
coupled-mode equations for pump, signal and idler along the line, with the
wavenumbers taken from the Bloch dispersion of the (biased) supercell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (
    AmplitudeOverflow,
    DegenerateFit,
    GapFrequency,
    GridMismatch,
    InputError,
    NegativeSlope,
    NonPositiveInput,
    NonPositiveScalingCurrent,
    PumpInGap,
    ZeroReference,
)
from .line import LineLayout, SuperCell, dispersion, find_band_gaps
from .numerics import OdeState, integrate_ode, linear_fit

SLOPE_CONVENTIONS = {"half": 1.0, "unity": 2.0}

DEFAULT_SCALING_CURRENT = 5.3e-3
DEFAULT_CRITICAL_CURRENT = 1.5e-3
DEFAULT_DC_CURRENT = 1.0e-3
DEFAULT_PUMP_FREQUENCY = 9.5e9
STEPS_PER_SUPERCELL = 20
SIGNAL_SEED_RATIO = 1e-5  # a_s(0) relative to I*; small enough for negligible pump depletion
SMALL_SIGNAL_LIMIT = 0.2


@dataclass(frozen=True)
class NonlinearParams:
    scaling_current: float = DEFAULT_SCALING_CURRENT
    critical_current: float = DEFAULT_CRITICAL_CURRENT
    base_inductance_per_cell: float | None = None

    def __post_init__(self):
        if self.scaling_current <= 0:
            raise NonPositiveScalingCurrent("scaling current must be positive")
        if not 0 < self.critical_current < self.scaling_current:
            raise InputError("need 0 < I_c < I*")


@dataclass(frozen=True)
class PumpConfig:
    pump_frequency: float = DEFAULT_PUMP_FREQUENCY
    pump_current: float = 0.0  # amplitude, A
    dc_current: float = DEFAULT_DC_CURRENT

    @classmethod
    def from_power_dbm(cls, pump_frequency, power_dbm, dc_current=DEFAULT_DC_CURRENT, impedance=50.0):
        return cls(pump_frequency, dbm_to_current(power_dbm, impedance), dc_current)


@dataclass
class GainProfile:
    frequencies: np.ndarray
    gain_db: np.ndarray
    pump: PumpConfig | None = None

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.gain_db = np.asarray(self.gain_db, dtype=float)
        if self.frequencies.shape != self.gain_db.shape:
            raise GridMismatch("frequency and gain arrays differ in length")
        if not np.all(np.isfinite(self.gain_db)):
            raise AmplitudeOverflow("gain profile is not finite")

    @property
    def peak_db(self) -> float:
        return float(self.gain_db.max())

    @property
    def peak_frequency(self) -> float:
        return float(self.frequencies[np.argmax(self.gain_db)])

    @property
    def mean_db(self) -> float:
        return float(self.gain_db.mean())


@dataclass
class PhaseShiftScan:
    dc_currents: np.ndarray
    relative_phase_shifts: np.ndarray

    def __post_init__(self):
        self.dc_currents = np.asarray(self.dc_currents, dtype=float)
        self.relative_phase_shifts = np.asarray(self.relative_phase_shifts, dtype=float)
        if self.dc_currents.shape != self.relative_phase_shifts.shape:
            raise GridMismatch("current and phase-shift arrays differ in length")


def dbm_to_current(power_dbm: float, impedance: float = 50.0) -> float:
    """Peak current of a sine wave carrying ``power_dbm`` into ``impedance``."""
    p = 1e-3 * 10 ** (power_dbm / 10)
    return math.sqrt(2 * p / impedance)


def _check_istar(i_star):
    if not i_star > 0:
        raise NonPositiveScalingCurrent(f"scaling current must be positive, got {i_star!r}")


def inductance_at_current(L0, current, i_star):
    _check_istar(i_star)
    return L0 * (1.0 + (np.asarray(current) / i_star) ** 2)


def relative_phase_shift(i_dc, i_star, convention: str = "half"):
    """dtheta/theta0 = sqrt(1 + q I^2/I*^2) - 1, q = 1 for ``half``, 2 for ``unity``.

    For small currents this is I^2/(2 I*^2) (``half``) or I^2/I*^2 (``unity``).
    """
    _check_istar(i_star)
    q = SLOPE_CONVENTIONS[convention]
    return np.sqrt(1.0 + q * (np.asarray(i_dc, dtype=float) / i_star) ** 2) - 1.0


def phase_reference(n_supercells: int, correction: float = 0.0) -> float:
    """Total unbiased phase theta0 ~ N_sc pi, optionally corrected for probe detuning."""
    return n_supercells * math.pi * (1.0 + correction)


def extract_scaling_current(scan: PhaseShiftScan, convention: str = "half") -> tuple[float, float]:
    """I* and its 1-sigma uncertainty from a dc phase-shift scan.

    Fits (1 + dtheta/theta0)^2 - 1 against I_dc^2; that quantity is exactly
    linear in I_dc^2 for the inductance model, so the fit is unbiased even at
    the top of the scan range. At small shifts it equals 2 dtheta/theta0, the
    familiar linear-in-I^2 phase shift.
    """
    i = scan.dc_currents
    d = scan.relative_phase_shifts
    if i.size < 3:
        raise DegenerateFit(f"need at least 3 scan points, got {i.size}")
    if np.unique(np.abs(i[i != 0])).size < 2:
        raise DegenerateFit("need at least 2 distinct non-zero currents")
    if np.max(np.abs(d)) >= SMALL_SIGNAL_LIMIT:
        raise InputError(f"phase shifts exceed the small-signal limit {SMALL_SIGNAL_LIMIT}")
    q = SLOPE_CONVENTIONS[convention]
    u = d * (2.0 + d)
    fit = linear_fit(np.column_stack([i**2, u]))
    s = fit.slope
    if not s > 0:
        raise NegativeSlope(f"phase shift does not grow with I_dc^2 (slope {s:.3g})")
    i_star = math.sqrt(q / s)
    sigma = 0.5 * i_star * fit.slope_stderr / s
    return i_star, sigma


def theoretical_scaling_current(i_c: float) -> float:
    """I* = (3/2) sqrt(3) I_c."""
    if not i_c > 0:
        raise NonPositiveInput("critical current must be positive")
    return 1.5 * math.sqrt(3.0) * i_c


def biased_supercell(sc: SuperCell, i_dc: float, i_star: float, convention: str = "half") -> SuperCell:
    _check_istar(i_star)
    q = SLOPE_CONVENTIONS[convention]
    return sc.with_inductance_scale(1.0 + q * (i_dc / i_star) ** 2)


# -- coupled-mode equations ---------------------------------------------------


@dataclass
class CmeSolution:
    """Amplitudes at input and output of the line, one column per signal frequency.

    Rows are pump, signal, idler, in photon-flux-normalised units (A) so that
    Manley-Rowe relations read directly on ``|a|^2``.
    """

    signal_frequencies: np.ndarray
    initial: np.ndarray
    final: np.ndarray
    delta_k: np.ndarray
    coupling: np.ndarray
    length: float
    steps: int

    @property
    def gain_db(self) -> np.ndarray:
        p0 = np.abs(self.initial[1]) ** 2
        p1 = np.abs(self.final[1]) ** 2
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(p1 / p0)

    def manley_rowe_error(self) -> dict:
        """Relative violations of the photon-flux invariants."""
        n0 = np.abs(self.initial) ** 2
        n1 = np.abs(self.final) ** 2
        ref = n0[1]
        si = ((n1[1] - n1[2]) - (n0[1] - n0[2])) / ref
        signal_gain = n1[1] - n0[1]
        pump_loss = n0[0] - n1[0]
        scale = np.maximum(np.abs(signal_gain), ref)
        ps = (pump_loss - signal_gain) / scale
        idler = (n1[2] - n0[2] - signal_gain) / scale
        return {
            "signal_minus_idler": float(np.max(np.abs(si))),
            "pump_plus_signal": float(np.max(np.abs(ps))),
            "idler_equals_signal_gain": float(np.max(np.abs(idler))),
        }


def cme_rhs(delta_k, coupling):
    """Derivative for the 3WM coupled-mode system, vectorised over columns."""
    dk = np.asarray(delta_k, dtype=float)
    chi = np.asarray(coupling, dtype=float)

    def rhs(x, a):
        ph = np.exp(1j * dk * x)
        ap, asig, aid = a
        return np.stack(
            [
                1j * chi * asig * aid * ph.conj(),
                1j * chi * ap * aid.conj() * ph,
                1j * chi * ap * asig.conj() * ph,
            ]
        )

    return rhs


def solve_cme(delta_k, coupling, pump_amplitude, signal_amplitude, length, steps) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the three-mode system over ``length``; returns (initial, final)."""
    dk = np.atleast_1d(np.asarray(delta_k, dtype=float))
    chi = np.broadcast_to(np.asarray(coupling, dtype=float), dk.shape)
    a0 = np.zeros((3,) + dk.shape, dtype=complex)
    a0[0] = pump_amplitude
    a0[1] = signal_amplitude
    try:
        with np.errstate(over="raise", invalid="raise"):
            out = integrate_ode(cme_rhs(dk, chi), OdeState(0.0, a0), length, steps)
    except FloatingPointError as exc:
        raise AmplitudeOverflow(f"coupled-mode integration overflowed: {exc}") from exc
    if not np.all(np.isfinite(out.amplitudes)):
        raise AmplitudeOverflow("coupled-mode amplitudes are not finite")
    return a0, out.amplitudes


def undepleted_gain_db(delta_k, coupling, pump_amplitude, length):
    """Closed-form signal gain with a constant pump (cross-check oracle)."""
    g = np.asarray(coupling, dtype=float) * abs(pump_amplitude)
    half = 0.5 * np.asarray(delta_k, dtype=float)
    gam2 = g * g - half * half
    gl = np.sqrt(np.abs(gam2)) * length
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(gam2 > 0, np.sinh(gl) ** 2, np.sin(gl) ** 2) / np.abs(gam2)
    ratio = np.where(np.abs(gam2) < 1e-300, length**2, ratio)
    return 10.0 * np.log10(1.0 + g * g * ratio)


@dataclass
class ModeSetup:
    k_pump: float
    k_signal: np.ndarray
    k_idler: np.ndarray
    delta_k: np.ndarray
    coupling: np.ndarray
    length: float
    gaps: list = field(default_factory=list)


def mode_setup(
    layout: LineLayout,
    params: NonlinearParams,
    pump: PumpConfig,
    signal_frequencies,
    *,
    wavenumber: Callable[[np.ndarray], np.ndarray] | None = None,
    convention: str = "half",
) -> ModeSetup:
    """Wavenumbers, phase mismatch and coupling for each signal frequency.

    By default k(f) is the Bloch wavenumber of the dc-biased supercell. The
    coupling in photon-flux units is I_dc / (2 I*^2) * sqrt(k_s k_i).
    """
    fs = np.atleast_1d(np.asarray(signal_frequencies, dtype=float))
    fp = pump.pump_frequency
    fi = fp - fs
    if np.any(fs <= 0) or np.any(fi <= 0):
        raise InputError("need 0 < f_s < f_p")
    if pump.dc_current >= params.critical_current or pump.pump_current >= params.critical_current:
        raise InputError("dc and pump currents must stay below the critical current")
    if pump.pump_current < 0:
        raise NonPositiveInput("pump current must be >= 0")

    gaps = []
    if wavenumber is None:
        sc = biased_supercell(layout.supercell, pump.dc_current, params.scaling_current, convention)
        dp = dispersion(sc, fp)
        if dp.in_gap[0]:
            gaps = find_band_gaps(sc, 0.5 * fp, 1.5 * fp, fp * 1e-3)
            raise PumpInGap(f"pump at {fp / 1e9:.6g} GHz lies inside a stopband", gaps)
        ds = dispersion(sc, fs)
        di = dispersion(sc, fi)
        if np.any(ds.in_gap) or np.any(di.in_gap):
            raise GapFrequency("signal or idler frequency lies inside a stopband")
        kp = float(dp.phase[0] / sc.length)
        ks = ds.phase / sc.length
        ki = di.phase / sc.length
    else:
        kp = float(np.asarray(wavenumber(np.array([fp])))[0])
        ks = np.asarray(wavenumber(fs), dtype=float)
        ki = np.asarray(wavenumber(fi), dtype=float)

    eps = pump.dc_current / (2.0 * params.scaling_current**2)
    chi = eps * np.sqrt(ks * ki)
    return ModeSetup(kp, ks, ki, kp - ks - ki, chi, layout.length, gaps)


def cme_gain_sweep(
    layout: LineLayout,
    params: NonlinearParams,
    pump: PumpConfig,
    signal_frequencies,
    *,
    steps_per_supercell: int = STEPS_PER_SUPERCELL,
    wavenumber=None,
    convention: str = "half",
) -> CmeSolution:
    """Full three-mode integration for every signal frequency at once."""
    if steps_per_supercell < STEPS_PER_SUPERCELL:
        raise InputError(f"need at least {STEPS_PER_SUPERCELL} steps per supercell")
    fs = np.atleast_1d(np.asarray(signal_frequencies, dtype=float))
    m = mode_setup(layout, params, pump, fs, wavenumber=wavenumber, convention=convention)
    steps = max(1, layout.n_supercells * steps_per_supercell)
    seed = SIGNAL_SEED_RATIO * params.scaling_current
    a0, a1 = solve_cme(m.delta_k, m.coupling, pump.pump_current, seed, m.length, steps)
    return CmeSolution(fs, a0, a1, m.delta_k, m.coupling, m.length, steps)


def cme_3wm_gain(layout: LineLayout, params: NonlinearParams, pump: PumpConfig, signal_frequency: float, **kw) -> float:
    """Signal power gain in dB at one frequency."""
    return float(cme_gain_sweep(layout, params, pump, [signal_frequency], **kw).gain_db[0])


def gain_profile(layout, params, pump, signal_frequencies, **kw) -> GainProfile:
    sol = cme_gain_sweep(layout, params, pump, signal_frequencies, **kw)
    return GainProfile(sol.signal_frequencies, sol.gain_db, pump)


def calibrate_pump_ratio(
    layout: LineLayout,
    params: NonlinearParams,
    pump_frequency: float,
    dc_current: float,
    signal_frequencies,
    target_db: float = 10.0,
    *,
    steps_per_supercell: int = STEPS_PER_SUPERCELL,
    convention: str = "half",
    xtol: float = 1e-7,
) -> float:
    """Pump amplitude I_p / I* giving ``target_db`` peak gain on ``layout``.

    The closed-form undepleted gain brackets the root; the final value solves
    the full coupled-mode peak gain.
    """
    i_star = params.scaling_current
    fs = np.atleast_1d(np.asarray(signal_frequencies, dtype=float))
    probe = PumpConfig(pump_frequency, 0.0, dc_current)
    m = mode_setup(layout, params, probe, fs, convention=convention)
    r_max = 0.999 * params.critical_current / i_star

    def analytic(r):
        return float(np.max(undepleted_gain_db(m.delta_k, m.coupling, r * i_star, m.length))) - target_db

    grid = np.linspace(r_max / 400, r_max, 400)
    vals = np.array([analytic(r) for r in grid])
    idx = np.flatnonzero(vals > 0)
    if idx.size == 0:
        raise InputError(f"{target_db} dB is unreachable below the critical current")
    j = idx[0]
    lo = grid[j - 1] if j > 0 else 0.0
    r0 = brentq(analytic, lo, grid[j], xtol=1e-12)

    def full(r):
        p = PumpConfig(pump_frequency, r * i_star, dc_current)
        sol = cme_gain_sweep(layout, params, p, fs, steps_per_supercell=steps_per_supercell, convention=convention)
        return float(sol.gain_db.max()) - target_db

    a, b = 0.99 * r0, 1.01 * r0
    fa, fb = full(a), full(b)
    while fa > 0:
        a *= 0.95
        fa = full(a)
    while fb < 0:
        b *= 1.05
        fb = full(b)
    return brentq(full, a, b, xtol=xtol * r0)


# -- pump on/off ratio ---------------------------------------------------------


@dataclass
class S21Sweep:
    frequencies: np.ndarray
    s21: np.ndarray

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.s21 = np.asarray(self.s21, dtype=complex)
        if self.frequencies.shape != self.s21.shape:
            raise GridMismatch("frequency and S21 arrays differ in length")


def gain_on_off(pump_on: S21Sweep, pump_off: S21Sweep, pump: PumpConfig | None = None) -> GainProfile:
    """20 log10 |S21_on / S21_off| on a common frequency grid."""
    if pump_on.frequencies.shape != pump_off.frequencies.shape or not np.allclose(
        pump_on.frequencies, pump_off.frequencies, rtol=1e-12, atol=0
    ):
        raise GridMismatch("pump-on and pump-off sweeps use different frequency grids")
    off = np.abs(pump_off.s21)
    if np.any(off == 0):
        raise ZeroReference("pump-off transmission is zero at some frequency")
    return GainProfile(pump_on.frequencies, 20.0 * np.log10(np.abs(pump_on.s21) / off), pump)


def simulate_s21(layout, params, pump, signal_frequencies, pump_on: bool = True, **kw) -> S21Sweep:
    """Linear line transmission, multiplied by the parametric signal gain when pumped."""
    from .line import line_s21

    fs = np.atleast_1d(np.asarray(signal_frequencies, dtype=float))
    s21 = line_s21(layout, fs)
    if pump_on:
        sol = cme_gain_sweep(layout, params, pump, fs, **kw)
        s21 = s21 * sol.final[1] / sol.initial[1]
    return S21Sweep(fs, s21)
