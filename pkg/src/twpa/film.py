"""Superconducting thin-film property models.

Covers the BCS estimate of kinetic inductance from sheet resistance and
critical temperature, the thickness dependence of R_S (thin-film Fuchs
expansion), T_c (Ivry's universal scaling) and L_0 (power law), and the
sputter deposition-rate calibration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import constants

from .errors import DegenerateFit, NonConvergence, NonPositiveInput
from .numerics import linear_fit, nonlinear_fit

HBAR = constants.hbar
K_B = constants.k
BCS_GAP_RATIO = 1.762  # Delta_0 / (k_B T_c), weak coupling

FUCHS_COEFF = 3.0 / 8.0


@dataclass(frozen=True)
class FilmSample:
    thickness_nm: float
    sheet_resistance: float  # ohm / sq
    critical_temperature: float  # K

    def __post_init__(self):
        for name in ("thickness_nm", "sheet_resistance", "critical_temperature"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise NonPositiveInput(f"FilmSample.{name} must be positive and finite, got {v!r}")

    @property
    def kinetic_inductance(self) -> float:
        """Expected L_0 in pH/sq."""
        return kinetic_inductance_bcs(self.sheet_resistance, self.critical_temperature)


@dataclass(frozen=True)
class FuchsFit:
    rho_bulk: float  # ohm nm
    roughness_scale: float  # nm, mean free path times (1 - p)
    covariance: np.ndarray | None = field(default=None, compare=False, repr=False)
    residual_rms: float = 0.0

    def __call__(self, thickness_nm):
        return fuchs_sheet_resistance(thickness_nm, self.rho_bulk, self.roughness_scale)


@dataclass(frozen=True)
class IvryFit:
    coeff_A: float
    exponent_B: float
    residual_rms: float = 0.0

    def __call__(self, sheet_resistance, thickness_nm):
        return self.coeff_A * np.asarray(sheet_resistance, float) ** (-self.exponent_B) / np.asarray(thickness_nm, float)


@dataclass(frozen=True)
class PowerLawFit:
    prefactor: float  # pH/sq * nm^alpha
    exponent_alpha: float
    residual_rms: float = 0.0

    def __call__(self, thickness_nm):
        return self.prefactor * np.asarray(thickness_nm, float) ** (-self.exponent_alpha)


@dataclass(frozen=True)
class DepositionCalibration:
    rate_nm_per_min: float
    offset_nm: float = 0.0
    samples: tuple = ()
    residual_rms: float = 0.0


def kinetic_inductance_bcs(sheet_resistance, critical_temperature):
    """L_0 = hbar R_S / (pi k_B T_c 1.762), returned in pH per square."""
    rs = np.asarray(sheet_resistance, dtype=float)
    tc = np.asarray(critical_temperature, dtype=float)
    if np.any(rs <= 0) or np.any(tc <= 0):
        raise NonPositiveInput("sheet resistance and critical temperature must be positive")
    l0 = HBAR * rs / (np.pi * K_B * tc * BCS_GAP_RATIO) * 1e12
    return float(l0) if l0.ndim == 0 else l0


def fuchs_sheet_resistance(thickness_nm, rho_bulk, roughness_scale):
    h = np.asarray(thickness_nm, dtype=float)
    return rho_bulk / h * (1.0 + FUCHS_COEFF * roughness_scale / h)


def _arrays(samples: Sequence[FilmSample]):
    h = np.array([s.thickness_nm for s in samples], float)
    rs = np.array([s.sheet_resistance for s in samples], float)
    tc = np.array([s.critical_temperature for s in samples], float)
    return h, rs, tc


def fit_fuchs(samples: Sequence[FilmSample]) -> FuchsFit:
    """Fit R_S(h) = rho/h * (1 + 3/8 * s/h) to measured films.

    R_S*h is linear in 1/h, which gives the starting point; the final values
    come from a direct least-squares fit in R_S.
    """
    if len(samples) < 3:
        raise DegenerateFit(f"Fuchs fit needs at least 3 samples, got {len(samples)}")
    h, rs, _ = _arrays(samples)
    if np.unique(h).size < 2:
        raise DegenerateFit("Fuchs fit needs at least 2 distinct thicknesses")

    lin = linear_fit(np.column_stack([1.0 / h, rs * h]))
    rho0 = lin.intercept
    s0 = lin.slope / (FUCHS_COEFF * rho0) if rho0 > 0 else 1.0
    if rho0 <= 0 or s0 <= 0:
        rho0, s0 = float(np.median(rs * h)), 1.0

    res = nonlinear_fit(lambda x, p: fuchs_sheet_resistance(x, p[0], p[1]), [rho0, s0], np.column_stack([h, rs]))
    if not res.converged:
        raise NonConvergence("Fuchs fit did not converge", res)
    rho, s = res.params
    resid = fuchs_sheet_resistance(h, rho, s) - rs
    return FuchsFit(float(rho), float(s), res.covariance, float(np.sqrt(np.mean(resid**2))))


def fit_ivry(samples: Sequence[FilmSample]) -> IvryFit:
    """Fit T_c = A R_S^-B / h as a straight line in log(h T_c) vs log(R_S)."""
    if len(samples) < 3:
        raise DegenerateFit(f"Ivry fit needs at least 3 samples, got {len(samples)}")
    h, rs, tc = _arrays(samples)
    lin = linear_fit(np.column_stack([np.log(rs), np.log(h * tc)]))
    fit = IvryFit(float(np.exp(lin.intercept)), float(-lin.slope))
    resid = fit(rs, h) - tc
    return IvryFit(fit.coeff_A, fit.exponent_B, float(np.sqrt(np.mean(resid**2))))


def fit_l0_powerlaw(samples: Iterable[tuple[float, float]]) -> PowerLawFit:
    """Log-log fit of L_0(h) = prefactor * h^-alpha; ``samples`` are (h, L_0) pairs."""
    arr = np.asarray(list(samples), dtype=float).reshape(-1, 2)
    if np.any(arr <= 0):
        raise NonPositiveInput("power-law fit needs positive thickness and inductance")
    lin = linear_fit(np.log(arr))
    fit = PowerLawFit(float(np.exp(lin.intercept)), float(-lin.slope))
    resid = fit(arr[:, 0]) - arr[:, 1]
    return PowerLawFit(fit.prefactor, fit.exponent_alpha, float(np.sqrt(np.mean(resid**2))))


def calibrate_deposition(samples: Iterable[tuple[float, float]]) -> DepositionCalibration:
    """Straight-line fit of thickness against deposition time.

    The intercept is kept free (it absorbs over-etch systematics in the step
    height measurement); only the slope is reported as the rate.
    """
    pts = tuple((float(t), float(h)) for t, h in samples)
    lin = linear_fit(pts)
    if lin.slope <= 0:
        raise DegenerateFit(f"non-positive deposition rate {lin.slope!r}")
    return DepositionCalibration(lin.slope, lin.intercept, pts, lin.residual_rms)


def predict_thickness(cal: DepositionCalibration, time_min: float) -> float:
    if time_min < 0:
        raise NonPositiveInput("deposition time must be >= 0")
    return max(0.0, cal.rate_nm_per_min * time_min + cal.offset_nm)
