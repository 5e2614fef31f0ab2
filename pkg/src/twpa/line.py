"""Lumped-element artificial transmission line: cells, supercells, layouts.

Each elementary cell is a symmetric T section (L/2, shunt C, L/2). A
supercell is an ordered run of unloaded (50 ohm) and loaded (80 ohm) cells;
the periodic impedance contrast opens a stopband where the supercell is half
a wavelength long. All frequency-domain functions accept scalar or array
frequencies and broadcast over them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import groupby
from typing import Literal, Sequence

import numpy as np

from .errors import GapFrequency, InputError, NonPositiveInput
from .numerics import abcd, cascade

CellKind = Literal["unloaded", "loaded"]

# Default electrical parameters; see README for how they were chosen.
DEFAULT_CELL_LENGTH = 5e-6
DEFAULT_L_CELL = 50e-12
DEFAULT_Z_UNLOADED = 50.0
DEFAULT_Z_LOADED = 80.0
DEFAULT_N_UNLOADED = 60
DEFAULT_N_LOADED = 6
HALF_SIZE_SUPERCELLS = 523
FULL_SIZE_SUPERCELLS = 1000

# bisection target for gap edges
EDGE_RTOL = 1e-5


@dataclass(frozen=True)
class CellSpec:
    kind: CellKind
    series_inductance: float  # H per cell
    shunt_capacitance: float  # F per cell
    cell_length: float  # m

    def __post_init__(self):
        if self.kind not in ("unloaded", "loaded"):
            raise InputError(f"unknown cell kind {self.kind!r}")
        for name in ("series_inductance", "shunt_capacitance", "cell_length"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise NonPositiveInput(f"CellSpec.{name} must be positive, got {v!r}")

    @classmethod
    def from_impedance(cls, kind: CellKind, inductance: float, impedance: float, cell_length: float) -> "CellSpec":
        if impedance <= 0:
            raise NonPositiveInput("target impedance must be positive")
        return cls(kind, inductance, inductance / impedance**2, cell_length)

    @property
    def impedance(self) -> float:
        return cell_impedance(self)

    @property
    def delay(self) -> float:
        """Long-wavelength time delay sqrt(LC) of one cell."""
        return math.sqrt(self.series_inductance * self.shunt_capacitance)


def cell_impedance(spec: CellSpec) -> float:
    if spec.series_inductance <= 0 or spec.shunt_capacitance <= 0:
        raise NonPositiveInput("L and C must be positive")
    return math.sqrt(spec.series_inductance / spec.shunt_capacitance)


def make_loaded_from_unloaded(unloaded: CellSpec, target_impedance: float) -> CellSpec:
    """Same L and length, capacitance rescaled so sqrt(L/C) hits the target."""
    if target_impedance <= 0:
        raise NonPositiveInput("target impedance must be positive")
    scale = (cell_impedance(unloaded) / target_impedance) ** 2
    return replace(unloaded, kind="loaded", shunt_capacitance=unloaded.shunt_capacitance * scale)


def cell_abcd(spec: CellSpec, frequency) -> np.ndarray:
    """ABCD matrix of the symmetric T cell, shape ``(..., 2, 2)``."""
    w = 2 * np.pi * np.asarray(frequency, dtype=float)
    z = 0.5j * w * spec.series_inductance
    y = 1j * w * spec.shunt_capacitance
    a = 1.0 + z * y
    return abcd(a, z * (2.0 + z * y), y, a)


def loading_pattern(n_unloaded: int, n_loaded: int, placement: str = "end") -> tuple[CellKind, ...]:
    """Ordered cell kinds for one supercell.

    ``placement`` is ``end``, ``start`` or ``center`` (loaded cells kept
    consecutive), or an explicit string of ``u``/``l`` characters.
    """
    n = n_unloaded + n_loaded
    u, l = ("unloaded",), ("loaded",)
    if placement == "end":
        return u * n_unloaded + l * n_loaded
    if placement == "start":
        return l * n_loaded + u * n_unloaded
    if placement == "center":
        first = n_unloaded // 2
        return u * first + l * n_loaded + u * (n_unloaded - first)
    chars = placement.replace(",", "").replace(" ", "").lower()
    if set(chars) <= {"u", "l"} and len(chars) == n and chars.count("l") == n_loaded:
        return tuple("loaded" if c == "l" else "unloaded" for c in chars)
    raise InputError(f"bad loading pattern {placement!r} for {n_unloaded}+{n_loaded} cells")


@dataclass(frozen=True)
class SuperCell:
    unloaded: CellSpec
    loaded: CellSpec
    n_unloaded: int = DEFAULT_N_UNLOADED
    n_loaded: int = DEFAULT_N_LOADED
    pattern: tuple = ()

    def __post_init__(self):
        if self.n_unloaded < 0 or self.n_loaded < 0 or self.n_unloaded + self.n_loaded == 0:
            raise InputError("supercell needs a positive number of cells")
        if not self.pattern:
            object.__setattr__(self, "pattern", loading_pattern(self.n_unloaded, self.n_loaded))
        pat = tuple(self.pattern)
        if len(pat) != self.n_unloaded + self.n_loaded or pat.count("loaded") != self.n_loaded:
            raise InputError("supercell pattern does not match the cell counts")
        object.__setattr__(self, "pattern", pat)

    @classmethod
    def default(
        cls,
        *,
        l_cell: float = DEFAULT_L_CELL,
        cell_length: float = DEFAULT_CELL_LENGTH,
        z_unloaded: float = DEFAULT_Z_UNLOADED,
        z_loaded: float = DEFAULT_Z_LOADED,
        n_unloaded: int = DEFAULT_N_UNLOADED,
        n_loaded: int = DEFAULT_N_LOADED,
        placement: str = "end",
    ) -> "SuperCell":
        u = CellSpec.from_impedance("unloaded", l_cell, z_unloaded, cell_length)
        l = make_loaded_from_unloaded(u, z_loaded)
        return cls(u, l, n_unloaded, n_loaded, loading_pattern(n_unloaded, n_loaded, placement))

    @property
    def n_cells(self) -> int:
        return len(self.pattern)

    @property
    def cells(self) -> list[CellSpec]:
        return [self.unloaded if k == "unloaded" else self.loaded for k in self.pattern]

    @property
    def length(self) -> float:
        return sum(c.cell_length for c in self.cells)

    @property
    def delay(self) -> float:
        return sum(c.delay for c in self.cells)

    def with_inductance_scale(self, factor: float) -> "SuperCell":
        """Copy with every series inductance multiplied by ``factor`` (dc bias)."""
        u = replace(self.unloaded, series_inductance=self.unloaded.series_inductance * factor)
        l = replace(self.loaded, series_inductance=self.loaded.series_inductance * factor)
        return replace(self, unloaded=u, loaded=l)

    def abcd(self, frequency) -> np.ndarray:
        """Cascaded supercell matrix; runs of identical cells use matrix powers."""
        mats = []
        for kind, run in groupby(self.pattern):
            m = cell_abcd(self.unloaded if kind == "unloaded" else self.loaded, frequency)
            mats.append(np.linalg.matrix_power(m, len(list(run))))
        return cascade(mats)


@dataclass(frozen=True)
class LineLayout:
    supercell: SuperCell = field(default_factory=SuperCell.default)
    n_supercells: int = HALF_SIZE_SUPERCELLS
    source_impedance: float = 50.0
    load_impedance: float = 50.0

    def __post_init__(self):
        if self.n_supercells < 0:
            raise InputError("n_supercells must be >= 0")
        if self.source_impedance <= 0 or self.load_impedance <= 0:
            raise NonPositiveInput("port impedances must be positive")

    @classmethod
    def half_size(cls, supercell: SuperCell | None = None) -> "LineLayout":
        return cls(supercell or SuperCell.default(), HALF_SIZE_SUPERCELLS)

    @classmethod
    def full_size(cls, supercell: SuperCell | None = None) -> "LineLayout":
        return cls(supercell or SuperCell.default(), FULL_SIZE_SUPERCELLS)

    @property
    def n_cells(self) -> int:
        return self.n_supercells * self.supercell.n_cells

    @property
    def length(self) -> float:
        return self.n_supercells * self.supercell.length

    def abcd(self, frequency) -> np.ndarray:
        return np.linalg.matrix_power(self.supercell.abcd(frequency), self.n_supercells)


@dataclass(frozen=True)
class DispersionPoint:
    frequency: float
    bloch_phase_per_supercell: float
    attenuation_per_supercell: float
    in_gap: bool
    bloch_impedance: complex
    cos_bloch: float = 0.0


@dataclass(frozen=True)
class DispersionSweep:
    frequency: np.ndarray
    phase: np.ndarray
    attenuation: np.ndarray
    in_gap: np.ndarray
    bloch_impedance: np.ndarray
    cos_bloch: np.ndarray

    def __len__(self):
        return self.frequency.size

    def __getitem__(self, i) -> DispersionPoint:
        return DispersionPoint(
            float(self.frequency[i]),
            float(self.phase[i]),
            float(self.attenuation[i]),
            bool(self.in_gap[i]),
            complex(self.bloch_impedance[i]),
            float(self.cos_bloch[i]),
        )


def _cell_phase(cell: CellSpec, w):
    # exact lumped T-cell phase below its own cutoff; linear beyond (unused regime)
    x = np.clip(0.5 * w * cell.delay, 0.0, 1.0)
    return 2.0 * np.arcsin(x)


def _unwrap_bloch(sc: SuperCell, frequency, theta0):
    """Pick the branch m*pi +/- theta0 closest to the sum of single-cell phases."""
    w = 2 * np.pi * np.asarray(frequency, dtype=float)
    guess = sum(_cell_phase(c, w) for c in sc.cells)
    m = np.floor(guess / np.pi)
    best = None
    for dm in (-1.0, 0.0, 1.0):
        mm = np.maximum(m + dm, 0.0)
        even = np.mod(mm, 2) == 0
        cand = np.where(even, mm * np.pi + theta0, (mm + 1) * np.pi - theta0)
        if best is None:
            best = cand
        else:
            best = np.where(np.abs(cand - guess) < np.abs(best - guess), cand, best)
    return best


def dispersion(sc: SuperCell, frequency) -> DispersionSweep:
    """Bloch analysis of the infinite periodic line built from ``sc``.

    cos(theta) = (A + D)/2 of the supercell matrix. In a stopband the phase
    is pinned to a multiple of pi and the attenuation is acosh|cos theta|.
    The Bloch impedance is that of the forward wave at the supercell's
    input plane, B / (exp(gamma) - A), which reduces to B / sinh(gamma) for
    a symmetric supercell.
    """
    f = np.atleast_1d(np.asarray(frequency, dtype=float))
    M = sc.abcd(f)
    A, B, D = M[..., 0, 0], M[..., 0, 1], M[..., 1, 1]
    c = ((A + D) / 2).real
    in_gap = np.abs(c) > 1.0
    theta0 = np.arccos(np.clip(c, -1.0, 1.0))
    atten = np.where(in_gap, np.arccosh(np.maximum(np.abs(c), 1.0)), 0.0)
    phase = _unwrap_bloch(sc, f, theta0)

    # forward-wave eigenvalue exp(gamma): exp(+j theta) in band, decaying branch in gap
    root = np.sqrt((c * c - 1.0).astype(complex))
    eg = np.where(in_gap, c + np.sign(c) * root.real, np.cos(theta0) + 1j * np.sin(theta0))
    with np.errstate(divide="ignore", invalid="ignore"):
        zb = B / (eg - A)
    return DispersionSweep(f, phase, atten, in_gap, zb, c)


def supercell_dispersion(sc: SuperCell, frequency: float) -> DispersionPoint:
    if frequency <= 0:
        raise NonPositiveInput("frequency must be positive")
    return dispersion(sc, frequency)[0]


def bloch_wavenumber(sc: SuperCell, frequency):
    """Unwrapped Bloch wavenumber in rad/m (real part; constant across a gap)."""
    d = dispersion(sc, frequency)
    k = d.phase / sc.length
    return float(k[0]) if np.ndim(frequency) == 0 else k


def _refine_edge(sc: SuperCell, f_a: float, f_b: float, gap_at_a: bool) -> float:
    """Bisect between f_a and f_b for the in-gap transition."""
    a, b = f_a, f_b
    while (b - a) > EDGE_RTOL * b * 0.5:
        m = 0.5 * (a + b)
        g = bool(dispersion(sc, m).in_gap[0])
        if g == gap_at_a:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def find_band_gaps(sc: SuperCell, f_lo: float, f_hi: float, resolution: float) -> list[tuple[float, float]]:
    """Stopbands within [f_lo, f_hi]; edges refined by bisection.

    A gap that is still open at the scan boundary is reported with that
    boundary as its edge.
    """
    if not f_lo < f_hi:
        raise InputError("need f_lo < f_hi")
    if resolution <= 0:
        raise NonPositiveInput("resolution must be positive")
    n = max(int(math.ceil((f_hi - f_lo) / resolution)) + 1, 2)
    f = np.linspace(f_lo, f_hi, n)
    g = dispersion(sc, f).in_gap
    gaps = []
    start = f_lo if g[0] else None
    for i in range(1, n):
        if g[i] and not g[i - 1]:
            start = _refine_edge(sc, f[i - 1], f[i], False)
        elif g[i - 1] and not g[i]:
            stop = _refine_edge(sc, f[i - 1], f[i], True)
            gaps.append((start, stop))
            start = None
    if start is not None:
        gaps.append((start, f_hi))
    return gaps


def abcd_to_s(M: np.ndarray, z_source: float = 50.0, z_load: float = 50.0):
    """S11, S21, S12, S22 of an ABCD matrix between real port impedances."""
    A, B, C, D = M[..., 0, 0], M[..., 0, 1], M[..., 1, 0], M[..., 1, 1]
    z1, z2 = z_source, z_load
    den = A * z2 + B + C * z1 * z2 + D * z1
    s11 = (A * z2 + B - C * z1 * z2 - D * z1) / den
    s21 = 2.0 * np.sqrt(z1 * z2) / den
    # AD - BC loses digits when the entries are large (deep in a stopband);
    # snap it to 1 when the deviation is at round-off level
    det = A * D - B * C
    det = np.where(np.abs(det - 1.0) <= 1e-9 * (np.abs(A * D) + np.abs(B * C)), 1.0, det)
    s12 = 2.0 * np.sqrt(z1 * z2) * det / den
    s22 = (-A * z2 + B - C * z1 * z2 + D * z1) / den
    return s11, s21, s12, s22


def line_sparameters(layout: LineLayout, frequency):
    return abcd_to_s(layout.abcd(frequency), layout.source_impedance, layout.load_impedance)


def line_s21(layout: LineLayout, frequency):
    s21 = line_sparameters(layout, frequency)[1]
    return complex(s21) if np.ndim(frequency) == 0 else s21


def _require_passband(sc: SuperCell, frequency: float) -> DispersionPoint:
    if frequency <= 0:
        raise NonPositiveInput("frequency must be positive")
    p = supercell_dispersion(sc, frequency)
    if p.in_gap:
        raise GapFrequency(f"{frequency / 1e9:.6g} GHz lies inside a stopband")
    return p


def vswr(layout: LineLayout, frequency: float) -> float:
    """(1 + |S11|) / (1 - |S11|) at a passband frequency."""
    _require_passband(layout.supercell, frequency)
    s11 = abs(line_sparameters(layout, frequency)[0])
    if s11 >= 1.0:
        return math.inf
    return (1.0 + s11) / (1.0 - s11)


def total_phase(layout: LineLayout, frequency: float) -> float:
    """Unwrapped electrical length N_sc * Bloch phase, in radians."""
    p = _require_passband(layout.supercell, frequency)
    return layout.n_supercells * p.bloch_phase_per_supercell


def half_wave_frequency(sc: SuperCell, gaps: Sequence[tuple[float, float]]) -> float | None:
    """Lowest propagating frequency with half a wavelength per supercell.

    This is the upper edge of the first stopband, where the pump is placed.
    """
    return gaps[0][1] if gaps else None
