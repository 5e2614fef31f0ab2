"""File formats: input CSV tables, Touchstone output, plot data and SVG."""

from __future__ import annotations

import csv
import hashlib
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import SchemaError
from .film import FilmSample
from .nonlinear import PhaseShiftScan
from .noise import NoiseScan

FILM_HEADER = ("thickness_nm", "sheet_resistance_ohm_sq", "tc_k")
DEPOSITION_HEADER = ("time_min", "thickness_nm")
PHASE_SCAN_HEADER = ("i_dc_ma", "dtheta_rel")
NOISE_SCAN_HEADER = ("t_source_k", "v_n_squared")
SWEEP_HEADER = ("freq_hz", "s21_re", "s21_im", "s11_re", "s11_im")
GAIN_HEADER = ("freq_hz", "gain_db")


def fmt(x) -> str:
    """Fixed numeric format used in every output table: 9 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if x == 0:
        x = 0.0  # no "-0"
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return f"{x:.8e}"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def read_table(path, header: Sequence[str]) -> np.ndarray:
    """Read a numeric CSV whose first line must equal ``header``."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError("file not found", path=path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise SchemaError("empty file, expected header " + ",".join(header), path=path, row=1)
    got = tuple(c.strip() for c in rows[0])
    if got != tuple(header):
        raise SchemaError(f"expected header {','.join(header)}, got {','.join(got)}", path=path, row=1)
    data = []
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise SchemaError(f"expected {len(header)} fields, got {len(r)}", path=path, row=i)
        vals = []
        for name, cell in zip(header, r):
            try:
                v = float(cell)
            except ValueError:
                raise SchemaError(f"not a number: {cell.strip()!r}", path=path, row=i, column=name) from None
            if not math.isfinite(v):
                raise SchemaError("value is not finite", path=path, row=i, column=name)
            vals.append(v)
        data.append(vals)
    if not data:
        raise SchemaError("no data rows", path=path, row=2)
    return np.array(data, dtype=float)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(fmt(v) for v in r) + "\n")
    return path


def read_film_samples(path) -> list[FilmSample]:
    data = read_table(path, FILM_HEADER)
    out = []
    for i, (h, rs, tc) in enumerate(data, start=2):
        try:
            out.append(FilmSample(h, rs, tc))
        except ValueError as exc:
            raise SchemaError(str(exc), path=path, row=i) from None
    return out


def read_deposition(path) -> list[tuple[float, float]]:
    return [tuple(r) for r in read_table(path, DEPOSITION_HEADER)]


def read_phase_scan(path) -> PhaseShiftScan:
    data = read_table(path, PHASE_SCAN_HEADER)
    return PhaseShiftScan(data[:, 0] * 1e-3, data[:, 1])


def read_noise_scan(path) -> NoiseScan:
    data = read_table(path, NOISE_SCAN_HEADER)
    try:
        return NoiseScan(data[:, 0], data[:, 1])
    except ValueError as exc:
        raise SchemaError(str(exc), path=path) from None


# -- S-parameters -----------------------------------------------------------------


def write_touchstone(path, frequency, s11, s21, s12, s22, z0: float = 50.0, comment: str = "") -> Path:
    """Touchstone v1 two-port file, ``# GHz S RI R <z0>``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for line in comment.splitlines():
            fh.write(f"! {line}\n")
        fh.write(f"# GHz S RI R {z0:g}\n")
        for f, a, b, c, d in zip(frequency, s11, s21, s12, s22):
            vals = [f / 1e9, a.real, a.imag, b.real, b.imag, c.real, c.imag, d.real, d.imag]
            fh.write(" ".join(fmt(v) for v in vals) + "\n")
    return path


_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}


def read_touchstone(path):
    """Read a two-port Touchstone v1 file; returns (freq_hz, S[n,2,2], z0)."""
    opts = ["ghz", "s", "ma", "r", "50"]
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.split("!", 1)[0].strip()
            if not line:
                continue
            if line.startswith("#"):
                o = line[1:].lower().split()
                opts[: len(o)] = o
                continue
            rows.extend(float(v) for v in line.split())
    unit, kind, form, _, z0 = opts[:5]
    if kind != "s":
        raise SchemaError(f"only S-parameters are supported, got {kind!r}", path=path)
    data = np.array(rows).reshape(-1, 9)
    f = data[:, 0] * _UNITS[unit]
    a, b = data[:, 1::2], data[:, 2::2]
    if form == "ri":
        s = a + 1j * b
    elif form == "ma":
        s = a * np.exp(1j * np.radians(b))
    elif form == "db":
        s = 10 ** (a / 20) * np.exp(1j * np.radians(b))
    else:
        raise SchemaError(f"unknown data format {form!r}", path=path)
    # column order is S11 S21 S12 S22
    S = np.empty((f.size, 2, 2), dtype=complex)
    S[:, 0, 0], S[:, 1, 0], S[:, 0, 1], S[:, 1, 1] = s.T
    return f, S, float(z0)


def write_sweep_csv(path, frequency, s21, s11) -> Path:
    return write_table(path, SWEEP_HEADER, zip(frequency, s21.real, s21.imag, s11.real, s11.imag))


def write_gain_csv(path, profile) -> Path:
    return write_table(path, GAIN_HEADER, zip(profile.frequencies, profile.gain_db))


def write_keyvalue(path, items: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for k, v in items.items():
            fh.write(f"{k} = {fmt(v)}\n")
    return path


# -- minimal SVG ------------------------------------------------------------------


def write_svg_plot(path, x, y, *, xlabel="", ylabel="", title="", width=640, height=400) -> Path:
    """Single polyline with a frame and min/max tick labels."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    m = 60
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(y.min()), float(y.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    px = m + (x - x0) / (x1 - x0) * (width - 2 * m)
    py = height - m - (y - y0) / (y1 - y0) * (height - 2 * m)
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    w, h = width, height
    svg = f"""<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">
<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" fill="none" stroke="black"/>
<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>
<text x="{w / 2}" y="{m / 2}" text-anchor="middle">{title}</text>
<text x="{w / 2}" y="{h - 15}" text-anchor="middle">{xlabel}</text>
<text x="15" y="{h / 2}" text-anchor="middle" transform="rotate(-90 15 {h / 2})">{ylabel}</text>
<text x="{m}" y="{h - m + 15}" text-anchor="middle">{x0:.4g}</text>
<text x="{w - m}" y="{h - m + 15}" text-anchor="middle">{x1:.4g}</text>
<text x="{m - 5}" y="{h - m}" text-anchor="end">{y0:.4g}</text>
<text x="{m - 5}" y="{m + 4}" text-anchor="end">{y1:.4g}</text>
</svg>
"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg)
    return path
