"""File emitters: per-trial CSV, summary JSON, scatter/scaling SVG, and the
checksum manifest.

Numbers are serialized with Python's shortest round-trip representation,
so parsing an emitted CSV reproduces the in-memory values exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os

import numpy as np

from .geometry import Annulus, DiskUnion, SymbolBand, symbol_image_curve

REPORT_SCHEMA_VERSION = 1

_CURVE_SAMPLES = 512


def write_eigenvalue_csv(path, records):
    """Columns trial,index,re,im; one row per eigenvalue, trial order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["trial", "index", "re", "im"])
        for rec in records:
            if rec.failed:
                continue
            for j, lam in enumerate(rec.eigenvalues):
                writer.writerow([rec.index, j, repr(float(lam.real)), repr(float(lam.imag))])


def read_eigenvalue_csv(path):
    """Inverse of write_eigenvalue_csv: {trial: complex ndarray}."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.setdefault(int(row["trial"]), []).append(
                complex(float(row["re"]), float(row["im"]))
            )
    return {k: np.asarray(v, dtype=np.complex128) for k, v in out.items()}


def report_to_json_dict(report):
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "experiment",
        "config": {
            "structure": report.structure,
            "d": report.d,
            "eps": report.eps,
            "trials": report.trials,
            "seed": report.seed,
            "solver": report.solver,
            "delta": report.delta,
        },
        "containment_fraction": report.containment_fraction,
        "eigenvalue_containment_fraction": report.eigenvalue_containment_fraction,
        "deviation_quantiles": report.deviation_quantiles,
        "pooled_eigenvalue_quantiles": report.pooled_eigenvalue_quantiles,
        "exclusion_only_fraction": report.exclusion_only_fraction,
        "failed_trials": report.failed_trials,
        "eigenvalues_csv": "eigenvalues.csv",
        "wall_time_s": report.wall_time_s,
    }


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(out_dir, filenames, extra=None):
    """run_manifest.json listing every emitted file with a sha256 checksum."""
    files = {}
    for name in sorted(filenames):
        with open(os.path.join(out_dir, name), "rb") as fh:
            files[name] = "sha256:" + hashlib.sha256(fh.read()).hexdigest()
    payload = {"schema_version": REPORT_SCHEMA_VERSION, "files": files}
    if extra:
        payload.update(extra)
    path = os.path.join(out_dir, "run_manifest.json")
    write_json(path, payload)
    return path


def verify_manifest(out_dir):
    with open(os.path.join(out_dir, "run_manifest.json")) as fh:
        manifest = json.load(fh)
    for name, digest in manifest["files"].items():
        with open(os.path.join(out_dir, name), "rb") as fh:
            actual = "sha256:" + hashlib.sha256(fh.read()).hexdigest()
        if actual != digest:
            return False
    return True


def _circle(center, radius, samples=_CURVE_SAMPLES):
    theta = 2.0 * np.pi * np.arange(samples) / samples
    return center + radius * np.exp(1j * theta)


def region_overlay_curves(region, exclusion=None):
    """Closed polylines outlining the region (and exclusion disks, if any)."""
    curves = []
    if isinstance(region, DiskUnion):
        for c in region.centers:
            curves.append(_circle(complex(c), region.radius))
    elif isinstance(region, Annulus):
        if region.inner > 0:
            curves.append(_circle(region.center, region.inner))
        curves.append(_circle(region.center, region.outer))
        curves.append(_circle(region.center, region.ref))
    elif isinstance(region, SymbolBand):
        curves.append(symbol_image_curve(region.symbol, _CURVE_SAMPLES))
    if exclusion is not None:
        for c in exclusion.critical_points:
            curves.append(_circle(complex(c), exclusion.radius))
    return curves


def write_scatter_svg(path, records, curves, size=800, margin_frac=0.10):
    """Eigenvalue cloud as one circle element per point plus overlay paths.

    Axis ranges auto-fit the points and overlays with a 10% margin; the
    vertical axis is flipped so the upper half plane is on top.
    """
    pts = np.concatenate(
        [rec.eigenvalues for rec in records if not rec.failed]
        or [np.zeros(1, dtype=np.complex128)]
    )
    allz = [pts] + [np.asarray(c) for c in curves]
    re = np.concatenate([z.real for z in allz])
    im = np.concatenate([z.imag for z in allz])
    lo_x, hi_x = float(re.min()), float(re.max())
    lo_y, hi_y = float(im.min()), float(im.max())
    span = max(hi_x - lo_x, hi_y - lo_y, 1e-9)
    pad = margin_frac * span
    lo_x, hi_x = lo_x - pad, hi_x + pad
    lo_y, hi_y = lo_y - pad, hi_y + pad

    def sx(x):
        return (x - lo_x) / (hi_x - lo_x) * size

    def sy(y):
        return size - (y - lo_y) / (hi_y - lo_y) * size

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{size}" height="{size}" viewBox="0 0 {size} {size}">\n'
    ]
    for curve in curves:
        z = np.asarray(curve)
        coords = " L".join(f"{sx(x):.2f} {sy(y):.2f}" for x, y in zip(z.real, z.imag))
        parts.append(
            f'<path d="M{coords} Z" fill="none" stroke="#c02020" stroke-width="1.2"/>\n'
        )
    for rec in records:
        if rec.failed:
            continue
        for lam in rec.eigenvalues:
            parts.append(
                f'<circle cx="{sx(lam.real):.2f}" cy="{sy(lam.imag):.2f}" '
                f'r="1.4" fill="#1f4e9c" fill-opacity="0.5"/>\n'
            )
    parts.append("</svg>\n")
    with open(path, "w") as fh:
        fh.write("".join(parts))


def write_scaling_csv(path, per_dim):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["d", "median_deviation", "q90_deviation", "median_outward_deviation"])
        for row in per_dim:
            writer.writerow(
                [
                    row["d"],
                    repr(row["median_deviation"]),
                    repr(row["q90_deviation"]),
                    repr(row["median_outward_deviation"]),
                ]
            )


def write_scaling_svg(path, fit, size=640):
    """Log-log medians with the fitted line as paths, points as circles."""
    dims = np.array([row["d"] for row in fit["per_dim"]], dtype=float)
    med = np.array([row["median_deviation"] for row in fit["per_dim"]], dtype=float)
    lx, ly = np.log(dims), np.log(med)
    fy = fit["slope"] * lx + fit["intercept"]
    lo_x, hi_x = lx.min(), lx.max()
    lo_y = min(ly.min(), fy.min())
    hi_y = max(ly.max(), fy.max())
    pad_x = 0.10 * max(hi_x - lo_x, 1e-9)
    pad_y = 0.10 * max(hi_y - lo_y, 1e-9)
    lo_x, hi_x, lo_y, hi_y = lo_x - pad_x, hi_x + pad_x, lo_y - pad_y, hi_y + pad_y

    def sx(x):
        return (x - lo_x) / (hi_x - lo_x) * size

    def sy(y):
        return size - (y - lo_y) / (hi_y - lo_y) * size

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{size}" height="{size}" viewBox="0 0 {size} {size}">\n'
    ]
    coords = " L".join(f"{sx(x):.2f} {sy(y):.2f}" for x, y in zip(lx, fy))
    parts.append(f'<path d="M{coords}" fill="none" stroke="#c02020" stroke-width="1.5"/>\n')
    for x, y in zip(lx, ly):
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" fill="#1f4e9c"/>\n')
    parts.append("</svg>\n")
    with open(path, "w") as fh:
        fh.write("".join(parts))


def write_tails_csv(path, table, columns, verdict):
    """Empirical-vs-oracle tail table with a per-row verdict column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(columns + ["verdict"])
        for row in table["rows"]:
            out = []
            for col in columns:
                val = row.get(col, "")
                out.append(repr(float(val)) if isinstance(val, (int, float)) and not isinstance(val, bool) else val)
            writer.writerow(out + [verdict])
