"""CSV and JSON artifacts.

CSV files are comma-separated with a header row, 17 significant digits
and LF line endings, so floats round-trip exactly. JSON is UTF-8 with
sorted keys.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .geometry import SubmanifoldSpectra
from .ground_state import ProblemParams, RadialProfile, profile_from_samples


def _cell(x) -> str:
    if isinstance(x, (str, np.str_)):
        return str(x)
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(x) for x in row])
    return path


def write_columns(path, columns: dict) -> Path:
    """Write equal-length arrays as named CSV columns."""
    names = list(columns)
    return write_csv(path, names, zip(*(np.asarray(columns[k]).tolist() for k in names)))


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def read_columns(path) -> dict[str, np.ndarray]:
    header, rows = read_csv(path)
    cols = list(zip(*rows)) if rows else [()] * len(header)
    out = {}
    for name, col in zip(header, cols):
        try:
            out[name] = np.array([float(x) for x in col])
        except ValueError:
            out[name] = np.array(col)
    return out


def _plain(obj):
    """Make numpy scalars/arrays and non-finite floats JSON friendly."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    text = json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# Module formats


def save_profile(path, profile: RadialProfile) -> Path:
    return write_columns(path, {"r": profile.grid, "w": profile.w, "dw": profile.dw})


def load_profile(path, params: ProblemParams) -> RadialProfile:
    cols = read_columns(path)
    return profile_from_samples(params, cols["r"], cols["w"], cols["dw"])


def save_spectra(path, spectra: SubmanifoldSpectra) -> Path:
    return write_json(path, spectra.to_dict())


def load_spectra(path) -> SubmanifoldSpectra:
    return SubmanifoldSpectra.from_dict(read_json(path))


def save_model_spectrum(path, model) -> Path:
    return write_csv(path, ["value", "branch", "source_index", "source_eigenvalue"], model.rows())


def save_corrector(path, field_) -> Path:
    z1, z2 = field_.grid.mesh()
    return write_columns(path, {"zeta1": z1, "zeta2": z2, "w1": field_.w1})


def save_plot_data(path, x_name: str, x, y_name: str, y) -> Path:
    return write_columns(path, {x_name: x, y_name: y})
