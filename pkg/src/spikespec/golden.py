"""Golden reference values from the high-accuracy oracles.

Values are keyed by case ("p=3,d=2") and never taken from the production
solvers, so tests compare two independent computations.
"""

from __future__ import annotations

from pathlib import Path

from .ground_state import ProblemParams
from .io import read_json, write_json
from .oracles import RTOL, reference_alpha_bar, reference_profile

FIELDS = ("w0", "C0", "C1", "alpha_bar", "eta_slope", "F_bar_model")


def case_key(p: float, d: int) -> str:
    return f"p={p:g},d={d}"


def parse_case(text: str) -> tuple[float, int]:
    """Accept "3,2" or "p=3,d=2"."""
    parts = [s.split("=")[-1].strip() for s in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"bad case {text!r}; expected 'p,d'")
    return float(parts[0]), int(parts[1])


def golden_case(p: float, d: int) -> dict:
    params = ProblemParams(p, d)
    ref = reference_profile(params)
    thr = reference_alpha_bar(ref)
    return {
        "w0": ref.w0,
        "C0": ref.C0,
        "C1": ref.C1,
        "alpha_bar": thr.alpha_bar,
        "eta_slope": thr.eta_slope,
        "F_bar_model": thr.F_bar_model,
        "method": f"adaptive DOP853 shooting, rtol={RTOL:g}",
    }


def regen_golden(path, cases) -> dict:
    """Recompute the given (p, d) cases and merge them into ``path``."""
    path = Path(path)
    data = read_json(path) if path.exists() else {}
    for p, d in cases:
        data[case_key(p, d)] = golden_case(p, d)
    write_json(path, data)
    return data


def load_golden(path) -> dict:
    return read_json(path)
