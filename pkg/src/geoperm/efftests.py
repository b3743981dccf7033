"""Effective number of independent tests from (nominal p, permutation p) pairs.

The permutation p-value ``q`` is modeled as ``q = eta * p**kappa`` and fitted
by least absolute deviations on the log10 scale, which is a small linear
program: minimize ``sum(u + v)`` subject to ``b0 + b1*x + u - v = y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

DEFAULT_FIT_RANGE = (1e-10, 1e-3)


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class EffTestsFit:
    eta: float
    kappa: float
    n_points: int
    fit_range: tuple[float, float]
    objective: float = 0.0
    residuals: tuple[float, ...] = field(default=(), repr=False)

    def effective_tests(self, p: float | np.ndarray) -> float | np.ndarray:
        """``q / p`` implied by the fit, i.e. ``eta * p**(kappa - 1)``."""
        return self.eta * np.power(p, self.kappa - 1.0)

    def predict(self, p: float | np.ndarray) -> float | np.ndarray:
        return self.eta * np.power(p, self.kappa)

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "kappa": self.kappa,
            "n_points": self.n_points,
            "fit_range": list(self.fit_range),
            "objective": self.objective,
            "residuals": list(self.residuals),
        }


def _lad_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    m = x.size
    # variables: b0, b1 (free), u (m), v (m) >= 0
    c = np.concatenate([[0.0, 0.0], np.ones(2 * m)])
    eye = np.eye(m)
    a_eq = np.hstack([np.ones((m, 1)), x[:, None], eye, -eye])
    bounds = [(None, None), (None, None)] + [(0, None)] * (2 * m)
    res = linprog(c, A_eq=a_eq, b_eq=y, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise FitError(f"LAD fit did not converge: {res.message}")
    return float(res.x[0]), float(res.x[1]), float(res.fun)


def fit_effective_tests(
    pairs,
    fit_lo: float = DEFAULT_FIT_RANGE[0],
    fit_hi: float = DEFAULT_FIT_RANGE[1],
) -> EffTestsFit:
    """Median-regression fit of ``log10 q`` on ``log10 p`` over pairs with ``p`` in range.

    Pairs with a nonpositive or non-finite value on either side are skipped.
    Residuals are reported for every usable point in the fit range.
    """
    if not 0.0 < fit_lo < fit_hi:
        raise FitError(f"bad fit range [{fit_lo}, {fit_hi}]")
    arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
    p, q = arr[:, 0], arr[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        keep = np.isfinite(p) & np.isfinite(q) & (p > 0) & (q > 0) & (p >= fit_lo) & (p <= fit_hi)
    if keep.sum() < 3:
        raise FitError(f"need at least 3 usable pairs in [{fit_lo:g}, {fit_hi:g}], got {int(keep.sum())}")
    x = np.log10(p[keep])
    y = np.log10(q[keep])
    if np.ptp(x) == 0:
        raise FitError("all nominal p-values are equal; slope is not identifiable")
    b0, b1, obj = _lad_line(x, y)
    resid = y - (b0 + b1 * x)
    return EffTestsFit(10.0**b0, b1, int(keep.sum()), (fit_lo, fit_hi), obj, tuple(float(r) for r in resid))


def read_pairs(path: str | Path) -> list[tuple[float, float]]:
    """Two numeric columns (nominal p, permutation p); a non-numeric first line is a header."""
    out = []
    for i, line in enumerate(Path(path).read_text().splitlines()):
        fields_ = line.split()
        if not fields_ or line.lstrip().startswith("#"):
            continue
        try:
            out.append((float(fields_[0]), float(fields_[1])))
        except (ValueError, IndexError):
            if i == 0:
                continue
            raise ValueError(f"{path}: line {i + 1}: expected two numbers") from None
    return out


def effective_tests_at(eta: float, kappa: float, p: float) -> float:
    return eta * math.pow(p, kappa - 1.0)
