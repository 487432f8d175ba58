"""Moduli of continuity and the regularity conditions imposed on them.

A modulus is any nondecreasing continuous omega on [0, 2] with omega(0) = 0,
omega(t)/t nonincreasing and omega(t)/t -> infinity as t -> 0. Two built-in
families are provided:

* ``holder(alpha)``: omega(t) = t**alpha
* ``log_modulus(alpha)``: omega(t) = 1 / (|log t| + 1)**alpha

Validation is diagnostic: a modulus that fails an axiom on the check grid is
still usable, and the violation travels with every report.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateModulusError, ModulusDataError, SpecError

DOMAIN_CAP = 2.0
DEFAULT_FLOOR = 1e-12
DEFAULT_POINTS = 2000


@dataclass(frozen=True)
class Modulus:
    evaluator: Callable[[np.ndarray], np.ndarray]
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.asarray(self.evaluator(t_arr), dtype=float)
        return float(out) if np.ndim(t) == 0 else out

    @property
    def spec(self) -> str:
        if self.family == "holder":
            return f"holder:{self.params['alpha']!r}"
        if self.family == "log":
            return f"log:{self.params['alpha']!r}"
        if self.family == "tabulated":
            return f"csv:{self.params.get('path', '<memory>')}"
        return self.family

    @classmethod
    def from_spec(cls, spec: str) -> "Modulus":
        """Parse ``holder:<alpha>``, ``log:<alpha>`` or ``csv:<path>``."""
        kind, _, arg = spec.partition(":")
        try:
            if kind == "holder":
                return holder(float(arg))
            if kind == "log":
                return log_modulus(float(arg))
            if kind == "csv":
                with open(arg, newline="") as fh:
                    return tabulated_from_csv(fh, path=arg)
        except (ValueError, OSError) as exc:
            raise SpecError(f"bad modulus spec {spec!r}: {exc}") from exc
        raise SpecError(f"unknown modulus spec {spec!r} (use holder:<a>, log:<a>, csv:<path>)")


def holder(alpha: float) -> Modulus:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return Modulus(lambda t: np.power(t, alpha), "holder", {"alpha": float(alpha)})


def _chi(t, alpha):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        out = 1.0 / np.power(np.abs(np.log(t)) + 1.0, alpha)
    return np.where(t == 0.0, 0.0, out)


def log_modulus(alpha: float) -> Modulus:
    """chi_alpha(t) = 1/(|log t| + 1)^alpha, with chi_alpha(0) = 0."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return Modulus(lambda t: _chi(t, alpha), "log", {"alpha": float(alpha)})


def tabulated(t: Sequence[float], w: Sequence[float], path: str | None = None) -> Modulus:
    """Piecewise-linear modulus through the points (t, w); (0, 0) is added if absent."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    order = np.argsort(t)
    t, w = t[order], w[order]
    if t[0] > 0.0:
        t = np.concatenate([[0.0], t])
        w = np.concatenate([[0.0], w])
    if np.any(np.diff(t) <= 0):
        raise ValueError("tabulated t values must be distinct")
    params = {"points": int(t.size)}
    if path is not None:
        params["path"] = path
    return Modulus(lambda s: np.interp(s, t, w), "tabulated", params)


def tabulated_from_csv(fh, path: str | None = None) -> Modulus:
    rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    t = [float(r[0]) for r in rows]
    w = [float(r[1]) for r in rows]
    return tabulated(t, w, path=path)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _finite_nonneg(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise ModulusDataError(f"modulus returned non-finite values on {what}")
    if np.any(values < 0):
        raise ModulusDataError(f"modulus returned negative values on {what}")
    return values


def default_grid(cap: float = DOMAIN_CAP, floor: float = DEFAULT_FLOOR,
                 points: int = DEFAULT_POINTS) -> np.ndarray:
    """Log-spaced grid on [floor, cap]; t = 1 is always included (kink of chi_alpha)."""
    grid = np.geomspace(floor, cap, points)
    if floor < 1.0 < cap:
        grid = np.union1d(grid, [1.0])
    return grid


# ---------------------------------------------------------------- validation


@dataclass
class AxiomCheck:
    name: str
    passed: bool
    worst_pair: tuple | None = None
    magnitude: float = 0.0
    interval: tuple | None = None
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "worst_pair": list(self.worst_pair) if self.worst_pair else None,
            "magnitude": self.magnitude,
            "interval": list(self.interval) if self.interval else None,
            "detail": self.detail,
        }


@dataclass
class ValidationReport:
    modulus: str
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> AxiomCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def violations(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {"modulus": self.modulus, "passed": self.passed,
                "checks": [c.to_json() for c in self.checks]}


def _monotone_check(name, t, values, increasing, rtol=1e-12):
    """Worst adjacent-pair violation of monotonicity and the span where it occurs."""
    diff = np.diff(values)
    scale = np.maximum(np.abs(values[:-1]), np.abs(values[1:]))
    bad_amount = -diff if increasing else diff
    bad = bad_amount > rtol * scale
    if not np.any(bad):
        return AxiomCheck(name, True)
    i = int(np.argmax(np.where(bad, bad_amount, -np.inf)))
    idx = np.flatnonzero(bad)
    return AxiomCheck(
        name, False,
        worst_pair=(float(t[i]), float(t[i + 1])),
        magnitude=float(bad_amount[i]),
        interval=(float(t[idx[0]]), float(t[idx[-1] + 1])),
        detail=f"{idx.size} adjacent grid pairs violate the ordering",
    )


def validate_modulus(w: Modulus, grid: Sequence[float] | None = None,
                     ratio_threshold: float = 10.0) -> ValidationReport:
    """Check the modulus axioms on a strictly increasing grid in (0, 2].

    The blow-up axiom omega(t)/t -> infinity is diagnosed as: the ratio at the
    smallest grid point exceeds ``ratio_threshold`` and increases as t decreases
    over the lowest tenth of the grid.
    """
    t = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0) or t[0] <= 0 or t[-1] > DOMAIN_CAP:
        raise ValueError("grid must be strictly increasing within (0, 2]")
    vals = _finite_nonneg(np.asarray(w(t), dtype=float), "the validation grid")
    w0 = _finite_nonneg(np.atleast_1d(w(0.0)), "t = 0")[0]

    checks = [AxiomCheck("zero_at_origin", w0 == 0.0, magnitude=float(w0),
                         detail=f"omega(0) = {w0!r}")]
    checks.append(_monotone_check("nondecreasing", t, vals, increasing=True))
    ratio = vals / t
    checks.append(_monotone_check("ratio_nonincreasing", t, ratio, increasing=False))

    tail = max(2, t.size // 10)
    low = ratio[:tail]
    grows = bool(np.all(np.diff(low) <= 1e-12 * np.abs(low[1:])))
    big = bool(ratio[0] > ratio_threshold)
    checks.append(AxiomCheck(
        "ratio_unbounded", big and grows, worst_pair=(float(t[0]), float(t[tail - 1])),
        magnitude=float(ratio[0]),
        detail=f"omega(t_min)/t_min = {ratio[0]:.6g}; threshold {ratio_threshold:g}; "
               f"{'increasing' if grows else 'not increasing'} as t decreases near t_min",
    ))
    return ValidationReport(w.spec, checks)


# ---------------------------------------------------------------- conditions


@dataclass
class ConditionEstimate:
    value: float
    argmin: float
    trend: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"value": self.value, "argmin": self.argmin,
                "trend": [{"floor": f, "value": v} for f, v in self.trend]}


def _positive(w: Modulus, t: np.ndarray) -> np.ndarray:
    vals = _finite_nonneg(np.asarray(w(t), dtype=float), "the condition grid")
    zero = (vals == 0.0) & (t > 0)
    if np.any(zero):
        raise DegenerateModulusError(f"omega vanishes at t = {float(t[zero][0])!r} > 0")
    return vals


def eta_estimate(w: Modulus, rho: float, grid: Sequence[float] | None = None) -> ConditionEstimate:
    """Grid minimum of omega(t**rho) / omega(t)**rho, with its argmin.

    A positive minimum is numerical evidence for omega(t^rho) >= eta * omega(t)^rho.
    The grid is restricted to t**rho <= 2.
    """
    if not 1.0 <= rho <= 2.0:
        raise ValueError("rho must lie in [1, 2]")
    cap = DOMAIN_CAP ** (1.0 / rho)
    t = default_grid(cap=cap) if grid is None else np.asarray(grid, dtype=float)
    t = t[(t > 0) & (t ** rho <= DOMAIN_CAP)]
    base = _positive(w, t)
    ratio = np.asarray(w(t ** rho), dtype=float) / base ** rho
    i = int(np.argmin(ratio))
    return ConditionEstimate(float(ratio[i]), float(t[i]))


def condition3_estimate(w: Modulus, grid: Sequence[float] | None = None,
                        floors: Sequence[float] = (1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12),
                        ) -> ConditionEstimate:
    """Grid minimum of omega(t**2) / omega(t) on (0, sqrt 2], plus its trend in the grid floor.

    A minimum bounded away from zero as the floor decreases supports
    omega(t^2) >= eta * omega(t); a minimum drifting to zero refutes it.
    """
    cap = math.sqrt(DOMAIN_CAP)
    t = default_grid(cap=cap) if grid is None else np.asarray(grid, dtype=float)
    t = t[(t > 0) & (t <= cap)]
    ratio = np.asarray(w(t ** 2), dtype=float) / _positive(w, t)
    i = int(np.argmin(ratio))
    trend = []
    for f in floors:
        sub = default_grid(cap=cap, floor=f)
        r = np.asarray(w(sub ** 2), dtype=float) / _positive(w, sub)
        trend.append((float(f), float(np.min(r))))
    return ConditionEstimate(float(ratio[i]), float(t[i]), trend)
