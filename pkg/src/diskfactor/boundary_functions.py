"""Sampled boundary functions and weighted Lipschitz diagnostics.

The Lipschitz seminorm sup |f(z) - f(w)| / omega(|z - w|) is estimated over a
deterministic pair set:

* structured boundary pairs: every grid point against its neighbour at each
  dyadic index offset 1, 2, 4, ..., n/2;
* ``pair_budget`` seeded random pairs, drawn in the closed disk when the
  function has a closed-form evaluator and among grid points otherwise.

Random pairs are generated row by row from one ``numpy`` generator, so the
pair set for a budget m is a prefix of the set for any larger budget and the
estimate is monotone in the budget.
"""

from __future__ import annotations

import cmath
import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .circle_numerics import (
    TWO_PI,
    ClosedBoundarySet,
    GridFunction,
    chord,
    poisson_transform,
    prepare_log_modulus,
    trig_interpolate,
    uniform_grid,
)
from .errors import (
    DegenerateModulusError,
    InconsistentSampleError,
    SpecError,
    UnresolvableScaleError,
)
from .moduli import Modulus

DEFAULT_PAIR_BUDGET = 4000
# random pair separations are log-uniform on [MIN_RANDOM_SEP, 2]
MIN_RANDOM_SEP = 2e-4


def _as_complex(z):
    return np.asarray(z, dtype=complex)


@dataclass(frozen=True)
class BoundaryFunction:
    """Boundary samples of f in the disk algebra, optionally with a closed form."""

    samples: GridFunction
    evaluator: Callable | None = None
    name: str = "f"

    @classmethod
    def from_callable(cls, func: Callable, n: int, name: str = "f") -> "BoundaryFunction":
        theta = uniform_grid(n)
        vals = np.asarray(func(np.exp(1j * theta)), dtype=complex)
        return cls(GridFunction(vals), func, name)

    @classmethod
    def from_samples(cls, values, name: str = "f") -> "BoundaryFunction":
        return cls(GridFunction(np.asarray(values, dtype=complex)), None, name)

    @classmethod
    def from_spec(cls, spec: str, n: int) -> "BoundaryFunction":
        """Parse ``poly:<c0,c1,...>``, ``oneminusz``, ``power:<beta>``, ``const:<c>``."""
        kind, _, arg = spec.partition(":")
        try:
            if kind == "poly":
                return polynomial([parse_complex(c) for c in arg.split(",")], n)
            if kind == "oneminusz" and not arg:
                return one_minus_z(n)
            if kind == "power":
                return power(float(arg), n)
            if kind == "const":
                return constant(parse_complex(arg), n)
            if kind == "zeros":
                return boundary_zeros([float(t) for t in arg.split(",")], n)
        except ValueError as exc:
            raise SpecError(f"bad function spec {spec!r}: {exc}") from exc
        raise SpecError(f"unknown function spec {spec!r} "
                        "(use poly:<coeffs>, oneminusz, power:<beta>, const:<c>, zeros:<angles>)")

    @property
    def n(self) -> int:
        return self.samples.n

    @property
    def values(self) -> np.ndarray:
        return self.samples.values.astype(complex)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __call__(self, z):
        if self.evaluator is None:
            raise ValueError(f"{self.name} has no closed-form evaluator")
        out = np.asarray(self.evaluator(_as_complex(z)), dtype=complex)
        return complex(out) if np.ndim(z) == 0 else out

    def on_circle(self, theta) -> np.ndarray:
        """Values at e^{i theta}: closed form if available, else the trigonometric interpolant."""
        theta = np.asarray(theta, dtype=float)
        if self.evaluator is not None:
            return np.asarray(self.evaluator(np.exp(1j * theta)), dtype=complex)
        return trig_interpolate(self.samples, theta)

    def _combine(self, other, op, symbol):
        if isinstance(other, BoundaryFunction):
            if other.n != self.n:
                raise ValueError("grid sizes differ")
            vals = op(self.values, other.values)
            ev = None
            if self.evaluator is not None and other.evaluator is not None:
                f, g = self.evaluator, other.evaluator
                ev = lambda z: op(np.asarray(f(z), dtype=complex), np.asarray(g(z), dtype=complex))  # noqa: E731
            return BoundaryFunction(GridFunction(vals), ev, f"({self.name}{symbol}{other.name})")
        c = complex(other)
        ev = None
        if self.evaluator is not None:
            f = self.evaluator
            ev = lambda z: op(np.asarray(f(z), dtype=complex), c)  # noqa: E731
        return BoundaryFunction(GridFunction(op(self.values, c)), ev, f"({self.name}{symbol}{c})")

    def __sub__(self, other):
        return self._combine(other, np.subtract, "-")

    def __add__(self, other):
        return self._combine(other, np.add, "+")

    def __mul__(self, other):
        return self._combine(other, np.multiply, "*")

    __rmul__ = __mul__


def parse_complex(text: str) -> complex:
    return complex(text.strip().replace("i", "j").replace(" ", ""))


def polynomial(coeffs: Sequence[complex], n: int) -> BoundaryFunction:
    """p(z) = sum_k coeffs[k] z^k (ascending powers)."""
    c = np.asarray(coeffs, dtype=complex)
    ev = lambda z: np.polynomial.polynomial.polyval(_as_complex(z), c)  # noqa: E731
    label = ",".join(repr(complex(x)) for x in c)
    return BoundaryFunction.from_callable(ev, n, f"poly[{label}]")


def one_minus_z(n: int) -> BoundaryFunction:
    return BoundaryFunction.from_callable(lambda z: 1.0 - _as_complex(z), n, "1-z")


def constant(c: complex, n: int) -> BoundaryFunction:
    c = complex(c)
    return BoundaryFunction.from_callable(lambda z: np.full(np.shape(z), c, dtype=complex), n, f"const[{c}]")


def power(beta: float, n: int) -> BoundaryFunction:
    """(1 - z)^beta, principal branch (analytic in the disk, Re(1 - z) > 0)."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")

    def ev(z):
        w = 1.0 - _as_complex(z)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.power(w, beta)
        return np.where(w == 0, 0.0 if beta > 0 else 1.0, out)

    return BoundaryFunction.from_callable(ev, n, f"(1-z)^{beta!r}")


def boundary_zeros(angles: Sequence[float], n: int) -> BoundaryFunction:
    """prod_j (1 - z e^{-i t_j}) / 2: outer, sup norm <= 1, vanishing exactly at the e^{i t_j}."""
    roots = np.exp(-1j * np.asarray(angles, dtype=float))

    def ev(z):
        z = _as_complex(z)
        out = np.ones(np.shape(z), dtype=complex)
        for r in roots:
            out = out * (1.0 - z * r) / 2.0
        return out

    return BoundaryFunction.from_callable(ev, n, "zeros[" + ",".join(repr(float(t)) for t in angles) + "]")


# polynomials of degree <= 4 and (1 - z)^beta, beta in {1/2, 1}
TAMRAZOV_FAMILY = (
    "poly:0,1",
    "poly:1,-1",
    "poly:1,0,1",
    "poly:1,-2,1",
    "poly:0.5,0.3,-0.2,0.1",
    "poly:1,0,0,0,-1",
    "poly:0.2,-0.4,0.1,0.3,0.25",
    "power:0.5",
    "power:1",
)


# ------------------------------------------------------------------ pairs


@dataclass
class PairSet:
    """Separations |z - w| and increments |f(z) - f(w)| of sampled pairs."""

    sep: np.ndarray
    diff: np.ndarray
    dropped: int = 0

    def __add__(self, other: "PairSet") -> "PairSet":
        return PairSet(np.concatenate([self.sep, other.sep]),
                       np.concatenate([self.diff, other.diff]),
                       self.dropped + other.dropped)

    def quotients(self, w: Modulus) -> np.ndarray:
        keep = self.sep > 0
        sep, diff = self.sep[keep], self.diff[keep]
        if sep.size == 0:
            return np.zeros(0)
        om = np.asarray(w(sep), dtype=float)
        zero = om <= 0
        if np.any(zero):
            raise DegenerateModulusError(f"omega vanishes at separation {float(sep[zero][0])!r}")
        return diff / om


def _finite_pairs(sep, diff) -> PairSet:
    ok = np.isfinite(diff)
    return PairSet(sep[ok], diff[ok], int(np.count_nonzero(~ok)))


def _offset_pairs(vals: np.ndarray, offsets) -> PairSet:
    n = vals.size
    seps, diffs = [], []
    for m in offsets:
        d = np.abs(vals - np.roll(vals, -m))
        diffs.append(d)
        seps.append(np.full(n, 2.0 * math.sin(math.pi * m / n)))
    return _finite_pairs(np.concatenate(seps), np.concatenate(diffs))


def structured_pairs(f: BoundaryFunction) -> PairSet:
    """Adjacent and dyadic-offset boundary pairs."""
    n = f.n
    offsets = [2 ** j for j in range(int(math.log2(n)))]
    return _offset_pairs(f.values, offsets)


def random_boundary_pairs(f: BoundaryFunction, budget: int, seed: int) -> PairSet:
    rng = np.random.default_rng([seed, 1])
    u = rng.random((budget, 2))
    n = f.n
    i = np.minimum((u[:, 0] * n).astype(int), n - 1)
    j = np.minimum((u[:, 1] * n).astype(int), n - 1)
    keep = i != j
    i, j = i[keep], j[keep]
    theta = uniform_grid(n)
    vals = f.values
    return _finite_pairs(chord(theta[i], theta[j]), np.abs(vals[i] - vals[j]))


def random_disk_points(budget: int, seed: int):
    """Seeded pairs (z, w) in the closed disk with log-uniform separations.

    A quarter of the base points sit on the circle; partners leaving the disk
    are projected radially back onto the circle.
    """
    rng = np.random.default_rng([seed, 2])
    u = rng.random((budget, 5))
    r = np.where(u[:, 4] < 0.25, 1.0, np.sqrt(u[:, 0]))
    z = r * np.exp(1j * TWO_PI * u[:, 1])
    s = 2.0 * (MIN_RANDOM_SEP / 2.0) ** u[:, 2]
    w = z + s * np.exp(1j * TWO_PI * u[:, 3])
    out = np.abs(w) > 1.0
    w[out] = w[out] / np.abs(w[out])
    return z, w


def random_disk_pairs(f: BoundaryFunction, budget: int, seed: int) -> PairSet:
    z, w = random_disk_points(budget, seed)
    with np.errstate(all="ignore"):
        diff = np.abs(f(z) - f(w))
    return _finite_pairs(np.abs(z - w), diff)


def pair_set(f: BoundaryFunction, pair_budget: int, seed: int, disk: bool | None = None) -> PairSet:
    if disk is None:
        disk = f.evaluator is not None
    base = structured_pairs(f)
    if disk:
        return base + random_disk_pairs(f, pair_budget, seed)
    return base + random_boundary_pairs(f, pair_budget, seed)


# ------------------------------------------------------------------ norms


class OmegaNorm(NamedTuple):
    sup_norm: float
    seminorm: float
    total: float


def omega_norm(f: BoundaryFunction, w: Modulus, pair_budget: int = DEFAULT_PAIR_BUDGET,
               seed: int = 0) -> OmegaNorm:
    """Estimate ||f||_omega = ||f||_inf + sup |f(z) - f(w)| / omega(|z - w|)."""
    if pair_budget < 1000:
        raise ValueError("pair_budget must be at least 1000")
    q = pair_set(f, pair_budget, seed).quotients(w)
    semi = float(np.max(q)) if q.size else 0.0
    sup = f.sup_norm
    return OmegaNorm(sup, semi, sup + semi)


def offset_maxima(f: BoundaryFunction, max_offset: int | None = None):
    """For each grid offset m = 1..max_offset: chord(m) and max_k |f_k - f_{k+m}|."""
    n = f.n
    top = n // 2 if max_offset is None else min(max_offset, n // 2)
    vals = f.values
    m = np.arange(1, top + 1)
    seps = 2.0 * np.sin(np.pi * m / n)
    maxima = np.array([np.max(np.abs(vals - np.roll(vals, -k))) for k in m])
    return seps, maxima


def brute_force_seminorm(f: BoundaryFunction, w: Modulus) -> float:
    """Exact maximum over all n^2 grid pairs (oracle mode)."""
    seps, maxima = offset_maxima(f)
    return float(np.max(maxima / np.asarray(w(seps), dtype=float)))


# ------------------------------------------------------------------ profiles


@dataclass
class LipProfile:
    bands: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.bands = np.asarray(self.bands, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.bands) >= 0):
            raise ValueError("bands must be strictly decreasing")
        if np.any(self.values < 0):
            raise ValueError("profile values must be nonnegative")

    @property
    def decay_ratio(self) -> float:
        first = self.values[0]
        return 0.0 if first == 0 else float(self.values[-1] / first)

    def little_o(self, factor: float = 0.1) -> bool:
        """Decreasing profile whose last value is at most ``factor`` times the first."""
        mono = bool(np.all(np.diff(self.values) <= 1e-15 * np.max(self.values, initial=0.0)))
        return mono and self.decay_ratio <= factor

    def write_csv(self, fh) -> None:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["delta", "M"])
        for d, m in zip(self.bands, self.values):
            wr.writerow([repr(float(d)), repr(float(m))])

    @classmethod
    def read_csv(cls, fh) -> "LipProfile":
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))[1:]
        return cls([float(r[0]) for r in rows], [float(r[1]) for r in rows])


def band_edge_pairs(f: BoundaryFunction, bands: Sequence[float], per_band: int = 512) -> PairSet:
    """Boundary pairs at chord exactly delta for each band delta (needs a closed form)."""
    n = f.n
    theta = uniform_grid(n)[:: max(1, n // per_band)]
    seps, diffs = [], []
    for d in bands:
        step = 2.0 * math.asin(min(d, 2.0) / 2.0)
        a = np.exp(1j * theta)
        b = np.exp(1j * (theta + step))
        seps.append(np.abs(a - b))
        with np.errstate(all="ignore"):
            diffs.append(np.abs(f(a) - f(b)))
    return _finite_pairs(np.concatenate(seps), np.concatenate(diffs))


def lip_profile(f: BoundaryFunction, w: Modulus, bands: Sequence[float], seed: int = 0,
                pair_budget: int = DEFAULT_PAIR_BUDGET) -> LipProfile:
    """M(delta) = sup of |f(z) - f(w)| / omega(|z - w|) over pairs with 0 < |z - w| <= delta.

    Uses every grid offset whose chord is at most the largest band, random pairs
    as in ``omega_norm``, and (with a closed form) pairs at chord exactly delta.
    """
    bands = np.asarray(bands, dtype=float)
    if bands.size == 0 or np.any(np.diff(bands) >= 0):
        raise ValueError("bands must be nonempty and strictly decreasing")
    if bands[-1] < 4.0 * math.pi / f.n:
        raise UnresolvableScaleError(
            f"band {bands[-1]!r} is below the grid resolution 4*pi/n = {4 * math.pi / f.n!r}")
    max_offset = int(math.floor(f.n / math.pi * math.asin(min(bands[0], 2.0) / 2.0))) + 1
    seps, maxima = offset_maxima(f, max_offset)
    pairs = PairSet(seps, maxima)
    if f.evaluator is not None:
        pairs = pairs + random_disk_pairs(f, pair_budget, seed) + band_edge_pairs(f, bands)
    else:
        pairs = pairs + random_boundary_pairs(f, pair_budget, seed)
    keep = pairs.sep > 0
    sep = pairs.sep[keep]
    q = PairSet(sep, pairs.diff[keep]).quotients(w)
    values = []
    for d in bands:
        sel = sep <= d * (1 + 1e-12)
        values.append(float(np.max(q[sel])) if np.any(sel) else 0.0)
    return LipProfile(bands, np.array(values))


# ------------------------------------------------------------------ Tamrazov


@dataclass
class TamrazovResult:
    ratio: float
    disk_seminorm: float
    boundary_seminorm: float
    degenerate: bool = False


def tamrazov_ratio(f: BoundaryFunction, w: Modulus, seed: int = 0,
                   pair_budget: int = DEFAULT_PAIR_BUDGET) -> TamrazovResult:
    """Disk seminorm over boundary seminorm at equal budgets.

    The mixed pair set contains the boundary pair set, so the ratio is at least 1.
    Both seminorms below 1e-14 (constant f) is the degenerate case, ratio 1.
    """
    if f.evaluator is None:
        raise ValueError("tamrazov_ratio needs a closed-form evaluator for interior samples")
    boundary = structured_pairs(f) + random_boundary_pairs(f, pair_budget, seed)
    mixed = boundary + random_disk_pairs(f, pair_budget, seed)
    qb = boundary.quotients(w)
    qm = mixed.quotients(w)
    b = float(np.max(qb)) if qb.size else 0.0
    m = float(np.max(qm)) if qm.size else 0.0
    if b < 1e-14:
        if m < 1e-14:
            return TamrazovResult(1.0, m, b, degenerate=True)
        raise InconsistentSampleError(
            f"boundary seminorm {b!r} vanishes while the disk seminorm is {m!r}")
    return TamrazovResult(m / b, m, b)


def key0_sweep(f: BoundaryFunction, w: Modulus, radii: Sequence[float], deltas: Sequence[float],
               directions: int = 32) -> list:
    """Radial sweep of exp P[log(|f - f(xi)| + delta)](rho xi) against omega(1 - rho) + delta.

    Rows: (rho, delta, max over directions of the exponential, omega(1 - rho),
    ratio of the two). No target values exist for these numbers.
    """
    n = f.n
    vals = f.values
    idx = np.arange(0, n, max(1, n // directions))
    theta = uniform_grid(n)
    rows = []
    for rho in radii:
        om = float(w(1.0 - rho))
        for delta in deltas:
            worst = 0.0
            for k in idx:
                with np.errstate(divide="ignore"):
                    u = np.log(np.abs(vals - vals[k]) + delta)
                u_eff, _ = prepare_log_modulus(u)
                worst = max(worst, math.exp(poisson_transform(u_eff, rho * cmath.exp(1j * theta[k]))))
            rows.append((float(rho), float(delta), worst, om, worst / (om + delta)))
    return rows


# ------------------------------------------------------------------ zero sets


def zero_set_estimate(f: BoundaryFunction, tol: float) -> ClosedBoundarySet:
    """Grid points with |f| <= tol, merged into closed arcs of consecutive points."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    small = np.abs(f.values) <= tol
    n = f.n
    theta = uniform_grid(n)
    if np.all(small):
        warnings.warn("all samples are below tol; returning the whole circle", RuntimeWarning,
                      stacklevel=2)
        return ClosedBoundarySet.whole_circle()
    if not np.any(small):
        return ClosedBoundarySet.empty_set()
    # rotate so index 0 is outside every cluster, then scan runs
    start = int(np.flatnonzero(~small)[0])
    order = (start + np.arange(n)) % n
    pieces = []
    run = None
    for k in order:
        if small[k]:
            run = (k, k) if run is None else (run[0], k)
        elif run is not None:
            pieces.append((theta[run[0]], theta[run[1]]))
            run = None
    if run is not None:
        pieces.append((theta[run[0]], theta[run[1]]))
    return ClosedBoundarySet.from_closed_arcs(pieces)

