"""Canonical factorization f = c * U * O on the disk.

Inner functions are finite Blaschke products times atomic singular inner
functions. Outer functions are rebuilt from a sampled log-modulus through the
Herglotz integral (interior) and the conjugate function (boundary).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boundary_functions import BoundaryFunction, omega_norm, DEFAULT_PAIR_BUDGET
from .circle_numerics import (
    TWO_PI,
    ArcUnion,
    CirclePoint,
    ClosedBoundarySet,
    GridFunction,
    analytic_extension,
    check_interior,
    conjugate_samples,
    herglotz_coefficients,
    log_kernel,
    log_kernel_conjugate,
    prepare_log_modulus,
    split_log_modulus,
    uniform_grid,
)
from .errors import NotDivisibleError, SingularEvaluationError
from .moduli import Modulus

# unimodularity tolerance used to validate boundary values of inner functions
UNIMODULAR_TOL = 1e-8
DIVISIBILITY_FACTOR = 1e3


@dataclass(frozen=True)
class ZeroList:
    """Zeros a_k in the open disk with multiplicities."""

    zeros: tuple = ()

    def __post_init__(self):
        clean = []
        for item in self.zeros:
            a, mult = (item, 1) if np.isscalar(item) else item
            a = complex(a)
            if int(mult) != mult or mult < 1:
                raise ValueError(f"multiplicity must be a positive integer, got {mult}")
            if not abs(a) < 1.0:
                raise ValueError(f"zero {a} is not in the open disk")
            clean.append((a, int(mult)))
        object.__setattr__(self, "zeros", tuple(clean))

    def __len__(self):
        return len(self.zeros)

    def expanded(self) -> np.ndarray:
        """Zeros repeated according to multiplicity."""
        return np.array([a for a, m in self.zeros for _ in range(m)], dtype=complex)


@dataclass(frozen=True)
class SingularMeasure:
    """Finite positive combination of point masses on the circle."""

    atoms: tuple = ()

    def __post_init__(self):
        clean = []
        for p, mass in self.atoms:
            p = p if isinstance(p, CirclePoint) else CirclePoint(float(p))
            if not mass > 0:
                raise ValueError(f"atom masses must be positive, got {mass}")
            clean.append((p, float(mass)))
        thetas = [p.theta for p, _ in clean]
        if len(set(thetas)) != len(thetas):
            raise ValueError("atom angles must be distinct")
        object.__setattr__(self, "atoms", tuple(clean))

    def __len__(self):
        return len(self.atoms)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([p.theta for p, _ in self.atoms], dtype=float)

    @property
    def masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms], dtype=float)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())


def blaschke_eval(zl: ZeroList, z):
    """Product of ((|a|/a)(a - z)/(1 - conj(a) z))^m; the factor for a = 0 is z^m."""
    zz = np.asarray(z, dtype=complex)
    if np.any(np.abs(zz) > 1.0 + 1e-12):
        raise ValueError("blaschke_eval is defined on the closed disk")
    out = np.ones(zz.shape, dtype=complex)
    for a, m in zl.zeros:
        if a == 0:
            fac = zz
        else:
            fac = (abs(a) / a) * (a - zz) / (1.0 - np.conj(a) * zz)
        out = out * fac ** m
    return complex(out) if np.ndim(z) == 0 else out


def singular_inner_eval(m: SingularMeasure, z, at_atom: complex | None = None):
    """exp(-(1/2pi) sum_j m_j (zeta_j + z)/(zeta_j - z)).

    Also valid on the circle away from atoms (values there are unimodular).
    At an atom the value is ``at_atom`` if given, otherwise an error.
    """
    zz = np.asarray(z, dtype=complex)
    if np.any(np.abs(zz) > 1.0 + 1e-12):
        raise ValueError("singular_inner_eval is defined on the closed disk")
    expo = np.zeros(zz.shape, dtype=complex)
    hit = np.zeros(zz.shape, dtype=bool)
    for p, mass in m.atoms:
        zeta = p.z
        den = zeta - zz
        at = den == 0
        hit |= at
        with np.errstate(divide="ignore", invalid="ignore"):
            expo = expo + mass * (zeta + zz) / np.where(at, 1.0, den)
    if np.any(hit) and at_atom is None:
        raise SingularEvaluationError("singular inner function evaluated at an atom")
    with np.errstate(over="ignore", under="ignore"):
        out = np.exp(-expo / TWO_PI)
    if np.any(hit):
        out = np.where(hit, at_atom, out)
    return complex(out) if np.ndim(z) == 0 else out


@dataclass(frozen=True)
class InnerFunction:
    blaschke: ZeroList = field(default_factory=ZeroList)
    singular: SingularMeasure = field(default_factory=SingularMeasure)

    @property
    def is_trivial(self) -> bool:
        return len(self.blaschke) == 0 and len(self.singular) == 0

    def __call__(self, z, at_atom: complex | None = None):
        return blaschke_eval(self.blaschke, z) * singular_inner_eval(self.singular, z, at_atom)

    def support_points(self) -> np.ndarray:
        """Zeros (with multiplicity) and atom positions: the set Z of the inner function."""
        return np.concatenate([self.blaschke.expanded(), np.exp(1j * self.singular.thetas)])

    def to_json(self) -> dict:
        return {
            "zeros": [{"re": a.real, "im": a.imag, "mult": m} for a, m in self.blaschke.zeros],
            "atoms": [{"theta": p.theta, "mass": mass} for p, mass in self.singular.atoms],
        }

    @classmethod
    def from_json(cls, data: dict) -> "InnerFunction":
        zeros = tuple((complex(d["re"], d["im"]), int(d.get("mult", 1))) for d in data.get("zeros", []))
        atoms = tuple((CirclePoint(d["theta"]), float(d["mass"])) for d in data.get("atoms", []))
        return cls(ZeroList(zeros), SingularMeasure(atoms))


def blaschke(*zeros) -> InnerFunction:
    """Shorthand: inner function with the given simple zeros."""
    return InnerFunction(ZeroList(tuple((a, 1) for a in zeros)))


def random_inner(rng: np.random.Generator, max_zeros: int = 8, max_abs: float = 0.9,
                 max_atoms: int = 4, max_total_mass: float = TWO_PI) -> InnerFunction:
    """Random nontrivial inner function for property sweeps."""
    while True:
        nz = int(rng.integers(0, max_zeros + 1))
        na = int(rng.integers(0, max_atoms + 1))
        if nz + na > 0:
            break
    r = max_abs * np.sqrt(rng.random(nz))
    zeros = tuple((complex(x), 1) for x in r * np.exp(1j * TWO_PI * rng.random(nz)))
    atoms = ()
    if na:
        weights = rng.random(na) + 1e-3
        total = max_total_mass * rng.random()
        masses = total * weights / weights.sum()
        masses = np.maximum(masses, 1e-6)
        thetas = TWO_PI * rng.random(na)
        atoms = tuple((CirclePoint(t), float(m)) for t, m in zip(thetas, masses))
    return InnerFunction(ZeroList(zeros), SingularMeasure(atoms))


# ------------------------------------------------------------------ outer


@dataclass(frozen=True)
class OuterFunction:
    """Outer function with prescribed boundary log-modulus.

    ``log_modulus`` holds the quadrature-ready samples (clipped, isolated
    zeros repaired); ``clip_mask`` marks grid points where log|f| was not
    usable as given. Accuracy claims exclude masked points.

    Isolated boundary zeros found on the grid are kept in closed form: each
    (theta_j, m_j) in ``singular`` contributes the factor (1 - z e^{-i theta_j})^{m_j},
    and ``coeffs`` are the Herglotz coefficients of the remaining smooth part.
    """

    log_modulus: np.ndarray
    conjugate: np.ndarray
    clip_mask: np.ndarray
    coeffs: np.ndarray
    singular: tuple = ()

    @property
    def n(self) -> int:
        return self.log_modulus.size

    def __call__(self, z):
        zz = check_interior(z, self.n)
        val = np.exp(np.polynomial.polynomial.polyval(zz, self.coeffs))
        for theta, order in self.singular:
            val = val * (1.0 - zz * np.exp(-1j * theta)) ** order
        return complex(val) if np.ndim(z) == 0 else val

    def boundary_values(self) -> np.ndarray:
        return np.exp(self.log_modulus + 1j * self.conjugate)

    @property
    def log_abs_at_zero(self) -> float:
        return float(self.coeffs[0].real)

    def power(self, rho: float) -> "OuterFunction":
        return _frozen_outer(rho * self.log_modulus, rho * self.conjugate, self.clip_mask,
                             rho * self.coeffs, tuple((t, rho * m) for t, m in self.singular))

    def as_boundary_function(self, name: str = "O") -> BoundaryFunction:
        return BoundaryFunction(GridFunction(self.boundary_values()), None, name)

    def write_csv(self, fh) -> None:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["k", "theta", "u", "u_conjugate", "clipped_flag"])
        for k, (t, u, v, c) in enumerate(zip(uniform_grid(self.n), self.log_modulus,
                                             self.conjugate, self.clip_mask)):
            wr.writerow([k, repr(float(t)), repr(float(u)), repr(float(v)), int(c)])


def _frozen_outer(u, conj, mask, coeffs, singular=()) -> OuterFunction:
    arrays = [np.array(u, dtype=float), np.array(conj, dtype=float),
              np.array(mask, dtype=bool), np.array(coeffs, dtype=complex)]
    for arr in arrays:
        arr.setflags(write=False)
    return OuterFunction(*arrays, singular=tuple(singular))


def outer_from_prepared(u: np.ndarray, mask: np.ndarray) -> OuterFunction:
    """Outer function from quadrature-ready log-modulus samples (no clipping applied)."""
    return _frozen_outer(u, conjugate_samples(u).values, mask, herglotz_coefficients(u))


def outer_from_log_modulus(u, correct_isolated: bool = True) -> OuterFunction:
    """Outer function O with log|O| = u on the circle (after clipping).

    With ``correct_isolated`` isolated zeros on the grid are fitted and
    treated in closed form; otherwise the clipped samples are used as is.
    """
    if not correct_isolated:
        prepared, mask = prepare_log_modulus(u, correct_isolated=False)
        return outer_from_prepared(prepared, mask)
    smooth, mask, singular = split_log_modulus(u)
    n = smooth.size
    total = smooth.copy()
    conj = conjugate_samples(smooth).values.copy()
    for theta, order in singular:
        total += order * log_kernel(theta, n)
        conj += order * log_kernel_conjugate(theta, n)
    return _frozen_outer(total, conj, mask, herglotz_coefficients(smooth), singular)


def log_abs(f: BoundaryFunction) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(f.values))


def outer_part(f: BoundaryFunction) -> OuterFunction:
    if not np.any(f.values):
        raise ValueError("f vanishes identically on the grid")
    return outer_from_log_modulus(log_abs(f))


def fill_invalid(values: np.ndarray, invalid: np.ndarray) -> np.ndarray:
    """Replace invalid grid entries by periodic linear interpolation from valid neighbours."""
    values = np.asarray(values, dtype=complex).copy()
    invalid = np.asarray(invalid, dtype=bool)
    if not np.any(invalid):
        return values
    if np.all(invalid):
        raise ValueError("no valid samples to interpolate from")
    n = values.size
    k = np.arange(n)
    good = k[~invalid]
    xp = np.concatenate([good - n, good, good + n])
    fp = np.concatenate([values[good]] * 3)
    bad = k[invalid]
    values[bad] = np.interp(bad, xp, fp.real) + 1j * np.interp(bad, xp, fp.imag)
    return values


@dataclass
class InnerPart:
    U: BoundaryFunction
    outer: OuterFunction
    flagged: np.ndarray
    max_deviation: float


def inner_part(f: BoundaryFunction, tol: float = math.exp(-50.0)) -> InnerPart:
    """Boundary values of U_f = f / O_f (unimodular constant included).

    Grid points in the outer clip mask or with |f| <= tol are flagged; their
    values are interpolated and they are excluded from ``max_deviation``,
    the largest | |U| - 1 | over the remaining points.
    """
    outer = outer_part(f)
    ob = outer.boundary_values()
    flagged = outer.clip_mask | (np.abs(f.values) <= tol)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = f.values / ob
    flagged = flagged | ~np.isfinite(q)
    q = fill_invalid(np.where(flagged, 0.0, q), flagged)
    dev = float(np.max(np.abs(np.abs(q[~flagged]) - 1.0))) if np.any(~flagged) else 0.0
    return InnerPart(BoundaryFunction(GridFunction(q), None, f"U[{f.name}]"), outer, flagged, dev)


# ------------------------------------------------------------------ division


def divisibility_probes(U: InnerFunction, n: int | None = None,
                        levels: Sequence[float] = (5.0, 10.0, 20.0, 40.0)) -> np.ndarray:
    """Interior points where |U| <= 0.1: tiny circles around zeros, radial points below atoms.

    At an atom of mass m the radii are chosen so that the atom alone gives
    |S| = exp(-level). With ``n`` given, probes are kept inside |z| <= 1 - 1/n.
    """
    pts = []
    dirs = np.exp(1j * TWO_PI * np.arange(8) / 8)
    for a, _ in U.blaschke.zeros:
        r = 1e-6 * max(1.0 - abs(a), 1e-3)
        pts.extend(a + r * dirs)
    for p, mass in U.singular.atoms:
        for level in levels:
            K = level * TWO_PI / mass
            rho = max((K - 1.0) / (K + 1.0), 0.0)
            pts.append(rho * p.z)
    pts = np.array(pts, dtype=complex)
    if n is not None and pts.size:
        lim = 1.0 - 1.0 / n
        big = np.abs(pts) > lim
        pts[big] = pts[big] / np.abs(pts[big]) * lim
    if pts.size:
        pts = pts[np.abs(U(pts, at_atom=0.0)) <= 0.1]
    return pts


@dataclass
class DivisionResult:
    quotient: BoundaryFunction
    fpr_ratio: float
    probe_max: float
    quotient_norm: tuple
    f_norm: tuple
    filled: np.ndarray


def check_divisibility(f: BoundaryFunction, U: InnerFunction) -> float:
    """Largest |f/U| over the interior probes; raises NotDivisibleError above 10^3 sup|f|."""
    limit = DIVISIBILITY_FACTOR * f.sup_norm
    pts = divisibility_probes(U, None if f.evaluator is not None else f.n)
    if pts.size == 0:
        return 0.0
    fz = f(pts) if f.evaluator is not None else analytic_extension(f.samples, pts)
    with np.errstate(all="ignore"):
        q = np.abs(fz / U(pts, at_atom=0.0))
    q = np.where(np.isfinite(q), q, np.inf)
    worst = float(np.max(q))
    if worst > limit:
        k = int(np.argmax(q))
        raise NotDivisibleError(
            f"|f/U| = {worst:.3g} at z = {complex(pts[k]):.6g} exceeds {limit:.3g}: "
            "U does not divide f")
    return worst


def _quotient_evaluator(fe, U: InnerFunction):
    def ev(z):
        with np.errstate(all="ignore"):
            return np.asarray(fe(z), dtype=complex) / U(z, at_atom=np.nan)

    return ev


def divide_by_inner(f: BoundaryFunction, U: InnerFunction, w: Modulus,
                    pair_budget: int = DEFAULT_PAIR_BUDGET, seed: int = 0) -> DivisionResult:
    """Quotient f/U with the measured F-property ratio ||f/U||_omega / ||f||_omega."""
    probe_max = check_divisibility(f, U)
    theta = uniform_grid(f.n)
    ub = U(np.exp(1j * theta), at_atom=np.nan)
    invalid = ~np.isfinite(ub) | (np.abs(np.abs(ub) - 1.0) > UNIMODULAR_TOL)
    with np.errstate(all="ignore"):
        q = f.values / ub
    invalid |= ~np.isfinite(q)
    q = fill_invalid(np.where(invalid, 0.0, q), invalid)
    limit = DIVISIBILITY_FACTOR * f.sup_norm
    if np.max(np.abs(q)) > limit:
        raise NotDivisibleError(f"boundary quotient exceeds {limit:.3g}: f/U is not bounded")
    ev = None if f.evaluator is None else _quotient_evaluator(f.evaluator, U)
    quotient = BoundaryFunction(GridFunction(q), ev, f"{f.name}/U")
    qn = omega_norm(quotient, w, pair_budget, seed)
    fn = omega_norm(f, w, pair_budget, seed)
    return DivisionResult(quotient, qn.total / fn.total, probe_max, tuple(qn), tuple(fn), invalid)


def restrict_singular(m: SingularMeasure, K) -> SingularMeasure:
    """Atoms lying in K: closed sets keep their endpoints, open arc unions do not."""
    thetas = m.thetas
    if isinstance(K, ClosedBoundarySet):
        keep = K.contains(thetas)
    elif isinstance(K, ArcUnion):
        keep = K.indicator(thetas)
    else:
        raise TypeError("K must be a ClosedBoundarySet or an ArcUnion")
    return SingularMeasure(tuple(a for a, k in zip(m.atoms, keep) if k))


# ------------------------------------------------------------------ radial estimates


def _angle(xi) -> float:
    return xi.theta if isinstance(xi, CirclePoint) else float(xi)


def counting_function(U: InnerFunction, xi) -> float:
    """a(xi) = sum (1-|a|^2)/|xi-a|^2 (with multiplicity) + (1/pi) sum m_j/|zeta_j - xi|^2."""
    x = np.exp(1j * _angle(xi))
    a = U.blaschke.expanded()
    zeta = np.exp(1j * U.singular.thetas)
    da = np.abs(x - a)
    dz = np.abs(x - zeta)
    if np.any(dz < 1e-15) or np.any(da < 1e-15):
        raise SingularEvaluationError("counting function evaluated at an atom or boundary zero")
    return float(np.sum((1.0 - np.abs(a) ** 2) / da ** 2) + np.sum(U.singular.masses / dz ** 2) / math.pi)


def distance_to_support(U: InnerFunction, xi) -> float:
    pts = U.support_points()
    if pts.size == 0:
        return math.inf
    return float(np.min(np.abs(np.exp(1j * _angle(xi)) - pts)))


@dataclass
class Fpr2Result:
    lhs: float
    rhs: float
    holds: bool | None
    applicable: bool
    distance: float


def fpr2_check(U: InnerFunction, xi, rho: float) -> Fpr2Result:
    """Compare |U(rho xi)| with exp(-(1 - rho) a(xi) / 8) when 1 - rho <= d(xi, Z)."""
    if U.is_trivial:
        raise ValueError("fpr2_check needs a nontrivial inner function")
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    d = distance_to_support(U, xi)
    if 1.0 - rho > d:
        return Fpr2Result(math.nan, math.nan, None, False, d)
    lhs = abs(U(rho * np.exp(1j * _angle(xi))))
    rhs = math.exp(-(1.0 - rho) / 8.0 * counting_function(U, xi))
    return Fpr2Result(lhs, rhs, lhs <= rhs * (1.0 + 1e-9), True, d)


def fpr2_sweep(seed: int, trials: int) -> list:
    """Random (U, xi, rho) triples that satisfy the precondition, each checked."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < trials:
        U = random_inner(rng)
        xi = TWO_PI * rng.random()
        d = distance_to_support(U, xi)
        if d < 1e-12:
            continue
        rho = 1.0 - min(d, 1.0) * (1e-6 + (1.0 - 2e-6) * rng.random())
        out.append((U, xi, rho, fpr2_check(U, xi, rho)))
    return out


@dataclass
class Fpr1Table:
    radii: np.ndarray
    directions: np.ndarray
    values: np.ndarray
    A: float

    @property
    def row_max(self) -> np.ndarray:
        return self.values.max(axis=1)

    @property
    def decreasing(self) -> bool:
        rm = self.row_max
        mono = bool(np.all(np.diff(rm) <= 0))
        return mono and (rm[-1] < rm[0] or rm[0] == 0.0)


def fpr1_profile(f: BoundaryFunction, w: Modulus, radii: Sequence[float], A: float = 8.0,
                 directions: int = 64) -> Fpr1Table:
    """r(rho, xi) = max(0, |O_f(rho xi)| - A |f(xi)|) / omega(1 - rho) on grid directions."""
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must increase")
    outer = outer_part(f)
    idx = np.arange(0, f.n, max(1, f.n // directions))
    theta = uniform_grid(f.n)[idx]
    fb = np.abs(f.values[idx])
    rows = []
    for rho in radii:
        o = np.abs(outer(rho * np.exp(1j * theta)))
        rows.append(np.maximum(0.0, o - A * fb) / float(w(1.0 - rho)))
    return Fpr1Table(radii, theta, np.array(rows), A)
