"""Approximation machinery for closed ideals.

Truncated outer functions f_Gamma, the psi and phi mollifiers, Carleson
integrals, standard-ideal membership tests, and convergence tables for the
approximation schemes built from them. Every scenario has a deliberately
broken variant whose failure is part of the test suite.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .boundary_functions import (
    DEFAULT_PAIR_BUDGET,
    BoundaryFunction,
    lip_profile,
    omega_norm,
)
from .circle_numerics import (
    TWO_PI,
    Arc,
    ArcUnion,
    CirclePoint,
    ClosedBoundarySet,
    GridFunction,
    chordal_distance,
    conjugate_samples,
    gamma_exhaustion,
    herglotz_coefficients,
    log_kernel,
    log_kernel_conjugate,
    uniform_grid,
)
from .errors import EmptySetError, NotDivisibleError, SpecError
from .factorization import (
    InnerFunction,
    OuterFunction,
    SingularMeasure,
    check_divisibility,
    inner_part,
    outer_part,
)
from .moduli import Modulus

DECAY_GATE = 0.1
LIP_BOUND_FACTOR = 10.0


# ------------------------------------------------------------------ building blocks


def truncated_outer(f, G: ArcUnion, complement: bool = False) -> OuterFunction:
    """Outer function with log-modulus log|f| on G and 0 elsewhere.

    ``f`` is a BoundaryFunction or an already computed OuterFunction. With
    ``complement=True`` the log-modulus is kept on the complement of G instead.
    Each grid sample is weighted by the fraction of its cell covered by G, so
    null sets carry no weight and f_G * f_{G^c} = O_f holds exactly on the grid.

    A closed-form boundary zero of O_f stays in closed form on the side whose
    weight at its node exceeds 1/2 (ties go to G); the other side of the
    logarithm is then subtracted by quadrature.
    """
    outer = f if isinstance(f, OuterFunction) else outer_part(f)
    n = outer.n
    weight = G.cell_fraction(n)
    if complement:
        weight = 1.0 - weight
    kernels = [(theta, order, order * log_kernel(theta, n)) for theta, order in outer.singular]
    smooth = outer.log_modulus.copy()
    for _, _, K in kernels:
        smooth -= K
    u = smooth * weight
    kept = []
    for theta, order, K in kernels:
        w_node = weight[int(round(theta / (TWO_PI / n))) % n]
        if w_node > 0.5 or (w_node == 0.5 and not complement):
            u -= K * (1.0 - weight)
            kept.append((theta, order))
        else:
            u += K * weight
    total = u.copy()
    conj = conjugate_samples(u).values.copy()
    for theta, order in kept:
        total += order * log_kernel(theta, n)
        conj += order * log_kernel_conjugate(theta, n)
    return OuterFunction(total, conj, outer.clip_mask & (weight > 0), herglotz_coefficients(u), tuple(kept))


def _points(points) -> np.ndarray:
    return np.array([p.z if isinstance(p, CirclePoint) else complex(np.exp(1j * float(p)))
                     for p in points], dtype=complex)


def psi_mollifier(points, delta: float, n: int) -> BoundaryFunction:
    """psi(z) = prod_k (z conj(a_k) - 1) / (z conj(a_k) - 1 - delta) for points a_k on the circle.

    Vanishes at each a_k and is bounded by 1 in modulus on the closed disk.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    conj_a = np.conj(_points(points))

    def ev(z):
        z = np.asarray(z, dtype=complex)
        out = np.ones(z.shape, dtype=complex)
        for c in conj_a:
            t = z * c - 1.0
            out = out * t / (t - delta)
        return out

    return BoundaryFunction.from_callable(ev, n, f"psi[delta={delta!r}]")


def phi_mollifier(a, b, eps: float, delta: float, n: int) -> BoundaryFunction:
    """Two-factor mollifier vanishing at a e^{i eps} and b e^{-i eps}, inside the arc (a, b)."""
    arc = Arc(a, b).shrink(eps)
    return psi_mollifier([arc.a, arc.b], delta, n)


# ------------------------------------------------------------------ convergence tables


@dataclass
class ConvergenceTable:
    params: np.ndarray
    sup_gap: np.ndarray
    seminorm_gap: np.ndarray
    gate: float = DECAY_GATE

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        self.sup_gap = np.asarray(self.sup_gap, dtype=float)
        self.seminorm_gap = np.asarray(self.seminorm_gap, dtype=float)
        d = np.diff(self.params)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("parameter sequence must be strictly monotone")
        if np.any(self.sup_gap < 0) or np.any(self.seminorm_gap < 0):
            raise ValueError("gaps must be nonnegative")

    @property
    def total_gap(self) -> np.ndarray:
        return self.sup_gap + self.seminorm_gap

    @property
    def decay_ok(self) -> bool:
        """Total gap at the last parameter at most ``gate`` times the first."""
        t = self.total_gap
        return bool(t[-1] <= self.gate * t[0])

    @property
    def monotone(self) -> bool:
        """Total gap strictly decreasing (ties allowed only at exactly zero)."""
        d = np.diff(self.total_gap)
        return bool(np.all((d < 0) | ((d == 0) & (self.total_gap[1:] == 0))))

    def write_csv(self, fh, header: dict | None = None) -> None:
        if header is not None:
            fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["param", "sup_gap", "seminorm_gap", "total_gap"])
        for row in zip(self.params, self.sup_gap, self.seminorm_gap, self.total_gap):
            wr.writerow([repr(float(x)) for x in row])

    @classmethod
    def read_csv(cls, fh) -> "ConvergenceTable":
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))[1:]
        cols = np.array([[float(x) for x in r[:3]] for r in rows])
        return cls(cols[:, 0], cols[:, 1], cols[:, 2])


def convergence_table(family: Sequence[tuple], target: BoundaryFunction, w: Modulus,
                      seed: int = 0, pair_budget: int = DEFAULT_PAIR_BUDGET,
                      gate: float = DECAY_GATE) -> ConvergenceTable:
    """Gaps ||member - target|| (sup and omega-seminorm) along a parameterized family.

    ``family`` is a sequence of (parameter, BoundaryFunction). The same seed is
    used at every parameter, so all gaps are measured on the same pair set.
    """
    params, sups, semis = [], [], []
    for p, member in family:
        if member.n != target.n:
            raise ValueError("family members must share the target's grid")
        gap = omega_norm(member - target, w, pair_budget, seed)
        params.append(p)
        sups.append(gap.sup_norm)
        semis.append(gap.seminorm)
    return ConvergenceTable(params, sups, semis, gate)


# ------------------------------------------------------------------ Carleson sets


def log_sine_integral(x: float, tol: float = 1e-15) -> float:
    """int_0^x -log(2 sin(s/2)) ds for 0 <= x <= pi (Clausen function Cl_2(x)).

    The endpoint singularity -log s is integrated exactly; the smooth remainder
    -log(2 sin(s/2)/s) by Gauss-Legendre with node doubling until two successive
    rules agree to ``tol``.
    """
    if not 0.0 <= x <= math.pi + 1e-12:
        raise ValueError("x must lie in [0, pi]")
    if x == 0.0:
        return 0.0
    exact = x - x * math.log(x)
    prev = None
    m = 8
    while m <= 4096:
        nodes, weights = np.polynomial.legendre.leggauss(m)
        s = 0.5 * x * (nodes + 1.0)
        smooth = 0.5 * x * float(np.dot(weights, -np.log(np.sinc(s / TWO_PI))))
        if prev is not None and abs(smooth - prev) <= tol * max(1.0, abs(smooth)):
            return exact + smooth
        prev = smooth
        m *= 2
    return exact + prev


@dataclass
class CarlesonResult:
    value: float
    divergent: bool
    per_arc: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"value": None if self.divergent else self.value, "divergent": self.divergent,
                "per_arc": self.per_arc}


def carleson_integral(E: ClosedBoundarySet, measure_tol: float = TWO_PI * 1e-12) -> CarlesonResult:
    """(1/2pi) int log(1/d(e^{it}, E)) dt, arc by arc.

    On a complementary arc of length L the distance to E is the chord to the
    nearer endpoint, so the arc contributes 2 Cl_2(L/2). A set of positive
    measure makes the integrand infinite on E itself: the result is divergent.
    """
    if E.empty:
        raise EmptySetError("the Carleson integral of the empty set is undefined")
    if E.measure > measure_tol:
        return CarlesonResult(math.inf, True)
    per_arc = [2.0 * log_sine_integral(arc.length / 2.0) / TWO_PI for arc in E.complement]
    return CarlesonResult(float(math.fsum(per_arc)), False, per_arc)


# ------------------------------------------------------------------ membership


@dataclass
class MembershipReport:
    member: bool
    vanishes: bool
    divisible: bool
    max_near_E: float
    detail: str = ""

    def to_json(self) -> dict:
        return asdict(self)


def standard_membership(f: BoundaryFunction, E: ClosedBoundarySet, U: InnerFunction,
                        tol: float = 1e-6) -> MembershipReport:
    """Numerical test for f vanishing on E with f/U bounded.

    The vanishing clause uses grid points within chordal distance ``tol`` of E
    together with the endpoints of E's complementary arcs (evaluated directly).
    """
    scale = f.sup_norm
    near = []
    if not E.empty:
        theta = uniform_grid(f.n)
        mask = chordal_distance(theta, E) <= tol
        near.extend(np.abs(f.values[mask]))
        ends = E.endpoints() if not E.is_whole_circle else [0.0]
        near.extend(np.abs(f.on_circle(np.array(ends))))
    max_near = float(max(near)) if near else 0.0
    vanishes = max_near <= tol * scale
    details = []
    if not vanishes:
        details.append(f"|f| = {max_near:.3g} near E exceeds {tol * scale:.3g}")
    try:
        check_divisibility(f, U)
        divisible = True
    except NotDivisibleError as exc:
        divisible = False
        details.append(str(exc))
    return MembershipReport(vanishes and divisible, vanishes, divisible, max_near, "; ".join(details))


# ------------------------------------------------------------------ scenarios


def default_bands(n: int, count: int = 6) -> np.ndarray:
    """Decreasing separation bands from 0.5 down to the finest resolvable scale 8 pi / n."""
    return np.geomspace(0.5, 8.0 * math.pi / n, count)


def stalled_exhaustion(E: ClosedBoundarySet, N: int) -> ArcUnion:
    """Broken exhaustion that never includes the longest complementary arc."""
    ranked = sorted(E.complement.arcs, key=lambda arc: (-arc.length, arc.a.theta))
    return ArcUnion(tuple(ranked[1:N + 1]))


def exhaustion(E: ClosedBoundarySet, N: int, stalled: bool = False) -> ArcUnion:
    return stalled_exhaustion(E, N) if stalled else gamma_exhaustion(E, N)


def parse_set(text: str) -> ClosedBoundarySet:
    """Closed set from ``points:<angles>``, ``roots:<k>``, ``arcs:<a>:<b>,...``, ``full``, ``empty``,
    or a path to a JSON list of complementary arcs.

    ``points:1`` means the point 1 = e^{i 0}; points are given as angles in
    radians, except that the literal values 1 and -1 denote the points 1 and -1.
    """
    kind, _, arg = text.partition(":")
    try:
        if kind == "points":
            return ClosedBoundarySet.from_points(_point_angle(t) for t in arg.split(","))
        if kind == "angles":
            return ClosedBoundarySet.from_points(float(t) for t in arg.split(","))
        if kind == "roots":
            k = int(arg)
            return ClosedBoundarySet.from_points(TWO_PI * j / k for j in range(k))
        if kind == "arcs":
            pieces = []
            for item in arg.split(","):
                a, b = item.split("~") if "~" in item else item.split(";")
                pieces.append((float(a), float(b)))
            return ClosedBoundarySet.from_closed_arcs(pieces)
        if text == "full":
            return ClosedBoundarySet.whole_circle()
        if text == "empty":
            return ClosedBoundarySet.empty_set()
        if text.endswith(".json"):
            with open(text) as fh:
                return ClosedBoundarySet.from_json(json.load(fh))
    except (ValueError, KeyError, OSError) as exc:
        raise SpecError(f"bad set spec {text!r}: {exc}") from exc
    raise SpecError(f"unknown set spec {text!r} (use points:, angles:, roots:, arcs:, full, empty, <file>.json)")


def _point_angle(token: str) -> float:
    token = token.strip()
    if token in ("1", "+1"):
        return 0.0
    if token == "-1":
        return math.pi
    raise ValueError(f"point {token!r}: use 1, -1 or angles:<radians>")


@dataclass
class Scenario:
    """Approximation scenario for the outer-truncation schemes.

    kind "prop1": target S g^2, members S g^2 f_{Gamma_N^c} (f defaults to g).
    kind "prop3": target U_g O_g^rho, members U_g O_g^rho g_{Gamma_N^c}.
    """

    name: str
    kind: str
    g: str
    E: ClosedBoundarySet
    measure: SingularMeasure = field(default_factory=SingularMeasure)
    rho: float = 2.0
    gamma_N: int = 6
    omega: str = "holder:0.5"
    grid_n: int = 4096
    seed: int = 0
    f: str | None = None
    start_N: int = 0
    stalled: bool = False
    negative_control: bool = False

    def __post_init__(self):
        if self.kind not in ("prop1", "prop3"):
            raise SpecError(f"scenario kind must be prop1 or prop3, got {self.kind!r}")
        if self.kind == "prop3" and not 1.0 < self.rho <= 2.0:
            raise SpecError("rho must lie in (1, 2]")
        if self.gamma_N <= self.start_N:
            raise SpecError("gamma_N must exceed the starting N")

    def to_json(self) -> dict:
        return {
            "name": self.name, "kind": self.kind, "g": self.g, "f": self.f,
            "E": self.E.to_json(),
            "measure": [{"theta": p.theta, "mass": m} for p, m in self.measure.atoms],
            "rho": self.rho, "gamma_N": self.gamma_N, "start_N": self.start_N,
            "omega": self.omega, "grid_n": self.grid_n, "seed": self.seed,
            "stalled": self.stalled, "negative_control": self.negative_control,
        }

    @classmethod
    def from_json(cls, data: dict, kind: str | None = None) -> "Scenario":
        try:
            E = data["E"]
            E = parse_set(E) if isinstance(E, str) else ClosedBoundarySet.from_json(E)
            atoms = tuple((CirclePoint(d["theta"]), float(d["mass"])) for d in data.get("measure", []))
            return cls(
                name=data.get("name", "custom"), kind=data.get("kind", kind or "prop1"),
                g=data["g"], E=E, measure=SingularMeasure(atoms),
                rho=float(data.get("rho", 2.0)), gamma_N=int(data.get("gamma_N", 6)),
                omega=data.get("omega", "holder:0.5"), grid_n=int(data.get("grid_n", 4096)),
                seed=int(data.get("seed", 0)), f=data.get("f"),
                start_N=int(data.get("start_N", 0)), stalled=bool(data.get("stalled", False)),
                negative_control=bool(data.get("negative_control", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"malformed scenario: {exc}") from exc

    def with_grid(self, n: int) -> "Scenario":
        data = self.to_json()
        data["grid_n"] = n
        return Scenario.from_json(data)


CLUSTER_ANGLES = (0.0, math.pi / 2, -math.pi / 2, math.pi / 4, -math.pi / 4, math.pi / 8, -math.pi / 8)


def scenario_catalog(kind: str, n: int = 4096, seed: int = 0) -> list:
    """Built-in scenarios for ``kind``; the last entry is the negative control.

    N starts at 0 (Gamma_0 empty, member = target * O_f). For E = {1} the single
    complementary arc is covered from N = 1 on. The cluster entry runs until all
    of its complementary arcs are covered.
    """
    one = ClosedBoundarySet.from_points([0.0])
    atom = SingularMeasure(((CirclePoint(0.0), 1.0),))
    cluster = ClosedBoundarySet.from_points(CLUSTER_ANGLES)
    cluster_g = "zeros:" + ",".join(repr(t) for t in CLUSTER_ANGLES)
    measure = atom if kind == "prop1" else SingularMeasure()
    common = dict(kind=kind, rho=2.0, omega="holder:0.5", grid_n=n, seed=seed, measure=measure)
    return [
        Scenario("point", g="oneminusz", E=one, gamma_N=6, **common),
        Scenario("cluster", g=cluster_g, E=cluster, gamma_N=len(CLUSTER_ANGLES), **common),
        Scenario("point-stalled", g="oneminusz", E=one, gamma_N=6, stalled=True,
                 negative_control=True, **common),
    ]


@dataclass
class ScenarioResult:
    scenario: Scenario
    table: ConvergenceTable
    profiles: list
    lip_bound: float

    @property
    def profile_max(self) -> float:
        return float(max(np.max(p.values) for p in self.profiles))

    @property
    def bounded(self) -> bool:
        return bool(np.isfinite(self.profile_max) and self.profile_max <= self.lip_bound)

    @property
    def passed(self) -> bool:
        return self.table.decay_ok and self.bounded


def _singular_boundary(measure: SingularMeasure, n: int) -> BoundaryFunction:
    S = InnerFunction(singular=measure)
    return BoundaryFunction.from_callable(lambda z: S(z, at_atom=0.0), n, "S")


def run_scenario(sc: Scenario, pair_budget: int = DEFAULT_PAIR_BUDGET,
                 bands: Sequence[float] | None = None, gate: float = DECAY_GATE,
                 lip_factor: float = LIP_BOUND_FACTOR) -> ScenarioResult:
    """Convergence table and per-N LipProfiles for one scenario.

    The profiles count as bounded when none exceeds ``lip_factor`` times the
    omega-norm of the target.
    """
    n = sc.grid_n
    w = Modulus.from_spec(sc.omega)
    g = BoundaryFunction.from_spec(sc.g, n)
    if sc.kind == "prop1":
        target = _singular_boundary(sc.measure, n) * g * g
        truncate_from = outer_part(BoundaryFunction.from_spec(sc.f, n) if sc.f else g)
    else:
        U = inner_part(g).U
        outer = outer_part(g)
        target = U * outer.power(sc.rho).as_boundary_function("O^rho")
        truncate_from = outer
    bands = default_bands(n) if bands is None else bands
    family, profiles = [], []
    for N in range(sc.start_N, sc.gamma_N + 1):
        G = exhaustion(sc.E, N, sc.stalled)
        trunc = truncated_outer(truncate_from, G, complement=True)
        member = target * BoundaryFunction(GridFunction(trunc.boundary_values()), None, f"trunc{N}")
        family.append((N, member))
        profiles.append(lip_profile(member, w, bands, sc.seed, pair_budget))
    table = convergence_table(family, target, w, sc.seed, pair_budget, gate)
    bound = lip_factor * omega_norm(target, w, pair_budget, sc.seed).total
    return ScenarioResult(sc, table, profiles, bound)


@dataclass
class MollifierResult:
    table: ConvergenceTable

    @property
    def passed(self) -> bool:
        return self.table.decay_ok and self.table.monotone


def mollifier_scenario(f: BoundaryFunction, points, w: Modulus,
                       deltas: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4), seed: int = 0,
                       pair_budget: int = DEFAULT_PAIR_BUDGET, gate: float = DECAY_GATE) -> MollifierResult:
    """Gaps ||psi_delta f - f||_omega for decreasing delta."""
    family = [(d, psi_mollifier(points, d, f.n) * f) for d in deltas]
    return MollifierResult(convergence_table(family, f, w, seed, pair_budget, gate))
