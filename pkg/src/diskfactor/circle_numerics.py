"""Geometry and harmonic analysis on the unit circle.

Boundary data live on the uniform grid theta_k = 2*pi*k/n with n a power of
two. Harmonic and analytic extensions into the disk are computed from the
discrete Fourier coefficients of the samples, which makes them exact for
trigonometric polynomials of degree below n/2 and equal to the trapezoidal
rule applied to the trigonometric interpolant otherwise.

All distances are Euclidean chords |z - w|, never arc length.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import EmptySetError, GridError, QuadratureAccuracyError, UnboundedModulusError

TWO_PI = 2.0 * math.pi
DEFAULT_GRID = 4096
LOG_CLIP = -50.0
# relative size below which a sample counts as an exact zero
ZERO_RTOL = 1e-13
# angular separation below which two points of a finite set are identified
POINT_MERGE_TOL = 1e-12


def canonical_angle(theta):
    """Reduce angle(s) into [0, 2*pi)."""
    t = np.mod(theta, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    t = np.where(t >= TWO_PI, 0.0, t)
    if np.ndim(t) == 0:
        return float(t)
    return t


def chord(theta1, theta2):
    """Chord length between e^{i theta1} and e^{i theta2}."""
    return 2.0 * np.abs(np.sin((np.asarray(theta1) - np.asarray(theta2)) / 2.0))


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def check_grid_size(n: int) -> int:
    if int(n) != n or not is_power_of_two(int(n)) or n < 8:
        raise GridError(f"grid size must be a power of two >= 8, got {n}")
    return int(n)


def uniform_grid(n: int) -> np.ndarray:
    """Angles 2*pi*k/n, k = 0..n-1, of the uniform circle grid."""
    n = check_grid_size(n)
    return TWO_PI * np.arange(n) / n


@dataclass(frozen=True)
class CirclePoint:
    """A point e^{i theta} of the unit circle, angle kept in [0, 2*pi)."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", canonical_angle(float(self.theta)))

    @classmethod
    def from_complex(cls, z: complex) -> "CirclePoint":
        z = complex(z)
        if not math.isclose(abs(z), 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"{z} is not on the unit circle")
        return cls(math.atan2(z.imag, z.real))

    @property
    def z(self) -> complex:
        return complex(math.cos(self.theta), math.sin(self.theta))


def _point(p) -> CirclePoint:
    if isinstance(p, CirclePoint):
        return p
    return CirclePoint(float(p))


@dataclass(frozen=True)
class Arc:
    """Open arc traversed counterclockwise from ``a`` to ``b``.

    ``a == b`` denotes the circle with the single point ``a`` removed
    (length 2*pi); this is the complement of a one-point set.
    """

    a: CirclePoint
    b: CirclePoint

    def __post_init__(self):
        object.__setattr__(self, "a", _point(self.a))
        object.__setattr__(self, "b", _point(self.b))

    @property
    def length(self) -> float:
        d = canonical_angle(self.b.theta - self.a.theta)
        return TWO_PI if d == 0.0 else d

    def offset(self, theta):
        return canonical_angle(np.asarray(theta, dtype=float) - self.a.theta)

    def contains(self, theta):
        off = self.offset(theta)
        return (off > 0.0) & (off < self.length)

    def shrink(self, eps: float) -> "Arc":
        """The arc (a e^{i eps}, b e^{-i eps})."""
        if not 0.0 <= eps or 2.0 * eps >= self.length:
            raise ValueError(f"eps={eps} does not leave a nonempty arc")
        return Arc(CirclePoint(self.a.theta + eps), CirclePoint(self.b.theta - eps))


@dataclass(frozen=True)
class ArcUnion:
    """Finite union of pairwise-disjoint open arcs, sorted by start angle."""

    arcs: tuple = ()

    def __post_init__(self):
        arcs = tuple(sorted(self.arcs, key=lambda arc: arc.a.theta))
        object.__setattr__(self, "arcs", arcs)
        k = len(arcs)
        if sum(arc.length for arc in arcs) > TWO_PI + 1e-12:
            raise ValueError("arcs overlap: total length exceeds 2*pi")
        if k > 1:
            for i, cur in enumerate(arcs):
                nxt = arcs[(i + 1) % k]
                gap = canonical_angle(nxt.a.theta - cur.a.theta)
                if gap == 0.0 or gap < cur.length - 1e-12:
                    raise ValueError(f"arcs {cur} and {nxt} overlap")

    def __len__(self):
        return len(self.arcs)

    def __iter__(self):
        return iter(self.arcs)

    @property
    def total_length(self) -> float:
        return float(sum(arc.length for arc in self.arcs))

    def indicator(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape, dtype=bool)
        for arc in self.arcs:
            out |= arc.contains(theta)
        return out

    def cell_fraction(self, n: int) -> np.ndarray:
        """Fraction of each grid cell [theta_k - h/2, theta_k + h/2] covered by the union.

        Used as quadrature weights for integrals over the union: a set of
        measure zero gets weight zero, unlike a pointwise indicator.
        """
        h = TWO_PI / check_grid_size(n)
        lo = uniform_grid(n) - h / 2
        cover = np.zeros(n)
        for arc in self.arcs:
            start, end = arc.a.theta, arc.a.theta + arc.length
            for shift in (-TWO_PI, 0.0, TWO_PI):
                cover += np.clip(np.minimum(lo + h, end + shift) - np.maximum(lo, start + shift), 0.0, h)
        return np.clip(cover / h, 0.0, 1.0)

    def to_json(self) -> list:
        return [{"a_theta": arc.a.theta, "b_theta": arc.b.theta} for arc in self.arcs]


@dataclass(frozen=True)
class ClosedBoundarySet:
    """Closed E in the circle, stored as the open arcs of its complement.

    ``complement == ()`` is the whole circle. The empty set has no arc
    representation and is flagged with ``empty=True``.
    """

    complement: ArcUnion = field(default_factory=ArcUnion)
    empty: bool = False

    @classmethod
    def whole_circle(cls) -> "ClosedBoundarySet":
        return cls(ArcUnion(()))

    @classmethod
    def empty_set(cls) -> "ClosedBoundarySet":
        return cls(ArcUnion(()), empty=True)

    @classmethod
    def from_arcs(cls, arcs: Iterable[Arc]) -> "ClosedBoundarySet":
        return cls(ArcUnion(tuple(arcs)))

    @classmethod
    def from_points(cls, angles: Iterable[float]) -> "ClosedBoundarySet":
        """Finite set {e^{i t} : t in angles}; points closer than POINT_MERGE_TOL are merged."""
        raw = sorted({canonical_angle(float(t)) for t in angles})
        if not raw:
            return cls.empty_set()
        pts = [raw[0]]
        for t in raw[1:]:
            if t - pts[-1] > POINT_MERGE_TOL:
                pts.append(t)
        if len(pts) > 1 and pts[0] + TWO_PI - pts[-1] <= POINT_MERGE_TOL:
            pts.pop()
        k = len(pts)
        return cls(ArcUnion(tuple(Arc(pts[i], pts[(i + 1) % k]) for i in range(k))))

    @classmethod
    def from_closed_arcs(cls, pieces: Sequence[tuple]) -> "ClosedBoundarySet":
        """Union of closed arcs [a, b] (counterclockwise); a == b is a point.

        Pieces must be pairwise disjoint.
        """
        if not pieces:
            return cls.empty_set()
        pieces = sorted(
            ((canonical_angle(a), canonical_angle(b)) for a, b in pieces),
            key=lambda p: p[0],
        )
        k = len(pieces)
        arcs = []
        for i, (_, b) in enumerate(pieces):
            arcs.append(Arc(b, pieces[(i + 1) % k][0]))
        return cls(ArcUnion(tuple(arcs)))

    @property
    def is_whole_circle(self) -> bool:
        return not self.empty and len(self.complement) == 0

    @property
    def measure(self) -> float:
        if self.empty:
            return 0.0
        return max(TWO_PI - self.complement.total_length, 0.0)

    def contains(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.empty:
            return np.zeros(theta.shape, dtype=bool)
        return ~self.complement.indicator(theta)

    def endpoints(self) -> list:
        """Sorted distinct arc endpoints (these belong to E)."""
        pts = set()
        for arc in self.complement:
            pts.add(arc.a.theta)
            pts.add(arc.b.theta)
        return sorted(pts)

    def to_json(self) -> list:
        if self.empty:
            return [{"a_theta": 0.0, "b_theta": 0.0, "full": True}]
        return self.complement.to_json()

    @classmethod
    def from_json(cls, data) -> "ClosedBoundarySet":
        if isinstance(data, dict):
            data = data.get("complement", data.get("arcs", []))
        if len(data) == 1 and data[0].get("full"):
            return cls.empty_set()
        return cls.from_arcs(Arc(d["a_theta"], d["b_theta"]) for d in data)


def chordal_distance(xi, E: ClosedBoundarySet):
    """Chordal distance from point(s) e^{i xi} to the closed set E.

    The nearest point of E to a point inside a complementary arc is one of
    that arc's endpoints, so only endpoints are ever compared.
    """
    if E.empty:
        raise EmptySetError("distance to the empty set is undefined")
    if isinstance(xi, CirclePoint):
        xi = xi.theta
    scalar = np.ndim(xi) == 0
    theta = np.asarray(xi, dtype=float)
    d = np.zeros(theta.shape)
    for arc in E.complement:
        inside = arc.contains(theta)
        if not np.any(inside):
            continue
        off = arc.offset(theta[inside])
        to_a = 2.0 * np.sin(off / 2.0)
        to_b = 2.0 * np.sin((arc.length - off) / 2.0)
        d[inside] = np.minimum(to_a, to_b)
    return float(d) if scalar else d


def gamma_exhaustion(E: ClosedBoundarySet, N: int) -> ArcUnion:
    """Union of the N longest complementary arcs of E.

    Ties go to the smaller start angle; N beyond the arc count returns the
    whole complement, N = 0 the empty union.
    """
    if E.empty or len(E.complement) == 0:
        raise ValueError("E has no complementary arcs")
    if N < 0:
        raise ValueError("N must be nonnegative")
    ranked = sorted(E.complement.arcs, key=lambda arc: (-arc.length, arc.a.theta))
    return ArcUnion(tuple(ranked[:N]))


@dataclass(frozen=True)
class GridFunction:
    """Samples on the uniform grid theta_k = 2*pi*k/n."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        if vals.ndim != 1:
            raise GridError("grid samples must be one-dimensional")
        check_grid_size(vals.size)
        if not np.all(np.isfinite(vals)):
            raise GridError("grid samples must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def thetas(self) -> np.ndarray:
        return uniform_grid(self.n)

    @property
    def is_real(self) -> bool:
        return self.values.dtype.kind == "f" or not np.any(self.values.imag)

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "theta", "re", "im"])
        vals = self.values.astype(complex)
        for k, (t, v) in enumerate(zip(self.thetas, vals)):
            w.writerow([k, repr(float(t)), repr(float(v.real)), repr(float(v.imag))])

    @classmethod
    def read_csv(cls, fh: TextIO) -> "GridFunction":
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
        header, body = rows[0], rows[1:]
        idx = {name: i for i, name in enumerate(header)}
        body.sort(key=lambda r: int(r[idx["k"]]))
        re = np.array([float(r[idx["re"]]) for r in body])
        im = np.array([float(r[idx["im"]]) for r in body])
        return cls(re if not np.any(im) else re + 1j * im)


def _samples(u) -> np.ndarray:
    if isinstance(u, GridFunction):
        return u.values
    arr = np.asarray(u)
    check_grid_size(arr.size)
    return arr


def _real_samples(u) -> np.ndarray:
    arr = _samples(u)
    if arr.dtype.kind == "c":
        if np.any(arr.imag):
            raise GridError("expected real samples")
        arr = arr.real
    return arr.astype(float)


def herglotz_coefficients(u) -> np.ndarray:
    """Taylor coefficients of the Herglotz integral of real samples u.

    (1/2pi) int (e^{it}+z)/(e^{it}-z) u dt = c_0 + 2 sum_{k>=1} c_k z^k; the
    Nyquist mode contributes c_{n/2} z^{n/2} (its analytic completion).
    """
    u = _real_samples(u)
    n = u.size
    c = np.fft.fft(u) / n
    half = n // 2
    coeffs = np.empty(half + 1, dtype=complex)
    coeffs[0] = c[0].real
    coeffs[1:half] = 2.0 * c[1:half]
    coeffs[half] = c[half].real
    return coeffs


def check_interior(z, n: int) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    limit = 1.0 - 1.0 / n
    if np.any(np.abs(z) > limit + 1e-15):
        raise QuadratureAccuracyError(
            f"|z| = {float(np.max(np.abs(z))):.6g} exceeds 1 - 1/n = {limit:.6g} for n = {n}"
        )
    return z


def herglotz_transform(u, z, coeffs: np.ndarray | None = None):
    """(1/2pi) int (e^{it}+z)/(e^{it}-z) u(t) dt for |z| <= 1 - 1/n."""
    n = _samples(u).size
    zz = check_interior(z, n)
    if coeffs is None:
        coeffs = herglotz_coefficients(u)
    val = P.polyval(zz, coeffs)
    return complex(val) if np.ndim(z) == 0 else val


def poisson_transform(u, z):
    """Harmonic extension (1/2pi) int (1-|z|^2)/|e^{it}-z|^2 u(t) dt."""
    val = herglotz_transform(u, z)
    return float(np.real(val)) if np.ndim(z) == 0 else np.real(val)


def conjugate_samples(u) -> GridFunction:
    """Discrete conjugate function: multiplier -i sgn(k), Nyquist and mean zeroed."""
    u = _real_samples(u)
    n = u.size
    c = np.fft.fft(u)
    k = np.fft.fftfreq(n, d=1.0 / n)
    mult = -1j * np.sign(k)
    mult[n // 2] = 0.0
    return GridFunction(np.real(np.fft.ifft(c * mult)))


def analytic_extension(samples, z):
    """Cauchy extension sum_{k=0}^{n/2-1} c_k z^k of boundary samples of an analytic function."""
    vals = _samples(samples).astype(complex)
    n = vals.size
    zz = check_interior(z, n)
    c = np.fft.fft(vals) / n
    val = P.polyval(zz, c[: n // 2])
    return complex(val) if np.ndim(z) == 0 else val


def trig_interpolate(samples, theta):
    """Symmetric trigonometric interpolant of grid samples at angles theta."""
    vals = _samples(samples).astype(complex)
    n = vals.size
    c = np.fft.fft(vals) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    theta = np.asarray(theta, dtype=float)
    modes = np.exp(1j * np.multiply.outer(theta, k[: n // 2]))
    out = modes @ c[: n // 2]
    neg = np.exp(1j * np.multiply.outer(theta, k[n // 2 + 1 :]))
    out = out + neg @ c[n // 2 + 1 :]
    out = out + c[n // 2] * np.cos(n // 2 * theta)
    return out


def _clip(u, clip):
    u = np.array(_real_samples(u), dtype=float)
    if np.any(np.isnan(u)) or np.any(u == np.inf):
        raise UnboundedModulusError("log-modulus contains NaN or +inf")
    finite = u[np.isfinite(u)]
    top = float(np.max(finite)) if finite.size else clip
    mask = (u < clip) | (u < top + math.log(ZERO_RTOL))
    return np.where(mask, clip, u), mask


def _fit_isolated(samples: np.ndarray, mask: np.ndarray) -> list:
    """(j, order, v0) for each masked node with three unmasked neighbours on both sides.

    Near such a node u = m log|2 sin((t - t_j)/2)| + v0 + c (t - t_j)^2; m, v0, c
    are fitted from the symmetric neighbour averages at offsets 1, 2, 3.
    """
    n = samples.size
    if not np.any(mask) or np.all(mask):
        return []
    h = TWO_PI / n
    s = np.array([1, 2, 3])
    design = np.column_stack([np.log(2.0 * np.sin(s * h / 2.0)), np.ones(3), s.astype(float) ** 2])
    fits = []
    for j in np.flatnonzero(mask):
        near = (j + np.concatenate([s, -s])) % n
        if np.any(mask[near]):
            continue
        avg = 0.5 * (samples[(j + s) % n] + samples[(j - s) % n])
        order, v0, _ = np.linalg.solve(design, avg)
        if order > 0:
            fits.append((int(j), float(order), float(v0)))
    return fits


def prepare_log_modulus(u, clip: float = LOG_CLIP, correct_isolated: bool = True):
    """Clip a sampled log-modulus and repair isolated logarithmic singularities.

    Samples below ``clip`` (including -inf) and samples more than
    log(1/ZERO_RTOL) below the maximum are marked in the returned mask and set
    to ``clip``. A marked node whose three neighbours on each side are unmarked
    is treated as a zero of order m of the underlying function: near it
    u = m log|2 sin((t - t_j)/2)| + v(t), and the trapezoidal rule is exact to
    high order if the node carries v(t_j) - m log n.

    Returns ``(samples, mask)``.
    """
    out, mask = _clip(u, clip)
    if correct_isolated:
        n = out.size
        for j, order, v0 in _fit_isolated(out, mask):
            out[j] = v0 - order * math.log(n)
    return out, mask


def log_kernel(theta0: float, n: int) -> np.ndarray:
    """Samples of log|1 - e^{i(t - theta0)}| on the grid; at t = theta0 the value -log n.

    The node value makes the grid mean exactly zero, matching the integral.
    """
    t = uniform_grid(n) - theta0
    with np.errstate(divide="ignore"):
        out = np.log(np.abs(2.0 * np.sin(t / 2.0)))
    return np.where(np.isfinite(out) & (np.abs(np.exp(1j * t) - 1.0) > 1e-14), out, -math.log(n))


def log_kernel_conjugate(theta0: float, n: int) -> np.ndarray:
    """Conjugate function of log|1 - e^{i(t - theta0)}|: (phi - pi)/2 with phi in (0, 2pi), 0 at phi = 0."""
    phi = canonical_angle(uniform_grid(n) - theta0)
    return np.where(phi == 0.0, 0.0, (phi - math.pi) / 2.0)


def split_log_modulus(u, clip: float = LOG_CLIP):
    """Separate isolated logarithmic singularities from a sampled log-modulus.

    Returns ``(smooth, mask, singular)`` with ``singular`` a tuple of
    (theta_j, order_j) such that on the grid

        prepare_log_modulus(u)[0] = smooth + sum_j order_j * log_kernel(theta_j, n).

    The Herglotz extension of order * log_kernel(theta_j) is
    order * log(1 - z e^{-i theta_j}), so the singular part can be handled in
    closed form and only ``smooth`` needs quadrature.
    """
    out, mask = _clip(u, clip)
    n = out.size
    fits = _fit_isolated(out, mask)
    for j, order, v0 in fits:
        out[j] = v0 - order * math.log(n)
    thetas = uniform_grid(n)
    singular = tuple((float(thetas[j]), order) for j, order, _ in fits)
    smooth = out.copy()
    for theta0, order in singular:
        smooth -= order * log_kernel(theta0, n)
    return smooth, mask, singular
