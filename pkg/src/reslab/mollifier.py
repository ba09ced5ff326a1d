"""Moment-vanishing mollifiers and the regularized trace ``Tr Q_eps L^n``.

The kernel is a combination of dilated copies of one radial bump,

    qbar(x) = sum_i a_i s_i^{-2} b(x / s_i),     s_i = 2^{-i},  i = 0 .. r/2,

with amplitudes chosen so that ``int qbar = 1`` and all even moments of order
``2 .. r`` vanish (odd moments vanish by symmetry).  ``q_eps(x) = eps^{-2} qbar(x/eps)``.

The trace ``int q_eps(x - T^n x) dx`` is integrated in local coordinates around
each point of ``Fix(T^n)``; a global grid version is kept as a slow oracle.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.spatial import cKDTree

from ._parallel import ordered_map
from .errors import ErrorFloorReached, MomentSystemSingular, SupportOverlap
from .periodic_orbits import FixedPointSet, enumerate_fix
from .torus_maps import MapSpec, torus_delta, wrap01
from . import kernels

MAX_ORDER = 8
QUADRATURE_FLOOR = 1e-11
BOX_FACTOR = 1.15
MIN_RESOLUTION = 128
MAX_RESOLUTION = 2048
CONVERGENCE_TOL = 1e-13


def bump(r2):
    """Unnormalized bump ``exp(-1/(1-|x|^2))`` as a function of ``|x|^2``."""
    r2 = np.asarray(r2, dtype=np.float64)
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


@lru_cache(maxsize=None)
def bump_mass() -> float:
    """``int_{R^2} b = 2 pi int_0^1 exp(-1/(1-r^2)) r dr``."""
    val, _ = integrate.quad(lambda r: math.exp(-1.0 / (1.0 - r * r)) * r, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return 2.0 * math.pi * val


@dataclass(frozen=True)
class MollifierKernel:
    r: int
    epsilon: float
    node_amplitudes: tuple[tuple[float, float], ...]
    support_radius: float

    def __call__(self, x) -> np.ndarray:
        """``q_eps`` at points ``x`` of shape ``(..., 2)``."""
        x = np.asarray(x, dtype=np.float64)
        r2 = (x[..., 0] ** 2 + x[..., 1] ** 2) / self.epsilon**2
        out = np.zeros(r2.shape)
        for s, a in self.node_amplitudes:
            out += (a / s**2) * bump(r2 / s**2)
        return out / (bump_mass() * self.epsilon**2)

    def default_resolution(self) -> int:
        """Grid size resolving the narrowest bump with at least 64 points across its radius."""
        s_min = min(s for s, _ in self.node_amplitudes)
        return max(1024, int(round(128 / s_min)))

    def moments(self, resolution: int | None = None) -> dict[tuple[int, int], float]:
        """``int x^alpha q_eps`` for ``|alpha| <= max(r, 1)`` by a midpoint grid on the support square."""
        resolution = self.default_resolution() if resolution is None else resolution
        e = self.support_radius
        h = 2 * e / resolution
        u = -e + h * (np.arange(resolution) + 0.5)
        X, Y = np.meshgrid(u, u, indexing="ij")
        q = self(np.stack([X, Y], axis=-1)) * h * h
        out = {}
        for total in range(0, max(self.r, 1) + 1):
            for p in range(total + 1):
                out[(p, total - p)] = float(np.sum(q * X**p * Y ** (total - p)))
        return out


def build_kernel(r: int, epsilon: float) -> MollifierKernel:
    """Mollifier of even order ``r`` (0 .. 8) and radius ``epsilon``.

    Odd ``r`` is rejected: odd moments of an even kernel vanish anyway, so
    order ``r`` costs the same as ``r + 1``.
    """
    if not isinstance(r, (int, np.integer)) or r < 0:
        raise ValueError(f"moment order must be a non-negative integer, got {r!r}")
    if r % 2:
        raise ValueError(f"moment order r={r} is odd; odd moments vanish by symmetry, use r={r + 1}")
    if r > MAX_ORDER:
        raise ValueError(f"moment order r={r} exceeds the supported maximum {MAX_ORDER}")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    m = r // 2
    s = 0.5 ** np.arange(m + 1)
    # radial moments of b(x/s)/s^2 scale like s^(2p)
    V = s[None, :] ** (2 * np.arange(m + 1))[:, None]
    rhs = np.zeros(m + 1)
    rhs[0] = 1.0
    if np.linalg.cond(V) > 1e12:
        raise MomentSystemSingular(f"moment system for r={r} is singular")
    a = np.linalg.solve(V, rhs)
    return MollifierKernel(int(r), float(epsilon), tuple((float(si), float(ai)) for si, ai in zip(s, a)), float(epsilon))


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------


@dataclass
class TraceResult:
    value: float
    contributions: np.ndarray
    resolutions: np.ndarray
    fixed_points: FixedPointSet = field(repr=False)

    @property
    def branch_count(self) -> int:
        return int(np.count_nonzero(self.contributions))


def _phi(spec: MapSpec, n: int, x: np.ndarray) -> np.ndarray:
    """``x - T^n x`` on the torus, for ``x`` near a fixed point."""
    img, _ = kernels.iterate_with_jacobian(*spec.kernel_args(), x.reshape(-1, 2), n)
    return torus_delta(x.reshape(-1, 2) - img).reshape(x.shape)


def _box_integral(spec, kernel, n, x0, L_inv, half, M):
    h = 2 * half / M
    u = -half + h * (np.arange(M) + 0.5)
    U1, U2 = np.meshgrid(u, u, indexing="ij")
    U = np.stack([U1, U2], axis=-1)
    X = wrap01(x0 + U @ L_inv.T)
    vals = kernel(_phi(spec, n, X))
    edge = max(np.abs(vals[[0, -1], :]).max(), np.abs(vals[:, [0, -1]]).max())
    return float(vals.sum()) * h * h * abs(np.linalg.det(L_inv)), edge


def _local_trace(spec, kernel, n, x0, jac, tol, max_resolution):
    L_inv = np.linalg.inv(np.eye(2) - jac)
    half = BOX_FACTOR * kernel.support_radius
    while True:
        prev, edge = _box_integral(spec, kernel, n, x0, L_inv, half, MIN_RESOLUTION)
        if edge == 0.0:
            break
        half *= 1.5  # nonlinearity pushed mass to the box edge: widen
    M = MIN_RESOLUTION
    while M < max_resolution:
        M *= 2
        cur, _ = _box_integral(spec, kernel, n, x0, L_inv, half, M)
        if abs(cur - prev) <= tol:
            return cur, M, half, L_inv
        prev = cur
    return prev, M, half, L_inv


def _check_overlap(points, radii):
    if len(points) < 2:
        return
    tree = cKDTree(wrap01(points), boxsize=1.0)
    pairs = tree.query_pairs(2 * float(radii.max()), p=np.inf, output_type="ndarray")
    for i, j in pairs:
        d = float(np.max(np.abs(torus_delta(points[i] - points[j]))))
        if d < radii[i] + radii[j]:
            raise SupportOverlap(f"localization boxes of fixed points {i} and {j} intersect (distance {d:.3g})")


def mollified_trace_detail(
    spec: MapSpec,
    kernel: MollifierKernel,
    n: int,
    *,
    fixed_points: FixedPointSet | None = None,
    tol: float = CONVERGENCE_TOL,
    max_resolution: int = MAX_RESOLUTION,
) -> TraceResult:
    fps = enumerate_fix(spec, n) if fixed_points is None else fixed_points
    if len(fps) == 0:
        return TraceResult(0.0, np.zeros(0), np.zeros(0, dtype=int), fps)
    L_invs = np.linalg.inv(np.eye(2)[None] - fps.jacobians)
    radii = BOX_FACTOR * kernel.support_radius * np.abs(L_invs).sum(axis=2).max(axis=1)
    _check_overlap(fps.points, radii)
    res = ordered_map(
        lambda i: _local_trace(spec, kernel, n, fps.points[i], fps.jacobians[i], tol, max_resolution), range(len(fps))
    )
    contrib = np.array([r[0] for r in res])
    # boxes may have been widened; recheck with the final sizes
    final_radii = np.array([r[2] * np.abs(r[3]).sum(axis=1).max() for r in res])
    _check_overlap(fps.points, final_radii)
    return TraceResult(math.fsum(contrib.tolist()), contrib, np.array([r[1] for r in res]), fps)


def mollified_trace(spec: MapSpec, kernel: MollifierKernel, n: int, **kwargs) -> float:
    """``int q_eps(x - T^n x) dx`` summed over local boxes around ``Fix(T^n)``.

    Each box is ``x* + (Id - D T^n(x*))^{-1} [-1.15 eps, 1.15 eps]^2`` (widened if the
    integrand reaches its edge); its midpoint grid is refined from 128 until two
    successive values agree to ``1e-13`` or 2048 points per side is reached.
    Raises :class:`SupportOverlap` when boxes of distinct fixed points intersect.
    """
    return mollified_trace_detail(spec, kernel, n, **kwargs).value


def global_trace(spec: MapSpec, kernel: MollifierKernel, n: int, grid: int = 2048, block: int = 256) -> float:
    """Slow oracle: midpoint rule for ``int q_eps(x - T^n x) dx`` over the whole torus."""
    h = 1.0 / grid
    g = h * (np.arange(grid) + 0.5)
    total = []
    for s in range(0, grid, block):
        X1, X2 = np.meshgrid(g[s : s + block], g, indexing="ij")
        X = np.stack([X1, X2], axis=-1)
        total.append(float(kernel(_phi(spec, n, X)).sum()))
    return math.fsum(total) * h * h


# ---------------------------------------------------------------------------
# error scaling
# ---------------------------------------------------------------------------


@dataclass
class ScalingResult:
    n: int
    r: int
    epsilons: list[float]
    traces: list[float]
    gamma_ref: float
    abs_errors: list[float]
    slope: float
    floor_reached: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epsilon", "trace", "gamma_ref", "abs_error"])
        for e, t, a in zip(self.epsilons, self.traces, self.abs_errors):
            w.writerow([repr(e), repr(t), repr(self.gamma_ref), repr(a)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "slope": None if math.isnan(self.slope) else self.slope,
            "floor_reached": self.floor_reached,
            "gamma_ref": self.gamma_ref,
        }

    def to_json(self) -> str:
        d = self.summary()
        d["rows"] = [
            {"epsilon": e, "trace": t, "abs_error": a} for e, t, a in zip(self.epsilons, self.traces, self.abs_errors)
        ]
        return json.dumps(d, sort_keys=True)


def fit_slope(epsilons, errors) -> float:
    """Least-squares slope of ``log err`` against ``log eps``."""
    x = np.log(np.asarray(epsilons, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def trace_error_scaling(
    spec: MapSpec, n: int, r: int, epsilon_list, *, floor: float = QUADRATURE_FLOOR
) -> ScalingResult:
    """Trace error ``|Tr Q_eps L^n - Gamma_n|`` over a ladder of kernel radii and its log-log slope.

    Errors at or below ``floor`` carry no scaling information.  If any are hit, an
    :class:`ErrorFloorReached` warning is issued and the slope is fitted to the
    points above the floor (NaN if fewer than two remain).
    """
    eps = [float(e) for e in epsilon_list]
    if len(eps) < 4:
        raise ValueError("need at least 4 kernel radii")
    if any(e <= 0 for e in eps):
        raise ValueError("kernel radii must be positive")
    fps = enumerate_fix(spec, n)
    gamma = fps.gamma
    traces = [mollified_trace(spec, build_kernel(r, e), n, fixed_points=fps) for e in eps]
    errors = [abs(t - gamma) for t in traces]
    above = [(e, a) for e, a in zip(eps, errors) if a > floor]
    floor_reached = len(above) < len(eps)
    slope = fit_slope(*zip(*above)) if len(above) >= 2 else math.nan
    if floor_reached:
        warnings.warn(
            f"{len(eps) - len(above)} of {len(eps)} trace errors at the quadrature floor {floor:g}",
            ErrorFloorReached,
            stacklevel=2,
        )
    return ScalingResult(n, r, eps, traces, gamma, errors, slope, floor_reached)
