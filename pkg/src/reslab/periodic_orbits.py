"""Periodic points of torus maps and the weighted sums

    Gamma_n = sum_{x in Fix T^n} 1 / |det(Id - D_x T^n)|.

For ``eps = 0`` the fixed points of ``A^n`` are the rational lattice
``(A^n - I)^{-1} Z^2 / Z^2``, enumerated exactly via a Smith normal form.  For
``eps > 0`` every lattice orbit is continued in ``eps`` by multiple-shooting
Newton on the whole periodic orbit; structural stability keeps the count
``|det(A^n - I)|`` fixed, and a change in count is treated as fatal.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from ._parallel import ordered_map
from .errors import CountCapExceeded, CountMismatch, NewtonDiverged, SingularJacobian
from .torus_maps import (
    IntMatrix,
    MapSpec,
    _as_int_matrix,
    int_det,
    int_matpow,
    iterate_with_jacobian,
    linear_eigen,
    torus_delta,
    wrap01,
)

DEFAULT_COUNT_CAP = 10**6
DEDUP_TOL = 1e-8
SINGULAR_TOL = 1e-10
CHUNK = 8192


# ---------------------------------------------------------------------------
# exact lattice route
# ---------------------------------------------------------------------------


def smith_normal_form_2x2(B) -> tuple[IntMatrix, IntMatrix, int, int]:
    """Return unimodular ``U, V`` and ``d1 | d2`` with ``U B V = diag(d1, d2)`` (up to signs).

    Exact integer arithmetic; ``B`` must be nonsingular.
    """
    M = [[int(B[0][0]), int(B[0][1])], [int(B[1][0]), int(B[1][1])]]
    if M[0][0] * M[1][1] - M[0][1] * M[1][0] == 0:
        raise ValueError("singular matrix has no finite Smith form here")
    U = [[1, 0], [0, 1]]
    V = [[1, 0], [0, 1]]

    def row_sub(i, j, q):
        for X in (M, U):
            X[i] = [X[i][c] - q * X[j][c] for c in range(2)]

    def col_sub(i, j, q):
        for X in (M, V):
            for r in range(2):
                X[r][i] -= q * X[r][j]

    def row_swap():
        for X in (M, U):
            X[0], X[1] = X[1], X[0]

    def col_swap():
        for X in (M, V):
            for r in range(2):
                X[r][0], X[r][1] = X[r][1], X[r][0]

    while True:
        while M[1][0] != 0 or M[0][1] != 0:
            while M[1][0] != 0:
                if M[0][0] == 0 or abs(M[1][0]) < abs(M[0][0]):
                    row_swap()
                    continue
                row_sub(1, 0, M[1][0] // M[0][0])
            while M[0][1] != 0:
                if M[0][0] == 0 or abs(M[0][1]) < abs(M[0][0]):
                    col_swap()
                    continue
                col_sub(1, 0, M[0][1] // M[0][0])
        if M[1][1] % M[0][0] == 0:
            break
        row_sub(0, 1, -1)  # row0 += row1 brings M[1][1] into the first row
    return (tuple(map(tuple, U)), tuple(map(tuple, V)), abs(M[0][0]), abs(M[1][1]))  # type: ignore[return-value]


def fixed_point_count(A, n: int) -> int:
    """``|det(A^n - I)|``, the number of points of period dividing ``n`` for the linear map."""
    An = int_matpow(_as_int_matrix(A), n)
    return abs(int_det(((An[0][0] - 1, An[0][1]), (An[1][0], An[1][1] - 1))))


def _lattice_numerators(A: IntMatrix, n: int, cap: int) -> tuple[np.ndarray, int]:
    An = int_matpow(A, n)
    B = ((An[0][0] - 1, An[0][1]), (An[1][0], An[1][1] - 1))
    D = abs(int_det(B))
    if D == 0:
        raise ValueError("A^n - I is singular; A is not hyperbolic")
    if D > cap:
        raise CountCapExceeded(f"|det(A^{n} - I)| = {D} exceeds the cap {cap}")
    _, V, d1, d2 = smith_normal_form_2x2(B)
    i, j = np.meshgrid(np.arange(d1, dtype=np.int64), np.arange(d2, dtype=np.int64), indexing="ij")
    i = i.ravel() * d2
    j = j.ravel() * d1
    num = np.stack([V[0][0] * i + V[0][1] * j, V[1][0] * i + V[1][1] * j], axis=-1) % D
    return num, D


def fixed_points_linear(A, n: int, *, cap: int = DEFAULT_COUNT_CAP) -> np.ndarray:
    """All solutions of ``(A^n - I) x = 0 mod 1`` in ``[0, 1)^2``, shape ``(|det(A^n - I)|, 2)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    num, D = _lattice_numerators(_as_int_matrix(A), n, cap)
    return num / D


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedPointRecord:
    point: tuple[float, float]
    period: int
    jac_n: np.ndarray = field(repr=False)
    weight: float
    newton_residual: float


class FixedPointSet(Sequence[FixedPointRecord]):
    """Array-backed list of :class:`FixedPointRecord` for one period ``n``."""

    def __init__(self, period, points, jacobians, residuals):
        self.period = int(period)
        self.points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        self.jacobians = np.asarray(jacobians, dtype=np.float64).reshape(-1, 2, 2)
        self.residuals = np.asarray(residuals, dtype=np.float64).reshape(-1)
        J = self.jacobians
        # explicit 2x2 formula: exact for the integer matrices of the linear route
        dets = (1.0 - J[:, 0, 0]) * (1.0 - J[:, 1, 1]) - J[:, 0, 1] * J[:, 1, 0]
        self.det_id_minus_jac = dets
        self.weights = 1.0 / np.abs(dets)

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i):  # type: ignore[override]
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return FixedPointRecord(
            point=(float(self.points[i, 0]), float(self.points[i, 1])),
            period=self.period,
            jac_n=self.jacobians[i].copy(),
            weight=float(self.weights[i]),
            newton_residual=float(self.residuals[i]),
        )

    def __iter__(self) -> Iterator[FixedPointRecord]:
        for i in range(len(self)):
            yield self[i]

    @property
    def gamma(self) -> float:
        return math.fsum(self.weights.tolist())

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max()) if len(self) else 0.0


# ---------------------------------------------------------------------------
# Newton routes
# ---------------------------------------------------------------------------


def _closure_tol(spec: MapSpec, n: int, tol: float | None) -> float:
    if tol is not None:
        return tol
    lam = abs(linear_eigen(spec.A)[0])
    # T^n amplifies the rounding of x by up to lam^n
    return max(1e-12, 16 * np.finfo(float).eps * lam**n)


def refine_fixed_point_newton(
    spec: MapSpec, n: int, x0, *, tol: float | None = None, maxiter: int = 30
) -> FixedPointRecord:
    """Single-shooting Newton on ``Phi_n(x) = x - T^n(x) mod 1`` from ``x0``.

    The step uses ``D Phi_n = Id - D T^n``.  Raises :class:`NewtonDiverged`
    after ``maxiter`` steps or on residual growth, :class:`SingularJacobian`
    when ``|det(Id - D T^n)| < 1e-10``.
    """
    tol = _closure_tol(spec, n, tol)
    x = wrap01(np.asarray(x0, dtype=np.float64))
    first = None
    for it in range(maxiter + 1):
        y, J = iterate_with_jacobian(spec, x, n)
        r = torus_delta(x - y)
        res = float(np.max(np.abs(r)))
        L = np.eye(2) - J
        det = float(L[0, 0] * L[1, 1] - L[0, 1] * L[1, 0])
        if abs(det) < SINGULAR_TOL:
            raise SingularJacobian(f"|det(Id - D T^{n})| = {abs(det):.3g} at {x}")
        if res <= tol:
            return FixedPointRecord((float(x[0]), float(x[1])), n, J, 1.0 / abs(det), res)
        if first is None:
            first = res
        elif res > 100 * first or it == maxiter:
            raise NewtonDiverged(f"Newton for period {n} did not converge from {x0} (residual {res:.3g})")
        x = wrap01(x - np.linalg.solve(L, r))
    raise NewtonDiverged(f"Newton for period {n} did not converge from {x0}")  # pragma: no cover


def _shoot(args, X: np.ndarray, tol: float, maxiter: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Multiple-shooting Newton for periodic orbits ``X`` of shape ``(S, n, 2)``.

    Unknowns are all orbit nodes; the residuals ``r_i = T(x_i) - x_{i+1}``
    (indices mod n, lifted) are driven to zero.  The cyclic block-bidiagonal
    linear system is condensed to a 2x2 solve per orbit.  Returns the nodes,
    the final max defect per orbit, and the Jacobians ``D T`` at the nodes.
    """
    S, n, _ = X.shape
    eye = np.eye(2)
    prev = None
    for _ in range(maxiter + 1):
        img, D = kernels.map_and_jacobian(*args, X)
        r = torus_delta(img - np.roll(X, -1, axis=1))
        defect = np.max(np.abs(r), axis=(1, 2))
        worst = float(defect.max()) if S else 0.0
        if worst <= tol or (prev is not None and worst >= prev and worst < 1e3 * tol):
            break
        prev = worst
        # linearization: dx_{i+1} = D_i dx_i + r_i, with dx_n = dx_0
        J = np.broadcast_to(eye, (S, 2, 2)).copy()
        acc = np.zeros((S, 2))
        for i in range(n):
            acc = np.einsum("sab,sb->sa", D[:, i], acc) + r[:, i]
            J = D[:, i] @ J
        dx = np.linalg.solve(eye - J, acc[..., None])[..., 0]
        dX = np.empty_like(X)
        for i in range(n):
            dX[:, i] = dx
            dx = np.einsum("sab,sb->sa", D[:, i], dx) + r[:, i]
        X = wrap01(X + dX)
    return X, defect, D


def _continue_chunk(spec: MapSpec, n: int, nodes: np.ndarray, steps: int, tol: float, maxiter: int):
    A, kv, amp, ph, eps = spec.kernel_args()
    X = nodes
    for s in range(1, steps + 1):
        X, defect, D = _shoot((A, kv, amp, ph, eps * s / steps), X, tol, maxiter)
        if not np.all(np.isfinite(defect)) or float(defect.max(initial=0.0)) > 1e3 * tol:
            raise NewtonDiverged(
                f"multiple shooting for period {n} stalled at substep {s}/{steps} "
                f"(defect {float(np.nanmax(defect)):.3g})"
            )
    jac = np.broadcast_to(np.eye(2), (len(X), 2, 2)).copy()
    for i in range(n):
        jac = D[:, i] @ jac
    return X[:, 0], jac, defect


def _count_duplicates(points: np.ndarray, tol: float) -> int:
    if len(points) < 2:
        return 0
    tree = cKDTree(wrap01(points), boxsize=1.0)
    return len(tree.query_pairs(tol, p=np.inf))


def enumerate_fix(
    spec: MapSpec,
    n: int,
    *,
    substeps: int = 4,
    max_substeps: int = 64,
    cap: int = DEFAULT_COUNT_CAP,
    tol: float = 1e-13,
    maxiter: int = 30,
) -> FixedPointSet:
    """All points of ``Fix(T^n)`` with their ``n``-step Jacobians and weights.

    Seeds are the exact lattice orbits of ``A``; each is continued in ``eps``
    through ``substeps`` homotopy stages.  If continuation fails or two seeds
    land on the same point, the number of stages is doubled up to
    ``max_substeps``; past that :class:`CountMismatch` (or the Newton error) is
    raised.  Points of least period ``m | n`` are included.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    num, D = _lattice_numerators(spec.A, n, cap)
    Ai = np.array(spec.A, dtype=np.int64)
    nodes_num = np.empty((D, n, 2), dtype=np.int64)
    nodes_num[:, 0] = num
    for i in range(1, n):
        nodes_num[:, i] = (nodes_num[:, i - 1] @ Ai.T) % D
    nodes = nodes_num / D

    if spec.is_linear:
        An = np.array(int_matpow(spec.A, n), dtype=np.float64)
        jac = np.broadcast_to(An, (D, 2, 2))
        img = spec.lift(nodes)
        defect = np.max(np.abs(torus_delta(img - np.roll(nodes, -1, axis=1))), axis=(1, 2))
        return _finish(n, nodes[:, 0], jac, defect)

    chunks = [nodes[i : i + CHUNK] for i in range(0, D, CHUNK)]
    steps = max(4, substeps)
    last_error: Exception | None = None
    while steps <= max_substeps:
        try:
            parts = ordered_map(lambda c: _continue_chunk(spec, n, c, steps, tol, maxiter), chunks)
        except NewtonDiverged as exc:
            last_error = exc
            steps *= 2
            continue
        pts = np.concatenate([p[0] for p in parts])
        jac = np.concatenate([p[1] for p in parts])
        defect = np.concatenate([p[2] for p in parts])
        dups = _count_duplicates(pts, DEDUP_TOL)
        if dups == 0:
            return _finish(n, pts, jac, defect)
        last_error = CountMismatch(
            f"period {n}: {dups} coincident pairs among {D} continued seeds with {steps} substeps"
        )
        steps *= 2
    assert last_error is not None
    raise last_error


def _finish(n, pts, jac, defect) -> FixedPointSet:
    fps = FixedPointSet(n, wrap01(pts), jac, defect)
    small = np.abs(fps.det_id_minus_jac) < SINGULAR_TOL
    if np.any(small):
        raise SingularJacobian(f"period {n}: {int(small.sum())} points with |det(Id - D T^n)| < {SINGULAR_TOL}")
    return fps


# ---------------------------------------------------------------------------
# Gamma table
# ---------------------------------------------------------------------------


@dataclass
class GammaTable:
    N_max: int
    gamma: list[float]
    counts: list[int]
    max_residual: float
    residuals: list[float] = field(default_factory=list)

    def rows(self) -> list[tuple[int, int, float, float]]:
        res = self.residuals or [self.max_residual] * self.N_max
        return [(n + 1, self.counts[n], self.gamma[n], res[n]) for n in range(self.N_max)]

    def to_dict(self) -> dict:
        return {
            "N_max": self.N_max,
            "gamma": list(self.gamma),
            "counts": list(self.counts),
            "max_residual": self.max_residual,
            "residuals": list(self.residuals),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GammaTable":
        gamma = [float(g) for g in d["gamma"]]
        counts = [int(c) for c in d.get("counts", [0] * len(gamma))]
        return cls(
            N_max=int(d.get("N_max", len(gamma))),
            gamma=gamma,
            counts=counts,
            max_residual=float(d.get("max_residual", 0.0)),
            residuals=[float(r) for r in d.get("residuals", [])],
        )

    @classmethod
    def from_values(cls, gamma: Sequence[float]) -> "GammaTable":
        """A table from bare Gamma values (no orbit data behind it)."""
        g = [float(v) for v in gamma]
        return cls(N_max=len(g), gamma=g, counts=[0] * len(g), max_residual=0.0, residuals=[0.0] * len(g))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "count", "gamma", "max_residual"])
        for n, c, g, r in self.rows():
            w.writerow([n, c, repr(g), repr(r)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GammaTable":
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        rows = list(csv.DictReader(lines))
        gamma = [float(r["gamma"]) for r in rows]
        counts = [int(r.get("count") or 0) for r in rows]
        res = [float(r.get("max_residual") or 0.0) for r in rows]
        return cls(len(gamma), gamma, counts, max(res, default=0.0), res)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def gamma_table(spec: MapSpec, N: int, **kwargs) -> GammaTable:
    """``Gamma_1 .. Gamma_N`` by summing weights over :func:`enumerate_fix` in seed order."""
    if N < 1:
        raise ValueError("N must be >= 1")
    gamma, counts, res = [], [], []
    for n in range(1, N + 1):
        fps = enumerate_fix(spec, n, **kwargs)
        gamma.append(fps.gamma)
        counts.append(len(fps))
        res.append(fps.max_residual)
    return GammaTable(N, gamma, counts, max(res), res)
