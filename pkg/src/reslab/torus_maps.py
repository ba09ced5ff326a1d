"""Anosov maps of the 2-torus of the form ``T(x) = A x + eps * g(x) mod 1``.

``A`` is an integer hyperbolic matrix with ``|det A| = 1`` and ``g`` is a real
trigonometric polynomial

    g_i(x) = sum_t amp_t[i] * sin(2 pi k_t . x + phase_t[i]).

Everything here is a pure function of its inputs.  The linear part is kept as
exact integers so that ``eps = 0`` computations never pick up float drift.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import BadPerturbation, ConeConditionFailed, NotHyperbolic

IntMatrix = tuple[tuple[int, int], tuple[int, int]]

DEFAULT_CONE_HALF_ANGLE = 0.3
DEFAULT_GRID = 256
CONE_MARGIN = 1e-3


def wrap01(x):
    """Reduce to the canonical representative in ``[0, 1)``."""
    x = np.asarray(x, dtype=np.float64)
    y = x - np.floor(x)
    return np.where(y >= 1.0, 0.0, y)


def torus_delta(d):
    """Shortest representative of a displacement on the torus, in ``[-1/2, 1/2]``."""
    d = np.asarray(d, dtype=np.float64)
    return d - np.round(d)


def torus_distance(p, q) -> np.ndarray:
    return np.max(np.abs(torus_delta(np.asarray(p) - np.asarray(q))), axis=-1)


@dataclass(frozen=True)
class PerturbationTerm:
    k: tuple[int, int]
    amp: tuple[float, float]
    phase: tuple[float, float] = (0.0, 0.0)

    def to_dict(self) -> dict:
        return {"k": list(self.k), "amp": list(self.amp), "phase": list(self.phase)}


@dataclass(frozen=True)
class HyperbolicityReport:
    cone_half_angle: float
    min_expansion: float
    max_contraction: float
    grid_resolution: int
    passed: bool

    def to_dict(self) -> dict:
        return {
            "cone_half_angle": self.cone_half_angle,
            "min_expansion": self.min_expansion,
            "max_contraction": self.max_contraction,
            "grid_resolution": self.grid_resolution,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class MapSpec:
    A: IntMatrix
    perturbation: tuple[PerturbationTerm, ...] = ()
    epsilon: float = 0.0
    report: HyperbolicityReport | None = field(default=None, compare=False)

    # -- cached numeric views -------------------------------------------------
    @property
    def A_float(self) -> np.ndarray:
        return np.array(self.A, dtype=np.float64)

    @property
    def is_linear(self) -> bool:
        return self.epsilon == 0.0 or not self.perturbation

    def kernel_args(self) -> tuple:
        """Unpacked parameters in the layout expected by ``reslab.kernels``."""
        m = len(self.perturbation)
        kv = np.array([t.k for t in self.perturbation], dtype=np.float64).reshape(m, 2)
        amp = np.array([t.amp for t in self.perturbation], dtype=np.float64).reshape(m, 2)
        ph = np.array([t.phase for t in self.perturbation], dtype=np.float64).reshape(m, 2)
        eps = 0.0 if self.is_linear else float(self.epsilon)
        return self.A_float, kv, amp, ph, eps

    def g(self, pts) -> np.ndarray:
        """The perturbation vector field at ``pts`` (shape ``(..., 2)``)."""
        pts = np.asarray(pts, dtype=np.float64)
        out = np.zeros_like(pts)
        for t in self.perturbation:
            arg = 2 * np.pi * (pts[..., 0] * t.k[0] + pts[..., 1] * t.k[1])
            out[..., 0] += t.amp[0] * np.sin(arg + t.phase[0])
            out[..., 1] += t.amp[1] * np.sin(arg + t.phase[1])
        return out

    def lift(self, pts) -> np.ndarray:
        """``A x + eps g(x)`` without reduction mod 1."""
        out, _ = kernels.map_and_jacobian(*self.kernel_args(), np.asarray(pts, dtype=np.float64))
        return out

    # -- serialization ----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "A": [list(self.A[0]), list(self.A[1])],
            "epsilon": self.epsilon,
            "perturbation": [t.to_dict() for t in self.perturbation],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def _as_int_matrix(A) -> IntMatrix:
    arr = np.asarray(A)
    if arr.shape != (2, 2):
        raise NotHyperbolic(f"A must be 2x2, got shape {arr.shape}")
    if not np.all(np.equal(arr, np.round(arr))):
        raise NotHyperbolic("A must have integer entries")
    a = [[int(round(float(v))) for v in row] for row in arr]
    return ((a[0][0], a[0][1]), (a[1][0], a[1][1]))


def int_det(A: IntMatrix) -> int:
    return A[0][0] * A[1][1] - A[0][1] * A[1][0]


def int_trace(A: IntMatrix) -> int:
    return A[0][0] + A[1][1]


def int_matpow(A: IntMatrix, n: int) -> IntMatrix:
    """Exact ``A**n`` with Python integers (exponentiation by squaring)."""
    if n < 0:
        raise ValueError("n must be non-negative")

    def mul(X, Y):
        return (
            (X[0][0] * Y[0][0] + X[0][1] * Y[1][0], X[0][0] * Y[0][1] + X[0][1] * Y[1][1]),
            (X[1][0] * Y[0][0] + X[1][1] * Y[1][0], X[1][0] * Y[0][1] + X[1][1] * Y[1][1]),
        )

    result: IntMatrix = ((1, 0), (0, 1))
    base = A
    while n:
        if n & 1:
            result = mul(result, base)
        base = mul(base, base)
        n >>= 1
    return result


def linear_eigen(A: IntMatrix) -> tuple[float, float]:
    """Eigenvalues ``(lam_u, lam_s)`` of a hyperbolic integer matrix, ``|lam_u| > 1 > |lam_s|``."""
    tr = float(int_trace(A))
    det = float(int_det(A))
    disc = tr * tr - 4.0 * det
    if disc <= 0:
        raise NotHyperbolic(f"complex or repeated eigenvalues (trace {tr:g}, det {det:g})")
    r = math.sqrt(disc)
    # avoid cancellation for the small root
    big = 0.5 * (tr + math.copysign(r, tr)) if tr != 0 else 0.5 * r
    small = det / big
    return big, small


def _check_linear(A: IntMatrix) -> None:
    det = int_det(A)
    if abs(det) != 1:
        raise NotHyperbolic(f"|det A| must be 1, got {det}")
    tr = int_trace(A)
    if det == 1 and abs(tr) <= 2:
        raise NotHyperbolic(f"det A = 1 requires |trace A| > 2, got trace {tr}")
    lam_u, lam_s = linear_eigen(A)
    if not (abs(lam_u) > 1.0 > abs(lam_s)):
        raise NotHyperbolic("A has an eigenvalue on the unit circle")


def make_linear_map(A) -> MapSpec:
    Ai = _as_int_matrix(A)
    _check_linear(Ai)
    return MapSpec(A=Ai, perturbation=(), epsilon=0.0)


def _coerce_terms(perturbation) -> tuple[PerturbationTerm, ...]:
    terms = []
    for t in perturbation:
        if isinstance(t, PerturbationTerm):
            term = t
        elif isinstance(t, Mapping):
            try:
                k = t["k"]
                amp = t["amp"]
            except KeyError as exc:
                raise BadPerturbation(f"perturbation term missing field {exc}") from None
            term = PerturbationTerm(tuple(k), tuple(amp), tuple(t.get("phase", (0.0, 0.0))))
        else:
            k, amp, *rest = t
            term = PerturbationTerm(tuple(k), tuple(amp), tuple(rest[0]) if rest else (0.0, 0.0))
        if len(term.k) != 2 or len(term.amp) != 2 or len(term.phase) != 2:
            raise BadPerturbation("k, amp and phase must all have two components")
        if any(float(v) != int(v) for v in term.k):
            raise BadPerturbation(f"wavevector must be integer, got {term.k}")
        vals = [float(v) for v in term.amp + term.phase]
        if not all(math.isfinite(v) for v in vals):
            raise BadPerturbation("non-finite amplitude or phase")
        terms.append(
            PerturbationTerm(
                (int(term.k[0]), int(term.k[1])),
                (float(term.amp[0]), float(term.amp[1])),
                (float(term.phase[0]), float(term.phase[1])),
            )
        )
    return tuple(terms)


def perturbation_from_fourier(coeffs: Mapping[tuple[int, int], Sequence[complex]], tol: float = 1e-12):
    """Convert complex Fourier data ``{k: (c1, c2)}`` of a real field into sine terms.

    The field is ``g(x) = sum_k c_k exp(2 pi i k.x)``; reality requires
    ``c_{-k} = conj(c_k)``, and :class:`BadPerturbation` is raised otherwise.
    """
    coeffs = {(int(k[0]), int(k[1])): np.asarray(c, dtype=complex) for k, c in coeffs.items()}
    terms = []
    seen = set()
    for k, c in sorted(coeffs.items()):
        if k in seen:
            continue
        mk = (-k[0], -k[1])
        partner = coeffs.get(mk, np.zeros(2, dtype=complex))
        if np.max(np.abs(partner - np.conj(c))) > tol:
            raise BadPerturbation(f"coefficients at {k} and {mk} are not conjugate-paired")
        seen.update({k, mk})
        if k == (0, 0):
            if np.max(np.abs(c.real)) > tol:
                # constant shift: sin(theta + pi/2) = 1
                terms.append(PerturbationTerm(k, (float(c[0].real), float(c[1].real)), (math.pi / 2, math.pi / 2)))
            continue
        # c e^{i th} + conj(c) e^{-i th} = 2|c| cos(th + arg c) = 2|c| sin(th + arg c + pi/2)
        amp = tuple(float(2 * abs(ci)) for ci in c)
        ph = tuple(float(np.angle(ci) + math.pi / 2) for ci in c)
        terms.append(PerturbationTerm(k, amp, ph))
    return tuple(terms)


def make_perturbed_map(
    A,
    perturbation: Iterable = (),
    epsilon: float = 0.0,
    *,
    grid_resolution: int = DEFAULT_GRID,
    cone_half_angle: float = DEFAULT_CONE_HALF_ANGLE,
) -> MapSpec:
    """Build ``T(x) = A x + epsilon g(x)`` and certify it with :func:`verify_hyperbolicity`."""
    base = make_linear_map(A)
    if not (epsilon >= 0.0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be a finite non-negative number, got {epsilon}")
    spec = MapSpec(A=base.A, perturbation=_coerce_terms(perturbation), epsilon=float(epsilon))
    report = verify_hyperbolicity(spec, grid_resolution, cone_half_angle=cone_half_angle)
    if not report.passed:
        raise ConeConditionFailed(
            f"cone condition fails at epsilon={epsilon:g} "
            f"(min expansion {report.min_expansion:.4g}, max contraction {report.max_contraction:.4g})"
        )
    return replace(spec, report=report)


def map_from_dict(d: Mapping, *, validate: bool = True, grid_resolution: int = DEFAULT_GRID) -> MapSpec:
    """Inverse of :meth:`MapSpec.to_dict`.  ``validate=False`` skips all checks."""
    if "A" not in d:
        raise BadPerturbation("map document lacks field 'A'")
    eps = float(d.get("epsilon", 0.0))
    pert = d.get("perturbation", [])
    if not validate:
        arr = np.asarray(d["A"])
        A = ((int(arr[0, 0]), int(arr[0, 1])), (int(arr[1, 0]), int(arr[1, 1])))
        return MapSpec(A=A, perturbation=_coerce_terms(pert), epsilon=eps)
    if not pert or eps == 0.0:
        spec = make_linear_map(d["A"])
        return replace(spec, perturbation=_coerce_terms(pert), epsilon=eps)
    return make_perturbed_map(d["A"], pert, eps, grid_resolution=grid_resolution)


def load_map(path) -> MapSpec:
    with open(path, encoding="utf-8") as fh:
        return map_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def eval_map(spec: MapSpec, p) -> np.ndarray:
    """``T(p)`` reduced to ``[0, 1)^2``; ``p`` may be a single point or a batch."""
    return wrap01(spec.lift(p))


def jacobian(spec: MapSpec, p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if spec.is_linear:
        out = np.empty(p.shape[:-1] + (2, 2))
        out[...] = spec.A_float
        return out
    _, jac = kernels.map_and_jacobian(*spec.kernel_args(), p)
    return jac


def iterate_with_jacobian(spec: MapSpec, p, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``T^n(p)`` and ``D_p T^n``, the product of one-step Jacobians in orbit order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = np.asarray(p, dtype=np.float64)
    if spec.is_linear:
        An = int_matpow(spec.A, n)
        q = p
        for _ in range(n):
            q = wrap01(q @ spec.A_float.T)
        jac = np.empty(p.shape[:-1] + (2, 2))
        jac[...] = np.array(An, dtype=np.float64)
        return q, jac
    return kernels.iterate_with_jacobian(*spec.kernel_args(), p, n)


def eval_inverse(spec: MapSpec, p) -> np.ndarray:
    """``T^{-1}(p)`` by Newton on the lift, started from ``A^{-1} p``."""
    p = np.asarray(p, dtype=np.float64)
    flat = p.reshape(-1, 2)
    out = np.empty_like(flat)
    args = spec.kernel_args()
    for i, (x, y) in enumerate(flat):
        out[i] = kernels.inverse_orbit(*args, float(x), float(y), 1)[1]
    return out.reshape(p.shape)


# ---------------------------------------------------------------------------
# hyperbolicity certificate
# ---------------------------------------------------------------------------


def _eigenbasis(A: IntMatrix) -> np.ndarray:
    """Columns: unstable then stable eigenvector of ``A``."""
    lam_u, lam_s = linear_eigen(A)
    Af = np.array(A, dtype=np.float64)
    vecs = []
    for lam in (lam_u, lam_s):
        # (A - lam I) v = 0; pick the better-conditioned row
        a, b = Af[0, 0] - lam, Af[0, 1]
        c, d = Af[1, 0], Af[1, 1] - lam
        v = np.array([-b, a]) if abs(a) + abs(b) >= abs(c) + abs(d) else np.array([-d, c])
        vecs.append(v / np.linalg.norm(v))
    return np.column_stack(vecs)


def verify_hyperbolicity(
    spec: MapSpec,
    grid_resolution: int = DEFAULT_GRID,
    *,
    cone_half_angle: float = DEFAULT_CONE_HALF_ANGLE,
    margin: float = CONE_MARGIN,
) -> HyperbolicityReport:
    """Grid check of constant cone fields around the eigendirections of ``A``.

    In the eigenbasis ``(u, s)`` of ``A`` the unstable cone is
    ``|s| <= tan(alpha) |u|`` and the stable cone ``|u| <= tan(alpha) |s|``.
    At every grid point ``DT`` must map the unstable cone strictly inside itself
    and ``DT^{-1}`` the stable cone.  Expansion is measured on the cone
    coordinate (``|u|`` resp. ``|s|``), so for ``eps = 0`` the reported
    constants are exactly ``|lam_u|`` and ``1/|lam_u|``.  Both linear images are
    affine in the cone slope, so checking the two boundary rays suffices.
    """
    if grid_resolution < 16:
        raise ValueError("grid_resolution must be >= 16")
    try:
        V = _eigenbasis(spec.A)
    except NotHyperbolic:
        return HyperbolicityReport(cone_half_angle, float("nan"), float("nan"), grid_resolution, False)
    Vinv = np.linalg.inv(V)
    g = np.arange(grid_resolution) / grid_resolution
    X, Y = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    jac = jacobian(spec, pts)
    E = Vinv @ jac @ V  # DT in eigen-coordinates
    det = E[:, 0, 0] * E[:, 1, 1] - E[:, 0, 1] * E[:, 1, 0]
    Ei = np.empty_like(E)
    Ei[:, 0, 0] = E[:, 1, 1] / det
    Ei[:, 0, 1] = -E[:, 0, 1] / det
    Ei[:, 1, 0] = -E[:, 1, 0] / det
    Ei[:, 1, 1] = E[:, 0, 0] / det

    tau = math.tan(cone_half_angle)
    ok = bool(np.all(np.isfinite(E)))
    # unstable cone, rays (1, +-tau)
    u = np.stack([E[:, 0, 0] + t * E[:, 0, 1] for t in (-tau, tau)])
    s = np.stack([E[:, 1, 0] + t * E[:, 1, 1] for t in (-tau, tau)])
    ok &= bool(np.all(u[0] * u[1] > 0))
    ok &= bool(np.all(np.abs(s) <= (1 - margin) * tau * np.abs(u)))
    min_expansion = float(np.min(np.abs(u)))
    # stable cone under the inverse, rays (+-tau, 1)
    s2 = np.stack([Ei[:, 1, 1] + t * Ei[:, 1, 0] for t in (-tau, tau)])
    u2 = np.stack([Ei[:, 0, 1] + t * Ei[:, 0, 0] for t in (-tau, tau)])
    ok &= bool(np.all(s2[0] * s2[1] > 0))
    ok &= bool(np.all(np.abs(u2) <= (1 - margin) * tau * np.abs(s2)))
    max_contraction = float(1.0 / np.min(np.abs(s2)))
    ok &= min_expansion > 1 + margin and max_contraction < 1 - margin
    return HyperbolicityReport(cone_half_angle, min_expansion, max_contraction, grid_resolution, bool(ok))


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

CAT = ((2, 1), (1, 1))


def _kick(A: IntMatrix, amplitude: float) -> tuple[PerturbationTerm, ...]:
    # T = A o S with S(x1, x2) = (x1, x2 + eps * amplitude * sin 2 pi x1): area preserving
    return (PerturbationTerm((1, 0), (amplitude * A[0][1], amplitude * A[1][1])),)


CATALOG: dict[str, tuple[IntMatrix, tuple[PerturbationTerm, ...]]] = {
    "cat": (CAT, ()),
    "cat_kick": (CAT, _kick(CAT, 8.0)),
    "cat_shear": (CAT, (PerturbationTerm((0, 1), (1.0, 0.0)),)),
    "cat_sym_kick": (((1, 1), (1, 2)), _kick(((1, 1), (1, 2)), 1.0)),
    "trace4_kick": (((3, 2), (1, 1)), _kick(((3, 2), (1, 1)), 1.0)),
    "flip_kick": (((1, 1), (1, 0)), _kick(((1, 1), (1, 0)), 1.0)),
}
"""Named maps; ``catalog_map(name, eps)`` instantiates one at a given epsilon.

``cat_kick`` at ``eps = 0.01`` is the reference perturbed map used by the
desk-scale experiments.  All kicked maps are area preserving.
"""

DESK_MAP = "cat_kick"
DESK_EPSILON = 0.01


def catalog_map(name: str, epsilon: float = 0.0, **kwargs) -> MapSpec:
    try:
        A, terms = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog map {name!r}; known: {sorted(CATALOG)}") from None
    if not terms or epsilon == 0.0:
        return replace(make_linear_map(A), perturbation=terms, epsilon=0.0)
    return make_perturbed_map(A, terms, epsilon, **kwargs)
