"""Fourier--Galerkin finite sections of the transfer operator.

The transfer operator is defined by duality, ``(L h, phi) = (h, phi o T)``.  In the
Fourier basis ``e_k(x) = exp(2 pi i k.x)`` with ``|k_i| <= K`` its matrix is

    M[j, k] = integral exp(2 pi i (k.y - j.T(y))) dy,

so ``(L h)^(j) = sum_k M[j, k] h^(k)``.  Each row is one 2-D FFT of
``exp(-2 pi i j.T(y))`` sampled on a uniform ``G x G`` grid.

Finite Fourier sections are a practical surrogate, not the anisotropic spaces on
which the operator is quasicompact.  Only eigenvalues that are stable under a
change of cutoff are meaningful, and they are tagged ``trusted``.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._parallel import ordered_map
from .errors import AliasWarning, NoUnitEigenvalue
from .observables import FourierObservable
from .torus_maps import MapSpec, wrap01

ALIAS_TOL = 1e-8
STABILITY_TOL = 1e-4
MIN_TRUSTED_MODULUS = 1e-2
UNIT_TOL = 1e-3
ROW_BATCH = 64


def mode_list(K: int) -> np.ndarray:
    """Modes ``(k1, k2)`` with ``|k_i| <= K`` in row-major order (``k1`` slowest)."""
    r = np.arange(-K, K + 1)
    k1, k2 = np.meshgrid(r, r, indexing="ij")
    return np.stack([k1.ravel(), k2.ravel()], axis=1)


def mode_index(K: int, k) -> int:
    return (int(k[0]) + K) * (2 * K + 1) + (int(k[1]) + K)


def submatrix_indices(K: int, Kp: int) -> np.ndarray:
    """Positions of the ``|k_i| <= Kp`` modes inside the cutoff-``K`` layout."""
    m = mode_list(K)
    return np.nonzero(np.max(np.abs(m), axis=1) <= Kp)[0]


@dataclass
class TransferMatrix:
    K: int
    entries: np.ndarray
    quadrature_grid: int
    linear: bool = False
    spec_hash: str = ""

    @property
    def dim(self) -> int:
        return (2 * self.K + 1) ** 2


def _linear_indicator(spec: MapSpec, K: int) -> np.ndarray:
    modes = mode_list(K)
    At = np.array(spec.A, dtype=np.int64).T
    targets = modes @ At.T  # row j -> A^T j
    n = len(modes)
    M = np.zeros((n, n), dtype=complex)
    ok = np.max(np.abs(targets), axis=1) <= K
    rows = np.nonzero(ok)[0]
    cols = (targets[ok, 0] + K) * (2 * K + 1) + (targets[ok, 1] + K)
    M[rows, cols] = 1.0
    return M


def _quadrature_matrix(spec: MapSpec, K: int, G: int) -> np.ndarray:
    g = np.arange(G) / G
    Y1, Y2 = np.meshgrid(g, g, indexing="ij")
    T = wrap01(spec.lift(np.stack([Y1, Y2], axis=-1)))
    modes = mode_list(K)
    cols_1 = modes[:, 0] % G
    cols_2 = modes[:, 1] % G

    def rows(batch):
        j = modes[batch]
        phase = np.exp(-2j * np.pi * (j[:, 0, None, None] * T[None, ..., 0] + j[:, 1, None, None] * T[None, ..., 1]))
        F = np.fft.ifft2(phase, axes=(1, 2))
        return F[:, cols_1, cols_2]

    batches = [np.arange(s, min(s + ROW_BATCH, len(modes))) for s in range(0, len(modes), ROW_BATCH)]
    return np.concatenate(ordered_map(rows, batches), axis=0)


def assemble_transfer_matrix(
    spec: MapSpec, K: int, G: int | None = None, *, check_alias: bool = True, exact_linear: bool = True
) -> TransferMatrix:
    """Finite section of the transfer operator on modes ``|k_i| <= K``.

    ``G`` defaults to ``4K`` and must be at least that.  For a linear map the exact
    indicator ``M[j, k] = [k = A^T j]`` is returned unless ``exact_linear=False``.
    With ``check_alias`` the matrix is recomputed at ``2G`` and an
    :class:`AliasWarning` issued when any entry moves by more than ``1e-8``.
    """
    if K < 1:
        raise ValueError("cutoff K must be >= 1")
    G = 4 * K if G is None else int(G)
    if G < 4 * K:
        raise ValueError(f"quadrature grid G={G} is below 4K={4 * K}")
    if spec.is_linear and exact_linear:
        return TransferMatrix(K, _linear_indicator(spec, K), G, linear=True, spec_hash=spec.content_hash())
    M = _quadrature_matrix(spec, K, G)
    if check_alias and not spec.is_linear:
        delta = np.max(np.abs(_quadrature_matrix(spec, K, 2 * G) - M))
        if delta > ALIAS_TOL:
            warnings.warn(f"transfer matrix changed by {delta:.2e} from G={G} to G={2 * G}", AliasWarning, stacklevel=2)
    return TransferMatrix(K, M, G, linear=spec.is_linear, spec_hash=spec.content_hash())


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    trusted: np.ndarray
    srb_coeffs: np.ndarray
    K: int
    gap: float
    matrix: TransferMatrix | None = field(default=None, repr=False)

    @property
    def trusted_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[self.trusted]

    def srb_coefficient(self, k) -> complex:
        if max(abs(k[0]), abs(k[1])) > self.K:
            return 0j
        return complex(self.srb_coeffs[mode_index(self.K, k)])

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "eigenvalues": [
                {"re": float(v.real), "im": float(v.imag), "trusted": bool(t)}
                for v, t in zip(self.eigenvalues, self.trusted)
            ],
            "gap": float(self.gap),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def density_grid(self, n: int = 64) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """SRB density on an ``n x n`` grid; returns ``(x, y, rho)`` with complex ``rho``."""
        K = self.K
        side = 2 * K + 1
        if n < side:
            raise ValueError(f"grid size {n} cannot hold modes up to K={K}")
        F = np.zeros((n, n), dtype=complex)
        modes = mode_list(K)
        F[modes[:, 0] % n, modes[:, 1] % n] = self.srb_coeffs
        rho = np.fft.ifft2(F) * n * n
        g = np.arange(n) / n
        X, Y = np.meshgrid(g, g, indexing="ij")
        return X, Y, rho

    def density_csv(self, n: int = 64) -> str:
        X, Y, rho = self.density_grid(n)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "rho"])
        for x, y, r in zip(X.ravel(), Y.ravel(), rho.real.ravel()):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(r))])
        return buf.getvalue()


def _sorted_eig(M: np.ndarray, vectors: bool):
    if vectors:
        w, V = np.linalg.eig(M)
    else:
        w, V = np.linalg.eigvals(M), None
    # decreasing modulus; ties broken by real then imaginary part so conjugate pairs are ordered
    order = np.lexsort((-np.round(w.imag, 12), -np.round(w.real, 12), -np.round(np.abs(w), 12)))
    return w[order], (V[:, order] if V is not None else None)


def _stability_shifts(M: np.ndarray, K: int, w: np.ndarray) -> np.ndarray:
    if K < 3:
        return np.full(len(w), np.inf)
    idx = submatrix_indices(K, K - 2)
    ref = np.linalg.eigvals(M[np.ix_(idx, idx)])
    return np.min(np.abs(w[:, None] - ref[None, :]), axis=1)


def transfer_spectrum(tm: TransferMatrix | np.ndarray, *, stability_tol: float = STABILITY_TOL) -> SpectrumResult:
    """Eigen-decomposition with SRB vector and cutoff-stability tags.

    An eigenvalue is trusted when it moves by less than ``stability_tol`` between
    the ``K-2`` and ``K`` sections and its modulus is at least ``1e-2`` (tiny
    eigenvalues of both sections cluster near zero and trivially look stable).
    For a linear map only the unit eigenvalue is trusted.
    """
    if isinstance(tm, np.ndarray):
        side = int(round(np.sqrt(tm.shape[0])))
        tm = TransferMatrix((side - 1) // 2, tm, 0)
    M, K = tm.entries, tm.K
    w, V = _sorted_eig(M, vectors=True)
    i1 = int(np.argmin(np.abs(w - 1.0)))
    if abs(w[i1] - 1.0) > UNIT_TOL:
        raise NoUnitEigenvalue(f"no eigenvalue within {UNIT_TOL} of 1 (nearest {w[i1]:.6g})")
    zero = mode_index(K, (0, 0))
    # a degenerate unit eigenvalue: take the eigenvector carrying the most mass
    near = np.nonzero(np.abs(w - 1.0) <= abs(w[i1] - 1.0) + 1e-10)[0]
    i1 = int(near[np.argmax(np.abs(V[zero, near]))])
    v = V[:, i1]
    if abs(v[zero]) < 1e-14:
        raise NoUnitEigenvalue("unit eigenvector has vanishing zero mode")
    srb = v / v[zero]
    if tm.linear:
        trusted = np.zeros(len(w), dtype=bool)
        trusted[i1] = True
    else:
        shifts = _stability_shifts(M, K, w)
        trusted = (shifts < stability_tol) & (np.abs(w) >= MIN_TRUSTED_MODULUS)
        trusted[i1] = True
    others = [abs(x) for i, x in enumerate(w) if trusted[i] and i != i1]
    gap = max(others, default=0.0)
    return SpectrumResult(w, trusted, srb, K, float(gap), matrix=tm)


def srb_expectation(spec: MapSpec | None, f: FourierObservable, spectrum: SpectrumResult) -> float:
    """``mu_SRB(f) = sum_k f^(k) rho^(-k)`` from the SRB Fourier coefficients."""
    if spec is not None and spectrum.matrix is not None and spectrum.matrix.spec_hash:
        if spectrum.matrix.spec_hash != spec.content_hash():
            raise ValueError("spectrum was computed for a different map")
    total = 0j
    for k, c in f.coeffs:
        total += c * spectrum.srb_coefficient((-k[0], -k[1]))
    return float(total.real)


def spectrum_for(spec: MapSpec, K: int, G: int | None = None, **kwargs) -> SpectrumResult:
    return transfer_spectrum(assemble_transfer_matrix(spec, K, G, **kwargs))
