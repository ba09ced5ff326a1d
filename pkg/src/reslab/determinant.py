"""Truncated dynamical determinant ``d(z) = exp(-sum_n z^n Gamma_n / n)``.

Coefficients follow from the log-derivative recursion
``k c_k = -sum_{m=1..k} Gamma_m c_{k-m}``.  Zeros of the truncation are found
as companion-matrix eigenvalues and kept only if they survive dropping the two
highest coefficients.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateLeading, SeriesRoundTripError
from .periodic_orbits import GammaTable

ROUNDTRIP_TOL = 1e-10
TRUST_LEVEL = 1e-8
DEFAULT_STABILITY_TOL = 0.1


@dataclass
class DetPoly:
    coeffs: np.ndarray
    N: int
    source_gamma: GammaTable | None = field(default=None, repr=False)
    trust_radius: float = math.inf

    def to_dict(self) -> dict:
        return {
            "coeffs_re": [float(c.real) for c in self.coeffs],
            "coeffs_im": [float(c.imag) for c in self.coeffs],
            "N": self.N,
            "trust_radius": self.trust_radius if math.isfinite(self.trust_radius) else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "DetPoly":
        c = np.asarray(d["coeffs_re"], dtype=float) + 1j * np.asarray(d["coeffs_im"], dtype=float)
        tr = d.get("trust_radius")
        return cls(coeffs=c, N=int(d["N"]), trust_radius=math.inf if tr is None else float(tr))


def _exp_series(gamma: Sequence[float], sign: float) -> np.ndarray:
    """Coefficients of ``exp(sign * sum_n Gamma_n z^n / n)`` up to ``z^N``."""
    N = len(gamma)
    g = np.asarray(gamma, dtype=complex)
    c = np.zeros(N + 1, dtype=complex)
    c[0] = 1.0
    for k in range(1, N + 1):
        c[k] = sign * np.dot(g[:k], c[k - 1 :: -1][:k]) / k
    return c


def det_coefficients(gamma: GammaTable | Sequence[float]) -> DetPoly:
    """Taylor coefficients ``c_0 .. c_N`` of ``d(z)`` from ``Gamma_1 .. Gamma_N``.

    The inverse series ``exp(+sum Gamma_n z^n / n)`` is built independently and
    multiplied back; the product must be the unit series to ``1e-10`` relative
    to the size of the terms, else :class:`SeriesRoundTripError`.
    """
    table = gamma if isinstance(gamma, GammaTable) else GammaTable.from_values(gamma)
    values = table.gamma
    N = len(values)
    if N < 1:
        raise ValueError("need at least one Gamma value")
    c = _exp_series(values, -1.0)
    e = _exp_series(values, +1.0)
    prod = np.convolve(e, c)[: N + 1]
    scale = np.convolve(np.abs(e), np.abs(c))[: N + 1]
    unit = np.zeros(N + 1)
    unit[0] = 1.0
    err = np.abs(prod - unit)
    if np.any(err > ROUNDTRIP_TOL * np.maximum(scale, 1.0)):
        raise SeriesRoundTripError(f"series round trip failed, max error {err.max():.3g}")
    cN = abs(c[N])
    trust = math.inf if cN == 0.0 else (TRUST_LEVEL / cN) ** (1.0 / N)
    return DetPoly(coeffs=c, N=N, source_gamma=table, trust_radius=trust)


def evaluate_det(poly: DetPoly, z: complex) -> complex:
    acc = 0j
    for c in poly.coeffs[::-1]:
        acc = acc * z + c
    return acc


def _poly_roots(coeffs: np.ndarray) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    big = np.max(np.abs(c[1:])) if len(c) > 1 else 0.0
    if big < 1e-14:
        return np.zeros(0, dtype=complex)
    nz = np.nonzero(np.abs(c) >= 1e-14)[0]
    deg = int(nz[-1])
    if deg == 0:
        return np.zeros(0, dtype=complex)
    return np.roots(c[: deg + 1][::-1])


@dataclass(frozen=True)
class DetZero:
    z: complex
    stable: bool
    stable_shift: float


def find_det_zeros(
    poly: DetPoly, radius: float, *, stability_tol: float = DEFAULT_STABILITY_TOL, drop: int = 2
) -> list[DetZero]:
    """All zeros of the degree-N truncation in ``|z| <= radius`` with stability tags.

    ``stable_shift`` is the distance to the nearest zero of the degree ``N - drop``
    truncation; a zero is stable when the shift is at most
    ``stability_tol * max(1, |z|)``.
    """
    c = np.asarray(poly.coeffs, dtype=complex)
    if np.max(np.abs(c[1:]), initial=0.0) < 1e-14:
        raise DegenerateLeading("all coefficients beyond c_0 vanish; d(z) has no zeros")
    roots = _poly_roots(c)
    ref = _poly_roots(c[: max(1, len(c) - drop)])
    out = []
    for z in sorted(roots, key=lambda w: (abs(w), w.real, w.imag)):
        if abs(z) > radius:
            continue
        shift = float(np.min(np.abs(ref - z))) if len(ref) else math.inf
        out.append(DetZero(complex(z), shift <= stability_tol * max(1.0, abs(z)), shift))
    return out


def det_zeros(poly: DetPoly, radius: float, **kwargs) -> list[complex]:
    """Stable zeros of the truncated determinant inside ``|z| <= radius``, sorted by modulus."""
    return [d.z for d in find_det_zeros(poly, radius, **kwargs) if d.stable]


def zeros_to_csv(zeros: Iterable[DetZero]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re", "im", "stable_shift"])
    for d in zeros:
        w.writerow([repr(d.z.real), repr(d.z.imag), repr(d.stable_shift)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# zero <-> eigenvalue matching
# ---------------------------------------------------------------------------


@dataclass
class ResonanceReport:
    pairs: list[tuple[complex, complex, float]]
    unmatched_zeros: list[complex]
    unmatched_eigenvalues: list[complex]
    disk_radius: float

    def to_dict(self) -> dict:
        def cx(z):
            return {"re": float(z.real), "im": float(z.imag)}

        return {
            "pairs": [{"zero": cx(z), "eigenvalue": cx(lam), "residual": r} for z, lam, r in self.pairs],
            "unmatched_zeros": [cx(z) for z in self.unmatched_zeros],
            "unmatched_eigenvalues": [cx(v) for v in self.unmatched_eigenvalues],
            "disk_radius": self.disk_radius if math.isfinite(self.disk_radius) else None,
        }


def _eigen_candidates(spectrum, trusted_only: bool) -> list[complex]:
    if hasattr(spectrum, "eigenvalues"):
        ev = np.asarray(spectrum.eigenvalues)
        if trusted_only and getattr(spectrum, "trusted", None) is not None:
            ev = ev[np.asarray(spectrum.trusted, dtype=bool)]
        return [complex(v) for v in ev]
    return [complex(v) for v in spectrum]


def greedy_match(a: Sequence[complex], b: Sequence[complex], residual, tol: float):
    """Greedy minimal-residual one-to-one matching; returns pairs and the two leftover lists."""
    cand = []
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            r = float(residual(x, y))
            if r <= tol:
                cand.append((r, i, j))
    cand.sort()
    used_a, used_b, pairs = set(), set(), []
    for r, i, j in cand:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((i, j, r))
    pairs.sort()
    left_a = [x for i, x in enumerate(a) if i not in used_a]
    left_b = [y for j, y in enumerate(b) if j not in used_b]
    return pairs, left_a, left_b


def match_zeros_to_spectrum(
    zeros: Sequence[complex],
    spectrum,
    tol: float = 1e-3,
    *,
    radius: float | None = None,
    trusted_only: bool = True,
) -> ResonanceReport:
    """Pair determinant zeros ``z`` with eigenvalues ``lam`` under ``|z lam - 1| <= tol``.

    Only eigenvalues whose reciprocal lies in the disk ``|z| <= radius`` take
    part; ``spectrum`` is a :class:`SpectrumResult` (trusted eigenvalues only,
    unless ``trusted_only=False``) or a plain sequence of eigenvalues.
    """
    zeros = [complex(z) for z in zeros]
    if radius is None:
        radius = max([abs(z) for z in zeros], default=1.0)
    eig = [v for v in _eigen_candidates(spectrum, trusted_only) if v != 0 and 1.0 / abs(v) <= radius * (1 + tol)]
    pairs, left_z, left_e = greedy_match(zeros, eig, lambda z, lam: abs(z * lam - 1.0), tol)
    return ResonanceReport(
        pairs=[(zeros[i], eig[j], r) for i, j, r in pairs],
        unmatched_zeros=left_z,
        unmatched_eigenvalues=left_e,
        disk_radius=float(radius),
    )
