"""Correlation sequences, their generating functions, and Padé resonance extraction.

For mean-zero observables ``c_n = mu_SRB(f . g o T^n)``.  Two independent routes:

* ``operator``: with ``v`` the Fourier coefficients of ``f rho_SRB``,
  ``c_n = sum_k g^(-k) (M^n v)_k`` using the Galerkin matrix ``M``;
* ``trajectory``: a Birkhoff average of ``f(x_i) g(x_{i+n})`` along one long orbit.

Poles of Padé approximants to ``G(z) = sum c_n z^n`` estimate reciprocals of the
transfer-operator eigenvalues.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from ._parallel import ordered_map
from .determinant import ResonanceReport, greedy_match, match_zeros_to_spectrum
from .errors import NotMeanZero, UntrustedSpectrum
from .galerkin import SpectrumResult, mode_index, srb_expectation
from .observables import FourierObservable
from .torus_maps import MapSpec, wrap01

MEAN_TOL = 1e-8
DEFAULT_STEPS = 10**6
DEFAULT_BURN_IN = 10**3
DEFAULT_SEED = 42
FROISSART_TOL = 1e-3
HANKEL_COND_MAX = 1e12
RANK_TOL = 1e-13
POLE_STABILITY = 1e-3


@dataclass
class CorrelationSeries:
    c: np.ndarray
    method: str
    N: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "c_n", "method"])
        for n, v in enumerate(self.c):
            w.writerow([n, repr(float(v)), self.method])
        return buf.getvalue()

    def with_srb_mode(self) -> "CorrelationSeries":
        """Series of ``1 + f`` against ``1 + g``: adds the eigenvalue-1 term ``c_n + 1``.

        Mean subtraction removes the pole at ``z = 1``; this puts it back so the
        Padé poles include the SRB resonance.
        """
        return CorrelationSeries(self.c + 1.0, self.method + "+srb", self.N)


def mean_subtract(f: FourierObservable, spectrum: SpectrumResult, spec: MapSpec | None = None) -> FourierObservable:
    """``f - mu_SRB(f)`` against the spectrum's SRB measure."""
    return f.minus_constant(srb_expectation(spec, f, spectrum))


def _check_mean_zero(spec, f: FourierObservable, spectrum: SpectrumResult | None, name: str) -> None:
    if not f.coeffs:
        raise NotMeanZero(f"observable {name} is empty; supply a non-trivial mean-zero observable")
    if spectrum is not None:
        mu = srb_expectation(spec, f, spectrum)
        if abs(mu) > MEAN_TOL:
            raise NotMeanZero(f"mu_SRB({name}) = {mu:.3g}; subtract the SRB mean first")
    elif not f.mean_subtracted:
        raise NotMeanZero(f"observable {name} is not marked mean-subtracted and no spectrum was given to check it")


def _convolve_modes(f: FourierObservable, rho: np.ndarray, K: int) -> np.ndarray:
    side = 2 * K + 1
    R = rho.reshape(side, side)
    out = np.zeros_like(R)
    for (q1, q2), a in f.coeffs:
        # out[k] += a * rho[k - q] for k, k - q both inside the cutoff
        src1 = slice(max(0, -q1), min(side, side - q1))
        dst1 = slice(max(0, q1), min(side, side + q1))
        src2 = slice(max(0, -q2), min(side, side - q2))
        dst2 = slice(max(0, q2), min(side, side + q2))
        out[dst1, dst2] += a * R[src1, src2]
    return out.ravel()


def _pairing_vector(g: FourierObservable, K: int) -> np.ndarray:
    """``w`` with ``w . h = sum_k g^(-k) h^(k) = int g h``."""
    w = np.zeros((2 * K + 1) ** 2, dtype=complex)
    for (k1, k2), c in g.coeffs:
        w[mode_index(K, (-k1, -k2))] = c
    return w


def _operator_setup(spec, f, g, spectrum):
    if spectrum is None or spectrum.matrix is None:
        raise UntrustedSpectrum("operator route needs a SpectrumResult with its transfer matrix")
    if spec is not None and spectrum.matrix.spec_hash and spectrum.matrix.spec_hash != spec.content_hash():
        raise UntrustedSpectrum("spectrum was computed for a different map")
    K = spectrum.K
    if max(f.max_mode, g.max_mode) > K:
        raise UntrustedSpectrum(f"observables have modes beyond the cutoff K={K}")
    v = _convolve_modes(f, spectrum.srb_coeffs, K)
    return spectrum.matrix.entries, v, _pairing_vector(g, K)


def _operator_series(spec, f, g, N, spectrum) -> np.ndarray:
    M, v, w = _operator_setup(spec, f, g, spectrum)
    out = np.empty(N + 1)
    for n in range(N + 1):
        out[n] = (w @ v).real
        v = M @ v
    return out


def _trajectory_values(spec, f, g, N, nsteps, burn_in, seed, backward=False):
    rng = np.random.default_rng(seed)
    x0 = rng.random(2)
    total = burn_in + nsteps + N
    if backward:
        path = kernels.inverse_orbit(*spec.kernel_args(), float(x0[0]), float(x0[1]), total)
    else:
        path = kernels.orbit(*spec.kernel_args(), float(x0[0]), float(x0[1]), total)
    path = path[burn_in:]
    fv = f(path)
    gv = g(path)
    return np.array([math.fsum((fv[:nsteps] * gv[n : n + nsteps]).tolist()) / nsteps for n in range(N + 1)])


def correlation_sequence(
    spec: MapSpec,
    f: FourierObservable,
    g: FourierObservable,
    N: int,
    method: str = "operator",
    *,
    spectrum: SpectrumResult | None = None,
    nsteps: int = DEFAULT_STEPS,
    burn_in: int = DEFAULT_BURN_IN,
    seed: int = DEFAULT_SEED,
) -> CorrelationSeries:
    """``c_0 .. c_N`` of ``mu_SRB(f . g o T^n)`` by the ``operator`` or ``trajectory`` route.

    ``f`` and ``g`` must have zero SRB mean, checked against ``spectrum`` when
    given (required for the operator route).  The trajectory starts from a point
    drawn from ``numpy.random.default_rng(seed)`` and discards ``burn_in`` steps.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    if method == "operator":
        _operator_setup(spec, f, g, spectrum)  # validates the spectrum before the mean check uses it
    _check_mean_zero(spec, f, spectrum, "f")
    _check_mean_zero(spec, g, spectrum, "g")
    if method == "operator":
        c = _operator_series(spec, f, g, N, spectrum)
    elif method == "trajectory":
        c = _trajectory_values(spec, f, g, N, nsteps, burn_in, seed)
    else:
        raise ValueError(f"unknown method {method!r}; use 'operator' or 'trajectory'")
    return CorrelationSeries(c, method, N)


def backward_correlations(spec, f, g, N, *, nsteps=DEFAULT_STEPS, burn_in=DEFAULT_BURN_IN, seed=DEFAULT_SEED):
    """``mu_SRB(f . g o T^{-n})`` directly along a backward orbit (time-reversal check)."""
    return _trajectory_values(spec, f, g, N, nsteps, burn_in, seed, backward=True)


def generating_function(series: CorrelationSeries | Sequence[float], z: complex) -> complex:
    c = series.c if isinstance(series, CorrelationSeries) else np.asarray(series)
    acc = 0j
    for v in c[::-1]:
        acc = acc * z + v
    return acc


def resolvent_pairing(spec, f, g, spectrum: SpectrumResult, z: complex) -> complex:
    """Closed form ``<g, (Id - z M)^{-1} v>`` of the operator-route generating function."""
    M, v, w = _operator_setup(spec, f, g, spectrum)
    return complex(w @ np.linalg.solve(np.eye(len(v)) - z * M, v))


def fit_decay_rate(series: CorrelationSeries | Sequence[float], start: int = 3) -> float:
    """``rho`` in the envelope ``|c_n| ~ C rho^{-n}`` by least squares on ``log|c_n|``, ``n >= start``."""
    c = np.abs(series.c if isinstance(series, CorrelationSeries) else np.asarray(series, dtype=float))
    n = np.arange(len(c))
    keep = (n >= start) & (c > 1e-15 * max(c.max(), 1e-300))
    if keep.sum() < 2:
        return math.inf
    slope = np.polyfit(n[keep], np.log(c[keep]), 1)[0]
    return float(math.exp(-slope))


@dataclass
class SpectralValue:
    value: complex
    truncation_error: float


def correlation_spectrum(
    spec: MapSpec,
    f: FourierObservable,
    g: FourierObservable,
    omega: float,
    *,
    series_fg: CorrelationSeries,
    series_gf: CorrelationSeries,
) -> SpectralValue:
    """``C(e^{iw}) = G_fg(e^{iw}) + G_gf(e^{-iw}) - mu_SRB(f g)`` with a tail estimate.

    The tail of each truncated sum is bounded by ``|c_N| / (rho - 1)`` with ``rho``
    the fitted decay rate; infinite when the fit gives ``rho <= 1``.
    """
    zp = complex(math.cos(omega), math.sin(omega))
    val = generating_function(series_fg, zp) + generating_function(series_gf, zp.conjugate()) - series_fg.c[0]
    err = 0.0
    for s in (series_fg, series_gf):
        rho = fit_decay_rate(s)
        err += abs(s.c[-1]) / (rho - 1.0) if rho > 1.0 else math.inf
    return SpectralValue(complex(val), err)


# ---------------------------------------------------------------------------
# Padé
# ---------------------------------------------------------------------------


@dataclass
class PadePoles:
    poles: np.ndarray
    residues: np.ndarray
    degrees: tuple[int, int]
    condition_estimate: float
    trusted: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    ill_conditioned: bool = False
    numerator: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    denominator: np.ndarray = field(default_factory=lambda: np.ones(1), repr=False)

    def to_dict(self) -> dict:
        return {
            "degrees": list(self.degrees),
            "condition_estimate": self.condition_estimate,
            "ill_conditioned": self.ill_conditioned,
            "poles": [
                {"re": float(p.real), "im": float(p.imag), "residue_re": float(r.real), "residue_im": float(r.imag),
                 "trusted": bool(t)}
                for p, r, t in zip(self.poles, self.residues, self.trusted)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _toeplitz_block(c: np.ndarray, L: int, M: int) -> np.ndarray:
    """Rows ``i = 1..M``: ``sum_{j=0..M} q_j c_{L+i-j} = 0``."""
    C = np.zeros((M, M + 1), dtype=c.dtype)
    for i in range(1, M + 1):
        for j in range(M + 1):
            k = L + i - j
            if k >= 0:
                C[i - 1, j] = c[k]
    return C


def pade_poles(series: CorrelationSeries | Sequence[float], L: int, M: int, *, rank_tol: float = RANK_TOL) -> PadePoles:
    """Poles of the ``[L/M]`` Padé approximant of ``sum c_n z^n``.

    The denominator comes from the null vector of the Toeplitz system; when that
    system is numerically rank deficient (the series is exactly rational of
    lower type) both degrees are reduced until it is not.  Poles within ``1e-3``
    of a numerator root (Froissart doublets) are dropped.  If the condition
    estimate exceeds ``1e12`` all poles are returned untrusted.
    """
    c = np.asarray(series.c if isinstance(series, CorrelationSeries) else series, dtype=float)
    N = len(c) - 1
    if L < 0 or M < 0 or L + M > N:
        raise ValueError(f"[{L}/{M}] needs L + M <= N = {N}")
    scale = np.max(np.abs(c)) if len(c) else 0.0
    if scale == 0.0:
        return PadePoles(np.zeros(0, complex), np.zeros(0, complex), (L, 0), 1.0, np.zeros(0, bool))
    cond = 1.0
    while M > 0:
        C = _toeplitz_block(c, L, M)
        sv = np.linalg.svd(C, compute_uv=False)
        rank = int(np.sum(sv > rank_tol * scale))
        if rank == M:
            _, s, Vh = np.linalg.svd(C)
            q = Vh[-1].conj()
            cond = float(s[0] / s[-1]) if s[-1] > 0 else math.inf
            break
        drop = M - rank
        M -= drop
        L = max(0, L - drop)
    if M == 0:
        q = np.ones(1)
    q = q / q[0] if abs(q[0]) > 1e-300 else q
    p = np.array([sum(q[j] * c[i - j] for j in range(min(i, M) + 1)) for i in range(L + 1)])
    qr = np.trim_zeros(q[::-1], "f")
    poles = np.roots(qr) if len(qr) > 1 else np.zeros(0, complex)
    pr = np.trim_zeros(p[::-1], "f")
    zeros = np.roots(pr) if len(pr) > 1 else np.zeros(0, complex)
    keep = [z for z in poles if not (len(zeros) and np.min(np.abs(zeros - z)) < FROISSART_TOL)]
    poles = np.array(sorted(keep, key=lambda z: (abs(z), z.real, z.imag)), dtype=complex)
    dq = np.polyder(q[::-1])
    residues = np.array([np.polyval(p[::-1], z) / np.polyval(dq, z) for z in poles], dtype=complex)
    ill = cond > HANKEL_COND_MAX
    trusted = np.full(len(poles), not ill)
    return PadePoles(poles, residues, (L, M), cond, trusted, ill, p, q)


def pade_scan(
    series: CorrelationSeries | Sequence[float], Ms: Sequence[int] = (3, 4, 5), L: int | None = None
) -> PadePoles:
    """Padé poles with trust decided by stability across denominator degrees.

    Each ``M`` in ``Ms`` uses numerator degree ``L`` (default ``N - M``).  The poles
    of the middle degree are returned; one is trusted when every other degree
    has a pole within relative distance ``1e-3`` of it.
    """
    c = np.asarray(series.c if isinstance(series, CorrelationSeries) else series, dtype=float)
    N = len(c) - 1
    fits = ordered_map(lambda m: pade_poles(c, (N - m) if L is None else L, m), list(Ms))
    mid = fits[len(fits) // 2]
    trusted = []
    for z, t in zip(mid.poles, mid.trusted):
        ok = bool(t)
        for other in fits:
            if other is mid:
                continue
            if len(other.poles) == 0 or np.min(np.abs(other.poles / z - 1.0)) > POLE_STABILITY:
                ok = False
        trusted.append(ok)
    mid.trusted = np.array(trusted, dtype=bool)
    return mid


# ---------------------------------------------------------------------------
# three-way matching
# ---------------------------------------------------------------------------


@dataclass
class ResonanceTriple:
    zero: complex | None
    eigenvalue: complex | None
    pole: complex | None
    zero_eigen_residual: float | None
    pole_zero_residual: float | None


@dataclass
class UnifiedReport:
    triples: list[ResonanceTriple]
    unmatched_zeros: list[complex]
    unmatched_eigenvalues: list[tuple[complex, bool]]
    unmatched_poles: list[tuple[complex, bool]]
    pairs: ResonanceReport | None = field(default=None, repr=False)

    def full_triples(self) -> list[ResonanceTriple]:
        return [t for t in self.triples if t.pole is not None and t.eigenvalue is not None]

    def to_dict(self) -> dict:
        def cx(z):
            return None if z is None else {"re": float(z.real), "im": float(z.imag)}

        return {
            "triples": [
                {
                    "zero": cx(t.zero),
                    "eigenvalue": cx(t.eigenvalue),
                    "pole": cx(t.pole),
                    "zero_eigen_residual": t.zero_eigen_residual,
                    "pole_zero_residual": t.pole_zero_residual,
                }
                for t in self.triples
            ],
            "unmatched_zeros": [cx(z) for z in self.unmatched_zeros],
            "unmatched_eigenvalues": [{"value": cx(z), "trusted": t} for z, t in self.unmatched_eigenvalues],
            "unmatched_poles": [{"value": cx(z), "trusted": t} for z, t in self.unmatched_poles],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_markdown(self) -> str:
        def fmt(z):
            if z is None:
                return "-"
            if abs(z.imag) < 1e-12:
                return f"{z.real:.6g}"
            return f"{z.real:.6g}{z.imag:+.6g}i"

        def num(x):
            return "-" if x is None else f"{x:.2e}"

        lines = ["| zero z | eigenvalue λ | Padé pole p | abs(zλ-1) | abs(p/z-1) |", "|---|---|---|---|---|"]
        for t in self.triples:
            lines.append(
                f"| {fmt(t.zero)} | {fmt(t.eigenvalue)} | {fmt(t.pole)} | "
                f"{num(t.zero_eigen_residual)} | {num(t.pole_zero_residual)} |"
            )
        if self.unmatched_zeros:
            lines.append("")
            lines.append("Unmatched zeros: " + ", ".join(fmt(z) for z in self.unmatched_zeros))
        if self.unmatched_eigenvalues:
            lines.append("")
            lines.append(
                "Unmatched eigenvalues: "
                + ", ".join(f"{fmt(z)}{'' if t else ' (untrusted)'}" for z, t in self.unmatched_eigenvalues)
            )
        if self.unmatched_poles:
            lines.append("")
            lines.append(
                "Unmatched poles: " + ", ".join(f"{fmt(z)}{'' if t else ' (untrusted)'}" for z, t in self.unmatched_poles)
            )
        return "\n".join(lines) + "\n"


def match_all(
    spec: MapSpec | None,
    det_zeros: Sequence[complex],
    spectrum: SpectrumResult | Sequence[complex] | None,
    pade: PadePoles | None,
    *,
    tol: float = 1e-2,
    radius: float | None = None,
) -> UnifiedReport:
    """Three-way table: zero ``z`` <-> eigenvalue ``lam`` (``|z lam - 1|``) <-> pole ``p`` (``|p/z - 1|``).

    Zeros are first paired with trusted eigenvalues, then each zero takes the
    nearest unused trusted pole.  Everything left over is listed with its trust
    flag.  ``radius`` bounds the disk of zeros and reciprocal eigenvalues that
    take part (default: the largest zero modulus).
    """
    zeros = [complex(z) for z in det_zeros]
    if spectrum is None:
        spectrum = []
    pairs = match_zeros_to_spectrum(zeros, spectrum, tol, radius=radius)
    if pade is None:
        poles, pole_trust = [], []
    else:
        poles = [complex(p) for p in pade.poles]
        pole_trust = [bool(t) for t in pade.trusted]
    if pairs.disk_radius is not None:
        inside = [i for i, p in enumerate(poles) if abs(p) <= pairs.disk_radius * (1 + tol)]
    else:
        inside = list(range(len(poles)))
    cand = [i for i in inside if pole_trust[i]]
    rows = [(z, lam, r) for z, lam, r in pairs.pairs] + [(z, None, None) for z in pairs.unmatched_zeros]
    pz, _, _ = greedy_match(
        [z for z, _, _ in rows], [poles[i] for i in cand], lambda z, p: abs(p / z - 1.0) if z != 0 else math.inf, tol
    )
    pole_for = {i: (cand[j], r) for i, j, r in pz}
    triples = []
    unmatched_zeros = []
    for i, (z, lam, r) in enumerate(rows):
        pj = pole_for.get(i)
        if lam is None and pj is None:
            unmatched_zeros.append(z)
            continue
        triples.append(
            ResonanceTriple(z, lam, poles[pj[0]] if pj else None, r, pj[1] if pj else None)
        )
    used = {v[0] for v in pole_for.values()}
    trusted_set = set()
    if isinstance(spectrum, SpectrumResult):
        trusted_set = {complex(v) for v in spectrum.trusted_eigenvalues}
    un_eig = [(v, (v in trusted_set) if trusted_set else True) for v in pairs.unmatched_eigenvalues]
    un_poles = [(poles[i], pole_trust[i]) for i in inside if i not in used]
    return UnifiedReport(triples, unmatched_zeros, un_eig, un_poles, pairs)
