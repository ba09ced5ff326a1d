"""Real trigonometric polynomials on the torus, stored by Fourier coefficient."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

REALITY_TOL = 1e-12


@dataclass(frozen=True)
class FourierObservable:
    """``f(x) = sum_k coeffs[k] exp(2 pi i k.x)``, with ``coeffs[-k] = conj(coeffs[k])``."""

    coeffs: tuple[tuple[tuple[int, int], complex], ...]
    mean_subtracted: bool = False

    def __post_init__(self):
        d = self.as_dict()
        for k, c in d.items():
            partner = d.get((-k[0], -k[1]), 0.0)
            if abs(partner - np.conj(c)) > REALITY_TOL * max(1.0, abs(c)):
                raise ValueError(f"coefficient at {k} has no conjugate partner; observable is not real")

    # -- constructors -------------------------------------------------------------
    @classmethod
    def from_dict(cls, coeffs: Mapping[tuple[int, int], complex], mean_subtracted: bool = False):
        items = sorted(((int(k[0]), int(k[1])), complex(c)) for k, c in coeffs.items() if c != 0)
        return cls(tuple(items), mean_subtracted)

    @classmethod
    def constant(cls, value: float = 1.0):
        return cls.from_dict({(0, 0): value})

    @classmethod
    def cos_mode(cls, k: tuple[int, int], amp: float = 1.0):
        """``amp * cos(2 pi k.x)``."""
        k = (int(k[0]), int(k[1]))
        if k == (0, 0):
            return cls.constant(amp)
        return cls.from_dict({k: amp / 2, (-k[0], -k[1]): amp / 2})

    @classmethod
    def sin_mode(cls, k: tuple[int, int], amp: float = 1.0):
        """``amp * sin(2 pi k.x)``."""
        k = (int(k[0]), int(k[1]))
        if k == (0, 0):
            return cls.from_dict({})
        return cls.from_dict({k: amp / 2j, (-k[0], -k[1]): -amp / 2j})

    # -- views ----------------------------------------------------------------------
    def as_dict(self) -> dict[tuple[int, int], complex]:
        return dict(self.coeffs)

    @property
    def max_mode(self) -> int:
        return max((max(abs(k[0]), abs(k[1])) for k, _ in self.coeffs), default=0)

    def vector(self, K: int) -> np.ndarray:
        """Dense coefficient vector in the ``(2K+1)^2`` mode layout of :mod:`reslab.galerkin`."""
        if self.max_mode > K:
            raise ValueError(f"observable has modes beyond cutoff K={K}")
        n = 2 * K + 1
        v = np.zeros(n * n, dtype=complex)
        for (k1, k2), c in self.coeffs:
            v[(k1 + K) * n + (k2 + K)] = c
        return v

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        out = np.zeros(pts.shape[:-1])
        for (k1, k2), c in self.coeffs:
            out += (c * np.exp(2j * np.pi * (k1 * pts[..., 0] + k2 * pts[..., 1]))).real
        return out

    # -- algebra --------------------------------------------------------------------
    def __add__(self, other: "FourierObservable") -> "FourierObservable":
        d = self.as_dict()
        for k, c in other.coeffs:
            d[k] = d.get(k, 0) + c
        return FourierObservable.from_dict(d)

    def scaled(self, s: float) -> "FourierObservable":
        return FourierObservable.from_dict({k: s * c for k, c in self.coeffs}, self.mean_subtracted)

    def __mul__(self, other: "FourierObservable") -> "FourierObservable":
        d: dict[tuple[int, int], complex] = {}
        for k, a in self.coeffs:
            for q, b in other.coeffs:
                key = (k[0] + q[0], k[1] + q[1])
                d[key] = d.get(key, 0) + a * b
        return FourierObservable.from_dict(d)

    def minus_constant(self, value: float) -> "FourierObservable":
        d = self.as_dict()
        d[(0, 0)] = d.get((0, 0), 0) - value
        return FourierObservable.from_dict(d, mean_subtracted=True)

    def to_dict(self) -> dict:
        return {
            "coeffs": [{"k": list(k), "re": c.real, "im": c.imag} for k, c in self.coeffs],
            "mean_subtracted": self.mean_subtracted,
        }
