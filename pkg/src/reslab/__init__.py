"""Numerical resonances of Anosov maps of the 2-torus.

Three independent routes to the spectrum of the transfer operator:

* periodic orbits -> ``Gamma_n`` -> dynamical determinant zeros
  (:mod:`reslab.periodic_orbits`, :mod:`reslab.determinant`);
* Fourier--Galerkin finite sections (:mod:`reslab.galerkin`);
* correlation sequences -> Padé poles (:mod:`reslab.correlations`).

:mod:`reslab.mollifier` checks the mollified trace against ``Gamma_n``.
"""

from .kernels import BACKEND
from .torus_maps import (
    CATALOG,
    MapSpec,
    PerturbationTerm,
    catalog_map,
    eval_map,
    make_linear_map,
    make_perturbed_map,
    map_from_dict,
    verify_hyperbolicity,
)
from .periodic_orbits import GammaTable, enumerate_fix, gamma_table
from .determinant import DetPoly, det_coefficients, det_zeros, match_zeros_to_spectrum
from .galerkin import SpectrumResult, TransferMatrix, assemble_transfer_matrix, srb_expectation, transfer_spectrum
from .observables import FourierObservable
from .mollifier import build_kernel, mollified_trace, trace_error_scaling
from .correlations import correlation_sequence, generating_function, match_all, pade_poles, pade_scan

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CATALOG",
    "DetPoly",
    "FourierObservable",
    "GammaTable",
    "MapSpec",
    "PerturbationTerm",
    "SpectrumResult",
    "TransferMatrix",
    "assemble_transfer_matrix",
    "build_kernel",
    "catalog_map",
    "correlation_sequence",
    "det_coefficients",
    "det_zeros",
    "enumerate_fix",
    "eval_map",
    "gamma_table",
    "generating_function",
    "make_linear_map",
    "make_perturbed_map",
    "map_from_dict",
    "match_all",
    "match_zeros_to_spectrum",
    "mollified_trace",
    "pade_poles",
    "pade_scan",
    "srb_expectation",
    "trace_error_scaling",
    "transfer_spectrum",
    "verify_hyperbolicity",
]
