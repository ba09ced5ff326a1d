"""``reslab`` command line: map-info, gamma, det, spectrum, trace-check, resonances.

Every output file carries the resolved configuration, the SHA-256 of the map
document and a warnings block, so identical invocations give identical bytes.
Exit status: 0 on success (warnings allowed), 1 when a computation raised, 2 on
usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .correlations import correlation_sequence, mean_subtract, pade_poles, pade_scan, match_all
from .determinant import det_coefficients, find_det_zeros, zeros_to_csv
from .errors import ConfigError, ReslabError
from .galerkin import assemble_transfer_matrix, transfer_spectrum
from .mollifier import trace_error_scaling
from .observables import FourierObservable
from .periodic_orbits import GammaTable, gamma_table
from .torus_maps import MapSpec, catalog_map, map_from_dict, verify_hyperbolicity

DEFAULT_EPS_LADDER = "0.08,0.04,0.02,0.01"
DEFAULT_OBSERVABLE = "sin:0,1"


# ---------------------------------------------------------------------------
# input parsing
# ---------------------------------------------------------------------------


def read_map(source: str, *, validate: bool = True) -> MapSpec:
    """A map from a JSON file, or ``catalog:NAME[@EPS]`` for a built-in map."""
    if source.startswith("catalog:"):
        name, _, eps = source[len("catalog:") :].partition("@")
        try:
            return catalog_map(name, float(eps) if eps else 0.0)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
    try:
        text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read map file {source}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: map document must be a JSON object")
    return map_from_dict(doc, validate=validate)


def read_gamma(path: str) -> GammaTable:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read gamma file {path}: {exc.strerror}") from None
    if path.endswith(".json"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return GammaTable.from_dict(doc.get("result", doc))
    return GammaTable.from_csv(text)


def parse_float_list(text: str) -> list[float]:
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError("epsilon ladder is empty")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"cannot parse number list {text!r}") from None


def parse_pade(text: str | None) -> tuple[int, int] | None:
    if text is None:
        return None
    try:
        L, M = (int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"--pade expects L,M, got {text!r}") from None
    if L < 0 or M < 0 or M > 8:
        raise ConfigError("--pade needs L >= 0 and 0 <= M <= 8")
    return L, M


def parse_observable(text: str) -> FourierObservable:
    """``'cos:1,0+sin:0,1'`` -> ``cos 2 pi x + sin 2 pi y``; an empty string gives the zero observable."""
    total = FourierObservable.from_dict({})
    for term in [t for t in text.split("+") if t.strip()]:
        kind, _, k = term.strip().partition(":")
        try:
            k1, k2 = (int(v) for v in k.split(","))
        except ValueError:
            raise ConfigError(f"cannot parse observable term {term!r}; use cos:K1,K2 or sin:K1,K2") from None
        if kind == "cos":
            total = total + FourierObservable.cos_mode((k1, k2))
        elif kind == "sin":
            total = total + FourierObservable.sin_mode((k1, k2))
        else:
            raise ConfigError(f"unknown observable kind {kind!r}")
    return total


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


class Output:
    """Collects output files and writes them once the warnings block is known."""

    def __init__(self, args: argparse.Namespace, config: dict, spec: MapSpec | None):
        self.dir = Path(args.out)
        self.format = args.format
        self.config = config
        self.map_hash = spec.content_hash() if spec is not None else None
        self.warnings: list[str] = []
        self._pending: list[tuple[str, str, object]] = []

    def json(self, name: str, result) -> None:
        self._pending.append((name + ".json", "json", result))

    def csv(self, name: str, body: str) -> None:
        self._pending.append((name + ".csv", "csv", body))

    def text(self, name: str, body: str) -> None:
        self._pending.append((name, "text", body))

    def _header(self) -> dict:
        return {"config": self.config, "map_sha256": self.map_hash, "warnings": self.warnings}

    def flush(self) -> list[Path]:
        self.dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for fname, kind, payload in self._pending:
            if kind == "json":
                doc = dict(self._header(), result=payload)
                text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
            elif kind == "csv":
                head = "".join(f"# {k}: {json.dumps(v, sort_keys=True)}\n" for k, v in self._header().items())
                text = head + payload
            else:
                text = payload
            path = self.dir / fname
            path.write_text(text, encoding="utf-8")
            paths.append(path)
        return paths


def _clean(x):
    """JSON-safe copy: non-finite floats become ``None``."""
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_map_info(args, out_factory):
    spec = read_map(args.map, validate=False)
    out = out_factory({"map": args.map, "grid": args.grid}, spec)
    report = verify_hyperbolicity(spec, args.grid)
    data = _clean(report.to_dict())
    data["map"] = spec.to_dict()
    if out.format == "json":
        out.json("map_info", data)
    else:
        body = "key,value\n" + "".join(f"{k},{json.dumps(v)}\n" for k, v in sorted(data.items()) if k != "map")
        out.csv("map_info", body)
    return out


def cmd_gamma(args, out_factory):
    if args.N < 1:
        raise ConfigError("--N must be >= 1")
    spec = read_map(args.map)
    out = out_factory({"map": args.map, "N": args.N}, spec)
    table = gamma_table(spec, args.N)
    if out.format == "json":
        out.json("gamma", table.to_dict())
    else:
        out.csv("gamma", table.to_csv())
    return out


def cmd_det(args, out_factory):
    if args.gamma_file is None and args.map is None:
        raise ConfigError("det needs --map or --gamma-file")
    if args.N < 1:
        raise ConfigError("--N must be >= 1")
    spec = read_map(args.map) if args.map is not None else None
    cfg = {"map": args.map, "gamma_file": args.gamma_file, "N": args.N, "radius": args.radius}
    out = out_factory(cfg, spec)
    if args.gamma_file is not None:
        table = read_gamma(args.gamma_file)
        if table.N_max < args.N:
            raise ConfigError(f"gamma file has {table.N_max} values, --N asks for {args.N}")
        table = GammaTable.from_values(table.gamma[: args.N])
    else:
        table = gamma_table(spec, args.N)
    poly = det_coefficients(table)
    zeros = find_det_zeros(poly, args.radius)
    out.json("det_poly", _clean(poly.to_dict()))
    if out.format == "json":
        out.json(
            "zeros",
            [
                {"re": z.z.real, "im": z.z.imag, "stable": bool(z.stable), "stable_shift": _clean(z.stable_shift)}
                for z in zeros
            ],
        )
    else:
        out.csv("zeros", zeros_to_csv(z for z in zeros if z.stable))
    return out


def _grid_for(args) -> int:
    return args.grid if args.grid is not None else 4 * args.K


def cmd_spectrum(args, out_factory):
    if args.K < 1:
        raise ConfigError("--K must be >= 1")
    G = _grid_for(args)
    if G < 4 * args.K:
        raise ConfigError(f"--grid must be at least 4K = {4 * args.K}")
    spec = read_map(args.map)
    out = out_factory({"map": args.map, "K": args.K, "grid": G}, spec)
    result = transfer_spectrum(assemble_transfer_matrix(spec, args.K, G))
    if out.format == "json":
        out.json("spectrum", result.to_dict())
    else:
        rows = "".join(
            f"{v.real!r},{v.imag!r},{str(bool(t)).lower()}\n" for v, t in zip(result.eigenvalues, result.trusted)
        )
        out.csv("spectrum", "re,im,trusted\n" + rows)
    out.csv("srb_density", result.density_csv(max(64, 2 * args.K + 1)))
    return out


def cmd_trace_check(args, out_factory):
    ladder = parse_float_list(args.eps_ladder)
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    spec = read_map(args.map)
    cfg = {"map": args.map, "n": args.n, "moment_order": args.moment_order, "eps_ladder": ladder}
    out = out_factory(cfg, spec)
    try:
        result = trace_error_scaling(spec, args.n, args.moment_order, ladder)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if out.format == "json":
        out.json("trace_scaling", _clean(json.loads(result.to_json())))
    else:
        out.csv("trace_scaling", result.to_csv())
        out.json("trace_summary", _clean(result.summary()))
    return out


def cmd_resonances(args, out_factory):
    if args.N < 1 or args.K < 1:
        raise ConfigError("--N and --K must be >= 1")
    pade = parse_pade(args.pade)
    G = _grid_for(args)
    spec = read_map(args.map)
    cfg = {
        "map": args.map,
        "N": args.N,
        "K": args.K,
        "grid": G,
        "f": args.f,
        "g": args.g,
        "series_length": args.series_length,
        "pade": list(pade) if pade else None,
        "seed": args.seed,
    }
    out = out_factory(cfg, spec)
    f_raw, g_raw = parse_observable(args.f), parse_observable(args.g)
    spectrum = transfer_spectrum(assemble_transfer_matrix(spec, args.K, G))
    poly = det_coefficients(gamma_table(spec, args.N))
    lam = [abs(v) for v in spectrum.trusted_eigenvalues if abs(v) >= args.lambda_cut]
    radius = 1.0 / min(lam)
    zeros = [z.z for z in find_det_zeros(poly, radius) if z.stable]
    f = mean_subtract(f_raw, spectrum, spec) if f_raw.coeffs else f_raw
    g = mean_subtract(g_raw, spectrum, spec) if g_raw.coeffs else g_raw
    series = correlation_sequence(spec, f, g, args.series_length, "operator", spectrum=spectrum).with_srb_mode()
    if pade is None:
        poles = pade_scan(series, (4, 5, 6))
    else:
        poles = pade_poles(series, *pade)
    report = match_all(spec, zeros, spectrum, poles, radius=radius)
    out.json("resonances", _clean(report.to_dict()))
    out.text("resonances.md", report.to_markdown())
    out.csv("series", series.to_csv())
    return out


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reslab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"reslab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_map=True):
        sp.add_argument("--map", required=needs_map, help="map JSON file or catalog:NAME[@EPS]")
        sp.add_argument("--out", default=".", help="output directory (default: .)")
        sp.add_argument("--format", choices=("csv", "json"), default="json")
        sp.add_argument("--seed", type=int, default=42, help="random seed (default 42)")

    sp = sub.add_parser("map-info", help="hyperbolicity report")
    common(sp)
    sp.add_argument("--grid", type=int, default=256, help="cone-check grid resolution (default 256)")
    sp.set_defaults(func=cmd_map_info)

    sp = sub.add_parser("gamma", help="Gamma_n table from periodic orbits")
    common(sp)
    sp.add_argument("--N", type=int, default=10)
    sp.set_defaults(func=cmd_gamma)

    sp = sub.add_parser("det", help="determinant coefficients and zeros")
    common(sp, needs_map=False)
    sp.add_argument("--N", type=int, default=10)
    sp.add_argument("--gamma-file", help="use Gamma values from a gamma CSV/JSON file")
    sp.add_argument("--radius", type=float, default=5.0, help="search radius for zeros (default 5)")
    sp.set_defaults(func=cmd_det)

    sp = sub.add_parser("spectrum", help="Galerkin transfer-matrix spectrum and SRB density")
    common(sp)
    sp.add_argument("--K", type=int, default=10)
    sp.add_argument("--grid", type=int, default=None, help="quadrature grid (default 4K)")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("trace-check", help="mollified trace error scaling")
    common(sp)
    sp.add_argument("--n", type=int, default=1, help="period (default 1)")
    sp.add_argument("--moment-order", type=int, default=2)
    sp.add_argument("--eps-ladder", default=DEFAULT_EPS_LADDER)
    sp.set_defaults(func=cmd_trace_check)

    sp = sub.add_parser("resonances", help="three-way zero/eigenvalue/Padé table")
    common(sp)
    sp.add_argument("--N", type=int, default=10)
    sp.add_argument("--K", type=int, default=12)
    sp.add_argument("--grid", type=int, default=None, help="quadrature grid (default 4K)")
    sp.add_argument("--f", default=DEFAULT_OBSERVABLE, help="observable, e.g. 'cos:1,0+sin:0,1'")
    sp.add_argument("--g", default=DEFAULT_OBSERVABLE)
    sp.add_argument("--series-length", type=int, default=24)
    sp.add_argument("--pade", default=None, help="fixed Padé degrees L,M (default: scan M=4,5,6)")
    sp.add_argument("--lambda-cut", type=float, default=0.2)
    sp.set_defaults(func=cmd_resonances)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    def out_factory(cfg: dict, spec: MapSpec | None) -> Output:
        return Output(args, dict(cfg, command=args.command, seed=args.seed, format=args.format), spec)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            out = args.func(args, out_factory)
        except ConfigError as exc:
            print(f"reslab: error: {exc}", file=sys.stderr)
            return 2
        except (ReslabError, ValueError) as exc:
            print(f"reslab: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 1
    out.warnings = [f"{w.category.__name__}: {w.message}" for w in caught]
    for m in out.warnings:
        print(f"reslab: warning: {m}", file=sys.stderr)
    for path in out.flush():
        print(path)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
