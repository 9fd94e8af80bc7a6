"""Command-line runner.

Every subcommand writes its artifacts under ``--outdir``.  CSV files start
with a ``# higgslab <version> config_sha256=<hash>`` comment line and use
RFC-4180 quoting; JSON files carry the same information under ``"meta"``.
Outputs contain no timestamps, so fixed inputs replay byte for byte.

Exit codes: 0 success, 2 invalid input, 3 non-convergence under
``--require-converged``, 1 any other failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import ensembles, fieldio, geometry as geo, limits, matrix, monopole, solver, spectral
from .errors import HiggsLabError

log = logging.getLogger("higgslab")

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class NotConverged(Exception):
    pass


# --- schemas --------------------------------------------------------------------

_ENTRY = {"oneOf": [{"type": "number"},
                    {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]}
_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _ENTRY}}
_DOMAIN = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "n"],
    "properties": {
        "kind": {"enum": ["torus", "disk"]},
        "n": {"type": "integer", "minimum": 1},
        "period": {"type": "number", "exclusiveMinimum": 0},
        "radius": {"type": "number", "exclusiveMinimum": 0},
    },
}
_HIGGS = {
    "type": "object",
    "additionalProperties": False,
    "required": ["coeffs"],
    "properties": {"coeffs": {"type": "array", "minItems": 1, "items": _MATRIX}},
}
_SOLVER = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "dt0": {"type": "number", "exclusiveMinimum": 0},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "max_steps": {"type": "integer", "minimum": 0},
        "scheme": {"enum": ["implicit", "explicit"]},
        "grow": {"type": "number", "minimum": 1},
        "shrink": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "dt_max": {"type": "number", "exclusiveMinimum": 0},
        "normalize_det": {"type": "boolean"},
        "record_every": {"type": "integer", "minimum": 0},
        "max_rejects": {"type": "integer", "minimum": 0},
    },
}
_METRIC = {
    "oneOf": [
        {"const": "identity"},
        {"type": "object", "additionalProperties": False, "required": ["constant"],
         "properties": {"constant": _MATRIX}},
        {"type": "object", "additionalProperties": False, "required": ["field"],
         "properties": {"field": {"type": "string"}}},
    ]
}
_REGION = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["kind", "inner", "outer"],
         "properties": {"kind": {"const": "annulus"}, "inner": {"type": "number", "minimum": 0},
                        "outer": {"type": "number", "exclusiveMinimum": 0}}},
        {"type": "object", "additionalProperties": False, "required": ["kind"],
         "properties": {"kind": {"const": "auto"},
                        "branch_margin": {"type": "number", "minimum": 0},
                        "boundary_margin": {"type": "number", "minimum": 0}}},
    ]
}
_LOOP = {"type": "object", "additionalProperties": False, "required": ["center", "radius"],
         "properties": {"center": {"type": "array", "items": {"type": "number"},
                                   "minItems": 2, "maxItems": 2},
                        "radius": {"type": "number", "exclusiveMinimum": 0}}}
_FIT = {"type": "object", "additionalProperties": False, "required": ["field", "model"],
        "properties": {"field": {"enum": list(limits.CSV_FIELDS[1:-1])},
                       "model": {"enum": ["exponential", "power"]}}}

SCHEMAS = {
    "spectral": {
        "type": "object", "additionalProperties": False, "required": ["domain", "higgs"],
        "properties": {"domain": _DOMAIN, "higgs": _HIGGS, "name": {"type": "string"},
                       "branch_tol": {"type": "number", "exclusiveMinimum": 0},
                       "region": _REGION, "loops": {"type": "array", "items": _LOOP}},
    },
    "solve": {
        "type": "object", "additionalProperties": False, "required": ["domain", "higgs"],
        "properties": {"domain": _DOMAIN, "higgs": _HIGGS, "name": {"type": "string"},
                       "initial_metric": _METRIC, "mu": {"type": "number"}, "solver": _SOLVER},
    },
    "monopole": {
        "type": "object", "additionalProperties": False, "required": ["domain", "f"],
        "properties": {
            "domain": _DOMAIN, "name": {"type": "string"},
            "f": {"type": "array", "minItems": 1, "items": _ENTRY},
            "c": {"type": "number"},
            "boundary_u": {"type": "array", "items": _ENTRY},
            "solve_c": {"type": "boolean"},
            "negative_control": {"type": "boolean"},
            "solver": _SOLVER,
        },
    },
    "sweep": {
        "type": "object", "additionalProperties": False,
        "required": ["domain", "higgs", "t_list", "region"],
        "properties": {
            "domain": _DOMAIN, "higgs": _HIGGS, "name": {"type": "string"},
            "t_list": {"type": "array", "minItems": 1,
                       "items": {"type": "number", "exclusiveMinimum": 0}},
            "region": _REGION, "boundary_metric": _METRIC,
            "mode": {"enum": ["general", "trace_free"]},
            "solver": _SOLVER, "fits": {"type": "array", "items": _FIT},
        },
    },
}


# --- helpers ------------------------------------------------------------------

def config_hash(obj):
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


class Emitter:
    """Writes artifacts stamped with the tool version and config hash."""

    def __init__(self, outdir, config):
        self.outdir = Path(outdir)
        self.sha = config_hash(config)
        self.written = []

    @property
    def stamp(self):
        return f"higgslab {__version__} config_sha256={self.sha}"

    def meta(self):
        return {"tool": "higgslab", "version": __version__, "config_sha256": self.sha}

    def _path(self, name):
        self.outdir.mkdir(parents=True, exist_ok=True)
        p = self.outdir / name
        self.written.append(p)
        return p

    def json(self, name, payload):
        body = dict(payload)
        body["meta"] = self.meta()
        text = json.dumps(_clean(body), indent=2, sort_keys=True, allow_nan=False) + "\n"
        self._path(name).write_text(text)

    def csv(self, name, header, rows):
        buf = io.StringIO()
        buf.write(f"# {self.stamp}\r\n")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        self._path(name).write_bytes(buf.getvalue().encode())

    def text(self, name, text):
        self._path(name).write_text(text)

    def field(self, stem, dom, F):
        jpath, bpath = fieldio.write_field(self.outdir / stem, dom, F, meta=self.meta())
        self.written.extend([jpath, bpath])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def parse_matrix(text):
    """Parse ``"a,b;c,d"`` (entries may be Python complex literals such as ``1+2j``)."""
    try:
        rows = [[complex(e.strip().replace(" ", "")) for e in row.split(",")]
                for row in text.split(";")]
    except ValueError as exc:
        raise UsageError(f"cannot parse matrix {text!r}: {exc}") from None
    if len({len(r) for r in rows}) != 1 or len(rows) != len(rows[0]):
        raise UsageError(f"matrix {text!r} is not square")
    return np.array(rows)


def _entry(e):
    return complex(e[0], e[1]) if isinstance(e, list) else complex(e)


def _matrix(rows):
    A = np.array([[_entry(e) for e in row] for row in rows])
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise UsageError("coefficient matrices must be square")
    return A


def fmt_complex(z, digits=12):
    z = complex(z)
    scale = max(abs(z), 1.0)

    def f(v):
        v = 0.0 if abs(v) < 1e-14 * scale else v
        return format(v, f".{digits}g")

    if z.imag == 0 or abs(z.imag) < 1e-14 * scale:
        return f(z.real)
    return f"{f(z.real)}{'+' if z.imag >= 0 else '-'}{f(abs(z.imag))}j"


def _domain(spec):
    if spec["kind"] == "torus":
        return geo.Domain.torus(spec["n"], spec.get("period", 1.0))
    return geo.Domain.disk(spec["n"], spec.get("radius", 1.0))


def _higgs(dom, spec):
    return spectral.HiggsField.from_polynomial(dom, [_matrix(c) for c in spec["coeffs"]])


def _metric(dom, spec, r):
    if spec is None or spec == "identity":
        return np.broadcast_to(np.eye(r, dtype=complex), dom.shape + (r, r)).copy()
    if "constant" in spec:
        H = matrix.check_metric_value(_matrix(spec["constant"]), r)
        return np.broadcast_to(H, dom.shape + (r, r)).copy()
    fdom, F, _ = fieldio.read_field(spec["field"])
    if fdom != dom or F.shape != dom.shape + (r, r):
        raise UsageError("metric field does not match the domain and rank")
    return F


def _solver_config(spec):
    return solver.SolveConfig(**(spec or {}))


def _load_config(path, kind):
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    try:
        jsonschema.validate(cfg, SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise UsageError(f"invalid {kind} config at {where}: {exc.message}") from None
    return cfg


def _region(dom, phi, spec):
    if spec["kind"] == "annulus":
        return limits.annulus_region(dom, spec["inner"], spec["outer"])
    return limits.default_region(dom, phi, branch_margin=spec.get("branch_margin", 0.25),
                                 boundary_margin=spec.get("boundary_margin", 0.2))


# --- subcommands ----------------------------------------------------------------

def cmd_matrix_props(args):
    config = {"command": "matrix-props", "rank": args.rank, "samples": args.samples,
              "seed": args.seed}
    if args.rank < 1 or args.samples < 1:
        raise UsageError("rank and samples must be positive")
    em = Emitter(args.outdir, config)
    res = ensembles.matrix_props(args.rank, args.samples, args.seed)
    stem = args.name or f"matrix_props_r{args.rank}"
    rows = [[int(r[0])] + [float(v) for v in r[1:]] for r in res.table]
    em.csv(f"{stem}.csv", ensembles.PROPS_COLUMNS, rows)
    summary = {
        "rank": args.rank, "samples": args.samples, "seed": args.seed,
        "fitted_C": res.fitted_C, "henrici_C": res.henrici_C,
        "lemma_ratio_min": res.lemma_bounds[0], "lemma_ratio_max": res.lemma_bounds[1],
        "max_conj_err": float(res.column("conj_err").max()),
        "max_homog_err": float(res.column("homog_err").max()),
        "max_proj_err": float(res.column("proj_err").max()),
        "min_gap": float(res.column("gap").min()),
    }
    em.json(f"{stem}.json", summary)
    print(f"rank {args.rank}: fitted C = {res.fitted_C:.6g} (bound {res.henrici_C:.6g}); "
          f"max projector error {summary['max_proj_err']:.3g}")


def cmd_stability(args):
    if args.m is not None or args.n is not None:
        if args.m is None or args.n is None:
            raise UsageError("--m and --n must be given together")
        M, N = parse_matrix(args.m), parse_matrix(args.n)
        if M.shape != N.shape:
            raise UsageError("M and N must have the same size")
        d = matrix.stability_det(M, N)
        v = matrix.common_eigenvector(M, N)
        stable = matrix.is_stable_pair(M, N)
        print(f"det = {fmt_complex(d)}")
        print(f"common eigenvector: {'none' if v is None else ' '.join(fmt_complex(x) for x in v)}")
        print(f"verdict: {'stable' if stable else 'not stable'}")
        return
    config = {"command": "stability", "samples": args.samples, "seed": args.seed}
    em = Emitter(args.outdir, config)
    res = ensembles.stability_ensemble(args.samples, args.seed)
    stem = args.name or "stability"
    rows = [[i, abs(d), bool(c), bool(k), bool(b)]
            for i, (d, c, k, b) in enumerate(zip(res.dets, res.has_common, res.constructed,
                                                 res.in_band))]
    em.csv(f"{stem}.csv", ("pair", "abs_det", "common_eigenvector", "constructed", "in_band"), rows)
    em.json(f"{stem}.json", {"pairs": len(rows), "disagreements": res.disagreements,
                             "excluded_in_band": int(res.in_band.sum()), "seed": args.seed})
    print(f"{len(rows)} pairs, {res.disagreements} disagreements, "
          f"{int(res.in_band.sum())} excluded in margin band")


def cmd_spectral(args):
    cfg = _load_config(args.config, "spectral")
    dom = _domain(cfg["domain"])
    phi = _higgs(dom, cfg["higgs"])
    em = Emitter(args.outdir, cfg)
    stem = cfg.get("name", "spectral")
    sd = spectral.spectral_data(phi)
    disc = spectral.discriminant_field(sd)
    locus = spectral.branch_locus(disc, cfg.get("branch_tol", 1e-8), dom)
    out = {
        "rank": phi.rank,
        "b_c0": [geo.norms(dom, sd.b_k(k))[1] for k in range(1, phi.rank + 1)],
        "disc_c0": geo.norms(dom, disc)[1],
        "holomorphy_residual": phi.holomorphy_residual(),
        "branch_locus": np.argwhere(locus).tolist(),
    }
    if "region" in cfg:
        region = _region(dom, phi, cfg["region"])
        track = spectral.sheet_track(phi, region)
        out["track"] = {"delta": track.delta, "S": track.S,
                        "valid_nodes": int(track.valid_mask.sum())}
    if phi.rank == 2 and cfg.get("loops"):
        loops = [spectral.circle_loop(dom, complex(*lp["center"]), lp["radius"])
                 for lp in cfg["loops"]]
        z2 = spectral.z2_form(dom, sd.b_k(2), loops)
        out["monodromy"] = z2.monodromy
        out["zero_set"] = np.argwhere(z2.zero_set).tolist()
    em.json(f"{stem}.json", out)
    em.field(f"{stem}_disc", dom, disc)
    print(f"branch locus: {len(out['branch_locus'])} nodes")


def _finish_solve(args, report):
    if args.require_converged and not report.converged:
        raise NotConverged(f"solver did not converge (sup residual {report.sup_residual:.3e})")


def cmd_solve(args):
    cfg = _load_config(args.config, "solve")
    dom = _domain(cfg["domain"])
    phi = _higgs(dom, cfg["higgs"])
    H0 = _metric(dom, cfg.get("initial_metric"), phi.rank)
    mu = cfg.get("mu", 0.0)
    em = Emitter(args.outdir, cfg)
    stem = cfg.get("name", "solve")
    H, report = solver.heat_flow(dom, phi.M, H0, mu, _solver_config(cfg.get("solver")))
    report.diagnostics["l2_identities"] = solver.l2_identities(dom, H, phi.M, mu)
    em.field(f"{stem}_H", dom, H)
    em.json(f"{stem}_report.json", report.to_json())
    print(f"converged={report.converged} steps={report.steps} sup_residual={report.sup_residual:.3e}")
    _finish_solve(args, report)


def cmd_monopole(args):
    cfg = _load_config(args.config, "monopole")
    dom = _domain(cfg["domain"])
    z = dom.z
    f = np.polyval([_entry(e) for e in reversed(cfg["f"])], z)
    u_bc = None
    if "boundary_u" in cfg:
        u_bc = np.polyval([_entry(e) for e in reversed(cfg["boundary_u"])], z).real
    data = monopole.MonopoleData(dom, f, c=cfg.get("c", 0.0), u_bc=u_bc,
                                 solve_c=cfg.get("solve_c", False))
    conf = _solver_config(cfg.get("solver"))
    em = Emitter(args.outdir, cfg)
    stem = cfg.get("name", "monopole")
    u, report = monopole.kazdan_warner_solve(data, conf)
    report.diagnostics["crosscheck"] = monopole.monopole_crosscheck(dom, u, f)
    if cfg.get("negative_control"):
        flipped = monopole.MonopoleData(dom, f, c=data.c, u_bc=u_bc, c_beta=-data.c_beta)
        # the flipped equation has no solution to converge to; a few steps suffice
        u_bad, rep_bad = monopole.kazdan_warner_solve(
            flipped, dataclasses.replace(conf, max_steps=min(conf.max_steps, 10)))
        report.diagnostics["negative_control"] = {
            "converged": rep_bad.converged,
            "crosscheck": monopole.monopole_crosscheck(dom, u_bad, f),
        }
    em.field(f"{stem}_u", dom, u)
    em.json(f"{stem}_report.json", report.to_json())
    print(f"converged={report.converged} sup_residual={report.sup_residual:.3e} "
          f"crosscheck={report.diagnostics['crosscheck']:.3e}")
    _finish_solve(args, report)


def _svg(records, fields):
    w, h, pad = 480, 320, 40
    ts = [r.t for r in records]
    series = {}
    for name in fields:
        ys = [getattr(r, name) for r in records]
        if all(y > 0 for y in ys):
            series[name] = [math.log10(y) for y in ys]
    if not series:
        return None
    lo = min(min(v) for v in series.values())
    hi = max(max(v) for v in series.values())
    hi = hi if hi > lo else lo + 1

    def px(t, y):
        x = pad + (w - 2 * pad) * (t - ts[0]) / max(ts[-1] - ts[0], 1e-300)
        return x, h - pad - (h - 2 * pad) * (y - lo) / (hi - lo)

    colors = ["#1b6ca8", "#c0392b", "#27ae60", "#8e44ad"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">',
             f'<rect width="{w}" height="{h}" fill="white"/>']
    for i, (name, ys) in enumerate(series.items()):
        pts = " ".join("{:.2f},{:.2f}".format(*px(t, y)) for t, y in zip(ts, ys))
        c = colors[i % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{c}" points="{pts}"/>')
        parts.append(f'<text x="{pad + 5}" y="{pad + 14 * (i + 1)}" fill="{c}" '
                     f'font-size="11">{name} (log10)</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_sweep(args):
    cfg = _load_config(args.config, "sweep")
    dom = _domain(cfg["domain"])
    phi = _higgs(dom, cfg["higgs"])
    H_bc = _metric(dom, cfg.get("boundary_metric"), phi.rank)
    region = _region(dom, phi, cfg["region"])
    em = Emitter(args.outdir, cfg)
    stem = cfg.get("name", "sweep")
    records = limits.t_sweep(phi, H_bc, cfg["t_list"], region,
                             _solver_config(cfg.get("solver")), cfg.get("mode", "general"))
    em.csv(f"{stem}.csv", limits.CSV_FIELDS, [r.row() for r in records])
    fits = []
    for spec in cfg.get("fits", []):
        try:
            fits.append(vars(limits.fit_decay(records, spec["field"], spec["model"])))
        except HiggsLabError as exc:
            fits.append({"field": spec["field"], "model": spec["model"], "error": str(exc)})
    em.json(f"{stem}.json", {"records": [r.to_json() for r in records], "fits": fits,
                             "region_nodes": int(region.sum())})
    if args.plot:
        svg = _svg(records, limits.DECAY_FIELDS)
        if svg:
            em.text(f"{stem}.svg", svg)
    for r in records:
        print(f"t={r.t:g} converged={r.converged} gap_pPi_c0={r.gap_pPi_c0:.3e}")
    if args.require_converged and not all(r.converged for r in records):
        raise NotConverged("at least one sweep solve did not converge")


def cmd_fit(args):
    try:
        text = Path(args.csv).read_text()
    except OSError as exc:
        raise UsageError(str(exc)) from None
    if args.field not in limits.CSV_FIELDS[1:-1]:
        raise UsageError(f"unknown field {args.field!r}")
    try:
        records = limits.read_records_csv(text)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"cannot parse sweep CSV: {exc}") from None
    config = {"command": "fit", "csv_sha256": hashlib.sha256(text.encode()).hexdigest(),
              "field": args.field, "model": args.model}
    em = Emitter(args.outdir, config)
    fit = limits.fit_decay(records, args.field, args.model)
    em.json(args.name or f"fit_{args.field}_{args.model}.json", vars(fit))
    print(f"{args.field} {args.model}: rate = {fit.rate:.6g}, r^2 = {fit.r_squared:.6f}")


# --- entry point ------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="higgslab", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"higgslab {__version__}")
    p.add_argument("--outdir", default=".", help="directory for output artifacts")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("matrix-props", help="random-ensemble checks of matrix invariants")
    s.add_argument("--rank", type=int, required=True)
    s.add_argument("--samples", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--name")
    s.set_defaults(func=cmd_matrix_props)

    s = sub.add_parser("stability", help="stability of a rank-2 pair or a random ensemble")
    s.add_argument("--m")
    s.add_argument("--n")
    s.add_argument("--samples", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--name")
    s.set_defaults(func=cmd_stability)

    for name, func, hlp in (("spectral", cmd_spectral, "spectral cover of a polynomial field"),
                            ("solve", cmd_solve, "heat-flow solve for the metric"),
                            ("monopole", cmd_monopole, "abelian monopole solve and cross-check"),
                            ("sweep", cmd_sweep, "large-t scaling sweep")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("--config", required=True)
        if name != "spectral":
            s.add_argument("--require-converged", action="store_true")
        if name == "sweep":
            s.add_argument("--plot", action="store_true", help="also write an SVG plot")
        s.set_defaults(func=func)

    s = sub.add_parser("fit", help="fit a decay law to a sweep CSV column")
    s.add_argument("--csv", required=True)
    s.add_argument("--field", required=True)
    s.add_argument("--model", choices=["exponential", "power"], default="exponential")
    s.add_argument("--name")
    s.set_defaults(func=cmd_fit)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (HiggsLabError, ValueError, TypeError) as exc:
        code = EXIT_INVALID if isinstance(exc, (ValueError, TypeError)) else EXIT_FAIL
        print(f"error: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


run = main
