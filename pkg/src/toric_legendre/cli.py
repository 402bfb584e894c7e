"""Command-line entry point: ``toric-legendre COMMAND --config run.json``.

Commands and their outputs:

  polytope-verify  JSON report (simple, smooth, failures, vertices)
  w-eval           CSV  x_i, alpha_i, w, grad_x_i, grad_alpha_i, mixed_det
  forward          CSV  alpha_i, g, x_i, grad_norm, status
  invert           CSV  alpha_i, x_i, v_value, v_grad_i, residual
  certify          JSON report with one entry per check
  spectral-check   CSV  hbar, lambda_min, c_alpha, gap, gap_over_hbar

Every CSV starts with a ``#`` provenance line (package version and the
SHA-256 of the normalized config); JSON reports carry the same data under
``"provenance"``.  Exit codes: 0 success, 1 config error, 2 certificate
failure, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .certify import (boundary_inward_check, hirzebruch_critical_curve_check, mixed_det_scan,
                      near_vertex_certificate)
from .forward import AlphaBox, GTable, MinResult, Status, sample_g
from .kinetic import DomainError, as_kinetic, w_eval
from .legendre import reconstruct_v
from .polytope import (DelzantPolytope, Region, enumerate_vertices, make_box, make_hirzebruch,
                       make_orthant, make_simplex, verify_delzant)
from .potential import (PotentialField, check_sign_conditions, check_strict_convexity, quadratic,
                        separable, sum_composed)
from .spectral1d import semiclassical_limit_check

__all__ = ["ConfigError", "RunConfig", "COMMANDS", "build_polytope", "build_potential", "run",
           "main"]

COMMANDS = ("polytope-verify", "w-eval", "forward", "invert", "certify", "spectral-check")
EXIT_OK, EXIT_CONFIG, EXIT_CERT, EXIT_SOLVER = 0, 1, 2, 3

BUILTINS = {
    "simplex": lambda p: make_simplex(int(p["n"])),
    "box": lambda p: make_box(p["c"]),
    "hirzebruch": lambda p: make_hirzebruch(int(p["n"])),
    "orthant": lambda p: make_orthant(int(p["n"])),
}


class ConfigError(ValueError):
    pass


def _canon(d: dict) -> dict:
    return json.loads(json.dumps(d))


def _fmt(v) -> str:
    return "%.17g" % v


def build_polytope(spec: dict) -> DelzantPolytope:
    if not isinstance(spec, dict):
        raise ConfigError("polytope must be an object")
    if "builtin" in spec:
        name = spec["builtin"]
        if name not in BUILTINS:
            raise ConfigError(f"unknown builtin polytope {name!r}")
        return BUILTINS[name](spec.get("params", {}))
    return DelzantPolytope(spec["normals"], spec["offsets"])


def build_potential(spec: dict) -> PotentialField:
    fam = spec.get("family")
    if fam == "quadratic":
        return quadratic(spec["Q"], spec["center"], spec.get("const", 0.0))
    if fam == "sum_composed":
        return sum_composed(spec["coeffs"], spec["dim"])
    if fam == "separable":
        return separable(spec["coeffs"])
    raise ConfigError(f"unknown or non-serializable potential family {fam!r}")


def build_alpha_box(spec: dict) -> AlphaBox:
    return AlphaBox(tuple(spec["lower"]), tuple(spec["upper"]), tuple(spec["resolution"]))


def _box_config(box: AlphaBox) -> dict:
    return {"lower": list(box.lower), "upper": list(box.upper), "resolution": list(box.resolution)}


def build_region(spec: dict) -> Region:
    pts = spec.get("points")
    return Region(spec.get("kind", "full"),
                  tuple(map(float, spec["lower"])) if "lower" in spec else None,
                  tuple(map(float, spec["upper"])) if "upper" in spec else None,
                  spec.get("predicate"), int(spec.get("resolution", 32)),
                  tuple(tuple(map(float, p)) for p in pts) if pts is not None else None)


@dataclass
class RunConfig:
    """Normalized run configuration.

    Sections are stored as plain JSON data in canonical form, after being
    validated by building the objects they describe.
    """

    polytope: Optional[dict] = None
    potential: Optional[dict] = None
    alpha_box: Optional[dict] = None
    region: Optional[dict] = None
    options: dict = field(default_factory=dict)
    output: Optional[str] = None
    seed: int = 0

    @classmethod
    def parse(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - {"polytope", "potential", "alpha_box", "region", "options",
                               "output", "seed"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(options=_canon(dict(data.get("options", {}))), output=data.get("output"),
                      seed=int(data.get("seed", 0)))
            if data.get("polytope") is not None:
                cfg.polytope = _canon(build_polytope(data["polytope"]).to_config())
            if data.get("potential") is not None:
                cfg.potential = _canon(build_potential(data["potential"]).to_config())
            if data.get("alpha_box") is not None:
                cfg.alpha_box = _box_config(build_alpha_box(data["alpha_box"]))
            if data.get("region") is not None:
                cfg.region = _canon(build_region(data["region"]).to_config())
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc!r}") from exc
        if cfg.polytope and cfg.potential:
            dim = cfg.polytope_obj().dim
            if cfg.potential_obj().dim != dim:
                raise ConfigError("potential and polytope dimensions differ")
        if cfg.polytope and cfg.alpha_box:
            if len(cfg.alpha_box["lower"]) != cfg.polytope_obj().dim:
                raise ConfigError("alpha box and polytope dimensions differ")
        return cfg

    def serialize(self) -> dict:
        out = {}
        for key in ("polytope", "potential", "alpha_box", "region"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        out["options"] = self.options
        if self.output is not None:
            out["output"] = self.output
        out["seed"] = self.seed
        return out

    def sha256(self) -> str:
        blob = json.dumps(self.serialize(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def require(self, *keys):
        missing = [k for k in keys if getattr(self, k) is None]
        if missing:
            raise ConfigError(f"config is missing {', '.join(missing)}")

    def polytope_obj(self) -> DelzantPolytope:
        self.require("polytope")
        return build_polytope(self.polytope)

    def potential_obj(self) -> PotentialField:
        self.require("potential")
        return build_potential(self.potential)

    def alpha_box_obj(self) -> AlphaBox:
        self.require("alpha_box")
        return build_alpha_box(self.alpha_box)

    def region_obj(self) -> Optional[Region]:
        return None if self.region is None else build_region(self.region)


@dataclass
class Output:
    text: str
    code: int = EXIT_OK
    message: str = ""


def _csv(cfg: RunConfig, header: list, rows: list) -> str:
    buf = io.StringIO()
    buf.write(f"# toric_legendre {__version__} config_sha256={cfg.sha256()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def _json(cfg: RunConfig, payload: dict) -> str:
    payload = {"provenance": {"version": __version__, "config_sha256": cfg.sha256()}, **payload}
    return json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n"


def _cols(prefix: str, n: int) -> list:
    return [f"{prefix}_{i}" for i in range(n)]


# Commands ---------------------------------------------------------------------------


def cmd_polytope_verify(cfg: RunConfig, threads: int) -> Output:
    P = cfg.polytope_obj()
    rep = verify_delzant(P)
    d = rep.to_dict()
    d["bounded"] = P.is_bounded()
    d["polytope"] = cfg.polytope
    ok = rep.simple and rep.smooth
    return Output(_json(cfg, d), EXIT_OK if ok else EXIT_CERT,
                  "" if ok else f"not Delzant: {rep.failures}")


def cmd_w_eval(cfg: RunConfig, threads: int) -> Output:
    P = cfg.polytope_obj()
    n = P.dim
    pts = cfg.options.get("points")
    if pts is None:
        region = cfg.region_obj()
        if region is None:
            raise ConfigError("w-eval needs options.points or a region")
        pts = region.sample(P)
    pts = np.asarray(pts, dtype=float).reshape(-1, n)
    alphas = cfg.alpha_box_obj().grid()
    rows = []
    for x in pts:
        for a in alphas:
            try:
                e = w_eval(P, x, a)
            except DomainError as exc:
                raise ConfigError(f"point {x.tolist()} is outside the polytope: {exc}") from exc
            rows.append([*x, *a, e.value, *e.grad_x, *e.grad_alpha, float(np.linalg.det(e.mixed_hess))])
    header = _cols("x", n) + _cols("alpha", n) + ["w"] + _cols("grad_x", n) + \
        _cols("grad_alpha", n) + ["mixed_det"]
    return Output(_csv(cfg, header, rows))


def _forward_table(cfg: RunConfig, threads: int) -> GTable:
    P = cfg.polytope_obj()
    x0 = cfg.options.get("x0")
    return sample_g(P, cfg.potential_obj(), cfg.alpha_box_obj(), x0=x0,
                    warm=bool(cfg.options.get("warm_start", True)), threads=threads,
                    multistart=bool(cfg.options.get("multistart", False)))


def cmd_forward(cfg: RunConfig, threads: int) -> Output:
    table = _forward_table(cfg, threads)
    n = table.grid.shape[1]
    rows = [[*r.alpha, r.g_value, *r.x_star, r.grad_norm, r.status.value] for r in table.results]
    header = _cols("alpha", n) + ["g"] + _cols("x", n) + ["grad_norm", "status"]
    bad = sum(not r.converged for r in table.results)
    return Output(_csv(cfg, header, rows), EXIT_SOLVER if bad else EXIT_OK,
                  f"{bad} forward solves did not converge" if bad else "")


def read_forward_csv(path: str, box: Optional[AlphaBox] = None) -> GTable:
    """Load a ``forward`` CSV back into a GTable (minimizers and statuses included)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    n = sum(1 for c in reader.fieldnames if c.startswith("alpha_"))
    results = []
    for row in reader:
        a = np.array([float(row[f"alpha_{i}"]) for i in range(n)])
        x = np.array([float(row[f"x_{i}"]) for i in range(n)])
        results.append(MinResult(a, x, float(row["g"]), float(row["grad_norm"]), math.nan, 0,
                                 Status(row["status"])))
    grid = np.array([r.alpha for r in results]).reshape(-1, n)
    if box is not None and (len(grid) != len(box.grid()) or not np.allclose(grid, box.grid())):
        box = None
    return GTable(grid, results, box, {"source": path})


def cmd_invert(cfg: RunConfig, threads: int) -> Output:
    P = cfg.polytope_obj()
    kin = as_kinetic(P)
    box = cfg.alpha_box_obj() if cfg.alpha_box is not None else None
    src = cfg.options.get("forward_csv")
    if src is not None:
        try:
            table = read_forward_csv(src, box)
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot read forward table {src!r}: {exc}") from exc
    else:
        table = _forward_table(cfg, threads)
    mode = cfg.options.get("mode", "envelope")
    if mode not in ("envelope", "fd"):
        raise ConfigError("options.mode must be 'envelope' or 'fd'")
    if mode == "fd" and table.box is None:
        raise ConfigError("fd mode needs an alpha_box matching the forward table")
    res = reconstruct_v(kin, table, region=cfg.region_obj(), mode=mode,
                        x0=cfg.options.get("x0"), anchor=cfg.options.get("anchor"))
    n = P.dim
    rows = []
    for s in res.samples:
        x = s.x_of_alpha if s.x_of_alpha is not None else [math.nan] * n
        g = s.v_grad if s.v_grad is not None else [math.nan] * n
        rows.append([*s.alpha, *x, s.v_value, *g, s.residual])
    header = _cols("alpha", n) + _cols("x", n) + ["v_value"] + _cols("v_grad", n) + ["residual"]
    bad = sum(not s.ok for s in res.samples)
    return Output(_csv(cfg, header, rows), EXIT_SOLVER if bad else EXIT_OK,
                  f"{bad} samples failed to invert" if bad else "")


def _vertex_for(P, spec):
    verts = enumerate_vertices(P)
    target = np.asarray(spec, dtype=float)
    return min(verts, key=lambda v: float(np.linalg.norm(v.point - target)))


def cmd_certify(cfg: RunConfig, threads: int) -> Output:
    P = cfg.polytope_obj()
    region = cfg.region_obj() or Region.full()
    checks = cfg.options.get("checks", ["mixed_det"])
    reports = []
    for name in checks:
        if name == "mixed_det":
            reports.append(mixed_det_scan(P, region, cfg.alpha_box_obj()).to_dict())
        elif name == "boundary":
            reports.append(boundary_inward_check(P, cfg.potential_obj(), region,
                                                 cfg.alpha_box_obj()).to_dict())
        elif name == "hirzebruch_curve":
            if P.kind != "hirzebruch":
                raise ConfigError("hirzebruch_curve needs the builtin hirzebruch polytope")
            reports.append(hirzebruch_critical_curve_check(P.param_dict["n"],
                                                           cfg.alpha_box_obj()).to_dict())
        elif name == "near_vertex":
            nv = cfg.options.get("near_vertex", {})
            try:
                v = _vertex_for(P, nv["vertex"])
                reports.append(near_vertex_certificate(P, v, nv["x0"], nv["alpha0"]).to_dict())
            except KeyError as exc:
                raise ConfigError(f"near_vertex needs vertex, x0, alpha0 ({exc})") from exc
        elif name == "convexity":
            reports.append(check_strict_convexity(cfg.potential_obj(), P, region).to_dict())
        elif name.startswith("sign:"):
            reports.append(check_sign_conditions(cfg.potential_obj(), name[5:], P).to_dict())
        else:
            raise ConfigError(f"unknown check {name!r}")
    ok = all(r.get("pass", r.get("passed")) for r in reports)
    return Output(_json(cfg, {"pass": ok, "reports": reports}), EXIT_OK if ok else EXIT_CERT,
                  "" if ok else "certificate failed")


def cmd_spectral_check(cfg: RunConfig, threads: int) -> Output:
    o = cfg.options
    try:
        v1d, alpha, hbars = o["v1d"], float(o["alpha"]), o["hbar"]
    except KeyError as exc:
        raise ConfigError(f"spectral-check needs options.v1d, alpha, hbar ({exc})") from exc
    try:
        out = semiclassical_limit_check(v1d, alpha, hbars, npts=int(o.get("npts", 4000)),
                                        r_max=o.get("r_max"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [[h, lam, out["c_alpha"], g, q] for h, lam, g, q in
            zip(out["hbar"], out["lambda_min"], out["gap"], out["gap_over_hbar"])]
    return Output(_csv(cfg, ["hbar", "lambda_min", "c_alpha", "gap", "gap_over_hbar"], rows))


DISPATCH = {
    "polytope-verify": cmd_polytope_verify,
    "w-eval": cmd_w_eval,
    "forward": cmd_forward,
    "invert": cmd_invert,
    "certify": cmd_certify,
    "spectral-check": cmd_spectral_check,
}


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return RunConfig.parse(data)


def run(command: str, config_path: str, out: Optional[str] = None, threads: int = 1) -> int:
    """Run one command; returns the exit code.  Output is written only if a config parses."""
    if command not in DISPATCH:
        print(f"error: unknown command {command!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(config_path)
        result = DISPATCH[command](cfg, max(1, int(threads)))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    path = out or cfg.output
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(result.text)
    else:
        sys.stdout.write(result.text)
    if result.message:
        print(f"{command}: {result.message}", file=sys.stderr)
    return result.code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="toric-legendre", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output path (overrides the config's 'output'; default stdout)")
    p.add_argument("--threads", type=int, default=1, help="parallel rows in grid sweeps")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.out, args.threads)


if __name__ == "__main__":
    sys.exit(main())
