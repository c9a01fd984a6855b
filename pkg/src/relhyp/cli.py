"""Command line and pipeline runner.

``relhyp run CONFIG`` executes every job of a config file (or a shipped
preset name) and writes outputs plus ``manifest.json``.  The other commands
run one stage from flags and print the export to stdout.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .analysis import (
    DeltaPolicy,
    space_graph,
    delta_growth_scan,
    fineness_profile,
    measure_delta,
    reports_csv,
    reports_json,
    scan_svg,
)
from .bcp import bcp_scan, scan_json
from .boundary import circle_signal, cluster_count, export_boundary, sample_boundary
from .cayley import build_ball
from .coning import cone_off
from .config import JobConfig, RunConfig, int_list, parse_config, parse_peripheral, validate_job
from .cusping import build_cusped, build_horoball, default_depth
from .errors import ConfigError, InputError, ResourceError
from .graphcore import SCALE, path_graph

OUTPUT_ENV = "RELHYP_OUTPUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_RESOURCE = 0, 2, 3


# -- building spaces ----------------------------------------------------------


class Spaces:
    """Builds (and remembers) the space of a job at each radius."""

    def __init__(self, job: JobConfig, vertex_cap: int):
        self.job = job
        self.cap = vertex_cap
        self.oracle = job.oracle()
        self.family = job.family(self.oracle)
        self._balls: dict = {}
        self._spaces: dict = {}
        self.warnings: list = []

    def ball(self, R: int):
        if R not in self._balls:
            self._balls[R] = build_ball(self.oracle, R, self.cap)
        return self._balls[R]

    def coned(self, R: int):
        key = ("coned", R)
        if key not in self._spaces:
            self._spaces[key] = cone_off(self.ball(R), self.family)
        return self._spaces[key]

    def space(self, R: int):
        kind = self.job.space
        if kind == "ball":
            return self.ball(R)
        if kind == "coned":
            return self.coned(R)
        key = ("cusped", R)
        if key not in self._spaces:
            depth = self.job.depth if self.job.depth is not None else default_depth(R)
            if depth < default_depth(R):
                self.warnings.append(f"depth {depth} is below ceil(log2 {R}) + 1 = {default_depth(R)}")
            self._spaces[key] = build_cusped(self.ball(R), self.family, depth, self.job.coset_metric)
        return self._spaces[key]


# -- stages -------------------------------------------------------------------
# each stage returns (result object, {relative file name: bytes})


def stage_export(job: JobConfig, sp: Spaces):
    files = {}
    for R in job.radii:
        g = space_graph(sp.space(R))
        for fmt in job.export:
            files[f"graph_R{R}.{fmt}"] = g.export(fmt)
    return None, files


def delta_policy(job: JobConfig, seed: int) -> DeltaPolicy:
    return DeltaPolicy(job.delta_policy, job.delta_samples, job.delta_slim_samples, seed, job.delta_cap)


def stage_delta(job: JobConfig, sp: Spaces, seed: int):
    policy = delta_policy(job, seed)
    slim = job.delta == "both"
    if len(job.radii) >= 3:
        scan = delta_growth_scan(sp.space, job.radii, policy, job.delta_margin, slim, job.name)
        files = {"delta.json": reports_json(scan), "delta.csv": reports_csv(scan.reports),
                 "delta.svg": scan_svg(scan)}
        return scan, files
    reports = [measure_delta(sp.space(R), policy, job.delta_margin, slim) for R in job.radii]
    return reports, {"delta.json": reports_json(reports), "delta.csv": reports_csv(reports)}


def _lam_tag(lam) -> str:
    return str(Fraction(lam)).replace("/", "_")


def stage_bcp(job: JobConfig, sp: Spaces, budget: int):
    scans, files = [], {}
    for lam in job.bcp_lambda:
        scan = bcp_scan(sp.oracle, sp.family, lam, job.radii, budget, job.bcp_allow_large, sp.cap)
        scans.append(scan)
        files[f"bcp_lambda{_lam_tag(lam)}.json"] = scan_json(scan, sp.oracle)
    return scans, files


def stage_fineness(job: JobConfig, sp: Spaces, budget: int):
    profiles = []
    for R in job.radii:
        if job.fineness_edges == "identity-cone":
            space = sp.coned(R)
            profiles.append(fineness_profile(space, job.fineness_n, budget=budget))
        else:
            profiles.append(fineness_profile(sp.space(R), job.fineness_n, budget=budget))
    doc = {"radii": list(job.radii), "profiles": [p.to_dict() for p in profiles]}
    return profiles, {"fineness.json": (json.dumps(doc, indent=1, sort_keys=True) + "\n").encode()}


@dataclass
class BoundaryResult:
    sample: object
    counts: dict
    circle: object


def stage_boundary(job: JobConfig, sp: Spaces):
    R = job.boundary_radius if job.boundary_radius is not None else job.radii[-1]
    sample = sample_boundary(sp.space(R), R, job.boundary_epsilon, sphere=job.boundary_sphere)
    counts = {k: cluster_count(sample, k) for k in range(1, R)}
    circle = circle_signal(sample)
    summary = {"radius": R, "points": sample.size, "epsilon": sample.epsilon,
               "cluster_counts": {str(k): v for k, v in counts.items()}, "circle": circle.to_dict()}
    files = {
        "boundary.csv": export_boundary(sample, "csv"),
        "boundary.json": export_boundary(sample, "json"),
        "boundary_heatmap.svg": export_boundary(sample, "svg-heatmap"),
        "boundary_dendrogram.svg": export_boundary(sample, "svg-dendrogram"),
        "boundary_clusters.json": (json.dumps(summary, indent=1, sort_keys=True) + "\n").encode(),
    }
    return BoundaryResult(sample, counts, circle), files


def horoball_formula(d: int, depth: int) -> int:
    """Paper length of the best up-across-down route between the ends of a length-d path."""
    return min(2 * k + math.ceil(d / 2 ** k) for k in range(depth + 1))


def stage_horoball(job: JobConfig):
    depth = job.depth if job.depth is not None else 4
    rows = []
    for d in job.lengths:
        h = build_horoball(path_graph(d + 1), depth)
        dist = int(h.graph.distances_from(h.vertex(0, 0))[h.vertex(d, 0)]) // SCALE
        rows.append({"length": d, "depth": depth, "distance": dist, "formula": horoball_formula(d, depth)})
    doc = {"rows": rows, "all_match": all(r["distance"] == r["formula"] for r in rows)}
    return doc, {"horoball.json": (json.dumps(doc, indent=1, sort_keys=True) + "\n").encode()}


# -- pipeline -------------------------------------------------------------------


@dataclass
class PipelineResult:
    manifest: dict
    results: dict = field(default_factory=dict)  # job -> stage -> result
    output: Path | None = None
    error: Exception | None = None

    @property
    def ok(self) -> bool:
        return self.manifest["status"] == "ok"


def _job_stages(job: JobConfig, run: RunConfig):
    if job.space == "horoball-path":
        return [("horoball", lambda sp: stage_horoball(job))]
    stages = []
    if job.export:
        stages.append(("export", lambda sp: stage_export(job, sp)))
    if job.delta != "off":
        stages.append(("delta", lambda sp: stage_delta(job, sp, run.seed)))
    if job.bcp:
        stages.append(("bcp", lambda sp: stage_bcp(job, sp, run.budget)))
    if job.fineness:
        stages.append(("fineness", lambda sp: stage_fineness(job, sp, run.budget)))
    if job.boundary:
        stages.append(("boundary", lambda sp: stage_boundary(job, sp)))
    return stages


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def run_pipeline(config: RunConfig, output: str | os.PathLike | None = None, write: bool = True) -> PipelineResult:
    """Build, analyse and export every job; partial outputs survive a failure."""
    out = Path(output or os.environ.get(OUTPUT_ENV) or config.output)
    manifest = {"created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
                "config": config.effective(), "files": [], "stages": [], "status": "ok"}
    result = PipelineResult(manifest, {}, out if write else None)
    for job in config.jobs:
        result.results[job.name] = {}
        sp = None
        for name, fn in _job_stages(job, config):
            try:
                if sp is None and job.space != "horoball-path":
                    sp = Spaces(job, config.vertex_cap)
                obj, files = fn(sp)
            except (InputError, ResourceError) as exc:
                manifest["status"] = "failed"
                manifest["failed_stage"] = f"{job.name}.{name}"
                manifest["error"] = f"{type(exc).__name__}: {exc}"
                manifest["partial"] = True
                manifest["stages"].append({"job": job.name, "stage": name, "status": "failed"})
                result.error = exc
                _finish(result, write)
                return result
            result.results[job.name][name] = obj
            for w in sp.warnings if sp is not None else ():
                if w not in manifest.setdefault("warnings", []):
                    manifest["warnings"].append(w)
                    print(f"warning: {w}", file=sys.stderr)
            manifest["stages"].append({"job": job.name, "stage": name, "status": "ok"})
            for fname, data in sorted(files.items()):
                rel = f"{job.name}/{fname}"
                if write:
                    path = out / rel
                    path.parent.mkdir(parents=True, exist_ok=True)
                    path.write_bytes(data)
                manifest["files"].append({"path": rel, "sha256": _digest(data), "bytes": len(data)})
    _finish(result, write)
    return result


def _finish(result: PipelineResult, write: bool):
    if write:
        result.output.mkdir(parents=True, exist_ok=True)
        (result.output / "manifest.json").write_text(json.dumps(result.manifest, indent=1, sort_keys=True) + "\n")


# -- presets --------------------------------------------------------------------


def preset_names() -> list:
    root = resources.files("relhyp") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    f = resources.files("relhyp") / "presets" / f"{name}.cfg"
    if not f.is_file():
        raise ConfigError(f"no preset named {name!r}")
    return f.read_text()


def load_config(ref: str) -> RunConfig:
    """A path to a config file, or the name of a shipped preset."""
    p = Path(ref)
    if p.is_file():
        return parse_config(p.read_text())
    return parse_config(preset_text(ref))


# -- argument parsing -----------------------------------------------------------


def _common(p: argparse.ArgumentParser, radii: bool = False):
    p.add_argument("--group", required=True, help="e.g. free(2), free_abelian(2), surface(2)")
    p.add_argument("--peripheral", action="append", default=[], metavar="LABEL=SPEC",
                   help="cyclic(w), factor(i), whole or a bare word; repeatable")
    if radii:
        p.add_argument("--radii", required=True, help="comma-separated, increasing")
    else:
        p.add_argument("--radius", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vertex-cap", type=int, default=20_000)
    p.add_argument("--out", help="write here instead of stdout")


def _space_flags(p: argparse.ArgumentParser, default="ball"):
    p.add_argument("--space", choices=("ball", "coned", "cusped"), default=default)
    p.add_argument("--depth", type=int)
    p.add_argument("--coset-metric", choices=("peripheral", "induced"), default="peripheral")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relhyp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, space in (("ball", "ball"), ("cone", "coned"), ("cusp", "cusped")):
        p = sub.add_parser(name, help=f"build and export a {space} graph")
        _common(p)
        if name == "cusp":
            p.add_argument("--depth", type=int)
            p.add_argument("--coset-metric", choices=("peripheral", "induced"), default="peripheral")
        p.add_argument("--export", choices=("json", "csv", "dot"), default="json")
        p.set_defaults(space=space)
    p = sub.add_parser("delta", help="four-point (and slim) delta over radii")
    _common(p, radii=True)
    _space_flags(p)
    p.add_argument("--policy", choices=("auto", "exhaustive", "sampled"), default="auto")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--cap", type=int, default=120)
    p.add_argument("--margin", type=int)
    p.add_argument("--slim", action="store_true")
    p.add_argument("--export", choices=("json", "csv", "svg"), default="json")
    p = sub.add_parser("bcp", help="bounded coset penetration scan")
    _common(p, radii=True)
    p.add_argument("--lambda", dest="lam", default="1")
    p.add_argument("--allow-large-lambda", action="store_true")
    p.add_argument("--export", choices=("json",), default="json")
    p = sub.add_parser("fineness", help="circuit counts through identity cone edges")
    _common(p, radii=True)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--export", choices=("json",), default="json")
    p = sub.add_parser("boundary", help="boundary sample on a sphere")
    _common(p)
    _space_flags(p)
    p.add_argument("--epsilon", type=float, default=math.log(2))
    p.add_argument("--sphere", choices=("metric", "word"), default="metric")
    p.add_argument("--export", choices=("csv", "json", "svg", "svg-heatmap", "svg-dendrogram"), default="csv")
    p = sub.add_parser("run", help="run a config file or preset")
    p.add_argument("config", help="path or preset name")
    p.add_argument("--output", help=f"output directory (overrides the config; {OUTPUT_ENV} overrides both)")
    sub.add_parser("presets", help="list shipped presets")
    return ap


def _job_from_args(args, **extra) -> JobConfig:
    periph = []
    for item in args.peripheral:
        if "=" not in item:
            raise ConfigError(f"expected LABEL=SPEC, got {item!r}", key="peripheral")
        label, spec = item.split("=", 1)
        periph.append(parse_peripheral(label.strip(), spec, f"peripheral.{label.strip()}"))
    if hasattr(args, "radii"):
        radii = int_list(args.radii, "radii")
    else:
        radii = (args.radius,)
    kw = dict(name="cli", group=args.group, peripherals=tuple(periph), radii=radii,
              space=getattr(args, "space", "ball"), depth=getattr(args, "depth", None),
              coset_metric=getattr(args, "coset_metric", "peripheral"), delta="off")
    kw.update(extra)
    job = JobConfig(**kw)
    validate_job(job)
    return job


def _emit(args, data: bytes):
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "presets":
        print("\n".join(preset_names()))
        return EXIT_OK
    if cmd == "run":
        cfg = load_config(args.config)
        res = run_pipeline(cfg, args.output)
        print(f"manifest: {res.output / 'manifest.json'}")
        for f in res.manifest["files"]:
            print(f"  {f['path']}  {f['sha256'][:12]}")
        if not res.ok:
            print(f"failed at {res.manifest['failed_stage']}: {res.manifest['error']}", file=sys.stderr)
            raise res.error
        return EXIT_OK
    if cmd in ("ball", "cone", "cusp"):
        job = _job_from_args(args, export=(args.export,))
        sp = Spaces(job, args.vertex_cap)
        _emit(args, space_graph(sp.space(args.radius)).export(args.export))
        return EXIT_OK
    if cmd == "delta":
        job = _job_from_args(args, delta="both" if args.slim else "four-point", delta_policy=args.policy,
                             delta_samples=args.samples, delta_cap=args.cap, delta_margin=args.margin)
        obj, files = stage_delta(job, Spaces(job, args.vertex_cap), args.seed)
        name = {"json": "delta.json", "csv": "delta.csv", "svg": "delta.svg"}[args.export]
        if name not in files:
            raise InputError("svg output needs at least three radii")
        _emit(args, files[name])
        return EXIT_OK
    if cmd == "bcp":
        try:
            lams = tuple(Fraction(x) for x in args.lam.split(","))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"bad lambda {args.lam!r}", key="lambda") from None
        job = _job_from_args(args, space="coned", bcp=True, bcp_lambda=lams,
                             bcp_allow_large=args.allow_large_lambda)
        _, files = stage_bcp(job, Spaces(job, args.vertex_cap), 1_000_000)
        _emit(args, b"".join(files[k] for k in sorted(files)))
        return EXIT_OK
    if cmd == "fineness":
        job = _job_from_args(args, space="coned", fineness=True, fineness_n=args.n)
        _, files = stage_fineness(job, Spaces(job, args.vertex_cap), 1_000_000)
        _emit(args, files["fineness.json"])
        return EXIT_OK
    if cmd == "boundary":
        job = _job_from_args(args, boundary=True, boundary_epsilon=args.epsilon, boundary_sphere=args.sphere)
        res, _ = stage_boundary(job, Spaces(job, args.vertex_cap))
        fmt = "svg-heatmap" if args.export == "svg" else args.export
        _emit(args, export_boundary(res.sample, fmt))
        return EXIT_OK
    raise InputError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ResourceError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InputError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
