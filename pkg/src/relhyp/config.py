"""Run configuration: an INI-style grammar of ``[run]`` plus one or more ``[job NAME]`` sections.

Example::

    [run]
    seed = 0

    [job commutator]
    group = free(2)
    peripheral.c = cyclic([a,b])
    space = cusped
    radii = 3,4,5
    delta = four-point
    delta.cap = 200

Unknown sections and keys are rejected.  Words use ``'`` for inverses.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .errors import ConfigError, InputError
from .graphcore import DEFAULT_VERTEX_CAP
from .words import (
    PeripheralFamily,
    cyclic_peripheral,
    factor_peripheral,
    oracle_from_spec,
    whole_peripheral,
)

SPACES = ("ball", "coned", "cusped", "horoball-path")
ON = {"on", "true", "yes", "1"}
OFF = {"off", "false", "no", "0"}

RUN_KEYS = {"seed", "output", "vertex_cap", "budget"}
JOB_KEYS = {
    "group", "space", "radii", "depth", "coset_metric", "lengths", "export",
    "delta", "delta.policy", "delta.samples", "delta.slim_samples", "delta.cap", "delta.margin",
    "bcp", "bcp.lambda", "bcp.allow_large",
    "fineness", "fineness.n", "fineness.edges",
    "boundary", "boundary.epsilon", "boundary.radius", "boundary.sphere",
}


@dataclass(frozen=True)
class PeripheralDecl:
    label: str
    kind: str  # cyclic | factor | whole
    arg: str = ""


@dataclass(frozen=True)
class JobConfig:
    name: str
    group: str = ""
    peripherals: tuple = ()
    space: str = "ball"
    radii: tuple = ()
    depth: int | None = None  # None: ceil(log2 R) + 1 per radius
    coset_metric: str = "peripheral"
    lengths: tuple = ()
    export: tuple = ()
    delta: str = "four-point"  # off | four-point | both
    delta_policy: str = "auto"
    delta_samples: int = 100_000
    delta_slim_samples: int = 20_000
    delta_cap: int = 120
    delta_margin: int | None = None
    bcp: bool = False
    bcp_lambda: tuple = (1,)
    bcp_allow_large: bool = False
    fineness: bool = False
    fineness_n: int = 6
    fineness_edges: str = "identity-cone"
    boundary: bool = False
    boundary_epsilon: float = math.log(2)
    boundary_radius: int | None = None
    boundary_sphere: str = "metric"

    def oracle(self):
        return oracle_from_spec(self.group)

    def family(self, oracle=None) -> PeripheralFamily:
        oracle = oracle or self.oracle()
        reps = []
        for p in self.peripherals:
            try:
                if p.kind == "cyclic":
                    reps.append(cyclic_peripheral(oracle, oracle.parse(p.arg), p.label))
                elif p.kind == "factor":
                    reps.append(factor_peripheral(oracle, int(p.arg), p.label))
                else:
                    reps.append(whole_peripheral(oracle, p.label))
            except (InputError, ValueError) as exc:
                raise ConfigError(str(exc), key=f"{self.name}.peripheral.{p.label}") from None
        return PeripheralFamily(tuple(reps))


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    output: str = "relhyp-out"
    vertex_cap: int = DEFAULT_VERTEX_CAP
    budget: int = 1_000_000
    jobs: tuple = field(default_factory=tuple)

    def effective(self) -> dict:
        """Every setting with defaults filled in, JSON-ready."""
        doc = asdict(self)
        for job in doc["jobs"]:
            job["bcp_lambda"] = [str(x) for x in job["bcp_lambda"]]
        return doc


def _int(text: str, key: str, lo: int | None = None) -> int:
    try:
        v = int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}", key=key) from None
    if lo is not None and v < lo:
        raise ConfigError(f"must be >= {lo}", key=key)
    return v


def int_list(text: str, key: str, increasing: bool = True) -> tuple:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError("empty list", key=key)
    vals = tuple(_int(p, key, 0) for p in parts)
    if increasing and any(a >= b for a, b in zip(vals, vals[1:])):
        raise ConfigError(f"values must be strictly increasing, got {text!r}", key=key)
    return vals


def _switch(text: str, key: str) -> bool:
    t = text.strip().lower()
    if t in ON:
        return True
    if t in OFF:
        return False
    raise ConfigError(f"expected on/off, got {text!r}", key=key)


_PERIPH_RE = re.compile(r"^\s*(cyclic|factor)\s*\((.*)\)\s*$")


def parse_peripheral(label: str, text: str, key: str) -> PeripheralDecl:
    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", label):
        raise ConfigError(f"bad peripheral label {label!r}", key=key)
    t = text.strip()
    if t == "whole":
        return PeripheralDecl(label, "whole")
    m = _PERIPH_RE.match(t)
    if m:
        return PeripheralDecl(label, m.group(1), m.group(2).strip())
    # a bare word is shorthand for the cyclic subgroup it generates
    return PeripheralDecl(label, "cyclic", t)


def _job(name: str, items: dict, lines: dict) -> JobConfig:
    kw: dict = {"name": name}
    periph = []
    for key, raw in items.items():
        path = f"{name}.{key}"
        if key.startswith("peripheral."):
            periph.append(parse_peripheral(key.split(".", 1)[1], raw, path))
            continue
        if key not in JOB_KEYS:
            raise ConfigError(f"unknown key {key!r}", line=lines.get(key), key=path)
        if key == "group":
            kw["group"] = raw.strip()
        elif key == "space":
            if raw.strip() not in SPACES:
                raise ConfigError(f"space must be one of {', '.join(SPACES)}", key=path)
            kw["space"] = raw.strip()
        elif key == "radii":
            kw["radii"] = int_list(raw, path)
        elif key == "lengths":
            kw["lengths"] = int_list(raw, path)
        elif key == "depth":
            kw["depth"] = None if raw.strip() == "auto" else _int(raw, path, 0)
        elif key == "coset_metric":
            if raw.strip() not in ("peripheral", "induced"):
                raise ConfigError("coset_metric must be peripheral or induced", key=path)
            kw["coset_metric"] = raw.strip()
        elif key == "export":
            fmts = tuple(x.strip() for x in raw.split(",") if x.strip())
            bad = [f for f in fmts if f not in ("json", "csv", "dot")]
            if bad:
                raise ConfigError(f"unknown graph export format {bad[0]!r}", key=path)
            kw["export"] = fmts
        elif key == "delta":
            t = raw.strip().lower()
            if t in OFF:
                t = "off"
            if t not in ("off", "four-point", "both"):
                raise ConfigError("delta must be off, four-point or both", key=path)
            kw["delta"] = t
        elif key == "delta.policy":
            if raw.strip() not in ("auto", "exhaustive", "sampled"):
                raise ConfigError("delta.policy must be auto, exhaustive or sampled", key=path)
            kw["delta_policy"] = raw.strip()
        elif key in ("delta.samples", "delta.slim_samples"):
            kw[key.replace(".", "_")] = _int(raw, path, 1)
        elif key == "delta.cap":
            kw["delta_cap"] = _int(raw, path, 4)
        elif key == "delta.margin":
            kw["delta_margin"] = None if raw.strip() == "auto" else _int(raw, path, 0)
        elif key in ("bcp", "fineness", "boundary", "bcp.allow_large"):
            kw[key.replace(".", "_")] = _switch(raw, path)
        elif key == "bcp.lambda":
            try:
                lams = tuple(Fraction(x.strip()) for x in raw.split(",") if x.strip())
            except (ValueError, ZeroDivisionError):
                raise ConfigError(f"bad lambda list {raw!r}", key=path) from None
            if not lams or any(x < 1 for x in lams):
                raise ConfigError("lambda values must be >= 1", key=path)
            kw["bcp_lambda"] = lams
        elif key == "fineness.n":
            kw["fineness_n"] = _int(raw, path, 3)
        elif key == "fineness.edges":
            if raw.strip() not in ("identity-cone", "all"):
                raise ConfigError("fineness.edges must be identity-cone or all", key=path)
            kw["fineness_edges"] = raw.strip()
        elif key == "boundary.epsilon":
            try:
                eps = float(raw)
            except ValueError:
                raise ConfigError(f"bad epsilon {raw!r}", key=path) from None
            if not eps > 0:
                raise ConfigError("epsilon must be positive", key=path)
            kw["boundary_epsilon"] = eps
        elif key == "boundary.radius":
            kw["boundary_radius"] = _int(raw, path, 0)
        elif key == "boundary.sphere":
            if raw.strip() not in ("metric", "word"):
                raise ConfigError("boundary.sphere must be metric or word", key=path)
            kw["boundary_sphere"] = raw.strip()
    labels = [p.label for p in periph]
    if len(set(labels)) != len(labels):
        raise ConfigError("duplicate peripheral label", key=f"{name}.peripheral")
    kw["peripherals"] = tuple(periph)
    job = JobConfig(**kw)
    validate_job(job)
    return job


def validate_job(job: JobConfig):
    if job.space == "horoball-path":
        if not job.lengths:
            raise ConfigError("horoball-path jobs need lengths", key=f"{job.name}.lengths")
        return
    if not job.group:
        raise ConfigError("missing group", key=f"{job.name}.group")
    if not job.radii:
        raise ConfigError("missing radii", key=f"{job.name}.radii")
    try:
        oracle = job.oracle()
    except InputError as exc:
        raise ConfigError(str(exc), key=f"{job.name}.group") from None
    fam = job.family(oracle)
    if job.space in ("coned", "cusped") and not fam:
        raise ConfigError(f"{job.space} space needs at least one peripheral", key=f"{job.name}.space")
    if job.bcp and not fam:
        raise ConfigError("bcp needs at least one peripheral", key=f"{job.name}.bcp")


def _section_lines(text: str) -> dict:
    """(section, key) -> line number, for error messages."""
    out, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif section and "=" in s and not s.startswith((";", "#")):
            out[(section, s.split("=", 1)[0].strip().lower())] = no
    return out


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"),
                                   default_section="\0none")
    cp.optionxform = str  # peripheral labels are case-sensitive
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any section", line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("cannot parse line", line=line) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(exc.message.split(":")[-1].strip() or "duplicate entry",
                          line=getattr(exc, "lineno", None)) from None
    lines = _section_lines(text)
    run: dict = {}
    jobs = []
    for section in cp.sections():
        items = dict(cp.items(section))
        if section == "run":
            for key, raw in items.items():
                path = f"run.{key}"
                if key not in RUN_KEYS:
                    raise ConfigError(f"unknown key {key!r}", line=lines.get((section, key)), key=path)
                if key == "output":
                    run["output"] = raw.strip()
                else:
                    run[key] = _int(raw, path, 0 if key == "seed" else 1)
        elif section.startswith("job"):
            name = section[3:].strip() or "main"
            if not re.fullmatch(r"[A-Za-z0-9_\-]+", name):
                raise ConfigError(f"bad job name {name!r}", key=section)
            jlines = {k: n for (s, k), n in lines.items() if s == section}
            jobs.append(_job(name, items, jlines))
        else:
            raise ConfigError(f"unknown section [{section}]", key=section)
    if not jobs:
        raise ConfigError("no [job] section")
    if len({j.name for j in jobs}) != len(jobs):
        raise ConfigError("duplicate job names")
    return RunConfig(jobs=tuple(jobs), **run)
