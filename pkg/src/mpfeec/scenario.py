"""TOML scenarios: geometry, modes, suites, tolerances and output paths."""
from __future__ import annotations

import copy
import sys
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import tomli_w

from .errors import ScenarioError
from .geometry import builtin_mapping
from .logical import LogicalDeRham
from .topology import CURL_DIV, GRAD_CURL, HOMOGENEOUS, INHOMOGENEOUS, build_topology
from .univariate import make_space

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

SUITES = ("validate", "commute", "project", "conform", "stability", "locality", "eigen", "rotate")

DEFAULT_TOLERANCES = {
    "commute": 1e-9,
    "project": 1e-10,
    "conform": 1e-9,
    "structure": 1e-13,
    "d2e": 1e-12,
    "locality": 1e-11,
    "stability": 2.0,
    "eigen": 2e-2,
    "rotate": 1e-12,
}


@dataclass
class PatchSpec:
    mapping: str
    params: dict
    degree: int
    cells: int | None = None
    breakpoints: list | None = None
    regularity: int | None = None

    def breaks(self, level=0):
        b = np.linspace(0.0, 1.0, self.cells + 1) if self.breakpoints is None \
            else np.asarray(self.breakpoints, dtype=float)
        for _ in range(level):
            b = np.sort(np.concatenate([b, 0.5 * (b[:-1] + b[1:])]))
        return b

    def to_dict(self):
        d = {"mapping": self.mapping, "degree": self.degree}
        if self.cells is not None:
            d["cells"] = self.cells
        if self.breakpoints is not None:
            d["breakpoints"] = list(self.breakpoints)
        if self.regularity is not None:
            d["regularity"] = self.regularity
        if self.params:
            d["params"] = self.params
        return d


@dataclass
class Scenario:
    name: str
    patches: list
    bc_mode: str = INHOMOGENEOUS
    sequence_kind: str = GRAD_CURL
    suites: list = field(default_factory=lambda: list(SUITES))
    levels: list = field(default_factory=lambda: [0, 1, 2])
    tolerances: dict = field(default_factory=dict)
    output: str = "mpfeec-out"
    seed: int = 0
    eigen: dict = field(default_factory=dict)
    description: str = ""

    def tol(self, key):
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def to_dict(self):
        d = {"name": self.name, "bc_mode": self.bc_mode, "sequence_kind": self.sequence_kind,
             "suites": list(self.suites), "levels": list(self.levels), "seed": self.seed,
             "output": self.output}
        if self.description:
            d["description"] = self.description
        if self.tolerances:
            d["tolerances"] = dict(self.tolerances)
        if self.eigen:
            d["eigen"] = dict(self.eigen)
        d["patches"] = [p.to_dict() for p in self.patches]
        return d

    def dumps(self):
        return tomli_w.dumps(self.to_dict())

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(copy.deepcopy(self), **kw)

    def build(self, level=None, bc_mode=None, sequence_kind=None):
        """Multipatch complex at a refinement level (default: the first listed)."""
        level = self.levels[0] if level is None else level
        pairs = []
        for p in self.patches:
            m = builtin_mapping(p.mapping, p.params)
            pairs.append((m, LogicalDeRham(make_space(p.degree, p.breaks(level), p.regularity))))
        return build_topology(pairs, bc_mode or self.bc_mode,
                              sequence_kind=sequence_kind or self.sequence_kind)


def _patch(d, i):
    d = dict(d)
    try:
        kind = d.pop("mapping")
        degree = int(d.pop("degree"))
    except KeyError as exc:
        raise ScenarioError(f"patch {i}: missing key {exc}") from None
    cells = d.pop("cells", None)
    bps = d.pop("breakpoints", None)
    reg = d.pop("regularity", None)
    params = d.pop("params", {})
    if d:
        raise ScenarioError(f"patch {i}: unknown keys {sorted(d)}")
    if (cells is None) == (bps is None):
        raise ScenarioError(f"patch {i}: give exactly one of cells or breakpoints")
    if cells is not None and int(cells) < 1:
        raise ScenarioError(f"patch {i}: cells must be positive")
    return PatchSpec(kind, params, degree, None if cells is None else int(cells),
                     None if bps is None else [float(b) for b in bps],
                     None if reg is None else int(reg))


def from_dict(d):
    d = dict(d)
    try:
        name = d.pop("name")
        patches = [_patch(p, i) for i, p in enumerate(d.pop("patches"))]
    except KeyError as exc:
        raise ScenarioError(f"missing key {exc}") from None
    if not patches:
        raise ScenarioError("no patches")
    sc = Scenario(name, patches)
    for key in ("bc_mode", "sequence_kind", "suites", "levels", "tolerances", "output",
                "seed", "eigen", "description"):
        if key in d:
            setattr(sc, key, d.pop(key))
    if d:
        raise ScenarioError(f"unknown keys {sorted(d)}")
    if sc.bc_mode not in (INHOMOGENEOUS, HOMOGENEOUS):
        raise ScenarioError(f"bc_mode must be {INHOMOGENEOUS!r} or {HOMOGENEOUS!r}")
    if sc.sequence_kind not in (GRAD_CURL, CURL_DIV):
        raise ScenarioError(f"sequence_kind must be {GRAD_CURL!r} or {CURL_DIV!r}")
    bad = set(sc.suites) - set(SUITES)
    if bad:
        raise ScenarioError(f"unknown suites {sorted(bad)}")
    unknown = set(sc.tolerances) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise ScenarioError(f"unknown tolerances {sorted(unknown)}")
    if not sc.levels or any(int(x) < 0 for x in sc.levels):
        raise ScenarioError("levels must be a non-empty list of non-negative integers")
    sc.levels = [int(x) for x in sc.levels]
    sc.seed = int(sc.seed)
    return sc


def loads(text):
    try:
        return from_dict(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"invalid TOML: {exc}") from None


def load(path):
    path = Path(path)
    if not path.exists():
        builtin = fixture_path(path.name if path.suffix else path.name + ".toml")
        if builtin is None:
            raise ScenarioError(f"no scenario file {path}")
        path = builtin
    return loads(path.read_text())


def fixture_names():
    root = resources.files("mpfeec") / "fixtures"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".toml"))


def fixture_path(name):
    p = resources.files("mpfeec") / "fixtures" / name
    return Path(str(p)) if p.is_file() else None


__all__ = ["Scenario", "PatchSpec", "SUITES", "DEFAULT_TOLERANCES", "load", "loads",
           "from_dict", "fixture_names", "fixture_path", "asdict"]
