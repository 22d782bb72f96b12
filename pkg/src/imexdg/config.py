"""Case configuration and its flat ``key = value`` text format.

A file holds top-level keys plus optional ``[section]`` headers; a key
``k`` under ``[s]`` is stored as ``s.k``. Lines starting with ``#`` are
comments. Known keys:

==================  =======================================================
case                benchmark name (selects the initial condition)
eos                 ideal | vdw | pr | sg | n2o
eos.<param>         gamma, Rg, a, b, cv, q, pi
mach, reynolds,     non-dimensional numbers (``inf`` disables a term)
prandtl, froude
heat_coefficient    overrides ``1/(Pr Re)``
lower, upper        domain corners, comma separated
nel                 base cells per direction, comma separated
periodic            per-direction flags, comma separated
bc.<dir><side>      boundary tag, e.g. ``bc.1hi = lid``
lid_velocity        wall velocity of boundaries tagged ``lid``
degree              polynomial degree r
quadrature          gauss | gll
dt / courant        time step, or a target acoustic Courant number
t_final             final time
alpha               explicit-tableau parameter
flux                upwind | llf
limiter_threshold   density Q0 limiter threshold (``none`` disables)
fp_max_iter, fp_tol pressure fixed point
duplicate_a31_term  literal doubled dissipation term in the last stage
indicator           none | density_gradient | vorticity | theta_gradient |
                    beta_gradient | gamma_prho_gradient | density_jump
refine, coarsen     thresholds (or fractions with ``marking = fraction``)
marking             threshold | fraction
min_diam, max_diam  cell-size bounds for adaptation
remesh_every        steps between remesh events
output_every        steps between VTK snapshots (0: final only)
out                 output directory
splitting           lie | strang
==================  =======================================================
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple


@dataclass
class CaseConfig:
    case: str = "vortex"
    eos: str = "ideal"
    eos_params: Dict[str, float] = field(default_factory=lambda: {"gamma": 1.4})
    mach: float = 0.1
    reynolds: float = math.inf
    prandtl: float = 0.71
    froude: float = math.inf
    heat_coefficient: Optional[float] = None
    lower: Tuple[float, ...] = (-10.0, -10.0)
    upper: Tuple[float, ...] = (10.0, 10.0)
    nel: Tuple[int, ...] = (10, 10)
    periodic: Tuple[bool, ...] = (True, True)
    boundary_tags: Dict[Tuple[int, int], str] = field(default_factory=dict)
    lid_velocity: Tuple[float, ...] = (1.0, 0.0)
    degree: int = 1
    quadrature: str = "gauss"
    dt: Optional[float] = None
    courant: Optional[float] = None
    t_final: float = 1.0
    alpha: float = 0.5
    flux: str = "upwind"
    limiter_threshold: Optional[float] = None
    fp_max_iter: int = 3
    fp_tol: float = 1e-10
    duplicate_a31_term: bool = False
    indicator: str = "none"
    marking: str = "threshold"
    refine: float = math.inf
    coarsen: float = -math.inf
    min_diam: float = 0.0
    max_diam: float = math.inf
    remesh_every: int = 5
    output_every: int = 0
    out: str = "out"
    splitting: str = "lie"
    params: Dict[str, float] = field(default_factory=dict)

    def validate(self) -> "CaseConfig":
        if not 0.0 < self.alpha <= 1.5:
            raise ValueError("alpha must lie in (0, 1.5]")
        for name in ("mach", "reynolds", "prandtl", "froude", "t_final"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.dt is None and self.courant is None:
            raise ValueError("either dt or courant is required")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if len(self.lower) != len(self.upper) or len(self.nel) != len(self.lower):
            raise ValueError("lower, upper and nel must have the same length")
        if self.flux not in ("upwind", "llf"):
            raise ValueError("flux must be upwind or llf")
        return self

    @property
    def dim(self) -> int:
        return len(self.lower)

    def replace(self, **kw) -> "CaseConfig":
        return dataclasses.replace(self, **kw)


# --------------------------------------------------------------------------
# text format

_SIDES = {"lo": 0, "hi": 1, "0": 0, "1": 1}


def _num(s: str) -> float:
    s = s.strip().lower()
    if s in ("inf", "+inf", "infinity"):
        return math.inf
    return float(s)


def _bool(s: str) -> bool:
    s = s.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt(s: str):
    return None if s.strip().lower() in ("none", "") else _num(s)


def parse_text(text: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    section = ""
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ValueError(f"line {ln}: expected key = value")
        k, v = (t.strip() for t in line.split("=", 1))
        out[f"{section}.{k}" if section else k] = v
    return out


def from_mapping(raw: Dict[str, str], base: Optional[CaseConfig] = None) -> CaseConfig:
    """Apply string key/values on top of ``base`` (or the library case named by ``case``)."""
    if base is None:
        from .bench import case_library

        lib = case_library()
        name = raw.get("case", "vortex")
        if name not in lib:
            raise ValueError(f"unknown case {name!r}")
        base = lib[name]
    cfg = dataclasses.replace(base, eos_params=dict(base.eos_params), boundary_tags=dict(base.boundary_tags),
                              params=dict(base.params))
    floats = {"mach", "reynolds", "prandtl", "froude", "t_final", "alpha", "fp_tol", "refine", "coarsen",
              "min_diam", "max_diam"}
    ints = {"degree", "fp_max_iter", "remesh_every", "output_every"}
    optional = {"dt", "courant", "limiter_threshold", "heat_coefficient"}
    strings = {"case", "quadrature", "flux", "indicator", "marking", "out", "splitting"}
    for k, v in raw.items():
        if k == "eos":
            if v != cfg.eos:
                cfg.eos_params = {}
            cfg.eos = v
        elif k.startswith("eos."):
            cfg.eos_params[k[4:]] = _num(v)
        elif k.startswith("bc."):
            spec = k[3:]
            cfg.boundary_tags[(int(spec[0]), _SIDES[spec[1:]])] = v
        elif k.startswith("params."):
            cfg.params[k[7:]] = _num(v)
        elif k in floats:
            setattr(cfg, k, _num(v))
        elif k in ints:
            setattr(cfg, k, int(v))
        elif k in optional:
            setattr(cfg, k, _opt(v))
        elif k in strings:
            setattr(cfg, k, v)
        elif k in ("lower", "upper", "lid_velocity"):
            setattr(cfg, k, tuple(_num(t) for t in v.split(",")))
        elif k == "nel":
            cfg.nel = tuple(int(t) for t in v.split(","))
        elif k == "periodic":
            cfg.periodic = tuple(_bool(t) for t in v.split(","))
        elif k == "duplicate_a31_term":
            cfg.duplicate_a31_term = _bool(v)
        else:
            raise ValueError(f"unknown config key {k!r}")
    return cfg.validate()


def load(path, base: Optional[CaseConfig] = None) -> CaseConfig:
    with open(path, encoding="utf-8") as fh:
        return from_mapping(parse_text(fh.read()), base)


def dumps(cfg: CaseConfig) -> str:
    """Serialize to the text format (round-trips through :func:`from_mapping`)."""

    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if v is None:
            return "none"
        if isinstance(v, float) and math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if isinstance(v, (tuple, list)):
            return ",".join(fmt(t) for t in v)
        return repr(v) if isinstance(v, float) else str(v)

    lines = [f"case = {cfg.case}", f"eos = {cfg.eos}"]
    for k, v in sorted(cfg.eos_params.items()):
        lines.append(f"eos.{k} = {fmt(float(v))}")
    for f in dataclasses.fields(cfg):
        if f.name in ("case", "eos", "eos_params", "boundary_tags", "params"):
            continue
        lines.append(f"{f.name} = {fmt(getattr(cfg, f.name))}")
    for (d, s), tag in sorted(cfg.boundary_tags.items()):
        lines.append(f"bc.{d}{'hi' if s else 'lo'} = {tag}")
    for k, v in sorted(cfg.params.items()):
        lines.append(f"params.{k} = {fmt(float(v))}")
    return "\n".join(lines) + "\n"
