"""Thermodynamic closures in non-dimensional form.

Three families are supported: the ideal gas, the general cubic equation
(van der Waals and Peng-Robinson variants, possibly with temperature
dependent attraction coefficient and specific heat) and the stiffened gas.
Every function accepts scalars or numpy arrays and broadcasts.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import kernels
from .errors import DomainError, NoConvergence, NonPhysicalState

SQRT2 = math.sqrt(2.0)
COVOLUME_GUARD = 1.0 - 1e-10


@dataclass(frozen=True)
class IdealGasParams:
    """Polytropic ideal gas ``p = (gamma - 1) rho e``.

    ``Rg`` only matters where a temperature is needed (viscous step,
    potential temperature); the hyperbolic part never uses it.
    """

    gamma: float = 1.4
    Rg: float = 1.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")

    @property
    def cv(self) -> float:
        return self.Rg / (self.gamma - 1.0)


class CubicKind(enum.Enum):
    VanDerWaals = "vdw"
    PengRobinson = "pr"


def _const_fn(value: float) -> Callable:
    def fn(T):
        return np.full_like(np.asarray(T, dtype=float), value)

    return fn


@dataclass(frozen=True)
class SoaveAlpha:
    """Temperature law ``a(T) = ac (1 + kappa (1 - sqrt(T/Tc)))**2``.

    Kept as plain numbers so the compiled temperature kernel can evaluate it.
    """

    ac: float
    kappa: float
    Tc: float

    def a(self, T):
        al = 1.0 + self.kappa * (1.0 - np.sqrt(np.asarray(T, dtype=float) / self.Tc))
        return self.ac * al * al

    def da(self, T):
        T = np.asarray(T, dtype=float)
        s = np.sqrt(T / self.Tc)
        al = 1.0 + self.kappa * (1.0 - s)
        return -self.ac * al * self.kappa / np.sqrt(T * self.Tc)

    def d2a(self, T):
        T = np.asarray(T, dtype=float)
        s = np.sqrt(T / self.Tc)
        al = 1.0 + self.kappa * (1.0 - s)
        # d/dT [-ac kappa al (T Tc)^-1/2]
        return self.ac * self.kappa * (self.kappa / (2.0 * T * self.Tc) + al / (2.0 * T * np.sqrt(T * self.Tc)))


@dataclass(frozen=True)
class CubicEosParams:
    """General cubic equation of state.

    Thermal relation ``p = rho Rg T/(1 - rho b) - a rho^2/((1 - rho b r1)(1 - rho b r2))``
    and caloric relation ``e = cv(T) T + (a - T a') U(rho)/b``.

    Use :func:`van_der_waals` or :func:`peng_robinson` for constant
    coefficients; ``soave`` and the ``*_fn`` hooks cover the temperature
    dependent case.
    """

    kind: CubicKind
    a_fn: Callable
    da_dT_fn: Callable
    b: float
    r1: float
    r2: float
    Rg: float
    cv_fn: Callable
    a_const: Optional[float] = None
    cv_const: Optional[float] = None
    d2a_dT2_fn: Optional[Callable] = None
    dcv_dT_fn: Optional[Callable] = None
    soave: Optional[SoaveAlpha] = field(default=None, compare=False)

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("covolume b must be non-negative")
        if self.kind is CubicKind.VanDerWaals and not (self.r1 == 0.0 and self.r2 == 0.0):
            raise ValueError("van der Waals requires r1 = r2 = 0")
        if self.kind is CubicKind.PengRobinson:
            if abs(self.r1 - (-1.0 - SQRT2)) > 1e-14 or abs(self.r2 - (-1.0 + SQRT2)) > 1e-14:
                raise ValueError("Peng-Robinson requires r1 = -1-sqrt2, r2 = -1+sqrt2")

    @property
    def constant_coefficients(self) -> bool:
        return self.a_const is not None and self.cv_const is not None


@dataclass(frozen=True)
class StiffenedGasParams:
    """Stiffened gas ``p = (gamma-1)(rho e - rho q) - gamma pi``."""

    gamma: float
    q: float = 0.0
    pi: float = 0.0
    cv: float = 1.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")
        if not self.cv > 0.0:
            raise ValueError("cv must be positive")

    @property
    def Rg(self) -> float:
        return (self.gamma - 1.0) * self.cv


EosModel = Union[IdealGasParams, CubicEosParams, StiffenedGasParams]


@dataclass
class ThermoState:
    rho: np.ndarray
    p: np.ndarray
    T: Optional[np.ndarray] = None
    e: Optional[np.ndarray] = None

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if np.any(self.rho <= 0):
            raise NonPhysicalState("density must be positive")


# --------------------------------------------------------------------------
# constructors


def van_der_waals(a: float, b: float, Rg: float = 1.0, cv: float = 2.5) -> CubicEosParams:
    return CubicEosParams(
        kind=CubicKind.VanDerWaals, a_fn=_const_fn(a), da_dT_fn=_const_fn(0.0), b=b,
        r1=0.0, r2=0.0, Rg=Rg, cv_fn=_const_fn(cv), a_const=a, cv_const=cv,
        d2a_dT2_fn=_const_fn(0.0), dcv_dT_fn=_const_fn(0.0),
    )


def peng_robinson(a: float, b: float, Rg: float = 1.0, cv: float = 2.5) -> CubicEosParams:
    return CubicEosParams(
        kind=CubicKind.PengRobinson, a_fn=_const_fn(a), da_dT_fn=_const_fn(0.0), b=b,
        r1=-1.0 - SQRT2, r2=-1.0 + SQRT2, Rg=Rg, cv_fn=_const_fn(cv), a_const=a, cv_const=cv,
        d2a_dT2_fn=_const_fn(0.0), dcv_dT_fn=_const_fn(0.0),
    )


N2O_CV_TABLE = {"A": 27.67988, "B": 51.14898, "C": -30.64544, "D": 6.847911, "E": -0.157906}
N2O_RG = 188.91
N2O_MW = 44.0128
N2O_TC = 309.52
N2O_PC = 7.2450e6
N2O_OMEGA = 0.1613


def n2o_coeffs():
    """Peng-Robinson parameters and specific-heat polynomial for nitrous oxide.

    Values are in SI units, i.e. non-dimensional with unit reference scalings.

    Returns
    -------
    cv_fn : callable
        ``cv(T) = e#(T)/T`` from the tabulated polynomial.
    params : CubicEosParams
    """
    A, B, C, D, E = (N2O_CV_TABLE[k] for k in "ABCDE")
    R, Mw = N2O_RG, N2O_MW

    def cv_fn(T):
        T = np.asarray(T, dtype=float)
        t = T / 1000.0
        poly = A * t + 0.5 * B * t**2 + C * t**3 / 3.0 + 0.25 * D * t**4 - E / t
        return (poly * 1e6 / Mw - R * T) / T

    def dcv_fn(T):
        # d/dT of [poly(t) 1e6/Mw]/T - R
        T = np.asarray(T, dtype=float)
        t = T / 1000.0
        poly = A * t + 0.5 * B * t**2 + C * t**3 / 3.0 + 0.25 * D * t**4 - E / t
        dpoly = (A + B * t + C * t**2 + D * t**3 + E / t**2) / 1000.0
        return (dpoly * T - poly) * 1e6 / Mw / T**2

    kappa = 0.37464 + 1.54226 * N2O_OMEGA - 0.26992 * N2O_OMEGA**2
    soave = SoaveAlpha(ac=0.45724 * R**2 * N2O_TC**2 / N2O_PC, kappa=kappa, Tc=N2O_TC)
    params = CubicEosParams(
        kind=CubicKind.PengRobinson, a_fn=soave.a, da_dT_fn=soave.da, b=0.0778 * R * N2O_TC / N2O_PC,
        r1=-1.0 - SQRT2, r2=-1.0 + SQRT2, Rg=R, cv_fn=cv_fn, d2a_dT2_fn=soave.d2a, dcv_dT_fn=dcv_fn,
        soave=soave,
    )
    return cv_fn, params


# --------------------------------------------------------------------------
# cubic helpers


def _covolume_check(eos: CubicEosParams, rho):
    if eos.b > 0 and np.any(rho * eos.b >= COVOLUME_GUARD):
        raise NonPhysicalState("covolume violated: rho*b >= 1")
    if np.any(rho <= 0):
        raise NonPhysicalState("non-positive density")


def _Q(eos: CubicEosParams, rho):
    return (1.0 - rho * eos.b * eos.r1) * (1.0 - rho * eos.b * eos.r2)


def _dQ(eos: CubicEosParams, rho):
    b, r1, r2 = eos.b, eos.r1, eos.r2
    return -b * r1 * (1.0 - rho * b * r2) - b * r2 * (1.0 - rho * b * r1)


def U_over_b(eos: CubicEosParams, rho):
    """``U(rho)/b``, continuous as ``b -> 0`` where it tends to ``-rho``."""
    rho = np.asarray(rho, dtype=float)
    if eos.b == 0.0 or eos.r1 == eos.r2:
        return -rho
    b = eos.b
    return (np.log1p(-rho * b * eos.r1) - np.log1p(-rho * b * eos.r2)) / (b * (eos.r1 - eos.r2))


def _d2(fn, T, h_rel=1e-6):
    T = np.asarray(T, dtype=float)
    h = h_rel * np.maximum(np.abs(T), 1.0)
    return (fn(T + h) - fn(T - h)) / (2.0 * h)


def _da2(eos: CubicEosParams, T):
    return eos.d2a_dT2_fn(T) if eos.d2a_dT2_fn is not None else _d2(eos.da_dT_fn, T)


def _dcv(eos: CubicEosParams, T):
    return eos.dcv_dT_fn(T) if eos.dcv_dT_fn is not None else _d2(eos.cv_fn, T)


# --------------------------------------------------------------------------
# public operations


def pressure_from_rho_T(eos: EosModel, rho, T):
    rho = np.asarray(rho, dtype=float)
    T = np.asarray(T, dtype=float)
    if isinstance(eos, IdealGasParams):
        return rho * eos.Rg * T
    if isinstance(eos, StiffenedGasParams):
        return rho * (eos.gamma - 1.0) * eos.cv * T - eos.pi
    _covolume_check(eos, rho)
    return rho * eos.Rg * T / (1.0 - rho * eos.b) - eos.a_fn(T) * rho**2 / _Q(eos, rho)


def _cubic_T_rhs(eos: CubicEosParams, p, rho, T):
    return (p + eos.a_fn(T) * rho**2 / _Q(eos, rho)) * (1.0 - rho * eos.b) / (rho * eos.Rg)


def temperature_from_p_rho(eos: EosModel, p, rho, T_seed=None, max_iter: int = 100, tol: float = 1e-12):
    """Invert the thermal relation for the temperature.

    For temperature dependent attraction ``a(T)`` the map
    ``T -> [p + a(T) rho^2/Q](1 - rho b)/(rho Rg)`` is iterated from ``T_seed``
    (undamped), with a bisection fallback on ``[T_seed/10, 10 T_seed]`` for
    entries that do not settle.
    """
    p = np.asarray(p, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise NonPhysicalState("non-positive density")
    if isinstance(eos, IdealGasParams):
        T = p / (rho * eos.Rg)
    elif isinstance(eos, StiffenedGasParams):
        T = (p + eos.pi) / (rho * (eos.gamma - 1.0) * eos.cv)
    else:
        _covolume_check(eos, rho)
        if eos.a_const is not None:
            T = (p + eos.a_const * rho**2 / _Q(eos, rho)) * (1.0 - rho * eos.b) / (rho * eos.Rg)
        else:
            T = _cubic_T_fixed_point(eos, p, rho, T_seed, max_iter, tol)
    if np.any(~(T > 0)):
        raise NonPhysicalState("non-positive temperature")
    return T


def _cubic_T_fixed_point(eos: CubicEosParams, p, rho, T_seed, max_iter, tol):
    p, rho = np.broadcast_arrays(p, rho)
    shape = p.shape
    p = p.ravel().astype(float)
    rho = rho.ravel().astype(float)
    if T_seed is None:
        # ideal-gas guess corrected by the attraction at a nominal temperature
        T_seed = np.maximum(p * (1.0 - rho * eos.b) / (rho * eos.Rg), 1e-12)
    else:
        T_seed = np.asarray(T_seed, dtype=float)
        if T_seed.size == 1:
            T_seed = T_seed.reshape(())
        T_seed = np.broadcast_to(T_seed, shape).ravel().copy()

    if eos.soave is not None:
        s = eos.soave
        T, ok = kernels.soave_temperature(p, rho, T_seed, s.ac, s.kappa, s.Tc, eos.b, eos.r1, eos.r2, eos.Rg,
                                          max_iter, tol)
    else:
        T = T_seed.copy()
        ok = np.zeros(T.shape, dtype=bool)
        for _ in range(max_iter):
            Tn = _cubic_T_rhs(eos, p, rho, T)
            ok = np.abs(Tn - T) <= tol * np.maximum(1.0, np.abs(Tn))
            T = Tn
            if ok.all():
                break
    if not ok.all():
        bad = np.flatnonzero(~ok)
        T[bad] = _bisect_T(eos, p[bad], rho[bad], T_seed[bad], tol)
    return T.reshape(shape)


def _bisect_T(eos, p, rho, T_seed, tol):
    lo = T_seed / 10.0
    hi = T_seed * 10.0
    f_lo = pressure_from_rho_T(eos, rho, lo) - p
    f_hi = pressure_from_rho_T(eos, rho, hi) - p
    if np.any(f_lo * f_hi > 0):
        raise NoConvergence("temperature inversion: no sign change in bisection bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = pressure_from_rho_T(eos, rho, mid) - p
        left = f_lo * f_mid <= 0
        hi = np.where(left, mid, hi)
        lo = np.where(left, lo, mid)
        f_lo = np.where(left, f_lo, f_mid)
        if np.all(hi - lo <= tol * np.maximum(1.0, hi)):
            break
    else:
        raise NoConvergence("temperature inversion did not converge")
    return 0.5 * (lo + hi)


def internal_energy_from_rho_T(eos: EosModel, rho, T):
    rho = np.asarray(rho, dtype=float)
    T = np.asarray(T, dtype=float)
    if isinstance(eos, IdealGasParams):
        return eos.cv * T
    if isinstance(eos, StiffenedGasParams):
        return eos.cv * T + eos.pi / rho + eos.q
    _covolume_check(eos, rho)
    return eos.cv_fn(T) * T + (eos.a_fn(T) - T * eos.da_dT_fn(T)) * U_over_b(eos, rho)


def internal_energy(eos: EosModel, p, rho, T_hint=None):
    """Specific internal energy from pressure and density."""
    p = np.asarray(p, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise NonPhysicalState("non-positive density")
    if isinstance(eos, IdealGasParams):
        return p / ((eos.gamma - 1.0) * rho)
    if isinstance(eos, StiffenedGasParams):
        return (p + eos.gamma * eos.pi) / ((eos.gamma - 1.0) * rho) + eos.q
    T = temperature_from_p_rho(eos, p, rho, T_hint)
    return internal_energy_from_rho_T(eos, rho, T)


def temperature_from_rho_e(eos: EosModel, rho, e, T_seed=None, max_iter: int = 100, tol: float = 1e-12):
    """Invert the caloric relation (Newton iteration for temperature dependent coefficients)."""
    rho = np.asarray(rho, dtype=float)
    e = np.asarray(e, dtype=float)
    if isinstance(eos, IdealGasParams):
        T = e / eos.cv
    elif isinstance(eos, StiffenedGasParams):
        T = (e - eos.q - eos.pi / rho) / eos.cv
    else:
        _covolume_check(eos, rho)
        ub = U_over_b(eos, rho)
        if eos.constant_coefficients:
            T = (e - eos.a_const * ub) / eos.cv_const
        else:
            T = np.asarray(T_seed if T_seed is not None else np.full_like(e, 300.0), dtype=float).copy()
            for _ in range(max_iter):
                cv = eos.cv_fn(T)
                f = cv * T + (eos.a_fn(T) - T * eos.da_dT_fn(T)) * ub - e
                df = _dcv(eos, T) * T + cv - T * _da2(eos, T) * ub
                dT = f / df
                T = T - dT
                if np.all(np.abs(dT) <= tol * np.maximum(1.0, np.abs(T))):
                    break
            else:
                raise NoConvergence("caloric inversion did not converge")
    if np.any(~(T > 0)):
        raise NonPhysicalState("non-positive temperature")
    return T


def pressure_from_rho_e(eos: EosModel, rho, e, T_seed=None):
    rho = np.asarray(rho, dtype=float)
    e = np.asarray(e, dtype=float)
    if isinstance(eos, IdealGasParams):
        return (eos.gamma - 1.0) * rho * e
    if isinstance(eos, StiffenedGasParams):
        return (eos.gamma - 1.0) * rho * (e - eos.q) - eos.gamma * eos.pi
    return pressure_from_rho_T(eos, rho, temperature_from_rho_e(eos, rho, e, T_seed))


def enthalpy(eos: EosModel, p, rho, T_hint=None):
    return internal_energy(eos, p, rho, T_hint) + np.asarray(p, dtype=float) / np.asarray(rho, dtype=float)


def energy_derivatives(eos: EosModel, p, rho, T_hint=None):
    """Partial derivatives ``(de/drho at fixed p, de/dp at fixed rho)``.

    Cubic equations use implicit differentiation through the temperature;
    second derivatives of user supplied coefficient functions fall back to
    central differences when not provided.
    """
    p = np.asarray(p, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if isinstance(eos, IdealGasParams):
        g1 = eos.gamma - 1.0
        return -p / (g1 * rho**2), 1.0 / (g1 * rho) + 0.0 * p
    if isinstance(eos, StiffenedGasParams):
        g1 = eos.gamma - 1.0
        return -(p + eos.gamma * eos.pi) / (g1 * rho**2), 1.0 / (g1 * rho) + 0.0 * p
    T = temperature_from_p_rho(eos, p, rho, T_hint)
    a, da = eos.a_fn(T), eos.da_dT_fn(T)
    Q, dQ = _Q(eos, rho), _dQ(eos, rho)
    ub = U_over_b(eos, rho)
    one_b = 1.0 - rho * eos.b
    cv = eos.cv_fn(T)
    e_T = _dcv(eos, T) * T + cv - T * _da2(eos, T) * ub
    e_rho_T = -(a - T * da) / Q
    p_T = rho * eos.Rg / one_b - da * rho**2 / Q
    p_rho_T = eos.Rg * T / one_b**2 - a * (2.0 * rho * Q - rho**2 * dQ) / Q**2
    e_p = e_T / p_T
    e_rho = e_rho_T - e_T * p_rho_T / p_T
    return e_rho, e_p


def sound_speed(eos: EosModel, state: ThermoState):
    """Sound speed ``c = sqrt((p/rho^2 - e_rho)/e_p)`` (unscaled by Mach)."""
    p, rho = state.p, state.rho
    if isinstance(eos, IdealGasParams):
        c2 = eos.gamma * p / rho
    elif isinstance(eos, StiffenedGasParams):
        c2 = eos.gamma * (p + eos.pi) / rho
    else:
        e_rho, e_p = energy_derivatives(eos, p, rho, state.T)
        if np.any(e_p <= 0):
            raise NonPhysicalState("de/dp must be positive")
        c2 = (p / rho**2 - e_rho) / e_p
    if np.any(~(c2 > 0)):
        raise NonPhysicalState("non-positive squared sound speed")
    return np.sqrt(c2)


def sound_speed_prho(eos: EosModel, p, rho, T_hint=None):
    return sound_speed(eos, ThermoState(rho=rho, p=p, T=T_hint))


def compressibility_factor(eos: EosModel, state: ThermoState):
    T = state.T if state.T is not None else temperature_from_p_rho(eos, state.p, state.rho)
    return state.p / (state.rho * eos.Rg * T)


def isentropic_invariant_beta(eos: CubicEosParams, state: ThermoState):
    """``log T - 2 (Rg/cv) atanh(2 rho b - 1)`` for constant-coefficient cubic gases."""
    if not isinstance(eos, CubicEosParams) or not eos.constant_coefficients:
        raise DomainError("beta invariant needs a cubic EOS with constant a and cv")
    x = state.rho * eos.b
    if np.any(x <= 0) or np.any(x >= 1):
        raise DomainError("rho*b must lie in (0, 1)")
    T = state.T if state.T is not None else temperature_from_p_rho(eos, state.p, state.rho)
    return np.log(T) - 2.0 * (eos.Rg / eos.cv_const) * np.arctanh(2.0 * x - 1.0)


def isentropic_exponent_gamma_prho(eos: EosModel, state: ThermoState, mach: float = 1.0):
    """Local isentropic exponent ``rho c^2 / p`` so that ``p / rho**g`` is locally constant.

    ``c`` is the unscaled sound speed returned by :func:`sound_speed`; with it
    the result does not depend on the Mach number.
    """
    if np.any(state.p <= 0):
        raise NonPhysicalState("pressure must be positive")
    c = sound_speed(eos, state)
    return c**2 * state.rho / state.p


def eos_from_config(kind: str, **kw) -> EosModel:
    """Build an EOS from plain config values (``ideal``, ``vdw``, ``pr``, ``sg``, ``n2o``)."""
    kind = kind.lower()
    if kind == "ideal":
        return IdealGasParams(gamma=float(kw.get("gamma", 1.4)), Rg=float(kw.get("Rg", 1.0)))
    if kind in ("vdw", "vanderwaals"):
        return van_der_waals(float(kw["a"]), float(kw["b"]), float(kw.get("Rg", 1.0)), float(kw.get("cv", 2.5)))
    if kind in ("pr", "pengrobinson"):
        return peng_robinson(float(kw["a"]), float(kw["b"]), float(kw.get("Rg", 1.0)), float(kw.get("cv", 2.5)))
    if kind in ("sg", "stiffened"):
        return StiffenedGasParams(float(kw["gamma"]), float(kw.get("q", 0.0)), float(kw.get("pi", 0.0)),
                                  float(kw.get("cv", 1.0)))
    if kind == "n2o":
        return n2o_coeffs()[1]
    raise ValueError(f"unknown EOS kind {kind!r}")
