"""Domain types and closed-form in-cylinder state relations for a dual-fuel
(diesel pilot + premixed natural gas) compression-ignition engine.

Conventions: crank angles in degrees after top dead center (aTDC), pressures
in bar, temperatures in K, volumes in m^3, masses in kg, speed in RPM.
All functions broadcast over numpy arrays.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, fields, replace

import numpy as np


class DomainError(ValueError):
    """Input outside the physical or model domain of an operation."""


# ---------------------------------------------------------------------------
# geometry

@dataclass(frozen=True)
class EngineGeometry:
    """Per-cylinder slider-crank geometry plus valve event angles (deg aTDC)."""

    bore: float
    stroke: float
    rod_length: float
    compression_ratio: float
    ivc_angle: float
    ivo_angle: float
    evo_angle: float
    evc_angle: float

    def __post_init__(self):
        if self.bore <= 0.0 or self.stroke <= 0.0 or self.rod_length <= 0.0:
            raise DomainError("bore, stroke and rod length must be positive")
        if self.compression_ratio <= 1.0:
            raise DomainError("compression ratio must exceed 1")
        # slider-crank validity: rod must clear the crank throw
        if self.rod_length <= self.stroke / 2.0:
            raise DomainError("rod length must exceed crank radius")

    @property
    def crank_radius(self) -> float:
        return self.stroke / 2.0

    @property
    def piston_area(self) -> float:
        return np.pi * self.bore ** 2 / 4.0

    @property
    def displaced_volume(self) -> float:
        return self.piston_area * self.stroke

    @property
    def clearance_volume(self) -> float:
        return self.displaced_volume / (self.compression_ratio - 1.0)


def default_geometry() -> EngineGeometry:
    """Reference heavy-duty engine: 12.4 L over six cylinders, 17:1 CR."""
    return EngineGeometry(
        bore=0.126,
        stroke=0.166,
        rod_length=0.251,
        compression_ratio=17.0,
        ivc_angle=-148.5,
        ivo_angle=-363.5,
        evo_angle=137.0,
        evc_angle=389.0,
    )


def cylinder_volume(theta, geom: EngineGeometry):
    """Instantaneous cylinder volume [m^3] at crank angle theta [deg aTDC].

    Exact slider-crank kinematics; theta = 0 is TDC (minimum volume),
    +/-180 is BDC. Broadcasts over theta.
    """
    th = np.deg2rad(theta)
    r = geom.crank_radius
    l = geom.rod_length
    s = r * (1.0 - np.cos(th)) + l - np.sqrt(l * l - (r * np.sin(th)) ** 2)
    return geom.clearance_volume + geom.piston_area * s


# ---------------------------------------------------------------------------
# per-cycle boundary conditions and charge composition

@dataclass(frozen=True)
class OperatingPoint:
    """Per-cycle boundary conditions seen by one cylinder."""

    speed: float      # RPM
    phi_ng: float     # natural gas equivalence ratio
    phi_di: float     # diesel equivalence ratio
    egr: float        # EGR mass fraction, 0..1
    x_r: float        # residual gas fraction, 0..1
    p_ivc: float      # pressure at IVC [bar]
    t_ivc: float      # temperature at IVC [K]

    def __post_init__(self):
        if not np.all(np.asarray(self.speed) > 0.0):
            raise DomainError("engine speed must be positive")
        if not (np.all(np.asarray(self.egr) >= 0.0) and np.all(np.asarray(self.egr) < 1.0)):
            raise DomainError("EGR fraction must lie in [0, 1)")
        if not (np.all(np.asarray(self.x_r) >= 0.0) and np.all(np.asarray(self.x_r) < 1.0)):
            raise DomainError("residual fraction must lie in [0, 1)")
        if not np.all(np.asarray(self.phi_ng) >= 0.0):
            raise DomainError("phi_ng must be non-negative")
        if not np.all(np.asarray(self.phi_di) > 0.0):
            raise DomainError("phi_di must be positive")
        if not np.all(np.asarray(self.p_ivc) > 0.0):
            raise DomainError("p_ivc must be positive")
        if not np.all(np.asarray(self.t_ivc) > 0.0):
            raise DomainError("t_ivc must be positive")


@dataclass(frozen=True)
class MassState:
    """In-cylinder masses per cycle [kg]."""

    m_air: float
    m_ng: float
    m_diesel: float
    m_egr: float
    m_residual: float

    def __post_init__(self):
        for f in fields(self):
            if not np.all(np.asarray(getattr(self, f.name)) >= 0.0):
                raise DomainError(f"{f.name} must be non-negative")


@dataclass(frozen=True)
class O2Readings:
    """Oxygen mass fractions of ambient air, intake and exhaust manifolds."""

    x_o2_amb: float
    x_o2_int: float
    x_o2_exh: float

    _O2_AMBIENT_MAX = 0.23 + 1e-6

    def __post_init__(self):
        ok = (
            np.all(np.asarray(self.x_o2_exh) > 0.0)
            and np.all(np.asarray(self.x_o2_exh) <= np.asarray(self.x_o2_int))
            and np.all(np.asarray(self.x_o2_int) <= np.asarray(self.x_o2_amb))
            and np.all(np.asarray(self.x_o2_amb) <= self._O2_AMBIENT_MAX)
        )
        if not ok:
            raise DomainError("require 0 < x_o2_exh <= x_o2_int <= x_o2_amb <= 0.23")


@dataclass(frozen=True)
class FuelProperties:
    """Stoichiometric air-fuel mass ratios of the two fuels."""

    afr_stoich_diesel: float
    afr_stoich_ng: float

    def __post_init__(self):
        if self.afr_stoich_diesel <= 0.0 or self.afr_stoich_ng <= 0.0:
            raise DomainError("stoichiometric AFRs must be positive")


def default_fuel_properties() -> FuelProperties:
    """Standard stoichiometric AFRs: diesel 14.5, methane 17.19."""
    return FuelProperties(afr_stoich_diesel=14.5, afr_stoich_ng=17.19)


# ---------------------------------------------------------------------------
# model coefficients

@dataclass(frozen=True)
class ModelCoefficients:
    """Constants of the CA50 prediction model.

    c1, c2 scale the ignition delay with EGR and speed; c3, c4 are the
    natural-gas/diesel equivalence-ratio exponents of the delay; c5, c6
    form the Arrhenius-like exponent c5 * P^c6 / T; c8..c10 shape the burn
    duration; c11 maps the burn-duration term onto the SOC-to-CA50 offset;
    k_c is the polytropic exponent used to project IVC state to injection.
    wiebe_a/wiebe_b shape the burn profile used by the plant only; the
    plant burn-duration scale c7 is derived so that the half-burn point of
    the profile reproduces the c11 offset.
    """

    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    c8: float
    c9: float
    c10: float
    c11: float
    k_c: float
    wiebe_a: float = 6.908   # ln(1000): 99.9 % of mass burned at SOC + BD
    wiebe_b: float = 1.5

    def __post_init__(self):
        if self.c5 <= 0.0:
            raise DomainError("c5 must be positive")
        if self.c11 <= 0.0:
            raise DomainError("c11 must be positive")
        if self.k_c <= 1.0:
            raise DomainError("polytropic exponent k_c must exceed 1")
        if self.wiebe_a <= 0.0 or self.wiebe_b <= 0.0:
            raise DomainError("Wiebe shape parameters must be positive")

    @property
    def half_burn_fraction(self) -> float:
        """Fraction of the burn duration elapsed at 50 % mass burned."""
        return float((np.log(2.0) / self.wiebe_a) ** (1.0 / self.wiebe_b))

    @property
    def c7(self) -> float:
        """Plant burn-duration scale [CAD], derived from c11 and the Wiebe shape."""
        return self.c11 / self.half_burn_fraction

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["c7"] = self.c7
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelCoefficients":
        names = {f.name for f in fields(cls)}
        kwargs = {k: float(v) for k, v in d.items() if k in names}
        coeffs = cls(**kwargs)
        if "c7" in d and abs(float(d["c7"]) - coeffs.c7) > 1e-9 * coeffs.c7:
            warnings.warn("c7 in file is inconsistent with c11 and Wiebe shape; recomputed")
        return coeffs

    def replace(self, **changes) -> "ModelCoefficients":
        return replace(self, **changes)


def default_coefficients() -> ModelCoefficients:
    """Shipped calibration of the CA50 model for the reference engine."""
    return ModelCoefficients(
        c1=1.0504e-4,
        c2=1.4958e-4,
        c3=0.2284,
        c4=-0.2604,
        c5=9591.9,
        c6=-0.5962,
        c8=0.8292,
        c9=0.0522,
        c10=-0.9682,
        c11=1.3359,
        k_c=1.0546,
    )


def save_coefficients(path, coeffs: ModelCoefficients):
    with open(path, "w") as fh:
        json.dump(coeffs.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_coefficients(path) -> ModelCoefficients:
    with open(path) as fh:
        return ModelCoefficients.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# charge-state operations

def equivalence_ratios(masses: MassState, fuels: FuelProperties):
    """Per-fuel equivalence ratios (phi_ng, phi_di) from cycle masses."""
    if not np.all(np.asarray(masses.m_air) > 0.0):
        raise DomainError("air mass must be positive to form equivalence ratios")
    phi_ng = (masses.m_ng / masses.m_air) * fuels.afr_stoich_ng
    phi_di = (masses.m_diesel / masses.m_air) * fuels.afr_stoich_diesel
    return phi_ng, phi_di


def egr_from_o2(readings: O2Readings) -> float:
    """EGR mass fraction from intake/exhaust/ambient oxygen fractions.

    Inverts the intake mixing balance
    x_int = (1 - EGR) * x_amb + EGR * x_exh, i.e. returns
    (x_amb - x_int) / (x_amb - x_exh). Values outside [0, 1] are clamped
    with a warning.
    """
    num = readings.x_o2_amb - readings.x_o2_int
    den = readings.x_o2_amb - readings.x_o2_exh
    if np.any(np.asarray(den) <= 0.0):
        raise DomainError("no oxygen depletion: ambient and exhaust O2 are equal")
    egr = num / den
    if np.any(np.asarray(egr) < 0.0) or np.any(np.asarray(egr) > 1.0):
        warnings.warn("EGR estimate outside [0, 1]; clamped", stacklevel=2)
        egr = np.clip(egr, 0.0, 1.0)
    return egr


def residual_fraction(masses: MassState) -> float:
    """Residual gas fraction: trapped mass from the last cycle over fresh charge."""
    den = masses.m_air + masses.m_ng + masses.m_diesel + masses.m_egr
    if not np.all(np.asarray(den) > 0.0):
        raise DomainError("total trapped fresh mass must be positive")
    return masses.m_residual / den


def dilution_fraction(egr, x_r):
    """Total dilution of the charge: EGR fraction plus residual fraction."""
    return egr + x_r


def polytropic_state_at_soi(p_ivc, t_ivc, v_ivc, v_soi, k_c):
    """(P, T) at injection from IVC state via a polytropic compression.

    P_SOI = P_IVC * (V_IVC/V_SOI)^k_c, T_SOI = T_IVC * (V_IVC/V_SOI)^(k_c-1).
    """
    if np.any(np.asarray(v_ivc) <= 0.0) or np.any(np.asarray(v_soi) <= 0.0):
        raise DomainError("volumes must be positive")
    ratio = v_ivc / v_soi
    return p_ivc * ratio ** k_c, t_ivc * ratio ** (k_c - 1.0)
