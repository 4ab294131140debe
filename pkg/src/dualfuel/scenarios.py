"""Scenario definitions: piecewise-linear schedules over time for the engine
boundary conditions and the CA50 reference, plus JSON (de)serialisation and
the six built-in benchmark transients."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .control import MEAN_RESIDUAL_FRACTION

# quantities a scenario may schedule; manifold conditions are mapped to IVC
# conditions unless the scenario supplies p_ivc/t_ivc directly
SCHEDULE_KEYS = ("speed", "phi_di", "phi_ng", "egr", "x_r",
                 "p_ivc", "t_ivc", "p_man", "t_man")

# documented bridge from mean intake-manifold conditions to IVC conditions
# (ram/heating effects of the intake stroke on this engine)
IVC_PRESSURE_GAIN = 1.45    # p_ivc = 1.45 * p_man  [bar]
IVC_TEMP_OFFSET = 90.0      # t_ivc = t_man + 90    [K]

CONTROLLERS = ("adaptive", "feedforward")


@dataclass(frozen=True)
class Breakpoint:
    """New schedule value taking effect at time t, optionally reached by a
    linear ramp of length ramp_s."""

    t: float
    value: float
    ramp_s: float = 0.0

    def __post_init__(self):
        if self.ramp_s < 0.0:
            raise ValueError("ramp_s must be non-negative")


@dataclass(frozen=True)
class Scenario:
    duration_s: float
    controller: str
    schedules: dict              # name -> list[Breakpoint]
    reference: list              # list[Breakpoint] for the CA50 target
    plant: dict = field(default_factory=dict)   # PlantConfig overrides

    def __post_init__(self):
        if self.duration_s < 0.0:
            raise ValueError("duration_s must be non-negative")
        if self.controller not in CONTROLLERS:
            raise ValueError(f"controller must be one of {CONTROLLERS}")
        for key, bps in self.schedules.items():
            if key not in SCHEDULE_KEYS:
                raise ValueError(f"unknown schedule key {key!r}")
            _check_breakpoints(key, bps)
        _check_breakpoints("reference", self.reference)
        for key in ("speed", "phi_di", "phi_ng"):
            if key not in self.schedules:
                raise ValueError(f"scenario must schedule {key!r}")
        if "p_ivc" not in self.schedules and "p_man" not in self.schedules:
            raise ValueError("scenario must schedule p_ivc or p_man")
        if "t_ivc" not in self.schedules and "t_man" not in self.schedules:
            raise ValueError("scenario must schedule t_ivc or t_man")

    def event_times(self):
        """Sorted distinct times at which any schedule or the reference
        changes (segment boundaries), excluding t = 0."""
        times = set()
        for bps in list(self.schedules.values()) + [self.reference]:
            for bp in bps:
                if 0.0 < bp.t < self.duration_s:
                    times.add(bp.t)
        return sorted(times)


def _check_breakpoints(name, bps):
    if not bps:
        raise ValueError(f"schedule {name!r} has no breakpoints")
    ts = [bp.t for bp in bps]
    if ts != sorted(ts):
        raise ValueError(f"schedule {name!r} breakpoints must be time-ordered")


def schedule_value(bps, t: float) -> float:
    """Evaluate a breakpoint list: piecewise constant, with linear
    interpolation across each breakpoint's ramp window."""
    v = bps[0].value
    for bp in bps:
        if t < bp.t:
            break
        if bp.ramp_s > 0.0 and t < bp.t + bp.ramp_s:
            return v + (bp.value - v) * (t - bp.t) / bp.ramp_s
        v = bp.value
    return v


# ---------------------------------------------------------------------------
# JSON round trip

def scenario_to_dict(s: Scenario) -> dict:
    return {
        "duration_s": s.duration_s,
        "controller": s.controller,
        "plant": dict(s.plant),
        "schedules": {k: [asdict(bp) for bp in bps] for k, bps in s.schedules.items()},
        "reference": [asdict(bp) for bp in s.reference],
    }


def scenario_from_dict(d: dict) -> Scenario:
    return Scenario(
        duration_s=float(d["duration_s"]),
        controller=d["controller"],
        plant=dict(d.get("plant", {})),
        schedules={k: [Breakpoint(**bp) for bp in bps]
                   for k, bps in d["schedules"].items()},
        reference=[Breakpoint(**bp) for bp in d["reference"]],
    )


def save_scenario(path, s: Scenario):
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(s), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# built-in benchmark transients

def _const(v):
    return [Breakpoint(t=0.0, value=v)]


def _step(v0, v1, t=5.0, ramp_s=0.0):
    return [Breakpoint(t=0.0, value=v0), Breakpoint(t=t, value=v1, ramp_s=ramp_s)]


def builtin_case(n: int, controller: str = "adaptive",
                 duration_s: float = 10.0, seed: int = 0) -> Scenario:
    """Six benchmark transients at 1200 RPM base, manifold 2 bar / 300 K,
    second condition applied at t = 5 s (ramped over 0.5 s where the change
    is a plant quantity):

    1 reference CA50 step 8 -> 10; 2 speed 1200 -> 1500; 3 phi_ng 0.3 -> 0.5;
    4 EGR 0 -> 0.5; 5 speed + phi_ng combined; 6 speed + phi_ng + EGR combined.
    """
    if n not in (1, 2, 3, 4, 5, 6):
        raise ValueError("case number must be 1..6")
    base = {
        "speed": _const(1200.0),
        "t_man": _const(300.0),
        "p_man": _const(2.0),
        "phi_di": _const(0.4),
        "phi_ng": _const(0.4),
        "egr": _const(0.25),
        "x_r": _const(MEAN_RESIDUAL_FRACTION),
    }
    reference = _const(8.0)
    if n == 1:
        reference = _step(8.0, 10.0)
    elif n == 2:
        base["speed"] = _step(1200.0, 1500.0, ramp_s=0.5)
    elif n == 3:
        base["phi_ng"] = _step(0.3, 0.5, ramp_s=0.5)
    elif n == 4:
        base["egr"] = _step(0.0, 0.5, ramp_s=0.5)
    elif n == 5:
        base["speed"] = _step(1200.0, 1500.0, ramp_s=0.5)
        base["phi_ng"] = _step(0.3, 0.5, ramp_s=0.5)
    elif n == 6:
        base["speed"] = _step(1200.0, 1500.0, ramp_s=0.5)
        base["phi_ng"] = _step(0.3, 0.5, ramp_s=0.5)
        base["egr"] = _step(0.0, 0.5, ramp_s=0.5)
    # benchmark runs are noise-free; the measurement-noise study adds it back
    plant = {"ca50_noise_halfwidth": 0.0, "rng_seed": seed}
    return Scenario(duration_s=duration_s, controller=controller,
                    schedules=base, reference=reference, plant=plant)
