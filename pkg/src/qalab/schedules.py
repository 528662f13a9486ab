"""Annealing schedules Gamma(t) with analytic derivatives.

Power laws are capped: ``Gamma(t) = min(gamma_cap, (alpha t)^(-1/m))`` with
``m = 2N - 1`` (transverse field) or ``m = N - 1`` (pairwise driver).  The
cap is the constant pre-asymptotic stage, joined continuously at
``t_cap = gamma_cap^(-m) / alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .errors import ScheduleJunctionError
from .ising import DriverKind


@dataclass(frozen=True)
class AdiabaticityTarget:
    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class PowerLaw:
    alpha: float
    exponent_n: int
    gamma_cap: float

    kind = "power"
    driver = DriverKind.TRANSVERSE

    def __post_init__(self):
        if self.alpha <= 0 or self.gamma_cap <= 0:
            raise ValueError("alpha and gamma_cap must be positive")
        if self.decay_order < 1:
            raise ValueError(f"exponent_n={self.exponent_n} gives a non-decaying power law")

    @property
    def decay_order(self) -> int:
        """m in Gamma ~ t^(-1/m)."""
        return 2 * self.exponent_n - 1

    @property
    def t_cap(self) -> float:
        return self.gamma_cap ** (-self.decay_order) / self.alpha

    def gamma(self, t: float) -> float:
        if t <= self.t_cap:
            return self.gamma_cap
        return (self.alpha * t) ** (-1.0 / self.decay_order)

    def dgamma(self, t: float) -> float:
        tc = self.t_cap
        m = self.decay_order
        if t < tc:
            return 0.0
        right = -(self.alpha / m) * (self.alpha * t) ** (-1.0 / m - 1.0)
        if t == tc:
            raise ScheduleJunctionError(t, 0.0, right)
        return right


@dataclass(frozen=True)
class ExtendedPowerLaw(PowerLaw):
    kind = "extended"
    driver = DriverKind.PAIRWISE

    @property
    def decay_order(self) -> int:
        return self.exponent_n - 1


@dataclass(frozen=True)
class Linear:
    gamma_start: float
    t_final: float

    kind = "linear"

    def __post_init__(self):
        if self.gamma_start <= 0 or self.t_final <= 0:
            raise ValueError("gamma_start and t_final must be positive")

    def gamma(self, t: float) -> float:
        return self.gamma_start * max(0.0, 1.0 - t / self.t_final)

    def dgamma(self, t: float) -> float:
        slope = -self.gamma_start / self.t_final
        if t == self.t_final:
            raise ScheduleJunctionError(t, slope, 0.0)
        return slope if t < self.t_final else 0.0


@dataclass(frozen=True)
class Exponential:
    gamma_start: float
    rate: float

    kind = "exponential"

    def __post_init__(self):
        if self.gamma_start <= 0 or self.rate <= 0:
            raise ValueError("gamma_start and rate must be positive")

    def gamma(self, t: float) -> float:
        return self.gamma_start * math.exp(-self.rate * t)

    def dgamma(self, t: float) -> float:
        return -self.rate * self.gamma(t)


@dataclass(frozen=True)
class Constant:
    gamma_value: float

    kind = "constant"

    def __post_init__(self):
        if self.gamma_value < 0:
            raise ValueError("gamma must be nonnegative")

    def gamma(self, t: float) -> float:
        return self.gamma_value

    def dgamma(self, t: float) -> float:
        return 0.0


Schedule = Union[PowerLaw, ExtendedPowerLaw, Linear, Exponential, Constant]


def gamma_at(s: Schedule, t: float) -> float:
    if t < 0:
        raise ValueError("t must be nonnegative")
    return s.gamma(t)


def dgamma_dt(s: Schedule, t: float) -> float:
    if t < 0:
        raise ValueError("t must be nonnegative")
    return s.dgamma(t)


def _terms_and_gap_power(n: int, driver: DriverKind) -> tuple[int, float]:
    # pairwise: gap ~ Gamma^(N/2), so the envelope carries Gamma^N
    if driver is DriverKind.PAIRWISE:
        return driver.n_generator_terms(n), float(n)
    return n, 2.0 * n


def calibrate_alpha(target: AdiabaticityTarget, a: float, n: int,
                    driver=DriverKind.TRANSVERSE) -> float:
    """Prefactor making the adiabaticity envelope of the power law equal delta.

    With Gamma = (alpha t)^(-1/m), dGamma/dt = -(alpha/m) Gamma^(m+1); the
    envelope K/(A^2 Gamma^(m+1)) |dGamma/dt| then equals K alpha / (m A^2).
    """
    if a <= 0:
        raise ValueError("coefficient A must be positive")
    driver = DriverKind.parse(driver)
    k, _ = _terms_and_gap_power(n, driver)
    m = 2 * n - 1 if driver is DriverKind.TRANSVERSE else n - 1
    if m < 1:
        raise ValueError(f"no decaying power law for N={n} with {driver.value} driver")
    return target.delta * m * a * a / k


def adiabaticity_envelope(s: Schedule, a: float, n: int, t: float,
                          driver: Optional[DriverKind] = None) -> float:
    """Upper bound -K / (A^2 Gamma^(2q)) dGamma/dt on the excitation amplitude.

    The driver defaults to the one the schedule was built for (transverse for
    the baseline kinds).
    """
    driver = DriverKind.parse(driver or getattr(s, "driver", DriverKind.TRANSVERSE))
    g = s.gamma(t)
    if g <= 0:
        raise ValueError("envelope needs Gamma(t) > 0")
    k, power = _terms_and_gap_power(n, driver)
    rate = s.dgamma(t)
    if rate == 0.0:
        return 0.0
    return -k * rate / (a * a * g**power)


def schedule_from_config(cfg: Mapping[str, str], n: int, *, a: Optional[float] = None,
                         default_cap: Optional[float] = None) -> Schedule:
    """Build a schedule from ``schedule = ...`` plus kind-specific keys.

    ``power``/``extended`` take ``alpha`` directly, or ``delta`` together with
    the gap coefficient ``a`` for calibration.  ``gamma_cap`` defaults to
    ``default_cap``.
    """
    kind = cfg.get("schedule", "power").strip().lower()

    def num(key, default=None):
        if key in cfg:
            return float(cfg[key])
        if default is None:
            raise ValueError(f"schedule '{kind}' needs '{key}'")
        return default

    if kind in ("power", "extended"):
        cls = PowerLaw if kind == "power" else ExtendedPowerLaw
        if "alpha" in cfg:
            alpha = float(cfg["alpha"])
        else:
            if a is None:
                raise ValueError(f"schedule '{kind}' needs 'alpha' or 'delta' plus a gap coefficient")
            alpha = calibrate_alpha(AdiabaticityTarget(num("delta")), a, n, cls.driver)
        return cls(alpha, n, num("gamma_cap", default_cap))
    if kind == "linear":
        return Linear(num("gamma_start", default_cap), num("t_final"))
    if kind == "exponential":
        return Exponential(num("gamma_start", default_cap), num("rate"))
    if kind == "constant":
        return Constant(num("gamma"))
    raise ValueError(f"unknown schedule kind {kind!r}")
