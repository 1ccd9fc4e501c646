"""Conversion between laboratory parameters and the natural-unit measurement strength.

The imprecision floor is read in the two-sided convention where the floor of
the position spectrum equals ``precision**2`` in m^2/Hz, with no extra 2*pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from scipy.constants import hbar

from .errors import InputError

SPECTRAL_CONVENTION = "two-sided, imprecision floor = precision^2 in m^2/Hz (no 2*pi)"


def _positive(name, value, problems):
    if value is None:
        return
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0.0):
        problems.append(f"{name} must be a positive number, got {value!r}")


@dataclass(frozen=True)
class ExperimentParams:
    """SI parameters of a trapped-particle experiment.

    ``precision`` is the imprecision amplitude in m/sqrt(Hz); ``heating_rate``
    is in J/s.  Either may be omitted, but ``gamma_tilde`` needs one of them.
    """

    mass: float
    omega: float
    precision: Optional[float] = None
    eta: Optional[float] = None
    heating_rate: Optional[float] = None

    def __post_init__(self):
        problems = []
        for name in ("mass", "omega"):
            value = getattr(self, name)
            if value is None:
                problems.append(f"{name} is required")
            else:
                _positive(name, value, problems)
        _positive("precision", self.precision, problems)
        _positive("heating_rate", self.heating_rate, problems)
        if self.eta is not None and not (isinstance(self.eta, (int, float)) and 0.0 < self.eta <= 1.0):
            problems.append(f"eta must lie in (0, 1], got {self.eta!r}")
        if problems:
            raise InputError("; ".join(problems))


def gamma_tilde_from_gamma(gamma: float, mass: float, omega: float) -> float:
    return hbar * gamma / (mass * omega * omega)


def gamma_from_gamma_tilde(gamma_tilde: float, mass: float, omega: float) -> float:
    return gamma_tilde * mass * omega * omega / hbar


def gamma_from_noise_floor(p: ExperimentParams) -> float:
    """Natural-unit measurement strength implied by the imprecision floor."""
    missing = [name for name in ("precision", "eta") if getattr(p, name) is None]
    if missing:
        raise InputError(f"noise-floor calibration needs {', '.join(missing)}")
    gamma = 1.0 / (2.0 * p.eta * p.precision ** 2)
    return gamma_tilde_from_gamma(gamma, p.mass, p.omega)


def heating_rate_from_gamma_tilde(gamma_tilde: float, mass: float, omega: float) -> float:
    """Recoil heating rate (J/s) of the unfed-back particle."""
    return hbar * gamma_from_gamma_tilde(gamma_tilde, mass, omega) / (4.0 * mass)


def gamma_from_heating_rate(rate: float, mass: float, omega: float) -> float:
    """Natural-unit measurement strength implied by an observed heating rate."""
    problems = []
    for name, value in (("rate", rate), ("mass", mass), ("omega", omega)):
        _positive(name, value, problems)
    if problems:
        raise InputError("; ".join(problems))
    gamma = 4.0 * mass * rate / hbar
    return gamma_tilde_from_gamma(gamma, mass, omega)


def gamma_tilde_of(p: ExperimentParams) -> float:
    """Calibrate from the noise floor when available, otherwise from the heating rate."""
    if p.precision is not None:
        return gamma_from_noise_floor(p)
    if p.heating_rate is not None:
        return gamma_from_heating_rate(p.heating_rate, p.mass, p.omega)
    raise InputError("need either precision (with eta) or heating_rate to calibrate")


@dataclass(frozen=True)
class NaturalUnitsReport:
    gamma_tilde: float
    eta: Optional[float]
    length: float
    momentum: float
    energy: float
    time: float
    convention: str = SPECTRAL_CONVENTION

    def lines(self) -> list:
        eta = "unset" if self.eta is None else repr(self.eta)
        return [
            f"gamma_tilde = {self.gamma_tilde!r}",
            f"eta = {eta}",
            f"length unit sqrt(hbar/(m omega)) = {self.length!r} m",
            f"momentum unit sqrt(hbar m omega) = {self.momentum!r} kg m/s",
            f"energy unit hbar omega = {self.energy!r} J",
            f"time unit 1/omega = {self.time!r} s",
            f"spectral convention: {self.convention}",
        ]


def natural_units_report(p: ExperimentParams) -> NaturalUnitsReport:
    return NaturalUnitsReport(
        gamma_tilde=gamma_tilde_of(p),
        eta=p.eta,
        length=math.sqrt(hbar / (p.mass * p.omega)),
        momentum=math.sqrt(hbar * p.mass * p.omega),
        energy=hbar * p.omega,
        time=1.0 / p.omega,
    )


_KEYS = {"mass", "omega", "frequency", "precision", "eta", "heating_rate"}


def parse_param_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Problems are reported together."""
    values, problems = {}, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected key=value, got {raw.strip()!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key not in _KEYS:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        try:
            values[key] = float(value)
        except ValueError:
            problems.append(f"line {lineno}: {key} is not a number: {value!r}")
    if problems:
        raise InputError("; ".join(problems))
    return values


def params_from_mapping(values: dict) -> ExperimentParams:
    """Build ExperimentParams; ``frequency`` (Hz) is accepted in place of ``omega``."""
    values = dict(values)
    if "frequency" in values:
        if "omega" in values:
            raise InputError("give either omega or frequency, not both")
        freq = values.pop("frequency")
        values["omega"] = 2.0 * math.pi * freq if freq is not None else None
    return ExperimentParams(
        mass=values.get("mass"),
        omega=values.get("omega"),
        precision=values.get("precision"),
        eta=values.get("eta"),
        heating_rate=values.get("heating_rate"),
    )


def load_param_file(path: str) -> ExperimentParams:
    with open(path, encoding="utf-8") as fh:
        return params_from_mapping(parse_param_text(fh.read()))
