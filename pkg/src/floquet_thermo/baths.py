"""Thermal bath spectra with detailed balance built in.

A bath is specified by its temperature and the rate function on
non-negative frequencies. The negative branch is never stored; it is
generated from ``G(-w) = exp(-w/T) G(w)``, so detailed balance holds to
rounding for every model. Units: hbar = k_B = 1.
"""
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class BathSpec:
    label: str
    temperature: float
    positive_branch: Callable[[float], float] = field(compare=False, repr=False)
    model: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.temperature > 0 and math.isfinite(self.temperature)):
            raise ValueError(f"bath '{self.label}': temperature must be positive and finite, "
                             f"got {self.temperature}")

    def rate(self, omega):
        return eval_rate(self, omega)

    def __call__(self, omega):
        return eval_rate(self, omega)


def eval_rate(bath, omega):
    """Transition rate ``G(omega)``; the negative branch follows from KMS."""
    omega = float(omega)
    if not math.isfinite(omega):
        raise ValueError(f"bath '{bath.label}': frequency must be finite, got {omega}")
    if omega >= 0:
        g = float(bath.positive_branch(omega))
    else:
        g = math.exp(omega / bath.temperature) * float(bath.positive_branch(-omega))
    if g < 0:
        raise ValueError(f"bath '{bath.label}': negative rate {g} at omega={omega}")
    return g


def _positive(name, value, label):
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"bath '{label}': {name} must be positive, got {value}")


def make_flat_bath(label, temperature, gamma0):
    _positive("gamma0", gamma0, label)
    return BathSpec(label, float(temperature), lambda w: gamma0, "flat",
                    {"gamma0": float(gamma0)})


def make_ohmic_bath(label, temperature, gamma0, cutoff):
    """Ohmic spectrum ``gamma0 * w * exp(-w / cutoff)`` on ``w >= 0``."""
    _positive("gamma0", gamma0, label)
    _positive("cutoff", cutoff, label)
    return BathSpec(label, float(temperature), lambda w: gamma0 * w * math.exp(-w / cutoff),
                    "ohmic", {"gamma0": float(gamma0), "cutoff": float(cutoff)})


def make_tabulated_bath(label, temperature, omegas, rates):
    """Linear interpolation of ``rates`` on the grid ``omegas``.

    Zero below the first grid point, held at the last value beyond the grid.
    """
    omegas = np.asarray(omegas, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if omegas.ndim != 1 or omegas.shape != rates.shape or len(omegas) < 2:
        raise ValueError(f"bath '{label}': need matching 1-d grids with at least two points")
    if np.any(np.diff(omegas) <= 0) or omegas[0] < 0:
        raise ValueError(f"bath '{label}': frequency grid must be increasing and non-negative")
    if np.any(rates < 0):
        raise ValueError(f"bath '{label}': tabulated rates must be non-negative")

    def branch(w):
        if w < omegas[0]:
            return 0.0
        return float(np.interp(w, omegas, rates))

    return BathSpec(label, float(temperature), branch, "tabulated",
                    {"omega": tuple(omegas.tolist()), "rate": tuple(rates.tolist())})
