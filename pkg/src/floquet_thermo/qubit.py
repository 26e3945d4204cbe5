"""Analytic model of a qubit with diagonal frequency modulation.

``H(t) = omega(t) sigma_z / 2`` coupled through ``sigma_x`` to any number
of baths. Writing ``phi(t) = int_0^t (omega - omega0)`` and

    xi(q) = (1/tau) int_0^tau exp(i phi(t)) exp(i q Omega t) dt,

the lowering part of ``sigma_x`` in the interaction picture is
``sum_q conj(xi(q)) exp(-i (omega0 - q Omega) t) sigma_-``. Harmonic ``q``
therefore exchanges the quantum ``omega0 - q Omega`` with weight
``P(q) = |xi(q)|^2``; in the generic channel labelling (quantum
``w + q' Omega``) it carries ``q' = -q``. For the modulations with a
symmetric ``P(q)`` (pulse train, sinusoid) the two labellings give the
same sums.
"""
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad_vec, trapezoid

from .errors import FloquetThermoError
from .floquet import diagonal_modulated, harmonic_decompose
from .generators import _bundle, build_floquet, make_channel
from .operators import SIGMA_MINUS, SIGMA_PLUS, SIGMA_X, SIGMA_Z, dissipator, apply_superop

SHAPES = ("constant", "sinusoidal", "pulse_train", "tabulated")
DEFAULT_Q = {"pulse_train": 31, "constant": 8, "sinusoidal": 8, "tabulated": 8}
QUAD_TOL = 1e-10


class QuadratureError(FloquetThermoError):
    pass


@dataclass(frozen=True)
class ModulationProfile:
    """Periodic qubit frequency ``omega(t)`` with mean ``omega0``.

    ``pulse_train`` adds a ``+pi`` phase kick at ``tau/4`` and a ``-pi`` kick
    at ``3 tau/4`` of every period on top of the constant ``omega0``.
    ``sinusoidal`` is ``omega0 + amplitude * sin(Omega t + phase)``.
    ``tabulated`` linearly interpolates ``samples`` (``(t, omega)`` pairs
    spanning ``[0, period]``).
    """

    omega0: float
    period: float
    shape: str = "constant"
    amplitude: float = 0.0
    phase: float = 0.0
    samples: tuple = ()

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown modulation shape {self.shape!r}; expected one of {SHAPES}")
        if not (self.omega0 > 0 and self.period > 0):
            raise ValueError("omega0 and period must be positive")
        if self.shape == "sinusoidal" and abs(self.amplitude) >= self.omega0:
            raise ValueError("sinusoidal amplitude must be below omega0 so that omega(t) > 0")
        if self.shape == "tabulated":
            t, w = self._table()
            if len(t) < 2 or abs(t[0]) > 1e-12 or abs(t[-1] - self.period) > 1e-12 * self.period:
                raise ValueError("tabulated samples must span [0, period]")
            if np.any(np.diff(t) <= 0) or np.any(w <= 0):
                raise ValueError("tabulated samples need increasing times and omega > 0")
            if abs(self.mean_frequency() - self.omega0) > 1e-10:
                raise ValueError(f"omega0={self.omega0} differs from the sample mean "
                                 f"{self.mean_frequency()}")

    @classmethod
    def tabulated(cls, times, omegas):
        t = np.asarray(times, dtype=float)
        w = np.asarray(omegas, dtype=float)
        mean = float(trapezoid(w, t) / (t[-1] - t[0]))
        return cls(mean, float(t[-1]), "tabulated",
                   samples=tuple(zip(t.tolist(), w.tolist())))

    @property
    def drive_frequency(self):
        return 2 * math.pi / self.period

    @property
    def breakpoints(self):
        if self.shape == "pulse_train":
            return (0.25 * self.period, 0.75 * self.period)
        if self.shape == "tabulated":
            return tuple(self._table()[0][1:-1])
        return ()

    def _table(self):
        arr = np.asarray(self.samples, dtype=float).reshape(-1, 2)
        return arr[:, 0], arr[:, 1]

    def frequency(self, t):
        """Smooth part of ``omega(t)`` (pulse kicks are carried by :meth:`phase_offset`)."""
        t = np.mod(t, self.period)
        if self.shape == "sinusoidal":
            return self.omega0 + self.amplitude * np.sin(self.drive_frequency * t + self.phase)
        if self.shape == "tabulated":
            ts, ws = self._table()
            return np.interp(t, ts, ws)
        return self.omega0 + 0 * t

    def phase_offset(self, t):
        """``phi(t) = int_0^t (omega(s) - omega0) ds``, periodic in ``t``."""
        s = np.mod(t, self.period)
        if self.shape == "sinusoidal":
            om = self.drive_frequency
            return self.amplitude / om * (math.cos(self.phase) - np.cos(om * s + self.phase))
        if self.shape == "pulse_train":
            return np.where((s >= 0.25 * self.period) & (s < 0.75 * self.period), math.pi, 0.0)
        if self.shape == "tabulated":
            ts, ws = self._table()
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (ws[1:] + ws[:-1]) * np.diff(ts))])
            i = np.clip(np.searchsorted(ts, s, side="right") - 1, 0, len(ts) - 2)
            dt = s - ts[i]
            slope = (ws[i + 1] - ws[i]) / (ts[i + 1] - ts[i])
            return cum[i] + ws[i] * dt + 0.5 * slope * dt * dt - self.omega0 * s
        return 0.0 * s

    def total_phase(self, t):
        """``int_0^t omega(s) ds``."""
        return self.omega0 * t + self.phase_offset(t)

    def mean_frequency(self):
        if self.shape == "tabulated":
            ts, ws = self._table()
            return float(trapezoid(ws, ts) / self.period)
        return self.omega0  # the kicks and the sinusoid average to zero


@lru_cache(maxsize=256)
def xi_table(mod, q_max):
    """``xi(q)`` for ``q = -q_max..q_max`` by adaptive quadrature."""
    qs = np.arange(-q_max, q_max + 1)
    om = mod.drive_frequency

    def integrand(t):
        return np.exp(1j * (mod.phase_offset(t) + qs * om * t))

    val, err = quad_vec(integrand, 0.0, mod.period, epsabs=1e-13, epsrel=1e-13,
                        points=mod.breakpoints or None, limit=20000)
    val, err = val / mod.period, err / mod.period
    if err > QUAD_TOL:
        raise QuadratureError(f"xi quadrature error estimate {err:.2e} exceeds {QUAD_TOL:g}")
    val.setflags(write=False)
    return val


def xi(mod, q):
    q = int(q)
    return complex(xi_table(mod, abs(q))[q + abs(q)])


def pq(mod, q):
    return abs(xi(mod, q)) ** 2


def pq_table(mod, q_max):
    return np.abs(xi_table(mod, q_max)) ** 2


def pulse_train_weight(q):
    """Closed form of ``P(q)`` for the two-kick pulse train."""
    return 4 / (math.pi ** 2 * q * q) if q % 2 else 0.0


def effective_temperature(temperature, omega0, drive_frequency, q):
    """``omega0 / (omega0 - q Omega) * T``; ``inf`` on resonance. May be negative."""
    gap = omega0 - q * drive_frequency
    if abs(gap) <= 1e-12 * max(abs(omega0), abs(q * drive_frequency)):
        return math.inf
    return omega0 / gap * temperature


@dataclass(frozen=True)
class QubitModel:
    modulation: ModulationProfile
    baths: tuple
    q_max: int = None

    def __post_init__(self):
        if self.q_max is None:
            object.__setattr__(self, "q_max", DEFAULT_Q[self.modulation.shape])
        if self.q_max < 0:
            raise ValueError("q_max must be non-negative")
        labels = [b.label for b in self.baths]
        if not labels or len(set(labels)) != len(labels):
            raise ValueError(f"need at least one bath with unique labels, got {labels}")
        mass = self.captured_mass
        if mass < 1 - 1e-6:
            warnings.warn(f"harmonic truncation Q={self.q_max} captures P mass {mass:.9f} "
                          f"< 1 - 1e-6; {self.required_q_hint()}", stacklevel=2)

    @property
    def omega0(self):
        return self.modulation.omega0

    @property
    def drive_frequency(self):
        return self.modulation.drive_frequency

    @property
    def hamiltonian(self):
        """Reference Hamiltonian ``omega0 sigma_z / 2``."""
        return 0.5 * self.omega0 * SIGMA_Z

    @property
    def coupling(self):
        return SIGMA_X

    @property
    def harmonics(self):
        return np.arange(-self.q_max, self.q_max + 1)

    @property
    def weights(self):
        return pq_table(self.modulation, self.q_max)

    @property
    def captured_mass(self):
        return float(self.weights.sum())

    def required_q_hint(self):
        if self.modulation.shape == "pulse_train":
            return f"the pulse-train tail 4/(pi^2 Q) needs Q >= {math.ceil(4e6 / math.pi ** 2)}"
        return "increase q_max"

    def quantum(self, q):
        """Energy exchanged by harmonic ``q``: ``omega0 - q Omega``."""
        return self.omega0 - q * self.drive_frequency

    def bath(self, label):
        for b in self.baths:
            if b.label == label:
                return b
        raise KeyError(label)


@dataclass(frozen=True)
class AveragedRates:
    excited: dict
    ground: dict
    tail_mass: float


def averaged_rates(model):
    """Per-bath decay (``excited``) and excitation (``ground``) rates averaged over ``P(q)``.

    Each rate omits at most ``tail_mass`` times the largest spectral value
    outside the truncation window.
    """
    p = model.weights
    exc, gnd = {}, {}
    for b in model.baths:
        nus = [model.quantum(q) for q in model.harmonics]
        exc[b.label] = float(sum(pi * b.rate(nu) for pi, nu in zip(p, nus)))
        gnd[b.label] = float(sum(pi * b.rate(-nu) for pi, nu in zip(p, nus)))
    return AveragedRates(exc, gnd, max(0.0, 1.0 - float(p.sum())))


def t_eff(model):
    """Effective temperature ``omega0 / ln(sum R_e / sum R_g)``; ``inf`` when the ratio is 1."""
    r = averaged_rates(model)
    num, den = sum(r.excited.values()), sum(r.ground.values())
    if den <= 0 or num <= 0:
        raise FloquetThermoError("averaged rates vanish; effective temperature undefined")
    log_ratio = math.log(num / den)
    if log_ratio == 0:
        return math.inf
    return model.omega0 / log_ratio


def stationary_state(model):
    """Diagonal steady state from the averaged rates (basis ``(excited, ground)``)."""
    r = averaged_rates(model)
    up, down = sum(r.ground.values()), sum(r.excited.values())
    pe = up / (up + down)
    return np.diag([pe, 1 - pe]).astype(complex)


def harmonic_generator(model, label, q):
    """Superoperator of the single-harmonic dissipator of bath ``label``."""
    b = model.bath(label)
    p = float(model.weights[q + model.q_max])
    nu = model.quantum(q)
    return p * (dissipator(SIGMA_MINUS, b.rate(nu)) + dissipator(SIGMA_PLUS, b.rate(-nu)))


def single_harmonic_current(model, rho, label, q):
    """``(1 - q Omega / omega0) Tr[(L_q rho) H0]`` for bath ``label``."""
    lq = harmonic_generator(model, label, q)
    factor = 1 - q * model.drive_frequency / model.omega0
    return float(factor * np.real(np.trace(apply_superop(lq, rho) @ model.hamiltonian)))


def build_qubit_bundle(model):
    """Generator bundle of the analytic model, one channel per (bath, harmonic)."""
    h0 = model.hamiltonian
    channels = []
    for b in model.baths:
        for q, p in zip(model.harmonics, model.weights):
            ch = make_channel(b, -int(q), model.omega0, math.sqrt(p) * SIGMA_MINUS,
                              model.drive_frequency, h0)
            if ch is not None:
                channels.append(ch)
    return _bundle(channels, h0, "floquet", model.drive_frequency)


def periodic_hamiltonian(mod):
    """The modulated qubit as a diagonal-modulated periodic Hamiltonian with exact phases."""
    half = np.array([0.5, -0.5])
    return diagonal_modulated(lambda t: half * float(mod.frequency(t)), mod.period,
                              phase=lambda t: half * float(mod.total_phase(t)),
                              breakpoints=mod.breakpoints)


def floquet_bundle(model, grid_n=None, branch="mean_energy", strict=True):
    """Same model through the generic Floquet route (numerical harmonics)."""
    h = periodic_hamiltonian(model.modulation)
    fd = harmonic_decompose(model.coupling, h, max(model.q_max, 1), grid_n, branch=branch,
                            strict=strict)
    return build_floquet([(fd, b) for b in model.baths], q_max=model.q_max)
