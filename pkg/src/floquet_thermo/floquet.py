"""Floquet analysis of periodic Hamiltonians.

Conventions
-----------
``U(t)`` is the time-ordered propagator from 0 to ``t``. The monodromy
``U(tau)`` is written ``exp(-i Hbar tau)`` with ``Hbar = sum_k eps_k P_k``.
A coupling operator in the Heisenberg frame is expanded as::

    U(t)^dag S U(t) = sum_{w, q} exp(-i (w + q Omega) t) S_{w q}

where ``w = eps_l - eps_k`` for the block ``P_k S P_l``. With this sign a
component with ``w + q Omega > 0`` removes that energy from the system, and
``S_{-w,-q} = S_{w q}^dag``.
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import AccuracyError, DimensionMismatch, TruncationError
from .operators import (
    COMPONENT_FLOOR, DEGENERACY_TOL, as_hermitian, dagger, expm_hermitian, nearest_frequency,
    superop_sandwich, symmetric_frequency_set,
)

FORMS = ("piecewise-constant", "smooth-sampled", "diagonal-modulated")
GOLDEN = 0.6180339887498949


class QuasiEnergyDegeneracyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PeriodicHamiltonian:
    """A ``period``-periodic Hermitian ``H(t)``.

    ``breakpoints`` lists the times in ``(0, period)`` where ``H`` may jump;
    steps never straddle them. A diagonal-modulated Hamiltonian may carry
    ``phase(t)``, the vector of accumulated diagonal phases ``int_0^t h_kk``,
    in which case the propagator is evaluated exactly (this is how delta
    kicks are represented).
    """

    period: float
    evaluator: Callable[[float], np.ndarray] = field(repr=False)
    form: str = "smooth-sampled"
    breakpoints: tuple = ()
    phase: Optional[Callable[[float], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        if self.form not in FORMS:
            raise ValueError(f"unknown form {self.form!r}; expected one of {FORMS}")

    @property
    def drive_frequency(self):
        return 2 * math.pi / self.period

    @property
    def dim(self):
        return self(0.0).shape[0]

    def __call__(self, t):
        return np.asarray(self.evaluator(t % self.period), dtype=complex)

    def periodicity_defect(self, samples=16):
        ts = np.linspace(0, self.period, samples, endpoint=False) + 0.123 * self.period / samples
        return max(np.linalg.norm(self.evaluator(t) - self.evaluator(t + self.period))
                   for t in ts)


def constant_hamiltonian(h, period):
    h = as_hermitian(h, "hamiltonian")
    return PeriodicHamiltonian(period, lambda t: h, "piecewise-constant")


def piecewise_constant(hamiltonians, durations):
    """Hamiltonian cycling through ``hamiltonians`` for the given ``durations``."""
    hs = [as_hermitian(h, f"segment {i}") for i, h in enumerate(hamiltonians)]
    durations = np.asarray(durations, dtype=float)
    if len(hs) != len(durations) or len(hs) == 0 or np.any(durations <= 0):
        raise ValueError("need one positive duration per segment")
    if len({h.shape for h in hs}) != 1:
        raise DimensionMismatch("segment Hamiltonians differ in dimension")
    edges = np.cumsum(durations)
    period = float(edges[-1])

    def evaluator(t):
        return hs[min(int(np.searchsorted(edges, t, side="right")), len(hs) - 1)]

    return PeriodicHamiltonian(period, evaluator, "piecewise-constant",
                               tuple(float(e) for e in edges[:-1]))


def smooth_hamiltonian(fn, period):
    return PeriodicHamiltonian(period, fn, "smooth-sampled")


def diagonal_modulated(diagonal, period, phase=None, breakpoints=()):
    """``H(t) = diag(diagonal(t))``; ``phase(t)`` (if given) must equal ``int_0^t diagonal``."""
    return PeriodicHamiltonian(period, lambda t: np.diag(np.asarray(diagonal(t), dtype=complex)),
                               "diagonal-modulated", tuple(breakpoints), phase)


# --- propagation -----------------------------------------------------------

def _magnus4_step(h, t0, dt):
    """Fourth-order Magnus step with two Gauss points; exactly unitary."""
    c = math.sqrt(3) / 6
    h1, h2 = h(t0 + (0.5 - c) * dt), h(t0 + (0.5 + c) * dt)
    # exp(Omega) with Omega = -i dt (h1+h2)/2 - sqrt(3) dt^2 [h2,h1]/12 = -i K
    k = 0.5 * dt * (h1 + h2) - 1j * math.sqrt(3) / 12 * dt * dt * (h2 @ h1 - h1 @ h2)
    return expm_hermitian(0.5 * (k + dagger(k)))


def _midpoint_step(h, t0, dt):
    return expm_hermitian(h(t0 + 0.5 * dt), dt)


_STEPPERS = {"magnus4": _magnus4_step, "midpoint": _midpoint_step}


def _cuts(h, t0, t1):
    """Breakpoints of ``h`` strictly inside ``(t0, t1)``, with the interval ends."""
    pts = [t0]
    if h.breakpoints or h.form == "piecewise-constant":
        marks = list(h.breakpoints) + [0.0]
        k0 = math.floor(t0 / h.period)
        k1 = math.floor(t1 / h.period)
        inner = sorted(k * h.period + b for k in range(k0, k1 + 1) for b in marks)
        pts += [p for p in inner if t0 + 1e-14 * h.period < p < t1 - 1e-14 * h.period]
    pts.append(t1)
    return pts


def _advance(h, t0, t1, steps_per_period, method):
    """Propagator from ``t0`` to ``t1`` (``t1 >= t0``)."""
    d = h.dim
    u = np.eye(d, dtype=complex)
    step = _STEPPERS[method]
    pts = _cuts(h, t0, t1)
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        if h.form == "piecewise-constant":
            u = expm_hermitian(h(0.5 * (a + b)), b - a) @ u
            continue
        n = max(1, math.ceil((b - a) / h.period * steps_per_period - 1e-9))
        dt = (b - a) / n
        for i in range(n):
            u = step(h, a + i * dt, dt) @ u
    return u


def _check_steps(steps_per_period):
    if steps_per_period < 64:
        raise ValueError(f"steps_per_period must be >= 64, got {steps_per_period}")


def _check_unitary(u, what):
    err = np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0]))
    if err > 1e-8:
        raise AccuracyError(f"{what}: unitarity drift {err:.3e} exceeds 1e-8")
    return u


def propagate(h, t, steps_per_period=1024, method="magnus4"):
    """Time-ordered propagator ``U(t, 0)``.

    Periodicity is used to reduce ``t`` to one period:
    ``U(n tau + r) = U(r) U(tau)^n``. Piecewise-constant segments are
    exponentiated exactly; smooth parts use ``method`` ("magnus4" or
    "midpoint") with ``steps_per_period`` steps per period.
    """
    _check_steps(steps_per_period)
    if t < 0:
        raise ValueError("t must be non-negative")
    if h.phase is not None:
        return np.diag(np.exp(-1j * np.asarray(h.phase(t), dtype=float))).astype(complex)
    n, r = divmod(float(t), h.period)
    if r > h.period * (1 - 1e-13):
        n, r = n + 1, 0.0
    u = _advance(h, 0.0, r, steps_per_period, method)
    if n:
        u = u @ np.linalg.matrix_power(_advance(h, 0.0, h.period, steps_per_period, method), int(n))
    return _check_unitary(u, "propagate")


def propagate_grid(h, times, steps_per_period=1024, method="magnus4"):
    """Propagators at ascending ``times`` (cumulative stepping); shape ``(n, d, d)``."""
    _check_steps(steps_per_period)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or (len(times) and times[0] < 0):
        raise ValueError("times must be ascending and non-negative")
    if h.phase is not None:
        return np.stack([np.diag(np.exp(-1j * np.asarray(h.phase(t), dtype=float)))
                         for t in times]).astype(complex)
    out = np.empty((len(times), h.dim, h.dim), dtype=complex)
    u = np.eye(h.dim, dtype=complex)
    prev = 0.0
    for i, t in enumerate(times):
        if t > prev:
            u = _advance(h, prev, t, steps_per_period, method) @ u
        out[i] = u
        prev = t
    _check_unitary(u, "propagate_grid")
    return out


def richardson_defect(h, steps_per_period=1024, method="magnus4"):
    """``||U_tau(2n) - U_tau(n)||_F``: change of the monodromy when steps double."""
    a = propagate(h, h.period, steps_per_period, method)
    b = propagate(h, h.period, 2 * steps_per_period, method)
    return float(np.linalg.norm(a - b))


def heisenberg_frame(op, u):
    """Conjugate an operator (``U A U^dag``) or a superoperator (``UU L UU^dag``) by ``u``."""
    op, u = np.asarray(op), np.asarray(u)
    d = u.shape[0]
    if op.shape == (d, d):
        return u @ op @ dagger(u)
    if op.shape == (d * d, d * d):
        s = superop_sandwich(u, dagger(u))
        return s @ op @ dagger(s)
    raise DimensionMismatch(f"cannot conjugate shape {op.shape} by a {d}x{d} unitary")


# --- monodromy -------------------------------------------------------------

def fold_quasi_energy(eps, drive_frequency):
    """Map ``eps`` into the zone ``(-Omega/2, Omega/2]``."""
    half = 0.5 * drive_frequency
    return half - np.mod(half - np.asarray(eps, dtype=float), drive_frequency)


@dataclass(frozen=True)
class Monodromy:
    """Eigen-structure of the one-period propagator.

    ``basis`` is a unitary whose columns are Floquet states; column ``a``
    belongs to level ``level_of[a]`` with quasi-energy
    ``quasi_energies[level_of[a]]``. Levels are ascending.
    """

    period: float
    propagator: np.ndarray
    basis: np.ndarray
    level_of: np.ndarray
    quasi_energies: np.ndarray
    branch: str

    @property
    def drive_frequency(self):
        return 2 * math.pi / self.period

    @property
    def projectors(self):
        out = []
        for k in range(len(self.quasi_energies)):
            z = self.basis[:, self.level_of == k]
            out.append(z @ dagger(z))
        return tuple(out)

    @property
    def averaged_hamiltonian(self):
        eps = self.quasi_energies[self.level_of]
        return (self.basis * eps) @ dagger(self.basis)

    @property
    def column_energies(self):
        return self.quasi_energies[self.level_of]


def _mean_energy_operator(h, steps_per_period, method, samples=256):
    """``(1/tau) int_0^tau U^dag H U dt`` (rectangle rule on a periodic grid)."""
    if h.phase is not None:
        p0 = np.asarray(h.phase(0.0), dtype=float)
        return np.diag((np.asarray(h.phase(h.period), dtype=float) - p0) / h.period).astype(complex)
    ts = (np.arange(samples) + 0.5) * h.period / samples
    us = propagate_grid(h, ts, steps_per_period, method)
    return sum(dagger(u) @ h(t) @ u for t, u in zip(ts, us)) / samples


def _runs(sorted_values, tol):
    groups = [[0]]
    for i in range(1, len(sorted_values)):
        if sorted_values[i] - sorted_values[i - 1] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def monodromy(h, steps_per_period=1024, branch="folded", degeneracy_tol=DEGENERACY_TOL,
              method="magnus4"):
    """Quasi-energies and averaged Hamiltonian of a periodic Hamiltonian.

    ``branch="folded"`` places every quasi-energy in ``(-Omega/2, Omega/2]``.
    ``branch="mean_energy"`` shifts each level by multiples of ``Omega`` to
    the branch nearest its period-averaged energy and resolves degenerate
    monodromy eigenspaces with the averaged-energy operator; for an undriven
    or diagonally driven system this reproduces the bare spectrum.
    Degenerate quasi-energies (within ``degeneracy_tol``) are merged into one
    level and reported with :class:`QuasiEnergyDegeneracyWarning`.
    """
    if branch not in ("folded", "mean_energy"):
        raise ValueError(f"unknown branch {branch!r}")
    tau, om = h.period, h.drive_frequency
    u_tau = propagate(h, tau, steps_per_period, method)
    t, z = scipy.linalg.schur(u_tau, output="complex")
    eps = fold_quasi_energy(-np.angle(np.diag(t)) / tau, om)

    # circular clustering of folded values
    order = np.argsort(eps)
    z, eps = z[:, order], eps[order]
    groups = _runs(eps, degeneracy_tol)
    if len(groups) > 1 and eps[0] + om - eps[-1] <= degeneracy_tol:
        eps[groups[0]] += om
        groups[-1] += groups.pop(0)

    if branch == "mean_energy":
        m = _mean_energy_operator(h, steps_per_period, method)
        for g in groups:
            if len(g) > 1:
                zg = z[:, g]
                _, v = np.linalg.eigh(dagger(zg) @ m @ zg)
                z[:, g] = zg @ v
        energies = np.real(np.einsum("ia,ij,ja->a", z.conj(), m, z))
        eps = eps + om * np.round((energies - eps) / om)
        order = np.argsort(eps, kind="stable")
        z, eps = z[:, order], eps[order]
        groups = _runs(eps, degeneracy_tol)

    level_of = np.empty(len(eps), dtype=int)
    levels = []
    for k, g in enumerate(sorted(groups, key=lambda g: np.mean(eps[g]))):
        level_of[g] = k
        levels.append(float(np.mean(eps[g])))
    levels = np.array(levels)
    if branch == "folded":
        levels = fold_quasi_energy(levels, om)
        order = np.argsort(levels, kind="stable")
        remap = np.empty_like(order)
        remap[order] = np.arange(len(order))
        level_of, levels = remap[level_of], levels[order]
    if any(len(g) > 1 for g in groups):
        warnings.warn(f"degenerate quasi-energies within {degeneracy_tol:g}; "
                      "eigenprojectors merged", QuasiEnergyDegeneracyWarning, stacklevel=2)
    return Monodromy(tau, u_tau, z, level_of, levels, branch)


# --- harmonic decomposition ------------------------------------------------

def default_grid(q_max):
    return max(64, 1 << math.ceil(math.log2(4 * q_max + 4)))


def offgrid_times(period, count=37):
    """Deterministic sample times in ``[0, 3 period)`` avoiding any dyadic grid."""
    j = np.arange(count)
    return period * (np.mod((j + 1) * GOLDEN, 1.0) + j % 3)


@dataclass(frozen=True)
class FloquetDecomposition:
    """Harmonic family ``S_{w q}`` of one coupling operator.

    ``coefficients[q + Q]`` holds, in the Floquet basis, the periodic
    amplitudes of every block; :meth:`harmonics` assembles them into
    operators keyed by ``(w, q)``.
    """

    monodromy: Monodromy
    coupling: np.ndarray
    truncation: int
    coefficients: np.ndarray
    reconstruction_error: float

    @property
    def period(self):
        return self.monodromy.period

    @property
    def drive_frequency(self):
        return self.monodromy.drive_frequency

    @property
    def quasi_energies(self):
        return self.monodromy.quasi_energies

    @property
    def averaged_hamiltonian(self):
        return self.monodromy.averaged_hamiltonian

    @property
    def quasi_bohr_frequencies(self):
        return symmetric_frequency_set(self.quasi_energies)

    def _pair_frequencies(self):
        e = self.monodromy.column_energies
        return e[None, :] - e[:, None]

    def harmonics(self, floor=COMPONENT_FLOOR):
        """``{(w, q): S_wq}`` with ``||S_wq||_F >= floor``, sorted by ``(w, q)``."""
        z = self.monodromy.basis
        freqs = self.quasi_bohr_frequencies
        pair = self._pair_frequencies()
        keyed = np.vectorize(lambda x: nearest_frequency(freqs, x))(pair)
        out = {}
        big_q = self.truncation
        for w in np.unique(keyed):
            mask = keyed == w
            for iq in range(2 * big_q + 1):
                block = np.where(mask, self.coefficients[iq], 0)
                if np.linalg.norm(block) >= floor:
                    out[(float(w), iq - big_q)] = z @ block @ dagger(z)
        return dict(sorted(out.items()))

    def reconstruct(self, t):
        """``sum_{w,q} exp(-i(w + q Omega) t) S_wq`` at time ``t``."""
        big_q = self.truncation
        qs = np.arange(-big_q, big_q + 1)
        periodic = np.tensordot(np.exp(-1j * qs * self.drive_frequency * t), self.coefficients, 1)
        b = np.exp(-1j * self._pair_frequencies() * t) * periodic
        z = self.monodromy.basis
        return z @ b @ dagger(z)

    def truncated(self, q_max):
        if q_max > self.truncation:
            raise ValueError(f"cannot raise truncation from {self.truncation} to {q_max}")
        lo = self.truncation - q_max
        return FloquetDecomposition(self.monodromy, self.coupling, q_max,
                                    self.coefficients[lo:lo + 2 * q_max + 1],
                                    self.reconstruction_error)


def harmonic_decompose(s, h, q_max, grid_n=None, steps_per_period=1024, mono=None,
                       branch="folded", tolerance=1e-6, strict=True, method="magnus4"):
    """Expand ``U(t)^dag S U(t)`` into quasi-Bohr sectors and drive harmonics.

    ``U^dag S U`` is sampled on ``grid_n`` equispaced points of one period,
    each Floquet-basis block is stripped of its quasi-Bohr phase, and the
    periodic remainder is Fourier transformed. The decomposition is then
    checked against directly propagated values at 37 off-grid times; if the
    worst Frobenius deviation exceeds ``tolerance`` a :class:`TruncationError`
    is raised (``strict=False`` records the error instead).
    """
    s = as_hermitian(s, "coupling")
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    grid_n = grid_n or default_grid(q_max)
    if grid_n < 4 * q_max + 4:
        raise ValueError(f"grid_n={grid_n} too small for Q={q_max}; need >= {4 * q_max + 4}")
    if s.shape[0] != h.dim:
        raise DimensionMismatch(f"coupling dim {s.shape[0]} != Hamiltonian dim {h.dim}")
    mono = mono or monodromy(h, steps_per_period, branch, method=method)
    tau, z = h.period, mono.basis
    ts = np.arange(grid_n) * tau / grid_n
    us = propagate_grid(h, ts, steps_per_period, method)
    w = np.einsum("nji,jk,nkl->nil", us.conj(), s, us)
    b = np.einsum("ji,njk,kl->nil", z.conj(), w, z)
    e = mono.column_energies
    periodic = b * np.exp(1j * (e[None, None, :] - e[None, :, None]) * ts[:, None, None])
    spectrum = np.fft.ifft(periodic, axis=0)
    idx = np.arange(-q_max, q_max + 1) % grid_n
    coeffs = spectrum[idx]

    fd = FloquetDecomposition(mono, s, q_max, coeffs, 0.0)
    err = 0.0
    for t in offgrid_times(tau):
        u = propagate(h, t, steps_per_period, method)
        err = max(err, float(np.linalg.norm(dagger(u) @ s @ u - fd.reconstruct(t))))
    if strict and err > tolerance:
        raise TruncationError(f"reconstruction error {err:.3e} exceeds {tolerance:g} at Q={q_max}; "
                              f"increase Q (try Q={4 * q_max})")
    return FloquetDecomposition(mono, s, q_max, coeffs, err)
