"""Evolution, stationary states and limit cycles of the master equation.

Propagation is done in the interaction picture, where the generator is
constant and ``rho_I(t) = exp(L t) rho(0)`` is exact. The Schroedinger-frame
state is ``U(t) rho_I(t) U(t)^dag``.
"""
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NonUniqueSteadyState, NumericalFailure
from .floquet import PeriodicHamiltonian, propagate_grid
from .operators import as_density_matrix, dagger, expm_hermitian, unvec, vec

STATE_TOL = 1e-8


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    frame: str

    def __len__(self):
        return len(self.times)

    def populations(self):
        return np.real(np.einsum("nii->ni", self.states))


def _generator(obj):
    return getattr(obj, "total", obj)


def check_state(rho, tol=STATE_TOL, where="state"):
    herm = np.max(np.abs(rho - dagger(rho)))
    tr = abs(np.trace(rho) - 1)
    lam = np.linalg.eigvalsh(0.5 * (rho + dagger(rho))).min()
    if herm > tol or tr > tol or lam < -tol:
        raise NumericalFailure(f"{where}: hermiticity {herm:.2e}, trace error {tr:.2e}, "
                               f"min eigenvalue {lam:.2e}")


def frame_propagators(hamiltonian, times, steps_per_period=1024):
    """``U(t)`` on ``times`` for a constant matrix or a :class:`PeriodicHamiltonian`."""
    if isinstance(hamiltonian, PeriodicHamiltonian):
        return propagate_grid(hamiltonian, times, steps_per_period)
    h = np.asarray(hamiltonian, dtype=complex)
    return np.stack([expm_hermitian(h, t) for t in times])


def evolve(bundle, rho0, t_end, dt, hamiltonian=None, steps_per_period=1024):
    """Sample ``rho(t)`` on ``[0, t_end]`` with spacing at most ``dt``.

    Without ``hamiltonian`` the trajectory stays in the interaction picture;
    with one (constant matrix or periodic Hamiltonian) each state is rotated
    into the Schroedinger frame.
    """
    rho0 = as_density_matrix(rho0, "initial state")
    if dt <= 0 or t_end < 0:
        raise ValueError("need dt > 0 and t_end >= 0")
    n = max(1, math.ceil(t_end / dt - 1e-9))
    times = np.linspace(0.0, t_end, n + 1)
    step = scipy.linalg.expm(_generator(bundle) * (t_end / n))
    v = vec(rho0)
    d = rho0.shape[0]
    states = np.empty((n + 1, d, d), dtype=complex)
    for i in range(n + 1):
        states[i] = unvec(v, d)
        v = step @ v
    frame = "interaction"
    if hamiltonian is not None:
        us = frame_propagators(hamiltonian, times, steps_per_period)
        states = np.einsum("nij,njk,nlk->nil", us, states, us.conj())
        frame = "schroedinger"
    for t, rho in zip(times, states):
        check_state(rho, where=f"t={t:.6g}")
    return Trajectory(times, states, frame)


def steady_state(bundle, residual_tol=1e-9, degeneracy_ratio=1e-8, clip=1e-10):
    """Normalised null vector of the generator.

    The null direction is the right-singular vector of the smallest singular
    value. If the second-smallest singular value is below
    ``degeneracy_ratio`` times the largest, the stationary manifold is not
    one-dimensional and :class:`NonUniqueSteadyState` is raised.
    """
    gen = _generator(bundle)
    _, s, vh = np.linalg.svd(gen)
    small = int(np.sum(s <= degeneracy_ratio * s[0]))
    if small > 1:
        raise NonUniqueSteadyState(small)
    d = int(round(math.sqrt(gen.shape[0])))
    rho = unvec(vh[-1].conj(), d)
    tr = np.trace(rho)
    if abs(tr) < 1e-12:
        raise NumericalFailure("null vector is traceless")
    rho = rho / tr
    rho = 0.5 * (rho + dagger(rho))
    w, v = np.linalg.eigh(rho)
    if w.min() < -clip:
        raise NumericalFailure(f"stationary state has eigenvalue {w.min():.3e} below -{clip:g}")
    w = np.clip(w, 0, None)
    rho = (v * (w / w.sum())) @ dagger(v)
    res = np.linalg.norm(gen @ vec(rho))
    if res > residual_tol:
        raise NumericalFailure(f"stationary residual {res:.3e} exceeds {residual_tol:g}")
    return rho


def limit_cycle(bundle, rho_ss, hamiltonian, grid_n=64, steps_per_period=1024):
    """Periodic steady state ``U(t) rho_ss U(t)^dag`` on ``grid_n + 1`` points of one period."""
    res = np.linalg.norm(_generator(bundle) @ vec(rho_ss))
    if res > 1e-9:
        raise ValueError(f"state is not stationary (||L rho|| = {res:.3e})")
    period = hamiltonian.period
    times = np.linspace(0.0, period, grid_n + 1)
    us = frame_propagators(hamiltonian, times, steps_per_period)
    states = np.einsum("nij,jk,nlk->nil", us, rho_ss, us.conj())
    return Trajectory(times, states, "schroedinger")
