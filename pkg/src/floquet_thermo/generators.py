"""Davies-type generators assembled channel by channel.

A channel couples one bath to one harmonic ``(w, q)`` of one coupling
operator. It exchanges the energy quantum ``nu = w + q Omega``: the jump
``S_wq`` fires at ``G(nu)`` and its adjoint at ``G(-nu) = exp(-nu/T) G(nu)``.
Channels are kept separate because the heat ledger is defined per channel.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, UnsupportedChannelError
from .operators import (
    DEGENERACY_TOL, apply_superop, as_hermitian, bohr_components, dagger,
    dissipator, gibbs_state, log_gibbs_state, hamiltonian_superop, spectral_decompose,
)

RATE_FLOOR = 1e-14


@dataclass(frozen=True)
class ChannelGenerator:
    bath: str
    q: int
    omega: float
    jump: np.ndarray = field(repr=False)
    rate_down: float
    rate_up: float
    temperature: float
    drive_frequency: float
    superop: np.ndarray = field(repr=False)
    local_gibbs: Optional[np.ndarray] = field(default=None, repr=False)
    log_local_gibbs: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def exchange(self):
        """Energy quantum ``w + q Omega`` handed to the bath per downward jump."""
        return self.omega + self.q * self.drive_frequency

    @property
    def effective_rates(self):
        """Rates weighted by ``||S_wq||_F^2``; comparable across jump normalisations."""
        n2 = float(np.linalg.norm(self.jump) ** 2)
        return self.rate_down * n2, self.rate_up * n2

    @property
    def in_ledger(self):
        return self.omega > DEGENERACY_TOL

    def apply(self, rho):
        return apply_superop(self.superop, rho)


@dataclass(frozen=True)
class GeneratorBundle:
    channels: tuple
    total: np.ndarray = field(repr=False)
    hamiltonian: np.ndarray = field(repr=False)
    mode: str
    drive_frequency: float = 0.0

    @property
    def dim(self):
        return self.hamiltonian.shape[0]

    @property
    def baths(self):
        """``{label: temperature}`` in channel order."""
        out = {}
        for ch in self.channels:
            out.setdefault(ch.bath, ch.temperature)
        return out

    def channels_for(self, bath):
        return [ch for ch in self.channels if ch.bath == bath]

    def apply(self, rho):
        return apply_superop(self.total, rho)

    def with_hamiltonian_part(self, h=None):
        """Superoperator of ``-i[h, .] + L`` (``h`` defaults to the averaged Hamiltonian)."""
        return hamiltonian_superop(self.hamiltonian if h is None else h) + self.total


def make_channel(bath, q, omega, jump, drive_frequency, hbar):
    """One channel; ``None`` when both effective rates fall below the floor."""
    nu = omega + q * drive_frequency
    g_down, g_up = bath.rate(nu), bath.rate(-nu)
    n2 = float(np.linalg.norm(jump) ** 2)
    if max(g_down, g_up) * n2 < RATE_FLOOR:
        return None
    if omega <= DEGENERACY_TOL and q == 0:
        # Hermitian S_00: the jump and its adjoint coincide and are counted once
        superop = dissipator(jump, g_down)
        gibbs = log_gibbs = None
    else:
        superop = dissipator(jump, g_down) + dissipator(dagger(jump), g_up)
        gibbs = log_gibbs = None
        if omega > DEGENERACY_TOL:
            gibbs = gibbs_state(hbar * (nu / omega), bath.temperature)
            log_gibbs = log_gibbs_state(hbar * (nu / omega), bath.temperature)
    return ChannelGenerator(bath.label, int(q), float(omega), jump, g_down, g_up,
                            bath.temperature, float(drive_frequency), superop, gibbs, log_gibbs)


def _bundle(channels, hbar, mode, drive_frequency):
    channels = tuple(sorted(channels, key=lambda c: (c.bath, c.q, c.omega)))
    d = hbar.shape[0]
    total = sum((c.superop for c in channels), np.zeros((d * d, d * d), dtype=complex))
    return GeneratorBundle(channels, total, hbar, mode, float(drive_frequency))


def _check_labels(couplings):
    labels = [bath.label for _, bath in couplings]
    if len(set(labels)) != len(labels):
        raise ValueError(f"bath labels must be unique, got {labels}")


def build_static(h, couplings, degeneracy_tol=DEGENERACY_TOL):
    """Thermal generator of a constant Hamiltonian.

    ``couplings`` is a list of ``(S, bath)`` pairs, one Hermitian coupling
    operator per bath.
    """
    h = as_hermitian(h, "hamiltonian")
    _check_labels(couplings)
    dec = spectral_decompose(h, degeneracy_tol)
    channels = []
    for s, bath in couplings:
        s = as_hermitian(s, f"coupling to bath '{bath.label}'")
        if s.shape != h.shape:
            raise DimensionMismatch(f"coupling to bath '{bath.label}' has shape {s.shape}, "
                                    f"Hamiltonian has {h.shape}")
        for w, s_w in bohr_components(s, dec).items():
            if w < -degeneracy_tol:
                continue
            ch = make_channel(bath, 0, max(w, 0.0), s_w, 0.0, h)
            if ch is not None:
                channels.append(ch)
    return _bundle(channels, h, "static", 0.0)


def build_floquet(couplings, q_max=None, allow_zero_frequency=False):
    """Floquet generator from ``(FloquetDecomposition, bath)`` pairs.

    All decompositions must come from the same driven Hamiltonian. Harmonics
    with ``w = 0`` and ``q != 0`` exchange energy without changing the
    quasi-energy, so the local heat current is undefined for them; they raise
    :class:`UnsupportedChannelError` unless ``allow_zero_frequency`` is set,
    in which case they enter the dynamics but not the heat ledger.
    """
    _check_labels(couplings)
    if not couplings:
        raise ValueError("need at least one coupling")
    ref = couplings[0][0]
    hbar = ref.averaged_hamiltonian
    for fd, bath in couplings[1:]:
        if (fd.period != ref.period or
                np.linalg.norm(fd.averaged_hamiltonian - hbar) > 1e-10):
            raise ValueError(f"decomposition for bath '{bath.label}' uses a different drive")
    om = ref.drive_frequency
    channels = []
    for fd, bath in couplings:
        if q_max is not None:
            fd = fd.truncated(q_max)
        for (w, q), s_wq in fd.harmonics().items():
            if w < -DEGENERACY_TOL:
                continue
            if abs(w) <= DEGENERACY_TOL:
                if q < 0:
                    continue  # the adjoint of the (0, -q) harmonic
                if q > 0 and not allow_zero_frequency:
                    raise UnsupportedChannelError(
                        f"bath '{bath.label}': harmonic q={q} at zero quasi-frequency has norm "
                        f"{np.linalg.norm(s_wq):.3e}; local heat current undefined")
                w = 0.0
            ch = make_channel(bath, q, w, s_wq, om, hbar)
            if ch is not None:
                channels.append(ch)
    return _bundle(channels, hbar, "floquet", om)


def schroedinger_rhs(bundle, h_t, rho, u=None):
    """``-i[H(t), rho] + L(t) rho`` with ``L(t) = U L U^dag`` (``u=None``: ``L(t) = L``)."""
    rho = np.asarray(rho, dtype=complex)
    h_t = np.asarray(h_t, dtype=complex)
    if rho.shape != (bundle.dim, bundle.dim) or h_t.shape != rho.shape:
        raise DimensionMismatch("state, Hamiltonian and generator dimensions differ")
    if u is None:
        diss = bundle.apply(rho)
    else:
        diss = u @ bundle.apply(dagger(u) @ rho @ u) @ dagger(u)
    return -1j * (h_t @ rho - rho @ h_t) + diss

