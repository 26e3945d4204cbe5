"""Dense operator and superoperator toolkit.

All operators are plain ``numpy`` complex arrays. Superoperators act on
column-stacked density matrices, ``vec(rho) = rho.reshape(-1, order="F")``,
so that ``vec(A @ rho @ B) == kron(B.T, A) @ vec(rho)``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
import scipy.linalg

from .errors import DimensionMismatch, InvariantViolation

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
DEGENERACY_TOL = 1e-9
COMPONENT_FLOOR = 1e-14

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# basis order (excited, ground); sigma_z = +1 on the excited state
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def _square(a, name):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    return a


def as_hermitian(a, name="operator", tol=HERMITIAN_TOL):
    """Validate ``a`` as a Hermitian matrix and return it as a complex array."""
    a = _square(a, name)
    err = np.max(np.abs(a - dagger(a)))
    if err > tol:
        raise InvariantViolation(f"{name} is not Hermitian (max |A - A^dag| = {err:.3e})")
    return a


def as_unitary(u, name="propagator", tol=UNITARY_TOL):
    u = _square(u, name)
    err = np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0]))
    if err > tol:
        raise InvariantViolation(f"{name} is not unitary (||U^dag U - I||_F = {err:.3e})")
    return u


def as_density_matrix(rho, name="state", tol=HERMITIAN_TOL, positivity_tol=1e-10):
    rho = as_hermitian(rho, name, tol)
    tr = np.trace(rho)
    if abs(tr - 1) > tol:
        raise InvariantViolation(f"{name} has trace {tr.real:.15g}, expected 1")
    lam = np.linalg.eigvalsh(rho).min()
    if lam < -positivity_tol:
        raise InvariantViolation(f"{name} has negative eigenvalue {lam:.3e}")
    return rho


def commutator(a, b):
    return a @ b - b @ a


def expm_hermitian(h, t=1.0):
    """``exp(-i h t)`` for Hermitian ``h`` via eigendecomposition (unitary to roundoff)."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ dagger(v)


def gibbs_state(h, temperature):
    """``exp(-h/T)/Z``, evaluated with the ground energy shifted out for stability."""
    w, v = np.linalg.eigh(as_hermitian(h, "hamiltonian"))
    p = np.exp(-(w - w.min()) / temperature)
    p /= p.sum()
    return (v * p) @ dagger(v)


def log_gibbs_state(h, temperature):
    """``ln(exp(-h/T)/Z)`` in closed form, exact even where the populations underflow."""
    w, v = np.linalg.eigh(as_hermitian(h, "hamiltonian"))
    x = -w / temperature
    return (v * (x - logsumexp(x))) @ dagger(v)


def von_neumann_entropy(rho):
    p = np.linalg.eigvalsh(rho)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def logm_hermitian(rho, floor=1e-300):
    """Matrix logarithm of a positive Hermitian matrix, eigenvalues floored at ``floor``."""
    w, v = np.linalg.eigh(rho)
    return (v * np.log(np.maximum(w, floor))) @ dagger(v)


def trace_distance(a, b):
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Merged eigen-structure of a Hermitian operator.

    ``eigenvalues`` are ascending and pairwise separated by more than the
    merging tolerance; ``projectors[k]`` projects onto the eigenspace of
    ``eigenvalues[k]``. ``bohr_frequencies`` is sorted, symmetric under
    negation and contains 0.
    """

    eigenvalues: np.ndarray
    projectors: tuple
    bohr_frequencies: np.ndarray
    tolerance: float = DEGENERACY_TOL

    @property
    def dim(self):
        return self.projectors[0].shape[0]


def _cluster(values, tol):
    """Group sorted ``values`` into runs whose consecutive gaps are <= tol."""
    groups = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def symmetric_frequency_set(levels, tol=DEGENERACY_TOL):
    """Sorted set of pairwise differences of ``levels``, merged within ``tol``.

    Built from the positive differences and mirrored, so closure under
    negation is exact.
    """
    levels = np.asarray(levels, dtype=float)
    diffs = np.sort([a - b for a in levels for b in levels if a - b > tol])
    positive = [float(np.mean(diffs[g])) for g in _cluster(diffs, tol)] if len(diffs) else []
    positive = np.array(positive)
    return np.concatenate([-positive[::-1], [0.0], positive])


def nearest_frequency(freqs, value, tol=DEGENERACY_TOL):
    i = int(np.argmin(np.abs(freqs - value)))
    if abs(freqs[i] - value) > 10 * tol:
        raise ValueError(f"frequency {value} not found in set")
    return float(freqs[i])


def spectral_decompose(h, degeneracy_tol=DEGENERACY_TOL):
    if degeneracy_tol <= 0:
        raise ValueError("degeneracy_tol must be positive")
    h = as_hermitian(h, "hamiltonian")
    w, v = np.linalg.eigh(h)
    eigenvalues, projectors = [], []
    for g in _cluster(w, degeneracy_tol):
        eigenvalues.append(float(np.mean(w[g])))
        vg = v[:, g]
        projectors.append(vg @ dagger(vg))
    eigenvalues = np.array(eigenvalues)
    return SpectralDecomposition(
        eigenvalues=eigenvalues,
        projectors=tuple(projectors),
        bohr_frequencies=symmetric_frequency_set(eigenvalues, degeneracy_tol),
        tolerance=degeneracy_tol,
    )


def bohr_components(s, dec):
    """Split ``s`` into Bohr components ``S_w`` of the decomposed Hamiltonian.

    ``S_w = sum_{e' - e = w} P_e S P_e'``, so components with ``w > 0`` lower
    the energy by ``w`` and ``exp(iHt) S exp(-iHt) = sum_w exp(-iwt) S_w``.
    Components with Frobenius norm below 1e-14 are dropped. Returns a dict
    ``{w: S_w}`` ordered by ``w``.
    """
    s = as_hermitian(s, "coupling")
    if s.shape[0] != dec.dim:
        raise DimensionMismatch(f"coupling has dim {s.shape[0]}, Hamiltonian has dim {dec.dim}")
    out = {}
    for k, pk in enumerate(dec.projectors):
        for l, pl in enumerate(dec.projectors):
            w = nearest_frequency(dec.bohr_frequencies, dec.eigenvalues[l] - dec.eigenvalues[k],
                                  dec.tolerance)
            block = pk @ s @ pl
            out[w] = out.get(w, 0) + block
    return {w: out[w] for w in sorted(out) if np.linalg.norm(out[w]) >= COMPONENT_FLOOR}


def vec(rho):
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim=None):
    dim = dim or int(round(np.sqrt(v.shape[0])))
    return np.asarray(v).reshape(dim, dim, order="F")


def superop_sandwich(a, b):
    """Matrix ``M`` with ``M @ vec(rho) == vec(a @ rho @ b)``."""
    a, b = _square(a, "left factor"), _square(b, "right factor")
    if a.shape != b.shape:
        raise DimensionMismatch(f"factor shapes differ: {a.shape} vs {b.shape}")
    return np.kron(b.T, a)


def apply_superop(m, rho):
    rho = np.asarray(rho)
    return unvec(m @ vec(rho), rho.shape[0])


def hamiltonian_superop(h):
    """Superoperator of ``rho -> -i[h, rho]``."""
    eye = np.eye(h.shape[0])
    return -1j * (superop_sandwich(h, eye) - superop_sandwich(eye, h))


def commutator_superop(h):
    """Superoperator of ``rho -> [h, rho]`` (the adjoint action ad_h)."""
    eye = np.eye(h.shape[0])
    return superop_sandwich(h, eye) - superop_sandwich(eye, h)


def dissipator(jump, rate=1.0):
    """Superoperator of ``rate * (A rho A^dag - {A^dag A, rho}/2)``."""
    a = np.asarray(jump, dtype=complex)
    eye = np.eye(a.shape[0])
    ada = dagger(a) @ a
    return rate * (superop_sandwich(a, dagger(a))
                   - 0.5 * superop_sandwich(ada, eye)
                   - 0.5 * superop_sandwich(eye, ada))


def trace_defect(generator):
    """Norm of ``vec(I)^dag @ L``; zero for a trace-annihilating generator."""
    dim = int(round(np.sqrt(generator.shape[0])))
    return float(np.linalg.norm(vec(np.eye(dim)).conj() @ generator))


@dataclass(frozen=True)
class ChoiVerdict:
    cp_ok: bool
    min_eigenvalue: float


def choi_matrix(channel):
    """Choi matrix ``sum_ij E_ij (x) channel(E_ij)`` of a column-stacked superoperator."""
    dim = int(round(np.sqrt(channel.shape[0])))
    choi = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            choi += np.kron(e, apply_superop(channel, e))
    return choi


def choi_positivity_check(generator, dt=1e-3, tol=1e-8):
    """Complete-positivity diagnostic for the short-time map ``exp(L dt)``."""
    channel = scipy.linalg.expm(np.asarray(generator) * dt)
    choi = choi_matrix(channel)
    lam = float(np.linalg.eigvalsh(0.5 * (choi + dagger(choi))).min())
    return ChoiVerdict(cp_ok=lam >= -tol, min_eigenvalue=lam)
