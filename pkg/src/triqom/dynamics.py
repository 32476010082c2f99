"""Closed-system dynamics of the dispersive qubit-cavity-mechanics model.

In mechanical-frequency units the Hamiltonian is
    H = b'b - (g a'a + lam sz) (b + b')
which conserves both the photon number and sz.  The propagator factorizes per
joint eigenvalue s = g*n + lam*sigma into a branch phase exp(i s^2 (t - sin t)),
a mechanical displacement by s * eta(t) with eta(t) = 1 - exp(-i t), and the
free rotation exp(-i t b'b).  Everything here evaluates those factors directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse, special

from .core import (
    CompositeSpace,
    DensityMatrix,
    ModelParams,
    PureState,
    Space,
    coherent_amplitudes,
    coherent_dim,
    destroy,
    embed,
    mechanics_dim,
    number_op,
    sigma_z,
    thermal_density,
)

__all__ = [
    "eta",
    "branch_shifts",
    "hamiltonian",
    "evolve_unitary",
    "evolve_fock_superposition",
    "coherent_amplitude_coeff",
    "evolve_coherent",
    "qubit_cavity_at_cycle",
    "evolve_thermal",
    "Trajectory",
    "default_composite_space",
]


def eta(t):
    """Mechanical loop factor 1 - exp(-i t); zero at every full period."""
    return 1.0 - np.exp(-1j * np.asarray(t, dtype=float))


def branch_shifts(params: ModelParams, n_cav: int) -> np.ndarray:
    """Joint pull s = g*n + lam*sigma for branches (q, n), flattened q-major.

    Spin-up rows (q = 0) come first with sigma = +1, then spin-down.
    """
    n = np.arange(n_cav, dtype=float)
    return np.concatenate([params.g * n + params.lam, params.g * n - params.lam])


def hamiltonian(params: ModelParams, cspace: CompositeSpace, *, as_sparse: bool = False):
    """Full composite-space Hamiltonian matrix (dense ndarray or CSR)."""
    nc, nm = cspace.n_cav, cspace.n_mech
    if as_sparse:
        b = sparse.diags(np.sqrt(np.arange(1, nm)), 1, format="csr").astype(complex)
        num_m = sparse.diags(np.arange(nm, dtype=float), format="csr").astype(complex)
        num_c = sparse.diags(np.arange(nc, dtype=float), format="csr").astype(complex)
        sz = sparse.diags([1.0, -1.0], format="csr").astype(complex)
        eye_q = sparse.identity(2, format="csr")
        eye_c = sparse.identity(nc, format="csr")
        eye_m = sparse.identity(nm, format="csr")
        pull = params.g * sparse.kron(eye_q, sparse.kron(num_c, eye_m)) + \
            params.lam * sparse.kron(sz, sparse.kron(eye_c, eye_m))
        pos = sparse.kron(eye_q, sparse.kron(eye_c, b + b.conj().T))
        h = sparse.kron(eye_q, sparse.kron(eye_c, num_m)) - (pull @ pos)
        return h.tocsr()
    b = destroy(nm)
    pull = params.g * embed(number_op(nc), cspace, "cavity") + \
        params.lam * embed(sigma_z(), cspace, "qubit")
    return embed(number_op(nm), cspace, "mech") - pull @ embed(b + b.conj().T, cspace, "mech")


def _displacement_factors(t: float, n_mech: int):
    """Eigen-decomposition of the displacement generator at time t.

    Returns (w, V) with exp(s (eta b' - eta* b)) = V diag(exp(i s w)) V'.
    """
    e = complex(eta(t))
    if n_mech == 1 or e == 0:
        return None
    sq = np.sqrt(np.arange(1, n_mech, dtype=float))
    m = np.zeros((n_mech, n_mech), dtype=complex)
    sub = -1j * e * sq
    m[np.arange(1, n_mech), np.arange(n_mech - 1)] = sub
    m[np.arange(n_mech - 1), np.arange(1, n_mech)] = sub.conj()
    w, v = np.linalg.eigh(m)
    return w, v


def evolve_unitary(state: PureState, t: float, params: ModelParams) -> PureState:
    """Apply the exact propagator at time t to a full tripartite pure state."""
    if state.space.labels != ("qubit", "cavity", "mech"):
        raise ValueError("evolve_unitary needs the full qubit-cavity-mech space")
    dims = state.space.dims
    nc, nm = dims[1], dims[2]
    x = state.reshaped().reshape(2 * nc, nm).copy()
    x *= np.exp(-1j * t * np.arange(nm))[None, :]
    s = branch_shifts(params, nc)
    fac = _displacement_factors(t, nm)
    if fac is not None:
        w, v = fac
        z = x @ v.conj()
        z *= np.exp(1j * np.outer(s, w))
        x = z @ v.T
    tau = t - math.sin(t)
    x *= np.exp(1j * s * s * tau)[:, None]
    return PureState(state.space, x.reshape(-1), state.discarded_weight)


def _coherent_rows(phis: np.ndarray, dim: int) -> np.ndarray:
    """Stack of truncated coherent vectors for a batch of amplitudes."""
    phis = np.asarray(phis, dtype=complex).reshape(-1)
    m = np.arange(dim)
    out = np.zeros((phis.size, dim), dtype=complex)
    nz = phis != 0
    if np.any(nz):
        a = phis[nz]
        logmag = (
            np.outer(np.log(np.abs(a)), m)
            - 0.5 * special.gammaln(m + 1.0)[None, :]
            - 0.5 * (np.abs(a) ** 2)[:, None]
        )
        out[nz] = np.exp(logmag + 1j * np.outer(np.angle(a), m))
    out[~nz, 0] = 1.0
    return out


def _branch_state(qc_weights: np.ndarray, t: float, params: ModelParams,
                  cspace: CompositeSpace) -> PureState:
    """Assemble sum_k w_k |q_k, n_k> (x) exp(i theta_k) |beta e^{-it} + s_k eta>.

    qc_weights has shape (2, n_cav) and already carries the initial qubit and
    cavity amplitudes; this attaches branch phases and mechanics factors.
    """
    nc, nm = cspace.n_cav, cspace.n_mech
    s = branch_shifts(params, nc)
    e = complex(eta(t))
    tau = t - math.sin(t)
    drive = (e * params.beta).imag
    phases = np.exp(1j * (s * s * tau + s * drive))
    phis = params.beta * np.exp(-1j * t) + s * e
    rows = _coherent_rows(phis, nm)
    amp = (qc_weights.reshape(-1) * phases)[:, None] * rows
    vec = amp.reshape(-1)
    captured = float(np.vdot(vec, vec).real)
    if captured <= 0:
        raise ValueError("state lost entirely to truncation")
    vec = vec / math.sqrt(captured)
    return PureState(cspace.space, vec, discarded_weight=max(0.0, 1.0 - captured))


def evolve_fock_superposition(t: float, params: ModelParams,
                              cspace: CompositeSpace | None = None) -> PureState:
    """Closed-form state for qubit (up+down)/sqrt2, cavity (|0>-|1>)/sqrt2, mech |beta>.

    Four branches, one per joint (spin, photon-number) label, each a displaced
    coherent state of the oscillator with its own accumulated phase.
    """
    if cspace is None:
        cspace = default_composite_space(params, family="fock")
    if cspace.n_cav < 2:
        raise ValueError("cavity truncation must be >= 2 for the |0>,|1> superposition")
    w = np.zeros((2, cspace.n_cav), dtype=complex)
    w[:, 0] = 0.5
    w[:, 1] = -0.5
    return _branch_state(w, t, params, cspace)


def coherent_amplitude_coeff(n, sign: int, t: float, params: ModelParams):
    """Branch coefficient C_n(sign) for the coherent-cavity closed form.

    C = alpha^n / sqrt(2 n!) * exp(-|alpha|^2/2)
        * exp(i s^2 (t - sin t)) * exp(i s Im(eta beta)),  s = g n + sign lam.
    Vectorized over n.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    n = np.asarray(n)
    alpha = params.alpha
    s = params.g * n + sign * params.lam
    tau = t - math.sin(t)
    drive = (complex(eta(t)) * params.beta).imag
    if alpha == 0:
        mag = np.where(n == 0, 1.0, 0.0) / math.sqrt(2.0)
    else:
        logmag = n * math.log(abs(alpha)) - 0.5 * special.gammaln(n + 1.0) \
            - 0.5 * abs(alpha) ** 2
        mag = np.exp(logmag + 1j * n * np.angle(alpha)) / math.sqrt(2.0)
    return mag * np.exp(1j * (s * s * tau + s * drive))


def evolve_coherent(t: float, params: ModelParams,
                    cspace: CompositeSpace | None = None) -> PureState:
    """Closed-form state for qubit (up+down)/sqrt2, cavity |alpha>, mech |beta>."""
    if cspace is None:
        cspace = default_composite_space(params, family="coherent")
    w = np.tile(coherent_amplitudes(params.alpha, cspace.n_cav) / math.sqrt(2.0), (2, 1))
    return _branch_state(w, t, params, cspace)


def qubit_cavity_at_cycle(l: int, params: ModelParams,
                          n_cav: int | None = None) -> PureState:
    """Pure qubit-cavity state after l full mechanical periods (t = 2 pi l).

    The oscillator factors out exactly; each photon branch keeps the phase
    exp(i (g n +/- lam)^2 2 pi l) on its spin component.
    """
    if l < 0 or int(l) != l:
        raise ValueError("cycle count l must be a nonnegative integer")
    if n_cav is None:
        n_cav = coherent_dim(params.alpha)
    n = np.arange(n_cav)
    tau = 2.0 * math.pi * l
    c = coherent_amplitudes(params.alpha, n_cav) / math.sqrt(2.0)
    s_up = params.g * n + params.lam
    s_dn = params.g * n - params.lam
    amp = np.stack([c * np.exp(1j * s_up * s_up * tau),
                    c * np.exp(1j * s_dn * s_dn * tau)])
    vec = amp.reshape(-1)
    nrm = np.linalg.norm(vec)
    space = Space(("qubit", "cavity"), (2, n_cav))
    return PureState(space, vec / nrm, discarded_weight=max(0.0, 1.0 - float(nrm) ** 2))


def evolve_thermal(t: float, params: ModelParams,
                   cspace: CompositeSpace | None = None) -> DensityMatrix:
    """Full tripartite state at time t for thermal initial mechanics.

    Initial state: qubit (up+down)/sqrt2, cavity |alpha>, mechanics thermal at
    nbar_mech.  Computed by conjugating the product density matrix with the
    exact propagator, block by block over the conserved (spin, photon) labels.
    """
    if cspace is None:
        cspace = default_composite_space(params, family="thermal")
    nc, nm = cspace.n_cav, cspace.n_mech
    cav = coherent_amplitudes(params.alpha, nc)
    cav_tail = float(special.gammainc(nc, abs(params.alpha) ** 2))
    psi_qc = np.concatenate([cav, cav]) / math.sqrt(2.0)
    psi_qc /= np.linalg.norm(psi_qc)
    th = thermal_density(params.nbar_mech, nm)
    p = np.diag(th.matrix).real.copy()

    s = branch_shifts(params, nc)
    tau = t - math.sin(t)
    phases = np.exp(1j * s * s * tau)
    fac = _displacement_factors(t, nm)
    if fac is None:
        dmats = None
    else:
        w, v = fac
        vh = v.conj().T
        dmats = np.empty((2 * nc, nm, nm), dtype=complex)
        for k in range(2 * nc):
            dmats[k] = (v * np.exp(1j * s[k] * w)[None, :]) @ vh

    dim = 2 * nc * nm
    rho = np.empty((dim, dim), dtype=complex)
    blk = rho.reshape(2 * nc, nm, 2 * nc, nm)
    for k in range(2 * nc):
        ak = (dmats[k] * p[None, :]) if dmats is not None else np.diag(p).astype(complex)
        for j in range(k, 2 * nc):
            c = psi_qc[k] * np.conj(psi_qc[j]) * phases[k] * np.conj(phases[j])
            if dmats is not None:
                block = c * (ak @ dmats[j].conj().T)
            else:
                block = c * ak
            blk[k, :, j, :] = block
            if j != k:
                blk[j, :, k, :] = block.conj().T
    w_total = 1.0 - (1.0 - cav_tail) * (1.0 - th.discarded_weight)
    return DensityMatrix(cspace.space, rho, discarded_weight=w_total)


@dataclass(frozen=True)
class Trajectory:
    """Sampled evolution: times and the state at each time."""

    times: tuple[float, ...]
    states: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("times must be strictly increasing")
        if len(times) != len(self.states):
            raise ValueError("times and states length mismatch")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", tuple(self.states))

    def __len__(self) -> int:
        return len(self.times)


def default_composite_space(params: ModelParams, family: str = "coherent",
                            ceiling: int = 600) -> CompositeSpace:
    """Truncation defaults: Poisson tail rule for the cavity, worst-case
    displacement reach (plus any thermal floor) for the mechanics."""
    if family == "fock":
        n_cav = 2
    elif family in ("coherent", "thermal"):
        n_cav = coherent_dim(params.alpha)
    else:
        raise ValueError(f"unknown family {family!r}")
    return CompositeSpace(n_cav, mechanics_dim(params, n_cav, ceiling=ceiling))
