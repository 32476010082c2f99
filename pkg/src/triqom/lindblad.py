"""Dissipative dynamics in the polaron-dressed frame.

The master equation uses the convention L[O]rho = 2 O rho O' - rho O'O - O'O rho,
so a channel rate r decays coherences at 2r; with the cavity channel kappa L[a]
the coherent amplitude <a> decays at exactly kappa.  Dressing shifts the
mechanical jump operators by -g a'a and adds two number-dephasing channels whose
rates carry the 1/ln((1+n_th)/n_th) thermal factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import sparse

from .core import CompositeSpace, DensityMatrix, ModelParams, partial_trace, tensor
from .dynamics import Trajectory, hamiltonian
from .entanglement import negativity

__all__ = [
    "DissipatorSpec",
    "OpenSystemConfig",
    "IntegrationError",
    "dressed_dephasing_rate",
    "photon_dephasing_rate",
    "build_dissipators",
    "lindblad_rhs",
    "integrate",
    "sweep_initial_state",
    "negativity_sweep",
]


class IntegrationError(RuntimeError):
    """Raised when the integrator detects trace or positivity breakdown."""


def _thermal_log_factor(n_th: float) -> float:
    # 1/ln((1+n)/n), with the n -> 0 limit taken analytically (factor -> 0)
    if n_th <= 0:
        return 0.0
    return 1.0 / math.log((1.0 + n_th) / n_th)


def dressed_dephasing_rate(Gamma_phi: float, gamma_m: float, lam: float,
                           n_th: float) -> float:
    """Total qubit dephasing rate: bare rate plus the mechanically induced part
    4 gamma_m lam^2 / ln((1+n_th)/n_th).

    Requires n_th > 0: the logarithm is undefined at zero occupancy.  Channel
    assembly (`build_dissipators`) takes the n_th -> 0 limit analytically
    instead of calling this with n_th = 0.
    """
    if Gamma_phi < 0 or gamma_m < 0 or n_th < 0:
        raise ValueError("rates and occupancies must be >= 0")
    if n_th == 0:
        raise ValueError("n_th must be > 0 (the dressed-rate logarithm needs it)")
    return Gamma_phi + 4.0 * gamma_m * lam * lam * _thermal_log_factor(n_th)


def photon_dephasing_rate(gamma_m: float, g: float, n_th: float) -> float:
    """Photon-number dephasing rate 4 gamma_m g^2 / ln((1+n_th)/n_th)."""
    if gamma_m < 0 or n_th < 0:
        raise ValueError("rates and occupancies must be >= 0")
    return 4.0 * gamma_m * g * g * _thermal_log_factor(n_th)


@dataclass(frozen=True)
class DissipatorSpec:
    """One jump channel: label, rate multiplying L[O], and the operator (CSR)."""

    label: str
    rate: float
    operator: sparse.csr_matrix

    def __post_init__(self):
        if self.rate < 0 or not np.isfinite(self.rate):
            raise ValueError(f"channel {self.label}: rate must be finite and >= 0")


def _ops(cspace: CompositeSpace):
    nc, nm = cspace.n_cav, cspace.n_mech
    eye_q = sparse.identity(2, format="csr")
    eye_c = sparse.identity(nc, format="csr")
    eye_m = sparse.identity(nm, format="csr")
    b = sparse.diags(np.sqrt(np.arange(1, nm)), 1, format="csr").astype(complex)
    a = sparse.diags(np.sqrt(np.arange(1, nc)), 1, format="csr").astype(complex)
    out = {
        "b": sparse.kron(eye_q, sparse.kron(eye_c, b)).tocsr(),
        "a": sparse.kron(eye_q, sparse.kron(a, eye_m)).tocsr(),
        "num_c": sparse.kron(eye_q, sparse.kron(
            sparse.diags(np.arange(nc, dtype=float)).astype(complex), eye_m)).tocsr(),
        "sz": sparse.kron(sparse.diags([1.0, -1.0]).astype(complex),
                          sparse.kron(eye_c, eye_m)).tocsr(),
    }
    sm = sparse.csr_matrix(([1.0 + 0.0j], ([1], [0])), shape=(2, 2))
    out["sm"] = sparse.kron(sm, sparse.kron(eye_c, eye_m)).tocsr()
    out["sp"] = sparse.kron(sm.conj().T, sparse.kron(eye_c, eye_m)).tocsr()
    return out


def build_dissipators(params: ModelParams, cspace: CompositeSpace,
                      dephasing_rate: float | None = None) -> list[DissipatorSpec]:
    """All jump channels with nonzero rate.

    Channels: dressed mechanical decay/excitation, cavity decay, qubit
    relaxation/excitation, qubit dephasing (dressed unless `dephasing_rate`
    pins the total directly), and photon-number dephasing.
    """
    ops = _ops(cspace)
    n_th = params.n_th
    n_q = params.qubit_bath_occupancy
    chans: list[DissipatorSpec] = []
    if params.gamma_m > 0:
        dressed_down = (ops["b"] - params.g * ops["num_c"]).tocsr()
        chans.append(DissipatorSpec("mech_decay", params.gamma_m * (n_th + 1.0),
                                    dressed_down))
        if n_th > 0:
            dressed_up = (ops["b"].conj().T.tocsr() - params.g * ops["num_c"]).tocsr()
            chans.append(DissipatorSpec("mech_excite", params.gamma_m * n_th, dressed_up))
    if params.kappa > 0:
        chans.append(DissipatorSpec("cavity_decay", params.kappa, ops["a"]))
    if params.Gamma > 0:
        chans.append(DissipatorSpec("qubit_decay", params.Gamma * (1.0 + n_q), ops["sm"]))
        if n_q > 0:
            chans.append(DissipatorSpec("qubit_excite", params.Gamma * n_q, ops["sp"]))
    if dephasing_rate is not None:
        gphi = float(dephasing_rate)
    else:
        # analytic n_th -> 0 limit: the induced part vanishes with 1/ln((1+n)/n)
        gphi = params.Gamma_phi + 4.0 * params.gamma_m * params.lam ** 2 \
            * _thermal_log_factor(n_th)
    if gphi > 0:
        chans.append(DissipatorSpec("qubit_dephasing", 0.5 * gphi, ops["sz"]))
    pd = photon_dephasing_rate(params.gamma_m, params.g, n_th)
    if pd > 0:
        chans.append(DissipatorSpec("photon_dephasing", pd, ops["num_c"]))
    return chans


def lindblad_rhs(rho: DensityMatrix | np.ndarray, params: ModelParams,
                 cspace: CompositeSpace | None = None,
                 dissipators: Sequence[DissipatorSpec] | None = None) -> np.ndarray:
    """Right-hand side -i[H, rho] + sum_k r_k (2 O rho O' - rho O'O - O'O rho).

    Reference implementation; `integrate` uses an equivalent cached fast path.
    """
    if isinstance(rho, DensityMatrix):
        if cspace is None:
            dims = rho.space.dims
            if rho.space.labels != ("qubit", "cavity", "mech"):
                raise ValueError("lindblad_rhs needs the full tripartite space")
            cspace = CompositeSpace(dims[1], dims[2])
        mat = rho.matrix
    else:
        if cspace is None:
            raise ValueError("cspace required when passing a bare matrix")
        mat = np.asarray(rho, dtype=complex)
    h = hamiltonian(params, cspace, as_sparse=True)
    if dissipators is None:
        dissipators = build_dissipators(params, cspace)
    out = -1j * ((h @ mat) - (h.conj().T.tocsr() @ mat.conj().T).conj().T)
    for ch in dissipators:
        o = ch.operator
        x = o @ mat
        oo = (o.conj().T.tocsr() @ o).tocsr()
        # O rho O' = (O (O rho)')' for any rho
        out += ch.rate * (2.0 * (o @ x.conj().T).conj().T
                          - (oo @ mat) - (oo @ mat.conj().T).conj().T)
    return out


class _Engine:
    """Cached Liouvillian acting on row-major-flattened density matrices.

    With C-ordered flattening vec(A rho B) = (A kron B^T) vec(rho), so the
    whole right-hand side collapses to one sparse matrix-vector product:
    L = -i (H_eff kron I - I kron conj(H_eff)) + sum_k 2 r_k O_k kron conj(O_k),
    H_eff = H - i sum_k r_k O_k'O_k.  The memory cost is roughly
    dim * (total operator nnz), fine for the composite sizes used here.
    """

    def __init__(self, params: ModelParams, cspace: CompositeSpace,
                 dissipators: Sequence[DissipatorSpec] | None = None):
        h = hamiltonian(params, cspace, as_sparse=True).astype(complex)
        if dissipators is None:
            dissipators = build_dissipators(params, cspace)
        d = cspace.dim
        eye = sparse.identity(d, format="csr", dtype=complex)
        gain = None
        jump = None
        for ch in dissipators:
            o = ch.operator.astype(complex).tocsr()
            oo = (o.conj().T.tocsr() @ o).tocsr()
            gain = ch.rate * oo if gain is None else gain + ch.rate * oo
            term = (2.0 * ch.rate) * sparse.kron(o, o.conj(), format="csr")
            jump = term if jump is None else jump + term
        h_eff = h if gain is None else (h - 1j * gain).tocsr()
        lio = -1j * (sparse.kron(h_eff, eye, format="csr")
                     - sparse.kron(eye, h_eff.conj(), format="csr"))
        if jump is not None:
            lio = lio + jump
        self.dim = d
        self.lio = lio.tocsr()
        self.lio.sort_indices()

    def rhs_vec(self, v: np.ndarray) -> np.ndarray:
        return self.lio @ v

    def rhs(self, mat: np.ndarray) -> np.ndarray:
        flat = np.ascontiguousarray(mat, dtype=complex).reshape(-1)
        return (self.lio @ flat).reshape(mat.shape)


@dataclass(frozen=True)
class OpenSystemConfig:
    """Fixed-step RK4 controls and runtime safety checks."""

    dt: float = 1e-3
    trace_tol: float = 1e-6
    positivity_tol: float = -1e-6
    check_positivity: bool = True

    def __post_init__(self):
        if self.dt <= 0 or not np.isfinite(self.dt):
            raise ValueError("dt must be positive and finite")


def integrate(rho0: DensityMatrix, params: ModelParams, times: Iterable[float],
              config: OpenSystemConfig | None = None,
              dissipators: Sequence[DissipatorSpec] | None = None,
              progress: Callable[[float], None] | None = None) -> Trajectory:
    """Propagate the master equation from t = 0 and sample at `times`.

    Fixed-step RK4 on the matrix-valued right-hand side; every step is
    symmetrized, and each sample is checked for trace drift and (optionally)
    positivity.  Sample times must be nonnegative and strictly increasing.
    """
    if config is None:
        config = OpenSystemConfig()
    times = [float(t) for t in times]
    if not times:
        raise ValueError("need at least one sample time")
    if times[0] < 0 or any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("sample times must be nonnegative and strictly increasing")
    if rho0.space.labels != ("qubit", "cavity", "mech"):
        raise ValueError("integrate needs the full tripartite space")
    dims = rho0.space.dims
    cspace = CompositeSpace(dims[1], dims[2])
    engine = _Engine(params, cspace, dissipators)

    d = rho0.space.dim
    v = rho0.matrix.astype(complex).reshape(-1)  # astype copies; view stays writable
    mat = v.reshape(d, d)
    buf = np.empty((d, d), dtype=complex)
    t_now = 0.0
    samples = []
    for target in times:
        span = target - t_now
        if span > 0:
            n_steps = max(1, int(math.ceil(span / config.dt - 1e-9)))
            h = span / n_steps
            for _ in range(n_steps):
                k1 = engine.rhs_vec(v)
                k2 = engine.rhs_vec(v + (0.5 * h) * k1)
                k3 = engine.rhs_vec(v + (0.5 * h) * k2)
                k4 = engine.rhs_vec(v + h * k3)
                k1 += k4
                k2 += k3
                v += (h / 6.0) * k1 + (h / 3.0) * k2
                np.conjugate(mat.T, out=buf)
                mat += buf
                mat *= 0.5
            t_now = target
        tr = v[:: d + 1].sum().real
        if abs(tr - 1.0) > config.trace_tol:
            raise IntegrationError(
                f"trace drift {tr - 1.0:.3e} at t = {t_now:.6f} exceeds "
                f"{config.trace_tol:.1e}")
        if config.check_positivity:
            w_min = float(np.linalg.eigvalsh(mat).min())
            if w_min < config.positivity_tol:
                raise IntegrationError(
                    f"negative eigenvalue {w_min:.3e} at t = {t_now:.6f} beyond "
                    f"{config.positivity_tol:.1e}")
        samples.append(DensityMatrix(rho0.space, mat.copy(),
                                     discarded_weight=rho0.discarded_weight))
        if progress is not None:
            progress(t_now)
    return Trajectory(tuple(times), tuple(samples))


def sweep_initial_state(params: ModelParams, cspace: CompositeSpace | None = None
                        ) -> DensityMatrix:
    """(|up> + |down>)/sqrt2 x |alpha> x thermal(n_th), the sweep starting point.

    Default truncations follow the coherent/thermal dimension rules; pass a
    `cspace` to bound the mechanics cutoff for hot baths.
    """
    from .core import coherent_dim, coherent_state, qubit_state, thermal_density, thermal_dim
    if cspace is None:
        cspace = CompositeSpace(coherent_dim(params.alpha),
                                max(2, thermal_dim(params.n_th)))
    q = qubit_state(1.0, 1.0).density_matrix()
    cav = coherent_state(params.alpha, cspace.n_cav, label="cavity").density_matrix()
    mech = thermal_density(params.n_th, cspace.n_mech, label="mech")
    return tensor(q, cav, mech)


def negativity_sweep(Gamma_values: Sequence[float], gamma_phi_values: Sequence[float],
                     params: ModelParams, rho0: DensityMatrix | None = None,
                     t_cycle: float = 2.0 * math.pi,
                     config: OpenSystemConfig | None = None,
                     progress: Callable[[float, float, float], None] | None = None
                     ) -> list[tuple[float, float, float]]:
    """Qubit-cavity negativity after one period for each (Gamma, gamma_phi) cell.

    gamma_phi values are the total qubit dephasing rates (the dressed rate is
    pinned, not re-derived from a bare rate).  Cells are independent; rows come
    out with Gamma as the outer loop.  Without an explicit rho0 the sweep starts
    from sweep_initial_state(params).
    """
    if rho0 is None:
        rho0 = sweep_initial_state(params)
    rows: list[tuple[float, float, float]] = []
    dims = rho0.space.dims
    cspace = CompositeSpace(dims[1], dims[2])
    for big_gamma in Gamma_values:
        for gphi in gamma_phi_values:
            p = params.with_rates(Gamma=float(big_gamma))
            diss = build_dissipators(p, cspace, dephasing_rate=float(gphi))
            traj = integrate(rho0, p, [t_cycle], config=config, dissipators=diss)
            rho_qc = partial_trace(traj.states[-1], ("qubit", "cavity"))
            neg = negativity(rho_qc, ("qubit",))
            rows.append((float(big_gamma), float(gphi), neg))
            if progress is not None:
                progress(float(big_gamma), float(gphi), neg)
    return rows
