"""Time evolution of k-modes under noisy control fields.

Two independent routes are provided:

* ``evolve_master`` integrates the noise-averaged master equation

      drho/dt = -i [H(t), rho] - (W^2/2) [V, [V, rho]]

  with an adaptive RK4(5) pair in Bloch-vector form (trace conservation and
  Hermiticity are then structural).

* ``evolve_trajectory`` propagates a single realization of the stochastic
  Schrodinger equation i d|psi>/dt = [H(t) + eta(t) V] |psi> with per-step
  unitaries exp(-i [H(t_mid) dt + V W sqrt(dt) xi]); averaging trajectories
  reproduces the master equation to O(dt) and serves as a Monte-Carlo oracle.

Every mode evolution is an independent pure computation; batches may be
evaluated concurrently and results do not depend on batch composition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .errors import DegeneracyError, DomainError, IntegrationError, InvariantViolation
from .model import ProtocolSpec, instantaneous_eigenstates, build_hamiltonian, mode_coefficients

__all__ = [
    "KModeState",
    "NoiseConfig",
    "IntegratorConfig",
    "BatchDiagnostics",
    "evolve_master",
    "evolve_modes",
    "evolve_trajectory",
    "sample_trajectories",
    "average_trajectories",
    "trace_distance",
]

TRACE_TOL = 1e-9
HERMITICITY_TOL = 1e-12
POSITIVITY_TOL = 1e-9
PURITY_SLACK = 1e-9  # allowed per-step increase of Tr rho^2


@dataclass(frozen=True)
class KModeState:
    """2x2 density matrix of one k-mode, validated on construction."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (2, 2):
            raise DomainError(f"rho must be 2x2, got shape {rho.shape}")
        object.__setattr__(self, "rho", rho)
        tr = rho[0, 0].real + rho[1, 1].real
        if abs(tr - 1.0) > TRACE_TOL or abs(rho[0, 0].imag) + abs(rho[1, 1].imag) > TRACE_TOL:
            raise InvariantViolation(f"trace {tr} deviates from 1 beyond {TRACE_TOL}")
        herm = abs(rho[0, 1] - np.conj(rho[1, 0]))
        if herm > HERMITICITY_TOL:
            raise InvariantViolation(f"Hermiticity violated by {herm:.2e}")
        # analytic eigenvalues of a 2x2 Hermitian matrix
        half = 0.5 * (rho[0, 0].real - rho[1, 1].real)
        rad = math.hypot(half, abs(rho[0, 1]))
        lo = 0.5 * tr - rad
        if lo < -POSITIVITY_TOL:
            raise InvariantViolation(f"negative eigenvalue {lo:.2e}")

    @classmethod
    def from_bloch(cls, r: np.ndarray) -> "KModeState":
        r = np.asarray(r, dtype=float)
        rho = 0.5 * np.array(
            [[1.0 + r[2], r[0] - 1j * r[1]],
             [r[0] + 1j * r[1], 1.0 - r[2]]], dtype=complex)
        return cls(rho)

    @property
    def bloch(self) -> np.ndarray:
        """(rx, ry, rz) with rho = (I + r.sigma)/2."""
        return np.array([2.0 * self.rho[0, 1].real,
                         -2.0 * self.rho[0, 1].imag,
                         (self.rho[0, 0] - self.rho[1, 1]).real])

    @property
    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)


def trace_distance(a: KModeState, b: KModeState) -> float:
    """T(a, b) = (1/2) Tr |rho_a - rho_b|."""
    diff = a.rho - b.rho
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


@dataclass(frozen=True)
class NoiseConfig:
    """White-noise amplitude W; the dissipator strength scales as W^2."""

    w: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.w) and self.w >= 0.0):
            raise DomainError(f"noise amplitude must be finite and >= 0, got {self.w}")


@dataclass(frozen=True)
class IntegratorConfig:
    """Adaptive step control; max_step=None caps steps at window/64."""

    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    max_step: float | None = None

    def __post_init__(self):
        for name, tol in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)]:
            if not (0.0 < tol <= 1e-2):
                raise DomainError(f"{name} must be in (0, 1e-2], got {tol}")
        if self.max_step is not None and not (math.isfinite(self.max_step)
                                              and self.max_step > 0):
            raise DomainError(f"max_step must be positive, got {self.max_step}")


@dataclass
class BatchDiagnostics:
    """Invariant monitors aggregated over one batched integration."""

    max_purity_increase: float = 0.0
    max_bloch_excess: float = 0.0
    total_steps: int = 0
    n_modes: int = 0

    def merge(self, other: "BatchDiagnostics") -> None:
        self.max_purity_increase = max(self.max_purity_increase,
                                       other.max_purity_increase)
        self.max_bloch_excess = max(self.max_bloch_excess, other.max_bloch_excess)
        self.total_steps += other.total_steps
        self.n_modes += other.n_modes


def _initial_bloch(spec: ProtocolSpec, dc, ds) -> np.ndarray:
    """Ground-state Bloch vectors -dhat at t_start; errors on degeneracy."""
    t0 = spec.window[0]
    dx0 = dc[:, 0] + ds[:, 0] * t0
    dz0 = dc[:, 1] + ds[:, 1] * t0
    dn = np.hypot(dx0, dz0)
    if np.any(dn == 0.0):
        k_bad = int(np.argmin(dn))
        raise DegeneracyError(
            f"initial Hamiltonian degenerate at mode index {k_bad}; "
            "cannot pick a ground state")
    r0 = np.zeros((dc.shape[0], 3))
    r0[:, 0] = -dx0 / dn
    r0[:, 2] = -dz0 / dn
    return r0


def evolve_modes(spec: ProtocolSpec, ks: np.ndarray, noise: NoiseConfig,
                 cfg: IntegratorConfig | None = None
                 ) -> tuple[np.ndarray, BatchDiagnostics]:
    """Integrate the master equation for a batch of modes.

    Returns the final Bloch vectors, shape (n, 3), plus invariant diagnostics.
    Raises IntegrationError (with the offending k and t) on step failure and
    InvariantViolation if positivity or purity monotonicity break tolerance.
    """
    cfg = cfg or IntegratorConfig()
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    dc, ds, v = mode_coefficients(spec, ks)
    r0 = _initial_bloch(spec, dc, ds)
    t0, t1 = spec.window
    n = ks.shape[0]
    t0s = np.full(n, t0)
    t1s = np.full(n, t1)
    hmax = np.full(n, cfg.max_step if cfg.max_step is not None else (t1 - t0) / 64.0)
    wd = np.full(n, 2.0 * noise.w * noise.w)
    out_r = np.empty((n, 3))
    out_status = np.zeros(n, np.int64)
    out_tfail = np.empty(n)
    out_pur = np.empty(n)
    out_pos = np.empty(n)
    out_nsteps = np.zeros(n, np.int64)
    _kernel.integrate_batch(t0s, t1s, r0, dc, ds, v, wd,
                            cfg.rel_tol, cfg.abs_tol, hmax,
                            out_r, out_status, out_tfail, out_pur, out_pos,
                            out_nsteps)
    if np.any(out_status != _kernel.OK):
        i = int(np.argmax(out_status != _kernel.OK))
        raise IntegrationError(
            f"step size underflow at k={ks[i]}, t={out_tfail[i]}",
            k=float(ks[i]), t=float(out_tfail[i]))
    diag = BatchDiagnostics(
        max_purity_increase=float(out_pur.max()),
        max_bloch_excess=float(out_pos.max()),
        total_steps=int(out_nsteps.sum()),
        n_modes=n)
    if diag.max_purity_increase > PURITY_SLACK:
        raise InvariantViolation(
            f"purity increased by {diag.max_purity_increase:.2e} in one step")
    if diag.max_bloch_excess > POSITIVITY_TOL:
        raise InvariantViolation(
            f"Bloch norm exceeded 1 by {diag.max_bloch_excess:.2e}")
    return out_r, diag


def evolve_master(spec: ProtocolSpec, k: float, noise: NoiseConfig,
                  cfg: IntegratorConfig | None = None) -> KModeState:
    """Final noise-averaged density matrix of one mode after the quench."""
    r, _ = evolve_modes(spec, np.array([float(k)]), noise, cfg)
    return KModeState.from_bloch(r[0])


# ---------------------------------------------------------------------------
# stochastic trajectories
# ---------------------------------------------------------------------------

def _step_count(spec: ProtocolSpec, dt: float) -> int:
    if not (math.isfinite(dt) and dt > 0.0):
        raise DomainError(f"dt must be positive, got {dt}")
    t0, t1 = spec.window
    span = t1 - t0
    n = round(span / dt)
    if n < 1 or abs(n * dt - span) > 1e-9 * span:
        raise DomainError(f"dt={dt} does not divide the evolution window "
                          f"of length {span}")
    return n


def _ground_spinor(spec: ProtocolSpec, k: float) -> np.ndarray:
    basis = instantaneous_eigenstates(build_hamiltonian(spec, k, spec.window[0]))
    if basis.degenerate:
        raise DegeneracyError(f"initial Hamiltonian degenerate at k={k}")
    return basis.ground.astype(complex)


def _run_trajectories(spec: ProtocolSpec, k: float, noise: NoiseConfig,
                      dt: float, streams: list[np.random.SeedSequence]
                      ) -> np.ndarray:
    """Propagate one trajectory per stream; returns spinors, shape (m, 2)."""
    n_steps = _step_count(spec, dt)
    dc, ds, v = mode_coefficients(spec, np.array([float(k)]))
    dcx, dcz = dc[0]
    dsx, dsz = ds[0]
    vx, vz = v[0]
    t0 = spec.window[0]
    psi0 = _ground_spinor(spec, k)
    m = len(streams)
    wsd = noise.w * math.sqrt(dt)

    xi = np.empty((n_steps, m))
    for j, ss in enumerate(streams):
        rng = np.random.Generator(np.random.Philox(ss))
        xi[:, j] = rng.standard_normal(n_steps)

    psi = np.tile(psi0, (m, 1))
    for s in range(n_steps):
        tm = t0 + (s + 0.5) * dt
        # generator (a . sigma) with a = d(t_mid) dt + v W sqrt(dt) xi
        ax = (dcx + dsx * tm) * dt + wsd * vx * xi[s]
        az = (dcz + dsz * tm) * dt + wsd * vz * xi[s]
        na = np.hypot(ax, az)
        cth = np.cos(na)
        snc = np.where(na > 0.0, np.sin(na) / np.where(na > 0.0, na, 1.0), 1.0)
        u00 = cth - 1j * snc * az
        u01 = -1j * snc * ax
        p0 = u00 * psi[:, 0] + u01 * psi[:, 1]
        p1 = u01 * psi[:, 0] + np.conj(u00) * psi[:, 1]
        nrm = np.sqrt(np.abs(p0) ** 2 + np.abs(p1) ** 2)
        psi[:, 0] = p0 / nrm
        psi[:, 1] = p1 / nrm
    return psi


def evolve_trajectory(spec: ProtocolSpec, k: float, noise: NoiseConfig,
                      dt: float, seed: int) -> KModeState:
    """One stochastic-Schrodinger realization; deterministic per seed."""
    psi = _run_trajectories(spec, k, noise, dt,
                            [np.random.SeedSequence(entropy=seed)])[0]
    return KModeState(np.outer(psi, np.conj(psi)))


def sample_trajectories(spec: ProtocolSpec, k: float, noise: NoiseConfig,
                        dt: float, seed: int, count: int,
                        chunk: int = 1000) -> list[KModeState]:
    """Independent realizations with streams split per replicate index.

    Stream j is derived from SeedSequence(seed, spawn_key=(j,)), so results
    are independent of chunking, execution order and thread count.
    """
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    states: list[KModeState] = []
    for lo in range(0, count, chunk):
        hi = min(lo + chunk, count)
        streams = [np.random.SeedSequence(entropy=seed, spawn_key=(j,))
                   for j in range(lo, hi)]
        psis = _run_trajectories(spec, k, noise, dt, streams)
        states.extend(KModeState(np.outer(p, np.conj(p))) for p in psis)
    return states


def average_trajectories(states: list[KModeState]) -> tuple[KModeState, float]:
    """Element-wise mean density matrix and the max per-element standard error."""
    if len(states) == 0:
        raise DomainError("cannot average an empty list of states")
    stack = np.stack([s.rho for s in states])
    mean = stack.mean(axis=0)
    m = stack.shape[0]
    if m == 1:
        stderr = 0.0
    else:
        var = np.mean(np.abs(stack - mean) ** 2, axis=0) * m / (m - 1)
        stderr = float(np.sqrt(var / m).max())
    return KModeState(mean), stderr
