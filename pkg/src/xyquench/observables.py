"""Excitation probabilities, defect density, and cutoff-momentum analysis.

The excitation probability of a mode is p_k = <E|rho|E> in the instantaneous
eigenbasis of the final Hamiltonian; the defect density is its grid average

    n_W = (1/N_k) sum_k p_k.

Grid reductions use exact (fsum) summation so results are invariant under the
iteration order of the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, DomainError, InvariantViolation
from .evolve import (BatchDiagnostics, IntegratorConfig, KModeState,
                     NoiseConfig, evolve_modes)
from .model import (KGrid, KModeHamiltonian, Protocol, ProtocolSpec,
                    instantaneous_eigenstates, mode_coefficients)

__all__ = [
    "ExcitationProfile",
    "SweepResult",
    "CutoffResult",
    "excitation_probability",
    "excitations_batch",
    "defect_density",
    "scan_excitations",
    "cutoff_momentum",
    "sweep_defect_density",
]

P_ROUNDOFF = 1e-9


@dataclass
class ExcitationProfile:
    """Per-k excitation probabilities for one (protocol, tau, W) point."""

    k_values: np.ndarray
    p_values: np.ndarray
    tau: float
    w: float
    protocol: Protocol

    def __post_init__(self):
        self.k_values = np.asarray(self.k_values, dtype=float)
        self.p_values = np.asarray(self.p_values, dtype=float)
        if self.k_values.shape != self.p_values.shape:
            raise DomainError("k_values and p_values must have equal length")
        self.p_values = _validated_probabilities(self.p_values)


@dataclass
class SweepResult:
    """Defect densities over a (tau, W) grid; n_matrix is |ws| x |taus|."""

    taus: np.ndarray
    ws: np.ndarray
    n_matrix: np.ndarray
    protocol: Protocol

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        self.ws = np.asarray(self.ws, dtype=float)
        self.n_matrix = np.asarray(self.n_matrix, dtype=float)
        if self.n_matrix.shape != (self.ws.size, self.taus.size):
            raise DomainError(
                f"n_matrix shape {self.n_matrix.shape} != "
                f"({self.ws.size}, {self.taus.size})")
        if np.any(self.n_matrix < 0.0) or np.any(self.n_matrix > 1.0):
            raise InvariantViolation("defect densities must lie in [0, 1]")


@dataclass(frozen=True)
class CutoffResult:
    """Extent |k_c - k_e| of the super-threshold region attached to k_e."""

    k_e: float
    k_c: float
    extent: float
    threshold: float


def _validated_probabilities(p: np.ndarray) -> np.ndarray:
    bad_lo = p < -P_ROUNDOFF
    bad_hi = p > 1.0 + P_ROUNDOFF
    if np.any(bad_lo) or np.any(bad_hi):
        worst = p[bad_lo | bad_hi][0]
        raise InvariantViolation(
            f"excitation probability {worst} outside [0, 1] beyond round-off")
    return np.clip(p, 0.0, 1.0)


def excitation_probability(state: KModeState, ham_final: KModeHamiltonian) -> float:
    """p = <E|rho|E> with |E> the excited eigenstate of the final Hamiltonian."""
    basis = instantaneous_eigenstates(ham_final)
    if basis.degenerate:
        raise DegeneracyError("final Hamiltonian is degenerate; the excited "
                              "state is not defined")
    e = basis.excited.astype(complex)
    p = float(np.real(np.conj(e) @ state.rho @ e))
    return float(_validated_probabilities(np.array([p]))[0])


def excitations_batch(spec: ProtocolSpec, ks: np.ndarray, noise: NoiseConfig,
                      cfg: IntegratorConfig | None = None,
                      diag_out: BatchDiagnostics | None = None) -> np.ndarray:
    """p_k for a batch of modes via the master equation.

    In Bloch form the excited-state projector of the final Hamiltonian has
    Bloch vector +dhat(t_end), so p = (1 + r . dhat)/2.
    """
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    r, diag = evolve_modes(spec, ks, noise, cfg)
    if diag_out is not None:
        diag_out.merge(diag)
    dc, ds, _ = mode_coefficients(spec, ks)
    t1 = spec.window[1]
    dx1 = dc[:, 0] + ds[:, 0] * t1
    dz1 = dc[:, 1] + ds[:, 1] * t1
    dn = np.hypot(dx1, dz1)
    if np.any(dn == 0.0):
        raise DegeneracyError("final Hamiltonian degenerate on the batch")
    p = 0.5 * (1.0 + (r[:, 0] * dx1 + r[:, 2] * dz1) / dn)
    return _validated_probabilities(p)


def defect_density(spec: ProtocolSpec, grid: KGrid, noise: NoiseConfig,
                   cfg: IntegratorConfig | None = None,
                   diag_out: BatchDiagnostics | None = None) -> float:
    """Grid average of p_k (Eq.-level definition of the defect density)."""
    p = excitations_batch(spec, grid.points, noise, cfg, diag_out)
    return math.fsum(p) / grid.n_modes


def scan_excitations(spec: ProtocolSpec, grid: KGrid, noise: NoiseConfig,
                     cfg: IntegratorConfig | None = None,
                     diag_out: BatchDiagnostics | None = None
                     ) -> ExcitationProfile:
    """p_k over the whole grid for one (tau, W) point."""
    p = excitations_batch(spec, grid.points, noise, cfg, diag_out)
    return ExcitationProfile(k_values=grid.points.copy(), p_values=p,
                             tau=spec.quench_time, w=noise.w,
                             protocol=spec.id)


def cutoff_momentum(profile: ExcitationProfile, k_e: float,
                    threshold: float = 0.03) -> CutoffResult:
    """Cutoff momentum of the contiguous region with p > threshold at k_e.

    k_c is the grid point farthest from k_e inside the contiguous
    super-threshold region attached to k_e (detached secondary bumps are not
    counted).  If already the point adjacent to k_e is below threshold the
    extent is zero.
    """
    if not (k_e == 0.0 or k_e == math.pi):
        raise DomainError(f"k_e must be 0 or pi, got {k_e}")
    if not (0.0 < threshold < 1.0):
        raise DomainError(f"threshold must be in (0, 1), got {threshold}")
    k = profile.k_values
    p = profile.p_values
    idx = range(len(k)) if k_e == 0.0 else range(len(k) - 1, -1, -1)
    k_c = k_e
    for i in idx:
        if p[i] > threshold:
            k_c = k[i]
        else:
            break
    return CutoffResult(k_e=k_e, k_c=float(k_c), extent=abs(float(k_c) - k_e),
                        threshold=threshold)


def sweep_defect_density(protocol: Protocol, grid: KGrid, taus: np.ndarray,
                         ws: np.ndarray, cfg: IntegratorConfig | None = None,
                         diag_out: BatchDiagnostics | None = None
                         ) -> SweepResult:
    """Defect densities over the full (tau, W) grid of one protocol."""
    taus = np.asarray(taus, dtype=float)
    ws = np.asarray(ws, dtype=float)
    n = np.empty((ws.size, taus.size))
    for i, w in enumerate(ws):
        noise = NoiseConfig(w=float(w))
        for j, tau in enumerate(taus):
            spec = ProtocolSpec.make(protocol, float(tau))
            n[i, j] = defect_density(spec, grid, noise, cfg, diag_out)
    return SweepResult(taus=taus, ws=ws, n_matrix=n, protocol=protocol)
