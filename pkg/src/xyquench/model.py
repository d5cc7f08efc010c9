"""Quench protocols and k-mode Hamiltonians of the transverse-field XY chain.

After the Jordan-Wigner / Fourier reduction, each pseudo-momentum mode k of
the chain is an independent two-level system

    H(k, t) = dz(k, t) * sigma_z + dx(k, t) * sigma_x,
    dz = -2 [ (Jx + Jy) cos k + h ],   dx = -2 [ (Jx - Jy) sin k ],

with one control parameter ramped linearly in time.  Three ramp protocols are
supported, each with its own fixed couplings, evolution window, and (Hermitian,
time-independent) control-noise operator V:

    transverse      h:  -5/3 -> 5/3,  Jx = 1, Jy = -1/3,  t in [-tau/2, tau/2],
                    V = -2 sigma_z
    multicritical   Jx: -1 -> 3,      h = 2,  Jy = 1,      t in [-tau/4, 3tau/4],
                    V = -2 (cos k sigma_z + sin k sigma_x)
    gapless_line    gamma: -2 -> 2,   h = J = Jx + Jy = 1, t in [-tau/2, tau/2],
                    V = -2 J sin k sigma_x

All pure functions of value inputs; safe to call concurrently.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "Protocol",
    "ProtocolSpec",
    "KModeHamiltonian",
    "NoiseOperator",
    "KGrid",
    "Eigenbasis",
    "build_hamiltonian",
    "build_noise_operator",
    "instantaneous_eigenstates",
    "mode_coefficients",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


class Protocol(enum.Enum):
    """The three quench protocols (j = 1, 2, 3)."""

    TRANSVERSE = "transverse"
    MULTICRITICAL = "multicritical"
    GAPLESS_LINE = "gapless_line"

    @property
    def label(self) -> str:
        return self.value

    @classmethod
    def from_label(cls, label: str) -> "Protocol":
        for p in cls:
            if p.value == label:
                return p
        raise DomainError(f"unknown protocol {label!r}; expected one of "
                          f"{[p.value for p in cls]}")


# canonical fixed parameters per protocol: (jx, jy, h_fixed, ramp_start, ramp_end)
_CANONICAL = {
    Protocol.TRANSVERSE: (1.0, -1.0 / 3.0, 0.0, -5.0 / 3.0, 5.0 / 3.0),
    Protocol.MULTICRITICAL: (0.0, 1.0, 2.0, -1.0, 3.0),
    Protocol.GAPLESS_LINE: (0.5, 0.5, 1.0, -2.0, 2.0),
}


@dataclass(frozen=True)
class ProtocolSpec:
    """One quench protocol with its couplings, ramp schedule and quench time.

    The driven parameter is h (transverse), Jx (multicritical) or gamma
    (gapless line); the corresponding jx / h_fixed field is unused and holds a
    placeholder constant.  For the gapless line only the sum J = jx + jy
    enters the Hamiltonian.
    """

    id: Protocol
    jx: float
    jy: float
    h_fixed: float
    ramp_start: float
    ramp_end: float
    quench_time: float

    def __post_init__(self):
        if not (math.isfinite(self.quench_time) and self.quench_time > 0):
            raise DomainError(f"quench_time must be positive and finite, got "
                              f"{self.quench_time}")
        jx, jy, hf, r0, r1 = _CANONICAL[self.id]
        for name, got, want in [("jx", self.jx, jx), ("jy", self.jy, jy),
                                ("h_fixed", self.h_fixed, hf),
                                ("ramp_start", self.ramp_start, r0),
                                ("ramp_end", self.ramp_end, r1)]:
            if not math.isclose(got, want, rel_tol=1e-12, abs_tol=1e-12):
                raise DomainError(
                    f"{self.id.label}: {name}={got} conflicts with the "
                    f"protocol's fixed value {want}")

    @classmethod
    def make(cls, protocol: Protocol, quench_time: float) -> "ProtocolSpec":
        jx, jy, hf, r0, r1 = _CANONICAL[protocol]
        return cls(protocol, jx, jy, hf, r0, r1, quench_time)

    @classmethod
    def transverse(cls, quench_time: float) -> "ProtocolSpec":
        return cls.make(Protocol.TRANSVERSE, quench_time)

    @classmethod
    def multicritical(cls, quench_time: float) -> "ProtocolSpec":
        return cls.make(Protocol.MULTICRITICAL, quench_time)

    @classmethod
    def gapless_line(cls, quench_time: float) -> "ProtocolSpec":
        return cls.make(Protocol.GAPLESS_LINE, quench_time)

    @property
    def window(self) -> tuple[float, float]:
        """Evolution window (t_start, t_end)."""
        tau = self.quench_time
        if self.id is Protocol.MULTICRITICAL:
            return (-tau / 4.0, 3.0 * tau / 4.0)
        return (-tau / 2.0, tau / 2.0)

    @property
    def velocity(self) -> float:
        """Ramp velocity of the driven parameter (v_h, v_x or v_gamma)."""
        return (self.ramp_end - self.ramp_start) / self.quench_time

    def driven_parameter(self, t: float) -> float:
        """Driven parameter at time t; hits the ramp endpoints exactly."""
        t0, t1 = self.window
        self._check_time(t)
        frac = (t - t0) / (t1 - t0)
        return self.ramp_start + (self.ramp_end - self.ramp_start) * frac

    def _check_time(self, t: float) -> None:
        if not math.isfinite(t):
            raise DomainError(f"time must be finite, got {t}")
        t0, t1 = self.window
        slack = 1e-12 * max(1.0, self.quench_time)
        if t < t0 - slack or t > t1 + slack:
            raise DomainError(f"t={t} outside the {self.id.label} evolution "
                              f"window [{t0}, {t1}]")


@dataclass(frozen=True)
class KModeHamiltonian:
    """H = dz * sigma_z + dx * sigma_x for one k-mode (real coefficients)."""

    dz: float
    dx: float

    @property
    def gap(self) -> float:
        """Instantaneous energy gap 2 sqrt(dz^2 + dx^2)."""
        return 2.0 * math.hypot(self.dz, self.dx)

    @property
    def degenerate(self) -> bool:
        return self.dz == 0.0 and self.dx == 0.0

    def matrix(self) -> np.ndarray:
        return self.dz * SIGMA_Z + self.dx * SIGMA_X


@dataclass(frozen=True)
class NoiseOperator:
    """Hermitian control-noise operator V = vz * sigma_z + vx * sigma_x."""

    vz: float
    vx: float

    def matrix(self) -> np.ndarray:
        return self.vz * SIGMA_Z + self.vx * SIGMA_X


@dataclass
class KGrid:
    """Midpoint grid of pseudo-momenta: k_n = (n - 1/2) pi / N, n = 1..N.

    Endpoints 0 and pi are excluded, so no grid mode is ever degenerate.
    """

    n_modes: int
    points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_modes < 1:
            raise DomainError(f"n_modes must be >= 1, got {self.n_modes}")
        self.points = (np.arange(self.n_modes) + 0.5) * np.pi / self.n_modes


@dataclass(frozen=True)
class Eigenbasis:
    """Instantaneous eigenpair of a k-mode Hamiltonian.

    Eigenvectors are real with the first nonzero component positive.  When
    the Hamiltonian is the zero matrix the result is flagged degenerate and
    the vectors are the canonical basis; callers must check the flag.
    """

    ground: np.ndarray
    excited: np.ndarray
    gap: float
    degenerate: bool


def _check_k(k: float) -> None:
    if not (math.isfinite(k) and 0.0 <= k <= math.pi):
        raise DomainError(f"k={k} outside [0, pi]")


def build_hamiltonian(spec: ProtocolSpec, k: float, t: float) -> KModeHamiltonian:
    """Deterministic part of the k-mode Hamiltonian at time t.

    dz = -2[(Jx+Jy) cos k + h],  dx = -2[(Jx-Jy) sin k], with the protocol's
    driven parameter evaluated at t.
    """
    _check_k(k)
    g = spec.driven_parameter(t)  # also validates t
    ck, sk = math.cos(k), math.sin(k)
    if spec.id is Protocol.TRANSVERSE:
        dz = -2.0 * ((spec.jx + spec.jy) * ck + g)
        dx = -2.0 * ((spec.jx - spec.jy) * sk)
    elif spec.id is Protocol.MULTICRITICAL:
        dz = -2.0 * ((g + spec.jy) * ck + spec.h_fixed)
        dx = -2.0 * ((g - spec.jy) * sk)
    else:  # gapless line: J = jx + jy fixed, gamma driven
        j = spec.jx + spec.jy
        dz = -2.0 * (j * ck + spec.h_fixed)
        dx = -2.0 * (j * g * sk)
    return KModeHamiltonian(dz=dz, dx=dx)


def build_noise_operator(spec: ProtocolSpec, k: float) -> NoiseOperator:
    """Noise operator V of the protocol, time independent for fixed k."""
    _check_k(k)
    if spec.id is Protocol.TRANSVERSE:
        return NoiseOperator(vz=-2.0, vx=0.0)
    if spec.id is Protocol.MULTICRITICAL:
        return NoiseOperator(vz=-2.0 * math.cos(k), vx=-2.0 * math.sin(k))
    j = spec.jx + spec.jy
    return NoiseOperator(vz=0.0, vx=-2.0 * j * math.sin(k))


def instantaneous_eigenstates(ham: KModeHamiltonian) -> Eigenbasis:
    """Eigenvectors of dz*sigma_z + dx*sigma_x ordered by eigenvalue.

    Closed form, branch chosen to avoid cancellation; phase fixed by making
    the first nonzero component real and positive.
    """
    dz, dx = ham.dz, ham.dx
    if ham.degenerate:
        return Eigenbasis(ground=np.array([1.0, 0.0]),
                          excited=np.array([0.0, 1.0]),
                          gap=0.0, degenerate=True)
    e = math.hypot(dz, dx)
    if dx == 0.0:
        if dz > 0.0:
            ground, excited = np.array([0.0, 1.0]), np.array([1.0, 0.0])
        else:
            ground, excited = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    elif dz >= 0.0:
        excited = np.array([dz + e, dx])
        ground = np.array([dx, -(dz + e)])
    else:
        excited = np.array([dx, e - dz])
        ground = np.array([dz - e, dx])
    ground = _fix_phase(ground / np.linalg.norm(ground))
    excited = _fix_phase(excited / np.linalg.norm(excited))
    return Eigenbasis(ground=ground, excited=excited, gap=2.0 * e,
                      degenerate=False)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    first = v[0] if v[0] != 0.0 else v[1]
    return -v if first < 0.0 else v


def mode_coefficients(spec: ProtocolSpec, ks: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Affine decomposition of a batch of modes for the integrators.

    Returns (dc, ds, v), each of shape (n, 2) holding the (x, z) components,
    such that dx(t) = dc[:,0] + ds[:,0] t, dz(t) = dc[:,1] + ds[:,1] t and
    V = v[:,0] sigma_x + v[:,1] sigma_z.  The affine form is built from the
    exact ramp endpoints, so the window edges reproduce them to round-off.
    """
    ks = np.asarray(ks, dtype=float)
    if ks.ndim != 1:
        raise DomainError("ks must be a 1-d array")
    if not np.all(np.isfinite(ks)) or np.any(ks < 0.0) or np.any(ks > np.pi):
        raise DomainError("all k must be finite and in [0, pi]")
    n = ks.shape[0]
    ck, sk = np.cos(ks), np.sin(ks)
    t0, t1 = spec.window
    slope = (spec.ramp_end - spec.ramp_start) / (t1 - t0)
    base = spec.ramp_start - slope * t0  # driven(t) = base + slope * t
    dc = np.empty((n, 2))
    ds = np.empty((n, 2))
    v = np.empty((n, 2))
    if spec.id is Protocol.TRANSVERSE:
        dc[:, 0] = -2.0 * (spec.jx - spec.jy) * sk
        ds[:, 0] = 0.0
        dc[:, 1] = -2.0 * ((spec.jx + spec.jy) * ck + base)
        ds[:, 1] = -2.0 * slope
        v[:, 0] = 0.0
        v[:, 1] = -2.0
    elif spec.id is Protocol.MULTICRITICAL:
        dc[:, 0] = -2.0 * (base - spec.jy) * sk
        ds[:, 0] = -2.0 * slope * sk
        dc[:, 1] = -2.0 * ((base + spec.jy) * ck + spec.h_fixed)
        ds[:, 1] = -2.0 * slope * ck
        v[:, 0] = -2.0 * sk
        v[:, 1] = -2.0 * ck
    else:
        j = spec.jx + spec.jy
        dc[:, 0] = -2.0 * j * base * sk
        ds[:, 0] = -2.0 * j * slope * sk
        dc[:, 1] = -2.0 * (j * ck + spec.h_fixed)
        ds[:, 1] = 0.0
        v[:, 0] = -2.0 * j * sk
        v[:, 1] = 0.0
    return dc, ds, v
