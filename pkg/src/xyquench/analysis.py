"""Scaling analysis: KZ power laws, noise-induced defect rates, optimal times.

Pipeline mirroring the defect-production phenomenology: the noise-free sweep
gives n_0 ~ c tau^-beta; subtracting it from a noisy sweep isolates the
noise-induced part delta_n ~ r tau; minimizing n(tau) = c tau^-beta + r tau
gives tau_opt = (c beta / r)^(1/(beta+1)), i.e. tau_opt ~ r^(-1/(beta+1)).
With the dissipator scaling r ~ W^2, the slope of ln tau_opt against ln W^2
is -1/(beta+1) (against ln W it doubles); both fits are reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryMinimumError, DomainError
from .evolve import BatchDiagnostics, IntegratorConfig, NoiseConfig
from .model import KGrid, Protocol, ProtocolSpec
from .observables import defect_density

__all__ = [
    "PowerLawFit",
    "NoiseInducedFit",
    "OptimalTimeFit",
    "OptimalTimeStudy",
    "fit_power_law",
    "noise_induced_defects",
    "fit_linear_rate",
    "optimal_quench_time",
    "fit_alpha",
    "optimal_time_study",
]

DEFAULT_FIT_WINDOW = (3.0, 5.5)  # in ln tau


@dataclass(frozen=True)
class PowerLawFit:
    """n ~ c * tau^-beta fitted by least squares in (ln tau, ln n)."""

    beta: float
    c: float
    r2: float
    window: tuple[float, float]

    def predict(self, taus: np.ndarray) -> np.ndarray:
        return self.c * np.asarray(taus, dtype=float) ** (-self.beta)


@dataclass(frozen=True)
class NoiseInducedFit:
    """delta_n ~ r * tau + intercept."""

    r: float
    intercept: float
    r2: float


@dataclass(frozen=True)
class OptimalTimeFit:
    """Slope alpha of ln tau_opt against ln W^2 (or ln W)."""

    alpha: float
    intercept: float
    points: tuple[tuple[float, float], ...]
    abscissa: str  # "lnw2" or "lnw"


def _lstsq_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line fit; returns (slope, intercept, r2)."""
    if x.size < 2 or np.ptp(x) == 0.0:
        raise DomainError("degenerate abscissae: need >= 2 distinct x values")
    a = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def fit_power_law(taus, ns, window: tuple[float, float] = DEFAULT_FIT_WINDOW
                  ) -> PowerLawFit:
    """Ordinary least squares on (ln tau, ln n) inside the ln-tau window."""
    taus = np.asarray(taus, dtype=float)
    ns = np.asarray(ns, dtype=float)
    if taus.shape != ns.shape:
        raise DomainError("taus and ns must have equal length")
    if np.any(ns <= 0.0):
        raise DomainError("all n must be positive for a log-log fit")
    lo, hi = window
    slack = 1e-12
    mask = (np.log(taus) >= lo - slack) & (np.log(taus) <= hi + slack)
    if mask.sum() < 3:
        raise DomainError(f"need >= 3 points inside ln tau window {window}, "
                          f"got {int(mask.sum())}")
    slope, intercept, r2 = _lstsq_line(np.log(taus[mask]), np.log(ns[mask]))
    return PowerLawFit(beta=-slope, c=math.exp(intercept), r2=r2, window=window)


def noise_induced_defects(taus, n_w, kz_fit: PowerLawFit) -> np.ndarray:
    """delta_n = n_W - c tau^-beta, pointwise."""
    taus = np.asarray(taus, dtype=float)
    n_w = np.asarray(n_w, dtype=float)
    if taus.shape != n_w.shape:
        raise DomainError("taus and n_w must have equal length")
    return n_w - kz_fit.predict(taus)


def fit_linear_rate(taus, dns) -> NoiseInducedFit:
    """Least-squares line delta_n ~ r tau (free intercept, reported)."""
    taus = np.asarray(taus, dtype=float)
    dns = np.asarray(dns, dtype=float)
    if taus.shape != dns.shape:
        raise DomainError("taus and dns must have equal length")
    if taus.size < 3:
        raise DomainError(f"need >= 3 points, got {taus.size}")
    slope, intercept, r2 = _lstsq_line(taus, dns)
    return NoiseInducedFit(r=slope, intercept=intercept, r2=r2)


def optimal_quench_time(taus, n_w) -> float:
    """tau minimizing n_W, refined by a parabola through (ln tau, n).

    Ties break toward smaller tau; a minimum on the grid boundary raises
    BoundaryMinimumError (the search window was too narrow).
    """
    taus = np.asarray(taus, dtype=float)
    n_w = np.asarray(n_w, dtype=float)
    if taus.shape != n_w.shape:
        raise DomainError("taus and n_w must have equal length")
    if taus.size < 3:
        raise DomainError(f"need >= 3 points, got {taus.size}")
    if np.any(np.diff(taus) <= 0.0):
        raise DomainError("taus must be strictly increasing")
    i = int(np.argmin(n_w))  # argmin takes the first minimum: smaller tau
    if i == 0 or i == taus.size - 1:
        raise BoundaryMinimumError(
            f"minimum at grid boundary tau={taus[i]}; widen the tau window")
    x0, x1, x2 = np.log(taus[i - 1: i + 2])
    y0, y1, y2 = n_w[i - 1: i + 2]
    # vertex of the parabola through three (possibly non-uniform) points;
    # for a convex minimum the denominator is negative
    a, b = x1 - x0, x2 - x1
    denom = a * (y1 - y2) + b * (y1 - y0)
    if denom >= 0.0:
        return float(taus[i])
    num = a * a * (y1 - y2) - b * b * (y1 - y0)
    xv = x1 - 0.5 * num / denom
    return float(math.exp(xv))


def fit_alpha(ws, tau_opts, abscissa: str = "lnw2") -> OptimalTimeFit:
    """Least squares of ln tau_opt against ln W^2 (default) or ln W."""
    ws = np.asarray(ws, dtype=float)
    tau_opts = np.asarray(tau_opts, dtype=float)
    if ws.shape != tau_opts.shape:
        raise DomainError("ws and tau_opts must have equal length")
    if ws.size < 3:
        raise DomainError(f"need >= 3 points, got {ws.size}")
    if np.any(ws <= 0.0) or np.any(tau_opts <= 0.0):
        raise DomainError("all W and tau_opt must be positive")
    if abscissa == "lnw2":
        x = np.log(ws ** 2)
    elif abscissa == "lnw":
        x = np.log(ws)
    else:
        raise DomainError(f"abscissa must be 'lnw2' or 'lnw', got {abscissa!r}")
    y = np.log(tau_opts)
    slope, intercept, _ = _lstsq_line(x, y)
    return OptimalTimeFit(alpha=slope, intercept=intercept,
                          points=tuple(zip(x.tolist(), y.tolist())),
                          abscissa=abscissa)


# ---------------------------------------------------------------------------
# optimal-time scaling study (Fig. 3 style)
# ---------------------------------------------------------------------------

@dataclass
class OptimalTimeStudy:
    """tau_opt per W plus the scaling fits against both abscissae."""

    protocol: Protocol
    ws: np.ndarray
    tau_opts: np.ndarray
    fit_lnw2: OptimalTimeFit
    fit_lnw: OptimalTimeFit


def optimal_time_study(protocol: Protocol, ws, grid: KGrid,
                       kz_fit: PowerLawFit,
                       cfg: IntegratorConfig | None = None,
                       r_hints: dict[float, float] | None = None,
                       tau_count: int = 40,
                       window_halfwidth: float = 1.2,
                       diag_out: BatchDiagnostics | None = None
                       ) -> OptimalTimeStudy:
    """Locate tau_opt(W) with an adaptive log-spaced search per W.

    The search window is centered on the model prediction
    (c beta / r)^(1/(beta+1)); r comes from r_hints or a coarse pilot sweep.
    The window is re-centered and widened once if the minimum lands on the
    boundary.
    """
    ws = np.asarray(sorted(float(w) for w in ws))
    if np.any(ws <= 0.0):
        raise DomainError("all W must be positive for the scaling study")
    tau_opts = []
    for w in ws:
        r = (r_hints or {}).get(w)
        if r is None or r <= 0.0:
            r = _pilot_rate(protocol, w, grid, kz_fit, cfg, diag_out)
        center = math.log((kz_fit.c * kz_fit.beta / r) ** (1.0 / (kz_fit.beta + 1.0)))
        tau_opts.append(_locate_minimum(protocol, w, grid, cfg, center,
                                        tau_count, window_halfwidth, diag_out))
    tau_opts = np.asarray(tau_opts)
    return OptimalTimeStudy(
        protocol=protocol, ws=ws, tau_opts=tau_opts,
        fit_lnw2=fit_alpha(ws, tau_opts, "lnw2"),
        fit_lnw=fit_alpha(ws, tau_opts, "lnw"))


def _pilot_rate(protocol: Protocol, w: float, grid: KGrid,
                kz_fit: PowerLawFit, cfg, diag_out) -> float:
    taus = np.exp(np.linspace(*kz_fit.window, 8))
    noise = NoiseConfig(w=w)
    n = np.array([defect_density(ProtocolSpec.make(protocol, t), grid, noise,
                                 cfg, diag_out) for t in taus])
    fit = fit_linear_rate(taus, noise_induced_defects(taus, n, kz_fit))
    if fit.r <= 0.0:
        raise DomainError(f"pilot rate non-positive at W={w}; noise too weak "
                          "to locate an optimal time")
    return fit.r


def _locate_minimum(protocol: Protocol, w: float, grid: KGrid, cfg,
                    center: float, tau_count: int, halfwidth: float,
                    diag_out) -> float:
    noise = NoiseConfig(w=w)
    for width in (halfwidth, 1.5 * halfwidth):
        lntaus = np.linspace(center - width, center + width, tau_count)
        taus = np.exp(lntaus)
        n = np.array([defect_density(ProtocolSpec.make(protocol, t), grid,
                                     noise, cfg, diag_out) for t in taus])
        try:
            return optimal_quench_time(taus, n)
        except BoundaryMinimumError:
            center = lntaus[int(np.argmin(n))]
    raise BoundaryMinimumError(
        f"could not bracket the optimal time for W={w} after widening")
