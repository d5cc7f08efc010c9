import math

import numpy as np
import pytest

from xyquench.errors import DegeneracyError, DomainError
from xyquench.evolve import NoiseConfig
from xyquench.lzmap import (LZMapping, impulse_region_check,
                            lz_defect_estimate, lz_map, lz_probability,
                            standard_frame_excitation)
from xyquench.model import KGrid, Protocol, ProtocolSpec, mode_coefficients
from xyquench.observables import excitations_batch

TAU = 40.0


def test_map_gapless_quarter_pi():
    spec = ProtocolSpec.gapless_line(TAU)
    m = lz_map(spec, math.pi / 2.0)
    assert m.v_lz == pytest.approx(spec.velocity / 4.0, rel=1e-12)
    assert m.t_scale == pytest.approx(-4.0, rel=1e-12)
    assert m.t_offset == 0.0
    assert m.window_lz[0] < 0.0 < m.window_lz[1]


def test_map_transverse_quarter_pi():
    spec = ProtocolSpec.transverse(TAU)
    m = lz_map(spec, math.pi / 2.0)
    # cos(pi/2) kills the offset; 2 (Jx - Jy) sin k = 8/3
    assert m.t_offset == pytest.approx(0.0, abs=1e-15)
    assert m.v_lz == pytest.approx(spec.velocity / (8.0 / 3.0) ** 2, rel=1e-12)
    assert m.t_scale == pytest.approx(16.0 / 3.0, rel=1e-12)


def test_map_multicritical_quarter_pi():
    spec = ProtocolSpec.multicritical(TAU)
    m = lz_map(spec, math.pi / 2.0)
    # sin(2k) = 0, h sin k = 2: v_lz = v_x / 16
    assert m.v_lz == pytest.approx(spec.velocity / 16.0, rel=1e-12)


def test_map_degenerate_endpoints():
    spec = ProtocolSpec.transverse(TAU)
    with pytest.raises(DegeneracyError):
        lz_map(spec, 0.0)
    spec_g = ProtocolSpec.gapless_line(TAU)
    with pytest.raises(DegeneracyError):
        lz_map(spec_g, 0.0)  # sweep rate ~ sin k vanishes


def test_map_matches_generic_affine_reduction():
    # oracle: |time slope| of d(t) gives 2 v_eff, the static component
    # orthogonal to it gives 2 Delta; v_lz = v_eff / (2 Delta)^2
    for protocol in Protocol:
        spec = ProtocolSpec.make(protocol, TAU)
        for k in (0.3, 1.1, 2.0, 2.9):
            dc, ds, _ = mode_coefficients(spec, np.array([k]))
            a = np.array([ds[0, 0], ds[0, 1]])
            b = np.array([dc[0, 0], dc[0, 1]])
            v_eff = 0.5 * np.linalg.norm(a)
            b_perp = b - (a @ b / (a @ a)) * a
            delta = 0.5 * np.linalg.norm(b_perp)
            m = lz_map(spec, k)
            assert m.v_lz == pytest.approx(v_eff / (2.0 * delta) ** 2, rel=1e-10)
            assert abs(m.t_scale) == pytest.approx(4.0 * delta, rel=1e-10)
            # time origin of the LZ frame is where d(t) crosses the sweep axis
            assert m.t_offset == pytest.approx(a @ b / (a @ a), abs=1e-10 * TAU)


def test_lz_probability_values():
    assert lz_probability(math.pi / 2.0) == pytest.approx(math.exp(-1.0),
                                                          rel=1e-14)
    assert lz_probability(1e12) > 1.0 - 1e-11
    assert lz_probability(1e-3) == 0.0  # adiabatic underflow, not an error
    with pytest.raises(DomainError):
        lz_probability(0.0)
    with pytest.raises(DomainError):
        lz_probability(-1.0)


def test_lz_probability_monotone_in_velocity():
    vs = np.logspace(-2, 2, 30)
    ps = [lz_probability(v) for v in vs]
    assert all(a <= b for a, b in zip(ps, ps[1:]))


def _mapping(window, v_lz=1.0):
    return LZMapping(protocol=Protocol.TRANSVERSE, k=1.0, v_lz=v_lz,
                     t_scale=1.0, t_offset=0.0, window_lz=window,
                     crossing_in_window=True)


def test_impulse_region_check_basic():
    assert impulse_region_check(_mapping((-10.0, 10.0))) is True
    assert impulse_region_check(_mapping((-0.5, 10.0))) is False


def test_impulse_region_check_gapless_e4():
    tau = math.exp(4.0)
    spec = ProtocolSpec.gapless_line(tau)
    m = lz_map(spec, math.pi / 2.0)
    # direct arithmetic: window images are -+ 2 tau, radius (v_g/4)^(-1/2)
    radius = (spec.velocity / 4.0) ** -0.5
    assert abs(m.window_lz[0]) > radius and abs(m.window_lz[1]) > radius
    assert impulse_region_check(m) is True


def test_frame_equivalence_spot_checks():
    # the key correctness property of the substitution algebra: the
    # standard-frame sweep reproduces the original-frame p_k at W = 0
    tau = math.exp(3.0)
    for protocol, ks in [
        (Protocol.TRANSVERSE, (0.25, 1.3)),
        (Protocol.MULTICRITICAL, (2.6, 3.0)),
        (Protocol.GAPLESS_LINE, (0.9, 2.7)),
    ]:
        spec = ProtocolSpec.make(protocol, tau)
        p_orig = excitations_batch(spec, np.array(ks), NoiseConfig(0.0))
        for k, p in zip(ks, p_orig):
            m = lz_map(spec, k)
            assert impulse_region_check(m)
            assert standard_frame_excitation(m) == pytest.approx(p, abs=1e-6)


def test_defect_estimate_sudden_limit():
    grid = KGrid(64)
    spec = ProtocolSpec.transverse(1e-9)
    assert lz_defect_estimate(spec, grid) > 1.0 - 1e-6


def test_defect_estimate_bounds_and_monotone():
    grid = KGrid(64)
    estimates = []
    for lntau in np.linspace(3.0, 5.5, 5):
        spec = ProtocolSpec.multicritical(math.exp(lntau))
        est = lz_defect_estimate(spec, grid)
        assert 0.0 <= est <= 1.0
        estimates.append(est)
    assert all(a > b for a, b in zip(estimates, estimates[1:]))
