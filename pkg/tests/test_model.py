import math

import numpy as np
import pytest

from xyquench.errors import DomainError
from xyquench.model import (KGrid, KModeHamiltonian, Protocol, ProtocolSpec,
                            build_hamiltonian, build_noise_operator,
                            instantaneous_eigenstates, mode_coefficients)

TAU = 37.5


@pytest.fixture(params=list(Protocol))
def spec(request):
    return ProtocolSpec.make(request.param, TAU)


def test_ramp_endpoints_exact(spec):
    t0, t1 = spec.window
    assert spec.driven_parameter(t0) == spec.ramp_start
    assert spec.driven_parameter(t1) == spec.ramp_end


def test_windows_and_velocities():
    tau = 12.0
    t = ProtocolSpec.transverse(tau)
    assert t.window == (-6.0, 6.0)
    assert t.velocity == pytest.approx((10.0 / 3.0) / tau, rel=1e-15)
    m = ProtocolSpec.multicritical(tau)
    assert m.window == (-3.0, 9.0)
    assert m.velocity == pytest.approx(4.0 / tau, rel=1e-15)
    g = ProtocolSpec.gapless_line(tau)
    assert g.window == (-6.0, 6.0)
    assert g.velocity == pytest.approx(4.0 / tau, rel=1e-15)


def test_invalid_quench_time():
    with pytest.raises(DomainError):
        ProtocolSpec.transverse(0.0)
    with pytest.raises(DomainError):
        ProtocolSpec.transverse(-3.0)
    with pytest.raises(DomainError):
        ProtocolSpec.transverse(float("nan"))


def test_inconsistent_couplings_rejected():
    with pytest.raises(DomainError):
        ProtocolSpec(Protocol.TRANSVERSE, jx=1.0, jy=0.5, h_fixed=0.0,
                     ramp_start=-5.0 / 3.0, ramp_end=5.0 / 3.0,
                     quench_time=10.0)


def test_build_hamiltonian_transverse_midpoint():
    spec = ProtocolSpec.transverse(TAU)
    h = build_hamiltonian(spec, math.pi / 2.0, 0.0)
    assert h.dz == pytest.approx(0.0, abs=1e-14)
    assert h.dx == pytest.approx(-8.0 / 3.0, rel=1e-14)


def test_build_hamiltonian_transverse_edge():
    spec = ProtocolSpec.transverse(TAU)
    h = build_hamiltonian(spec, math.pi, -TAU / 2.0)
    assert h.dz == pytest.approx(14.0 / 3.0, rel=1e-14)
    assert h.dx == pytest.approx(0.0, abs=1e-14)


def test_build_hamiltonian_gapless_quarter():
    spec = ProtocolSpec.gapless_line(TAU)
    h = build_hamiltonian(spec, math.pi / 2.0, TAU / 8.0)
    assert h.dz == pytest.approx(-2.0, rel=1e-14)
    assert h.dx == pytest.approx(-1.0, rel=1e-14)


def test_build_hamiltonian_domain_errors(spec):
    t0, t1 = spec.window
    with pytest.raises(DomainError):
        build_hamiltonian(spec, 1.0, t1 * 1.5)
    with pytest.raises(DomainError):
        build_hamiltonian(spec, 1.0, t0 - 0.1 * TAU)
    with pytest.raises(DomainError):
        build_hamiltonian(spec, -0.3, 0.0)
    with pytest.raises(DomainError):
        build_hamiltonian(spec, 3.5, 0.0)
    with pytest.raises(DomainError):
        build_hamiltonian(spec, float("nan"), 0.0)
    with pytest.raises(DomainError):
        build_hamiltonian(spec, 1.0, float("inf"))


def test_noise_operator_forms():
    tr = ProtocolSpec.transverse(TAU)
    for k in (0.3, 1.7, 2.9):
        v = build_noise_operator(tr, k)
        assert (v.vz, v.vx) == (-2.0, 0.0)
    mc = ProtocolSpec.multicritical(TAU)
    v = build_noise_operator(mc, math.pi / 2.0)
    assert v.vz == pytest.approx(0.0, abs=1e-15)
    assert v.vx == pytest.approx(-2.0, rel=1e-15)
    gl = ProtocolSpec.gapless_line(TAU)
    v = build_noise_operator(gl, math.pi / 2.0)
    assert v.vz == 0.0
    assert v.vx == pytest.approx(-2.0, rel=1e-15)


def test_eigen_diagonal():
    basis = instantaneous_eigenstates(KModeHamiltonian(dz=-1.0, dx=0.0))
    assert not basis.degenerate
    np.testing.assert_allclose(basis.ground, [1.0, 0.0])
    np.testing.assert_allclose(basis.excited, [0.0, 1.0])
    assert basis.gap == pytest.approx(2.0)


def test_eigen_sigma_x():
    basis = instantaneous_eigenstates(KModeHamiltonian(dz=0.0, dx=1.0))
    np.testing.assert_allclose(basis.ground, [1.0 / math.sqrt(2.0),
                                              -1.0 / math.sqrt(2.0)])
    assert basis.gap == pytest.approx(2.0)


def test_eigen_degenerate_flag():
    basis = instantaneous_eigenstates(KModeHamiltonian(dz=0.0, dx=0.0))
    assert basis.degenerate
    assert basis.gap == 0.0


def test_eigen_reconstruction_random():
    rng = np.random.default_rng(7)
    for _ in range(200):
        dz, dx = rng.normal(scale=3.0, size=2)
        ham = KModeHamiltonian(dz=dz, dx=dx)
        basis = instantaneous_eigenstates(ham)
        e = basis.gap / 2.0
        rebuilt = (np.outer(basis.excited, basis.excited) * e
                   - np.outer(basis.ground, basis.ground) * e)
        np.testing.assert_allclose(rebuilt, ham.matrix().real,
                                   rtol=1e-12, atol=1e-12 * e)
        # phase convention: first nonzero component positive
        for vec in (basis.ground, basis.excited):
            first = vec[0] if vec[0] != 0.0 else vec[1]
            assert first > 0.0


def test_grid_midpoints():
    grid = KGrid(500)
    assert grid.points[0] == pytest.approx(0.5 * math.pi / 500)
    assert grid.points[-1] == pytest.approx((500 - 0.5) * math.pi / 500)
    assert np.all(np.diff(grid.points) > 0)
    assert grid.points[0] > 0.0 and grid.points[-1] < math.pi
    np.testing.assert_allclose(np.diff(grid.points), math.pi / 500)


def test_grid_size_validation():
    with pytest.raises(DomainError):
        KGrid(0)


def test_gapless_gap_at_zero_anisotropy():
    # gap = 2 sqrt(dz^2 + dx^2) with dz = -2(J cos k + h); vanishes only
    # as k -> pi
    spec = ProtocolSpec.gapless_line(TAU)
    for k in (0.2, 1.3, 2.8, 3.1):
        h = build_hamiltonian(spec, k, 0.0)  # gamma(0) = 0
        assert h.gap == pytest.approx(4.0 * abs(math.cos(k) + 1.0), rel=1e-12)
        assert h.gap > 0.0


def test_mode_coefficients_match_pointwise(spec):
    ks = np.array([0.11, 0.9, 2.2, 3.0])
    dc, ds, v = mode_coefficients(spec, ks)
    t0, t1 = spec.window
    for t in (t0, 0.123 * t1, t1):
        for i, k in enumerate(ks):
            ham = build_hamiltonian(spec, float(k), float(t))
            assert dc[i, 0] + ds[i, 0] * t == pytest.approx(ham.dx, abs=1e-12)
            assert dc[i, 1] + ds[i, 1] * t == pytest.approx(ham.dz, abs=1e-12)
        nop = build_noise_operator(spec, float(ks[0]))
        assert v[0, 0] == pytest.approx(nop.vx, abs=1e-15)
        assert v[0, 1] == pytest.approx(nop.vz, abs=1e-15)
