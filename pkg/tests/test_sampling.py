"""Initial-condition sampling tests: Wigner widths, draw protocol, weights."""

import math

import numpy as np
import pytest

import sstpsim.model as model
from sstpsim.model import BathMode, ModelParams, mode_arrays, sigma_z_adiabatic
from sstpsim.sampling import (
    InitialDraw,
    draw_initial,
    initial_subsystem_matrix,
    sample_bath,
    wigner_widths,
)


@pytest.fixture
def bath():
    return [BathMode(0.5, 0.2), BathMode(1.0, -0.3), BathMode(2.5, 0.15)]


@pytest.fixture
def params(bath):
    return ModelParams(omega=0.6, xi=0.0, beta=2.0, n_modes=3)


def test_wigner_widths_closed_form(bath):
    beta = 2.0
    sig_r, sig_p = wigner_widths(bath, beta)
    for j, m in enumerate(bath):
        th = math.tanh(0.5 * beta * m.freq)
        assert math.isclose(sig_r[j]**2, 1.0 / (2 * m.mass * m.freq * th),
                            rel_tol=1e-12)
        assert math.isclose(sig_p[j]**2, m.mass * m.freq / (2 * th),
                            rel_tol=1e-12)


def test_wigner_limits():
    mode = [BathMode(1.3, 0.0, mass=1.7)]
    # high temperature: classical equipartition 1/(beta M w^2)
    sig_r, sig_p = wigner_widths(mode, beta=1e-6)
    assert math.isclose(sig_r[0]**2, 1.0 / (1e-6 * 1.7 * 1.3**2),
                        rel_tol=1e-6)
    assert math.isclose(sig_p[0]**2, 1.7 / 1e-6, rel_tol=1e-6)
    # zero temperature: ground-state widths, uncertainty product 1/4
    sig_r, sig_p = wigner_widths(mode, beta=1e4)
    assert math.isclose(sig_r[0]**2 * sig_p[0]**2, 0.25, rel_tol=1e-10)


def test_sample_bath_moments(bath):
    rng = np.random.default_rng(5)
    n = 200_000
    rs = np.empty((n, 3))
    ps = np.empty((n, 3))
    for i in range(n):
        rs[i], ps[i] = sample_bath(rng, bath, beta=2.0)
    sig_r, sig_p = wigner_widths(bath, beta=2.0)
    assert np.all(np.abs(rs.mean(axis=0)) < 5 * sig_r / math.sqrt(n))
    assert np.allclose(rs.var(axis=0), sig_r**2, rtol=0.02)
    assert np.allclose(ps.var(axis=0), sig_p**2, rtol=0.02)


def test_draw_order_contract(params, bath):
    """draw_initial consumes exactly normal(n), normal(n), integers(4)."""
    seed = np.random.SeedSequence((42, 7))
    ref = np.random.Generator(np.random.PCG64(seed))
    sig_r, sig_p = wigner_widths(bath, params.beta)
    r_exp = ref.standard_normal(3) * sig_r
    p_exp = ref.standard_normal(3) * sig_p
    k_exp = int(ref.integers(4))
    probe = ref.random()  # next value after the contract draws

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((42, 7))))
    d = draw_initial(rng, params, bath)
    assert isinstance(d, InitialDraw)
    assert np.array_equal(d.r0, r_exp)
    assert np.array_equal(d.p0, p_exp)
    assert d.pair0 == ((0, 0), (0, 1), (1, 0), (1, 1))[k_exp]
    assert rng.random() == probe


def test_subsystem_matrix_is_rotated_projector(params, bath):
    rng = np.random.default_rng(1)
    for _ in range(25):
        r = rng.normal(size=3)
        rho = initial_subsystem_matrix(r, params, bath)
        sz = sigma_z_adiabatic(r, params, bath)
        assert np.allclose(rho, 0.5 * (np.eye(2) + sz), atol=0)
        # projector onto the +1 eigenstate: hermitian, idempotent, trace 1
        assert np.allclose(rho, rho.conj().T, atol=0)
        assert np.allclose(rho @ rho, rho, atol=1e-14)
        assert abs(np.trace(rho) - 1.0) < 1e-14


def test_w0_matches_matrix_and_t0_identity(params, bath):
    rng = np.random.default_rng(9)
    seen = set()
    for i in range(200):
        sub = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence((3, i))))
        d = draw_initial(sub, params, bath)
        a, ap = d.pair0
        seen.add(d.pair0)
        rho = initial_subsystem_matrix(d.r0, params, bath)
        assert math.isclose(d.w0, 4.0 * rho[ap, a].real,
                            rel_tol=0, abs_tol=1e-14)
        assert rho[ap, a].imag == 0.0
    assert seen == {(0, 0), (0, 1), (1, 0), (1, 1)}

    # averaging w0 * sigma^{a a'} over the four pairs recovers <sigma_z> = 1
    for _ in range(25):
        r = rng.normal(size=3)
        rho = initial_subsystem_matrix(r, params, bath)
        sz = sigma_z_adiabatic(r, params, bath)
        total = sum(4.0 * rho[ap, a] * sz[a, ap]
                    for a in (0, 1) for ap in (0, 1)) / 4.0
        assert abs(total - 1.0) < 1e-14


def test_w0_sign_convention(monkeypatch, params, bath):
    # off-diagonal w0 flips with the eigenvector convention, diagonal stays
    def draw_pair(seed):
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence((8, seed))))
        return draw_initial(rng, params, bath)

    base = {}
    i = 0
    while len(base) < 4:
        d = draw_pair(i)
        base.setdefault(d.pair0, d.w0)
        i += 1
    monkeypatch.setattr(model, "EIGENVECTOR_SIGN", -1.0)
    flipped = {}
    for j in range(i):
        d = draw_pair(j)
        flipped.setdefault(d.pair0, d.w0)
    for pair, w in base.items():
        if pair[0] == pair[1]:
            assert flipped[pair] == w
        else:
            assert flipped[pair] == -w
