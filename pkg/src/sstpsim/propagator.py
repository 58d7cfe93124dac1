"""Sequential short-time propagation of one weighted trajectory.

Each step of length tau realizes the short-time propagator as an adiabatic
segment (Bohr phase + velocity-Verlet motion on the surface pair's mean
force) followed by a stochastic transition attempt with momentum jumps and
compensating weight factors.  Concatenating steps and averaging the weighted
observable over trajectories gives the population dynamics.

This module is the readable reference; the compiled kernel in
`backends._sstp_core` reruns the same arithmetic (identical expression
forms where that is cheap) for the production Monte Carlo loop.  Random
numbers are consumed through a fixed protocol so a trajectory can be
replayed bit-identically from a pre-drawn uniform buffer: per transition
attempt, one uniform for the Bernoulli hop decision (skipped entirely when
the hop budget is exhausted or the bath is uncoupled), and a second uniform
only when a hop occurs while both single-index channels are open.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import model
from .filters import FilterScheme, cut_weight, energy_gate, virtual_energy_fluctuation
from .model import ModelParams, mode_arrays

__all__ = [
    "TrajectoryState",
    "StepOutcome",
    "TrajectoryResult",
    "adiabatic_segment",
    "momentum_jump",
    "transition_step",
    "run_trajectory",
]

logger = logging.getLogger(__name__)


@dataclass
class TrajectoryState:
    """Mutable state of one trajectory.

    r, p are bath phase-space arrays; pair = (a, a') are the two adiabatic
    indices (0 lower, 1 upper); weight is the running complex factor W
    excluding the initial-sampling weight w0; n_hops counts transitions.
    """

    r: np.ndarray
    p: np.ndarray
    pair: tuple[int, int]
    weight: complex
    n_hops: int
    time: float


@dataclass(frozen=True)
class StepOutcome:
    """What one transition attempt did.

    frustrated is only set when no hop happened and at least one channel
    was dropped for insufficient momentum along the coupling direction, so
    frustrated=True implies the phase-space/pair state is unchanged.
    """

    hopped: bool
    new_pair: tuple[int, int]
    jump_applied: bool
    frustrated: bool


class TrajectoryResult(NamedTuple):
    """run_trajectory output: per-grid-time complex contributions plus
    diagnostics (abort flag, hop count, max |W| after cutting)."""

    contrib: np.ndarray
    aborted: bool
    n_hops: int
    max_weight: float


def _pair_eta(a: int, ap: int) -> float:
    # mean-surface force coefficient: +1 lower/lower, -1 upper/upper,
    # 0 mixed (the surface tilts cancel in the average)
    if a == ap:
        return 1.0 if a == 0 else -1.0
    return 0.0


def adiabatic_segment(state: TrajectoryState, tau: float, modes,
                      params: ModelParams) -> TrajectoryState:
    """Advance (r, p) one velocity-Verlet step on the pair's mean surface
    and multiply the weight by the trapezoidal Bohr phase.

    The mean of the two surface forces is -M_j w_j^2 r_j + eta (gamma/G) c_j
    with eta dependent only on the index pair, so diagonal pairs move on
    their own surface and off-diagonal pairs on the bare bath potential.
    The phase increment is tau * (a - a') * (G_old + G_new), the trapezoid
    rule for the Bohr frequency (a - a') * 2G; diagonal pairs pick up no
    phase and conserve P^2/2M + E_a to integrator order.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    tab = mode_arrays(modes)
    a, ap = state.pair
    eta = _pair_eta(a, ap)
    omega2 = params.omega * params.omega
    mw2 = tab.mass * tab.freq**2

    g_old = float(tab.coup @ state.r)
    root_old = math.sqrt(omega2 + g_old * g_old)
    f_old = -(mw2 * state.r) + (eta * g_old / root_old) * tab.coup
    p_half = state.p + (0.5 * tau) * f_old
    r_new = state.r + tau * (p_half / tab.mass)
    g_new = float(tab.coup @ r_new)
    root_new = math.sqrt(omega2 + g_new * g_new)
    f_new = -(mw2 * r_new) + (eta * g_new / root_new) * tab.coup
    p_new = p_half + (0.5 * tau) * f_new

    if a != ap:
        phase = tau * (a - ap) * (root_old + root_new)
        state.weight = state.weight * complex(math.cos(phase),
                                              math.sin(phase))
    state.r = r_new
    state.p = p_new
    state.time += tau
    return state


def momentum_jump(p, d_hat, delta_e: float, mass: float) -> Optional[np.ndarray]:
    """Momentum shift along d_hat accompanying a transition, or None.

    P' = P - (P.d)d + d sign(P.d) sqrt((P.d)^2 + M dE), which changes the
    kinetic energy along d_hat by exactly dE/2 and leaves the orthogonal
    components untouched.  Returns None (a frustrated hop) when the
    radicand is negative, i.e. the momentum along the coupling direction
    cannot pay for the surface change.
    """
    p = np.asarray(p, dtype=float)
    d_hat = np.asarray(d_hat, dtype=float)
    norm = math.sqrt(float(d_hat @ d_hat))
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"d_hat must be a unit vector, got |d| = {norm!r}")
    s = float(p @ d_hat)
    radicand = s * s + mass * delta_e
    if radicand < 0.0:
        return None
    return p - s * d_hat + d_hat * (float(np.sign(s)) * math.sqrt(radicand))


def transition_step(state: TrajectoryState, tau: float, scheme: FilterScheme,
                    rng, modes, params: ModelParams,
                    max_hops: Optional[int] = None
                    ) -> tuple[TrajectoryState, StepOutcome]:
    """One stochastic transition attempt at the current bath point.

    Both single-index hop channels (flip a, or flip a') are examined: a
    channel is open when its momentum jump is not frustrated and, with
    transition filtering active, when the |virtual energy fluctuation| of
    the approximate shift stays within c_E.  The hop probability is
    tau|b|/(1 + tau|b|) with b = (P/M).d12 whenever any channel is open,
    zero otherwise.  On a hop the jumping index is drawn uniformly among
    the open channels and the weight gains tau * b_k * n_open / P_hop with
    b_k signed by the hop direction (d_{01} = -d_{10}); on no hop the
    weight gains 1/(1 - P_hop).  The expectation of the update over the
    draws therefore reproduces the (identity + tau * transition-operator)
    action restricted to open channels.

    Consumes rng.random() once per attempt, plus once more for the index
    choice when a hop occurs with both channels open; returns before any
    draw when the hop budget is spent or the bath is uncoupled.  The
    momentum update uses the same square-root rule as momentum_jump, fused
    into a single in-place shift along the coupling direction.
    """
    a, ap = state.pair
    no_hop = StepOutcome(hopped=False, new_pair=(a, ap), jump_applied=False,
                         frustrated=False)
    if max_hops is not None and state.n_hops >= max_hops:
        return state, no_hop

    tab = mode_arrays(modes)
    cnorm = math.sqrt(float(tab.coup @ tab.coup))
    if cnorm == 0.0:
        return state, no_hop
    mass = float(tab.mass[0])
    chat = tab.coup / cnorm

    g = float(tab.coup @ state.r)
    root = math.sqrt(params.omega * params.omega + g * g)
    gap = 2.0 * root
    kappa = -model.EIGENVECTOR_SIGN * params.omega / (2.0 * root * root)
    sc = float(state.p @ chat)
    babs = abs(kappa) * cnorm * abs(sc) / mass

    open_channels = []
    any_frustrated = False
    for k in (0, 1):
        old = state.pair[k]
        de = -gap if old == 0 else gap
        if sc * sc + mass * de < 0.0:
            any_frustrated = True
            continue
        if scheme.filters_transitions:
            eps = virtual_energy_fluctuation(state.p, chat, de, mass)
            if not energy_gate(scheme.c_e, eps):
                continue
        open_channels.append(k)

    n_open = len(open_channels)
    if n_open > 0:
        x = tau * babs
        p_hop = x / (1.0 + x)
    else:
        p_hop = 0.0
    if p_hop >= 1.0:
        logger.warning("hop probability reached 1.0 (tau*|b| = %r); "
                       "clamping", tau * babs)
        p_hop = 1.0 - 1e-12

    u1 = rng.random()
    if u1 < p_hop:
        if n_open == 2:
            u2 = rng.random()
            k = open_channels[0] if u2 < 0.5 else open_channels[1]
        else:
            k = open_channels[0]
        old = state.pair[k]
        de = -gap if old == 0 else gap
        b_k = kappa * cnorm * sc / mass
        if old != 0:
            b_k = -b_k
        state.weight = state.weight * ((tau * b_k * n_open) / p_hop)
        sgn = 1.0 if sc > 0.0 else -1.0
        jump = sgn * math.sqrt(sc * sc + mass * de) - sc
        state.p = state.p + jump * chat
        new_pair = (1 - a, ap) if k == 0 else (a, 1 - ap)
        state.pair = new_pair
        state.n_hops += 1
        return state, StepOutcome(hopped=True, new_pair=new_pair,
                                  jump_applied=True, frustrated=False)

    q = 1.0 - p_hop
    state.weight = state.weight * (1.0 / q)
    return state, StepOutcome(hopped=False, new_pair=(a, ap),
                              jump_applied=False,
                              frustrated=any_frustrated)


def _sigma_element(g: float, root: float, a: int, ap: int,
                   omega: float) -> float:
    # sigma_z matrix element in the adiabatic basis, scalar form of
    # model.sigma_z_adiabatic for the hot path
    if a == ap:
        return g / root if a == 0 else -(g / root)
    return model.EIGENVECTOR_SIGN * omega / root


def run_trajectory(draw, t_grid, tau: float, scheme: FilterScheme, rng,
                   modes, params: ModelParams,
                   max_hops: Optional[int] = None) -> TrajectoryResult:
    """Propagate one initial draw and record contributions on t_grid.

    t_grid must start at 0 and be uniformly spaced by an integer multiple
    of tau.  At each grid time the recorded contribution is
    w0 * W(t) * sigma_z^{a a'}(r(t)); with observable cutting active, W is
    clamped to |W| <= c_t after every step, before recording.  A state that
    goes non-finite aborts the trajectory: the result carries all-zero
    contributions and the aborted flag so the caller can discard it.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.shape[0] < 1:
        raise ValueError("t_grid must be a non-empty 1-D array")
    if abs(t[0]) > 1e-12:
        raise ValueError("t_grid must start at t = 0")
    if t.shape[0] > 1:
        dt = t[1] - t[0]
        stride = int(round(dt / tau))
        if stride < 1 or abs(stride * tau - dt) > 1e-9:
            raise ValueError("t_grid spacing must be a multiple of tau")
        if not np.allclose(np.diff(t), dt, rtol=0.0, atol=1e-9):
            raise ValueError("t_grid must be uniformly spaced")
    else:
        stride = 1
    n_steps = stride * (t.shape[0] - 1)

    tab = mode_arrays(modes)
    if not np.all(tab.mass == tab.mass[0]):
        raise ValueError("bath modes must share a common mass")
    state = TrajectoryState(r=np.array(draw.r0, dtype=float),
                            p=np.array(draw.p0, dtype=float),
                            pair=tuple(draw.pair0), weight=1.0 + 0.0j,
                            n_hops=0, time=0.0)
    w0 = float(draw.w0)
    omega = params.omega

    out = np.zeros(t.shape[0], dtype=complex)
    g = float(tab.coup @ state.r)
    root = math.sqrt(omega * omega + g * g)
    out[0] = (w0 * state.weight) * _sigma_element(g, root, *state.pair, omega)
    max_w = abs(state.weight)

    for step in range(n_steps):
        adiabatic_segment(state, tau, tab, params)
        transition_step(state, tau, scheme, rng, tab, params,
                        max_hops=max_hops)
        g = float(tab.coup @ state.r)
        if not (math.isfinite(g)
                and math.isfinite(state.weight.real)
                and math.isfinite(state.weight.imag)):
            return TrajectoryResult(np.zeros(t.shape[0], dtype=complex),
                                    True, state.n_hops, max_w)
        if scheme.cuts_observable:
            state.weight = cut_weight(state.weight, scheme.c_t)
        aw = abs(state.weight)
        if aw > max_w:
            max_w = aw
        if (step + 1) % stride == 0:
            root = math.sqrt(omega * omega + g * g)
            out[(step + 1) // stride] = ((w0 * state.weight)
                                         * _sigma_element(g, root,
                                                          *state.pair, omega))
    return TrajectoryResult(out, False, state.n_hops, max_w)
