"""Statistical-error filters for the surface-hopping-style weights.

Two independent mechanisms, combinable:

* observable cutting: rescale the running weight factor so its magnitude
  never exceeds a threshold c_t (the initial-sampling factor is exempt);
* transition filtering: suppress hop channels whose virtual energy
  fluctuation exceeds a budget c_E in magnitude.

`FilterScheme` is a small tagged object so the estimator and CLI can pass
one value around instead of three.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FilterScheme",
    "virtual_energy_fluctuation",
    "energy_gate",
    "filtered_probabilities",
    "cut_weight",
]

_SCHEME_NAMES = ("none", "observable_cut", "transition_filter", "combined")


@dataclass(frozen=True)
class FilterScheme:
    """Filter selection: which mechanisms are active and their thresholds.

    name must be one of 'none', 'observable_cut', 'transition_filter',
    'combined'.  c_t is required (finite, positive) when cutting is active,
    c_E when transition filtering is active; inactive thresholds are stored
    as +inf so downstream code can apply them unconditionally.
    """

    name: str
    c_t: float = math.inf
    c_e: float = math.inf

    def __post_init__(self):
        if self.name not in _SCHEME_NAMES:
            raise ValueError(f"unknown filter scheme {self.name!r}; expected "
                             f"one of {', '.join(_SCHEME_NAMES)}")
        if self.cuts_observable:
            if not (self.c_t > 0 and math.isfinite(self.c_t)):
                raise ValueError("observable cutting requires a finite "
                                 "positive c_t")
        elif math.isfinite(self.c_t):
            raise ValueError(f"c_t given but scheme {self.name!r} does not "
                             "cut the observable")
        if self.filters_transitions:
            if not (self.c_e > 0 and math.isfinite(self.c_e)):
                raise ValueError("transition filtering requires a finite "
                                 "positive c_E")
        elif math.isfinite(self.c_e):
            raise ValueError(f"c_E given but scheme {self.name!r} does not "
                             "filter transitions")

    @property
    def cuts_observable(self) -> bool:
        return self.name in ("observable_cut", "combined")

    @property
    def filters_transitions(self) -> bool:
        return self.name in ("transition_filter", "combined")


def virtual_energy_fluctuation(p, d_hat, delta_e: float, mass: float) -> float:
    """Energy mismatch of the rescaled momentum against the surface change.

    With s = P . d_hat the candidate momentum is P' = P + (M dE / (2 s))
    d_hat and the fluctuation is

        E' = P'^2/(2M) + E_alpha - (P^2/(2M) + E_beta)
           = (3/2) dE + M dE^2 / (8 s^2),

    where dE = E_alpha - E_beta is the electronic energy change of the
    attempted hop.  Even parity in s: only s^2 enters.  s = 0 returns +inf
    (no momentum component along the coupling direction, nothing can
    compensate the surface change).
    """
    p = np.asarray(p, dtype=float)
    d_hat = np.asarray(d_hat, dtype=float)
    s = float(p @ d_hat)
    if s == 0.0:
        return math.inf
    shift = mass * delta_e / (2.0 * s)
    p_new = p + shift * d_hat
    return float((p_new @ p_new - p @ p) / (2.0 * mass) + delta_e)


def energy_gate(c_e: float, epsilon: float) -> int:
    """Open/closed state (1/0) of a hop channel under energy budget c_E.

    The channel stays open while |epsilon| <= c_E.  An infinite budget
    admits everything, including the +inf sentinel from a vanishing
    momentum projection (inf <= inf holds), matching the unfiltered scheme
    where that channel is closed elsewhere by the zero-rate check rather
    than here.
    """
    return 1 if abs(epsilon) <= c_e else 0


def filtered_probabilities(p, d_vec, tau: float, mass: float,
                           gate_value: int) -> tuple[float, float]:
    """Hop/stay probabilities for one short-time step of a single channel.

    b = (P/M) . d sets the transition rate; x = tau |b| gate.  Returns
    (P_hop, Q) = (x/(1+x), 1 - x/(1+x)); computing Q by subtraction makes
    the pair sum to 1 exactly in floating point, which the weight
    bookkeeping relies on.  gate_value = 1 recovers the unfiltered
    probabilities.
    """
    if gate_value not in (0, 1):
        raise ValueError("gate_value must be 0 or 1")
    p = np.asarray(p, dtype=float)
    d_vec = np.asarray(d_vec, dtype=float)
    b = float(p @ d_vec) / mass
    x = tau * abs(b) * gate_value
    hop = x / (1.0 + x)
    return hop, 1.0 - hop


def cut_weight(w: complex, c_t: float) -> complex:
    """Rescale w so |w| <= c_t, preserving its phase.

    Identity whenever |w| already fits (including w = 0).  The scale factor
    c_t/|w| can round |w * scale| a hair above c_t, so the factor is walked
    down with nextafter until the bound holds strictly; the loop runs at
    most a couple of times.
    """
    a = abs(w)
    if a <= c_t:
        return w
    scale = c_t / a
    out = w * scale
    while abs(out) > c_t:
        scale = math.nextafter(scale, 0.0)
        out = w * scale
    return out
