# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory kernel.

Same stepping arithmetic as propagator.py, restated as flat C loops: one
velocity-Verlet segment with trapezoidal Bohr phase, one transition
attempt consuming uniforms from the caller's buffer, weight cutting, and
strided recording of w0 * W * sigma_z^{aa'}.  Expression forms follow the
Python reference operation-for-operation so both backends agree to
rounding-level differences (dot products are the one place the summation
order differs, numpy delegating those to BLAS).

cdivision is required: the transition filter relies on IEEE x/0 = inf to
close channels with no momentum along the coupling direction.
"""

from libc.math cimport sqrt, cos, sin, fabs, hypot, nextafter, isfinite
from libc.stdlib cimport malloc, free

import numpy as np


cdef double _ddot(const double* x, const double* y, Py_ssize_t n) noexcept:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(n):
        acc += x[i] * y[i]
    return acc


cdef class Runner:
    """One bound configuration; __call__ propagates a single trajectory."""

    cdef double[::1] coup, mass, mw2, chat
    cdef double omega, omega2, tau, half_tau, c_t, c_e, mass0, cnorm, eig_sign
    cdef Py_ssize_t n_modes, n_steps, record_stride
    cdef int max_hops
    cdef bint cut_active, gate_active

    def __init__(self, double omega, freq, coup, mass, double tau,
                 Py_ssize_t n_steps, Py_ssize_t record_stride, int max_hops,
                 double c_t, double c_e, double eig_sign):
        freq = np.ascontiguousarray(freq, dtype=np.float64)
        self.coup = np.ascontiguousarray(coup, dtype=np.float64)
        self.mass = np.ascontiguousarray(mass, dtype=np.float64)
        self.n_modes = self.coup.shape[0]
        if self.n_modes < 1:
            raise ValueError("need at least one bath mode")
        if freq.shape[0] != self.n_modes or self.mass.shape[0] != self.n_modes:
            raise ValueError("freq/coup/mass length mismatch")
        # mass[j] * (freq[j]^2), matching the numpy evaluation order
        mw2 = np.empty(self.n_modes, dtype=np.float64)
        cdef Py_ssize_t j
        cdef double[::1] fv = freq
        cdef double[::1] mw2v = mw2
        for j in range(self.n_modes):
            mw2v[j] = self.mass[j] * (fv[j] * fv[j])
        self.mw2 = mw2
        self.omega = omega
        self.omega2 = omega * omega
        self.tau = tau
        self.half_tau = 0.5 * tau
        self.n_steps = n_steps
        self.record_stride = record_stride
        self.max_hops = max_hops
        self.c_t = c_t
        self.c_e = c_e
        self.cut_active = isfinite(c_t)
        self.gate_active = isfinite(c_e)
        self.eig_sign = eig_sign
        self.mass0 = self.mass[0]
        self.cnorm = sqrt(_ddot(&self.coup[0], &self.coup[0], self.n_modes))
        chat = np.zeros(self.n_modes, dtype=np.float64)
        cdef double[::1] chv = chat
        if self.cnorm != 0.0:
            for j in range(self.n_modes):
                chv[j] = self.coup[j] / self.cnorm
        self.chat = chat

    def __call__(self, double[::1] r, double[::1] p, int a, int ap,
                 double w0, const double[::1] uniforms,
                 double complex[::1] out):
        """Propagate (r, p, pair) in place; fill out with contributions.

        Returns (n_hops, aborted, max_weight).  uniforms must hold at
        least 2*n_steps entries; out exactly n_steps//record_stride + 1.
        """
        cdef Py_ssize_t n = self.n_modes
        cdef Py_ssize_t n_rec = self.n_steps // self.record_stride + 1
        if out.shape[0] != n_rec:
            raise ValueError("output buffer has wrong length")
        if r.shape[0] != n or p.shape[0] != n:
            raise ValueError("phase-space arrays have wrong length")
        if uniforms.shape[0] < 2 * self.n_steps:
            raise ValueError("uniform buffer too short")

        cdef double wr = 1.0, wi = 0.0
        cdef double g, root, g_new, root_new, eta, coef, f, ph, c, s
        cdef double kappa, sc, babs, x, p_hop, u1, u2, de, rad, eps
        cdef double b_k, factor, q, sgn, jump, aw, scale, sig, cre, cim
        cdef double max_w
        cdef Py_ssize_t step, j, u_idx = 0, rec, k
        cdef int old, n_open, open0, open1, n_hops = 0
        cdef bint aborted = False

        g = _ddot(&self.coup[0], &r[0], n)
        root = sqrt(self.omega2 + g * g)
        sig = self._sigma_element(g, root, a, ap)
        out[0] = (w0 * wr) * sig + ((w0 * wi) * sig) * 1j
        max_w = hypot(wr, wi)

        for step in range(self.n_steps):
            # --- adiabatic segment (velocity Verlet + Bohr phase) ---
            if a == ap:
                eta = 1.0 if a == 0 else -1.0
            else:
                eta = 0.0
            coef = eta * g / root
            for j in range(n):
                f = -(self.mw2[j] * r[j]) + coef * self.coup[j]
                p[j] = p[j] + self.half_tau * f
                r[j] = r[j] + self.tau * (p[j] / self.mass[j])
            g_new = _ddot(&self.coup[0], &r[0], n)
            root_new = sqrt(self.omega2 + g_new * g_new)
            coef = eta * g_new / root_new
            for j in range(n):
                f = -(self.mw2[j] * r[j]) + coef * self.coup[j]
                p[j] = p[j] + self.half_tau * f
            if a != ap:
                ph = self.tau * (a - ap) * (root + root_new)
                c = cos(ph)
                s = sin(ph)
                # complex multiply, CPython operand order
                f = wr * c - wi * s
                wi = wr * s + wi * c
                wr = f

            # --- transition attempt ---
            if n_hops < self.max_hops and self.cnorm != 0.0:
                kappa = -self.eig_sign * self.omega / (2.0 * root_new * root_new)
                sc = _ddot(&p[0], &self.chat[0], n)
                babs = fabs(kappa) * self.cnorm * fabs(sc) / self.mass0
                open0 = self._channel_open(a, sc, root_new)
                open1 = self._channel_open(ap, sc, root_new)
                n_open = open0 + open1
                if n_open > 0:
                    x = self.tau * babs
                    p_hop = x / (1.0 + x)
                else:
                    p_hop = 0.0
                if p_hop >= 1.0:
                    p_hop = 1.0 - 1e-12
                u1 = uniforms[u_idx]
                u_idx += 1
                if u1 < p_hop:
                    if n_open == 2:
                        u2 = uniforms[u_idx]
                        u_idx += 1
                        k = 0 if u2 < 0.5 else 1
                    else:
                        k = 0 if open0 else 1
                    old = a if k == 0 else ap
                    de = -(2.0 * root_new) if old == 0 else 2.0 * root_new
                    b_k = kappa * self.cnorm * sc / self.mass0
                    if old != 0:
                        b_k = -b_k
                    factor = (self.tau * b_k * n_open) / p_hop
                    wr = wr * factor
                    wi = wi * factor
                    sgn = 1.0 if sc > 0.0 else -1.0
                    jump = sgn * sqrt(sc * sc + self.mass0 * de) - sc
                    for j in range(n):
                        p[j] = p[j] + jump * self.chat[j]
                    if k == 0:
                        a = 1 - a
                    else:
                        ap = 1 - ap
                    n_hops += 1
                else:
                    q = 1.0 - p_hop
                    factor = 1.0 / q
                    wr = wr * factor
                    wi = wi * factor

            if not (isfinite(g_new) and isfinite(wr) and isfinite(wi)):
                aborted = True
                break

            # --- observable cutting and bookkeeping ---
            if self.cut_active:
                aw = hypot(wr, wi)
                if aw > self.c_t:
                    scale = self.c_t / aw
                    while hypot(wr * scale, wi * scale) > self.c_t:
                        scale = nextafter(scale, 0.0)
                    wr = wr * scale
                    wi = wi * scale
            aw = hypot(wr, wi)
            if aw > max_w:
                max_w = aw

            if (step + 1) % self.record_stride == 0:
                rec = (step + 1) // self.record_stride
                sig = self._sigma_element(g_new, root_new, a, ap)
                cre = (w0 * wr) * sig
                cim = (w0 * wi) * sig
                out[rec] = cre + cim * 1j

            g = g_new
            root = root_new

        if aborted:
            for rec in range(n_rec):
                out[rec] = 0.0
        return n_hops, aborted, max_w

    cdef double _sigma_element(self, double g, double root, int a,
                               int ap) noexcept:
        if a == ap:
            return g / root if a == 0 else -(g / root)
        return self.eig_sign * self.omega / root

    cdef int _channel_open(self, int old, double sc, double root) noexcept:
        cdef double de, eps
        de = -(2.0 * root) if old == 0 else 2.0 * root
        if sc * sc + self.mass0 * de < 0.0:
            return 0
        if self.gate_active:
            # closed form of the approximate-shift energy mismatch;
            # sc = 0 gives +inf (cdivision) and closes the channel
            eps = 1.5 * de + self.mass0 * de * de / (8.0 * sc * sc)
            if fabs(eps) > self.c_e:
                return 0
        return 1


name = "cython"


def make_runner(params, tab, scheme, tau, n_steps, record_stride, max_hops,
                eig_sign):
    """Backend protocol entry point; mirrors python_backend.make_runner."""
    return Runner(params.omega, tab.freq, tab.coup, tab.mass, tau,
                  n_steps, record_stride, max_hops, scheme.c_t, scheme.c_e,
                  eig_sign)
