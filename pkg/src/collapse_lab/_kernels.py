"""Compiled hot loops for ensemble integration.

These kernels integrate a contiguous chunk of trajectories with real
amplitudes (the stock scenarios start from real states and the dynamics
has real coefficients, so amplitudes stay real).  They repeat the exact
arithmetic of ``dynamics._rk4_amplitudes`` / ``dynamics._em_amplitudes``
so that a chunk run and a scalar run of the same trajectory agree bit
for bit.  No fastmath: IEEE semantics keep results independent of how
trajectories are partitioned across workers.

Per record point the kernels write |alpha|^2, |beta|^2, alpha*beta, the
pure-state entanglement entropy term -a2*ln(a2)-b2*ln(b2), and the
absorption flag (0 open, 1 -> |00>, 2 -> |11>).  Accumulation into
ensemble moments happens outside, in numpy, with pairwise summation.

Returns are (err_traj, err_step): (-1, -1) on success, otherwise the
local trajectory index and step at which the per-step renormalization
correction exceeded 1e-3.
"""

import numpy as np
from numba import njit

_COLLAPSE = 1e-9
_FAIL = 1e-3
_FAIL_WHITE = 0.5


@njit(cache=True)
def _record(j, r, a, b, absorbed, rec_a2, rec_b2, rec_coh, rec_ent, rec_flag):
    a2 = a * a
    b2 = b * b
    rec_a2[j, r] = a2
    rec_b2[j, r] = b2
    rec_coh[j, r] = a * b
    e = 0.0
    if a2 > 0.0:
        e -= a2 * np.log(a2)
    if b2 > 0.0:
        e -= b2 * np.log(b2)
    rec_ent[j, r] = e
    rec_flag[j, r] = absorbed


@njit(cache=True)
def rk4_frozen_chunk(alpha, beta, xi, dt, J, G, n_steps, rec_stride,
                     rec_a2, rec_b2, rec_coh, rec_ent, rec_flag):
    n = alpha.shape[0]
    for j in range(n):
        a = alpha[j]
        b = beta[j]
        x = xi[j]
        a2 = a * a
        absorbed = 0
        if a2 >= 1.0 - _COLLAPSE:
            a = 1.0; b = 0.0; absorbed = 1
        elif a2 <= _COLLAPSE:
            a = 0.0; b = 1.0; absorbed = 2
        r = 0
        for k in range(n_steps):
            if absorbed == 0:
                a2 = a * a; b2 = b * b; nn = a2 + b2; s = (a2 - b2) / nn
                f = J * s + G * x
                k1a = f * (1.0 - s) * a; k1b = -f * (1.0 + s) * b
                at = a + 0.5 * dt * k1a; bt = b + 0.5 * dt * k1b
                a2 = at * at; b2 = bt * bt; nn = a2 + b2; s = (a2 - b2) / nn
                f = J * s + G * x
                k2a = f * (1.0 - s) * at; k2b = -f * (1.0 + s) * bt
                at = a + 0.5 * dt * k2a; bt = b + 0.5 * dt * k2b
                a2 = at * at; b2 = bt * bt; nn = a2 + b2; s = (a2 - b2) / nn
                f = J * s + G * x
                k3a = f * (1.0 - s) * at; k3b = -f * (1.0 + s) * bt
                at = a + dt * k3a; bt = b + dt * k3b
                a2 = at * at; b2 = bt * bt; nn = a2 + b2; s = (a2 - b2) / nn
                f = J * s + G * x
                k4a = f * (1.0 - s) * at; k4b = -f * (1.0 + s) * bt
                a = a + (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
                b = b + (dt / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
                a2 = a * a; b2 = b * b
                nrm = np.sqrt(a2 + b2)
                if not abs(nrm - 1.0) <= _FAIL:
                    return j, k
                inv = 1.0 / nrm
                a = a * inv; b = b * inv
                a2 = a * a
                if a2 >= 1.0 - _COLLAPSE:
                    a = 1.0; b = 0.0; absorbed = 1
                elif a2 <= _COLLAPSE:
                    a = 0.0; b = 1.0; absorbed = 2
            if (k + 1) % rec_stride == 0:
                _record(j, r, a, b, absorbed, rec_a2, rec_b2, rec_coh, rec_ent, rec_flag)
                r += 1
        alpha[j] = a
        beta[j] = b
    return -1, -1


@njit(cache=True)
def rk4_path_chunk(alpha, beta, xi_path, dt, J, G, n_steps, rec_stride,
                   rec_a2, rec_b2, rec_coh, rec_ent, rec_flag):
    """Same as ``rk4_frozen_chunk`` but xi varies per step (row j of ``xi_path``)."""
    n = alpha.shape[0]
    for j in range(n):
        a = alpha[j]
        b = beta[j]
        a2 = a * a
        absorbed = 0
        if a2 >= 1.0 - _COLLAPSE:
            a = 1.0; b = 0.0; absorbed = 1
        elif a2 <= _COLLAPSE:
            a = 0.0; b = 1.0; absorbed = 2
        r = 0
        for k in range(n_steps):
            if absorbed == 0:
                x = xi_path[j, k]
                a2 = a * a; b2 = b * b; nn = a2 + b2; s = (a2 - b2) / nn
                f = J * s + G * x
                k1a = f * (1.0 - s) * a; k1b = -f * (1.0 + s) * b
                at = a + 0.5 * dt * k1a; bt = b + 0.5 * dt * k1b
                a2 = at * at; b2 = bt * bt; nn = a2 + b2; s = (a2 - b2) / nn
                f = J * s + G * x
                k2a = f * (1.0 - s) * at; k2b = -f * (1.0 + s) * bt
                at = a + 0.5 * dt * k2a; bt = b + 0.5 * dt * k2b
                a2 = at * at; b2 = bt * bt; nn = a2 + b2; s = (a2 - b2) / nn
                f = J * s + G * x
                k3a = f * (1.0 - s) * at; k3b = -f * (1.0 + s) * bt
                at = a + dt * k3a; bt = b + dt * k3b
                a2 = at * at; b2 = bt * bt; nn = a2 + b2; s = (a2 - b2) / nn
                f = J * s + G * x
                k4a = f * (1.0 - s) * at; k4b = -f * (1.0 + s) * bt
                a = a + (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
                b = b + (dt / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
                a2 = a * a; b2 = b * b
                nrm = np.sqrt(a2 + b2)
                if not abs(nrm - 1.0) <= _FAIL:
                    return j, k
                inv = 1.0 / nrm
                a = a * inv; b = b * inv
                a2 = a * a
                if a2 >= 1.0 - _COLLAPSE:
                    a = 1.0; b = 0.0; absorbed = 1
                elif a2 <= _COLLAPSE:
                    a = 0.0; b = 1.0; absorbed = 2
            if (k + 1) % rec_stride == 0:
                _record(j, r, a, b, absorbed, rec_a2, rec_b2, rec_coh, rec_ent, rec_flag)
                r += 1
        alpha[j] = a
        beta[j] = b
    return -1, -1


@njit(cache=True)
def em_white_chunk(alpha, beta, dw, dt, lam, n_steps, rec_stride,
                   rec_a2, rec_b2, rec_coh, rec_ent, rec_flag):
    n = alpha.shape[0]
    sq = np.sqrt(lam)
    for j in range(n):
        a = alpha[j]
        b = beta[j]
        a2 = a * a
        absorbed = 0
        if a2 >= 1.0 - _COLLAPSE:
            a = 1.0; b = 0.0; absorbed = 1
        elif a2 <= _COLLAPSE:
            a = 0.0; b = 1.0; absorbed = 2
        r = 0
        for k in range(n_steps):
            if absorbed == 0:
                a2 = a * a; b2 = b * b; nn = a2 + b2; s = (a2 - b2) / nn
                u = sq * (1.0 - s)
                v = sq * (1.0 + s)
                w = dw[j, k]
                a = a * (1.0 + u * w - 0.5 * u * u * dt)
                b = b * (1.0 - v * w - 0.5 * v * v * dt)
                a2 = a * a; b2 = b * b
                nrm = np.sqrt(a2 + b2)
                if not abs(nrm - 1.0) <= _FAIL_WHITE:
                    return j, k
                inv = 1.0 / nrm
                a = a * inv; b = b * inv
                a2 = a * a
                if a2 >= 1.0 - _COLLAPSE:
                    a = 1.0; b = 0.0; absorbed = 1
                elif a2 <= _COLLAPSE:
                    a = 0.0; b = 1.0; absorbed = 2
            if (k + 1) % rec_stride == 0:
                _record(j, r, a, b, absorbed, rec_a2, rec_b2, rec_coh, rec_ent, rec_flag)
                r += 1
        alpha[j] = a
        beta[j] = b
    return -1, -1


@njit(cache=True)
def ou_path_chunk(xi0, dw, tau, g0, dt, out):
    """Fill ``out[j, k]`` with the Euler-Maruyama recursion of the
    mean-reverting noise, xi <- xi - (xi/tau)*dt + g0*dW, starting from
    ``xi0[j]``.  ``out[j, k]`` is the value driving step k (pre-update)."""
    n, n_steps = out.shape
    for j in range(n):
        x = xi0[j]
        for k in range(n_steps):
            out[j, k] = x
            x = x - (x / tau) * dt + g0 * dw[j, k]
    return 0
