# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same signatures as ``_kernels_py``."""
from libc.math cimport cos, sin, exp, log

BACKEND = "cython"


def cartpole_step(double x, double x_dot, double theta, double theta_dot, double force,
                  double gravity, double masscart, double masspole, double length, double tau):
    cdef double total_mass = masscart + masspole
    cdef double polemass_length = masspole * length
    cdef double costheta = cos(theta)
    cdef double sintheta = sin(theta)
    cdef double temp = (force + polemass_length * theta_dot * theta_dot * sintheta) / total_mass
    cdef double thetaacc = (gravity * sintheta - costheta * temp) / (
        length * (4.0 / 3.0 - masspole * costheta * costheta / total_mass))
    cdef double xacc = temp - polemass_length * thetaacc * costheta / total_mass
    return (x + tau * x_dot, x_dot + tau * xacc,
            theta + tau * theta_dot, theta_dot + tau * thetaacc)


def ac_forward(const double[:, ::1] W1, const double[::1] b1, const double[:, ::1] Wa,
               const double[::1] ba, const double[:, ::1] Wc, const double[::1] bc,
               const double[::1] obs, double[::1] h, double[::1] probs, double[::1] logp):
    cdef Py_ssize_t H = W1.shape[0], D = W1.shape[1], A = Wa.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc, zmax, norm
    for i in range(H):
        acc = b1[i]
        for j in range(D):
            acc += W1[i, j] * obs[j]
        h[i] = acc if acc > 0.0 else 0.0
    for i in range(A):
        acc = ba[i]
        for j in range(H):
            acc += Wa[i, j] * h[j]
        logp[i] = acc
    zmax = logp[0]
    for i in range(1, A):
        if logp[i] > zmax:
            zmax = logp[i]
    norm = 0.0
    for i in range(A):
        logp[i] -= zmax
        norm += exp(logp[i])
    norm = log(norm)
    for i in range(A):
        logp[i] -= norm
        probs[i] = exp(logp[i])
    acc = bc[0]
    for j in range(H):
        acc += Wc[0, j] * h[j]
    return acc


def ac_backward(const double[:, ::1] Wa, const double[:, ::1] Wc, const double[:, ::1] obs,
                const double[:, ::1] h, const double[:, ::1] dlogits, const double[::1] dvalue,
                double[:, ::1] gW1, double[::1] gb1, double[:, ::1] gWa, double[::1] gba,
                double[:, ::1] gWc, double[::1] gbc):
    cdef Py_ssize_t T = obs.shape[0], D = obs.shape[1], H = h.shape[1], A = dlogits.shape[1]
    cdef Py_ssize_t t, i, j
    cdef double dh
    gW1[:, :] = 0.0
    gb1[:] = 0.0
    gWa[:, :] = 0.0
    gba[:] = 0.0
    gWc[:, :] = 0.0
    gbc[0] = 0.0
    for t in range(T):
        gbc[0] += dvalue[t]
        for i in range(A):
            gba[i] += dlogits[t, i]
        for j in range(H):
            if h[t, j] <= 0.0:
                continue
            gWc[0, j] += dvalue[t] * h[t, j]
            dh = dvalue[t] * Wc[0, j]
            for i in range(A):
                gWa[i, j] += dlogits[t, i] * h[t, j]
                dh += dlogits[t, i] * Wa[i, j]
            gb1[j] += dh
            for i in range(D):
                gW1[j, i] += dh * obs[t, i]
