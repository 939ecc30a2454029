"""Pure-Python/numpy implementations of the hot kernels.

Signatures mirror ``_kernels.pyx`` exactly; output arrays are written in place.
"""
import math

import numpy as np

BACKEND = "python"


def cartpole_step(x, x_dot, theta, theta_dot, force, gravity, masscart, masspole, length, tau):
    total_mass = masscart + masspole
    polemass_length = masspole * length
    costheta = math.cos(theta)
    sintheta = math.sin(theta)
    temp = (force + polemass_length * theta_dot * theta_dot * sintheta) / total_mass
    thetaacc = (gravity * sintheta - costheta * temp) / (
        length * (4.0 / 3.0 - masspole * costheta * costheta / total_mass)
    )
    xacc = temp - polemass_length * thetaacc * costheta / total_mass
    return (
        x + tau * x_dot,
        x_dot + tau * xacc,
        theta + tau * theta_dot,
        theta_dot + tau * thetaacc,
    )


def ac_forward(W1, b1, Wa, ba, Wc, bc, obs, h, probs, logp):
    np.maximum(W1 @ obs + b1, 0.0, out=h)
    z = Wa @ h + ba
    z -= z.max()
    np.subtract(z, math.log(np.exp(z).sum()), out=logp)
    np.exp(logp, out=probs)
    return float(Wc[0] @ h + bc[0])


def ac_backward(Wa, Wc, obs, h, dlogits, dvalue, gW1, gb1, gWa, gba, gWc, gbc):
    gWa[...] = dlogits.T @ h
    gba[...] = dlogits.sum(axis=0)
    gWc[0, :] = dvalue @ h
    gbc[0] = dvalue.sum()
    dh = dlogits @ Wa + np.outer(dvalue, Wc[0])
    dh *= h > 0.0
    gW1[...] = dh.T @ obs
    gb1[...] = dh.sum(axis=0)
