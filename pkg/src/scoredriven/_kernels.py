"""Numba fast paths for the filter recursion.

Only the workhorse univariate cases (Gaussian and Student-t with identity
score scaling) are compiled; everything else goes through the generic
python recursion in core.py. The math here mirrors the generic path
operation for operation.
"""

import math

import numpy as np
from numba import njit

_TILDE_CLAMP = 35.0
STATE_LIMIT = 50.0


@njit(cache=True)
def _digamma(x):
    # recurrence up to a large argument, then the asymptotic expansion
    out = 0.0
    while x < 10.0:
        out -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = (
        1.0 / 12.0
        - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0)))
    )
    return out + math.log(x) - 0.5 / x - inv2 * series


@njit(cache=True)
def _map1(code, p1, p2, x):
    if code == 0:
        return x
    if x > _TILDE_CLAMP:
        x = _TILDE_CLAMP
    elif x < -_TILDE_CLAMP:
        x = -_TILDE_CLAMP
    if code == 1:
        return math.exp(x) + p1
    return p1 + (p2 - p1) / (1.0 + math.exp(-x))


@njit(cache=True)
def _jac1(code, p1, p2, x):
    if code == 0:
        return 1.0
    if x > _TILDE_CLAMP:
        x = _TILDE_CLAMP
    elif x < -_TILDE_CLAMP:
        x = -_TILDE_CLAMP
    if code == 1:
        return math.exp(x)
    sig = 1.0 / (1.0 + math.exp(-x))
    return (p2 - p1) * sig * (1.0 - sig)


@njit(cache=True)
def filter_norm(y, kappa, a, b, codes, p1, p2):
    t_len = y.shape[0]
    tilde = np.empty((t_len, 2))
    scores = np.empty((t_len, 2))
    ll = np.empty(t_len)
    state = np.empty(2)
    for j in range(2):
        state[j] = kappa[j] / (1.0 - b[j])
    bad_t = -1
    bad_j = -1
    nxt = np.empty(2)
    log2pi = math.log(2.0 * math.pi)
    for t in range(t_len):
        for j in range(2):
            tilde[t, j] = state[j]
        mu = _map1(codes[0], p1[0], p2[0], state[0])
        sg = _map1(codes[1], p1[1], p2[1], state[1])
        z = (y[t] - mu) / sg
        dmu = z / sg
        dsg = (z * z - 1.0) / sg
        s0 = _jac1(codes[0], p1[0], p2[0], state[0]) * dmu
        s1 = _jac1(codes[1], p1[1], p2[1], state[1]) * dsg
        scores[t, 0] = s0
        scores[t, 1] = s1
        ll[t] = -0.5 * log2pi - math.log(sg) - 0.5 * z * z
        state[0] = kappa[0] + a[0] * s0 + b[0] * state[0]
        state[1] = kappa[1] + a[1] * s1 + b[1] * state[1]
        ok = True
        for j in range(2):
            if not math.isfinite(state[j]) or abs(state[j]) > STATE_LIMIT:
                ok = False
                bad_t, bad_j = t, j
        if not ok:
            break
    for j in range(2):
        nxt[j] = state[j]
    return tilde, scores, ll, nxt, bad_t, bad_j


@njit(cache=True)
def filter_std(y, kappa, a, b, codes, p1, p2):
    t_len = y.shape[0]
    tilde = np.empty((t_len, 3))
    scores = np.empty((t_len, 3))
    ll = np.empty(t_len)
    state = np.empty(3)
    for j in range(3):
        state[j] = kappa[j] / (1.0 - b[j])
    bad_t = -1
    bad_j = -1
    nxt = np.empty(3)
    logpi = math.log(math.pi)
    for t in range(t_len):
        for j in range(3):
            tilde[t, j] = state[j]
        mu = _map1(codes[0], p1[0], p2[0], state[0])
        phi = _map1(codes[1], p1[1], p2[1], state[1])
        nu = _map1(codes[2], p1[2], p2[2], state[2])
        z = (y[t] - mu) / phi
        w = 1.0 + z * z / nu
        dmu = (nu + 1.0) * z / (phi * nu * w)
        dphi = -1.0 / phi + (nu + 1.0) * z * z / (nu * phi * w)
        dnu = (
            0.5 * _digamma((nu + 1.0) / 2.0)
            - 0.5 * _digamma(nu / 2.0)
            - 0.5 / nu
            - 0.5 * math.log(w)
            + (nu + 1.0) * z * z / (2.0 * nu * nu * w)
        )
        s0 = _jac1(codes[0], p1[0], p2[0], state[0]) * dmu
        s1 = _jac1(codes[1], p1[1], p2[1], state[1]) * dphi
        s2 = _jac1(codes[2], p1[2], p2[2], state[2]) * dnu
        scores[t, 0] = s0
        scores[t, 1] = s1
        scores[t, 2] = s2
        ll[t] = (
            math.lgamma((nu + 1.0) / 2.0)
            - math.lgamma(nu / 2.0)
            - 0.5 * (logpi + math.log(nu))
            - math.log(phi)
            - (nu + 1.0) / 2.0 * math.log1p(z * z / nu)
        )
        state[0] = kappa[0] + a[0] * s0 + b[0] * state[0]
        state[1] = kappa[1] + a[1] * s1 + b[1] * state[1]
        state[2] = kappa[2] + a[2] * s2 + b[2] * state[2]
        ok = True
        for j in range(3):
            if not math.isfinite(state[j]) or abs(state[j]) > STATE_LIMIT:
                ok = False
                bad_t, bad_j = t, j
        if not ok:
            break
    for j in range(3):
        nxt[j] = state[j]
    return tilde, scores, ll, nxt, bad_t, bad_j
