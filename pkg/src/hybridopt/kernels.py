"""Numeric inner loops.

Every kernel here has a numba path and a pure numpy/Python path. The public
names (``rk4_flow``, ``close_fail_mask``, ``ball_flight``, ``thermo_cost``)
pick one according to :data:`hybridopt._accel.USE_NUMBA`; the ``*_numba`` and
``*_numpy`` variants stay importable so the benchmark can time both.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, is_jitted, jit, py

FLOW_DONE = 0
FLOW_LEFT_C = 1
FLOW_ESCAPE = 2


# ---------------------------------------------------------------------------
# RK4 flow integration
# ---------------------------------------------------------------------------

def _rk4_step(f, x, theta, h):
    # element loops rather than array expressions: numba compiles them far faster
    m = x.shape[0]
    y = np.empty(m)
    k1 = f(x, theta)
    for i in range(m):
        y[i] = x[i] + 0.5 * h * k1[i]
    k2 = f(y, theta)
    for i in range(m):
        y[i] = x[i] + 0.5 * h * k2[i]
    k3 = f(y, theta)
    for i in range(m):
        y[i] = x[i] + h * k3[i]
    k4 = f(y, theta)
    out = np.empty(m)
    for i in range(m):
        out[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return out


def _n_steps(t0, t_end, h):
    if t_end <= t0:
        return 0
    n = int(math.ceil((t_end - t0) / h - 1e-9))
    return max(n, 1)


_n_steps = jit(_n_steps)


def _rk4_flow(f, c, x0, theta, t0, t_end, h, escape_bound):
    """Fixed-step RK4 from ``(t0, x0)`` towards ``t_end``.

    Stops at the first step whose end state fails ``c`` or leaves the
    ``escape_bound`` ball. Returns ``(ts, xs, count, code, h_fail)``; only the
    first ``count`` rows are valid and ``h_fail`` is the size of the rejected
    step (0 when ``code == FLOW_DONE``).
    """
    n_steps = _n_steps(t0, t_end, h)
    m = x0.shape[0]
    ts = np.empty(n_steps + 1)
    xs = np.empty((n_steps + 1, m))
    ts[0] = t0
    for i in range(m):
        xs[0, i] = x0[i]
    # stage input and step result; same arithmetic as _rk4_step
    y = np.empty(m)
    xn = np.empty(m)
    for k in range(1, n_steps + 1):
        if k < n_steps:
            tk = t0 + k * h
        else:
            tk = t_end
        hk = tk - ts[k - 1]
        x = xs[k - 1]
        k1 = f(x, theta)
        for i in range(m):
            y[i] = x[i] + 0.5 * hk * k1[i]
        k2 = f(y, theta)
        for i in range(m):
            y[i] = x[i] + 0.5 * hk * k2[i]
        k3 = f(y, theta)
        for i in range(m):
            y[i] = x[i] + hk * k3[i]
        k4 = f(y, theta)
        for i in range(m):
            xn[i] = x[i] + (hk / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        bad = False
        nrm = 0.0
        for i in range(m):
            if not math.isfinite(xn[i]):
                bad = True
            nrm += xn[i] * xn[i]
        if bad or math.sqrt(nrm) > escape_bound:
            return ts, xs, k, FLOW_ESCAPE, hk
        if not c(xn, theta):
            return ts, xs, k, FLOW_LEFT_C, hk
        ts[k] = tk
        for i in range(m):
            xs[k, i] = xn[i]
    return ts, xs, n_steps + 1, FLOW_DONE, 0.0


rk4_step_numba = jit(_rk4_step)
rk4_flow_numba = jit(_rk4_flow)


def rk4_step(f, x, theta, h):
    if is_jitted(f):
        return rk4_step_numba(f, x, theta, h)
    return _rk4_step(f, x, theta, h)


def rk4_flow(f, c, x0, theta, t0, t_end, h, escape_bound):
    """Dispatch: jitted kernel if both callables are jitted, else Python."""
    if is_jitted(f) and is_jitted(c):
        return rk4_flow_numba(f, c, x0, theta, t0, t_end, h, escape_bound)
    return py(_rk4_flow)(f, c, x0, theta, t0, t_end, h, escape_bound)


# ---------------------------------------------------------------------------
# (tau, eps)-closeness, one direction
# ---------------------------------------------------------------------------

def _close_fail_mask_loops(ta, ja, xa, tb, xb, seg_lo, seg_hi, eps):
    na = ta.shape[0]
    n = xa.shape[1]
    n_seg = seg_lo.shape[0]
    fail = np.zeros(na, dtype=np.bool_)
    for i in range(na):
        t = ta[i]
        j = ja[i]
        if j >= n_seg:
            fail[i] = True
            continue
        lo = seg_lo[j]
        hi = seg_hi[j]
        if hi - lo == 1:
            d2 = 0.0
            for m in range(n):
                e = xa[i, m] - xb[lo, m]
                d2 += e * e
            fail[i] = not (abs(t - tb[lo]) < eps and math.sqrt(d2) < eps)
            continue
        w0 = t - eps
        w1 = t + eps
        k0 = np.searchsorted(tb[lo:hi], w0, side="right") - 1 + lo
        if k0 < lo:
            k0 = lo
        found = False
        for k in range(k0, hi - 1):
            a0 = tb[k]
            a1 = tb[k + 1]
            if a0 > w1:
                break
            u0 = max(a0, w0)
            u1 = min(a1, w1)
            if u0 > u1:
                continue
            span = a1 - a0
            num = 0.0
            den = 0.0
            for m in range(n):
                dm = xb[k + 1, m] - xb[k, m]
                num += (xa[i, m] - xb[k, m]) * dm
                den += dm * dm
            if den > 0.0:
                s = a0 + span * num / den
            else:
                s = t
            if s < u0:
                s = u0
            elif s > u1:
                s = u1
            if u0 == u1 and not abs(t - s) < eps:
                continue
            r = (s - a0) / span if span > 0.0 else 0.0
            d2 = 0.0
            for m in range(n):
                e = xa[i, m] - (xb[k, m] + r * (xb[k + 1, m] - xb[k, m]))
                d2 += e * e
            if math.sqrt(d2) < eps:
                found = True
                break
        fail[i] = not found
    return fail


def close_fail_mask_numpy(ta, ja, xa, tb, xb, seg_lo, seg_hi, eps):
    """Vectorized over the pieces of ``b`` inside each sample's time window."""
    na = ta.shape[0]
    n_seg = seg_lo.shape[0]
    fail = np.zeros(na, dtype=bool)
    for i in range(na):
        t = ta[i]
        j = ja[i]
        if j >= n_seg:
            fail[i] = True
            continue
        lo, hi = seg_lo[j], seg_hi[j]
        if hi - lo == 1:
            d = np.linalg.norm(xa[i] - xb[lo])
            fail[i] = not (abs(t - tb[lo]) < eps and d < eps)
            continue
        seg_t = tb[lo:hi]
        k0 = max(np.searchsorted(seg_t, t - eps, side="right") - 1, 0)
        k1 = min(np.searchsorted(seg_t, t + eps, side="right"), hi - lo - 1)
        if k1 <= k0:
            k1 = k0 + 1
        a0 = seg_t[k0:k1]
        a1 = seg_t[k0 + 1:k1 + 1]
        x0 = xb[lo + k0:lo + k1]
        dx = xb[lo + k0 + 1:lo + k1 + 1] - x0
        u0 = np.maximum(a0, t - eps)
        u1 = np.minimum(a1, t + eps)
        ok = u0 <= u1
        span = a1 - a0
        den = np.einsum("ij,ij->i", dx, dx)
        num = np.einsum("ij,ij->i", xa[i] - x0, dx)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(den > 0.0, a0 + span * num / den, t)
        s = np.clip(s, u0, u1)
        ok &= ~((u0 == u1) & ~(np.abs(t - s) < eps))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(span > 0.0, (s - a0) / span, 0.0)
        d = np.linalg.norm(xa[i] - (x0 + r[:, None] * dx), axis=1)
        fail[i] = not np.any(ok & (d < eps))
    return fail


close_fail_mask_numba = jit(_close_fail_mask_loops)
close_fail_mask = close_fail_mask_numba if USE_NUMBA else close_fail_mask_numpy


# ---------------------------------------------------------------------------
# Bouncing-ball flight model, batched over decision vectors
# ---------------------------------------------------------------------------

def _ball_flight_loops(nu, xi1, xi2, T, gamma, lam):
    m, J = nu.shape
    feasible = np.zeros(m, dtype=np.bool_)
    v_pre = np.zeros((m, J))
    t_jump = np.zeros((m, J))
    p_T = np.zeros(m)
    v_T = np.zeros(m)
    s = math.sqrt(xi2 * xi2 + 2.0 * gamma * xi1)
    t1 = (xi2 + s) / gamma
    for r in range(m):
        if J == 0:
            feasible[r] = 0.0 <= T <= t1
            p_T[r] = xi1 + xi2 * T - 0.5 * gamma * T * T
            v_T[r] = xi2 - gamma * T
            continue
        t = t1
        vin = -s
        vpost = 0.0
        for j in range(J):
            t_jump[r, j] = t
            v_pre[r, j] = vin
            vpost = -lam * vin + nu[r, j]
            if j < J - 1:
                t += 2.0 * vpost / gamma
                vin = -vpost
        t_next = t + 2.0 * vpost / gamma
        feasible[r] = t <= T <= t_next
        tau = T - t
        p_T[r] = vpost * tau - 0.5 * gamma * tau * tau
        v_T[r] = vpost - gamma * tau
    return feasible, v_pre, t_jump, p_T, v_T


def ball_flight_numpy(nu, xi1, xi2, T, gamma, lam):
    """Pre-impact velocities, jump times and state at ``T`` for each row of ``nu``.

    Row ``r`` holds constant-per-jump inputs ``nu[r, j]``; the flight between
    impacts is ballistic and each impact maps ``v -> -lam*v + nu``.
    """
    nu = np.asarray(nu, dtype=float)
    m, J = nu.shape
    s = math.sqrt(xi2 * xi2 + 2.0 * gamma * xi1)
    t1 = (xi2 + s) / gamma
    v_pre = np.zeros((m, J))
    t_jump = np.zeros((m, J))
    if J == 0:
        feasible = np.full(m, 0.0 <= T <= t1)
        return (feasible, v_pre, t_jump,
                np.full(m, xi1 + xi2 * T - 0.5 * gamma * T * T), np.full(m, xi2 - gamma * T))
    t = np.full(m, t1)
    vin = np.full(m, -s)
    vpost = np.zeros(m)
    for j in range(J):
        t_jump[:, j] = t
        v_pre[:, j] = vin
        vpost = -lam * vin + nu[:, j]
        if j < J - 1:
            t = t + 2.0 * vpost / gamma
            vin = -vpost
    t_next = t + 2.0 * vpost / gamma
    feasible = (t <= T) & (T <= t_next)
    tau = T - t
    return feasible, v_pre, t_jump, vpost * tau - 0.5 * gamma * tau * tau, vpost - gamma * tau


ball_flight_numba = jit(_ball_flight_loops)
ball_flight = ball_flight_numba if USE_NUMBA else ball_flight_numpy


# ---------------------------------------------------------------------------
# Thermostat schedule cost (closed-form flows, composite Simpson)
# ---------------------------------------------------------------------------

def _band_cost_scalar(z, zmin, zmax):
    d = 0.0
    if z < zmin:
        d = zmin - z
    elif z > zmax:
        d = z - zmax
    if d <= 1.0:
        return d * d
    return 2.0 * d - 1.0


band_cost_scalar = jit(_band_cost_scalar)
_band_cost_impl = band_cost_scalar


def band_cost(z, zmin, zmax):
    """Squared distance to ``[zmin, zmax]`` within distance 1, linear growth beyond."""
    z = np.asarray(z, dtype=float)
    d = np.maximum(np.maximum(zmin - z, z - zmax), 0.0)
    return np.where(d <= 1.0, d * d, 2.0 * d - 1.0)


def _thermo_cost_loops(times, z0, q0, T, zo, zd, zmin, zmax, c_on, c_off, dt):
    J = times.shape[0]
    total = 0.0
    z = z0
    q = q0
    t_prev = 0.0
    for j in range(J + 1):
        t_end = times[j] if j < J else T
        length = t_end - t_prev
        a = zo + zd * q
        if length > 0.0:
            m = 2 * int(math.ceil(length / (2.0 * dt) - 1e-12))
            if m < 2:
                m = 2
            hs = length / m
            acc = 0.0
            for k in range(m + 1):
                zk = a + (z - a) * math.exp(-k * hs)
                w = 1.0 if (k == 0 or k == m) else (4.0 if k % 2 == 1 else 2.0)
                acc += w * _band_cost_impl(zk, zmin, zmax)
            total += acc * hs / 3.0
            z = a + (z - a) * math.exp(-length)
        if j < J:
            total += c_off * q + c_on * (1.0 - q)
            q = 1.0 - q
        t_prev = t_end
    if z < zmin or z > zmax:
        return math.inf, z
    return total + _band_cost_impl(z, zmin, zmax), z


def thermo_cost_numpy(times, z0, q0, T, zo, zd, zmin, zmax, c_on, c_off, dt):
    """Cost of switching at ``times`` from ``(z0, q0)`` up to ``T``.

    Returns ``(cost, z(T))``; cost is ``inf`` when ``z(T)`` misses the band.
    """
    total = 0.0
    z, q = z0, q0
    bounds = np.concatenate(([0.0], np.asarray(times, dtype=float), [T]))
    J = len(bounds) - 2
    for j in range(J + 1):
        length = bounds[j + 1] - bounds[j]
        a = zo + zd * q
        if length > 0.0:
            m = max(2, 2 * int(math.ceil(length / (2.0 * dt) - 1e-12)))
            hs = length / m
            zk = a + (z - a) * np.exp(-hs * np.arange(m + 1))
            w = np.ones(m + 1)
            w[1:-1:2] = 4.0
            w[2:-1:2] = 2.0
            total += float(w @ band_cost(zk, zmin, zmax)) * hs / 3.0
            z = a + (z - a) * math.exp(-length)
        if j < J:
            total += c_off * q + c_on * (1.0 - q)
            q = 1.0 - q
    if z < zmin or z > zmax:
        return math.inf, z
    return total + float(band_cost(z, zmin, zmax)), z


thermo_cost_numba = jit(_thermo_cost_loops)
thermo_cost = thermo_cost_numba if USE_NUMBA else thermo_cost_numpy
