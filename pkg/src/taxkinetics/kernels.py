"""Hot loops of the kinetic model: one dynamics bracket and the RK4 driver.

Every kernel exists twice: a numba ``@njit`` version written as explicit
loops, and a vectorized numpy version.  Both take the same arguments and
return the same values; the module-level switch :data:`USE_NUMBA` picks one.

Array conventions (0-based):

* ``x`` has shape ``(n, m)``: class ``j``, sector ``a``.
* ``down[h, b, k, g]``: probability rate that an ``(h, b)`` individual drops
  to class ``h - 1`` after paying a ``(k, g)`` individual.
* ``up[h, b, k, g]``: rate that ``(h, b)`` climbs to ``h + 1`` after being
  paid by ``(k, g)``.
* ``tax[h, k, g]``: ``p[h, k] * S * theta[k, g]``, the tax flux generated
  when ``h`` pays ``(k, g)``.
* ``inv_gap[j] = 1 / (r[j + 1] - r[j])``.
"""
import numpy as np

from ._backend import HAVE_NUMBA, njit, numba_requested

USE_NUMBA = numba_requested()


def use_numba(flag: bool) -> bool:
    """Switch backend at runtime; returns the previous setting."""
    global USE_NUMBA
    previous = USE_NUMBA
    USE_NUMBA = bool(flag) and HAVE_NUMBA
    return previous


# --------------------------------------------------------------------------
# numba kernels
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _bracket_nb(x, down, up, tax, inv_gap, out):
    n, m = x.shape
    total = 0.0
    class_tot = np.zeros(n)
    for j in range(n):
        s = 0.0
        for a in range(m):
            s += x[j, a]
        class_tot[j] = s
        total += s
    eligible = total - class_tot[n - 1]

    for j in range(n):
        for a in range(m):
            out[j, a] = 0.0

    # tax paid per payer class, and total tax flux
    pay = np.zeros(n)
    flux = 0.0
    for h in range(n):
        s = 0.0
        for k in range(n):
            for g in range(m):
                s += tax[h, k, g] * x[k, g]
        pay[h] = s
        flux += class_tot[h] * s

    for h in range(n):
        for b in range(m):
            dr = 0.0
            ur = 0.0
            for k in range(n):
                for g in range(m):
                    dr += down[h, b, k, g] * x[k, g]
                    ur += up[h, b, k, g] * x[k, g]
            xh = x[h, b]
            if h >= 1:
                f = xh * (dr + pay[h] * inv_gap[h - 1] * eligible / total)
                out[h, b] -= f
                out[h - 1, b] += f
            if h <= n - 2:
                f = xh * (ur + flux * inv_gap[h] / total)
                out[h, b] -= f
                out[h + 1, b] += f


@njit(cache=True, nogil=True)
def _audit_rhs_nb(x, sigma, down, up, tax, down_a, up_a, tax_a, inv_gap, out, work):
    _bracket_nb(x, down, up, tax, inv_gap, out)
    if sigma != 0.0:
        _bracket_nb(x, down_a, up_a, tax_a, inv_gap, work)
        n, m = x.shape
        for j in range(n):
            for a in range(m):
                out[j, a] += sigma * (work[j, a] - out[j, a])


@njit(cache=True, nogil=True)
def _rk4_nb(x0, sigma, down, up, tax, down_a, up_a, tax_a, inv_gap,
            dt, tol, n_steps, record_every, stop_at_tol):
    n, m = x0.shape
    x = x0.copy()
    k1 = np.empty_like(x)
    k2 = np.empty_like(x)
    k3 = np.empty_like(x)
    k4 = np.empty_like(x)
    y = np.empty_like(x)
    work = np.empty_like(x)
    n_rec = n_steps // record_every + 2
    samples = np.empty((n_rec, n, m))
    sample_steps = np.empty(n_rec, dtype=np.int64)
    samples[0] = x
    sample_steps[0] = 0
    count = 1
    residual = np.inf
    step = 0
    while True:
        _audit_rhs_nb(x, sigma, down, up, tax, down_a, up_a, tax_a, inv_gap, k1, work)
        residual = np.max(np.abs(k1))
        if (stop_at_tol and residual <= tol) or step >= n_steps:
            break
        for j in range(n):
            for a in range(m):
                y[j, a] = x[j, a] + 0.5 * dt * k1[j, a]
        _audit_rhs_nb(y, sigma, down, up, tax, down_a, up_a, tax_a, inv_gap, k2, work)
        for j in range(n):
            for a in range(m):
                y[j, a] = x[j, a] + 0.5 * dt * k2[j, a]
        _audit_rhs_nb(y, sigma, down, up, tax, down_a, up_a, tax_a, inv_gap, k3, work)
        for j in range(n):
            for a in range(m):
                y[j, a] = x[j, a] + dt * k3[j, a]
        _audit_rhs_nb(y, sigma, down, up, tax, down_a, up_a, tax_a, inv_gap, k4, work)
        for j in range(n):
            for a in range(m):
                x[j, a] += dt / 6.0 * (k1[j, a] + 2.0 * k2[j, a] + 2.0 * k3[j, a] + k4[j, a])
        step += 1
        if step % record_every == 0:
            samples[count] = x
            sample_steps[count] = step
            count += 1
    if sample_steps[count - 1] != step:
        samples[count] = x
        sample_steps[count] = step
        count += 1
    return x, step, residual, samples[:count], sample_steps[:count]


# --------------------------------------------------------------------------
# numpy fallback
# --------------------------------------------------------------------------

def _bracket_np(x, down, up, tax, inv_gap, out):
    class_tot = x.sum(axis=1)
    total = class_tot.sum()
    eligible = total - class_tot[-1]
    pay = np.einsum("hkg,kg->h", tax, x)
    flux = class_tot @ pay
    dr = np.einsum("hbkg,kg->hb", down, x)
    ur = np.einsum("hbkg,kg->hb", up, x)

    fall = x[1:] * (dr[1:] + (pay[1:] * inv_gap * eligible / total)[:, None])
    rise = x[:-1] * (ur[:-1] + (flux * inv_gap / total)[:, None])
    out[...] = 0.0
    out[1:] -= fall
    out[:-1] += fall
    out[:-1] -= rise
    out[1:] += rise


def _audit_rhs_np(x, sigma, down, up, tax, down_a, up_a, tax_a, inv_gap, out, work):
    _bracket_np(x, down, up, tax, inv_gap, out)
    if sigma != 0.0:
        _bracket_np(x, down_a, up_a, tax_a, inv_gap, work)
        out += sigma * (work - out)


def _rk4_np(x0, sigma, down, up, tax, down_a, up_a, tax_a, inv_gap,
            dt, tol, n_steps, record_every, stop_at_tol):
    args = (sigma, down, up, tax, down_a, up_a, tax_a, inv_gap)
    x = x0.copy()
    k1, k2, k3, k4, work = (np.empty_like(x) for _ in range(5))
    samples = [x.copy()]
    sample_steps = [0]
    step = 0
    while True:
        _audit_rhs_np(x, *args, k1, work)
        residual = np.max(np.abs(k1))
        if (stop_at_tol and residual <= tol) or step >= n_steps:
            break
        _audit_rhs_np(x + 0.5 * dt * k1, *args, k2, work)
        _audit_rhs_np(x + 0.5 * dt * k2, *args, k3, work)
        _audit_rhs_np(x + dt * k3, *args, k4, work)
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        step += 1
        if step % record_every == 0:
            samples.append(x.copy())
            sample_steps.append(step)
    if sample_steps[-1] != step:
        samples.append(x.copy())
        sample_steps.append(step)
    return x, step, residual, np.array(samples), np.array(sample_steps, dtype=np.int64)


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def bracket(x, down, up, tax, inv_gap, out=None):
    """One dynamics bracket (gain minus loss) for a fixed set of rates."""
    if out is None:
        out = np.empty_like(x)
    (_bracket_nb if USE_NUMBA else _bracket_np)(x, down, up, tax, inv_gap, out)
    return out


def audit_rhs(x, sigma, down, up, tax, down_a, up_a, tax_a, inv_gap, out=None):
    """Blend of the plain and audited brackets, ``b + sigma * (b_audit - b)``."""
    if out is None:
        out = np.empty_like(x)
    work = np.empty_like(x)
    fn = _audit_rhs_nb if USE_NUMBA else _audit_rhs_np
    fn(x, float(sigma), down, up, tax, down_a, up_a, tax_a, inv_gap, out, work)
    return out


def rk4(x0, sigma, down, up, tax, down_a, up_a, tax_a, inv_gap,
        dt, tol, n_steps, record_every, stop_at_tol):
    """Fixed-step classical RK4 on the audit dynamics.

    Returns ``(x, steps, residual, samples, sample_steps)`` where ``residual``
    is the inf-norm of the rates at the returned state.
    """
    fn = _rk4_nb if USE_NUMBA else _rk4_np
    return fn(np.ascontiguousarray(x0, dtype=np.float64), float(sigma),
              down, up, tax, down_a, up_a, tax_a, inv_gap,
              float(dt), float(tol), int(n_steps), int(record_every), bool(stop_at_tol))
