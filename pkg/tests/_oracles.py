"""Independent reference implementations used to freeze expected values.

Everything here is deliberately naive (plain series summation, textbook
closed forms) and shares no code with the package paths it checks.
"""

import numpy as np


def taylor_expm(a, tol=1e-22):
    """Matrix exponential by straight Taylor summation (convergent for the
    moderate norms used in tests)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    total = np.zeros_like(a)
    term = np.eye(n)
    k = 0
    while np.abs(term).sum() > tol:
        total = total + term
        k += 1
        term = term @ a / k
        if k > 300:
            raise RuntimeError("Taylor series failed to converge")
    return total


def kalman_filter(observations, a, c, q, r, m0, p0):
    """Closed-form scalar Kalman filter for x_k = a x_{k-1} + v, y = c x + w.

    Returns per-step posterior means and variances.
    """
    m, p = m0, p0
    means, variances = [], []
    for y in observations:
        m_pred = a * m
        p_pred = a * a * p + q
        s = c * c * p_pred + r
        gain = p_pred * c / s
        m = m_pred + gain * (y - c * m_pred)
        p = (1.0 - gain * c) * p_pred
        means.append(m)
        variances.append(p)
    return np.asarray(means), np.asarray(variances)


def chebyshev_by_recurrence(j, x):
    """T_j(x) via the three-term recurrence (independent of the arccos form)."""
    x = np.asarray(x, dtype=float)
    t_prev = np.ones_like(x)
    if j == 0:
        return t_prev
    t_cur = x.copy()
    for _ in range(j - 1):
        t_prev, t_cur = t_cur, 2.0 * x * t_cur - t_prev
    return t_cur


def gaussian_pdf(x, mean, variance):
    return np.exp(-0.5 * (np.asarray(x) - mean) ** 2 / variance) / np.sqrt(
        2.0 * np.pi * variance
    )
