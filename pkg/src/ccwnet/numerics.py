"""Numerically stable sigmoid-family primitives shared across the package.

All functions accept scalars or arrays and never overflow: the log forms
stay finite for |t| well beyond 1e4.
"""

import numpy as np

__all__ = ["sigmoid", "log_sigmoid", "log1m_sigmoid"]


def sigmoid(t):
    """psi(t) = exp(t) / (1 + exp(t)), evaluated without overflow."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return float(out) if out.ndim == 0 else out


def log_sigmoid(t):
    """log psi(t) = -log(1 + exp(-t))."""
    out = -np.logaddexp(0.0, -np.asarray(t, dtype=float))
    return float(out) if out.ndim == 0 else out


def log1m_sigmoid(t):
    """log(1 - psi(t)) = -log(1 + exp(t))."""
    out = -np.logaddexp(0.0, np.asarray(t, dtype=float))
    return float(out) if out.ndim == 0 else out
