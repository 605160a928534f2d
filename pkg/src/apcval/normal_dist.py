"""Standard normal CDF, upper tail and quantile.

Everything is carried in plain doubles on purpose: the revised t-test's
saturation depends on ``1 - p`` rounding to exactly 1.0, so no extended
precision is used anywhere.  The infinities ``math.inf`` / ``-math.inf``
act as the extended-real sentinels for ``quantile(1)`` / ``quantile(0)``.

All functions accept a Python scalar (and return a ``float``) or an array
(and return an ``ndarray``).
"""
from __future__ import annotations

import numpy as np
from scipy import special

__all__ = ["cdf", "tail", "quantile", "prob_between", "check_probability"]


def _is_scalar(x) -> bool:
    return np.ndim(x) == 0


def check_probability(p, name: str = "p") -> None:
    """Raise ``ValueError`` unless every element of `p` lies in [0, 1]."""
    arr = np.asarray(p, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")


def _check_finite(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return arr


def quantile(p):
    """Quantile function of the standard normal distribution.

    Parameters
    ----------
    p : float or array_like
        Probabilities in [0, 1].

    Returns
    -------
    float or ndarray
        ``z`` with ``cdf(z) == p``.  ``quantile(1)`` is ``+inf`` and
        ``quantile(0)`` is ``-inf``.

    Notes
    -----
    The lower half is evaluated directly; for ``p > 0.5`` the (exact)
    complement ``1 - p`` is evaluated and negated, so
    ``quantile(1 - p) == -quantile(p)`` whenever ``1 - p`` is exact.
    """
    check_probability(p)
    arr = np.asarray(p, dtype=float)
    upper = arr > 0.5
    # 1 - p is exact on [0.5, 1] (Sterbenz)
    lower_p = np.where(upper, 1.0 - arr, arr)
    z = special.ndtri(lower_p)
    z = np.where(upper, -z, z)
    if _is_scalar(p):
        return float(z)
    return z


def cdf(x):
    """Standard normal CDF, evaluated the ordinary way.

    For large positive `x` this rounds to exactly 1.0 (already at x ~ 8.3),
    which is what the naive revised-significance path relies on.
    """
    arr = _check_finite(x)
    out = special.ndtr(arr)
    if _is_scalar(x):
        return float(out)
    return out


def tail(x):
    """Upper tail ``1 - cdf(x)`` without the cancellation.

    Keeps full relative accuracy far into the tail (``tail(37)`` is about
    5.7e-300).
    """
    arr = _check_finite(x)
    out = special.ndtr(-arr)
    if _is_scalar(x):
        return float(out)
    return out


def prob_between(lo, hi):
    """``cdf(hi) - cdf(lo)`` for ``lo <= hi``, using whichever tail is small.

    Infinite bounds are allowed here.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    # P(lo < Z <= hi): subtract upper tails when both bounds sit right of 0,
    # lower tails otherwise; avoids 1 - 1 cancellation either way.
    right = lo > 0
    upper_form = special.ndtr(-lo) - special.ndtr(-hi)
    lower_form = special.ndtr(hi) - special.ndtr(lo)
    out = np.where(right, upper_form, lower_form)
    out = np.clip(out, 0.0, 1.0)
    if out.ndim == 0:
        return float(out)
    return out

