"""Admission tests for APC systems and their sample-size planners.

Four regimes are implemented:

* ``TTEST`` -- the classic criterion ``|D| <= z(1-a/2) v_hat / sqrt(n)``.
  It only controls the manufacturer's risk.
* ``REVISED_TTEST`` -- the t-test with a post-hoc significance level chosen
  so that the user's risk stays at ``beta_t`` for the observed ``v_hat``.
  Evaluated naively in double precision on purpose: once the revised level
  gets small enough that ``1 - alpha_hat/2`` rounds to 1, the quantile is
  infinite and every system passes.
* ``EQUIVALENCE`` -- the symmetric two one-sided tests criterion
  ``|D| <= delta - z(1-a_e) v_hat / sqrt(n)``.
* ``INDUCED_EQUIVALENCE`` -- the equivalence test with the t-test's
  parameters mapped by :func:`induce_params`.  Algebraically it gives the
  same threshold as the revised t-test, but without the quantile round trip.

All criteria are "<=" comparisons, so hitting the threshold exactly passes.
Normal quantiles are used throughout, not Student-t.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

from .normal_dist import quantile, tail
from .sde_model import CountSample, SampleSummary, summarize

__all__ = [
    "Regime",
    "Decision",
    "Mode",
    "TTestParams",
    "EquivParams",
    "Verdict",
    "RevisedAlpha",
    "plan_n_t",
    "plan_n_t_real",
    "plan_n_e",
    "plan_n_e_real",
    "ttest_threshold",
    "ttest_pass",
    "revised_alpha",
    "revised_alpha_planned",
    "revised_threshold",
    "min_n_bound",
    "revised_ttest_pass",
    "equivalence_threshold",
    "equivalence_pass",
    "induce_params",
    "deduce_params",
    "normalized_threshold_t",
    "normalized_threshold_e",
    "criterion_threshold",
    "run_validation",
]


class Regime(str, enum.Enum):
    TTEST = "ttest"
    REVISED_TTEST = "revised"
    EQUIVALENCE = "equivalence"
    INDUCED_EQUIVALENCE = "induced"


class Decision(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"


class Mode(str, enum.Enum):
    REGULAR = "REGULAR"
    ALWAYS_FAIL = "ALWAYS_FAIL"
    ALWAYS_PASS = "ALWAYS_PASS"


def _check_open_unit(value: float, name: str) -> None:
    if not (0.0 < value < 1.0):
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")


def _check_positive(value: float, name: str) -> None:
    if not (value > 0.0):
        raise ValueError(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class TTestParams:
    """Parameters in the t-test framing.

    ``alpha_t`` is the manufacturer's risk (rejecting an unbiased system),
    ``beta_t`` the user's risk (admitting a system whose systematic error
    is ``d_r``).  ``v`` is the a-priori standard deviation of the relative
    differences; it is only needed for planning and diagnostics.
    """

    alpha_t: float = 0.05
    beta_t: float = 0.025
    d_r: float = 0.01
    v: float | None = None

    def __post_init__(self):
        _check_open_unit(self.alpha_t, "alpha_t")
        _check_open_unit(self.beta_t, "beta_t")
        _check_positive(self.d_r, "d_r")
        if self.v is not None:
            _check_positive(self.v, "v")


@dataclass(frozen=True)
class EquivParams:
    """Parameters in the equivalence framing.

    Here ``alpha_e`` is (half) the user's risk and ``beta_e`` the
    manufacturer's risk: the roles are swapped relative to
    :class:`TTestParams`.
    """

    alpha_e: float = 0.025
    beta_e: float = 0.05
    delta: float = 0.01
    v: float | None = None

    def __post_init__(self):
        _check_open_unit(self.alpha_e, "alpha_e")
        _check_open_unit(self.beta_e, "beta_e")
        _check_positive(self.delta, "delta")
        if self.v is not None:
            _check_positive(self.v, "v")


Params = Union[TTestParams, EquivParams]


@dataclass(frozen=True)
class Verdict:
    decision: Decision
    mode: Mode
    threshold: float
    observed: float
    regime: Regime
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.decision is Decision.PASS

    def to_dict(self) -> dict[str, Any]:
        return {
            "regime": self.regime.value,
            "decision": self.decision.value,
            "mode": self.mode.value,
            "threshold": self.threshold,
            "observed": self.observed,
            "diagnostics": dict(self.diagnostics),
        }


@dataclass(frozen=True)
class RevisedAlpha:
    """Revised significance level of the post-hoc adapted t-test.

    ``value`` is ``2 * (1 - Phi(argument))``; the tail is evaluated stably so
    the reported level stays informative even where the naive complement
    ``1 - value/2`` has already rounded to 1 (``underflowed``).
    """

    value: float
    underflowed: bool
    argument: float

    @property
    def z(self) -> float:
        """``quantile(1 - value/2)``, evaluated naively; ``inf`` once underflowed."""
        return quantile(1.0 - self.value / 2.0)


# -- planners -----------------------------------------------------------------

def plan_n_t_real(p: TTestParams) -> float:
    if p.v is None:
        raise ValueError("planning needs the a-priori standard deviation v")
    z_sum = quantile(1.0 - p.beta_t) + quantile(1.0 - p.alpha_t / 2.0)
    return z_sum**2 * p.v**2 / p.d_r**2


def plan_n_t(p: TTestParams) -> int:
    """Sample size for the t-test, rounded up; never below 2."""
    return max(2, math.ceil(plan_n_t_real(p)))


def plan_n_e_real(p: EquivParams) -> float:
    if p.v is None:
        raise ValueError("planning needs the a-priori standard deviation v")
    z_sum = quantile(1.0 - p.beta_e / 2.0) + quantile(1.0 - p.alpha_e)
    return z_sum**2 * p.v**2 / p.delta**2


def plan_n_e(p: EquivParams) -> int:
    """Sample size for the equivalence test, rounded up; never below 2."""
    return max(2, math.ceil(plan_n_e_real(p)))


# -- thresholds (scalar or vectorised) ----------------------------------------

def ttest_threshold(n, v_hat, alpha_t: float):
    if np.ndim(v_hat) or np.ndim(n):
        return quantile(1.0 - alpha_t / 2.0) * np.asarray(v_hat) / np.sqrt(n)
    return quantile(1.0 - alpha_t / 2.0) * v_hat / math.sqrt(n)


def equivalence_threshold(n, v_hat, delta: float, alpha_e: float):
    if np.ndim(v_hat) or np.ndim(n):
        return delta - quantile(1.0 - alpha_e) * np.asarray(v_hat) / np.sqrt(n)
    return delta - quantile(1.0 - alpha_e) * v_hat / math.sqrt(n)


def min_n_bound(v_hat: float, d_r: float, beta_t: float) -> float:
    """Smallest sample size for which the revised level stays <= 1."""
    return quantile(1.0 - beta_t) ** 2 * v_hat**2 / d_r**2


def _alpha_hat_from_argument(arg) -> tuple:
    value = 2.0 * np.asarray(tail(arg))
    # the naive complement that feeds the quantile
    underflowed = (1.0 - value / 2.0) == 1.0
    return value, underflowed


def revised_alpha(n: float, v_hat: float, d_r: float, beta_t: float) -> RevisedAlpha:
    """Post-hoc significance level for the sample size actually collected.

    Solves ``n = (z(1-beta_t) + z(1-a/2))^2 v_hat^2 / d_r^2`` for ``a``.  With
    ``n`` equal to the (unrounded) planned size this is the classic
    ``2[1 - Phi((z_b + z_a) v / v_hat - z_b)]``.  Degenerate levels
    (``> 1``, or so small that the complement rounds to 1) are reported,
    not rejected.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    _check_positive(v_hat, "v_hat")
    arg = math.sqrt(n) * d_r / v_hat - quantile(1.0 - beta_t)
    value, underflowed = _alpha_hat_from_argument(arg)
    return RevisedAlpha(float(value), bool(underflowed), arg)


def revised_alpha_planned(v_ratio: float, alpha_t: float, beta_t: float) -> RevisedAlpha:
    """Revised level when ``n`` was planned from ``v`` and ``v / v_hat = v_ratio``."""
    _check_positive(v_ratio, "v_ratio")
    z_b = quantile(1.0 - beta_t)
    arg = (z_b + quantile(1.0 - alpha_t / 2.0)) * v_ratio - z_b
    value, underflowed = _alpha_hat_from_argument(arg)
    return RevisedAlpha(float(value), bool(underflowed), arg)


def revised_threshold(n, v_hat, d_r: float, beta_t: float):
    """Naive revised t-test threshold ``z(1 - alpha_hat/2) v_hat / sqrt(n)``.

    Vectorised over `n` / `v_hat`.  Returns ``(threshold, alpha_hat,
    underflowed)``; the threshold is ``+inf`` where the level underflowed.
    """
    n_arr = np.asarray(n, dtype=float)
    v_arr = np.asarray(v_hat, dtype=float)
    if np.any(v_arr <= 0):
        raise ValueError("the revised t-test needs v_hat > 0")
    sqrt_n = np.sqrt(n_arr)
    arg = sqrt_n * d_r / v_arr - quantile(1.0 - beta_t)
    alpha_hat, underflowed = _alpha_hat_from_argument(arg)
    z = quantile(1.0 - alpha_hat / 2.0)
    with np.errstate(invalid="ignore"):
        thr = np.where(np.isposinf(z), np.inf, np.asarray(z) * v_arr / sqrt_n)
    if np.ndim(thr) == 0:
        return float(thr), float(alpha_hat), bool(underflowed)
    return thr, alpha_hat, underflowed


# -- verdicts ----------------------------------------------------------------

def _verdict(regime, threshold, observed, mode=None, **diag) -> Verdict:
    decision = Decision.PASS if observed <= threshold else Decision.FAIL
    if mode is None:
        mode = Mode.REGULAR
    return Verdict(decision, mode, float(threshold), float(observed), regime, diag)


def _base_diag(s: SampleSummary) -> dict[str, Any]:
    return {"n": s.n, "d_bar": s.d_bar, "v_hat": s.v_hat, "m_bar": s.m_bar}


def ttest_pass(s: SampleSummary, alpha_t: float) -> Verdict:
    _check_open_unit(alpha_t, "alpha_t")
    thr = ttest_threshold(s.n, s.v_hat, alpha_t)
    return _verdict(Regime.TTEST, thr, abs(s.d_bar), alpha_t=alpha_t, **_base_diag(s))


def revised_ttest_pass(s: SampleSummary, d_r: float, beta_t: float) -> Verdict:
    """Revised t-test verdict.

    ``ALWAYS_PASS`` when the revised level underflowed (threshold ``+inf``);
    ``ALWAYS_FAIL`` when ``n`` is below :func:`min_n_bound`, where the level
    exceeds 1 and the threshold turns negative.
    """
    _check_positive(d_r, "d_r")
    _check_open_unit(beta_t, "beta_t")
    ra = revised_alpha(s.n, s.v_hat, d_r, beta_t)
    bound = min_n_bound(s.v_hat, d_r, beta_t)
    thr, _, _ = revised_threshold(s.n, s.v_hat, d_r, beta_t)
    if s.n < bound:
        mode = Mode.ALWAYS_FAIL
    elif ra.underflowed:
        mode = Mode.ALWAYS_PASS
    else:
        mode = Mode.REGULAR
    return _verdict(
        Regime.REVISED_TTEST, thr, abs(s.d_bar), mode,
        d_r=d_r, beta_t=beta_t,
        alpha_hat=ra.value, alpha_hat_underflowed=ra.underflowed,
        min_n_bound=bound, **_base_diag(s),
    )


def equivalence_pass(s: SampleSummary, delta: float, alpha_e: float) -> Verdict:
    _check_positive(delta, "delta")
    _check_open_unit(alpha_e, "alpha_e")
    thr = equivalence_threshold(s.n, s.v_hat, delta, alpha_e)
    mode = Mode.ALWAYS_FAIL if thr < 0 else Mode.REGULAR
    return _verdict(Regime.EQUIVALENCE, thr, abs(s.d_bar), mode,
                    delta=delta, alpha_e=alpha_e, **_base_diag(s))


# -- the induced equivalence test ---------------------------------------------

def induce_params(p: TTestParams) -> EquivParams:
    """Map t-test parameters onto the equivalent TOST parameters.

    The manufacturer's risk becomes ``beta_e``, the user's risk ``alpha_e``
    and the tolerated error the equivalence margin.
    """
    return EquivParams(alpha_e=p.beta_t, beta_e=p.alpha_t, delta=p.d_r, v=p.v)


def deduce_params(p: EquivParams) -> TTestParams:
    """Inverse of :func:`induce_params`."""
    return TTestParams(alpha_t=p.beta_e, beta_t=p.alpha_e, d_r=p.delta, v=p.v)


def normalized_threshold_t(v_ratio: float, alpha_t: float, beta_t: float, d_r: float) -> float:
    """Revised t-test threshold in units free of ``n``; `v_ratio` is ``v_hat / v``.

    Raises ``ZeroDivisionError`` for ``beta_t = 0.5``.
    """
    _check_positive(v_ratio, "v_ratio")
    z_b = quantile(1.0 - beta_t)
    if z_b == 0.0:
        raise ZeroDivisionError("beta_t = 0.5 gives z(1 - beta_t) = 0")
    return (1.0 - v_ratio / (1.0 + quantile(1.0 - alpha_t / 2.0) / z_b)) * d_r


def normalized_threshold_e(v_ratio: float, alpha_e: float, beta_e: float, delta: float) -> float:
    _check_positive(v_ratio, "v_ratio")
    z_a = quantile(1.0 - alpha_e)
    if z_a == 0.0:
        raise ZeroDivisionError("alpha_e = 0.5 gives z(1 - alpha_e) = 0")
    return (1.0 - v_ratio / (1.0 + quantile(1.0 - beta_e / 2.0) / z_a)) * delta


# -- dispatch ----------------------------------------------------------------

def _as_equiv(params: Params, regime: Regime) -> EquivParams:
    if isinstance(params, EquivParams):
        if regime is Regime.INDUCED_EQUIVALENCE:
            raise TypeError("the induced regime takes t-test parameters")
        return params
    if regime is Regime.INDUCED_EQUIVALENCE:
        return induce_params(params)
    # plain equivalence with t-test style flags: take them literally
    return EquivParams(alpha_e=params.alpha_t, beta_e=params.beta_t, delta=params.d_r, v=params.v)


def _as_ttest(params: Params) -> TTestParams:
    if isinstance(params, TTestParams):
        return params
    raise TypeError("t-test regimes take TTestParams")


def criterion_threshold(regime: Regime, params: Params, n, v_hat):
    """Threshold of `regime` for arrays of ``(n, v_hat)``; used by the simulator."""
    regime = Regime(regime)
    if regime is Regime.TTEST:
        return ttest_threshold(n, v_hat, _as_ttest(params).alpha_t)
    if regime is Regime.REVISED_TTEST:
        p = _as_ttest(params)
        return revised_threshold(n, v_hat, p.d_r, p.beta_t)[0]
    e = _as_equiv(params, regime)
    return equivalence_threshold(n, v_hat, e.delta, e.alpha_e)


def run_validation(
    sample: CountSample | SampleSummary,
    params: Params,
    regime: Regime | str,
) -> Verdict:
    """Summarize `sample` and apply the criterion of `regime`."""
    regime = Regime(regime)
    s = sample if isinstance(sample, SampleSummary) else summarize(sample)

    if regime is Regime.TTEST:
        verdict = ttest_pass(s, _as_ttest(params).alpha_t)
    elif regime is Regime.REVISED_TTEST:
        p = _as_ttest(params)
        verdict = revised_ttest_pass(s, p.d_r, p.beta_t)
    else:
        e = _as_equiv(params, regime)
        verdict = equivalence_pass(s, e.delta, e.alpha_e)
        if regime is Regime.INDUCED_EQUIVALENCE:
            verdict = Verdict(
                verdict.decision, verdict.mode, verdict.threshold, verdict.observed,
                regime, {**verdict.diagnostics, "beta_e": e.beta_e},
            )

    diag = dict(verdict.diagnostics)
    v = params.v
    if v is not None:
        diag["v"] = v
        diag["v_ratio"] = v / s.v_hat if s.v_hat > 0 else math.inf
        if isinstance(params, TTestParams):
            diag["planned_n"] = plan_n_t(params)
        else:
            diag["planned_n"] = plan_n_e(params)
    if regime is Regime.TTEST and isinstance(params, TTestParams):
        p = params
        if s.v_hat > 0:
            ra = revised_alpha(s.n, s.v_hat, p.d_r, p.beta_t)
            diag["alpha_hat"] = ra.value
            diag["alpha_hat_underflowed"] = ra.underflowed
        diag["min_n_bound"] = min_n_bound(s.v_hat, p.d_r, p.beta_t)
    return Verdict(verdict.decision, verdict.mode, verdict.threshold, verdict.observed, regime, diag)
