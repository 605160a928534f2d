"""Pass-probability curves for the admission tests.

Relative differences are modelled as i.i.d. ``normal(mu, sigma_true**2)``.
For that model ``(D_bar, v_hat)`` is sufficient, and
``D_bar ~ normal(mu, sigma^2/n)`` and ``(n-1) v_hat^2 / sigma^2 ~ chi2(n-1)``
are independent, so the default ``method="summary"`` draws the two
statistics directly.  ``method="raw"`` draws the full ``n``-vectors; it is
slower and exists to cross-check the shortcut.

Replicates are split into fixed-size blocks.  Each block gets its own
Philox stream keyed by ``(seed, mu_index, block_index)``, so results are
bit-identical for any worker count or scheduling order.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Iterable, Mapping, TextIO

import numpy as np

from .admission import (
    Params,
    Regime,
    TTestParams,
    criterion_threshold,
    plan_n_t,
    revised_alpha_planned,
)
from .normal_dist import prob_between

__all__ = [
    "SimDesign",
    "CurvePoint",
    "PowerCurve",
    "Figure",
    "pass_probability_mc",
    "pass_probability_closed",
    "stability_scan",
    "figure_curves",
    "curves_to_csv",
    "CURVE_CSV_HEADER",
    "BLOCK_SIZE",
]

BLOCK_SIZE = 8192
CURVE_CSV_HEADER = ("mu", "pass_prob", "std_err", "regime", "n", "v_planned", "sigma_true", "seed")
_RAW_BATCH_ELEMS = 1 << 20


@dataclass(frozen=True)
class SimDesign:
    regime: Regime
    params: Params
    n: int
    mu_grid: tuple[float, ...]
    sigma_true: float
    replicates: int = 10_000
    seed: int = 0
    v_planned: float | None = None
    known_variance: bool = False
    method: str = "summary"
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        object.__setattr__(self, "mu_grid", tuple(float(m) for m in self.mu_grid))
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if not self.mu_grid:
            raise ValueError("mu_grid must not be empty")
        if not all(math.isfinite(m) for m in self.mu_grid):
            raise ValueError("mu_grid values must be finite")
        if not (self.sigma_true > 0) or not math.isfinite(self.sigma_true):
            raise ValueError(f"sigma_true must be > 0, got {self.sigma_true}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.method not in ("summary", "raw"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class CurvePoint:
    mu: float
    pass_prob: float
    std_err: float


@dataclass(frozen=True)
class PowerCurve:
    points: tuple[CurvePoint, ...]
    design: SimDesign

    @property
    def pass_probs(self) -> np.ndarray:
        return np.array([p.pass_prob for p in self.points])

    def rows(self) -> list[dict[str, Any]]:
        d = self.design
        return [
            {
                "mu": p.mu,
                "pass_prob": p.pass_prob,
                "std_err": p.std_err,
                "regime": d.regime.value,
                "n": d.n,
                "v_planned": "" if d.v_planned is None else d.v_planned,
                "sigma_true": d.sigma_true,
                "seed": d.seed,
            }
            for p in self.points
        ]


def curves_to_csv(curves: Iterable[PowerCurve], stream: TextIO | None = None) -> str:
    buf = io.StringIO() if stream is None else stream
    writer = csv.DictWriter(buf, fieldnames=CURVE_CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    for curve in curves:
        for row in curve.rows():
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue() if stream is None else ""


# -- Monte Carlo ---------------------------------------------------------------

def _block_rng(seed: int, mu_index: int, block_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(mu_index, block_index))
    return np.random.Generator(np.random.Philox(ss))


def _draw_summaries(rng, design: SimDesign, mu: float, size: int):
    n, sigma = design.n, design.sigma_true
    if design.method == "summary":
        d_bar = mu + sigma / math.sqrt(n) * rng.standard_normal(size)
        if design.known_variance:
            v_hat = np.full(size, sigma)
        else:
            v_hat = sigma * np.sqrt(rng.chisquare(n - 1, size) / (n - 1))
        return d_bar, v_hat

    rows = max(1, _RAW_BATCH_ELEMS // n)
    d_parts, v_parts = [], []
    for start in range(0, size, rows):
        x = rng.normal(mu, sigma, size=(min(rows, size - start), n))
        d_parts.append(x.mean(axis=1))
        v_parts.append(x.std(axis=1, ddof=1))
    d_bar = np.concatenate(d_parts)
    v_hat = np.full(size, sigma) if design.known_variance else np.concatenate(v_parts)
    return d_bar, v_hat


def _count_block(design: SimDesign, mu_index: int, block_index: int) -> int:
    start = block_index * BLOCK_SIZE
    size = min(BLOCK_SIZE, design.replicates - start)
    rng = _block_rng(design.seed, mu_index, block_index)
    d_bar, v_hat = _draw_summaries(rng, design, design.mu_grid[mu_index], size)
    thr = criterion_threshold(design.regime, design.params, design.n, v_hat)
    return int(np.count_nonzero(np.abs(d_bar) <= thr))


def pass_probability_mc(design: SimDesign, workers: int = 1) -> PowerCurve:
    """Monte Carlo pass fraction of the design's criterion at every ``mu``.

    With ``known_variance=True`` the criterion sees ``v_hat = sigma_true``
    instead of the per-replicate estimate; that mode matches
    :func:`pass_probability_closed` and is meant for validating it.
    """
    n_blocks = -(-design.replicates // BLOCK_SIZE)
    tasks = [(i, b) for i in range(len(design.mu_grid)) for b in range(n_blocks)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda t: _count_block(design, *t), tasks))
    else:
        counts = [_count_block(design, i, b) for i, b in tasks]

    per_mu = np.zeros(len(design.mu_grid), dtype=np.int64)
    for (i, _), c in zip(tasks, counts):
        per_mu[i] += c
    points = []
    for mu, c in zip(design.mu_grid, per_mu):
        p = c / design.replicates
        points.append(CurvePoint(mu, float(p), math.sqrt(p * (1 - p) / design.replicates)))
    return PowerCurve(tuple(points), design)


def pass_probability_closed(
    regime: Regime | str, params: Params, n: int, mu: float, sigma_true: float
) -> float:
    """Pass probability with ``v_hat`` held at `sigma_true`.

    ``D_bar ~ normal(mu, sigma_true^2 / n)`` is integrated over
    ``[-c, c]`` where ``c`` is the regime's threshold.
    """
    c = float(criterion_threshold(Regime(regime), params, n, sigma_true))
    if c < 0:
        return 0.0
    if math.isinf(c):
        return 1.0
    scale = math.sqrt(n) / sigma_true
    return prob_between((-c - mu) * scale, (c - mu) * scale)


# -- numerical stability ---------------------------------------------------------

def stability_scan(
    alpha_t: float,
    beta_t: float,
    ratio_lo: float = 2.0,
    ratio_hi: float = 3.0,
    step: float = 0.001,
) -> float:
    """First ratio ``v / v_hat`` on the grid where the naive revised test saturates.

    The grid is ``ratio_lo + k * step`` up to `ratio_hi`.  Saturation means
    ``1 - alpha_hat/2`` rounds to 1 in double precision, making the revised
    threshold infinite.  Returns ``inf`` if no grid point saturates.
    """
    if not 0 < ratio_lo < ratio_hi:
        raise ValueError("need 0 < ratio_lo < ratio_hi")
    if not step > 0:
        raise ValueError("step must be > 0")
    k_max = math.floor((ratio_hi - ratio_lo) / step + 1e-9)
    for k in range(k_max + 1):
        r = ratio_lo + k * step
        if revised_alpha_planned(r, alpha_t, beta_t).underflowed:
            return round(r, 12)
    return math.inf


# -- paper figures ---------------------------------------------------------------

class Figure(str, enum.Enum):
    FIG1 = "fig1"
    FIG2A = "fig2a"
    FIG2B = "fig2b"


_FIG_DEFAULTS: dict[str, Any] = {
    "alpha_t": 0.05,
    "beta_t": 0.025,
    "d_r": 0.01,
    "sigma_true": 0.15,
    "replicates": 10_000,
    "seed": 20190101,
    "mu_grid": tuple(np.round(np.linspace(-0.03, 0.03, 61), 6)),
    "known_variance": False,
    "method": "summary",
}
# a-priori standard deviations; 0.15 is the correct guess for sigma_true = 0.15
_FIG_V_PLANNED = {
    Figure.FIG1: (0.05, 0.10, 0.15, 0.30, 0.31, 0.40, 0.45),
    Figure.FIG2A: (0.05, 0.10, 0.15, 0.30),
    Figure.FIG2B: (0.05, 0.10, 0.15, 0.30),
}


def figure_curves(
    figure: Figure | str,
    overrides: Mapping[str, Any] | None = None,
    workers: int = 1,
) -> list[PowerCurve]:
    """Preset curve families for the standard pass-probability figures.

    ``fig2a``: plain t-test for several a-priori ``v`` plus the implicit 50%
    power planning (``beta_t = 0.5``) at the correct ``v``.  ``fig2b``: revised
    t-test and induced equivalence test for the same ``v``; the ``v = 0.05``
    design (n = 385) fails always.  ``fig1``: naive revised t-test against the
    induced equivalence test over a sweep of ``v``; from ``v / v_hat`` of about
    2.62 on the naive test passes everything.

    `overrides` may replace any of ``alpha_t, beta_t, d_r, sigma_true,
    replicates, seed, mu_grid, known_variance, method, v_planned``.
    """
    figure = Figure(figure)
    cfg = dict(_FIG_DEFAULTS)
    cfg["v_planned"] = _FIG_V_PLANNED[figure]
    for key, value in (overrides or {}).items():
        if key not in cfg:
            raise ValueError(f"unknown override {key!r}")
        cfg[key] = value

    base = TTestParams(alpha_t=cfg["alpha_t"], beta_t=cfg["beta_t"], d_r=cfg["d_r"])
    common = dict(
        mu_grid=tuple(cfg["mu_grid"]),
        sigma_true=cfg["sigma_true"],
        replicates=cfg["replicates"],
        seed=cfg["seed"],
        known_variance=cfg["known_variance"],
        method=cfg["method"],
    )

    designs: list[SimDesign] = []
    for v in cfg["v_planned"]:
        p = replace(base, v=v)
        n = plan_n_t(p)
        if figure is Figure.FIG2A:
            regimes = (Regime.TTEST,)
        else:
            regimes = (Regime.REVISED_TTEST, Regime.INDUCED_EQUIVALENCE)
        for regime in regimes:
            designs.append(SimDesign(regime, p, n, v_planned=v, label=f"{regime.value} v={v}", **common))

    if figure is Figure.FIG2A:
        correct = cfg["sigma_true"]
        p50 = replace(base, beta_t=0.5, v=correct)
        designs.append(SimDesign(Regime.TTEST, p50, plan_n_t(p50), v_planned=correct,
                                 label=f"ttest v={correct} implicit 50% power", **common))

    return [pass_probability_mc(d, workers=workers) for d in designs]
