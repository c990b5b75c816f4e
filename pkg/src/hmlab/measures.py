"""Histogram algebra over boundary cells: total variation and its uncertainty.

The conditioned exit measure is represented by raw per-cell counts together
with the accepted/trial/abort bookkeeping; probabilities are always derived
from counts so that merges of disjoint walk ranges stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rng


@dataclass
class ExitDistribution:
    """Empirical probability histogram over the cells of one boundary chart."""

    counts: np.ndarray
    accepted: int
    trials: int
    aborted: int
    chart_id: str
    low_acceptance: bool = False
    hit_points: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if int(self.counts.sum()) != self.accepted:
            raise ValueError("cell counts must sum to the accepted-walk count")

    @property
    def m_cells(self) -> int:
        return len(self.counts)

    @property
    def probs(self) -> np.ndarray:
        if self.accepted == 0:
            return np.zeros(self.m_cells)
        return self.counts / float(self.accepted)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.trials if self.trials else 0.0

    @property
    def abort_fraction(self) -> float:
        return self.aborted / self.trials if self.trials else 0.0


def merge_distributions(a: ExitDistribution, b: ExitDistribution) -> ExitDistribution:
    """Exact merge of tallies from disjoint walk ranges of the same chart."""
    if a.chart_id != b.chart_id:
        raise ValueError("cannot merge histograms from different charts")
    pts = None
    if a.hit_points is not None and b.hit_points is not None:
        pts = np.concatenate((a.hit_points, b.hit_points))
    return ExitDistribution(
        counts=a.counts + b.counts,
        accepted=a.accepted + b.accepted,
        trials=a.trials + b.trials,
        aborted=a.aborted + b.aborted,
        chart_id=a.chart_id,
        low_acceptance=a.low_acceptance or b.low_acceptance,
        hit_points=pts,
    )


def total_variation(p: ExitDistribution, q: ExitDistribution) -> float:
    """Total-variation norm sum_i |p_i - q_i| of the signed cell measure, in [0, 2].

    This is a lower bound for the continuum total variation that sharpens as
    the chart refines.
    """
    if p.chart_id != q.chart_id or p.m_cells != q.m_cells:
        raise ValueError(
            f"total variation needs a common cellization, got {p.chart_id!r} vs {q.chart_id!r}"
        )
    return float(np.abs(p.probs - q.probs).sum())


def analytic_noise_floor(m_cells: int, accepted: int) -> float:
    """Expected plug-in TV between two independent empirical copies.

    Each cell difference is roughly normal with variance 2 p_i (1 - p_i) / N,
    so the uniform-histogram floor is about 2 sqrt(M / (pi N)).
    """
    if accepted <= 0:
        return 2.0
    return float(2.0 * np.sqrt(m_cells / (np.pi * accepted)))


def bootstrap_tv_ci(
    p: ExitDistribution,
    q: ExitDistribution,
    n_boot: int = 200,
    seed: int = 0,
    alpha: float = 0.05,
) -> float:
    """Half-width of the percentile bootstrap interval for the plug-in TV."""
    if p.accepted == 0 or q.accepted == 0:
        return 2.0
    gen = np.random.default_rng(rng.derive_seed(seed, "bootstrap", p.chart_id, p.accepted, q.accepted))
    rp = gen.multinomial(p.accepted, p.probs, size=n_boot) / float(p.accepted)
    rq = gen.multinomial(q.accepted, q.probs, size=n_boot) / float(q.accepted)
    tvs = np.abs(rp - rq).sum(axis=1)
    lo, hi = np.quantile(tvs, [alpha / 2.0, 1.0 - alpha / 2.0])
    return float(0.5 * (hi - lo))


@dataclass
class FnEstimate:
    """One point of the sequence n -> TV(exit measure of x, exit measure of y)."""

    n: int
    f_hat: float
    ci_half_width: float
    diagnostics: dict


def fn_from_distributions(
    n: int,
    dist_x: ExitDistribution,
    dist_y: ExitDistribution,
    seed: int = 0,
    n_boot: int = 200,
) -> FnEstimate:
    """Assemble the TV estimate and its bootstrap CI from two sampled histograms."""
    f_hat = total_variation(dist_x, dist_y)
    ci = bootstrap_tv_ci(dist_x, dist_y, n_boot=n_boot, seed=seed)
    diag = {
        "accepted_x": dist_x.accepted,
        "accepted_y": dist_y.accepted,
        "acc_x": dist_x.acceptance_rate,
        "acc_y": dist_y.acceptance_rate,
        "abort_x": dist_x.abort_fraction,
        "abort_y": dist_y.abort_fraction,
        "low_acceptance": dist_x.low_acceptance or dist_y.low_acceptance,
    }
    return FnEstimate(n=n, f_hat=f_hat, ci_half_width=ci, diagnostics=diag)


def fn_estimate(domain, n: int, chart, x, y, params) -> FnEstimate:
    """TV between the conditioned exit measures of x and y on one chart.

    Samples both points on independent sub-streams derived from params.seed.
    """
    from . import sampler  # local import: measures holds the types sampler produces
    from dataclasses import replace

    dist_x = sampler.sample_conditioned_exit(
        domain, chart.level, chart, x,
        replace(params, seed=rng.derive_seed(params.seed, "fn", "x", n)),
    )
    dist_y = sampler.sample_conditioned_exit(
        domain, chart.level, chart, y,
        replace(params, seed=rng.derive_seed(params.seed, "fn", "y", n)),
    )
    return fn_from_distributions(n, dist_x, dist_y, seed=params.seed, n_boot=params.n_boot)
