"""Randomized cross-checks of the water-filling solution.

Each instance draws a mode count in ``2..6``, a nominal distribution, losses
and a radius.  About a third of the instances use integer losses so tied
level sets occur, and some distributions carry exact zeros.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .model import make_rng
from .tvd import brute_force_oracle, partition_levels, tvd_distance, waterfill


@dataclass(frozen=True, eq=False)
class Instance:
    mu: np.ndarray
    L: np.ndarray
    R_TV: float


def random_instances(count: int, seed=0, modes=(2, 6)) -> list[Instance]:
    rng = make_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(modes[0], modes[1] + 1))
        mu = rng.dirichlet(np.ones(n))
        if rng.random() < 0.15:
            mu[rng.integers(n)] = 0.0
            mu /= mu.sum()
        if rng.random() < 0.3:
            L = rng.integers(0, 4, size=n).astype(float)
        else:
            L = rng.exponential(2.0, size=n)
        R = float(rng.random()) if rng.random() < 0.9 else float(rng.choice([0.0, 1.0]))
        out.append(Instance(mu, L, R))
    return out


@dataclass
class CrosscheckReport:
    instances: int
    max_oracle_gap: float = 0.0
    max_lp_gap: float = 0.0
    max_equiv_gap: float = 0.0
    max_tvd_excess: float = 0.0
    max_simplex_error: float = 0.0
    min_entry: float = 0.0
    case_counts: dict = field(default_factory=lambda: {1: 0, 2: 0})
    elapsed: float = 0.0

    def passed(self, tol: float = 1e-9) -> bool:
        return (self.max_oracle_gap <= tol and self.max_lp_gap <= tol
                and self.max_equiv_gap <= tol
                and self.max_tvd_excess <= 1e-12 and self.max_simplex_error <= 1e-12
                and self.min_entry >= 0.0)

    def lines(self) -> list[str]:
        return [
            f"instances                        {self.instances}",
            f"max |waterfill - vertex oracle|  {self.max_oracle_gap:.3e}",
            f"max |waterfill - LP oracle|      {self.max_lp_gap:.3e}",
            f"max |value - equivalent form|    {self.max_equiv_gap:.3e}",
            f"max TVD excess over radius       {self.max_tvd_excess:.3e}",
            f"max |sum(nu) - 1|                {self.max_simplex_error:.3e}",
            f"case 1 / case 2                  {self.case_counts[1]} / {self.case_counts[2]}",
            f"elapsed                          {self.elapsed:.2f} s",
        ]


def run_crosscheck(count: int = 1000, seed=7, tie_tol: float = 1e-9) -> CrosscheckReport:
    """Compare water-filling with both oracles and the equivalent-value form."""
    t0 = time.perf_counter()
    rep = CrosscheckReport(instances=count)
    for inst in random_instances(count, seed):
        wf = waterfill(inst.mu, partition_levels(inst.L, tie_tol), inst.R_TV)
        vertex_value, _ = brute_force_oracle(inst.mu, inst.L, inst.R_TV)
        lp_value, _ = brute_force_oracle(inst.mu, inst.L, inst.R_TV, method="lp")
        scale = max(1.0, abs(wf.value))
        rep.max_oracle_gap = max(rep.max_oracle_gap, abs(wf.value - vertex_value) / scale)
        rep.max_lp_gap = max(rep.max_lp_gap, abs(wf.value - lp_value) / scale)
        rep.max_equiv_gap = max(rep.max_equiv_gap, abs(wf.value - wf.value_equiv) / scale)
        rep.max_tvd_excess = max(rep.max_tvd_excess, tvd_distance(wf.nu_star, inst.mu) - inst.R_TV)
        rep.max_simplex_error = max(rep.max_simplex_error, abs(wf.nu_star.sum() - 1.0))
        rep.min_entry = min(rep.min_entry, float(wf.nu_star.min()))
        rep.case_counts[wf.case_tag.case] += 1
    rep.elapsed = time.perf_counter() - t0
    return rep
