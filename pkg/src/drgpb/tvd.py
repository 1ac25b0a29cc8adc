"""Worst-case mode distribution over a total-variation ball.

Given a nominal distribution ``mu`` over modes and per-mode losses ``L``,
the inner problem is

    maximize  sum_i nu_i L_i
    over      nu in the simplex with  0.5 * sum_i |nu_i - mu_i| <= R

Its solution moves a mass ``alpha = min(R, 1 - mu(top))`` onto the set of
modes with the largest loss, taking it from the lowest-loss level sets first
("water-filling").  :func:`robust_value_equivalent` evaluates the same optimum
through the nominal cost plus correction terms, and :func:`brute_force_oracle`
solves the linear program directly; both are used to cross-check
:func:`waterfill`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

TIE_TOL = 1e-9
FEAS_TOL = 1e-12


def tvd_distance(p, q) -> float:
    """Total variation distance 0.5 * sum |p - q|."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


@dataclass(frozen=True, eq=False)
class LevelPartition:
    """Modes grouped by (tied) loss value.

    ``theta_top`` holds the modes attaining the maximum loss.  ``levels`` lists
    the remaining groups in ascending loss order as ``(modes, value)`` pairs,
    so ``levels[0]`` is the minimum-loss set.  When every mode ties, the top
    set contains all modes and ``levels`` is empty.
    """

    theta_top: tuple[int, ...]
    top_value: float
    levels: tuple[tuple[tuple[int, ...], float], ...]
    L_values: np.ndarray

    @property
    def L_max(self) -> float:
        return self.top_value

    @property
    def L_min(self) -> float:
        return self.levels[0][1] if self.levels else self.top_value

    @property
    def theta_bottom(self) -> tuple[int, ...]:
        return self.levels[0][0] if self.levels else self.theta_top

    @property
    def r(self) -> int:
        """Number of intermediate level sets."""
        return max(len(self.levels) - 1, 0)


def partition_levels(L, tie_tol: float = TIE_TOL) -> LevelPartition:
    """Group modes whose losses agree within a relative ``tie_tol``.

    A group is anchored at its smallest member; a value joins the group while
    it is within ``tie_tol * max(1, |anchor|)`` of the anchor.
    """
    L = np.asarray(L, dtype=float).reshape(-1)
    if L.size == 0:
        raise ValueError("empty loss vector")
    if not np.all(np.isfinite(L)):
        raise ValueError("losses must be finite")
    order = np.argsort(L, kind="stable")
    groups: list[list[int]] = []
    anchor = None
    for i in order:
        v = L[i]
        if anchor is None or v - anchor > tie_tol * max(1.0, abs(anchor)):
            groups.append([int(i)])
            anchor = v
        else:
            groups[-1].append(int(i))
    top = tuple(sorted(groups[-1]))
    levels = tuple((tuple(sorted(g)), float(L[g].min())) for g in groups[:-1])
    return LevelPartition(theta_top=top, top_value=float(L[list(top)].max()),
                          levels=levels, L_values=L.copy())


class CaseTag(NamedTuple):
    case: int  # 1 or 2
    z: int  # index of the level set that is partially drained (0 in case 1)


class EquivalentValue(NamedTuple):
    value: float
    case_tag: CaseTag
    beta: float


@dataclass(frozen=True, eq=False)
class WaterfillResult:
    nu_star: np.ndarray
    alpha: float
    partition: LevelPartition
    value: float
    value_equiv: float
    case_tag: CaseTag


def _spread(nu, members, mass, mu):
    members = list(members)
    share = mu[members]
    total = share.sum()
    if total > 0:
        nu[members] = mass * (share / total)
    else:
        nu[members] = mass / len(members)


def waterfill(mu, partition: LevelPartition, R_TV: float) -> WaterfillResult:
    """Worst-case distribution within TVD ``R_TV`` of ``mu``.

    Level-set masses follow the water-filling rule; inside a set the mass is
    shared in proportion to ``mu`` (equally if the set carries no nominal
    mass).
    """
    mu = np.asarray(mu, dtype=float)
    if not 0.0 <= R_TV <= 1.0:
        raise ValueError(f"R_TV must lie in [0, 1], got {R_TV}")
    L = partition.L_values
    top = list(partition.theta_top)
    mu_top = mu[top].sum()
    level_mass = [mu[list(m)].sum() for m, _ in partition.levels]
    # 1 - mu(top), summed from the lower sets so alpha never exceeds their mass
    lower_mass = float(sum(level_mass))
    saturated = R_TV >= lower_mass
    alpha = lower_mass if saturated else float(R_TV)
    if not partition.levels:
        alpha = 0.0

    if alpha == 0.0:
        nu = mu.copy()
    else:
        nu = np.empty_like(mu)
        _spread(nu, top, mu_top + alpha, mu)
        drained_before = 0.0
        for (members, _), m in zip(partition.levels, level_mass):
            # a saturated ball empties every lower set exactly, without rounding residue
            excess = m if saturated else max(alpha - drained_before, 0.0)
            _spread(nu, members, max(m - excess, 0.0), mu)
            drained_before += m

    equiv = robust_value_equivalent(mu, partition, alpha)
    return WaterfillResult(nu_star=nu, alpha=alpha, partition=partition,
                           value=float(nu @ L), value_equiv=equiv.value,
                           case_tag=equiv.case_tag)


def robust_value_equivalent(mu, partition: LevelPartition, alpha: float) -> EquivalentValue:
    """Optimal value as nominal cost + beta(alpha) + alpha * (L_max - L_tilde).

    Case 1 applies when ``alpha`` fits inside the minimum-loss set; otherwise
    the set ``z`` in which the cumulative nominal mass first reaches
    ``alpha`` is partially drained and ``beta`` collects the gap between its
    loss and the losses of the fully drained sets below it.  Boundary values
    of ``alpha`` resolve to the lower case.
    """
    mu = np.asarray(mu, dtype=float)
    L = partition.L_values
    nominal = float(mu @ L)
    if not partition.levels or alpha == 0.0:
        return EquivalentValue(nominal, CaseTag(1, 0), 0.0)

    masses = [mu[list(m)].sum() for m, _ in partition.levels]
    values = [v for _, v in partition.levels]
    cum = np.cumsum(masses)
    L_max = partition.L_max

    if alpha <= cum[0]:
        return EquivalentValue(nominal + alpha * (L_max - values[0]), CaseTag(1, 0), 0.0)

    z = None
    for zz in range(1, len(masses)):
        if cum[zz - 1] <= alpha <= cum[zz]:
            z = zz
            break
    if z is None:
        # alpha can overshoot the total lower mass only by roundoff
        if len(masses) > 1 and alpha <= cum[-1] + FEAS_TOL:
            z = len(masses) - 1
        else:
            raise ArithmeticError(
                f"no case of the equivalent value applies (alpha={alpha!r}, "
                f"cumulative masses={cum.tolist()})")
    beta = float(sum((values[z] - values[s]) * masses[s] for s in range(z)))
    value = nominal + beta + alpha * (L_max - values[z])
    return EquivalentValue(value, CaseTag(2, z), beta)


def _halfspace_vertices(mu, L, R_TV):
    # Vertices of {nu >= 0, sum nu = 1, sum s_i (nu_i - mu_i) <= 2R for all sign
    # vectors s}: each one makes n - 1 inequalities active besides the equality.
    n = len(mu)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    G = np.vstack([-np.eye(n), signs])
    h = np.concatenate([np.zeros(n), 2.0 * R_TV + signs @ mu])
    best_val, best_nu = -np.inf, None
    for active in itertools.combinations(range(len(h)), n - 1):
        M = np.vstack([np.ones(n), G[list(active)]])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        nu = np.linalg.solve(M, np.concatenate([[1.0], h[list(active)]]))
        if np.all(G @ nu <= h + 1e-9) and nu @ L > best_val:
            best_val, best_nu = float(nu @ L), nu
    return best_val, best_nu


def _lifted_vertices(mu, L, R_TV):
    # Write nu = mu + u - d with u >= 0, 0 <= d <= mu and sum u = sum d <= R.
    # Only two general constraints exist, so a vertex has at most two variables
    # off their bounds: some set D of modes is drained completely, at most one
    # mode b is drained partially, and all removed mass lands on one mode a.
    n = len(mu)
    masks = (np.arange(2**n)[:, None] >> np.arange(n)) & 1  # (2^n, n)
    drained = masks @ mu
    drained_loss = masks @ (mu * L)
    best = (-np.inf, None)

    # no partial drain: moved mass is mu(D) and must fit in the ball
    ok = drained <= R_TV
    gain = drained[:, None] * L[None, :] - drained_loss[:, None]  # (2^n, a)
    gain = np.where(ok[:, None], gain, -np.inf)
    i = np.unravel_index(np.argmax(gain), gain.shape)
    if np.isfinite(gain[i]):
        best = (gain[i], (i[0], i[1], None, 0.0))

    # partial drain of b outside D tops the moved mass up to exactly R
    t = R_TV - drained  # (2^n,)
    feas = (t[:, None] >= 0) & (t[:, None] <= mu[None, :]) & (masks == 0)  # (2^n, b)
    part = np.where(feas, t[:, None] * L[None, :], np.inf)  # loss removed from b
    gain2 = R_TV * L[None, None, :] - drained_loss[:, None, None] - part[:, :, None]
    j = np.unravel_index(np.argmax(gain2), gain2.shape)
    if np.isfinite(gain2[j]) and gain2[j] > best[0]:
        best = (gain2[j], (j[0], j[2], j[1], t[j[0]]))

    _, (d_idx, a, b, tb) = best
    nu = mu * (1 - masks[d_idx])
    if b is not None:
        nu[b] -= tb
    nu[a] += 1.0 - nu.sum()
    return float(mu @ L + best[0]), nu


def brute_force_oracle(mu, L, R_TV: float, method: str = "vertices"):
    """Maximize ``sum nu L`` over the TV ball without the water-filling rule.

    ``method="vertices"`` (default) enumerates every candidate vertex of the
    lifted polytope, which is exact up to a few roundings of sums;
    ``method="lp"`` solves the lifted linear program (variables nu and
    t >= |nu - mu|) with the HiGHS dual simplex, whose feasibility tolerance
    (1e-10) can shift degenerate optima by about that much;
    ``method="halfspaces"`` intersects the sign-vector halfspace description
    of the ball exhaustively and only scales to four or five modes.
    Returns ``(value, maximizer)``.
    """
    mu = np.asarray(mu, dtype=float)
    L = np.asarray(L, dtype=float)
    n = len(mu)
    if n > 8:
        raise ValueError("brute_force_oracle is limited to at most 8 modes")
    if method == "vertices":
        return _lifted_vertices(mu, L, float(R_TV))
    if method == "halfspaces":
        if n > 5:
            raise ValueError("halfspace enumeration is limited to at most 5 modes")
        return _halfspace_vertices(mu, L, R_TV)
    if method != "lp":
        raise ValueError(f"unknown method {method!r}")

    eye = np.eye(n)
    c = np.concatenate([-L, np.zeros(n)])
    A_ub = np.block([[eye, -eye], [-eye, -eye], [np.zeros((1, n)), np.ones((1, n))]])
    b_ub = np.concatenate([mu, -mu, [2.0 * R_TV]])
    A_eq = np.concatenate([np.ones(n), np.zeros(n)])[None, :]
    # total mass of mu rather than 1, so an R = 0 ball is feasible despite roundoff
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[mu.sum()],
                  bounds=[(0, None)] * (2 * n), method="highs-ds",
                  options={"presolve": False,
                           "primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise ArithmeticError(f"oracle LP failed: {res.message}")
    nu = res.x[:n]
    return float(nu @ L), nu
