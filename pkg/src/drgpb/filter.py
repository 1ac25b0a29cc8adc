"""Distributionally robust first-order GPB filter.

Each step runs one Kalman filter per mode, all seeded from the previous
merged estimate, updates the nominal mode probabilities ``mu`` by Bayes' rule,
derives per-mode losses ``trace(P_j) / mu_j``, replaces ``mu`` by the
worst-case distribution ``nu_star`` inside the TV ball of radius ``R_TV(k)``
and finally merges the mode-conditioned estimates with ``nu_star``.  With
``R_TV = 0`` this is the classical GPB1 filter.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DrgpbError, FilterStepError, NumericalError
from .kalman import COND_FLOOR, GaussianBelief, ModeStepOutput, kf_step
from .model import MjlsModel, as_schedule, require_valid
from .modes import update_mode_posterior
from .tvd import TIE_TOL, CaseTag, partition_levels, waterfill

MU_FLOOR = 1e-12


@dataclass(frozen=True)
class FilterConfig:
    mu_floor: float = MU_FLOOR
    tie_tol: float = TIE_TOL
    cond_floor: float = COND_FLOOR
    joseph: bool = False


class RobustnessSchedule:
    """TV radius per step: a constant, a per-step list or ``{start: radius}``.

    A list gives R_TV(1), R_TV(2), ... in order; a mapping is piecewise
    constant from each start step (inclusive); a callable is used as-is.
    """

    def __init__(self, spec: float | Sequence[float] | Mapping[int, float] | Callable = 0.0):
        self._const = None
        self._list = None
        self._starts = None
        self._fn = None
        if callable(spec):
            self._fn = spec
        elif isinstance(spec, Mapping):
            items = sorted((int(k), float(v)) for k, v in spec.items())
            if not items or items[0][0] != 1:
                raise ValueError("piecewise radius schedule must start at step 1")
            self._starts = np.array([k for k, _ in items])
            self._vals = [v for _, v in items]
            self._check(self._vals)
        elif np.ndim(spec) == 0:
            self._const = float(spec)
            self._check([self._const])
        else:
            self._list = [float(v) for v in spec]
            self._check(self._list)

    @staticmethod
    def _check(values):
        for v in values:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"R_TV values must lie in [0, 1], got {v}")

    def at(self, k: int) -> float:
        if self._const is not None:
            return self._const
        if self._list is not None:
            return self._list[k - 1]
        if self._starts is not None:
            return self._vals[int(np.searchsorted(self._starts, k, side="right") - 1)]
        r = float(self._fn(k))
        self._check([r])
        return r

    __call__ = at


def as_radius_schedule(spec) -> RobustnessSchedule:
    return spec if isinstance(spec, RobustnessSchedule) else RobustnessSchedule(spec)


@dataclass(frozen=True, eq=False)
class FilterState:
    """Filter output after step ``k`` (``k = 0`` is the initial condition)."""

    k: int
    merged: GaussianBelief
    mu: np.ndarray
    nu_star: np.ndarray
    alpha: float = 0.0
    rtv: float = 0.0
    bank: tuple[ModeStepOutput, ...] = ()
    losses: np.ndarray | None = None
    value: float = float("nan")
    value_equiv: float = float("nan")
    case_tag: CaseTag | None = None

    @property
    def mean(self) -> np.ndarray:
        return self.merged.mean

    @property
    def cov(self) -> np.ndarray:
        return self.merged.cov


def init_filter(model: MjlsModel) -> FilterState:
    model = as_schedule(model).initial
    require_valid(model)
    mu = model.p0_mode.copy()
    return FilterState(k=0, merged=GaussianBelief(model.x0_mean.copy(), model.X0.copy()),
                       mu=mu, nu_star=mu.copy())


def compute_mode_losses(mu, covs, floor: float = MU_FLOOR) -> np.ndarray:
    """Per-mode loss trace(P_j) / max(mu_j, floor)."""
    traces = np.array([np.trace(P) for P in covs], dtype=float)
    return traces / np.maximum(np.asarray(mu, dtype=float), floor)


def merge_estimates(weights, means, covs) -> GaussianBelief:
    """Moment-matched mixture: the mean is merged first, then the spread terms."""
    w = np.asarray(weights, dtype=float)
    X = np.asarray(means, dtype=float)
    x = w @ X
    d = X - x
    P = np.einsum("j,jab->ab", w, np.asarray(covs, dtype=float)) + (d.T * w) @ d
    return GaussianBelief(x, 0.5 * (P + P.T))


def drgpb_step(state: FilterState, model: MjlsModel, y, rtv: float,
               config: FilterConfig = FilterConfig()) -> FilterState:
    """Advance the filter by one observation ``y`` using the model in force."""
    if not 0.0 <= rtv <= 1.0:
        raise ValueError(f"R_TV must lie in [0, 1], got {rtv}")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (model.n_y,):
        raise ValueError(f"observation has shape {y.shape}, expected ({model.n_y},)")
    k = state.k + 1

    bank = tuple(
        kf_step(model, j, state.merged, y, step=k, joseph=config.joseph,
                cond_floor=config.cond_floor)
        for j in range(model.n_theta)
    )
    mu = update_mode_posterior(state.mu, model.Pi, [b.loglik for b in bank])

    covs = [b.posterior.cov for b in bank]
    losses = compute_mode_losses(mu, covs, config.mu_floor)
    wf = waterfill(mu, partition_levels(losses, config.tie_tol), rtv)

    merged = merge_estimates(wf.nu_star, [b.posterior.mean for b in bank], covs)
    return FilterState(k=k, merged=merged, mu=mu, nu_star=wf.nu_star, alpha=wf.alpha,
                       rtv=float(rtv), bank=bank, losses=losses, value=wf.value,
                       value_equiv=wf.value_equiv, case_tag=wf.case_tag)


def run_filter(model, observations, rtv=0.0, config: FilterConfig = FilterConfig(),
               *, include_initial: bool = False) -> list[FilterState]:
    """Fold :func:`drgpb_step` over ``observations`` (y_1, ..., y_N).

    ``model`` is an :class:`MjlsModel` or a :class:`ScheduledModel`; ``rtv``
    anything accepted by :class:`RobustnessSchedule`.  Returns the states
    after steps 1..N (preceded by the initial state if requested).
    """
    obs = np.asarray(observations, dtype=float)
    if obs.ndim == 1:
        obs = obs[:, None]
    if len(obs) == 0:
        raise ValueError("no observations")
    sched = as_schedule(model)
    radii = as_radius_schedule(rtv)

    state = init_filter(sched)
    states = [state] if include_initial else []
    for k, y in enumerate(obs, start=1):
        try:
            state = drgpb_step(state, sched.at(k), y, radii.at(k), config)
        except NumericalError as exc:
            raise FilterStepError(k, exc) from exc
        states.append(state)
    return states


@dataclass
class FilterTrace:
    """Per-step arrays extracted from a list of filter states."""

    k: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    mu: np.ndarray
    nu_star: np.ndarray
    alpha: np.ndarray
    rtv: np.ndarray
    value: np.ndarray
    losses: np.ndarray
    case: np.ndarray = field(default=None)

    @classmethod
    def from_states(cls, states: Sequence[FilterState]) -> "FilterTrace":
        steps = [s for s in states if s.k > 0]
        n = len(steps[0].mu) if steps else 0
        return cls(
            k=np.array([s.k for s in steps]),
            means=np.array([s.mean for s in steps]),
            covs=np.array([s.cov for s in steps]),
            mu=np.array([s.mu for s in steps]),
            nu_star=np.array([s.nu_star for s in steps]),
            alpha=np.array([s.alpha for s in steps]),
            rtv=np.array([s.rtv for s in steps]),
            value=np.array([s.value for s in steps]),
            losses=np.array([s.losses if s.losses is not None else np.full(n, np.nan)
                             for s in steps]),
            case=np.array([s.case_tag.case if s.case_tag else 0 for s in steps]),
        )


def check_state(state: FilterState, tol: float = 1e-10) -> list[str]:
    """Invariant violations of one filter state (PSD merge, simplex, TV ball)."""
    bad = [f"merged {m}" for m in state.merged.check(tol)]
    for name, p in (("mu", state.mu), ("nu_star", state.nu_star)):
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            bad.append(f"{name} not a distribution")
    if 0.5 * np.abs(state.nu_star - state.mu).sum() > state.rtv + 1e-12:
        bad.append("nu_star outside the TV ball")
    for b in state.bank:
        for m in b.posterior.check(tol):
            bad.append(f"mode {b.mode} posterior {m}")
    return bad


__all__ = [
    "DrgpbError", "FilterConfig", "FilterState", "FilterTrace", "RobustnessSchedule",
    "check_state", "compute_mode_losses", "drgpb_step", "init_filter",
    "merge_estimates", "run_filter",
]
