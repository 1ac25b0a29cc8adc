"""Markov jump linear system model, piecewise schedules and trajectory sampling.

The system is

    x_k = A(theta_k) x_{k-1} + B(theta_k) w_k
    y_k = C(theta_k) x_k     + D(theta_k) v_k

with w_k ~ N(0, W), v_k ~ N(0, V) and theta_k a Markov chain with transition
matrix ``Pi[i, j] = P(theta_k = j | theta_{k-1} = i)``.  Modes are 0-based
indices throughout the package.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ModelError

PROB_TOL = 1e-12
PSD_TOL = 1e-10

_MATRIX_FIELDS = ("A", "B", "C", "D", "W", "V", "Pi", "p0_mode", "x0_mean", "X0")


def _frozen(a, ndim=None):
    arr = np.array(a, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ModelError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class MjlsModel:
    """Per-mode system matrices, noise covariances and Markov chain.

    ``A``, ``B``, ``C``, ``D`` are stacked over modes, i.e. ``A[j]`` is the
    state matrix of mode ``j``.  ``p0_mode`` is the distribution of the mode
    at time 0 (the one the filter starts from), so the first sampled mode is
    drawn from ``p0_mode @ Pi``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    W: np.ndarray
    V: np.ndarray
    Pi: np.ndarray
    p0_mode: np.ndarray
    x0_mean: np.ndarray
    X0: np.ndarray

    def __post_init__(self):
        dims = dict(A=3, B=3, C=3, D=3, W=2, V=2, Pi=2, p0_mode=1, x0_mean=1, X0=2)
        for name, nd in dims.items():
            object.__setattr__(self, name, _frozen(getattr(self, name), nd))

    @property
    def n_theta(self) -> int:
        return self.A.shape[0]

    @property
    def n_x(self) -> int:
        return self.A.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[1]

    @property
    def n_w(self) -> int:
        return self.W.shape[0]

    @property
    def n_v(self) -> int:
        return self.V.shape[0]

    def replace(self, **overrides) -> "MjlsModel":
        unknown = set(overrides) - set(_MATRIX_FIELDS)
        if unknown:
            raise ModelError(f"unknown model fields: {sorted(unknown)}")
        return dataclasses.replace(self, **overrides)

    def process_cov(self, mode: int) -> np.ndarray:
        """B W B^T for ``mode``."""
        B = self.B[mode]
        return B @ self.W @ B.T

    def measurement_cov(self, mode: int) -> np.ndarray:
        D = self.D[mode]
        return D @ self.V @ D.T

    def to_dict(self) -> dict:
        return {name: getattr(self, name).tolist() for name in _MATRIX_FIELDS}


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(f"violation: {v}" for v in self.violations)


def _check_psd(name, M, out):
    if M.shape[0] != M.shape[1]:
        out.append(f"{name} not square (shape {M.shape})")
        return
    if not np.all(np.isfinite(M)):
        out.append(f"{name} has non-finite entries")
        return
    if not np.allclose(M, M.T, rtol=0, atol=PSD_TOL):
        out.append(f"{name} not symmetric")
    if M.size and np.linalg.eigvalsh((M + M.T) / 2).min() < -PSD_TOL:
        out.append(f"{name} not PSD")


def _check_distribution(name, p, out):
    if np.any(p < 0) or np.any(p > 1):
        out.append(f"{name} has entries outside [0, 1]")
    if abs(p.sum() - 1.0) > PROB_TOL:
        out.append(f"{name} sum ≠ 1 (sum = {p.sum():.17g})")


def validate_model(model: MjlsModel) -> ValidationReport:
    """Check every model invariant and collect the violations."""
    out: list[str] = []
    n_theta, n_x, n_y = model.n_theta, model.n_x, model.n_y
    n_w, n_v = model.n_w, model.n_v

    expected = {
        "A": (n_theta, n_x, n_x),
        "B": (n_theta, n_x, n_w),
        "C": (n_theta, n_y, n_x),
        "D": (n_theta, n_y, n_v),
        "Pi": (n_theta, n_theta),
        "p0_mode": (n_theta,),
        "x0_mean": (n_x,),
        "X0": (n_x, n_x),
    }
    for name, shape in expected.items():
        got = getattr(model, name).shape
        if got != shape:
            out.append(f"{name} has shape {got}, expected {shape}")
    for name in ("A", "B", "C", "D", "x0_mean"):
        if not np.all(np.isfinite(getattr(model, name))):
            out.append(f"{name} has non-finite entries")

    for name in ("W", "V", "X0"):
        _check_psd(name, getattr(model, name), out)

    Pi = model.Pi
    if Pi.ndim == 2 and Pi.shape[0] == Pi.shape[1]:
        if np.any(Pi < 0) or np.any(Pi > 1):
            out.append("Pi has entries outside [0, 1]")
        for i, row in enumerate(Pi):
            if abs(row.sum() - 1.0) > PROB_TOL:
                out.append(f"Pi row {i}: row sum ≠ 1 (sum = {row.sum():.17g})")
    _check_distribution("p0_mode", model.p0_mode, out)
    return ValidationReport(out)


def require_valid(model: MjlsModel) -> MjlsModel:
    report = validate_model(model)
    if not report.ok:
        raise ModelError(report.violations)
    return model


class ScheduledModel:
    """Piecewise-constant, time-varying view of an MJLS.

    ``segments`` is a sequence of ``(start_step, overrides)`` pairs sorted by
    start step, the first starting at step 1.  ``overrides`` maps model field
    names (typically ``"Pi"``) to replacement values.  Each segment holds from
    its start step (inclusive) until the next segment's start.
    """

    def __init__(self, base: MjlsModel, segments: Sequence[tuple[int, Mapping[str, Any]]] = ()):
        segments = list(segments) or [(1, {})]
        starts = [int(s) for s, _ in segments]
        if starts[0] != 1:
            raise ModelError(f"first schedule segment must start at step 1, got {starts[0]}")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ModelError(f"schedule segments overlap or are unsorted: starts {starts}")
        self.base = base
        self.starts = np.array(starts)
        self.models = [require_valid(base.replace(**dict(ov))) for _, ov in segments]
        self.segments = [(s, dict(ov)) for s, ov in zip(starts, (ov for _, ov in segments))]

    @classmethod
    def constant(cls, model: MjlsModel) -> "ScheduledModel":
        return cls(model, [(1, {})])

    def segment_index(self, k: int) -> int:
        if k < 1:
            raise ValueError(f"steps are numbered from 1, got {k}")
        return int(np.searchsorted(self.starts, k, side="right") - 1)

    def at(self, k: int) -> MjlsModel:
        """Effective model at step ``k`` (1-based)."""
        return self.models[self.segment_index(k)]

    __call__ = at

    @property
    def initial(self) -> MjlsModel:
        return self.models[0]


def as_schedule(model) -> ScheduledModel:
    if isinstance(model, ScheduledModel):
        return model
    return ScheduledModel.constant(require_valid(model))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One realization of the hybrid process.

    ``modes[k-1]`` is theta_k and ``observations[k-1]`` is y_k for k = 1..N;
    ``states[k]`` is x_k for k = 0..N.  ``initial_mode`` is theta_0.
    """

    modes: np.ndarray
    states: np.ndarray
    observations: np.ndarray
    initial_mode: int

    @property
    def horizon(self) -> int:
        return len(self.modes)

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "initial_mode": int(self.initial_mode),
            "modes": self.modes.tolist(),
            "states": self.states.tolist(),
            "observations": self.observations.tolist(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Trajectory":
        return cls(
            modes=np.asarray(d["modes"], dtype=int),
            states=np.asarray(d["states"], dtype=float),
            observations=np.asarray(d["observations"], dtype=float),
            initial_mode=int(d.get("initial_mode", -1)),
        )


def cov_sqrt(M: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Symmetric square root of a PSD matrix, clamping roundoff negatives."""
    M = np.asarray(M, dtype=float)
    w, U = np.linalg.eigh((M + M.T) / 2)
    if w.size and w.min() < -tol * max(1.0, abs(w).max()):
        raise ModelError(f"covariance is not PSD (min eigenvalue {w.min():.3e})")
    return (U * np.sqrt(np.clip(w, 0, None))) @ U.T


def make_rng(seed=None, stream: int | None = None) -> np.random.Generator:
    """Generator keyed by ``(seed, stream)``.

    Distinct streams of the same seed are independent and can be created in
    any order, which keeps Monte Carlo batches order-independent.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if stream is None:
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(stream),)))


def _draw(rng, probs):
    # side="right" so zero-probability modes are never selected
    idx = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    return min(idx, len(probs) - 1)


def sample_trajectory(model, horizon: int, seed=None) -> Trajectory:
    """Draw a hybrid trajectory of length ``horizon``.

    ``model`` is an :class:`MjlsModel` or a :class:`ScheduledModel`; in the
    latter case the transition matrix (and any other overridden field) in
    force at step k governs the move from theta_{k-1} to theta_k.
    ``seed`` is anything accepted by :func:`make_rng`.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    sched = as_schedule(model)
    rng = make_rng(seed)
    m0 = sched.initial

    theta0 = _draw(rng, m0.p0_mode)
    x = m0.x0_mean + cov_sqrt(m0.X0) @ rng.standard_normal(m0.n_x)

    modes = np.empty(horizon, dtype=int)
    states = np.empty((horizon + 1, m0.n_x))
    obs = np.empty((horizon, m0.n_y))
    states[0] = x
    prev = theta0
    roots: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for k in range(1, horizon + 1):
        seg = sched.segment_index(k)
        m = sched.models[seg]
        if seg not in roots:
            roots[seg] = (cov_sqrt(m.W), cov_sqrt(m.V))
        sw, sv = roots[seg]
        j = _draw(rng, m.Pi[prev])
        w = sw @ rng.standard_normal(m.n_w)
        v = sv @ rng.standard_normal(m.n_v)
        x = m.A[j] @ x + m.B[j] @ w
        modes[k - 1] = j
        states[k] = x
        obs[k - 1] = m.C[j] @ x + m.D[j] @ v
        prev = j
    return Trajectory(modes=modes, states=states, observations=obs, initial_mode=theta0)
