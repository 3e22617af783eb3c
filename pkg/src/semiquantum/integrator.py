"""Adaptive Dormand-Prince 5(4) integration of the coupled system.

One stepper drives three front ends: plain integration with dense-output
sampling, integration with X = 0 plane-crossing events, and an augmented mode
that co-integrates tangent vectors under the Jacobian flow with periodic
Gram-Schmidt renormalization (the raw material for Lyapunov exponents).

Everything here is deterministic: identical inputs give bit-identical output
on one platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, NumericalFailureError
from .model import ModelParams, SystemState, rhs

__all__ = [
    "IntegratorSettings",
    "IntegrationStatus",
    "StepStats",
    "Trajectory",
    "CrossingEvent",
    "GrowthLog",
    "integrate",
    "integrate_with_events",
    "integrate_augmented",
]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between 5th and embedded 4th order weights
_E = np.array([
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
])
# 4th-order dense-output interpolant coefficients (columns: theta..theta^4 weights)
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
# PI controller exponents for a 5th-order error estimator
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0

_EVENT_MAX_ITER = 100
# number of sign-check subintervals per accepted step when locating crossings
_EVENT_SUBDIV = 4


@dataclass(frozen=True)
class IntegratorSettings:
    """Step control and guard parameters.

    The default tolerances are near the double-precision floor; they were
    chosen so the conserved quantities drift by less than 1e-10 over
    t = 1000 on the bundled scenarios.
    """

    abs_tol: float = 1e-14
    rel_tol: float = 1e-14
    h_init: float = 1e-3
    h_max: float = 10.0
    divergence_norm: float = 1e8
    max_steps: int = 50_000_000

    def validate(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ConfigurationError(f"tolerances must be positive: {self}")
        if not (self.h_init > 0 and self.h_max > 0):
            raise ConfigurationError(f"step sizes must be positive: {self}")
        if self.divergence_norm <= 0:
            raise ConfigurationError(f"divergence_norm must be positive: {self}")
        if self.max_steps < 1:
            raise ConfigurationError(f"max_steps must be >= 1: {self}")


class IntegrationStatus(Enum):
    COMPLETED = "completed"
    DIVERGED = "diverged"
    STEP_BUDGET_EXHAUSTED = "step_budget_exhausted"


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    h_min: float = math.inf
    h_max: float = 0.0


@dataclass
class Trajectory:
    """Sampled solution: times strictly increasing, every sample finite."""

    times: np.ndarray
    states: np.ndarray            # shape (n_samples, 5)
    dn: float
    status: IntegrationStatus
    stats: StepStats
    t_div: float | None = None

    def state_at(self, i: int) -> SystemState:
        return SystemState.from_array(self.states[i], dn=self.dn)

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class CrossingEvent:
    """One transit of the X = 0 plane; direction is the sign of dX/dt there."""

    t_cross: float
    state: SystemState
    direction: int


@dataclass
class GrowthLog:
    """Per-renormalization tangent growth record from the augmented flow."""

    times: np.ndarray             # renormalization instants
    log_norms: np.ndarray         # shape (n_renorms, n_tangents)
    status: IntegrationStatus
    stats: StepStats
    t_div: float | None = None
    final_state: SystemState | None = None
    final_tangents: np.ndarray | None = None


class _Dopri5:
    """Single-trajectory Dormand-Prince 5(4) stepper with PI step control.

    err_dim limits the error norm to the leading components of the state
    vector (the augmented mode controls the step on the base state only).
    """

    def __init__(self, f, y0, settings: IntegratorSettings, err_dim=None):
        self.f = f
        self.t = 0.0
        self.y = np.asarray(y0, dtype=float)
        self.s = settings
        self.err_dim = err_dim if err_dim is not None else len(self.y)
        self.h = min(settings.h_init, settings.h_max)
        self.k1 = f(self.t, self.y)          # FSAL stage
        self.err_prev = None
        self.stats = StepStats()
        # filled by step(): previous accepted interval for dense output
        self.t_old = 0.0
        self.y_old = self.y
        self.h_last = 0.0
        self.K = None

    def step(self, t_limit: float):
        """Advance by one accepted step, not beyond t_limit."""
        s = self.s
        while True:
            if self.stats.accepted + self.stats.rejected >= s.max_steps:
                return False
            h_clip = t_limit - self.t
            h = min(self.h, s.h_max, h_clip)
            if h <= 16.0 * np.finfo(float).eps * max(1.0, abs(self.t)):
                raise NumericalFailureError("step size underflow", last_good_time=self.t)
            K = np.empty((7, len(self.y)))
            K[0] = self.k1
            ok = True
            for i in range(1, 7):
                yi = self.y + h * (K[:i].T @ _A[i])
                if not np.all(np.isfinite(yi)):
                    ok = False
                    break
                K[i] = self.f(self.t + _C[i] * h, yi)
                if not np.all(np.isfinite(K[i])):
                    ok = False
                    break
            if ok:
                y_new = self.y + h * (K.T @ _B)
                err_vec = h * (K[:, : self.err_dim].T @ _E)
                scale = s.abs_tol + s.rel_tol * np.maximum(
                    np.abs(self.y[: self.err_dim]), np.abs(y_new[: self.err_dim])
                )
                err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
                ok = math.isfinite(err) and np.all(np.isfinite(y_new))
            if not ok:
                self.h = h * 0.1
                self.stats.rejected += 1
                continue
            if err <= 1.0:
                if self.err_prev is None or err == 0.0:
                    factor = _MAX_FACTOR if err == 0.0 else _SAFETY * err ** (-0.2)
                else:
                    factor = _SAFETY * err ** (-_PI_ALPHA) * self.err_prev ** _PI_BETA
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
                self.t_old, self.y_old, self.h_last, self.K = self.t, self.y, h, K
                # land exactly on the limit when the step was clipped to it
                self.t = t_limit if h == h_clip else self.t + h
                self.y = y_new
                self.k1 = K[6]               # FSAL
                self.h = h * factor
                self.err_prev = max(err, 1e-10)
                self.stats.accepted += 1
                self.stats.h_min = min(self.stats.h_min, h)
                self.stats.h_max = max(self.stats.h_max, h)
                return True
            self.h = h * max(_MIN_FACTOR, _SAFETY * err ** (-0.2))
            self.stats.rejected += 1

    def dense(self, t: float) -> np.ndarray:
        """4th-order interpolant on the last accepted step."""
        theta = (t - self.t_old) / self.h_last
        q = _P @ np.array([theta, theta ** 2, theta ** 3, theta ** 4])
        return self.y_old + self.h_last * (self.K.T @ q)


def _base_rhs(p: ModelParams):
    return lambda t, y: rhs(y, p)


def _check_inputs(s0: SystemState, t_end: float, settings: IntegratorSettings):
    settings.validate()
    if not (math.isfinite(t_end) and t_end > 0):
        raise ConfigurationError(f"t_end must be positive and finite, got {t_end}")
    if not np.all(np.isfinite(s0.to_array())):
        raise ValueError(f"non-finite initial state {s0}")


def integrate(
    s0: SystemState,
    p: ModelParams,
    t_end: float,
    settings: IntegratorSettings | None = None,
    sample_interval: float = 0.1,
) -> Trajectory:
    """Integrate the coupled system, sampling by dense output.

    Samples are emitted at t = 0, at every multiple of sample_interval and at
    the final reached time; step-size control is never distorted by output
    requests.  Integration stops early with DIVERGED status when the max-norm
    of the state exceeds settings.divergence_norm.
    """
    settings = settings or IntegratorSettings()
    _check_inputs(s0, t_end, settings)
    if sample_interval <= 0:
        raise ConfigurationError(f"sample_interval must be positive, got {sample_interval}")

    stepper = _Dopri5(_base_rhs(p), s0.to_array(), settings)
    times = [0.0]
    states = [s0.to_array()]
    status = IntegrationStatus.STEP_BUDGET_EXHAUSTED
    t_div = None
    k_next = 1
    while stepper.t < t_end:
        if not stepper.step(t_end):
            break
        while k_next * sample_interval <= stepper.t + 1e-12 * sample_interval:
            ts = k_next * sample_interval
            if ts <= t_end:
                times.append(ts)
                states.append(stepper.dense(ts) if ts < stepper.t else stepper.y.copy())
            k_next += 1
        if float(np.max(np.abs(stepper.y))) > settings.divergence_norm:
            status = IntegrationStatus.DIVERGED
            t_div = stepper.t
            break
    else:
        status = IntegrationStatus.COMPLETED
    if stepper.t > times[-1]:
        times.append(stepper.t)
        states.append(stepper.y.copy())
    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        dn=s0.dn,
        status=status,
        stats=stepper.stats,
        t_div=t_div,
    )


def _refine_crossing(stepper: _Dopri5, ta: float, tb: float, plane_value: float):
    """Locate the root of x(t) - plane_value on [ta, tb] of the dense interpolant."""
    g = lambda t: stepper.dense(t)[3] - plane_value
    t_cross = brentq(g, ta, tb, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                     maxiter=_EVENT_MAX_ITER)
    y_cross = stepper.dense(t_cross)
    tol = 1e-12 * (1.0 + float(np.linalg.norm(y_cross)))
    if abs(y_cross[3] - plane_value) > tol:
        raise NumericalFailureError(
            f"crossing refinement stalled at t={t_cross:.6g}", last_good_time=ta
        )
    return t_cross, y_cross


def integrate_with_events(
    s0: SystemState,
    p: ModelParams,
    t_end: float,
    settings: IntegratorSettings | None = None,
    plane_value: float = 0.0,
    direction_filter: str | int = "both",
) -> tuple[Trajectory, list[CrossingEvent]]:
    """Integrate and report every transit of the x = plane_value plane.

    Events require a sign change across a step: a start point sitting exactly
    on the plane is not reported.  direction_filter selects the sign of dX/dt
    at the crossing (+1, -1 or "both").
    """
    if direction_filter not in ("both", 1, -1, +1):
        raise ConfigurationError(f"direction_filter must be +1, -1 or 'both', got {direction_filter!r}")
    settings = settings or IntegratorSettings()
    _check_inputs(s0, t_end, settings)

    stepper = _Dopri5(_base_rhs(p), s0.to_array(), settings)
    times = [0.0]
    states = [s0.to_array()]
    events: list[CrossingEvent] = []
    status = IntegrationStatus.STEP_BUDGET_EXHAUSTED
    t_div = None
    while stepper.t < t_end:
        if not stepper.step(t_end):
            break
        # scan subintervals of the accepted step for sign changes of x
        edges = np.linspace(stepper.t_old, stepper.t, _EVENT_SUBDIV + 1)
        g_vals = [stepper.dense(t)[3] - plane_value for t in edges[:-1]]
        g_vals.append(stepper.y[3] - plane_value)
        for i in range(_EVENT_SUBDIV):
            ga, gb = g_vals[i], g_vals[i + 1]
            if ga == 0.0 or not (ga * gb < 0.0 or (gb == 0.0 and ga != 0.0)):
                continue
            if gb == 0.0:
                t_cross, y_cross = edges[i + 1], stepper.dense(edges[i + 1])
            else:
                t_cross, y_cross = _refine_crossing(stepper, edges[i], edges[i + 1], plane_value)
            dxdt = p.omega * y_cross[4]
            direction = 1 if dxdt > 0 else -1
            if direction_filter == "both" or direction == direction_filter:
                events.append(CrossingEvent(
                    t_cross=t_cross,
                    state=SystemState.from_array(y_cross, dn=s0.dn),
                    direction=direction,
                ))
        times.append(stepper.t)
        states.append(stepper.y.copy())
        if float(np.max(np.abs(stepper.y))) > settings.divergence_norm:
            status = IntegrationStatus.DIVERGED
            t_div = stepper.t
            break
    else:
        status = IntegrationStatus.COMPLETED
    traj = Trajectory(
        times=np.array(times),
        states=np.array(states),
        dn=s0.dn,
        status=status,
        stats=stepper.stats,
        t_div=t_div,
    )
    return traj, events


def _gram_schmidt(vectors: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt in place; returns the pre-normalization norms."""
    k = vectors.shape[0]
    norms = np.empty(k)
    for j in range(k):
        for i in range(j):
            vectors[j] -= np.dot(vectors[j], vectors[i]) * vectors[i]
        norms[j] = np.linalg.norm(vectors[j])
        if norms[j] == 0.0:
            raise NumericalFailureError(f"tangent vector {j} collapsed to zero")
        vectors[j] /= norms[j]
    return norms


def integrate_augmented(
    s0: SystemState,
    tangent0,
    p: ModelParams,
    t_end: float,
    settings: IntegratorSettings | None = None,
    renorm_interval: float = 1.0,
    observer=None,
) -> GrowthLog:
    """Co-integrate the state with tangent vectors dv/dt = J(s) v.

    Every renorm_interval the tangent set is orthonormalized (modified
    Gram-Schmidt) and the pre-normalization log-norms are recorded.  Step
    control is driven by the base-state error only.  observer, when given, is
    called as observer(t, base_state_array, log_norms) at each renormalization.
    """
    settings = settings or IntegratorSettings()
    _check_inputs(s0, t_end, settings)
    if renorm_interval <= 0:
        raise ConfigurationError(f"renorm_interval must be positive, got {renorm_interval}")
    tangents = np.array([np.asarray(v, dtype=float) for v in tangent0])
    if tangents.ndim != 2 or tangents.shape[1] != 5 or not 1 <= tangents.shape[0] <= 5:
        raise ConfigurationError(f"tangent0 must be 1..5 vectors of length 5, got shape {tangents.shape}")
    if np.any(np.linalg.norm(tangents, axis=1) == 0.0):
        raise ConfigurationError("tangent vectors must be nonzero")
    k = tangents.shape[0]
    tangents = tangents / np.linalg.norm(tangents, axis=1)[:, None]

    eps_, alpha_, omega_ = p.eps, p.alpha, p.omega

    def f_aug(t, y):
        n1, om, op, x, px = y[:5]
        d = p.delta + alpha_ * x
        out = np.empty_like(y)
        out[0] = 2.0 * d * om
        out[1] = 2.0 * d * n1 + 2.0 * eps_ * op
        out[2] = -2.0 * eps_ * om
        out[3] = omega_ * px
        out[4] = -(omega_ * x + alpha_ * op)
        v = y[5:].reshape(k, 5)
        jv = np.empty_like(v)
        # rows of the analytic Jacobian applied to each tangent vector
        jv[:, 0] = 2.0 * d * v[:, 1] + 2.0 * alpha_ * om * v[:, 3]
        jv[:, 1] = 2.0 * d * v[:, 0] + 2.0 * eps_ * v[:, 2] + 2.0 * alpha_ * n1 * v[:, 3]
        jv[:, 2] = -2.0 * eps_ * v[:, 1]
        jv[:, 3] = omega_ * v[:, 4]
        jv[:, 4] = -alpha_ * v[:, 2] - omega_ * v[:, 3]
        out[5:] = jv.ravel()
        return out

    y0 = np.concatenate([s0.to_array(), tangents.ravel()])
    stepper = _Dopri5(f_aug, y0, settings, err_dim=5)
    log_times = []
    log_norms = []
    status = IntegrationStatus.STEP_BUDGET_EXHAUSTED
    t_div = None
    n_marks = max(1, round(t_end / renorm_interval))
    mark = 1
    budget_ok = True
    while mark <= n_marks and budget_ok:
        t_mark = min(mark * renorm_interval, t_end)
        while stepper.t < t_mark:
            if not stepper.step(t_mark):
                budget_ok = False
                break
            if float(np.max(np.abs(stepper.y[:5]))) > settings.divergence_norm:
                status = IntegrationStatus.DIVERGED
                t_div = stepper.t
                break
        if t_div is not None:
            break
        if not budget_ok:
            break
        vecs = stepper.y[5:].reshape(k, 5)
        norms = _gram_schmidt(vecs)
        stepper.y[5:] = vecs.ravel()
        stepper.k1 = stepper.f(stepper.t, stepper.y)   # FSAL stage is stale after renorm
        logs = np.log(norms)
        log_times.append(stepper.t)
        log_norms.append(logs)
        if observer is not None:
            observer(stepper.t, stepper.y[:5].copy(), logs)
        mark += 1
    else:
        status = IntegrationStatus.COMPLETED
    return GrowthLog(
        times=np.array(log_times),
        log_norms=np.array(log_norms).reshape(len(log_norms), k),
        status=status,
        stats=stepper.stats,
        t_div=t_div,
        final_state=SystemState.from_array(stepper.y[:5], dn=s0.dn),
        final_tangents=stepper.y[5:].reshape(k, 5).copy(),
    )
