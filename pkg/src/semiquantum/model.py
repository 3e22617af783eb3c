"""Physical model: parameters, state, vector field, invariants.

The dynamical system couples a classical harmonic field mode (X, P) to the
mean values of a two-boson quantum subsystem.  The closed set of variables is
(n1, om, op, x, p) with n1 = <N+1>, om = <O_->, op = <O_+>, plus the constant
population difference dn = <dN>.  Two quantities are conserved for every
coupling strength: the hyperboloid invariant I = n1^2 - om^2 - op^2 and the
effective energy E_eff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InfeasibleConstraintError

__all__ = [
    "ModelParams",
    "SystemState",
    "Derivative",
    "InvariantPair",
    "ValidityReport",
    "vector_field",
    "jacobian",
    "invariant_I",
    "effective_energy",
    "invariants",
    "validate_state",
    "make_initial",
    "parity_map_params",
    "parity_map_state",
    "rhs",
    "jacobian_matrix",
]


@dataclass(frozen=True)
class ModelParams:
    """The five physical constants of one system instance.

    eps   : mean single-boson energy (> 0)
    gamma : half the level splitting (|gamma| < eps); does not enter the
            closed equations of motion, only the normal-mode taxonomy
    delta : quantum pairing coupling
    alpha : matter-field coupling (alpha = 0 decouples the subsystems)
    omega : classical oscillator frequency (> 0)
    """

    eps: float
    gamma: float
    delta: float
    alpha: float
    omega: float

    def __post_init__(self):
        vals = (self.eps, self.gamma, self.delta, self.alpha, self.omega)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite model parameter in {vals}")
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if abs(self.gamma) >= self.eps:
            raise ValueError(f"|gamma| must be < eps, got gamma={self.gamma}, eps={self.eps}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")

    def replace(self, **kwargs) -> "ModelParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class SystemState:
    """One point of the 5-dimensional flow plus the conserved dn.

    n1 = <N+1> (so the physical boson number is n1 - 1), om = <O_->,
    op = <O_+>, (x, p) the classical field quadratures.  dn is carried as a
    constant label, never integrated.
    """

    n1: float
    om: float
    op: float
    x: float
    p: float
    dn: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_tuple() + (self.dn,)):
            raise ValueError(f"non-finite state component in {self}")

    def as_tuple(self):
        return (self.n1, self.om, self.op, self.x, self.p)

    def to_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)

    @classmethod
    def from_array(cls, y, dn: float = 0.0) -> "SystemState":
        n1, om, op, x, p = (float(v) for v in y)
        return cls(n1=n1, om=om, op=op, x=x, p=p, dn=dn)


@dataclass(frozen=True)
class Derivative:
    """Time derivatives of the five dynamical components (dn is identically 0)."""

    dn1: float
    dom: float
    dop: float
    dx: float
    dp: float

    def to_array(self) -> np.ndarray:
        return np.array([self.dn1, self.dom, self.dop, self.dx, self.dp])


@dataclass(frozen=True)
class InvariantPair:
    """The two conserved quantities of a trajectory."""

    e_eff: float
    i_inv: float


@dataclass(frozen=True)
class ValidityReport:
    """Outcome of the physical-admissibility check.

    failures lists (constraint name, margin) pairs; margin is how far the
    constraint is violated (positive on failure).
    """

    ok: bool
    failures: tuple = ()


def rhs(y: np.ndarray, p: ModelParams) -> np.ndarray:
    """Array-valued right-hand side of the equations of motion.

    Component order (n1, om, op, x, p).  No finiteness checks: this is the
    hot path used by the integrator, which may probe unphysical trial points.
    """
    n1, om, op, x, px = y
    d = p.delta + p.alpha * x
    return np.array([
        2.0 * d * om,
        2.0 * d * n1 + 2.0 * p.eps * op,
        -2.0 * p.eps * om,
        p.omega * px,
        -(p.omega * x + p.alpha * op),
    ])


def jacobian_matrix(y: np.ndarray, p: ModelParams) -> np.ndarray:
    """5x5 Jacobian of :func:`rhs`, row order (n1, om, op, x, p)."""
    n1, om, op, x, px = y
    d = p.delta + p.alpha * x
    a = p.alpha
    return np.array([
        [0.0, 2.0 * d, 0.0, 2.0 * a * om, 0.0],
        [2.0 * d, 0.0, 2.0 * p.eps, 2.0 * a * n1, 0.0],
        [0.0, -2.0 * p.eps, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, p.omega],
        [0.0, 0.0, -a, -p.omega, 0.0],
    ])


def vector_field(s: SystemState, p: ModelParams) -> Derivative:
    """Time derivative of a state under the coupled equations of motion."""
    d = rhs(s.to_array(), p)
    if not np.all(np.isfinite(d)):
        raise ValueError(f"non-finite derivative for state {s}")
    return Derivative(*(float(v) for v in d))


def jacobian(s: SystemState, p: ModelParams) -> np.ndarray:
    """Analytic Jacobian at a state; constant in the state when alpha = 0."""
    j = jacobian_matrix(s.to_array(), p)
    if not np.all(np.isfinite(j)):
        raise ValueError(f"non-finite jacobian for state {s}")
    return j


def invariant_I(s: SystemState) -> float:
    """Hyperboloid invariant n1^2 - om^2 - op^2, conserved for all alpha."""
    return s.n1 * s.n1 - s.om * s.om - s.op * s.op


def effective_energy(s: SystemState, p: ModelParams) -> float:
    """Conserved effective energy eps*(n1-1) + (delta+alpha*x)*op + (omega/2)(p^2+x^2)."""
    return (
        p.eps * (s.n1 - 1.0)
        + (p.delta + p.alpha * s.x) * s.op
        + 0.5 * p.omega * (s.p * s.p + s.x * s.x)
    )


def invariants(s: SystemState, p: ModelParams) -> InvariantPair:
    return InvariantPair(e_eff=effective_energy(s, p), i_inv=invariant_I(s))


def validate_state(s: SystemState) -> ValidityReport:
    """Check physical admissibility: n1 >= 1 and I >= 0.

    A failing report is a normal return, never an exception.
    """
    failures = []
    if s.n1 < 1.0:
        failures.append(("n1 >= 1", 1.0 - s.n1))
    i_val = invariant_I(s)
    if i_val < 0.0:
        failures.append(("invariant_I >= 0", -i_val))
    return ValidityReport(ok=not failures, failures=tuple(failures))


def make_initial(
    e_target: float,
    i_target: float,
    om0: float,
    op0: float,
    x0: float,
    dn0: float,
    p: ModelParams,
    momentum_sign: int = -1,
) -> SystemState:
    """Build a state on the (E_eff, I) shell with given (om0, op0, x0).

    Solves n1 from the invariant first, then the field momentum from the
    energy, so families of initial conditions at fixed invariants can be
    generated by scanning om0 (or op0, x0).
    """
    if momentum_sign not in (-1, 1):
        raise ValueError(f"momentum_sign must be +1 or -1, got {momentum_sign}")
    n1_sq = i_target + om0 * om0 + op0 * op0
    if n1_sq < 0.0:
        raise InfeasibleConstraintError("n1^2 = I + om0^2 + op0^2 >= 0", n1_sq)
    n1 = math.sqrt(n1_sq)
    if n1 < 1.0:
        raise InfeasibleConstraintError("n1 >= 1", n1 - 1.0)
    p_sq = (
        2.0 / p.omega * (e_target - p.eps * (n1 - 1.0) - (p.delta + p.alpha * x0) * op0)
        - x0 * x0
    )
    if p_sq < 0.0:
        raise InfeasibleConstraintError("p^2 = (2/omega)*(E - eps*(n1-1) - (delta+alpha*x0)*op0) - x0^2 >= 0", p_sq)
    return SystemState(n1=n1, om=om0, op=op0, x=x0, p=momentum_sign * math.sqrt(p_sq), dn=dn0)


def parity_map_params(p: ModelParams) -> ModelParams:
    """The exact symmetry (delta, alpha) -> (-delta, -alpha) of the flow."""
    return p.replace(delta=-p.delta, alpha=-p.alpha)


def parity_map_state(s: SystemState) -> SystemState:
    """State half of the parity symmetry: (om, op) -> (-om, -op)."""
    return SystemState(n1=s.n1, om=-s.om, op=-s.op, x=s.x, p=s.p, dn=s.dn)
