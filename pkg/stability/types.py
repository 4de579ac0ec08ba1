"""
Domain types of the stable-state sampler.
"""

from dataclasses import dataclass, field

import numpy as np

from config.constants import (
    AL_EQ_TOL, AL_GRAD_TOL, AL_INEQ_TOL, AL_INITIAL_PENALTY, AL_MAX_INNER, AL_MAX_OUTER, AL_MAX_PENALTY,
    AL_PENALTY_GROWTH,
)
from functions.errors import ValidationError
from physics.types import SystemState


@dataclass(frozen=True)
class ContactAssignment:
    """
    Active contact pairs (body_a, body_b). body_a is always a free object;
    for object-object pairs it is the lower index.
    """
    contacts: tuple[tuple[str, str], ...]

    @property
    def count(self) -> int:
        return len(self.contacts)

    def validate(self) -> "ContactAssignment":
        if not 1 <= self.count <= 3:
            raise ValidationError(f"An assignment holds 1 to 3 contacts, got {self.count}.")
        if len(set(self.contacts)) != self.count:
            raise ValidationError(f"Contact pairs are not distinct: {self.contacts}.")
        for a, _ in self.contacts:
            if not a.startswith("object"):
                raise ValidationError(f"Contact pair must start with a free object, got '{a}'.")
        return self

    def to_list(self) -> list[list[str]]:
        return [list(pair) for pair in self.contacts]

    @classmethod
    def from_list(cls, pairs) -> "ContactAssignment":
        return cls(contacts=tuple((str(a), str(b)) for a, b in pairs))


@dataclass(frozen=True, eq=False)
class ContactVariable:
    point: np.ndarray  # (3,) m
    force: np.ndarray  # (3,) N, acting on body_a


@dataclass(frozen=True, eq=False)
class NlpResiduals:
    equality: np.ndarray
    inequality: np.ndarray  # violation where positive

    @property
    def equality_norm(self) -> float:
        return float(np.max(np.abs(self.equality))) if self.equality.size else 0.0

    @property
    def max_violation(self) -> float:
        return float(max(0.0, np.max(self.inequality))) if self.inequality.size else 0.0


@dataclass(frozen=True, eq=False)
class StableState:
    """A zero-velocity configuration in quasi-static equilibrium, element of C_s."""
    config: SystemState
    assignment: ContactAssignment
    contact_vars: list[ContactVariable]
    residual_norm: float
    id: int

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "config": self.config.to_dict(),
            "assignment": self.assignment.to_list(),
            "contact_vars": [{"point": v.point.tolist(), "force": v.force.tolist()} for v in self.contact_vars],
            "residual_norm": self.residual_norm,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StableState":
        return cls(
            config=SystemState.from_dict(data["config"]),
            assignment=ContactAssignment.from_list(data["assignment"]),
            contact_vars=[ContactVariable(point=np.array(v["point"], dtype=float),
                                          force=np.array(v["force"], dtype=float))
                          for v in data["contact_vars"]],
            residual_norm=float(data["residual_norm"]),
            id=int(data["id"]),
        )


@dataclass(frozen=True)
class SolverSettings:
    """Augmented-Lagrangian schedule."""
    eq_tol: float = AL_EQ_TOL
    ineq_tol: float = AL_INEQ_TOL
    grad_tol: float = AL_GRAD_TOL
    initial_penalty: float = AL_INITIAL_PENALTY
    penalty_growth: float = AL_PENALTY_GROWTH
    max_penalty: float = AL_MAX_PENALTY
    max_outer: int = AL_MAX_OUTER
    max_inner: int = AL_MAX_INNER


@dataclass
class SamplingStats:
    """Attempts spent on each state of a sampling run."""
    attempts: list[int] = field(default_factory=list)
    solver_failures: int = 0
    validation_failures: int = 0

    @property
    def total_attempts(self) -> int:
        return sum(self.attempts)

    def found_within(self, budget: int) -> int:
        return sum(1 for a in self.attempts if a <= budget)

    def success_rate(self) -> float:
        return len(self.attempts) / self.total_attempts if self.total_attempts else 0.0

    def summary(self, budgets=(1, 10, 100)) -> dict:
        return {
            "states": len(self.attempts),
            "total_attempts": self.total_attempts,
            "success_rate": self.success_rate(),
            "solver_failures": self.solver_failures,
            "validation_failures": self.validation_failures,
            "found_within": {str(b): self.found_within(b) for b in budgets},
        }
