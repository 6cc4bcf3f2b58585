"""Problem description shared by the integrator, adjoint and optimizer."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError
from .groups import MatrixGroup, MetricOperator
from .manifolds import GroupAction, Manifold, TargetSchedule, check_pair


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Inexact interpolation problem on a matrix group.

    ``action_side`` says whether the orbit point is g Q0 ("left") or
    g^-1 Q0 ("right"); ``reduction_side`` whether velocities are dg g^-1
    ("right") or g^-1 dg ("left"). The numerical core works with right
    reduction; ``canonical()`` maps left-reduced problems onto it.
    """

    group: MatrixGroup
    metric: MetricOperator
    lagrangian: object
    manifold: Manifold
    schedule: TargetSchedule
    sigma: float
    h: float
    N: int
    xi0_initial: np.ndarray
    action_side: str = "left"
    reduction_side: str = "right"
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "xi0_initial", np.asarray(self.xi0_initial, dtype=float))
        self.validate()

    def validate(self):
        check_pair(self.group, self.manifold)
        if self.metric.dim != self.group.dim:
            raise ConfigError("metric dimension does not match the group")
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if not self.h > 0:
            raise ConfigError("step size h must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError("N must be a positive integer")
        if self.xi0_initial.shape != (self.group.dim,):
            raise ConfigError("initial xi0 has the wrong length")
        if self.action_side not in ("left", "right"):
            raise ConfigError("action_side must be 'left' or 'right'")
        if self.reduction_side not in ("left", "right"):
            raise ConfigError("reduction_side must be 'left' or 'right'")
        if not self.radius > 0:
            raise ConfigError("Cayley radius must be positive")
        self.schedule.validate(self.N)
        for q in (self.schedule.initial, *self.schedule.targets):
            if np.shape(q) != (self.manifold.ambient_dim,) or self.manifold.residual(q) > 1e-10:
                raise ConfigError(f"point {q} is not on {self.manifold.name}")

    @cached_property
    def action(self) -> GroupAction:
        return GroupAction(self.group, self.manifold, self.schedule.initial, self.action_side)

    @property
    def dim(self):
        return self.group.dim

    @property
    def nodes(self):
        return tuple(self.schedule.nodes)

    def replace(self, **changes) -> "ProblemSpec":
        return dataclasses.replace(self, **changes)

    def with_sigma(self, sigma: float) -> "ProblemSpec":
        return self.replace(sigma=float(sigma))

    @property
    def is_canonical(self):
        return self.reduction_side == "right"

    def canonical(self) -> "ProblemSpec":
        """Equivalent right-reduced problem.

        With G = g^-1 the velocities and momenta change sign, the Lagrangian
        is composed with xi -> -xi and the orbit point g Q0 becomes G^-1 Q0,
        so the action side flips as well.
        """
        if self.is_canonical:
            return self
        flip = {"left": "right", "right": "left"}
        return self.replace(lagrangian=self.lagrangian.converted(),
                            xi0_initial=-self.xi0_initial,
                            action_side=flip[self.action_side],
                            reduction_side="right")
