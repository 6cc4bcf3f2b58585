"""Second-order reduced Lagrangians l(xi0, xi1).

Both shipped kinds are quadratic in xi1, so the inverse Legendre map is an
explicit linear solve.
"""
from __future__ import annotations

import numpy as np

from .groups import MatrixGroup, MetricOperator
from ._kernels._pykernels import ad_dagger_jacobian


class SquaredVelocity:
    """l = 1/2 |xi1|^2 in the metric gamma."""

    kind = "squared_velocity"
    sign = 0.0

    def __init__(self, group: MatrixGroup, metric: MetricOperator):
        self.group = group
        self.metric = metric
        self.z = np.zeros(group.dim)

    def value(self, xi0, xi1):
        return 0.5 * self.metric.norm_sq(xi1)

    def d_xi0(self, xi0, xi1):
        return np.zeros_like(xi0)

    def d_xi1(self, xi0, xi1):
        return self.metric.flat(xi1)

    def solve_xi1(self, xi0, mu1):
        return self.metric.sharp(mu1)

    def converted(self):
        return self

    def to_dict(self):
        return {"kind": self.kind}


class CubicReduced:
    """l = 1/2 |xi1 + sign * ad_dagger(xi0, xi0 - z)|^2 in the metric gamma.

    sign = -1 with z = 0 is the rigid-body form for left-reduced velocities;
    a nonzero offset z models a strand with a preferred reference shape.
    """

    kind = "cubic_reduced"

    def __init__(self, group: MatrixGroup, metric: MetricOperator, sign: float = 1.0, z=None):
        self.group = group
        self.metric = metric
        self.sign = float(sign)
        self.z = np.zeros(group.dim) if z is None else np.asarray(z, dtype=float)

    def drift(self, xi0):
        g = self.metric
        return g.sharp(self.group.ad_star(xi0, g.flat(xi0 - self.z)))

    def drift_jacobian(self, xi0):
        g = self.metric
        return ad_dagger_jacobian(self.group.structure_constants, g.gamma, g.gamma_inv,
                                  xi0, self.z)

    def value(self, xi0, xi1):
        return 0.5 * self.metric.norm_sq(xi1 + self.sign * self.drift(xi0))

    def d_xi1(self, xi0, xi1):
        return self.metric.flat(xi1 + self.sign * self.drift(xi0))

    def d_xi0(self, xi0, xi1):
        return self.sign * self.drift_jacobian(xi0).T @ self.d_xi1(xi0, xi1)

    def solve_xi1(self, xi0, mu1):
        return self.metric.sharp(mu1) - self.sign * self.drift(xi0)

    def converted(self):
        """Same Lagrangian seen through xi -> -xi (swap of reduction side)."""
        return CubicReduced(self.group, self.metric, -self.sign, -self.z)

    def to_dict(self):
        return {"kind": self.kind, "sign": self.sign, "z": [float(x) for x in self.z]}
