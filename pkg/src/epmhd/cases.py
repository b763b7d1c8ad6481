"""Benchmark problem data: Hartmann channel flow and the driven cavity.

The Hartmann case has a closed-form solution.  With Ha = sqrt(kappa Re Re_m)
and a pressure-gradient magnitude G chosen so the centerline speed is one,

    u_x(y) = G Re (cosh(Ha/2) - cosh(Ha y)) / (2 Ha sinh(Ha/2))
    B_x(y) = G (sinh(Ha y) - 2 sinh(Ha/2) y) / (2 kappa sinh(Ha/2))
    p(x,y) = -G x - kappa B_x(y)^2 / 2

with u = (u_x, 0) and b = (B_x, 1).  The cavity lid drives a unit-flux
quartic velocity profile and a uniform horizontal field enters through the
tangential magnetic data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HartmannParams:
    Re: float = 16.0
    Re_m: float = 16.0
    kappa: float = 1.0

    def __post_init__(self):
        if min(self.Re, self.Re_m, self.kappa) <= 0:
            raise ValueError("Re, Re_m, and kappa must be positive")

    @property
    def Ha(self) -> float:
        return float(np.sqrt(self.kappa * self.Re * self.Re_m))

    @property
    def G(self) -> float:
        """Pressure gradient normalizing the centerline velocity to one."""
        ha = self.Ha
        return 2.0 * ha * np.sinh(ha / 2) / (self.Re * (np.cosh(ha / 2) - 1.0))

    def velocity(self, points):
        y = np.asarray(points)[:, 1]
        ha = self.Ha
        ux = self.G * self.Re * (np.cosh(ha / 2) - np.cosh(ha * y)) / (2 * ha * np.sinh(ha / 2))
        return np.column_stack([ux, np.zeros_like(ux)])

    def velocity_grad(self, points):
        y = np.asarray(points)[:, 1]
        g = np.zeros((len(y), 2, 2))
        g[:, 0, 1] = -self.G * self.Re * np.sinh(self.Ha * y) / (2 * np.sinh(self.Ha / 2))
        return g

    def magnetic(self, points):
        y = np.asarray(points)[:, 1]
        ha = self.Ha
        bx = self.G * (np.sinh(ha * y) - 2 * np.sinh(ha / 2) * y) / (2 * self.kappa * np.sinh(ha / 2))
        return np.column_stack([bx, np.ones_like(bx)])

    def magnetic_grad(self, points):
        y = np.asarray(points)[:, 1]
        ha = self.Ha
        g = np.zeros((len(y), 2, 2))
        g[:, 0, 1] = self.G * (ha * np.cosh(ha * y) - 2 * np.sinh(ha / 2)) / (
            2 * self.kappa * np.sinh(ha / 2)
        )
        return g

    def pressure(self, points):
        pts = np.asarray(points)
        bx = self.magnetic(pts)[:, 0]
        return -self.G * pts[:, 0] - self.kappa * bx ** 2 / 2

    def velocity_data(self, points, side):
        return self.velocity(points)

    def magnetic_data(self, points, side):
        return self.magnetic(points)

    def qoi_exact(self, box) -> float:
        """Integral of u_x over an axis-aligned box, in closed form."""
        x0, x1, y0, y1 = box
        ha = self.Ha
        pre = self.G * self.Re / (2 * ha * np.sinh(ha / 2))
        inner = np.cosh(ha / 2) * (y1 - y0) - (np.sinh(ha * y1) - np.sinh(ha * y0)) / ha
        return float((x1 - x0) * pre * inner)


def lid_profile(x):
    """Unit-flux regularized lid velocity, vanishing at both corners."""
    x = np.asarray(x)
    return 30.0 * (x - 0.5) ** 2 * (x + 0.5) ** 2


@dataclass(frozen=True)
class LidParams:
    Re: float = 1000.0
    Re_m: float = 0.4
    kappa: float = 1.0

    def __post_init__(self):
        if min(self.Re, self.Re_m, self.kappa) <= 0:
            raise ValueError("Re, Re_m, and kappa must be positive")

    def velocity_data(self, points, side):
        pts = np.asarray(points)
        vals = np.zeros((len(pts), 2))
        if side == "top":
            vals[:, 0] = lid_profile(pts[:, 0])
        return vals

    def magnetic_data(self, points, side):
        return np.tile([-1.0, 0.0], (len(np.asarray(points)), 1))

    def homotopy_schedule(self):
        """Reynolds-number continuation steps ending at the target."""
        ramp = [r for r in (200.0, 500.0, 1000.0) if r < self.Re]
        return ramp + [self.Re]
