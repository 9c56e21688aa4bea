"""Div-curl recovery: velocity from vorticity in the doubly connected channel.

The harmonic direction g = [0,1]^T carries the through-channel mean flow,
which the vorticity does not see; its coefficient is prescribed separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .spectral import EVEN, ODD, Grid, ScalarField


@dataclass
class VelocityField:
    """u = (u1, u2) with u1 odd (u.n = 0 at walls) and u2 even; mean_coeff = int u.g."""

    u1: ScalarField
    u2: ScalarField
    mean_coeff: float

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    def max_abs(self) -> tuple[float, float]:
        return float(np.max(np.abs(self.u1.values))), float(np.max(np.abs(self.u2.values)))


def solve_streamfunction(w: ScalarField) -> ScalarField:
    """psi with -Laplace(psi) = w and psi = 0 on the walls (odd basis is invertible)."""
    if w.parity != ODD:
        raise sp.SpectralError("vorticity must be odd parity")
    c = sp.transform_forward(w)
    c.coeffs /= sp.laplacian_symbol(w.grid, ODD)
    return sp.transform_inverse(c)


def velocity_from_vorticity(w: ScalarField, mean: float = 0.0) -> VelocityField:
    """u = grad^perp(psi) + c*g with curl u = w, div u = 0, int u.g = mean."""
    psi = solve_streamfunction(w)
    u1 = sp.differentiate(psi, "x2")
    u2 = sp.differentiate(psi, "x1")
    u2.values *= -1.0
    c = mean - sp.integrate_domain(u2)
    u2.values += c
    return VelocityField(u1, u2, float(mean))


def curl(u: VelocityField) -> ScalarField:
    """curl u = d1 u2 - d2 u1 (odd parity)."""
    return sp.differentiate(u.u2, "x1") - sp.differentiate(u.u1, "x2")


def divergence(u: VelocityField) -> ScalarField:
    return sp.differentiate(u.u1, "x1") + sp.differentiate(u.u2, "x2")


def divcurl_residual(u: VelocityField, w: ScalarField) -> tuple[float, float, float, float]:
    """(||div u||, ||curl u - w||, max |u.n| at walls, |int u.g - mean_coeff|)."""
    div_norm = sp.l2_norm(divergence(u))
    curl_norm = sp.l2_norm(curl(u) - w)
    wall = max(
        float(np.max(np.abs(sp.wall_trace(u.u1, -1)))),
        float(np.max(np.abs(sp.wall_trace(u.u1, +1)))),
    )
    mean_err = abs(sp.integrate_domain(u.u2) - u.mean_coeff)
    return div_norm, curl_norm, wall, mean_err


def velocity_h1_norm(u: VelocityField) -> float:
    return float(np.hypot(sp.sobolev_norm(u.u1, 1), sp.sobolev_norm(u.u2, 1)))
