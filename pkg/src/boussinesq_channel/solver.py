"""IMEX time stepping for the controlled vorticity-temperature system.

d_t w - nu*Lap(w) + (u.grad)w = d1(theta) + phi
d_t theta - tau*Lap(theta) + (u.grad)theta = I_omega*eta + psi
curl u = w, div u = 0, u.n|walls = 0, int u.g = c(t), c'(t) = int theta

Diffusion is Crank-Nicolson (diagonal per mode); advection, buoyancy, forcing
and control are Adams-Bashforth 2 with a Heun first step.  A prescribed mean
flow can be eliminated exactly by integrating in a vertically co-moving frame
(``ForcingSpec.frame_shift``), which removes its CFL constraint and its time
integration error entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import spectral as sp
from .elliptic import VelocityField, divcurl_residual, velocity_from_vorticity
from .spectral import EVEN, ODD, Grid, ScalarField


class SolverBlowupError(RuntimeError):
    """NaN/Inf detected during time stepping."""


@dataclass(frozen=True)
class DtPolicy:
    """Fixed step or CFL-limited step (diffusion is implicit, so no h^2 bound)."""

    mode: str = "fixed"  # "fixed" | "cfl"
    dt: float = 1e-3
    c_cfl: float = 0.4
    dt_max: float = 1e-2
    dt_min: float = 1e-12

    def __post_init__(self):
        if self.mode not in ("fixed", "cfl"):
            raise ValueError(f"unknown dt policy mode {self.mode!r}")
        if self.dt <= 0 or self.dt_max <= 0:
            raise ValueError("time steps must be positive")

    def step_size(self, grid: Grid, u: VelocityField) -> float:
        if self.mode == "fixed":
            return self.dt
        m1, m2 = u.max_abs()
        h1 = 2.0 / grid.nx1
        h2 = 2.0 * np.pi / grid.nx2
        dt = self.dt_max
        if m1 > 0:
            dt = min(dt, self.c_cfl * h1 / m1)
        if m2 > 0:
            dt = min(dt, self.c_cfl * h2 / m2)
        return max(dt, self.dt_min)


@dataclass(frozen=True)
class SimConfig:
    nu: float
    tau: float
    grid: Grid
    dt_policy: DtPolicy = field(default_factory=DtPolicy)
    control_region: tuple[float, float] = (0.0, np.pi)

    def __post_init__(self):
        if self.nu <= 0 or self.tau <= 0:
            raise ValueError("nu and tau must be positive")
        a, b = self.control_region
        if not (0.0 <= a < b < 2.0 * np.pi):
            raise ValueError(f"control region needs 0 <= a < b < 2*pi, got ({a}, {b})")


@dataclass
class State:
    w: ScalarField
    theta: ScalarField
    mean_coeff: float
    t: float

    def copy(self) -> "State":
        return State(self.w.copy(), self.theta.copy(), self.mean_coeff, self.t)


@dataclass
class ForcingSpec:
    """External forces and (optionally) a prescribed mean-flow component.

    phi/psi map t to lab-frame fields (odd / even mean-free).  When
    ``frame_shift`` b(t) is given, the run integrates in the frame moving with
    the prescribed mean flow b'(t); sources are translated into the frame and
    snapshots are translated back, so callers never see frame coordinates.
    """

    phi: Optional[Callable[[float], ScalarField]] = None
    psi: Optional[Callable[[float], ScalarField]] = None
    mean_offset: Optional[Callable[[float], float]] = None
    frame_shift: Optional[Callable[[float], float]] = None


ZERO_FORCING = ForcingSpec()


class ControlSchedule:
    """Temperature source supported in the control strip; possibly state-dependent."""

    mean_free: bool = True

    def field(self, t: float, state: State) -> Optional[ScalarField]:
        raise NotImplementedError


class FieldControl(ControlSchedule):
    """State-independent control given by a callable t -> ScalarField (or None)."""

    def __init__(self, field_fn: Callable[[float], Optional[ScalarField]], mean_free: bool = True):
        self._fn = field_fn
        self.mean_free = mean_free

    def field(self, t: float, state: State) -> Optional[ScalarField]:
        return self._fn(t)


def advect(u: VelocityField, f: ScalarField) -> ScalarField:
    """Dealiased (u.grad)f; result has the parity of f."""
    d1 = sp.differentiate(f, "x1")
    d2 = sp.differentiate(f, "x2")
    prod = u.u1.values * d1.values + u.u2.values * d2.values
    out = ScalarField(f.grid, prod, f.parity)
    return sp.transform_inverse(sp.dealias(sp.transform_forward(out)))


@dataclass
class Trajectory:
    snapshots: list
    times: np.ndarray
    theta_means: np.ndarray
    mean_coeffs: np.ndarray
    final: State
    control_was_zero: bool


class Stepper:
    """CNAB2 integrator bound to one (config, forcing, control) triple."""

    def __init__(self, config: SimConfig, forcing: ForcingSpec = ZERO_FORCING,
                 control: Optional[ControlSchedule] = None, buoyancy: bool = True):
        self.config = config
        self.forcing = forcing
        self.control = control
        self.buoyancy = buoyancy
        g = config.grid
        self._lam_w = sp.laplacian_symbol(g, ODD)
        self._lam_t = sp.laplacian_symbol(g, EVEN)
        self._hist: Optional[tuple[np.ndarray, np.ndarray, float]] = None

    # -- frame helpers ---------------------------------------------------
    def _shift(self, t: float) -> float:
        if self.forcing.frame_shift is None:
            return 0.0
        return self.forcing.frame_shift(t)

    def _source_field(self, fn, t: float) -> Optional[ScalarField]:
        if fn is None:
            return None
        f = fn(t)
        if f is None:
            return None
        b = self._shift(t)
        return sp.translate_x2(f, b) if b != 0.0 else f

    def velocity(self, state: State) -> VelocityField:
        mean = state.mean_coeff
        if self.forcing.frame_shift is None and self.forcing.mean_offset is not None:
            mean = mean + self.forcing.mean_offset(state.t)
        return velocity_from_vorticity(state.w, mean)

    # -- RHS -------------------------------------------------------------
    def explicit_rhs(self, state: State) -> tuple[np.ndarray, np.ndarray]:
        """Coefficient-space explicit terms (advection, buoyancy, forcing, control)."""
        u = self.velocity(state)
        nw = -advect(u, state.w)
        nt = -advect(u, state.theta)
        if self.buoyancy:
            nw = nw + sp.differentiate(state.theta, "x1")
        phi = self._source_field(self.forcing.phi, state.t)
        if phi is not None:
            nw = nw + phi
        psi = self._source_field(self.forcing.psi, state.t)
        if psi is not None:
            nt = nt + psi
        if self.control is not None:
            eta = self.control.field(state.t, state)
            if eta is not None:
                b = self._shift(state.t)
                if b != 0.0:
                    eta = sp.translate_x2(eta, b)
                nt = nt + eta
        return sp.transform_forward(nw).coeffs, sp.transform_forward(nt).coeffs

    def _cn_advance(self, state: State, nw: np.ndarray, nt: np.ndarray, dt: float) -> State:
        """One Crank-Nicolson diffusion solve given explicit increments."""
        cfg = self.config
        cw = sp.transform_forward(state.w).coeffs
        ct = sp.transform_forward(state.theta).coeffs
        aw = (1.0 - 0.5 * dt * cfg.nu * self._lam_w)
        bw = (1.0 + 0.5 * dt * cfg.nu * self._lam_w)
        at = (1.0 - 0.5 * dt * cfg.tau * self._lam_t)
        bt = (1.0 + 0.5 * dt * cfg.tau * self._lam_t)
        new_w = (aw * cw + dt * nw) / bw
        new_t = (at * ct + dt * nt) / bt
        g = cfg.grid
        w = sp.transform_inverse(sp.SpectralCoeffs(g, new_w, ODD))
        theta = sp.transform_inverse(sp.SpectralCoeffs(g, new_t, EVEN))
        return State(w, theta, state.mean_coeff, state.t + dt)

    def step(self, state: State, dt: float) -> State:
        """Advance one step; AB2 after the first (Heun) step, trapezoid for c(t)."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        m_old = sp.integrate_domain(state.theta)
        nw, nt = self.explicit_rhs(state)
        if self._hist is None:
            # Heun startup: CN predictor, then trapezoidal explicit correction
            pred = self._cn_advance(state, nw, nt, dt)
            pred.mean_coeff = state.mean_coeff
            nw2, nt2 = self.explicit_rhs(pred)
            new = self._cn_advance(state, 0.5 * (nw + nw2), 0.5 * (nt + nt2), dt)
        else:
            nw_p, nt_p, dt_p = self._hist
            r = dt / dt_p
            ew = (1.0 + 0.5 * r) * nw - 0.5 * r * nw_p
            et = (1.0 + 0.5 * r) * nt - 0.5 * r * nt_p
            new = self._cn_advance(state, ew, et, dt)
        self._hist = (nw, nt, dt)
        m_new = sp.integrate_domain(new.theta)
        new.mean_coeff = state.mean_coeff + 0.5 * dt * (m_old + m_new)
        if not (np.isfinite(new.w.values).all() and np.isfinite(new.theta.values).all()):
            raise SolverBlowupError(
                f"non-finite state at t={new.t:.6g} (dt={dt:.3g}, "
                f"|w|max={np.nanmax(np.abs(new.w.values)):.3g})"
            )
        return new

    def to_lab_frame(self, state: State) -> State:
        b = self._shift(state.t)
        if b == 0.0:
            return state.copy()
        return State(
            sp.translate_x2(state.w, -b),
            sp.translate_x2(state.theta, -b),
            state.mean_coeff,
            state.t,
        )


def run(state0: State, t_end: float, forcing: ForcingSpec, control: Optional[ControlSchedule],
        config: SimConfig, snapshot_times: tuple = (), buoyancy: bool = True) -> Trajectory:
    """Integrate to t_end, landing exactly on requested snapshot times.

    Snapshots and the final state are always reported in lab-frame coordinates.
    """
    if t_end < state0.t:
        raise ValueError(f"t_end={t_end} before initial time {state0.t}")
    stepper = Stepper(config, forcing, control, buoyancy=buoyancy)
    if stepper.forcing.frame_shift is not None and abs(stepper._shift(state0.t)) > 0:
        raise ValueError("frame_shift must vanish at the initial time")
    snaps_req = sorted(t for t in snapshot_times if state0.t < t <= t_end)
    marks = sorted(set(snaps_req + [t_end]))
    state = state0.copy()
    snapshots = []
    times = [state.t]
    means = [sp.integrate_domain(state.theta)]
    coeffs = [state.mean_coeff]
    if state0.t in snapshot_times:
        snapshots.append(state0.copy())
    if t_end == state0.t:
        return Trajectory(snapshots or [state0.copy()], np.array(times), np.array(means),
                          np.array(coeffs), state0.copy(), control is None)
    for mark in marks:
        while state.t < mark - 1e-14:
            u = stepper.velocity(state)
            dt = config.dt_policy.step_size(config.grid, u)
            dt = min(dt, mark - state.t)
            state = stepper.step(state, dt)
            times.append(state.t)
            means.append(sp.integrate_domain(state.theta))
            coeffs.append(state.mean_coeff)
        state.t = mark
        if mark in snaps_req:
            snapshots.append(stepper.to_lab_frame(state))
    final = stepper.to_lab_frame(state)
    return Trajectory(snapshots, np.array(times), np.array(means), np.array(coeffs),
                      final, control is None)


def energy_diagnostics(state: State) -> dict:
    return {
        "t": state.t,
        "w_l2": sp.sobolev_norm(state.w, 0),
        "w_h1": sp.sobolev_norm(state.w, 1),
        "theta_l2": sp.sobolev_norm(state.theta, 0),
        "theta_h2": sp.sobolev_norm(state.theta, 2),
        "mean_coeff": state.mean_coeff,
    }


def elliptic_residuals(state: State) -> tuple[float, float, float, float]:
    """Div-curl residuals of the recovered velocity (delegates to elliptic)."""
    u = velocity_from_vorticity(state.w, state.mean_coeff)
    return divcurl_residual(u, state.w)
