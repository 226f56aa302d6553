"""
Second-order split-step propagation for ``i d/dt phi = (-1/2 d^2/dx^2 + V) phi``
and imaginary-time relaxation to the ground state.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid1D, WaveFunction


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class StepPlan:
    """Precomputed kinetic half-step ``exp(-i (dt/2) k^2 / 2)`` for one grid."""

    grid: Grid1D
    dt: float
    kinetic_half_factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        k = self.grid.wavenumbers
        f = np.exp(-0.25j * self.dt * k**2)
        f.setflags(write=False)
        object.__setattr__(self, "kinetic_half_factor", f)


def make_plan(grid: Grid1D, dt: float) -> StepPlan:
    return StepPlan(grid, float(dt))


def kinetic_half(values: np.ndarray, plan: StepPlan) -> np.ndarray:
    return np.fft.ifft(plan.kinetic_half_factor * np.fft.fft(values))


def potential_phase(values: np.ndarray, V: np.ndarray, dt: float) -> np.ndarray:
    return np.exp(-1j * dt * V) * values


def strang_step(phi: WaveFunction, plan: StepPlan, V_total) -> WaveFunction:
    """One K(dt/2) P(dt) K(dt/2) step with ``V_total`` frozen over the step."""
    V_total = np.asarray(V_total, dtype=float)
    if not np.all(np.isfinite(V_total)):
        raise ValueError("potential is not finite on the grid")
    if not phi.grid.same_as(plan.grid):
        raise ValueError("wavefunction and step plan use different grids")
    v = kinetic_half(phi.values, plan)
    v = potential_phase(v, V_total, plan.dt)
    v = kinetic_half(v, plan)
    return WaveFunction(phi.grid, v)


def propagate(phi: WaveFunction, V, dt: float, steps: int) -> WaveFunction:
    """Apply ``steps`` Strang steps with a static potential."""
    plan = make_plan(phi.grid, dt)
    V = np.asarray(V, dtype=float)
    if not np.all(np.isfinite(V)):
        raise ValueError("potential is not finite on the grid")
    # K/2 K/2 between consecutive steps fuse into one full kinetic step
    full = plan.kinetic_half_factor**2
    expV = np.exp(-1j * dt * V)
    v = phi.values
    if steps <= 0:
        return phi.copy()
    v = np.fft.ifft(plan.kinetic_half_factor * np.fft.fft(v))
    for i in range(steps):
        v = expV * v
        mult = plan.kinetic_half_factor if i == steps - 1 else full
        v = np.fft.ifft(mult * np.fft.fft(v))
    return WaveFunction(phi.grid, v)


def apply_hamiltonian(values: np.ndarray, grid: Grid1D, V) -> np.ndarray:
    """``(-1/2 d^2/dx^2 + V) values`` with the spectral Laplacian."""
    k2 = grid.wavenumbers**2
    return np.fft.ifft(0.5 * k2 * np.fft.fft(values)) + np.asarray(V) * values


def rayleigh_quotient(phi: WaveFunction, V) -> float:
    v = phi.values
    num = np.vdot(v, apply_hamiltonian(v, phi.grid, V)).real
    return float(num / np.vdot(v, v).real)


def imaginary_time_ground_state(V, grid: Grid1D, dt_im: float = 5e-3, tol: float = 1e-12,
                                max_iter: int = 200_000, initial: WaveFunction = None
                                ) -> WaveFunction:
    """Relax to the lowest eigenstate of ``-1/2 d^2/dx^2 + V`` on ``grid``.

    Uses the real-time splitting with ``dt -> -i dt_im``, renormalizing after
    every step, until consecutive energies differ by less than ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if dt_im <= 0:
        raise ValueError("dt_im must be positive")
    V = np.asarray(V, dtype=float)
    if not np.all(np.isfinite(V)):
        raise ValueError("potential is not finite on the grid")
    k2 = grid.wavenumbers**2
    half_k = np.exp(-0.25 * dt_im * k2)
    # shifting V only rescales the iterate, and keeps exp() in range
    expV = np.exp(-dt_im * (V - V.min()))
    if initial is None:
        x = grid.points
        center = x[np.argmin(V)]
        v = np.exp(-((x - center) ** 2) / 2.0).astype(complex)
    else:
        v = initial.values.copy()
    dx = grid.dx
    v = v / np.sqrt(np.vdot(v, v).real * dx)
    energy = rayleigh_quotient(WaveFunction(grid, v), V)
    for _ in range(max_iter):
        v = np.fft.ifft(half_k * np.fft.fft(v))
        v = expV * v
        v = np.fft.ifft(half_k * np.fft.fft(v))
        v = v / np.sqrt(np.vdot(v, v).real * dx)
        new = rayleigh_quotient(WaveFunction(grid, v), V)
        change = abs(new - energy)
        if change < tol:
            # fix the global phase so the result is real and mostly positive
            phase = np.exp(-1j * np.angle(v[np.argmax(np.abs(v))]))
            return WaveFunction(grid, v * phase)
        energy = new
    raise ConvergenceError(
        f"imaginary-time relaxation did not converge in {max_iter} steps "
        f"(last energy change {change:.3e})"
    )
