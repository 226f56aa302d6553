"""
Time integration of the coupled Hartree system and its Picard iteration.

The coupled step is K(dt/2) P(dt) K(dt/2) on both factors. The averaged
potentials are evaluated after the first kinetic half-step; the potential
substep multiplies by a unimodular phase, so the densities (and therefore
the averages) do not change across it and the frozen-average subflow is
solved exactly.

In the Picard iteration every iterate is a pair of *linear* evolutions
driven by averages taken from the previous iterate at the same stage of
the same step. Its discrete fixed point is the trajectory produced by
:func:`run_hartree`.
"""
from __future__ import annotations

import struct
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .grid import Grid1D, WaveFunction, boundary_mass, l2_norm
from .parallel import max_workers
from .potentials import PotentialSet, averaged_potential_over_x, averaged_potential_over_y
from .propagator import StepPlan, make_plan

TRAJECTORY_MAGIC = b"HTRJ1"
DEFAULT_MAX_PICARD_BYTES = 2 * 1024**3


class BoundaryMassWarning(UserWarning):
    """Mass near the edge of the periodic box exceeds the warning threshold."""


@dataclass
class HartreeState:
    t: float
    phi_x: WaveFunction
    phi_y: WaveFunction

    def norms(self):
        return l2_norm(self.phi_x), l2_norm(self.phi_y)

    def swapped(self) -> "HartreeState":
        return HartreeState(self.t, self.phi_y, self.phi_x)


@dataclass
class HartreeTrajectory:
    states: List[HartreeState]
    dt: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.array([s.t for s in self.states])
        if len(times) > 1:
            gaps = np.diff(times)
            if np.any(gaps <= 0):
                raise ValueError("trajectory times must be strictly increasing")
            if not np.allclose(gaps, gaps[0], rtol=1e-9, atol=1e-12):
                raise ValueError("trajectory snapshots must be uniformly spaced")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def final(self) -> HartreeState:
        return self.states[-1]

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i) -> HartreeState:
        return self.states[i]


@dataclass
class PicardReport:
    iterates: int
    sup_diffs: np.ndarray
    ratios: np.ndarray
    T1: float
    tol: float
    converged: bool
    norm_deviations: np.ndarray

    def rows(self):
        """``(n, sup_diff, ratio)`` rows; the ratio for row ``n`` is ``d_n / d_{n-1}``."""
        out = []
        for n, d in enumerate(self.sup_diffs):
            ratio = self.ratios[n - 1] if n >= 1 else float("nan")
            out.append((n, float(d), float(ratio)))
        return out


def _nsteps(T: float, dt: float) -> int:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < 0:
        raise ValueError("horizon must be non-negative")
    return int(np.floor(T / dt + 1e-9))


def _check_finite(vx, vy, step, t):
    if not (np.all(np.isfinite(vx)) and np.all(np.isfinite(vy))):
        raise FloatingPointError(
            f"non-finite amplitudes after step {step} (t = {t:.6g}); "
            "reduce dt or enlarge the grid"
        )


def _state(t, gx, gy, vx, vy) -> HartreeState:
    return HartreeState(t, WaveFunction(gx, vx.copy()), WaveFunction(gy, vy.copy()))


def _plans(s: HartreeState, dt: float):
    return make_plan(s.phi_x.grid, dt), make_plan(s.phi_y.grid, dt)


def _coupled_step(vx, vy, p: PotentialSet, dt, kx: StepPlan, ky: StepPlan, coupled: bool):
    hx = np.fft.ifft(kx.kinetic_half_factor * np.fft.fft(vx))
    hy = np.fft.ifft(ky.kinetic_half_factor * np.fft.fft(vy))
    Ux, Uy = p.V1, p.V2
    if coupled:
        rho_x = (hx.real**2 + hx.imag**2) * p.grid_x.dx
        rho_y = (hy.real**2 + hy.imag**2) * p.grid_y.dx
        Ux = Ux + p.w @ rho_y
        Uy = Uy + rho_x @ p.w
    hx = np.exp(-1j * dt * Ux) * hx
    hy = np.exp(-1j * dt * Uy) * hy
    vx = np.fft.ifft(kx.kinetic_half_factor * np.fft.fft(hx))
    vy = np.fft.ifft(ky.kinetic_half_factor * np.fft.fft(hy))
    return vx, vy


def hartree_step(s: HartreeState, dt: float, p: PotentialSet) -> HartreeState:
    """Advance the coupled system by one step of size ``dt``."""
    kx, ky = _plans(s, dt)
    vx, vy = _coupled_step(s.phi_x.values, s.phi_y.values, p, dt, kx, ky, p.coupled)
    _check_finite(vx, vy, 1, s.t + dt)
    return HartreeState(s.t + dt, WaveFunction(s.phi_x.grid, vx), WaveFunction(s.phi_y.grid, vy))


def _check_boundary(state: HartreeState, threshold: Optional[float]):
    if threshold is None:
        return
    bx, by = boundary_mass(state.phi_x), boundary_mass(state.phi_y)
    if max(bx, by) > threshold:
        warnings.warn(
            f"boundary mass {max(bx, by):.3e} exceeds {threshold:.1e} at t = {state.t:.6g}; "
            f"the periodic box is too small",
            BoundaryMassWarning, stacklevel=3,
        )


def run_hartree(phi0: HartreeState, p: PotentialSet, T: float, dt: float,
                record_every: int = 1, boundary_warn: Optional[float] = 1e-8
                ) -> HartreeTrajectory:
    """Integrate the coupled system on ``[t0, t0 + T]``.

    Norms are never renormalized; their drift is left as a diagnostic.
    """
    if record_every < 1:
        raise ValueError("record_every must be a positive integer")
    steps = _nsteps(T, dt)
    gx, gy = phi0.phi_x.grid, phi0.phi_y.grid
    kx, ky = _plans(phi0, dt)
    coupled = p.coupled
    vx, vy = phi0.phi_x.values, phi0.phi_y.values
    states = [_state(phi0.t, gx, gy, vx, vy)]
    _check_boundary(states[0], boundary_warn)
    for m in range(1, steps + 1):
        vx, vy = _coupled_step(vx, vy, p, dt, kx, ky, coupled)
        _check_finite(vx, vy, m, phi0.t + m * dt)
        if m % record_every == 0:
            states.append(_state(phi0.t + m * dt, gx, gy, vx, vy))
            _check_boundary(states[-1], boundary_warn)
    return HartreeTrajectory(states, dt, {"solver": "hartree", "record_every": record_every,
                                          "steps": steps})


# -- Picard iteration ---------------------------------------------------------

def _averages(X, Y, p: PotentialSet, kx: StepPlan, ky: StepPlan, density: str):
    """Averaged potentials driving the next iterate, one row per step."""
    Xs, Ys = X[:-1], Y[:-1]
    if density == "midpoint":
        Xs = np.fft.ifft(kx.kinetic_half_factor * np.fft.fft(Xs, axis=1), axis=1)
        Ys = np.fft.ifft(ky.kinetic_half_factor * np.fft.fft(Ys, axis=1), axis=1)
    elif density != "left":
        raise ValueError(f"unknown density mode {density!r}")
    rho_x = np.abs(Xs) ** 2 * p.grid_x.dx
    rho_y = np.abs(Ys) ** 2 * p.grid_y.dx
    return rho_y @ p.w.T, rho_x @ p.w


def _linear_solve(v0, V, extra, plan: StepPlan, dt: float):
    """Evolve ``v0`` under ``V + extra[m]`` on step ``m``; returns every state."""
    steps = extra.shape[0]
    out = np.empty((steps + 1, v0.size), dtype=complex)
    out[0] = v0
    half = plan.kinetic_half_factor
    v = v0
    for m in range(steps):
        v = np.fft.ifft(half * np.fft.fft(v))
        v = np.exp(-1j * dt * (V + extra[m])) * v
        v = np.fft.ifft(half * np.fft.fft(v))
        out[m + 1] = v
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite amplitudes in a Picard linear solve")
    return out


def _solve_pair(phi0: HartreeState, p, ax, ay, kx, ky, dt, pool):
    vx0, vy0 = phi0.phi_x.values, phi0.phi_y.values
    if pool is None:
        return _linear_solve(vx0, p.V1, ax, kx, dt), _linear_solve(vy0, p.V2, ay, ky, dt)
    fx = pool.submit(_linear_solve, vx0, p.V1, ax, kx, dt)
    fy = pool.submit(_linear_solve, vy0, p.V2, ay, ky, dt)
    return fx.result(), fy.result()


def _norm_deviation(X, Y, dx, dy) -> float:
    nx = np.sqrt(np.sum(np.abs(X) ** 2, axis=1) * dx)
    ny = np.sqrt(np.sum(np.abs(Y) ** 2, axis=1) * dy)
    return float(max(np.abs(nx - 1.0).max(), np.abs(ny - 1.0).max()))


def picard_solve(phi0: HartreeState, p: PotentialSet, T1: float, dt: float, N: int,
                 tol: float, seed: str = "free", density: str = "midpoint",
                 max_bytes: int = DEFAULT_MAX_PICARD_BYTES):
    """Run the recursive scheme on ``[t0, t0 + T1]``.

    Iterate 0 is either the uncoupled flow (``seed="free"``) or the flow with
    averages frozen at their initial values (``seed="frozen_initial"``).
    Each further iterate solves two linear equations whose averaged
    potentials come from the stored previous iterate. ``density`` selects
    where in each step those averages are sampled: ``"midpoint"`` (after
    the first kinetic half-step, consistent with :func:`hartree_step`) or
    ``"left"`` (the stored state at the start of the step).

    Returns the last iterate as a trajectory and a :class:`PicardReport`.
    ``sup_diffs[n]`` is the sup over stored times of the ``L2 x L2``
    distance between iterates ``n + 1`` and ``n``.
    """
    if N < 1:
        raise ValueError("Picard iteration needs N >= 1")
    if seed not in ("free", "frozen_initial"):
        raise ValueError(f"unknown seed {seed!r}")
    steps = _nsteps(T1, dt)
    gx, gy = phi0.phi_x.grid, phi0.phi_y.grid
    need = 4 * (steps + 1) * (gx.n + gy.n) * 16
    if need > max_bytes:
        raise MemoryError(f"Picard storage needs ~{need / 1e9:.2f} GB, limit is "
                          f"{max_bytes / 1e9:.2f} GB; reduce T1/dt or grid size")
    kx, ky = _plans(phi0, dt)

    if seed == "free" or not p.coupled:
        ax = np.zeros((steps, gx.n))
        ay = np.zeros((steps, gy.n))
    else:
        ax = np.broadcast_to(averaged_potential_over_y(p.w, phi0.phi_y), (steps, gx.n))
        ay = np.broadcast_to(averaged_potential_over_x(p.w, phi0.phi_x), (steps, gy.n))

    workers = max_workers()
    pool = ThreadPoolExecutor(max_workers=2) if workers > 1 else None
    try:
        X, Y = _solve_pair(phi0, p, ax, ay, kx, ky, dt, pool)
        deviations = [_norm_deviation(X, Y, gx.dx, gy.dx)]
        diffs = []
        converged = False
        for _ in range(N):
            ax, ay = _averages(X, Y, p, kx, ky, density)
            Xn, Yn = _solve_pair(phi0, p, ax, ay, kx, ky, dt, pool)
            deviations.append(_norm_deviation(Xn, Yn, gx.dx, gy.dx))
            d = np.sqrt(np.sum(np.abs(Xn - X) ** 2, axis=1) * gx.dx
                        + np.sum(np.abs(Yn - Y) ** 2, axis=1) * gy.dx)
            diffs.append(float(d.max()))
            X, Y = Xn, Yn
            if diffs[-1] < tol:
                converged = True
                break
    finally:
        if pool is not None:
            pool.shutdown()

    diffs = np.array(diffs)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(diffs[:-1] > 0, diffs[1:] / np.where(diffs[:-1] > 0, diffs[:-1], 1.0),
                          np.nan)
    report = PicardReport(
        iterates=len(diffs), sup_diffs=diffs, ratios=ratios, T1=steps * dt, tol=tol,
        converged=converged, norm_deviations=np.array(deviations),
    )
    states = [_state(phi0.t + m * dt, gx, gy, X[m], Y[m]) for m in range(steps + 1)]
    meta = {"solver": "picard", "record_every": 1, "steps": steps, "segment_length": steps * dt,
            "picard_converged": converged, "seed": seed, "density": density,
            "segments": 1}
    return HartreeTrajectory(states, dt, meta), report


def picard_map(traj: HartreeTrajectory, p: PotentialSet, density: str = "midpoint"
               ) -> HartreeTrajectory:
    """Apply one Picard iteration to a trajectory stored at every step."""
    if traj.meta.get("record_every", 1) != 1:
        raise ValueError("the Picard map needs a trajectory stored at every step")
    gx, gy = traj[0].phi_x.grid, traj[0].phi_y.grid
    dt = traj.dt
    kx, ky = _plans(traj[0], dt)
    X = np.array([s.phi_x.values for s in traj.states])
    Y = np.array([s.phi_y.values for s in traj.states])
    ax, ay = _averages(X, Y, p, kx, ky, density)
    Xn, Yn = _solve_pair(traj[0], p, ax, ay, kx, ky, dt, None)
    t0 = traj[0].t
    states = [_state(t0 + m * dt, gx, gy, Xn[m], Yn[m]) for m in range(len(traj))]
    return HartreeTrajectory(states, dt, dict(traj.meta, solver="picard_map"))


def sup_distance(a: HartreeTrajectory, b: HartreeTrajectory) -> float:
    """``max_t sqrt(||a_x - b_x||^2 + ||a_y - b_y||^2)`` over common snapshots."""
    if len(a) != len(b):
        raise ValueError("trajectories have different numbers of snapshots")
    out = 0.0
    for sa, sb in zip(a.states, b.states):
        if abs(sa.t - sb.t) > 1e-9 * max(1.0, abs(sa.t)):
            raise ValueError(f"snapshot times differ: {sa.t} vs {sb.t}")
        dx = sa.phi_x.values - sb.phi_x.values
        dy = sa.phi_y.values - sb.phi_y.values
        d = np.vdot(dx, dx).real * sa.phi_x.grid.dx + np.vdot(dy, dy).real * sa.phi_y.grid.dx
        out = max(out, float(np.sqrt(d)))
    return out


def continue_picard(trajectory: HartreeTrajectory, p: PotentialSet, T1: Optional[float] = None,
                    N: int = 6, tol: float = 1e-12, seed: str = "free",
                    density: str = "midpoint"):
    """Append one more Picard segment starting from the last state.

    The seam state is shared, not recomputed. ``T1`` defaults to the length
    of the previous segment; ``T1 = 0`` returns the trajectory unchanged.
    """
    if not trajectory.meta.get("picard_converged", False):
        raise RuntimeError("previous Picard segment did not converge; refusing to continue")
    if T1 is None:
        T1 = trajectory.meta["segment_length"]
    dt = trajectory.dt
    if _nsteps(T1, dt) == 0:
        return trajectory, None
    seg, report = picard_solve(trajectory.final, p, T1, dt, N, tol, seed=seed, density=density)
    meta = dict(trajectory.meta)
    meta.update(picard_converged=report.converged, segment_length=seg.meta["segment_length"],
                segments=trajectory.meta.get("segments", 1) + 1,
                steps=trajectory.meta.get("steps", 0) + seg.meta["steps"])
    return HartreeTrajectory(list(trajectory.states) + seg.states[1:], dt, meta), report


# -- binary snapshot format ---------------------------------------------------

def write_trajectory(path, traj: HartreeTrajectory):
    """Write ``traj`` in the ``HTRJ1`` little-endian snapshot format."""
    first = traj.states[0]
    nx, ny = first.phi_x.grid.n, first.phi_y.grid.n
    with open(path, "wb") as fh:
        fh.write(TRAJECTORY_MAGIC)
        fh.write(struct.pack("<QQQd", nx, ny, len(traj.states), traj.dt))
        for s in traj.states:
            fh.write(struct.pack("<d", s.t))
            fh.write(np.ascontiguousarray(s.phi_x.values, dtype="<c16").tobytes())
            fh.write(np.ascontiguousarray(s.phi_y.values, dtype="<c16").tobytes())


def read_trajectory_arrays(path):
    """Return ``(dt, times, X, Y)`` from an ``HTRJ1`` file."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:5] != TRAJECTORY_MAGIC:
        raise ValueError(f"{path}: not an HTRJ1 trajectory")
    nx, ny, ns, dt = struct.unpack_from("<QQQd", data, 5)
    offset = 5 + struct.calcsize("<QQQd")
    rec = np.dtype([("t", "<f8"), ("x", "<c16", (nx,)), ("y", "<c16", (ny,))])
    if len(data) - offset != ns * rec.itemsize:
        raise ValueError(f"{path}: truncated or oversized trajectory payload")
    arr = np.frombuffer(data, dtype=rec, count=ns, offset=offset)
    return dt, arr["t"].copy(), arr["x"].astype(complex), arr["y"].astype(complex)


def read_trajectory(path, grid_x: Grid1D, grid_y: Grid1D) -> HartreeTrajectory:
    dt, times, X, Y = read_trajectory_arrays(path)
    if X.shape[1] != grid_x.n or Y.shape[1] != grid_y.n:
        raise ValueError("trajectory file does not match the supplied grids")
    states = [_state(float(t), grid_x, grid_y, x, y) for t, x, y in zip(times, X, Y)]
    return HartreeTrajectory(states, float(dt), {"source": str(path)})
