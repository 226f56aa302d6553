"""
Reference solver for the full two-dimensional equation
``i d/dt psi = (H_x + H_y + w) psi`` on the tensor grid, and the distance
between its solution and a Hartree product.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .grid import Grid1D, GridMismatchError, WaveFunction
from .potentials import PotentialSet
from .scheme import HartreeState, HartreeTrajectory, _nsteps

SNAPSHOT_MAGIC = b"HTR2"
MEMORY_GUARD = 2**22


@dataclass(eq=False)
class State2D:
    grid_x: Grid1D
    grid_y: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid_x.n, self.grid_y.n):
            raise ValueError(f"2D state has shape {self.values.shape}, expected "
                             f"{(self.grid_x.n, self.grid_y.n)}")

    @property
    def cell(self) -> float:
        return self.grid_x.dx * self.grid_y.dx

    def norm(self) -> float:
        v = self.values
        return float(np.sqrt(np.vdot(v, v).real * self.cell))

    def inner(self, other: "State2D") -> complex:
        _check_grids(self, other.grid_x, other.grid_y)
        return complex(np.vdot(self.values, other.values) * self.cell)


@dataclass
class Trajectory2D:
    grid_x: Grid1D
    grid_y: Grid1D
    snapshots: List[Tuple[float, np.ndarray]]
    dt: float
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])

    def state(self, i: int) -> State2D:
        return State2D(self.grid_x, self.grid_y, self.snapshots[i][1])


def _check_grids(psi: State2D, gx: Grid1D, gy: Grid1D):
    if not (psi.grid_x.same_as(gx) and psi.grid_y.same_as(gy)):
        raise GridMismatchError("2D state and Hartree factors live on different grids")


def product_state(phi_x: WaveFunction, phi_y: WaveFunction) -> State2D:
    return State2D(phi_x.grid, phi_y.grid, np.outer(phi_x.values, phi_y.values))


def _kinetic(values, fx, fy):
    # rows (y) first, then columns (x)
    a = np.fft.fft(values, axis=1)
    a = np.fft.fft(a, axis=0)
    a *= fx[:, None]
    a *= fy[None, :]
    a = np.fft.ifft(a, axis=0)
    return np.fft.ifft(a, axis=1)


def _half_factors(gx: Grid1D, gy: Grid1D, dt: float):
    return np.exp(-0.25j * dt * gx.wavenumbers**2), np.exp(-0.25j * dt * gy.wavenumbers**2)


def total_potential(p: PotentialSet) -> np.ndarray:
    return p.V1[:, None] + p.V2[None, :] + p.w


def full_step_2d(psi: State2D, dt: float, p: PotentialSet) -> State2D:
    """One Strang step for the full equation."""
    fx, fy = _half_factors(psi.grid_x, psi.grid_y, dt)
    v = _kinetic(psi.values, fx, fy)
    v = np.exp(-1j * dt * total_potential(p)) * v
    v = _kinetic(v, fx, fy)
    if not np.all(np.isfinite(v)):
        raise FloatingPointError("non-finite amplitudes in the 2D reference step")
    return State2D(psi.grid_x, psi.grid_y, v)


def run_full(psi0: State2D, p: PotentialSet, T: float, dt: float, record_every: int = 1,
             t0: float = 0.0, memory_ack: bool = False) -> Trajectory2D:
    """Integrate the full equation, keeping every ``record_every``-th state."""
    gx, gy = psi0.grid_x, psi0.grid_y
    if gx.n * gy.n > MEMORY_GUARD and not memory_ack:
        raise MemoryError(f"{gx.n}x{gy.n} exceeds the 2^22-point guard; "
                          "set compare.memory_ack = true to override")
    if record_every < 1:
        raise ValueError("record_every must be a positive integer")
    steps = _nsteps(T, dt)
    fx, fy = _half_factors(gx, gy, dt)
    full_x, full_y = fx**2, fy**2
    phase = np.exp(-1j * dt * total_potential(p))
    v = psi0.values.copy()
    snaps = [(t0, v.copy())]
    if steps:
        v = _kinetic(v, fx, fy)
    for m in range(1, steps + 1):
        v = phase * v
        if m % record_every == 0 or m == steps:
            out = _kinetic(v, fx, fy)
            if not np.all(np.isfinite(out)):
                raise FloatingPointError(f"non-finite amplitudes after step {m}")
            if m % record_every == 0:
                snaps.append((t0 + m * dt, out))
            if m < steps:
                v = _kinetic(out, fx, fy)
        else:
            # K/2 K/2 between steps fuse into one full kinetic step
            v = _kinetic(v, full_x, full_y)
    return Trajectory2D(gx, gy, snaps, dt, {"record_every": record_every, "steps": steps})


def full_energy(psi: State2D, p: PotentialSet) -> float:
    """``<psi, H psi>`` with spectral kinetic energy."""
    v = psi.values
    kx2, ky2 = psi.grid_x.wavenumbers**2, psi.grid_y.wavenumbers**2
    a = np.fft.fft(np.fft.fft(v, axis=1), axis=0)
    # Parseval: sum |a|^2 = nx * ny * sum |v|^2
    kin = 0.5 * np.sum((kx2[:, None] + ky2[None, :]) * np.abs(a) ** 2) / v.size
    pot = np.sum(total_potential(p) * np.abs(v) ** 2)
    return float((kin + pot) * psi.cell)


def hartree_error(psi: State2D, s: HartreeState) -> float:
    """``|| psi - phi_x (x) phi_y ||`` on the tensor grid."""
    _check_grids(psi, s.phi_x.grid, s.phi_y.grid)
    diff = psi.values - np.outer(s.phi_x.values, s.phi_y.values)
    return float(np.sqrt(np.vdot(diff, diff).real * psi.cell))


@dataclass
class Comparison:
    times: np.ndarray
    hartree_error: np.ndarray
    full_norm: np.ndarray
    full_energy: np.ndarray
    full: Trajectory2D
    hartree: HartreeTrajectory


def compare(phi0: HartreeState, p: PotentialSet, T: float, dt: float, record_every: int = 1,
            memory_ack: bool = False, boundary_warn: Optional[float] = 1e-8) -> Comparison:
    """Run both solvers from the same product data and compare snapshots."""
    from .scheme import run_hartree

    hart = run_hartree(phi0, p, T, dt, record_every, boundary_warn=boundary_warn)
    full = run_full(product_state(phi0.phi_x, phi0.phi_y), p, T, dt, record_every,
                    t0=phi0.t, memory_ack=memory_ack)
    errs, norms, energies = [], [], []
    for s, (t, v) in zip(hart.states, full.snapshots):
        psi = State2D(full.grid_x, full.grid_y, v)
        errs.append(hartree_error(psi, s))
        norms.append(psi.norm())
        energies.append(full_energy(psi, p))
    return Comparison(full.times, np.array(errs), np.array(norms), np.array(energies), full, hart)


def write_snapshot(path, psi: State2D, t: float):
    """Write one 2D state in the ``HTR2`` format (row-major, little-endian)."""
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<QQd", psi.grid_x.n, psi.grid_y.n, t))
        fh.write(np.ascontiguousarray(psi.values, dtype="<c16").tobytes())


def read_snapshot(path):
    """Return ``(t, values)`` from an ``HTR2`` file."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not an HTR2 snapshot")
    nx, ny, t = struct.unpack_from("<QQd", data, 4)
    offset = 4 + struct.calcsize("<QQd")
    if len(data) - offset != nx * ny * 16:
        raise ValueError(f"{path}: payload size does not match header")
    values = np.frombuffer(data, dtype="<c16", offset=offset).reshape(nx, ny)
    return t, values.astype(complex)
