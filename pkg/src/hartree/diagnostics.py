"""
Conserved quantities, graded norms, tangent-space projection and the
variational residual of a Hartree trajectory.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np

from .grid import WaveFunction, boundary_mass, l2_norm
from .potentials import PotentialSet, shift_to_H1
from .propagator import apply_hamiltonian
from .reference import State2D, product_state
from .scheme import HartreeState, HartreeTrajectory

CSV_HEADER = ["t", "norm_x", "norm_y", "energy", "kin_x", "pot_x", "kin_y", "pot_y",
              "coupling", "h11", "h22", "boundary_mass", "df_residual"]


@dataclass
class DiagnosticsRecord:
    t: float
    norm_x: float
    norm_y: float
    energy: float
    energy_parts: tuple
    h11_norm: float
    h22_norm: float
    boundary_mass: float
    df_residual: Optional[float] = None

    def row(self) -> list:
        vals = [self.t, self.norm_x, self.norm_y, self.energy, *self.energy_parts,
                self.h11_norm, self.h22_norm, self.boundary_mass,
                np.nan if self.df_residual is None else self.df_residual]
        return [f"{float(v):.17g}" for v in vals]


def kinetic_energy(phi: WaveFunction) -> float:
    """``1/2 ||d phi/dx||^2`` computed in Fourier space."""
    a = np.fft.fft(phi.values)
    k2 = phi.grid.wavenumbers**2
    return float(0.5 * np.sum(k2 * np.abs(a) ** 2) / phi.grid.n * phi.grid.dx)


def potential_energy(phi: WaveFunction, V) -> float:
    return float(np.sum(np.asarray(V) * phi.density()) * phi.grid.dx)


def coupling_energy(s: HartreeState, w: np.ndarray) -> float:
    rho_x = s.phi_x.density() * s.phi_x.grid.dx
    rho_y = s.phi_y.density() * s.phi_y.grid.dx
    return float(rho_x @ w @ rho_y)


def energy_parts(s: HartreeState, p: PotentialSet) -> tuple:
    """``(kin_x, pot_x, kin_y, pot_y, coupling)``."""
    return (kinetic_energy(s.phi_x), potential_energy(s.phi_x, p.V1),
            kinetic_energy(s.phi_y), potential_energy(s.phi_y, p.V2),
            coupling_energy(s, p.w))


def energy(s: HartreeState, p: PotentialSet) -> float:
    return float(sum(energy_parts(s, p)))


def factor_graded_norm_sq(phi: WaveFunction, V, k: int) -> float:
    """``||phi||^2 + ||H^{k/2} phi||^2`` for ``H = -1/2 d^2/dx^2 + V``, ``k`` in {1, 2}.

    ``k = 1`` uses the quadratic form ``<phi, H phi>``, so ``V >= 1`` is required.
    """
    V = np.asarray(V)
    if V.min() < 1.0:
        raise ValueError("graded norms need potentials shifted so that min V >= 1")
    n2 = l2_norm(phi) ** 2
    if k == 1:
        return n2 + kinetic_energy(phi) + potential_energy(phi, V)
    if k == 2:
        Hphi = apply_hamiltonian(phi.values, phi.grid, V)
        return n2 + float(np.vdot(Hphi, Hphi).real * phi.grid.dx)
    raise ValueError(f"graded norm order must be 1 or 2, got {k}")


def graded_norm(s: HartreeState, p: PotentialSet, alpha: int, beta: int) -> float:
    """``||(phi_x, phi_y)||_{alpha, beta}``."""
    return float(np.sqrt(factor_graded_norm_sq(s.phi_x, p.V1, alpha)
                         + factor_graded_norm_sq(s.phi_y, p.V2, beta)))


@dataclass
class TangentVector:
    vx: WaveFunction
    vy: WaveFunction
    base: HartreeState

    def reconstruct(self) -> State2D:
        b = self.base
        v = np.outer(self.vx.values, b.phi_y.values) + np.outer(b.phi_x.values, self.vy.values)
        return State2D(b.phi_x.grid, b.phi_y.grid, v)

    def gauge(self) -> complex:
        """``<phi_x, v_x>``, zero by construction."""
        return complex(np.vdot(self.base.phi_x.values, self.vx.values) * self.vx.grid.dx)


def tangent_project(psi: State2D, base: HartreeState, norm_tol: float = 1e-10) -> TangentVector:
    """Orthogonal projection onto the tangent space at ``phi_x (x) phi_y``.

    The representation satisfies the gauge ``<phi_x, v_x> = 0``.
    """
    nx, ny = base.norms()
    if abs(nx - 1.0) > norm_tol or abs(ny - 1.0) > norm_tol:
        raise ValueError(f"tangent projection needs unit-norm factors, got ({nx}, {ny})")
    fx, fy = base.phi_x.values, base.phi_y.values
    dx, dy = base.phi_x.grid.dx, base.phi_y.grid.dx
    vy = (fx.conj() @ psi.values) * dx
    partial_y = (psi.values @ fy.conj()) * dy
    overlap = np.vdot(fx, partial_y) * dx
    vx = partial_y - overlap * fx
    return TangentVector(WaveFunction(base.phi_x.grid, vx), WaveFunction(base.phi_y.grid, vy), base)


def hamiltonian_on_product(s: HartreeState, p: PotentialSet) -> np.ndarray:
    fx, fy = s.phi_x.values, s.phi_y.values
    hx = apply_hamiltonian(fx, s.phi_x.grid, p.V1)
    hy = apply_hamiltonian(fy, s.phi_y.grid, p.V2)
    u = np.outer(fx, fy)
    return np.outer(hx, fy) + np.outer(fx, hy) + p.w * u


def dirac_frenkel_residual(traj: HartreeTrajectory, p: PotentialSet, m: int) -> float:
    """Size of the variational defect of the trajectory at snapshot ``m``.

    Forms ``r = i du/dt - H u`` with a centered difference for ``du/dt``,
    projects it on the tangent space and drops the component along ``u``
    itself (the phase direction, which the variational conditions leave
    free). Zero for the exact Hartree flow; ``O(h^2)`` for a trajectory
    with snapshot spacing ``h``.
    """
    if not 1 <= m <= len(traj) - 2:
        raise IndexError(f"residual needs neighbours on both sides; got m={m} "
                         f"for {len(traj)} snapshots")
    prev, cur, nxt = traj[m - 1], traj[m], traj[m + 1]
    h = nxt.t - prev.t
    du = (product_state(nxt.phi_x, nxt.phi_y).values
          - product_state(prev.phi_x, prev.phi_y).values) / h
    r = 1j * du - hamiltonian_on_product(cur, p)
    base = cur
    # the projection requires unit factors; rescaling the base does not move the tangent space
    nx, ny = base.norms()
    base = HartreeState(cur.t, cur.phi_x.scaled(1.0 / nx), cur.phi_y.scaled(1.0 / ny))
    tv = tangent_project(State2D(cur.phi_x.grid, cur.phi_y.grid, r), base)
    rec = tv.reconstruct()
    u = product_state(base.phi_x, base.phi_y)
    defect = rec.values - u.inner(rec) * u.values
    return float(np.sqrt(np.vdot(defect, defect).real * rec.cell))


def record(s: HartreeState, p: PotentialSet, df_residual: Optional[float] = None
           ) -> DiagnosticsRecord:
    """Diagnostics for one state.

    Graded norms are evaluated with the potentials shifted to ``min V >= 1``
    (a no-op if they already are).
    """
    parts = energy_parts(s, p)
    ps, _ = shift_to_H1(p)
    nx, ny = s.norms()
    return DiagnosticsRecord(
        t=s.t, norm_x=nx, norm_y=ny, energy=float(sum(parts)), energy_parts=parts,
        h11_norm=graded_norm(s, ps, 1, 1), h22_norm=graded_norm(s, ps, 2, 2),
        boundary_mass=max(boundary_mass(s.phi_x), boundary_mass(s.phi_y)),
        df_residual=df_residual,
    )


def trajectory_records(traj: HartreeTrajectory, p: PotentialSet, with_residual: bool = False
                       ) -> List[DiagnosticsRecord]:
    out = []
    for m, s in enumerate(traj.states):
        res = None
        if with_residual and 1 <= m <= len(traj) - 2:
            res = dirac_frenkel_residual(traj, p, m)
        out.append(record(s, p, res))
    return out


def coercivity_lhs(rec: DiagnosticsRecord, c0: float) -> float:
    kx, px, ky, py, _ = rec.energy_parts
    return kx + ky + (1.0 - c0) * (px + py)


def coercivity_margin(rec: DiagnosticsRecord, c0: float, C: float, E0: float) -> float:
    """``E(0) + 2 c0 C - lhs``; non-negative when the energy bound holds."""
    return E0 + 2.0 * c0 * C - coercivity_lhs(rec, c0)


def write_diagnostics_csv(path, records: Iterable[DiagnosticsRecord]):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(CSV_HEADER)
        for r in records:
            wr.writerow(r.row())
