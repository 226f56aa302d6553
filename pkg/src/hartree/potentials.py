"""
Potentials ``V1(x)``, ``V2(y)``, the coupling ``w(x, y)``, mean-field
averages of the coupling, and grid certificates for the growth
conditions on the coupling.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .grid import Grid1D, GridMismatchError, WaveFunction, spectral_derivative

DEFAULT_SEARCH_C = (0.0, 1.0, 2.0, 5.0, 10.0, 50.0)


@dataclass(frozen=True)
class BumpSpec:
    """Compactly supported profile ``chi`` for the coupling ``chi(x) y^2``.

    ``pure_bump`` is ``a * exp(1 - 1 / (1 - (x/s)^2))`` inside ``|x| < s``,
    so its peak value is ``a`` at the origin. ``odd_bump`` multiplies that
    by ``x``.
    """

    amplitude: float
    support_radius: float
    slope_mode: str = "pure_bump"

    def __post_init__(self):
        if self.support_radius <= 0:
            raise ValueError("bump support radius must be positive")
        if self.slope_mode not in ("pure_bump", "odd_bump"):
            raise ValueError(f"unknown slope_mode {self.slope_mode!r}")

    def _core(self, x):
        x = np.asarray(x, dtype=float)
        u = x / self.support_radius
        inside = np.abs(u) < 1.0
        q = np.where(inside, 1.0 - u**2, 1.0)
        g = np.where(inside, np.exp(1.0 - 1.0 / q), 0.0)
        # d/dx of exp(1 - 1/q) with q = 1 - (x/s)^2
        dq = -2.0 * u / self.support_radius
        d2q = -2.0 / self.support_radius**2
        dlog = np.where(inside, dq / q**2, 0.0)
        d2log = np.where(inside, d2q / q**2 - 2.0 * dq**2 / q**3, 0.0)
        dg = g * dlog
        d2g = g * (dlog**2 + d2log)
        return x, g, dg, d2g

    def values(self, x) -> np.ndarray:
        return self.derivatives(x)[0]

    def derivatives(self, x):
        """Return ``(chi, chi', chi'')`` at ``x``."""
        x, g, dg, d2g = self._core(x)
        a = self.amplitude
        if self.slope_mode == "pure_bump":
            return a * g, a * dg, a * d2g
        return a * x * g, a * (g + x * dg), a * (2.0 * dg + x * d2g)


@dataclass(frozen=True, eq=False)
class PotentialSet:
    """Potentials sampled on an ``(x, y)`` grid pair.

    ``w`` has shape ``(n_x, n_y)``. Derivative arrays are optional; when
    missing they are reconstructed spectrally by :func:`derivatives`.
    """

    grid_x: Grid1D
    grid_y: Grid1D
    V1: np.ndarray
    V2: np.ndarray
    w: np.ndarray
    grad_V1: Optional[np.ndarray] = None
    grad_V2: Optional[np.ndarray] = None
    grad_w_x: Optional[np.ndarray] = None
    grad_w_y: Optional[np.ndarray] = None
    lap_w_x: Optional[np.ndarray] = None
    lap_w_y: Optional[np.ndarray] = None
    kind: str = "tabulated"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        nx, ny = self.grid_x.n, self.grid_y.n
        for name, shape in (("V1", (nx,)), ("V2", (ny,)), ("w", (nx, ny))):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} is not finite on the grid")
            object.__setattr__(self, name, arr)

    @property
    def coupled(self) -> bool:
        return bool(np.any(self.w != 0.0))

    def transposed(self) -> "PotentialSet":
        """The same system with the roles of ``x`` and ``y`` exchanged."""
        t = lambda a: None if a is None else a.T
        return PotentialSet(
            self.grid_y, self.grid_x, self.V2, self.V1, self.w.T,
            grad_V1=self.grad_V2, grad_V2=self.grad_V1,
            grad_w_x=t(self.grad_w_y), grad_w_y=t(self.grad_w_x),
            lap_w_x=t(self.lap_w_y), lap_w_y=t(self.lap_w_x),
            kind=self.kind, params=dict(self.params),
        )

    def with_coupling(self, w: np.ndarray) -> "PotentialSet":
        """Copy with a different coupling (analytic coupling derivatives dropped)."""
        return replace(self, w=w, grad_w_x=None, grad_w_y=None, lap_w_x=None,
                       lap_w_y=None, kind=self.kind + "+custom_w")


def double_well(x, ell: float):
    x = np.asarray(x, dtype=float)
    v = 0.5 * x**2 * (x / (2.0 * ell) - 1.0) ** 2
    dv = x * (x / (2.0 * ell) - 1.0) ** 2 + x**2 * (x / (2.0 * ell) - 1.0) / (2.0 * ell)
    return v, dv


def preset_example(grid_x: Grid1D, grid_y: Grid1D, ell: float, omega: float,
                   bump: BumpSpec) -> PotentialSet:
    """Double well in ``x``, harmonic bath in ``y``, coupling ``chi(x) y^2``."""
    if ell <= 0 or omega <= 0:
        raise ValueError("ell and omega must be positive")
    x, y = grid_x.points, grid_y.points
    V1, dV1 = double_well(x, ell)
    V2 = 0.5 * omega**2 * y**2
    dV2 = omega**2 * y
    chi, dchi, d2chi = bump.derivatives(x)
    y2 = y**2
    return PotentialSet(
        grid_x, grid_y, V1, V2, np.outer(chi, y2),
        grad_V1=dV1, grad_V2=dV2,
        grad_w_x=np.outer(dchi, y2), grad_w_y=np.outer(chi, 2.0 * y),
        lap_w_x=np.outer(d2chi, y2), lap_w_y=np.outer(chi, np.full_like(y, 2.0)),
        kind="example31",
        params={"ell": ell, "omega": omega, "amplitude": bump.amplitude,
                "support": bump.support_radius, "slope_mode": bump.slope_mode},
    )


def preset_harmonic(grid_x: Grid1D, grid_y: Grid1D, omega_x: float, omega: float,
                    bump: Optional[BumpSpec] = None) -> PotentialSet:
    """Two harmonic oscillators, optionally coupled through ``chi(x) y^2``."""
    x, y = grid_x.points, grid_y.points
    bump = bump or BumpSpec(0.0, 1.0)
    chi, dchi, d2chi = bump.derivatives(x)
    y2 = y**2
    return PotentialSet(
        grid_x, grid_y, 0.5 * omega_x**2 * x**2, 0.5 * omega**2 * y2, np.outer(chi, y2),
        grad_V1=omega_x**2 * x, grad_V2=omega**2 * y,
        grad_w_x=np.outer(dchi, y2), grad_w_y=np.outer(chi, 2.0 * y),
        lap_w_x=np.outer(d2chi, y2), lap_w_y=np.outer(chi, np.full_like(y, 2.0)),
        kind="harmonic",
        params={"omega_x": omega_x, "omega": omega, "amplitude": bump.amplitude,
                "support": bump.support_radius, "slope_mode": bump.slope_mode},
    )


def load_tabulated(path, grid: Grid1D) -> np.ndarray:
    """Read a two-column ``x,V`` CSV and interpolate it onto ``grid``."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["x", "V"]:
            raise ValueError(f"{path}: expected header 'x,V', got {','.join(header)!r}")
        rows = [(float(a), float(b)) for a, b in reader]
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two samples")
    xs, vs = np.array(rows).T
    order = np.argsort(xs)
    xs, vs = xs[order], vs[order]
    if grid.points[0] < xs[0] or grid.points[-1] > xs[-1]:
        raise ValueError(f"{path}: samples cover [{xs[0]}, {xs[-1]}], grid needs "
                         f"[{grid.points[0]}, {grid.points[-1]}]")
    return np.interp(grid.points, xs, vs)


def shift_to_H1(p: PotentialSet):
    """Add constants so that ``min V1 >= 1`` and ``min V2 >= 1`` on the grid.

    Returns the shifted set and the shifts ``(C1, C2)``; a shift ``C`` on a
    factor corresponds to multiplying it by ``exp(-i t C)``.
    """
    m1, m2 = float(p.V1.min()), float(p.V2.min())
    c1 = 0.0 if m1 >= 1.0 else 1.0 - m1
    c2 = 0.0 if m2 >= 1.0 else 1.0 - m2
    if c1 == 0.0 and c2 == 0.0:
        return p, (0.0, 0.0)
    params = dict(p.params, shift_x=p.params.get("shift_x", 0.0) + c1,
                  shift_y=p.params.get("shift_y", 0.0) + c2)
    return replace(p, V1=p.V1 + c1, V2=p.V2 + c2, params=params), (c1, c2)


def averaged_potential_over_y(w: np.ndarray, phi_y: WaveFunction) -> np.ndarray:
    """``<w>_y(x) = sum_j w(x, y_j) |phi_y(y_j)|^2 dy``."""
    w = np.asarray(w)
    if w.shape[1] != phi_y.grid.n:
        raise GridMismatchError("coupling and phi_y disagree on the y grid")
    return w @ (phi_y.density() * phi_y.grid.dx)


def averaged_potential_over_x(w: np.ndarray, phi_x: WaveFunction) -> np.ndarray:
    """``<w>_x(y) = sum_j w(x_j, y) |phi_x(x_j)|^2 dx``."""
    w = np.asarray(w)
    if w.shape[0] != phi_x.grid.n:
        raise GridMismatchError("coupling and phi_x disagree on the x grid")
    return (phi_x.density() * phi_x.grid.dx) @ w


def derivatives(p: PotentialSet) -> dict:
    """Derivative arrays, analytic when the preset supplied them."""
    gx, gy = p.grid_x, p.grid_y
    out = {}
    out["grad_V1"] = p.grad_V1 if p.grad_V1 is not None else spectral_derivative(p.V1, gx)
    out["grad_V2"] = p.grad_V2 if p.grad_V2 is not None else spectral_derivative(p.V2, gy)
    if p.grad_w_x is not None:
        out["grad_w_x"] = p.grad_w_x
    else:
        out["grad_w_x"] = np.apply_along_axis(spectral_derivative, 0, p.w, gx)
    if p.grad_w_y is not None:
        out["grad_w_y"] = p.grad_w_y
    else:
        out["grad_w_y"] = np.apply_along_axis(spectral_derivative, 1, p.w, gy)
    if p.lap_w_x is not None:
        out["lap_w_x"] = p.lap_w_x
    else:
        out["lap_w_x"] = np.apply_along_axis(spectral_derivative, 0, p.w, gx, 2)
    if p.lap_w_y is not None:
        out["lap_w_y"] = p.lap_w_y
    else:
        out["lap_w_y"] = np.apply_along_axis(spectral_derivative, 1, p.w, gy, 2)
    return out


def _max_ratio(num: np.ndarray, den: np.ndarray) -> float:
    num = np.abs(num)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, 0.0))
    return float(r.max()) if r.size else 0.0


@dataclass
class AssumptionReport:
    h1_ok: bool
    h1_min_V1: float
    h1_min_V2: float
    h2_c0: float
    h2_C: float
    h2_table: dict
    temperance_const: float
    stronger_consts: dict
    stronger_ok: dict
    domain: tuple

    @property
    def h2_ok(self) -> bool:
        return self.h2_c0 < 1.0

    @property
    def ok(self) -> bool:
        return self.h1_ok and self.h2_ok

    def lines(self) -> list:
        (x0, x1), (y0, y1) = self.domain
        out = [f"verified on grid [{x0:g}, {x1:g}] x [{y0:g}, {y1:g}]"]
        out.append(f"H1: {'PASS' if self.h1_ok else 'FAIL'} "
                   f"min_V1={self.h1_min_V1:.17g} min_V2={self.h1_min_V2:.17g}")
        out.append(f"H2: {'PASS' if self.h2_ok else 'FAIL'} "
                   f"c0={self.h2_c0:.17g} C={self.h2_C:.17g}")
        for c, c0 in self.h2_table.items():
            out.append(f"H2 search: C={c:.17g} c0={c0:.17g}")
        out.append(f"temperance: {'PASS' if np.isfinite(self.temperance_const) else 'FAIL'} "
                   f"C={self.temperance_const:.17g}")
        for name, ok in self.stronger_ok.items():
            out.append(f"{name}: {'PASS' if ok else 'FAIL'} "
                       f"const={self.stronger_consts[name]:.17g}")
        return out


def check_assumptions(p: PotentialSet, search_C: Sequence[float] = DEFAULT_SEARCH_C
                      ) -> AssumptionReport:
    """Certify the growth hypotheses on the grid by brute-force maxima.

    For each candidate ``C`` the smallest admissible ``c0`` is
    ``max |w| / (V1 + V2 + C)`` over the tensor grid; the best pair is kept.
    The gradient and Laplacian bounds are reported as grid maxima of the
    corresponding ratios. These are certificates on the finite box only.
    """
    search_C = list(search_C)
    if not search_C:
        raise ValueError("search_C must contain at least one candidate")
    V1, V2 = p.V1, p.V2
    base = V1[:, None] + V2[None, :]
    table = {float(c): _max_ratio(p.w, base + c) for c in search_C}
    best_C = min(table, key=lambda c: (table[c], c))

    d = derivatives(p)
    temperance = max(_max_ratio(d["grad_V1"], 1.0 + V1), _max_ratio(d["grad_V2"], 1.0 + V2))
    V1p = np.maximum(V1, 0.0)[:, None]
    V2p = np.maximum(V2, 0.0)[None, :]
    consts = {
        "grad_x_w": _max_ratio(d["grad_w_x"], np.sqrt(V1p) + V2p + 1.0),
        "grad_y_w": _max_ratio(d["grad_w_y"], V1p + np.sqrt(V2p) + 1.0),
        "lap_w": _max_ratio(np.abs(d["lap_w_x"]) + np.abs(d["lap_w_y"]), V1p + V2p + 1.0),
    }
    stronger_ok = {"growth_w": table[best_C] < 1.0}
    stronger_ok.update({k: bool(np.isfinite(v)) for k, v in consts.items()})
    consts = {"growth_w": table[best_C], **consts}
    return AssumptionReport(
        h1_ok=bool(V1.min() >= 1.0 and V2.min() >= 1.0),
        h1_min_V1=float(V1.min()), h1_min_V2=float(V2.min()),
        h2_c0=table[best_C], h2_C=best_C, h2_table=table,
        temperance_const=temperance, stronger_consts=consts, stronger_ok=stronger_ok,
        domain=((p.grid_x.x_min, p.grid_x.x_max), (p.grid_y.x_min, p.grid_y.x_max)),
    )
