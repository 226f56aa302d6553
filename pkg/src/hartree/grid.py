"""
Uniform periodic grids and the spectral toolkit built on them.

Transforms follow numpy's convention: the forward FFT is unnormalized and
the inverse divides by ``n``. Quadrature is the rectangle rule on the grid,
which is spectrally accurate for smooth functions that are negligible at
the box edges.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

BOUNDARY_POINTS = 5


class GridMismatchError(ValueError):
    """Raised when two objects defined on different grids are combined."""


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Periodic grid on ``[x_min, x_max)`` with ``n`` points."""

    n: int
    x_min: float
    x_max: float
    dx: float = field(init=False)
    points: np.ndarray = field(init=False, repr=False)
    wavenumbers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise TypeError(f"grid size must be an integer, got {n!r}")
        if n < 8 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {n}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise ValueError(f"x_max must exceed x_min, got [{self.x_min}, {self.x_max})")
        length = self.x_max - self.x_min
        dx = length / n
        points = self.x_min + dx * np.arange(n)
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
        points.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "wavenumbers", k)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def same_as(self, other: "Grid1D") -> bool:
        return (
            self is other
            or (self.n == other.n and self.x_min == other.x_min and self.x_max == other.x_max)
        )

    def __eq__(self, other):
        if not isinstance(other, Grid1D):
            return NotImplemented
        return self.same_as(other)

    def __hash__(self):
        return hash((self.n, self.x_min, self.x_max))


def make_grid(n: int, x_min: float, x_max: float) -> Grid1D:
    return Grid1D(n, float(x_min), float(x_max))


@dataclass(eq=False)
class WaveFunction:
    """Complex amplitudes sampled on a :class:`Grid1D`."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"expected {self.grid.n} amplitudes, got array of shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise FloatingPointError("wavefunction contains NaN or Inf")
        self.values = values

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.values.copy())

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def scaled(self, factor: complex) -> "WaveFunction":
        return WaveFunction(self.grid, factor * self.values)


def _check_same_grid(a: Grid1D, b: Grid1D):
    if not a.same_as(b):
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


def inner_product(f: WaveFunction, g: WaveFunction) -> complex:
    """Discrete ``<f, g>``, conjugate-linear in ``f``."""
    _check_same_grid(f.grid, g.grid)
    return complex(np.vdot(f.values, g.values) * f.grid.dx)


def l2_norm(f: WaveFunction) -> float:
    return float(np.sqrt(np.vdot(f.values, f.values).real * f.grid.dx))


def normalize(f: WaveFunction) -> WaveFunction:
    nrm = l2_norm(f)
    if nrm == 0.0:
        raise ZeroDivisionError("cannot normalize the zero function")
    return WaveFunction(f.grid, f.values / nrm)


Multiplier = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def apply_kinetic_multiplier(f: WaveFunction, factor: Multiplier) -> WaveFunction:
    """Multiply the Fourier coefficients of ``f`` by ``factor(k)``.

    ``factor`` may be a callable evaluated on the grid wavenumbers or an
    array already laid out in transform order.
    """
    k = f.grid.wavenumbers
    mult = factor(k) if callable(factor) else np.asarray(factor)
    mult = np.broadcast_to(mult, k.shape)
    if not np.all(np.isfinite(mult)):
        raise ValueError("multiplier is not finite on the grid wavenumbers")
    return WaveFunction(f.grid, np.fft.ifft(mult * np.fft.fft(f.values)))


def spectral_derivative(values: np.ndarray, grid: Grid1D, order: int = 1) -> np.ndarray:
    """Derivative of periodic samples via the FFT.

    For odd orders the Nyquist coefficient is zeroed so that real input
    gives real output.
    """
    k = grid.wavenumbers
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult = mult.copy()
        mult[grid.n // 2] = 0.0
    out = np.fft.ifft(mult * np.fft.fft(values))
    if np.isrealobj(values):
        return out.real
    return out


def second_moment(f: WaveFunction) -> float:
    """``sum_j x_j^2 |f_j|^2 dx``."""
    x = f.grid.points
    return float(np.sum(x**2 * f.density()) * f.grid.dx)


def boundary_mass(f: WaveFunction, width: int = BOUNDARY_POINTS) -> float:
    """Mass carried by the ``width`` outermost points on each side."""
    rho = f.density()
    return float((rho[:width].sum() + rho[-width:].sum()) * f.grid.dx)


def gaussian(grid: Grid1D, center: float = 0.0, width: float = 1.0,
             momentum: float = 0.0) -> WaveFunction:
    """Gaussian wave packet, normalized on the grid.

    ``width`` is the standard deviation of the amplitude, i.e. the packet is
    ``exp(-(x - center)^2 / (2 width^2) + i momentum x)``.
    """
    if width <= 0:
        raise ValueError("gaussian width must be positive")
    x = grid.points
    values = np.exp(-((x - center) ** 2) / (2.0 * width**2) + 1j * momentum * x)
    return normalize(WaveFunction(grid, values))
