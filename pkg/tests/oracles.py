"""Independent reference computations used to freeze expected values.

None of these go through the package's FFT-based code paths.
"""
import numpy as np
from scipy import integrate


def quad(f, a=-np.inf, b=np.inf):
    val, err = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def gaussian_density(x, center=0.0):
    return np.exp(-((x - center) ** 2)) / np.sqrt(np.pi)


def fourier_second_derivative_matrix(points, wavenumbers):
    """Dense ``d^2/dx^2`` built from explicit exponentials, not the FFT."""
    n = points.size
    E = np.exp(1j * np.outer(points, wavenumbers))
    return ((E * (-(wavenumbers**2))) @ E.conj().T / n).real


def dense_ground_energy(points, wavenumbers, V):
    """Lowest eigenvalue of ``-1/2 D2 + diag(V)`` by dense diagonalization."""
    H = -0.5 * fourier_second_derivative_matrix(points, wavenumbers) + np.diag(V)
    return float(np.linalg.eigvalsh(H)[0])


def centered_second_difference(f, dx):
    return (np.roll(f, -1) - 2 * f + np.roll(f, 1)) / dx**2


def coherent_state(x, t, x0):
    """Exact solution of the unit-frequency harmonic oscillator from ``exp(-(x-x0)^2/2)/pi^(1/4)``."""
    alpha = x0 / np.sqrt(2.0) * np.exp(-1j * t)
    return (np.pi ** -0.25 * np.exp(-0.5j * t)
            * np.exp(-x**2 / 2 + np.sqrt(2.0) * alpha * x - alpha**2 / 2 - abs(alpha) ** 2 / 2))


def brute_force_c0(w, V1, V2, C):
    """Nested-loop ``max |w| / (V1 + V2 + C)``."""
    best = 0.0
    for i in range(len(V1)):
        for j in range(len(V2)):
            den = V1[i] + V2[j] + C
            num = abs(w[i, j])
            if den > 0:
                best = max(best, num / den)
            elif num > 0:
                return float("inf")
    return best
