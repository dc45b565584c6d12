"""Independent reference computations used by the tests.

Nothing here imports the code under test.
"""
import math

import numpy as np
import scipy.linalg


def cofactor_det(m):
    """Laplace expansion along the first row."""
    m = np.asarray(m, dtype=complex)
    size = m.shape[0]
    if size == 1:
        return m[0, 0]
    total = 0j
    for j in range(size):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1) ** j * m[0, j] * cofactor_det(minor)
    return total


def thermal_probs(nbar, dim):
    n = np.arange(dim)
    return nbar**n / (1 + nbar) ** (n + 1)


def factorial_moment(probs, k):
    """sum_n p_n n!/(n-k)!  (the normally ordered moment <adag^k a^k> of a diagonal state)."""
    return sum(p * math.perm(n, k) for n, p in enumerate(probs))


def squeezed_amplitudes(r, phi, dim):
    """Squeeze operator exponentiated in a dim-dimensional truncation, applied to vacuum."""
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    xi = r * np.exp(1j * phi)
    gen = 0.5 * (np.conj(xi) * a @ a - xi * a.T @ a.T)
    psi = scipy.linalg.expm(gen)[:, 0]
    return psi / np.linalg.norm(psi)


def amplitude_moments(c):
    """(<adag a>, <a^2>, <a>) from number-basis amplitudes."""
    n = np.arange(len(c))
    number = float(np.sum(n * abs(c) ** 2))
    a2 = complex(np.sum(np.conj(c[:-2]) * c[2:] * np.sqrt((n[:-2] + 1) * (n[:-2] + 2))))
    a1 = complex(np.sum(np.conj(c[:-1]) * c[1:] * np.sqrt(n[:-1] + 1)))
    return number, a2, a1


# ---- two-level atom by direct integration (density-matrix form, RK4)

SM = np.array([[0, 1], [0, 0]], dtype=complex)
SP = SM.T.copy()


def atom_rhs(rabi, detuning, gamma):
    h = -0.5 * rabi * (SP + SM) + detuning * SP @ SM
    spsm = SP @ SM

    def f(x):
        return -1j * (h @ x - x @ h) + gamma * (SM @ x @ SP - 0.5 * (spsm @ x + x @ spsm))

    return f


def rk4(f, x, t, dt=1e-3):
    steps = int(round(t / dt))
    if steps == 0:
        return x.copy()
    h = t / steps
    for _ in range(steps):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def g2_by_integration(rabi, taus, detuning=0.0, gamma=1.0, settle=60.0, dt=1e-3):
    """Stationary g2 on a grid of delays, sweeping forward once."""
    f = atom_rhs(rabi, detuning, gamma)
    ground = np.diag([1.0, 0.0]).astype(complex)
    rho = rk4(f, ground, settle, dt=0.01)
    pop = rho[1, 1].real
    x = SM @ rho @ SP
    out, now = [], 0.0
    for tau in taus:
        x = rk4(f, x, tau - now, dt)
        now = tau
        out.append(np.trace(SP @ SM @ x).real / pop**2)
    return np.array(out)


def resonant_g2_formula(rabi, tau, gamma=1.0):
    """1 - exp(-3 gamma tau/4) [cos(mu tau) + (3 gamma / 4 mu) sin(mu tau)], mu^2 = rabi^2 - gamma^2/16 > 0."""
    mu = math.sqrt(rabi**2 - gamma**2 / 16)
    tau = np.asarray(tau, dtype=float)
    return 1 - np.exp(-0.75 * gamma * tau) * (np.cos(mu * tau) + 0.75 * gamma / mu * np.sin(mu * tau))


def steady_excited_population(rabi, detuning=0.0, gamma=1.0):
    """(rabi^2/4) / (detuning^2 + gamma^2/4 + rabi^2/2)."""
    return (rabi**2 / 4) / (detuning**2 + gamma**2 / 4 + rabi**2 / 2)
