"""Independent reference implementations used by the tests.

Nothing here imports the package's solvers; these are written from the
equations of motion directly so that agreement is meaningful.
"""

import numpy as np


def heisenberg_matrix(omega, g, g_direct, kappa, gamma, detuning):
    """Drift matrix for (a, a^dag, b_1, b_1^dag, ...) built from H term by term.

    H/hbar = -Delta a^dag a + sum w_j b_j^dag b_j
             - sum_j (g_Yj q_j Y + g_Pj q_j P) - sum_{j<k} g_jk q_j q_k
    with q = b + b^dag, Y = a + a^dag, P = i (a^dag - a).
    Rotating-wave damping on every mode.
    """
    m = len(omega)
    n = 2 + 2 * m
    A = np.zeros((n, n), dtype=complex)
    A[0, 0] = 1j * detuning - kappa / 2
    A[1, 1] = -1j * detuning - kappa / 2
    for j in range(m):
        gy, gp = np.real(g[j]), np.imag(g[j])
        ib, ibd = 2 + 2 * j, 3 + 2 * j
        A[ib, ib] = -1j * omega[j] - gamma / 2
        A[ibd, ibd] = 1j * omega[j] - gamma / 2
        # [a, Y] = 1, [a, P] = i  ->  da/dt += i (g_Y + i g_P) q
        for col in (ib, ibd):
            A[0, col] += 1j * (gy + 1j * gp)
            A[1, col] += -1j * (gy - 1j * gp)
        # [b, q] = 1 -> db/dt += i (g_Y Y + g_P P) = i g_Y (a + a^dag) - g_P (a^dag - a)
        A[ib, 0] += 1j * gy + gp
        A[ib, 1] += 1j * gy - gp
        A[ibd, 0] += -1j * gy - gp
        A[ibd, 1] += -1j * gy + gp
    for j in range(m):
        for k in range(m):
            if j == k:
                continue
            gjk = g_direct[j][k]
            ib, ibd = 2 + 2 * j, 3 + 2 * j
            kb, kbd = 2 + 2 * k, 3 + 2 * k
            for col in (kb, kbd):
                A[ib, col] += 1j * gjk
                A[ibd, col] += -1j * gjk
    return A


def noise_diag(kappa, gamma, bath, optical_bath=0.0):
    d = [kappa * (optical_bath + 1), kappa * optical_bath]
    for n in bath:
        d += [gamma * (n + 1), gamma * n]
    return np.array(d, dtype=float)


def spectra_by_solve(A, N, omega, rows):
    """S(w) = r (-iw - A)^-1 N (-iw - A)^-dag r^dag, one linear solve per frequency."""
    out = np.empty((len(omega), rows.shape[0]))
    eye = np.eye(A.shape[0])
    for i, w in enumerate(omega):
        X = np.linalg.solve(-1j * w * eye - A, np.diag(np.sqrt(N)))
        R = rows @ X
        out[i] = np.sum(np.abs(R) ** 2, axis=1)
    return out


def lyapunov_kron(A, N):
    """Solve A S + S A^dag + N = 0 through the Kronecker-product linear system."""
    n = A.shape[0]
    eye = np.eye(n)
    K = np.kron(eye, A) + np.kron(A.conj(), eye)
    s = np.linalg.solve(K, -N.reshape(-1, order="F"))
    return s.reshape(n, n, order="F")


def lorentzian_pair(omega, omega0, gamma, n):
    """Displacement PSD of a free damped oscillator (rotating-wave bath)."""
    return (gamma * (n + 1) / ((omega - omega0) ** 2 + gamma ** 2 / 4)
            + gamma * n / ((omega + omega0) ** 2 + gamma ** 2 / 4))


def central_hessian(f, x0, h):
    """Plain fourth-order central-difference Hessian of a scalar function."""
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h[i]
            ej[j] = h[j]
            if i == j:
                H[i, i] = (-f(x0 + 2 * ei) + 16 * f(x0 + ei) - 30 * f(x0)
                           + 16 * f(x0 - ei) - f(x0 - 2 * ei)) / (12 * h[i] ** 2)
            else:
                H[i, j] = (f(x0 + ei + ej) - f(x0 + ei - ej)
                           - f(x0 - ei + ej) + f(x0 - ei - ej)) / (4 * h[i] * h[j])
    return H
