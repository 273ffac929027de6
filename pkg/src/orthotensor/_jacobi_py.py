"""Pure-Python one-sided Jacobi sweeps (fallback for the compiled kernel)."""
import math

import numpy as np


def jacobi_sweeps(X, Vt, eps, max_sweeps):
    """Orthogonalize the rows of ``X`` in place, accumulating rotations in ``Vt``.

    Same pair order, rotation formula and stopping rule as the compiled kernel.
    Returns the number of sweeps performed.
    """
    p = X.shape[0]
    for sweep in range(max_sweeps):
        rotated = 0
        for i in range(p - 1):
            for j in range(i + 1, p):
                xi, xj = X[i], X[j]
                alpha = float(xi @ xi)
                beta = float(xj @ xj)
                gamma = float(xi @ xj)
                if gamma == 0.0 or abs(gamma) <= eps * math.sqrt(alpha * beta):
                    continue
                rotated += 1
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                for M in (X, Vt):
                    a = M[i].copy()
                    b = M[j]
                    M[i] = c * a - s * b
                    M[j] = s * a + c * b
        if rotated == 0:
            return sweep + 1
    return max_sweeps
