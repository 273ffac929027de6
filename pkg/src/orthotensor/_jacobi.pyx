# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled one-sided Jacobi sweeps.

Mirrors :func:`orthotensor._jacobi_py.jacobi_sweeps` operation for operation.
"""
from libc.math cimport sqrt, fabs, copysign


cdef inline double _dot(double[:, ::1] X, Py_ssize_t a, Py_ssize_t b, Py_ssize_t q) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t k
    for k in range(q):
        acc += X[a, k] * X[b, k]
    return acc


cdef inline void _rotate(double[:, ::1] X, Py_ssize_t a, Py_ssize_t b, Py_ssize_t q,
                         double c, double s) noexcept nogil:
    cdef Py_ssize_t k
    cdef double xa, xb
    for k in range(q):
        xa = X[a, k]
        xb = X[b, k]
        X[a, k] = c * xa - s * xb
        X[b, k] = s * xa + c * xb


def jacobi_sweeps(double[:, ::1] X, double[:, ::1] Vt, double eps, int max_sweeps):
    """Orthogonalize the rows of ``X`` in place, accumulating rotations in ``Vt``.

    Returns the number of sweeps performed.
    """
    cdef Py_ssize_t p = X.shape[0]
    cdef Py_ssize_t q = X.shape[1]
    cdef Py_ssize_t pv = Vt.shape[1]
    cdef Py_ssize_t i, j
    cdef int sweep, rotated
    cdef int done = max_sweeps
    cdef double alpha, beta, gamma, zeta, t, c, s
    with nogil:
        for sweep in range(max_sweeps):
            rotated = 0
            for i in range(p - 1):
                for j in range(i + 1, p):
                    alpha = _dot(X, i, i, q)
                    beta = _dot(X, j, j, q)
                    gamma = _dot(X, i, j, q)
                    if gamma == 0.0 or fabs(gamma) <= eps * sqrt(alpha * beta):
                        continue
                    rotated += 1
                    zeta = (beta - alpha) / (2.0 * gamma)
                    t = copysign(1.0, zeta) / (fabs(zeta) + sqrt(1.0 + zeta * zeta))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = c * t
                    _rotate(X, i, j, q, c, s)
                    _rotate(Vt, i, j, pv, c, s)
            if rotated == 0:
                done = sweep + 1
                break
    return done
