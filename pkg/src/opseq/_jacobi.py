"""Cyclic complex Jacobi sweeps for Hermitian matrices (numba kernel)."""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def _offdiag_norm(a):
    n = a.shape[0]
    s = 0.0
    for p in range(n):
        for q in range(p + 1, n):
            z = a[p, q]
            s += z.real * z.real + z.imag * z.imag
    return math.sqrt(2.0 * s)


@numba.njit(cache=True)
def jacobi_sweeps(a, v, off_tol, max_rotations):
    """Diagonalize the Hermitian matrix ``a`` in place, accumulating rotations into ``v``.

    Pivots are visited in row-major order over the strict upper triangle; exact
    zeros are skipped so block-sparse inputs stay block-sparse.

    Returns ``(rotations, off)`` where ``off`` is the final off-diagonal
    Frobenius norm. ``rotations < 0`` means the cap was hit.
    """
    n = a.shape[0]
    rotations = 0
    while True:
        off = _offdiag_norm(a)
        if off <= off_tol:
            return rotations, off
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0:
                    continue
                if rotations >= max_rotations:
                    return -1, _offdiag_norm(a)
                mag = abs(apq)
                phase = apq / mag
                cph = phase.conjugate()
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = a[k, p]
                    akq = a[k, q]
                    nkp = c * akp - s * cph * akq
                    nkq = s * akp + c * cph * akq
                    a[k, p] = nkp
                    a[k, q] = nkq
                    a[p, k] = nkp.conjugate()
                    a[q, k] = nkq.conjugate()
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * cph * vkq
                    v[k, q] = s * vkp + c * cph * vkq
                rotations += 1


def warmup():
    a = np.array([[1.0, 1.0j], [-1.0j, 2.0]], dtype=np.complex128)
    jacobi_sweeps(a, np.eye(2, dtype=np.complex128), 0.0, 100)
