# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled force-assembly kernel.

Same contract as `numpy_backend.assemble_forces`; elements are processed
serially in index order, so assembly is deterministic.  The symmetric
3x3 eigenproblem is solved with cyclic Jacobi rotations, which handles
repeated principal stretches without special cases.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cbrt, fabs, pow, sqrt

NAME = "compiled"


cdef void _eigh3(double b[3][3], double w[3], double v[3][3]) noexcept nogil:
    """Eigen-decomposition of a symmetric 3x3 (columns of v = eigenvectors)."""
    cdef int i, k, p, q, sweep
    cdef double off, scale, theta, t, c, s, tau, h, g
    for i in range(3):
        for k in range(3):
            v[i][k] = 1.0 if i == k else 0.0
    for sweep in range(50):
        off = b[0][1] * b[0][1] + b[0][2] * b[0][2] + b[1][2] * b[1][2]
        scale = b[0][0] * b[0][0] + b[1][1] * b[1][1] + b[2][2] * b[2][2]
        if off <= 1e-30 * (scale + 1e-300):
            break
        for p in range(2):
            for q in range(p + 1, 3):
                if fabs(b[p][q]) == 0.0:
                    continue
                theta = (b[q][q] - b[p][p]) / (2.0 * b[p][q])
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                h = b[p][q]
                b[p][p] -= t * h
                b[q][q] += t * h
                b[p][q] = 0.0
                b[q][p] = 0.0
                for k in range(3):
                    if k != p and k != q:
                        g = b[k][p]
                        h = b[k][q]
                        b[k][p] = g - s * (h + g * tau)
                        b[p][k] = b[k][p]
                        b[k][q] = h + s * (g - h * tau)
                        b[q][k] = b[k][q]
                for k in range(3):
                    g = v[k][p]
                    h = v[k][q]
                    v[k][p] = g - s * (h + g * tau)
                    v[k][q] = h + s * (g - h * tau)
    w[0] = b[0][0]
    w[1] = b[1][1]
    w[2] = b[2][2]


def assemble_forces(const double[:, ::1] x, data, double mu, double alpha, double K,
                    double[:, ::1] f_out):
    """See numpy_backend.assemble_forces for the contract."""
    cdef const long long[:, ::1] conn = data.conn
    cdef const double[:, :, ::1] grad = data.grad
    cdef const double[::1] vol0 = data.vol0
    cdef const double[:, :, ::1] gamma = data.gamma
    cdef const double[::1] hg_k = data.hg_k

    cdef Py_ssize_t n_elem = conn.shape[0]
    cdef Py_ssize_t n_nodes = f_out.shape[0]
    cdef Py_ssize_t e, a, i, j, k, m, node

    cdef double xe[8][3]
    cdef double F[3][3]
    cdef double B[3][3]
    cdef double V[3][3]
    cdef double invF[3][3]
    cdef double sigma[3][3]
    cdef double bcur[8][3]
    cdef double fe[8][3]
    cdef double q[4][3]
    cdef double w[3]
    cdef double detF, Jm13, lb, S, coefW, coefS, pvol, vcur, ke
    cdef double pa[3]
    cdef double internal = 0.0
    cdef double hourglass = 0.0
    cdef double min_j = 1.0
    cdef Py_ssize_t bad = -1

    for i in range(n_nodes):
        for j in range(3):
            f_out[i, j] = 0.0

    coefW = 2.0 * mu / (alpha * alpha)

    with nogil:
        for e in range(n_elem):
            for a in range(8):
                node = conn[e, a]
                for i in range(3):
                    xe[a][i] = x[node, i]

            for i in range(3):
                for j in range(3):
                    F[i][j] = 0.0
                    for a in range(8):
                        F[i][j] += xe[a][i] * grad[e, a, j]

            detF = (
                F[0][0] * (F[1][1] * F[2][2] - F[1][2] * F[2][1])
                - F[0][1] * (F[1][0] * F[2][2] - F[1][2] * F[2][0])
                + F[0][2] * (F[1][0] * F[2][1] - F[1][1] * F[2][0])
            )
            if e == 0 or detF < min_j:
                min_j = detF
            if detF <= 0.0:
                bad = e
                break

            for i in range(3):
                for j in range(3):
                    B[i][j] = (
                        F[i][0] * F[j][0] + F[i][1] * F[j][1] + F[i][2] * F[j][2]
                    )
            _eigh3(B, w, V)

            Jm13 = 1.0 / cbrt(detF)
            S = 0.0
            for k in range(3):
                lb = sqrt(w[k] if w[k] > 0.0 else 0.0) * Jm13
                pa[k] = pow(lb, alpha)
                S += pa[k]

            internal += vol0[e] * (
                coefW * (S - 3.0) + 0.5 * K * (detF - 1.0) * (detF - 1.0)
            )

            coefS = 2.0 * mu / (alpha * detF)
            pvol = K * (detF - 1.0)
            for k in range(3):
                pa[k] = coefS * (pa[k] - S / 3.0)
            for i in range(3):
                for j in range(i, 3):
                    sigma[i][j] = (
                        pa[0] * V[i][0] * V[j][0]
                        + pa[1] * V[i][1] * V[j][1]
                        + pa[2] * V[i][2] * V[j][2]
                    )
                    sigma[j][i] = sigma[i][j]
                sigma[i][i] += pvol

            # inverse of F via adjugate
            invF[0][0] = (F[1][1] * F[2][2] - F[1][2] * F[2][1]) / detF
            invF[0][1] = (F[0][2] * F[2][1] - F[0][1] * F[2][2]) / detF
            invF[0][2] = (F[0][1] * F[1][2] - F[0][2] * F[1][1]) / detF
            invF[1][0] = (F[1][2] * F[2][0] - F[1][0] * F[2][2]) / detF
            invF[1][1] = (F[0][0] * F[2][2] - F[0][2] * F[2][0]) / detF
            invF[1][2] = (F[0][2] * F[1][0] - F[0][0] * F[1][2]) / detF
            invF[2][0] = (F[1][0] * F[2][1] - F[1][1] * F[2][0]) / detF
            invF[2][1] = (F[0][1] * F[2][0] - F[0][0] * F[2][1]) / detF
            invF[2][2] = (F[0][0] * F[1][1] - F[0][1] * F[1][0]) / detF

            vcur = detF * vol0[e]
            for a in range(8):
                for i in range(3):
                    bcur[a][i] = (
                        grad[e, a, 0] * invF[0][i]
                        + grad[e, a, 1] * invF[1][i]
                        + grad[e, a, 2] * invF[2][i]
                    )
            for a in range(8):
                for i in range(3):
                    fe[a][i] = vcur * (
                        sigma[i][0] * bcur[a][0]
                        + sigma[i][1] * bcur[a][1]
                        + sigma[i][2] * bcur[a][2]
                    )

            ke = hg_k[e]
            if ke > 0.0:
                for m in range(4):
                    for i in range(3):
                        q[m][i] = 0.0
                        for a in range(8):
                            q[m][i] += gamma[e, m, a] * xe[a][i]
                        hourglass += 0.5 * ke * q[m][i] * q[m][i]
                for a in range(8):
                    for i in range(3):
                        fe[a][i] += ke * (
                            gamma[e, 0, a] * q[0][i]
                            + gamma[e, 1, a] * q[1][i]
                            + gamma[e, 2, a] * q[2][i]
                            + gamma[e, 3, a] * q[3][i]
                        )

            for a in range(8):
                node = conn[e, a]
                for i in range(3):
                    f_out[node, i] += fe[a][i]

    if bad >= 0:
        return 0.0, 0.0, min_j, int(bad)
    return internal, hourglass, min_j, -1
