# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pair-update kernels.

Every gate in the simulator is a 2x2 matrix acting on index pairs
(i, i ^ flip) for all i with (i & cond_mask) == cond_val.
"""
import numpy as np
cimport numpy as cnp

ctypedef double complex cplx


def apply_pair(cnp.ndarray[cplx, ndim=1] psi, long cond_mask, long cond_val,
               long flip, cplx m00, cplx m01, cplx m10, cplx m11):
    cdef Py_ssize_t i, j, n = psi.shape[0]
    cdef cplx a, b
    cdef cplx* p = <cplx*> psi.data
    with nogil:
        for i in range(n):
            if (i & cond_mask) != cond_val:
                continue
            j = i ^ flip
            a = p[i]
            b = p[j]
            p[i] = m00 * a + m01 * b
            p[j] = m10 * a + m11 * b


def apply_ops(cnp.ndarray[cplx, ndim=1] psi, long[:] cond_mask, long[:] cond_val,
              long[:] flip, cplx[:, :] mats):
    """Apply a batch of pair ops in order."""
    cdef Py_ssize_t k, i, j, n = psi.shape[0], nops = cond_mask.shape[0]
    cdef long cm, cv, fl
    cdef cplx a, b, m00, m01, m10, m11
    cdef cplx* p = <cplx*> psi.data
    with nogil:
        for k in range(nops):
            cm = cond_mask[k]
            cv = cond_val[k]
            fl = flip[k]
            m00 = mats[k, 0]
            m01 = mats[k, 1]
            m10 = mats[k, 2]
            m11 = mats[k, 3]
            for i in range(n):
                if (i & cm) != cv:
                    continue
                j = i ^ fl
                a = p[i]
                b = p[j]
                p[i] = m00 * a + m01 * b
                p[j] = m10 * a + m11 * b


def pair_braket(cnp.ndarray[cplx, ndim=1] lam, cnp.ndarray[cplx, ndim=1] psi,
                long cond_mask, long cond_val, long flip,
                cplx m00, cplx m01, cplx m10, cplx m11):
    """<lam| M |psi> where M acts on the selected pairs and is zero elsewhere."""
    cdef Py_ssize_t i, j, n = psi.shape[0]
    cdef cplx a, b, acc = 0
    cdef cplx* p = <cplx*> psi.data
    cdef cplx* l = <cplx*> lam.data
    with nogil:
        for i in range(n):
            if (i & cond_mask) != cond_val:
                continue
            j = i ^ flip
            a = p[i]
            b = p[j]
            acc = acc + l[i].conjugate() * (m00 * a + m01 * b) \
                + l[j].conjugate() * (m10 * a + m11 * b)
    return acc


def adjoint_sweep(cnp.ndarray[cplx, ndim=1] psi, cnp.ndarray[cplx, ndim=1] lam,
                  long[:] cond_mask, long[:] cond_val, long[:] flip, cplx[:, :] mats,
                  cplx[:, :] dmats, long[:] dgate, long[:] dslot, double[:] dscale,
                  cnp.ndarray[cplx, ndim=1] grad):
    """Backward pass accumulating grad[slot] += scale * <lam_k| D |psi_{k-1}>.

    ``psi`` holds the final state and ``lam`` the target on entry; both are
    consumed. Derivative rows must be sorted by gate index.
    """
    cdef Py_ssize_t k, i, j, d, n = psi.shape[0], nops = cond_mask.shape[0]
    cdef long cm, cv, fl
    cdef cplx a, b, acc, i00, i01, i10, i11, d00, d01, d10, d11
    cdef cplx* p = <cplx*> psi.data
    cdef cplx* l = <cplx*> lam.data
    cdef cplx* g = <cplx*> grad.data
    d = dgate.shape[0] - 1
    with nogil:
        for k in range(nops - 1, -1, -1):
            cm = cond_mask[k]
            cv = cond_val[k]
            fl = flip[k]
            i00 = mats[k, 0].conjugate()
            i01 = mats[k, 2].conjugate()
            i10 = mats[k, 1].conjugate()
            i11 = mats[k, 3].conjugate()
            for i in range(n):
                if (i & cm) != cv:
                    continue
                j = i ^ fl
                a = p[i]
                b = p[j]
                p[i] = i00 * a + i01 * b
                p[j] = i10 * a + i11 * b
            while d >= 0 and dgate[d] == k:
                d00 = dmats[d, 0]
                d01 = dmats[d, 1]
                d10 = dmats[d, 2]
                d11 = dmats[d, 3]
                acc = 0
                for i in range(n):
                    if (i & cm) != cv:
                        continue
                    j = i ^ fl
                    a = p[i]
                    b = p[j]
                    acc = acc + l[i].conjugate() * (d00 * a + d01 * b) \
                        + l[j].conjugate() * (d10 * a + d11 * b)
                g[dslot[d]] = g[dslot[d]] + dscale[d] * acc
                d -= 1
            for i in range(n):
                if (i & cm) != cv:
                    continue
                j = i ^ fl
                a = l[i]
                b = l[j]
                l[i] = i00 * a + i01 * b
                l[j] = i10 * a + i11 * b
