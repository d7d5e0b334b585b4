"""Pure numpy versions of the pair-update kernels in ``_kernel.pyx``."""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=4096)
def _pairs(size: int, cond_mask: int, cond_val: int, flip: int):
    idx = np.arange(size, dtype=np.int64)
    lo = idx[(idx & cond_mask) == cond_val]
    return lo, lo ^ flip


def apply_pair(psi, cond_mask, cond_val, flip, m00, m01, m10, m11):
    lo, hi = _pairs(psi.shape[0], int(cond_mask), int(cond_val), int(flip))
    a = psi[lo]
    b = psi[hi]
    psi[lo] = m00 * a + m01 * b
    psi[hi] = m10 * a + m11 * b


def apply_ops(psi, cond_mask, cond_val, flip, mats):
    for k in range(len(cond_mask)):
        m = mats[k]
        apply_pair(psi, cond_mask[k], cond_val[k], flip[k], m[0], m[1], m[2], m[3])


def pair_braket(lam, psi, cond_mask, cond_val, flip, m00, m01, m10, m11):
    lo, hi = _pairs(psi.shape[0], int(cond_mask), int(cond_val), int(flip))
    a = psi[lo]
    b = psi[hi]
    return complex(np.vdot(lam[lo], m00 * a + m01 * b) + np.vdot(lam[hi], m10 * a + m11 * b))


def adjoint_sweep(psi, lam, cond_mask, cond_val, flip, mats, dmats, dgate, dslot, dscale, grad):
    d = len(dgate) - 1
    for k in range(len(cond_mask) - 1, -1, -1):
        m = mats[k]
        inv = (np.conj(m[0]), np.conj(m[2]), np.conj(m[1]), np.conj(m[3]))
        apply_pair(psi, cond_mask[k], cond_val[k], flip[k], *inv)
        while d >= 0 and dgate[d] == k:
            D = dmats[d]
            grad[dslot[d]] += dscale[d] * pair_braket(lam, psi, cond_mask[k], cond_val[k], flip[k], *D)
            d -= 1
        apply_pair(lam, cond_mask[k], cond_val[k], flip[k], *inv)
