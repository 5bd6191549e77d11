# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled weighted Gram contraction (see eddydg.kernels).

One dgemm per entity on the weighted table; unlike the numpy fallback
this never materializes the full (ne, nq, ni) scaled copy of A.
"""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


def weighted_gram(cnp.float64_t[:, ::1] w,
                  cnp.float64_t[:, :, ::1] A,
                  cnp.float64_t[:, :, ::1] B):
    cdef int ne = A.shape[0], nq = A.shape[1]
    cdef int ni = A.shape[2], nj = B.shape[2]
    cdef Py_ssize_t e, q, i
    cdef double we
    cdef char no = b'N', tr = b'T'
    cdef double one = 1.0, zero = 0.0
    out_arr = np.zeros((ne, ni, nj), dtype=np.float64)
    cdef cnp.float64_t[:, :, ::1] out = out_arr
    scaled_arr = np.empty((nq, ni), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] scaled = scaled_arr
    if ne == 0 or nq == 0 or ni == 0 or nj == 0:
        return out_arr
    for e in range(ne):
        for q in range(nq):
            we = w[e, q]
            for i in range(ni):
                scaled[q, i] = we * A[e, q, i]
        # row-major out[e] = scaled^T @ B[e]; in BLAS column-major terms
        # that is out_F(nj, ni) = B_F(nj, nq) @ scaled_F(ni, nq)^T
        dgemm(&no, &tr, &nj, &ni, &nq, &one,
              &B[e, 0, 0], &nj, &scaled[0, 0], &ni,
              &zero, &out[e, 0, 0], &nj)
    return out_arr
