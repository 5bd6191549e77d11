"""Batched local-matrix kernels.

Every volume, face and edge term of the DG forms reduces to a weighted
Gram contraction over quadrature points, evaluated for a batch of
entities at once:

    G[e, i, j] = sum_q w[e, q] * A[e, q, i] * B[e, q, j]

A compiled version of the contraction is used when the ``_fastgram``
extension was built; a numpy fallback is selected at import otherwise
(or when ``EDDYDG_FORCE_NUMPY`` is set in the environment).
"""

import os

import numpy as np

__all__ = ["BACKEND", "weighted_gram", "weighted_gram_vec"]


def _gram_numpy(w, A, B):
    return np.matmul((A * w[:, :, None]).transpose(0, 2, 1), B)


try:
    from ._fastgram import weighted_gram as _gram_compiled
except ImportError:
    _gram_compiled = None

if _gram_compiled is None or os.environ.get("EDDYDG_FORCE_NUMPY"):
    BACKEND = "numpy"
    _gram = _gram_numpy
else:
    BACKEND = "compiled"
    _gram = _gram_compiled


def weighted_gram(w, A, B):
    """Contract G[e] = A[e]^T diag(w[e]) B[e] over a batch of entities.

    Parameters
    ----------
    w : ndarray, shape (ne, nq)
    A : ndarray, shape (ne, nq, ni)
    B : ndarray, shape (ne, nq, nj)

    Returns
    -------
    ndarray, shape (ne, ni, nj), float64
    """
    w = np.ascontiguousarray(w, dtype=np.float64)
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    return _gram(w, A, B)


def weighted_gram_vec(w, A, B):
    """Weighted Gram of vector-valued tables.

    ``A`` and ``B`` have shape (ne, nq, n, 3); the dot product over the
    component axis is folded into the quadrature axis so the scalar
    kernel applies.
    """
    ne, nq = w.shape
    w3 = np.repeat(w, 3, axis=1)
    A3 = A.transpose(0, 1, 3, 2).reshape(ne, nq * 3, A.shape[2])
    B3 = B.transpose(0, 1, 3, 2).reshape(ne, nq * 3, B.shape[2])
    return weighted_gram(w3, A3, B3)
