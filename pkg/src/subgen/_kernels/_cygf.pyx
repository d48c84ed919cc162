# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled byte-level GF kernels (hot path of encoding and elimination)."""

BACKEND = "cython"


def axpy(unsigned char[::1] dst, const unsigned char[::1] src,
         const unsigned char[::1] mul_row):
    """dst[i] ^= mul_row[src[i]] for all i."""
    cdef Py_ssize_t i, n = dst.shape[0]
    for i in range(n):
        dst[i] ^= mul_row[src[i]]


def scale(unsigned char[::1] dst, const unsigned char[::1] mul_row):
    """dst[i] = mul_row[dst[i]] for all i."""
    cdef Py_ssize_t i, n = dst.shape[0]
    for i in range(n):
        dst[i] = mul_row[dst[i]]
