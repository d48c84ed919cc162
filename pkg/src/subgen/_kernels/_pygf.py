"""Pure numpy implementations of the byte-level GF kernels.

Both kernels operate on uint8 arrays. ``mul_row`` is one 256-entry row of a
field's byte multiplication table, so a single lookup multiplies every
packed symbol in a byte at once.
"""

BACKEND = "pure"


def axpy(dst, src, mul_row):
    """dst[i] ^= mul_row[src[i]] for all i."""
    dst ^= mul_row[src]


def scale(dst, mul_row):
    """dst[i] = mul_row[dst[i]] for all i."""
    dst[:] = mul_row[dst]
