# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loop: alias-method categorical draws accumulated into counts.

The stochastic residual simulation applies commuting per-pattern
contractions, so the final profile depends only on how many times each
pattern was drawn.  This kernel consumes uniform doubles straight from a
PCG64 bit generator (two per draw: bucket index, then acceptance coin)
and tallies the chosen pattern.  The pure-numpy fallback consumes the
identical double stream, so both produce bit-identical count vectors.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t


def sample_counts(object bit_generator, double[::1] prob, cnp.int64_t[::1] alias,
                  long long n_draws):
    """Tally ``n_draws`` alias-method draws into a count vector.

    Parameters
    ----------
    bit_generator : numpy.random.BitGenerator
        Source of uniforms; its state advances by 2 * n_draws doubles.
    prob, alias : arrays of length K
        Alias-table acceptance probabilities and alias indices.
    n_draws : int
        Number of categorical draws.
    """
    cdef bitgen_t *rng
    capsule = bit_generator.capsule
    rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")
    cdef Py_ssize_t k = prob.shape[0]
    counts = np.zeros(k, dtype=np.int64)
    cdef cnp.int64_t[::1] cv = counts
    cdef long long t
    cdef Py_ssize_t j
    cdef double u1, u2
    with bit_generator.lock:
        for t in range(n_draws):
            u1 = rng.next_double(rng.state)
            u2 = rng.next_double(rng.state)
            j = <Py_ssize_t>(u1 * k)
            if j >= k:          # guard u1 == 1.0 rounding
                j = k - 1
            if u2 >= prob[j]:
                j = <Py_ssize_t>alias[j]
            cv[j] += 1
    return counts
