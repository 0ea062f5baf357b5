"""Pure-numpy fallback for the alias-draw counting kernel.

Consumes the same PCG64 double stream as the compiled kernel (two
uniforms per draw, in the same order), chunked to bound memory, so the
resulting integer count vectors are bit-identical between the two
implementations.
"""

import numpy as np

_CHUNK = 1 << 16


def sample_counts(bit_generator, prob, alias, n_draws):
    """Tally ``n_draws`` alias-method draws into a count vector."""
    gen = np.random.Generator(bit_generator)
    k = len(prob)
    counts = np.zeros(k, dtype=np.int64)
    done = 0
    while done < n_draws:
        n = min(_CHUNK, n_draws - done)
        u = gen.random(2 * n)
        idx = (u[0::2] * k).astype(np.int64)
        np.minimum(idx, k - 1, out=idx)
        rejected = u[1::2] >= prob[idx]
        idx[rejected] = alias[idx[rejected]]
        counts += np.bincount(idx, minlength=k)
        done += n
    return counts
