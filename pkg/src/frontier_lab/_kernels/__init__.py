"""Sampling kernels: compiled extension when available, numpy fallback otherwise.

Both implementations consume the identical uniform stream from the
supplied bit generator, so results do not depend on which one is active.
``KERNEL_IMPL`` reports the selection for manifests and benchmarks.
"""

import numpy as np

try:
    from frontier_lab._kernels._contract import sample_counts

    KERNEL_IMPL = "compiled"
except ImportError:  # extension not built on this platform
    from frontier_lab._kernels._contract_py import sample_counts

    KERNEL_IMPL = "python"

from frontier_lab._kernels._contract_py import sample_counts as sample_counts_py

__all__ = ["AliasTable", "KERNEL_IMPL", "sample_counts", "sample_counts_py"]


class AliasTable:
    """Vose alias table for O(1) draws from a finite discrete distribution.

    Construction is deterministic in the input probability vector, so the
    compiled and fallback kernels (and any process) see identical tables.
    """

    def __init__(self, p):
        p = np.asarray(p, dtype=np.float64)
        if p.ndim != 1 or len(p) == 0:
            raise ValueError("probability vector must be 1-D and non-empty")
        if np.any(p < 0) or not np.isclose(p.sum(), 1.0, rtol=1e-9, atol=0):
            raise ValueError("probabilities must be non-negative and sum to 1")
        k = len(p)
        scaled = p * k
        prob = np.ones(k, dtype=np.float64)
        alias = np.arange(k, dtype=np.int64)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            l = large.pop()
            prob[s] = scaled[s]
            alias[s] = l
            scaled[l] = (scaled[l] + scaled[s]) - 1.0
            (small if scaled[l] < 1.0 else large).append(l)
        # leftover entries (floating-point residue) accept with probability 1
        self.prob = prob
        self.alias = alias
        self.k = k

    def sample_counts(self, bit_generator, n_draws, fn=None):
        """Count vector of ``n_draws`` draws using the active kernel (or ``fn``)."""
        fn = fn or sample_counts
        return fn(bit_generator, self.prob, self.alias, int(n_draws))

    def draw(self, generator, size):
        """Vectorized draws using a numpy Generator (two uniforms per draw)."""
        n = int(np.prod(size)) if not np.isscalar(size) else int(size)
        u = generator.random(2 * n)
        idx = (u[0::2] * self.k).astype(np.int64)
        np.minimum(idx, self.k - 1, out=idx)
        rejected = u[1::2] >= self.prob[idx]
        idx[rejected] = self.alias[idx[rejected]]
        return idx.reshape(size)
