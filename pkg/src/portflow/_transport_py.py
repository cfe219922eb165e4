"""Pure NumPy implementation of the transport gather kernels.

Mirror of the arithmetic in _transport.pyx so both backends produce
bit-identical results: position = q * (n - 1) clipped to [0, n - 1],
cell index = min(floor(position), n - 2), then a two-point blend.
"""

import numpy as np

BACKEND = "numpy"


def gather_linear(samples, queries):
    """Linear interpolation of samples (uniform grid on [0,1]) at query points."""
    samples = np.asarray(samples, dtype=float)
    queries = np.asarray(queries, dtype=float)
    n = samples.shape[0]
    pos = np.clip(queries * (n - 1.0), 0.0, n - 1.0)
    idx = np.minimum(pos.astype(np.intp), n - 2)
    w = pos - idx
    return (1.0 - w) * samples[idx] + w * samples[idx + 1]


def interp_accumulate(out, samples, queries, coeff):
    """out += coeff * gather_linear(samples, queries), in place."""
    if coeff == 0.0:
        return out
    out += coeff * gather_linear(samples, queries)
    return out
