"""Counter-based random numbers keyed by (seed, chain, sweep, unit, tag).

Every random decision in the samplers is a pure function of its key, so runs
are bit-reproducible for a fixed seed, chains can be simulated in any order,
and monotone-coupled chains share randomness by construction (they simply
query the same keys). The generator is two rounds of the splitmix64
finalizer over the mixed-in key words; uniforms take the top 53 bits.
"""

import numba
import numpy as np

# purpose tags keep the streams for different decisions disjoint
TAG_GLAUBER = 0
TAG_CM_BOND = 1
TAG_CM_COLOR = 2
TAG_INIT = 3

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@numba.njit(numba.uint64(numba.uint64), cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@numba.njit(numba.uint64(numba.uint64, numba.uint64, numba.uint64, numba.uint64), cache=True, inline="always")
def stream_key(seed, chain, sweep, tag):
    """Per-(chain, sweep, tag) base key; hoisted out of edge loops."""
    z = _mix(seed ^ (tag + np.uint64(1)) * _GOLDEN)
    z = _mix(z ^ (chain + np.uint64(1)) * _M1)
    return _mix(z ^ (sweep + np.uint64(1)) * _M2)


@numba.njit(numba.float64(numba.uint64, numba.uint64), cache=True, inline="always")
def key_u01(key, unit):
    """Uniform in [0,1) for one unit (edge, vertex, ...) under a stream key."""
    return (_mix(key ^ (unit + np.uint64(1)) * _GOLDEN) >> np.uint64(11)) * _INV53


def u01(seed, chain, sweep, unit, tag):
    """Scalar convenience wrapper (tests and non-hot paths)."""
    return key_u01(stream_key(np.uint64(seed), np.uint64(chain), np.uint64(sweep), np.uint64(tag)), np.uint64(unit))
