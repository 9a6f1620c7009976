"""Portable counter-based random streams.

Every random draw in this package comes from a Philox-4x64-10 counter
generator keyed by ``(seed, stream_id)``.  The raw 64-bit outputs are mapped
to floats and permutations here, with fixed formulas, so the same
``(seed, stream_id)`` produces the same sequence on every platform and
numpy version.

Stream ids are fixed per consumer:

====  =======================================
id    consumer
====  =======================================
0     data samplers
1     network parameter initialization
2     batch shuffling (when enabled)
3     KLIEP fitting (centers, CV folds)
====  =======================================

Within a stream, independent sequences are selected with a ``block`` index,
which offsets the 256-bit Philox counter by ``block * 2**128``; blocks can
never overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_U64 = np.uint64
_INV_2_53 = 2.0 ** -53

DATA_STREAM = 0
INIT_STREAM = 1
SHUFFLE_STREAM = 2
KLIEP_STREAM = 3


@dataclass(frozen=True)
class RngStream:
    """Immutable handle on one reproducible random stream.

    Equal ``(seed, stream_id)`` values always denote the identical sequence;
    draws are pure functions of ``(seed, stream_id, block, count)``.
    """

    seed: int
    stream_id: int = 0

    def _raw(self, n: int, block: int) -> np.ndarray:
        key = np.array([self.seed, self.stream_id], dtype=_U64)
        counter = np.array([0, 0, block, 0], dtype=_U64)
        return np.random.Philox(key=key, counter=counter).random_raw(n)

    def uniform(self, n: int, block: int = 0) -> np.ndarray:
        """``n`` doubles i.i.d. uniform on [0, 1): ``(raw >> 11) * 2**-53``."""
        raw = self._raw(n, block)
        return (raw >> _U64(11)).astype(np.float64) * _INV_2_53

    def normal(self, n: int, block: int = 0) -> np.ndarray:
        """``n`` standard normal doubles via Box-Muller on this stream.

        Uses u1 in (0, 1] (``(raw >> 11) + 1`` scaled) so the log never sees
        zero; platform ``cos``/``sin``/``log``/``sqrt`` are correctly rounded
        or near-so in 64-bit, which keeps sequences reproducible in practice.
        """
        m = (n + 1) // 2
        raw = self._raw(2 * m, block)
        bits = (raw >> _U64(11)).astype(np.float64)
        u1 = (bits[:m] + 1.0) * _INV_2_53
        u2 = bits[m:] * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * np.pi) * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
        return z[:n]

    def permutation(self, n: int, block: int = 0) -> np.ndarray:
        """A uniform permutation of ``range(n)``.

        Order statistics of raw 64-bit keys; ties (probability ~n^2/2^64)
        resolve by original index via the stable sort, keeping the result
        deterministic regardless.
        """
        keys = self._raw(n, block)
        return np.argsort(keys, kind="stable")

    def choice(self, n: int, k: int, block: int = 0) -> np.ndarray:
        """``k`` indices drawn uniformly without replacement from ``range(n)``."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot draw {k} from {n} without replacement")
        return self.permutation(n, block)[:k]
