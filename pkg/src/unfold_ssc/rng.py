"""xoshiro256++ pseudo-random generator with splitmix64 seeding.

Pure-Python port of the reference implementation by Blackman and Vigna.
The clustering code draws so few variates that speed is irrelevant; what
matters is that restarts get reproducible, provably disjoint substreams,
which ``jump`` provides by advancing the state 2^128 steps.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1

_JUMP = (
    0x180EC6D33CFD0ABA,
    0xD5A61266F0C9392C,
    0xA9582618E03FC9AA,
    0x39ABDC4529B1661C,
)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


def splitmix64_next(state: int) -> tuple[int, int]:
    """One splitmix64 step. Returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


class Xoshiro256pp:
    """xoshiro256++ generator seeded through splitmix64."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        state = seed & _MASK
        s = []
        for _ in range(4):
            state, out = splitmix64_next(state)
            s.append(out)
        self._s = s

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[0] + s[3]) & _MASK, 23) + s[0]) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def next_double(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def jump(self) -> None:
        """Advance 2^128 steps; gives 2^128 non-overlapping substreams."""
        s0 = s1 = s2 = s3 = 0
        for word in _JUMP:
            for bit in range(64):
                if word & (1 << bit):
                    s0 ^= self._s[0]
                    s1 ^= self._s[1]
                    s2 ^= self._s[2]
                    s3 ^= self._s[3]
                self.next_u64()
        self._s = [s0, s1, s2, s3]


def substream(seed: int, index: int) -> Xoshiro256pp:
    """Generator for the ``index``-th sequential substream of ``seed``."""
    rng = Xoshiro256pp(seed)
    for _ in range(index):
        rng.jump()
    return rng
