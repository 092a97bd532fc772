#!/usr/bin/env python3
"""Independent replay of the seeded Poisson departure stream.

Re-implements MT19937-64 from its published recurrence, then draws
headways the same way the simulator documents: u = (x >> 11) * 2**-53,
headway = -log1p(-u) / rate. Prints the departure count and first times so
the C++ tests can pin them.

    python3 poisson_replay.py [vph] [horizon] [seed]
"""
import math
import sys

MASK = (1 << 64) - 1


class MT19937_64:
    n, m = 312, 156
    a = 0xB5026F5AA96619E9
    upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF

    def __init__(self, seed):
        self.mt = [0] * self.n
        self.mt[0] = seed & MASK
        for i in range(1, self.n):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK
        self.idx = self.n

    def _twist(self):
        for i in range(self.n):
            x = (self.mt[i] & self.upper) | (self.mt[(i + 1) % self.n] & self.lower)
            xa = x >> 1
            if x & 1:
                xa ^= self.a
            self.mt[i] = self.mt[(i + self.m) % self.n] ^ xa
        self.idx = 0

    def next(self):
        if self.idx >= self.n:
            self._twist()
        y = self.mt[self.idx]
        self.idx += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & MASK


def self_check():
    # value fixed by the C++ standard for mt19937_64 default-seeded
    g = MT19937_64(5489)
    for _ in range(9999):
        g.next()
    assert g.next() == 9981545732273789042, "MT19937-64 implementation is wrong"


def poisson_times(vph, horizon, seed):
    g = MT19937_64(seed)
    rate = vph / 3600.0
    t, out = 0.0, []
    while True:
        u = (g.next() >> 11) * 2.0**-53
        t += -math.log1p(-u) / rate
        if t >= horizon:
            return out
        out.append(t)


def main():
    vph = float(sys.argv[1]) if len(sys.argv) > 1 else 720.0
    horizon = float(sys.argv[2]) if len(sys.argv) > 2 else 3600.0
    seed = int(sys.argv[3]) if len(sys.argv) > 3 else 7
    self_check()
    times = poisson_times(vph, horizon, seed)
    print(f"count {len(times)}")
    for t in times[:5]:
        print(f"{t:.17g}")
    print(f"last {times[-1]:.17g}")


if __name__ == "__main__":
    main()
