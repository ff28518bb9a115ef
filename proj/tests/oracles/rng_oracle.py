#!/usr/bin/env python3
"""Independent reference for the simulator's random stream.

MT19937-64 is written out from its published recurrence, then the uniform and
Box-Muller mappings documented in include/psim/rng.hpp are applied. Prints the
realized shifts of a jitter-only stack so the C++ test can freeze them.
"""
import math
import sys

MASK = (1 << 64) - 1


class MT19937_64:
    NN, MM = 312, 156
    MATRIX_A = 0xB5026F5AA96619E9
    UM, LM = 0xFFFFFFFF80000000, 0x7FFFFFFF

    def __init__(self, seed):
        self.mt = [0] * self.NN
        self.mt[0] = seed & MASK
        for i in range(1, self.NN):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK
        self.mti = self.NN

    def _twist(self):
        mt = self.mt
        for i in range(self.NN):
            x = (mt[i] & self.UM) | (mt[(i + 1) % self.NN] & self.LM)
            xa = x >> 1
            if x & 1:
                xa ^= self.MATRIX_A
            mt[i] = mt[(i + self.MM) % self.NN] ^ xa
        self.mti = 0

    def next(self):
        if self.mti >= self.NN:
            self._twist()
        x = self.mt[self.mti]
        self.mti += 1
        x ^= (x >> 29) & 0x5555555555555555
        x ^= (x << 17) & 0x71D67FFFEDA60000
        x ^= (x << 37) & 0xFFF7EEE000000000
        x ^= x >> 43
        return x & MASK


def normal(gen):
    u1 = ((gen.next() >> 11) + 1) * 2.0**-53
    u2 = (gen.next() >> 11) * 2.0**-53
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def main():
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 12345
    sigma = float(sys.argv[2]) if len(sys.argv) > 2 else 0.05
    gen = MT19937_64(seed)
    schedule = [-math.pi, -math.pi / 2, 0.0, math.pi / 2, math.pi]
    for nominal in schedule:
        print(repr(nominal + sigma * normal(gen)))


if __name__ == "__main__":
    main()
