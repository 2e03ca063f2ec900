"""Independent reference for the per-site activation hash.

Prints the published test vectors that the C++ tests freeze.
"""
M = (1 << 64) - 1


def mix(x):
    z = (x + 0x9E3779B97F4A7C15) & M
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
    return z ^ (z >> 31)


def zigzag(c):
    return ((c << 1) ^ (c >> 63)) & M


def site_hash(seed, realization, orbit, cell):
    h = mix(seed & M)
    h = mix(h ^ (realization & M))
    h = mix(h ^ (orbit & M))
    for c in cell:
        h = mix(h ^ zigzag(c))
    return h


VECTORS = [
    (0, 0, 0, [0]),
    (42, 0, 0, [5, -3]),
    (42, 7, 1, [-1, 0]),
    (0xDEADBEEFCAFEF00D, 123456, 0, [1000000, -1000000, 17]),
    (2**64 - 1, 2**63, 3, [-2147483648, 2147483647]),
]

if __name__ == "__main__":
    for seed, real, orbit, cell in VECTORS:
        print(f"{seed:#018x} {real} {orbit} {cell} -> {site_hash(seed, real, orbit, cell):#018x}")
    # threshold check for p = 0.6
    import math
    print(hex(int(math.ldexp(0.6, 64))))
