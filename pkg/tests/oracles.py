"""Independent reference implementations used only by the tests."""

import cmath
import math

import numpy as np


def naive_dft_r2c(x):
    """Direct O(N^2) DFT in complex128, first N/2+1 bins."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    k = np.arange(n // 2 + 1)[:, None]
    t = np.arange(n)[None, :]
    return (x[None, :] * np.exp(-2j * np.pi * k * t / n)).sum(axis=1)


def dft_bin_scalar(x, k):
    n = len(x)
    return sum(float(v) * cmath.exp(-2j * math.pi * k * i / n) for i, v in enumerate(x))


def matmul_triple_loop(a, b):
    """Plain i, j, k loops in f64."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, kk = a.shape
    n = b.shape[1]
    c = [[0.0] * n for _ in range(m)]
    al, bl = a.tolist(), b.tolist()
    for i in range(m):
        for j in range(n):
            s = 0.0
            for k in range(kk):
                s += al[i][k] * bl[k][j]
            c[i][j] = s
    return np.array(c)


def matmul_k_loop(a, b):
    """Same summation order as the triple loop, vectorised over (i, j); f64."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.zeros((a.shape[0], b.shape[1]))
    for k in range(a.shape[1]):
        c += np.outer(a[:, k], b[k, :])
    return c


def sequential_dot(x, y):
    s = 0.0
    for a, b in zip(np.asarray(x, np.float64).tolist(), np.asarray(y, np.float64).tolist()):
        s += a * b
    return s


def fnv1a64_ref(data: bytes) -> int:
    h = 14695981039346656037
    for b in data:
        h ^= b
        h = (h * 1099511628211) % (1 << 64)
    return h


def mine_bruteforce(data: bytes, target: int, start: int, count: int):
    for n in range(start, start + count):
        if fnv1a64_ref(data + str(n).encode("ascii")) < target:
            return n
    return None


def gray_pixel(r, g, b):
    """0.299 R + 0.587 G + 0.114 B, round half away from zero, via exact fractions."""
    from fractions import Fraction

    y = Fraction(299, 1000) * r + Fraction(587, 1000) * g + Fraction(114, 1000) * b
    return min(255, max(0, int(y + Fraction(1, 2))))


def sharpen_ref(arr):
    """Per-pixel 3x3 Laplacian (center 8, neighbours -1) skipping out-of-image neighbours."""
    a = np.asarray(arr, dtype=np.int64)
    h, w, _ = a.shape
    out = np.zeros_like(a)
    for y in range(h):
        for x in range(w):
            acc = 8 * a[y, x].copy()
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    if (dy or dx) and 0 <= y + dy < h and 0 <= x + dx < w:
                        acc -= a[y + dy, x + dx]
            out[y, x] = np.clip(acc, 0, 255)
    return out.astype(np.uint8)


def upsample_ref(arr, s):
    a = np.asarray(arr)
    return np.repeat(np.repeat(a, s, axis=0), s, axis=1)
