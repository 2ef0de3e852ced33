"""Slow, independent reference implementations used only by the tests."""

import itertools
import math

import numpy as np


def dtw_by_enumeration(a, b, radius):
    """Minimum over every monotone warping path inside the band, found by DFS."""
    a = list(map(float, a))
    b = list(map(float, b))
    n, m = len(a), len(b)
    best = math.inf
    stack = [(0, 0, (a[0] - b[0]) ** 2)]
    while stack:
        i, j, cost = stack.pop()
        if cost >= best:
            continue
        if i == n - 1 and j == m - 1:
            best = cost
            continue
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            ni, nj = i + di, j + dj
            if ni < n and nj < m and abs(ni - nj) <= radius:
                stack.append((ni, nj, cost + (a[ni] - b[nj]) ** 2))
    return math.sqrt(best)


def windowed_max_min(x, radius):
    x = list(map(float, x))
    n = len(x)
    upper = [max(x[max(0, i - radius): min(n, i + radius + 1)]) for i in range(n)]
    lower = [min(x[max(0, i - radius): min(n, i + radius + 1)]) for i in range(n)]
    return upper, lower


def rand_index_by_pairs(a, b):
    agree = total = 0
    for i, j in itertools.combinations(range(len(a)), 2):
        total += 1
        agree += (a[i] == a[j]) == (b[i] == b[j])
    return agree / total


def density_by_rows(D, dc):
    n = len(D)
    return [sum(1 for j in range(n) if j != i and D[i][j] < dc) for i in range(n)]


def delta_by_scan(D, rho):
    """Nearest strictly-higher-ranked neighbour by explicit pairwise rank comparison."""
    n = len(D)

    def outranks(j, i):
        return rho[j] > rho[i] or (rho[j] == rho[i] and j < i)

    delta = [0.0] * n
    nn = [-1] * n
    top = None
    for i in range(n):
        higher = [j for j in range(n) if outranks(j, i)]
        if not higher:
            top = i
            continue
        best = min(D[i][j] for j in higher)
        delta[i] = best
        nn[i] = min(j for j in higher if D[i][j] == best)
    delta[top] = max(delta[i] for i in range(n) if i != top)
    return delta, nn, top


def levenshtein_recursive(s, t):
    from functools import lru_cache

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(go(i - 1, j) + 1, go(i, j - 1) + 1, go(i - 1, j - 1) + (s[i - 1] != t[j - 1]))

    return go(len(s), len(t))


def one_nn_loo_accuracy(X, labels):
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    correct = 0
    for i in range(len(X)):
        d = np.sqrt(((X - X[i]) ** 2).sum(axis=1))
        d[i] = np.inf
        correct += labels[int(np.argmin(d))] == labels[i]
    return correct / len(X)
