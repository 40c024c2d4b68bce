"""Shared test helpers: independently coded oracles and generators.

The oracles here deliberately avoid the package's own numpy kernels: plain
Python floats, explicit loops, the documented evaluation order. They exist so
that engine results can be checked against a second implementation.
"""

from __future__ import annotations

import numpy as np


def oracle_hk_step(x: list, eps: float) -> list:
    """Plain synchronous averaging step (everyone fully open-minded), coded
    with Python floats and the documented accumulation order."""
    n = len(x)
    d = len(x[0])
    eps2 = eps * eps
    new = []
    for i in range(n):
        nb = []
        for j in range(n):
            acc = 0.0
            for k in range(d):
                diff = x[i][k] - x[j][k]
                acc = acc + diff * diff
            if acc <= eps2:
                nb.append(j)
        sums = list(x[nb[0]])
        for j in nb[1:]:
            for k in range(d):
                sums[k] = sums[k] + x[j][k]
        new.append([s / len(nb) for s in sums])
    return new


def oracle_mixed_step(x: list, eps: float, alpha: list) -> list:
    """General mixed step oracle under the same arithmetic contract."""
    n = len(x)
    d = len(x[0])
    eps2 = eps * eps
    new = []
    for i in range(n):
        nb = []
        for j in range(n):
            acc = 0.0
            for k in range(d):
                diff = x[i][k] - x[j][k]
                acc = acc + diff * diff
            if acc <= eps2:
                nb.append(j)
        a = alpha[i]
        if a == 1.0 or len(nb) == 1:
            new.append(list(x[i]))
            continue
        sums = list(x[nb[0]])
        for j in nb[1:]:
            for k in range(d):
                sums[k] = sums[k] + x[j][k]
        mean = [s / len(nb) for s in sums]
        if a == 0.0:
            new.append(mean)
        else:
            new.append([a * x[i][k] + (1.0 - a) * mean[k] for k in range(d)])
    return new


def random_opinions(rng: np.random.Generator, n: int, d: int, scale: float = 1.0) -> np.ndarray:
    return rng.uniform(-scale, scale, size=(n, d))


def random_alpha(rng: np.random.Generator, n: int, *, allow_extremes: bool = True) -> np.ndarray:
    """Stubbornness vector mixing exact 0s, exact 1s, and interior values."""
    a = rng.uniform(0.0, 1.0, size=n)
    if allow_extremes:
        mode = rng.integers(0, 4, size=n)
        a[mode == 0] = 0.0
        a[mode == 1] = 1.0
    return a


def all_graphs(n: int):
    """Yield every labeled graph on n vertices as an edge list."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for mask in range(1 << len(pairs)):
        yield [pairs[b] for b in range(len(pairs)) if (mask >> b) & 1]


def is_connected_edges(n: int, edges) -> bool:
    if n == 1:
        return True
    adj = {i: set() for i in range(n)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == n


def connected_graphs(n: int):
    """Every labeled connected graph on n vertices."""
    for edges in all_graphs(n):
        if is_connected_edges(n, edges):
            yield edges
