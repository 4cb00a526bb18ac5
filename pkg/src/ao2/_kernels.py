"""Compiled inner loops. Each keeps the operation order of its numpy twin."""
import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def nearest_l1(values, n, u, w):
    """Index and distance of the row of ``values[:n]`` closest to ``u``; first row wins ties."""
    best = -1
    best_d = np.inf
    d_obs = u.shape[0]
    for i in range(n):
        d = 0.0
        for j in range(d_obs):
            d += abs(values[i, j] - u[j]) * w[j]
        if d < best_d:
            best_d = d
            best = i
    return best, best_d
