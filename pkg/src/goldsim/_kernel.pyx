# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-round simulation loop for one-dimensional box games.

Mirrors the pure-Python engine operation for operation (same expression
trees, same evaluation order) so both engines produce bit-identical traces.
Only plain IEEE arithmetic is used; do not enable -ffast-math.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

GAME_QUADRATIC = 0
GAME_KELLY = 1
GAME_LINEAR = 2


cdef inline void heap_push(long long* heap, Py_ssize_t* size, long long key) noexcept nogil:
    cdef Py_ssize_t child = size[0]
    cdef Py_ssize_t parent
    heap[child] = key
    size[0] += 1
    while child > 0:
        parent = (child - 1) >> 1
        if heap[parent] <= heap[child]:
            break
        heap[parent], heap[child] = heap[child], heap[parent]
        child = parent


cdef inline long long heap_pop(long long* heap, Py_ssize_t* size) noexcept nogil:
    cdef long long top = heap[0]
    cdef Py_ssize_t hole = 0
    cdef Py_ssize_t child
    size[0] -= 1
    heap[0] = heap[size[0]]
    while True:
        child = 2 * hole + 1
        if child >= size[0]:
            break
        if child + 1 < size[0] and heap[child + 1] < heap[child]:
            child += 1
        if heap[hole] <= heap[child]:
            break
        heap[hole], heap[child] = heap[child], heap[hole]
        hole = child
    return top


def simulate_rounds(
    int game_kind,
    double[::1] game_param,
    double entry_barrier,
    double[::1] lo,
    double[::1] hi,
    double[::1] center,
    double[::1] radius,
    double[::1] x0,
    double[:, ::1] directions,
    double[:, ::1] gamma,
    double[:, ::1] delta,
    long long[:, ::1] arr_offsets,
    long long[:, ::1] arr_origins,
    double[:, ::1] pivots,
    double[:, ::1] played,
    double[:, ::1] rewards,
    long long[:, ::1] heads,
    long long[:, ::1] pool_sizes,
    long long[:, ::1] empty_counts,
    double[::1] final_pivot,
    long long[::1] max_lag,
    long long[::1] max_pool,
):
    """Run T rounds of the policy for N one-dimensional players in place.

    ``arr_offsets``/``arr_origins`` give, per player, a CSR layout of reward
    origins keyed by arrival round (origins whose arrival exceeds T are
    omitted).  All output arrays must be preallocated with shape (N, T).
    Returns None; results land in the output arrays.
    """
    cdef Py_ssize_t n_players = x0.shape[0]
    cdef Py_ssize_t horizon = directions.shape[1]
    cdef Py_ssize_t i, j, ti, k, si
    cdef long long t, s, lag, empties
    cdef double x, d, u, w, xh, total, diff, scale, upd, y

    heap_arr = np.empty((n_players, horizon), dtype=np.int64)
    cdef long long[:, ::1] heap_mv = heap_arr
    sizes_arr = np.zeros(n_players, dtype=np.intp)
    cdef Py_ssize_t[::1] heap_sizes = sizes_arr

    xcur_arr = np.array(x0, dtype=np.float64, copy=True)
    cdef double[::1] xcur = xcur_arr
    empt_arr = np.zeros(n_players, dtype=np.int64)
    cdef long long[::1] empties_mv = empt_arr

    with nogil:
        for ti in range(horizon):
            t = ti + 1
            for i in range(n_players):
                x = xcur[i]
                pivots[i, ti] = x
                d = delta[i, ti]
                u = directions[i, ti]
                w = u - (x - center[i]) / radius[i]
                xh = x + d * w
                played[i, ti] = xh

            if game_kind == 1:
                total = entry_barrier
                for j in range(n_players):
                    total += played[j, ti]
                for i in range(n_players):
                    rewards[i, ti] = game_param[i] * (played[i, ti] / total) - played[i, ti]
            elif game_kind == 0:
                for i in range(n_players):
                    diff = played[i, ti] - game_param[i]
                    rewards[i, ti] = -(diff * diff)
            else:
                for i in range(n_players):
                    rewards[i, ti] = game_param[i] * played[i, ti]

            for i in range(n_players):
                for k in range(arr_offsets[i, ti], arr_offsets[i, ti + 1]):
                    heap_push(&heap_mv[i, 0], &heap_sizes[i], arr_origins[i, k])
                if heap_sizes[i] > 0:
                    s = heap_pop(&heap_mv[i, 0], &heap_sizes[i])
                    heads[i, ti] = s
                    lag = t - s
                    if lag > max_lag[i]:
                        max_lag[i] = lag
                    si = <Py_ssize_t> (s - 1)
                    scale = (1.0 / delta[i, si]) * rewards[i, si]
                    upd = scale * directions[i, si]
                    y = xcur[i] + gamma[i, ti] * upd
                    if y < lo[i]:
                        y = lo[i]
                    if y > hi[i]:
                        y = hi[i]
                    xcur[i] = y
                else:
                    heads[i, ti] = -1
                    empties_mv[i] += 1
                pool_sizes[i, ti] = <long long> heap_sizes[i]
                if <long long> heap_sizes[i] > max_pool[i]:
                    max_pool[i] = <long long> heap_sizes[i]
                empty_counts[i, ti] = empties_mv[i]

    for i in range(n_players):
        final_pivot[i] = xcur[i]
