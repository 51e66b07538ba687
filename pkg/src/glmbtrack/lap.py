"""Dense linear assignment by shortest augmenting paths (Jonker-Volgenant style).

Minimizes sum(cost[i, col[i]]) over injective row->column maps for a
rectangular cost matrix with n_rows <= n_cols.  Structurally forbidden
cells are encoded with a large finite sentinel (``BIG``); a returned
total at or above ``INFEASIBLE`` means some row was forced through a
forbidden cell and the problem has no allowed solution.

Deliberately plain scalar code: this solver is benchmarked head-to-head
against the sampling solver, so both run at the same implementation
technology and measured times reflect the algorithms.
"""

import numpy as np

BIG = 1e30
INFEASIBLE = 1e29
_INF = float("inf")


def solve(cost):
    """Return (total_cost, col_for_row) for a dense n x m cost matrix, n <= m.

    Successive shortest augmenting paths with column potentials; row
    potentials are implicit through complementary slackness on the
    current matching.
    """
    cost_rows = [[float(x) for x in row] for row in np.asarray(cost, dtype=float)]
    n_rows = len(cost_rows)
    n_cols = len(cost_rows[0]) if n_rows else 0
    if n_rows > n_cols:
        raise ValueError("need n_rows <= n_cols")

    v = [0.0] * n_cols                # column potentials
    row_of = [-1] * n_cols
    col_of = [-1] * n_rows

    for row in range(n_rows):
        base = cost_rows[row]
        dist = [base[j] - v[j] for j in range(n_cols)]
        parent = [-1] * n_cols        # previous column on the shortest path
        done = [False] * n_cols
        while True:
            # scan: cheapest unvisited column
            best, j_best = _INF, -1
            for j in range(n_cols):
                if not done[j] and dist[j] < best:
                    best, j_best = dist[j], j
            done[j_best] = True
            if row_of[j_best] == -1:
                sink = j_best
                break
            # relax through the row currently holding that column
            i = row_of[j_best]
            c_i = cost_rows[i]
            offset = dist[j_best] - (c_i[j_best] - v[j_best])
            for j in range(n_cols):
                if not done[j]:
                    slack = offset + c_i[j] - v[j]
                    if slack < dist[j]:
                        dist[j] = slack
                        parent[j] = j_best
        d_sink = dist[sink]
        for j in range(n_cols):
            if done[j]:
                v[j] -= d_sink - dist[j]
        # augment: shift each row on the path to the next column
        j = sink
        while True:
            p = parent[j]
            if p == -1:
                row_of[j] = row
                col_of[row] = j
                break
            row_of[j] = row_of[p]
            col_of[row_of[j]] = j
            j = p

    total = sum(cost_rows[i][col_of[i]] for i in range(n_rows))
    return total, np.array(col_of, dtype=int)
