"""Hot numeric kernels with numba-compiled and pure-numpy implementations.

Each kernel exists twice: a loop-based version compiled with ``@njit`` and a
vectorized (or plain-Python) numpy fallback. Both produce bit-identical
results. The public names bind to the numba path when it is available and the
``CRASHSYNTH_NO_NUMBA`` environment variable is unset; otherwise they bind to
the numpy path. ``benchmarks/bench_kernels.py`` times the two side by side.
"""

import os

import numpy as np

_FLAG = os.environ.get("CRASHSYNTH_NO_NUMBA", "").strip().lower()
NUMBA_REQUESTED = _FLAG not in ("1", "true", "yes", "on")

if NUMBA_REQUESTED:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but be safe
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False

if not NUMBA_ENABLED:
    def njit(*args, **kwargs):
        # identity decorator so the loop implementations stay importable
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


# ---------------------------------------------------------------------------
# depth-map back-projection
# ---------------------------------------------------------------------------

def _backproject_masked_loops(depth, mask, f_u, f_v, c_u, c_v, max_depth):
    h, w = depth.shape
    count = 0
    for i in range(h):
        for j in range(w):
            z = depth[i, j]
            if mask[i, j] and z > 0.0 and z <= max_depth:
                count += 1
    out = np.empty((count, 3), dtype=np.float64)
    k = 0
    for i in range(h):
        for j in range(w):
            z = depth[i, j]
            if mask[i, j] and z > 0.0 and z <= max_depth:
                out[k, 0] = (j - c_u) * z / f_u
                out[k, 1] = (i - c_v) * z / f_v
                out[k, 2] = z
                k += 1
    return out


def _backproject_masked_numpy(depth, mask, f_u, f_v, c_u, c_v, max_depth):
    keep = mask & (depth > 0.0) & (depth <= max_depth)
    ii, jj = np.nonzero(keep)  # row-major order, same as the loop version
    z = depth[ii, jj]
    out = np.empty((z.size, 3), dtype=np.float64)
    out[:, 0] = (jj - c_u) * z / f_u
    out[:, 1] = (ii - c_v) * z / f_v
    out[:, 2] = z
    return out


# ---------------------------------------------------------------------------
# IOU cost matrix for box association
# ---------------------------------------------------------------------------

def _iou_matrix_loops(boxes_a, boxes_b):
    n = boxes_a.shape[0]
    m = boxes_b.shape[0]
    out = np.zeros((n, m), dtype=np.float64)
    for i in range(n):
        au0, av0, au1, av1 = boxes_a[i, 0], boxes_a[i, 1], boxes_a[i, 2], boxes_a[i, 3]
        area_a = (au1 - au0) * (av1 - av0)
        for j in range(m):
            bu0, bv0, bu1, bv1 = boxes_b[j, 0], boxes_b[j, 1], boxes_b[j, 2], boxes_b[j, 3]
            iw = min(au1, bu1) - max(au0, bu0)
            if iw <= 0.0:
                continue
            ih = min(av1, bv1) - max(av0, bv0)
            if ih <= 0.0:
                continue
            inter = iw * ih
            area_b = (bu1 - bu0) * (bv1 - bv0)
            out[i, j] = inter / (area_a + area_b - inter)
    return out


def _iou_matrix_numpy(boxes_a, boxes_b):
    a = boxes_a[:, None, :]
    b = boxes_b[None, :, :]
    iw = np.minimum(a[..., 2], b[..., 2]) - np.maximum(a[..., 0], b[..., 0])
    ih = np.minimum(a[..., 3], b[..., 3]) - np.maximum(a[..., 1], b[..., 1])
    inter = np.where((iw > 0.0) & (ih > 0.0), iw * ih, 0.0)
    area_a = (a[..., 2] - a[..., 0]) * (a[..., 3] - a[..., 1])
    area_b = (b[..., 2] - b[..., 0]) * (b[..., 3] - b[..., 1])
    union = area_a + area_b - inter
    out = np.zeros(inter.shape, dtype=np.float64)
    np.divide(inter, union, out=out, where=inter > 0.0)
    return out


# ---------------------------------------------------------------------------
# minimum-cost assignment (shortest augmenting path with dual potentials)
# ---------------------------------------------------------------------------

def _assignment_duals_loops(cost):
    """Solve the square assignment problem, returning (row_to_col, u, v).

    ``u``/``v`` are optimal dual potentials: cost[i, j] - u[i] - v[j] >= 0
    with equality on every assigned pair. Classic O(n^3) formulation.
    """
    n = cost.shape[0]
    u = np.zeros(n + 1, dtype=np.float64)
    v = np.zeros(n + 1, dtype=np.float64)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=np.bool_)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = np.inf
            j1 = -1
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    row_to_col = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        row_to_col[p[j] - 1] = j - 1
    return row_to_col, u[1:], v[1:]


def _assignment_duals_numpy(cost):
    """Same algorithm with the inner column scan vectorized."""
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    cols = np.arange(1, n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = cols[~used[1:]]
            cur = cost[i0 - 1, free - 1] - u[i0] - v[free]
            better = cur < minv[free]
            upd = free[better]
            minv[upd] = cur[better]
            way[upd] = j0
            k = int(np.argmin(minv[free]))
            j1 = int(free[k])
            delta = minv[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    row_to_col = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        row_to_col[p[j] - 1] = j - 1
    return row_to_col, u[1:], v[1:]


def _make_lexmin(assignment_duals):
    def lexmin(cost):
        """Minimum-cost assignment on a square matrix; among equal-cost optima
        pick the one whose (row, column) pair list is lexicographically lowest.

        Candidate columns are screened with the dual lower bound: forcing pair
        (r, c) costs at least optimum + reduced(r, c), so only zero-reduced
        candidates ever need a sub-solve.
        """
        n = cost.shape[0]
        if n == 0:
            return np.empty(0, dtype=np.int64)
        row_to_col, u, v = assignment_duals(cost)
        total = 0.0
        for r in range(n):
            total += cost[r, row_to_col[r]]
        tol = 1e-9 * (1.0 + abs(total))

        result = np.empty(n, dtype=np.int64)
        avail = np.ones(n, dtype=np.bool_)
        # witness optimal completion for rows >= r over the available columns
        witness = row_to_col.copy()
        budget = total
        for r in range(n):
            chosen = witness[r]
            for c in range(n):
                if c == witness[r]:
                    break  # reached the witness column: keep it
                if not avail[c]:
                    continue
                if cost[r, c] - u[r] - v[c] > tol:
                    continue
                # candidate survives the dual screen: verify by sub-solve
                rows = np.empty(n - r - 1, dtype=np.int64)
                k = 0
                for rr in range(r + 1, n):
                    rows[k] = rr
                    k += 1
                cols = np.empty(n - r - 1, dtype=np.int64)
                k = 0
                for cc in range(n):
                    if avail[cc] and cc != c:
                        cols[k] = cc
                        k += 1
                if rows.size == 0:
                    if cost[r, c] <= budget + tol:
                        chosen = c
                        break
                    continue
                sub = np.empty((rows.size, cols.size), dtype=np.float64)
                for a in range(rows.size):
                    for b in range(cols.size):
                        sub[a, b] = cost[rows[a], cols[b]]
                sub_assign, sub_u, sub_v = assignment_duals(sub)
                rest_total = 0.0
                for a in range(rows.size):
                    rest_total += sub[a, sub_assign[a]]
                if cost[r, c] + rest_total <= budget + tol:
                    chosen = c
                    # adopt new witness, duals for the remaining subproblem
                    for a in range(rows.size):
                        witness[rows[a]] = cols[sub_assign[a]]
                        u[rows[a]] = sub_u[a]
                    for b in range(cols.size):
                        v[cols[b]] = sub_v[b]
                    break
            result[r] = chosen
            avail[chosen] = False
            budget -= cost[r, chosen]
        return result

    return lexmin


if NUMBA_ENABLED:
    _backproject_masked_jit = njit(cache=True)(_backproject_masked_loops)
    _iou_matrix_jit = njit(cache=True)(_iou_matrix_loops)
    _assignment_duals_jit = njit(cache=True)(_assignment_duals_loops)
    _lexmin_assignment_jit = njit(cache=True)(_make_lexmin(_assignment_duals_jit))

_lexmin_assignment_numpy = _make_lexmin(_assignment_duals_numpy)


# ---------------------------------------------------------------------------
# DBSCAN labels (euclidean, brute-force neighborhoods)
# ---------------------------------------------------------------------------

def _dbscan_labels_loops(pts, eps, min_pts):
    n = pts.shape[0]
    eps2 = eps * eps
    labels = np.full(n, -1, dtype=np.int64)
    core = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        cnt = 0
        for j in range(n):
            dx = pts[i, 0] - pts[j, 0]
            dy = pts[i, 1] - pts[j, 1]
            if dx * dx + dy * dy <= eps2:
                cnt += 1
        core[i] = cnt >= min_pts
    queue = np.empty(n, dtype=np.int64)
    cid = 0
    for i in range(n):
        if not core[i] or labels[i] != -1:
            continue
        labels[i] = cid
        queue[0] = i
        head = 0
        tail = 1
        while head < tail:
            q = queue[head]
            head += 1
            if not core[q]:
                continue
            for j in range(n):
                if labels[j] == -1:
                    dx = pts[q, 0] - pts[j, 0]
                    dy = pts[q, 1] - pts[j, 1]
                    if dx * dx + dy * dy <= eps2:
                        labels[j] = cid
                        queue[tail] = j
                        tail += 1
        cid += 1
    return labels


def _dbscan_labels_numpy(pts, eps, min_pts):
    n = pts.shape[0]
    eps2 = eps * eps
    labels = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels
    core = np.zeros(n, dtype=bool)
    chunk = max(1, 2_000_000 // max(n, 1))
    for s in range(0, n, chunk):
        d2 = ((pts[s:s + chunk, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        core[s:s + chunk] = (d2 <= eps2).sum(axis=1) >= min_pts
    queue = np.empty(n, dtype=np.int64)
    cid = 0
    for i in range(n):
        if not core[i] or labels[i] != -1:
            continue
        labels[i] = cid
        queue[0] = i
        head, tail = 0, 1
        while head < tail:
            q = queue[head]
            head += 1
            if not core[q]:
                continue
            d2 = ((pts - pts[q]) ** 2).sum(axis=1)
            hits = np.nonzero((labels == -1) & (d2 <= eps2))[0]
            labels[hits] = cid
            queue[tail:tail + hits.size] = hits
            tail += hits.size
        cid += 1
    return labels


# ---------------------------------------------------------------------------
# directed Hausdorff distance
# ---------------------------------------------------------------------------

def _directed_hausdorff_loops(a, b):
    best = 0.0
    for i in range(a.shape[0]):
        dmin = np.inf
        for j in range(b.shape[0]):
            dx = a[i, 0] - b[j, 0]
            dy = a[i, 1] - b[j, 1]
            d2 = dx * dx + dy * dy
            if d2 < dmin:
                dmin = d2
                if dmin <= best:
                    break  # this point cannot raise the max
        if dmin > best:
            best = dmin
    return np.sqrt(best)


def _directed_hausdorff_numpy(a, b):
    best = 0.0
    chunk = max(1, 2_000_000 // max(b.shape[0], 1))
    for s in range(0, a.shape[0], chunk):
        d2 = ((a[s:s + chunk, None, :] - b[None, :, :]) ** 2).sum(axis=2)
        m = d2.min(axis=1).max()
        if m > best:
            best = m
    return float(np.sqrt(best))


if NUMBA_ENABLED:
    _dbscan_labels_jit = njit(cache=True)(_dbscan_labels_loops)
    _directed_hausdorff_jit = njit(cache=True)(_directed_hausdorff_loops)

    backproject_masked = _backproject_masked_jit
    iou_matrix = _iou_matrix_jit
    lexmin_assignment = _lexmin_assignment_jit
    dbscan_labels = _dbscan_labels_jit
    directed_hausdorff_points = _directed_hausdorff_jit
else:
    backproject_masked = _backproject_masked_numpy
    iou_matrix = _iou_matrix_numpy
    lexmin_assignment = _lexmin_assignment_numpy
    dbscan_labels = _dbscan_labels_numpy
    directed_hausdorff_points = _directed_hausdorff_numpy


def implementations():
    """Both kernel families, keyed by name: used by tests and the benchmark."""
    numpy_impls = {
        "backproject_masked": _backproject_masked_numpy,
        "iou_matrix": _iou_matrix_numpy,
        "lexmin_assignment": _lexmin_assignment_numpy,
        "dbscan_labels": _dbscan_labels_numpy,
        "directed_hausdorff": _directed_hausdorff_numpy,
    }
    if not NUMBA_ENABLED:
        return {"numpy": numpy_impls}
    return {
        "numpy": numpy_impls,
        "numba": {
            "backproject_masked": _backproject_masked_jit,
            "iou_matrix": _iou_matrix_jit,
            "lexmin_assignment": _lexmin_assignment_jit,
            "dbscan_labels": _dbscan_labels_jit,
            "directed_hausdorff": _directed_hausdorff_jit,
        },
    }
