"""Hot numeric kernels, each in a numba @njit build and a vectorized
numpy build.

The loop-style source compiles under numba; the ``*_np`` twin does the
same computation with array operations.  ``_backend`` selects which one
the package uses; both stay importable so the benchmark and the tests
can compare them.  No fastmath anywhere: reduction order is part of the
contract.
"""

import math

import numpy as np

from ._backend import HAVE_NUMBA, USING_NUMBA, jit

MAXBIT = 30
_SOBOL_SCALE = 2.0 ** -MAXBIT


# ---------------------------------------------------------------- Sobol

def _sobol_fill_loop(V, masks, n, skip):
    # V: (d, MAXBIT+1) int64 direction numbers scaled by 2^MAXBIT,
    # column 0 unused.  Gray-code construction: internal point i flips
    # bit (trailing_zeros(i) + 1) of the running XOR state.
    d = V.shape[0]
    out = np.empty((n, d))
    x = np.zeros(d, dtype=np.int64)
    e = 0
    if skip == 0:
        for j in range(d):
            out[0, j] = (x[j] ^ masks[j]) * _SOBOL_SCALE
        e = 1
    i = 1
    while e < n:
        c = 1
        v = i - 1
        while v & 1:
            v >>= 1
            c += 1
        for j in range(d):
            x[j] = x[j] ^ V[j, c]
            out[e, j] = (x[j] ^ masks[j]) * _SOBOL_SCALE
        e += 1
        i += 1
    return out


def _sobol_fill_np(V, masks, n, skip):
    d = V.shape[0]
    start = 0 if skip == 0 else 1
    m = start + n
    vals = np.zeros((m, d), dtype=np.int64)
    if m > 1:
        ks = np.arange(1, m, dtype=np.int64)
        low = ks & -ks
        tz = np.log2(low.astype(np.float64)).astype(np.int64)
        vals[1:] = V[:, tz + 1].T
        np.bitwise_xor.accumulate(vals, axis=0, out=vals)
    return (vals[start:] ^ masks[np.newaxis, :]).astype(np.float64) * _SOBOL_SCALE


# ------------------------------------------------- expression programs

# opcodes for flattened expression trees (children precede parents)
OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_NEG = 5
OP_ABS = 6
OP_SINPI = 7
OP_COSPI = 8
OP_SQ = 9
OP_TANH = 10


def _rog_eval_loop(ops, a1, a2, cval, vidx, X):
    n = X.shape[0]
    k = ops.shape[0]
    out = np.empty(n)
    buf = np.empty(k)
    for p in range(n):
        for t in range(k):
            o = ops[t]
            if o == 0:
                buf[t] = cval[t]
            elif o == 1:
                buf[t] = X[p, vidx[t]]
            elif o == 2:
                buf[t] = buf[a1[t]] + buf[a2[t]]
            elif o == 3:
                buf[t] = buf[a1[t]] - buf[a2[t]]
            elif o == 4:
                buf[t] = buf[a1[t]] * buf[a2[t]]
            elif o == 5:
                buf[t] = -buf[a1[t]]
            elif o == 6:
                buf[t] = abs(buf[a1[t]])
            elif o == 7:
                buf[t] = math.sin(math.pi * buf[a1[t]])
            elif o == 8:
                buf[t] = math.cos(math.pi * buf[a1[t]])
            elif o == 9:
                buf[t] = buf[a1[t]] * buf[a1[t]]
            else:
                buf[t] = math.tanh(buf[a1[t]])
        out[p] = buf[k - 1]
    return out


def _rog_eval_np(ops, a1, a2, cval, vidx, X):
    n = X.shape[0]
    k = ops.shape[0]
    buf = np.empty((k, n))
    for t in range(k):
        o = ops[t]
        if o == 0:
            buf[t] = cval[t]
        elif o == 1:
            buf[t] = X[:, vidx[t]]
        elif o == 2:
            buf[t] = buf[a1[t]] + buf[a2[t]]
        elif o == 3:
            buf[t] = buf[a1[t]] - buf[a2[t]]
        elif o == 4:
            buf[t] = buf[a1[t]] * buf[a2[t]]
        elif o == 5:
            buf[t] = -buf[a1[t]]
        elif o == 6:
            buf[t] = np.abs(buf[a1[t]])
        elif o == 7:
            buf[t] = np.sin(np.pi * buf[a1[t]])
        elif o == 8:
            buf[t] = np.cos(np.pi * buf[a1[t]])
        elif o == 9:
            buf[t] = buf[a1[t]] * buf[a1[t]]
        else:
            buf[t] = np.tanh(buf[a1[t]])
    return buf[k - 1].copy()


# ---------------------------------------------------- sample geometry

def _nn_tour_loop(X):
    # greedy nearest-neighbor tour from point 0; squared distances,
    # ties to the lowest index
    n = X.shape[0]
    d = X.shape[1]
    order = np.empty(n, dtype=np.int64)
    used = np.zeros(n, dtype=np.int64)
    cur = 0
    order[0] = 0
    used[0] = 1
    for t in range(1, n):
        best = -1
        bd = np.inf
        for j in range(n):
            if used[j] == 1:
                continue
            d2 = 0.0
            for m in range(d):
                diff = X[cur, m] - X[j, m]
                d2 += diff * diff
            if d2 < bd:
                bd = d2
                best = j
        order[t] = best
        used[best] = 1
        cur = best
    return order


def _nn_tour_np(X):
    n = X.shape[0]
    order = np.empty(n, dtype=np.int64)
    remaining = np.ones(n, dtype=bool)
    cur = 0
    order[0] = 0
    remaining[0] = False
    for t in range(1, n):
        d2 = np.sum((X - X[cur]) ** 2, axis=1)
        d2[~remaining] = np.inf
        cur = int(np.argmin(d2))
        order[t] = cur
        remaining[cur] = False
    return order


def _nearest_better_loop(X, y):
    # nn_dist: distance to the closest other point; nb_dist: distance to
    # the closest strictly better point, falling back to nn_dist when no
    # point is better
    n = X.shape[0]
    d = X.shape[1]
    nn = np.empty(n)
    nb = np.empty(n)
    for i in range(n):
        bn = np.inf
        bb = np.inf
        for j in range(n):
            if j == i:
                continue
            d2 = 0.0
            for m in range(d):
                diff = X[i, m] - X[j, m]
                d2 += diff * diff
            if d2 < bn:
                bn = d2
            if y[j] < y[i] and d2 < bb:
                bb = d2
        nn[i] = math.sqrt(bn)
        nb[i] = math.sqrt(bb) if bb < np.inf else nn[i]
    return nn, nb


def _nearest_better_np(X, y):
    diff = X[:, np.newaxis, :] - X[np.newaxis, :, :]
    D = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(D, np.inf)
    nn = D.min(axis=1)
    better = y[np.newaxis, :] < y[:, np.newaxis]
    Db = np.where(better, D, np.inf)
    nb = Db.min(axis=1)
    nb = np.where(np.isinf(nb), nn, nb)
    return nn, nb


def _mean_pairwise_loop(X):
    n = X.shape[0]
    d = X.shape[1]
    if n < 2:
        return 0.0
    acc = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d2 = 0.0
            for m in range(d):
                diff = X[i, m] - X[j, m]
                d2 += diff * diff
            acc += math.sqrt(d2)
    return acc / (n * (n - 1) / 2.0)


def _mean_pairwise_np(X):
    n = X.shape[0]
    if n < 2:
        return 0.0
    diff = X[:, np.newaxis, :] - X[np.newaxis, :, :]
    D = np.sqrt(np.sum(diff * diff, axis=2))
    iu = np.triu_indices(n, k=1)
    return float(D[iu].mean())


# ------------------------------------------------------- forest splits

def _split_scan_loop(xs, Y, min_leaf):
    # xs ascending, Y rows in the same order.  Returns (gain, pos) for
    # the best boundary: left rows [0:pos), right rows [pos:n).  gain is
    # the drop in summed per-output SSE; pos == -1 when no legal split.
    n, q = Y.shape
    tot = np.zeros(q)
    tot2 = np.zeros(q)
    for i in range(n):
        for k in range(q):
            v = Y[i, k]
            tot[k] += v
            tot2[k] += v * v
    sse_parent = 0.0
    for k in range(q):
        sse_parent += tot2[k] - tot[k] * tot[k] / n
    left = np.zeros(q)
    left2 = np.zeros(q)
    best_gain = -1.0
    best_pos = -1
    for pos in range(1, n):
        for k in range(q):
            v = Y[pos - 1, k]
            left[k] += v
            left2[k] += v * v
        if pos < min_leaf:
            continue
        if n - pos < min_leaf:
            break
        if xs[pos] <= xs[pos - 1]:
            continue
        sse = 0.0
        nl = pos
        nr = n - pos
        for k in range(q):
            rs = tot[k] - left[k]
            rs2 = tot2[k] - left2[k]
            sse += left2[k] - left[k] * left[k] / nl
            sse += rs2 - rs * rs / nr
        gain = sse_parent - sse
        if gain > best_gain:
            best_gain = gain
            best_pos = pos
    return best_gain, best_pos


def _split_scan_np(xs, Y, min_leaf):
    n, q = Y.shape
    tot = Y.sum(axis=0)
    tot2 = (Y * Y).sum(axis=0)
    sse_parent = float((tot2 - tot * tot / n).sum())
    cs = np.cumsum(Y, axis=0)
    cs2 = np.cumsum(Y * Y, axis=0)
    pos = np.arange(1, n)
    nl = pos.astype(np.float64)
    nr = (n - pos).astype(np.float64)
    left = cs[:-1]
    left2 = cs2[:-1]
    right = tot[np.newaxis, :] - left
    right2 = tot2[np.newaxis, :] - left2
    sse = (left2 - left * left / nl[:, np.newaxis]).sum(axis=1)
    sse += (right2 - right * right / nr[:, np.newaxis]).sum(axis=1)
    gain = sse_parent - sse
    legal = (pos >= min_leaf) & (n - pos >= min_leaf) & (xs[1:] > xs[:-1])
    if not legal.any():
        return -1.0, -1
    gain = np.where(legal, gain, -np.inf)
    b = int(np.argmax(gain))
    return float(gain[b]), int(pos[b])


def _tree_predict_loop(feat, thr, left, right, values, X):
    n = X.shape[0]
    q = values.shape[1]
    out = np.empty((n, q))
    for i in range(n):
        node = 0
        while feat[node] >= 0:
            if X[i, feat[node]] <= thr[node]:
                node = left[node]
            else:
                node = right[node]
        for k in range(q):
            out[i, k] = values[node, k]
    return out


def _tree_predict_np(feat, thr, left, right, values, X):
    n = X.shape[0]
    cur = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    while True:
        f = feat[cur]
        active = f >= 0
        if not active.any():
            break
        r = rows[active]
        c = cur[active]
        goleft = X[r, f[active]] <= thr[c]
        cur[active] = np.where(goleft, left[c], right[c])
    return values[cur].copy()


# ----------------------------------------------------------- dispatch

if HAVE_NUMBA:
    sobol_fill_nb = jit(_sobol_fill_loop)
    rog_eval_nb = jit(_rog_eval_loop)
    nn_tour_nb = jit(_nn_tour_loop)
    nearest_better_nb = jit(_nearest_better_loop)
    mean_pairwise_nb = jit(_mean_pairwise_loop)
    split_scan_nb = jit(_split_scan_loop)
    tree_predict_nb = jit(_tree_predict_loop)
else:
    sobol_fill_nb = None
    rog_eval_nb = None
    nn_tour_nb = None
    nearest_better_nb = None
    mean_pairwise_nb = None
    split_scan_nb = None
    tree_predict_nb = None

sobol_fill_np = _sobol_fill_np
rog_eval_np = _rog_eval_np
nn_tour_np = _nn_tour_np
nearest_better_np = _nearest_better_np
mean_pairwise_np = _mean_pairwise_np
split_scan_np = _split_scan_np
tree_predict_np = _tree_predict_np

if USING_NUMBA:
    sobol_fill = sobol_fill_nb
    rog_eval = rog_eval_nb
    nn_tour = nn_tour_nb
    nearest_better = nearest_better_nb
    mean_pairwise = mean_pairwise_nb
    split_scan = split_scan_nb
    tree_predict = tree_predict_nb
else:
    sobol_fill = sobol_fill_np
    rog_eval = rog_eval_np
    nn_tour = nn_tour_np
    nearest_better = nearest_better_np
    mean_pairwise = mean_pairwise_np
    split_scan = split_scan_np
    tree_predict = tree_predict_np
