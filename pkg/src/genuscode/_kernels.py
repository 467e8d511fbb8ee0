"""Compiled inner loops for syndrome decoding.

Hot-path kernels shared by the decoders: multi-source BFS over the CSR
adjacency, shortest-path readback, and two exact minimum-weight perfect
matchers (a bitmask DP for small defect sets, a dense primal-dual
blossom for the rest).  Everything works on plain integer arrays so the
callers own all id translation.
"""

import numpy as np
from numba import njit

_BIG = np.int64(1) << np.int64(60)


@njit(cache=True)
def bfs_dists(indptr, nbr, sources, V):
    """Distance row per source over the CSR graph; -1 marks unreachable."""
    k = sources.shape[0]
    dist = np.full((k, V), -1, dtype=np.int32)
    q = np.empty(V, dtype=np.int64)
    for s in range(k):
        head = 0
        tail = 0
        q[tail] = sources[s]
        tail += 1
        dist[s, sources[s]] = 0
        while head < tail:
            u = q[head]
            head += 1
            du = dist[s, u]
            for ii in range(indptr[u], indptr[u + 1]):
                v = nbr[ii]
                if dist[s, v] < 0:
                    dist[s, v] = du + 1
                    q[tail] = v
                    tail += 1
    return dist


@njit(cache=True)
def walk_path(indptr, nbr, via, dist_row, goal):
    """Edge positions of a shortest path from the dist_row origin to goal.

    Descends from goal, always taking the first neighbor (CSR rows are
    sorted by edge id) one step closer, so ties break toward smaller
    edge ids deterministically.
    """
    steps = dist_row[goal]
    out = np.empty(max(steps, 0), dtype=np.int64)
    x = goal
    d = steps
    idx = 0
    while d > 0:
        for ii in range(indptr[x], indptr[x + 1]):
            w = nbr[ii]
            if dist_row[w] == d - 1:
                out[idx] = via[ii]
                idx += 1
                x = w
                d -= 1
                break
    return out


@njit(cache=True)
def match_dp(n, D):
    """Exact minimum-weight perfect matching by subset DP; use n <= 14."""
    full = 1 << n
    f = np.full(full, _BIG, dtype=np.int64)
    choice = np.full(full, -1, dtype=np.int32)
    f[0] = 0
    for S in range(full):
        if f[S] >= _BIG:
            continue
        i = 0
        while i < n and (S >> i) & 1:
            i += 1
        if i >= n:
            continue
        base = S | (1 << i)
        for j in range(i + 1, n):
            if (S >> j) & 1:
                continue
            S2 = base | (1 << j)
            w = f[S] + D[i, j]
            if w < f[S2]:
                f[S2] = w
                choice[S2] = i * 64 + j
    pairs = np.empty((n // 2, 2), dtype=np.int64)
    S = full - 1
    t = 0
    while S:
        c = choice[S]
        i = c // 64
        j = c % 64
        pairs[t, 0] = i
        pairs[t, 1] = j
        t += 1
        S ^= (1 << i) | (1 << j)
    return f[full - 1], pairs


@njit(cache=True)
def blossom(n, W):
    """Dense maximum-weight matching, primal-dual with blossom shrinking.

    W is (n+1, n+1) int64, 1-indexed, symmetric, zero diagonal; zero
    weight means no edge.  Returns the 1-based match array (0 = single).
    Feeding it OFFSET - distance with a large OFFSET yields the exact
    minimum-weight perfect matching.  O(n^3)-ish; fine to a few hundred.

    Contracted blossoms get ids above n; st maps every node to the
    blossom currently containing it, lab holds the duals, and flower
    rows store each blossom's odd alternating cycle.
    """
    N = 2 * n + 3
    gu = np.zeros((N, N), dtype=np.int64)
    gv = np.zeros((N, N), dtype=np.int64)
    gw = np.zeros((N, N), dtype=np.int64)
    for u in range(1, n + 1):
        for v in range(1, n + 1):
            gu[u, v] = u
            gv[u, v] = v
            if u != v:
                gw[u, v] = W[u, v]
    lab = np.zeros(N, dtype=np.int64)
    match = np.zeros(N, dtype=np.int64)
    slack = np.zeros(N, dtype=np.int64)
    st = np.zeros(N, dtype=np.int64)
    pa = np.zeros(N, dtype=np.int64)
    S = np.full(N, -1, dtype=np.int64)
    vis = np.zeros(N, dtype=np.int64)
    flower = np.zeros((N, N), dtype=np.int64)
    flower_len = np.zeros(N, dtype=np.int64)
    flower_from = np.zeros((N, n + 1), dtype=np.int64)
    q = np.zeros(N * N, dtype=np.int64)
    stk = np.zeros(N * N, dtype=np.int64)
    mstk = np.zeros((N * N, 2), dtype=np.int64)
    scratch = np.zeros(N, dtype=np.int64)
    # mutable scalars: 0 = n_x, 1 = lca timestamp, 2 = q head, 3 = q tail
    state = np.zeros(4, dtype=np.int64)
    state[0] = n

    def e_delta(u, v):
        return lab[gu[u, v]] + lab[gv[u, v]] - 2 * gw[u, v]

    def update_slack(u, x):
        if slack[x] == 0 or e_delta(u, x) < e_delta(slack[x], x):
            slack[x] = u

    def set_slack(x):
        slack[x] = 0
        for u in range(1, n + 1):
            if gw[u, x] > 0 and st[u] != x and S[st[u]] == 0:
                update_slack(u, x)

    def q_push(x):
        top = 0
        stk[top] = x
        top += 1
        while top > 0:
            top -= 1
            y = stk[top]
            if y <= n:
                q[state[3]] = y
                state[3] += 1
            else:
                for i in range(flower_len[y]):
                    stk[top] = flower[y, i]
                    top += 1

    def set_st(x, b):
        top = 0
        stk[top] = x
        top += 1
        while top > 0:
            top -= 1
            y = stk[top]
            st[y] = b
            if y > n:
                for i in range(flower_len[y]):
                    stk[top] = flower[y, i]
                    top += 1

    def get_pr(b, xr):
        pr = 0
        for i in range(flower_len[b]):
            if flower[b, i] == xr:
                pr = i
                break
        if pr % 2 == 1:
            lo = 1
            hi = flower_len[b] - 1
            while lo < hi:
                tmp = flower[b, lo]
                flower[b, lo] = flower[b, hi]
                flower[b, hi] = tmp
                lo += 1
                hi -= 1
            return flower_len[b] - pr
        return pr

    def set_match(u0, v0):
        top = 0
        mstk[top, 0] = u0
        mstk[top, 1] = v0
        top += 1
        while top > 0:
            top -= 1
            u = mstk[top, 0]
            v = mstk[top, 1]
            match[u] = gv[u, v]
            if u > n:
                xr = flower_from[u, gu[u, v]]
                pr = get_pr(u, xr)
                for i in range(pr):
                    mstk[top, 0] = flower[u, i]
                    mstk[top, 1] = flower[u, i ^ 1]
                    top += 1
                mstk[top, 0] = xr
                mstk[top, 1] = v
                top += 1
                L = flower_len[u]
                for i in range(L):
                    scratch[i] = flower[u, (pr + i) % L]
                for i in range(L):
                    flower[u, i] = scratch[i]

    def augment(u0, v0):
        u = u0
        v = v0
        while True:
            xnv = st[match[u]]
            set_match(u, v)
            if xnv == 0:
                return
            set_match(xnv, st[pa[xnv]])
            u = st[pa[xnv]]
            v = xnv

    def get_lca(u0, v0):
        state[1] += 1
        u = u0
        v = v0
        while u != 0 or v != 0:
            if u != 0:
                if vis[u] == state[1]:
                    return u
                vis[u] = state[1]
                u = st[match[u]]
                if u != 0:
                    u = st[pa[u]]
            tmp = u
            u = v
            v = tmp
        return 0

    def add_blossom(u, lca, v):
        b = n + 1
        while b <= state[0] and st[b] != 0:
            b += 1
        if b > state[0]:
            state[0] += 1
        lab[b] = 0
        S[b] = 0
        match[b] = match[lca]
        flower_len[b] = 0
        flower[b, 0] = lca
        flower_len[b] = 1
        x = u
        while x != lca:
            flower[b, flower_len[b]] = x
            flower_len[b] += 1
            y = st[match[x]]
            flower[b, flower_len[b]] = y
            flower_len[b] += 1
            q_push(y)
            x = st[pa[y]]
        lo = 1
        hi = flower_len[b] - 1
        while lo < hi:
            tmp = flower[b, lo]
            flower[b, lo] = flower[b, hi]
            flower[b, hi] = tmp
            lo += 1
            hi -= 1
        x = v
        while x != lca:
            flower[b, flower_len[b]] = x
            flower_len[b] += 1
            y = st[match[x]]
            flower[b, flower_len[b]] = y
            flower_len[b] += 1
            q_push(y)
            x = st[pa[y]]
        set_st(b, b)
        for x in range(1, state[0] + 1):
            gw[b, x] = 0
            gw[x, b] = 0
        for x in range(1, n + 1):
            flower_from[b, x] = 0
        for ii in range(flower_len[b]):
            xs = flower[b, ii]
            for x in range(1, state[0] + 1):
                if gw[b, x] == 0 or e_delta(xs, x) < e_delta(b, x):
                    gu[b, x] = gu[xs, x]
                    gv[b, x] = gv[xs, x]
                    gw[b, x] = gw[xs, x]
                    gu[x, b] = gu[x, xs]
                    gv[x, b] = gv[x, xs]
                    gw[x, b] = gw[x, xs]
            for x in range(1, n + 1):
                if flower_from[xs, x] != 0:
                    flower_from[b, x] = xs
        set_slack(b)

    def expand_blossom(b):
        for i in range(flower_len[b]):
            set_st(flower[b, i], flower[b, i])
        xr = flower_from[b, gu[b, pa[b]]]
        pr = get_pr(b, xr)
        i = 0
        while i < pr:
            xs = flower[b, i]
            xns = flower[b, i + 1]
            pa[xs] = gu[xns, xs]
            S[xs] = 1
            S[xns] = 0
            slack[xs] = 0
            set_slack(xns)
            q_push(xns)
            i += 2
        S[xr] = 1
        pa[xr] = pa[b]
        for i in range(pr + 1, flower_len[b]):
            xs = flower[b, i]
            S[xs] = -1
            set_slack(xs)
        st[b] = 0

    def on_found_edge(eu, ev):
        u = st[eu]
        v = st[ev]
        if S[v] == -1:
            pa[v] = eu
            S[v] = 1
            nu = st[match[v]]
            slack[v] = 0
            slack[nu] = 0
            S[nu] = 0
            q_push(nu)
        elif S[v] == 0:
            lca = get_lca(u, v)
            if lca == 0:
                augment(u, v)
                augment(v, u)
                return True
            else:
                add_blossom(u, lca, v)
        return False

    def matching():
        for i in range(state[0] + 1):
            S[i] = -1
            slack[i] = 0
        state[2] = 0
        state[3] = 0
        for x in range(1, state[0] + 1):
            if st[x] == x and match[x] == 0:
                pa[x] = 0
                S[x] = 0
                q_push(x)
        if state[3] == 0:
            return False
        while True:
            while state[2] < state[3]:
                u = q[state[2]]
                state[2] += 1
                if S[st[u]] == 1:
                    continue
                for v in range(1, n + 1):
                    if gw[u, v] > 0 and st[u] != st[v]:
                        if e_delta(u, v) == 0:
                            if on_found_edge(u, v):
                                return True
                        else:
                            update_slack(u, st[v])
            d = _BIG
            for b in range(n + 1, state[0] + 1):
                if st[b] == b and S[b] == 1:
                    half = lab[b] // 2
                    if half < d:
                        d = half
            for x in range(1, state[0] + 1):
                if st[x] == x and slack[x] != 0:
                    if S[x] == -1:
                        dd = e_delta(slack[x], x)
                        if dd < d:
                            d = dd
                    elif S[x] == 0:
                        dd = e_delta(slack[x], x) // 2
                        if dd < d:
                            d = dd
            for u in range(1, n + 1):
                if S[st[u]] == 0:
                    if lab[u] <= d:
                        return False
                    lab[u] -= d
                elif S[st[u]] == 1:
                    lab[u] += d
            for b in range(n + 1, state[0] + 1):
                if st[b] == b:
                    if S[b] == 0:
                        lab[b] += 2 * d
                    elif S[b] == 1:
                        lab[b] -= 2 * d
            state[2] = 0
            state[3] = 0
            for x in range(1, state[0] + 1):
                if (
                    st[x] == x
                    and slack[x] != 0
                    and st[slack[x]] != x
                    and e_delta(slack[x], x) == 0
                ):
                    if on_found_edge(slack[x], x):
                        return True
            for b in range(n + 1, state[0] + 1):
                if st[b] == b and S[b] == 1 and lab[b] == 0:
                    expand_blossom(b)
        return False

    for u in range(n + 1):
        st[u] = u
    w_max = np.int64(0)
    for u in range(1, n + 1):
        for v in range(1, n + 1):
            if u == v:
                flower_from[u, v] = u
            if gw[u, v] > w_max:
                w_max = gw[u, v]
    for u in range(1, n + 1):
        lab[u] = w_max
    while matching():
        pass
    return match[1 : n + 1].copy()
