"""Inner loops of the generators and searches.

Every function here takes and returns plain numpy arrays/ints so it can be
compiled by numba or run as ordinary Python (see ``_jit``).  Status codes
are returned instead of raising; the public wrappers translate them.
"""
import numpy as np

from ._jit import jit, randbelow, seed, uniform

NO_CUTOFF = -1


@jit
def _below_cutoff(d, k_c):
    return k_c < 0 or d < k_c


@jit
def _in(arr, n, x):
    for t in range(n):
        if arr[t] == x:
            return True
    return False


# ---------------------------------------------------------------------------
# preferential attachment

@jit
def _roulette_eligible(deg, n_existing, k_c, joiner, chosen, n_chosen):
    """Exact degree-proportional draw over eligible nodes; -1 if none."""
    total = 0
    for v in range(n_existing):
        if v != joiner and _below_cutoff(deg[v], k_c) and not _in(chosen, n_chosen, v):
            total += deg[v]
    if total == 0:
        return -1
    r = randbelow(total)
    for v in range(n_existing):
        if v != joiner and _below_cutoff(deg[v], k_c) and not _in(chosen, n_chosen, v):
            r -= deg[v]
            if r < 0:
                return v
    return -1


@jit
def _pick_pa(endpoints, n_ep, deg, n_existing, k_c, joiner, chosen, n_chosen, guard):
    # A uniform edge endpoint is node v with probability k_v / k_total, the
    # same law as a uniform node accepted with probability k_v / k_total.
    rejects = 0
    while True:
        v = endpoints[randbelow(n_ep)]
        if v != joiner and _below_cutoff(deg[v], k_c) and not _in(chosen, n_chosen, v):
            return v
        rejects += 1
        if rejects >= guard:
            return _roulette_eligible(deg, n_existing, k_c, joiner, chosen, n_chosen)


@jit
def pa_pick_draws(endpoints, deg, k_c, joiner, excluded, n_draws, rng_seed):
    """Repeated single draws of the PA attachment step (for kernel checks)."""
    seed(rng_seed)
    out = np.empty(n_draws, np.int64)
    n = len(deg)
    for t in range(n_draws):
        out[t] = _pick_pa(endpoints, len(endpoints), deg, n, k_c, joiner, excluded, len(excluded), 50 * n)
    return out


@jit
def pa_kernel(n, m, k_c, rng_seed):
    """Grow a PA graph from an (m+1)-clique.  Returns (src, dst, failed_node)."""
    seed(rng_seed)
    max_edges = m * (m + 1) // 2 + max(n - m - 1, 0) * m
    src = np.empty(max_edges, np.int64)
    dst = np.empty(max_edges, np.int64)
    endpoints = np.empty(2 * max_edges, np.int64)
    deg = np.zeros(n, np.int64)
    ne = 0
    for a in range(m + 1):
        for b in range(a + 1, m + 1):
            src[ne] = a
            dst[ne] = b
            endpoints[2 * ne] = a
            endpoints[2 * ne + 1] = b
            deg[a] += 1
            deg[b] += 1
            ne += 1
    chosen = np.empty(m, np.int64)
    guard = 50 * n
    for i in range(m + 1, n):
        for j in range(m):
            v = _pick_pa(endpoints, 2 * ne, deg, i, k_c, i, chosen, j, guard)
            if v < 0:
                return src[:ne], dst[:ne], i
            chosen[j] = v
            src[ne] = i
            dst[ne] = v
            endpoints[2 * ne] = i
            endpoints[2 * ne + 1] = v
            deg[i] += 1
            deg[v] += 1
            ne += 1
    return src[:ne], dst[:ne], -1


# ---------------------------------------------------------------------------
# hop-and-attempt PA

@jit
def _append(adj, deg, u, v):
    row = adj[u]
    if deg[u] == len(row):
        grown = np.empty(2 * len(row), np.int64)
        grown[:deg[u]] = row
        adj[u] = grown
        row = grown
    row[deg[u]] = v
    deg[u] += 1


@jit
def hapa_kernel(n, m, k_c, rng_seed):
    """HAPA growth.  Returns (src, dst, failed_node)."""
    seed(rng_seed)
    max_edges = m * (m + 1) // 2 + max(n - m - 1, 0) * m
    src = np.empty(max_edges, np.int64)
    dst = np.empty(max_edges, np.int64)
    adj = [np.empty(max(m, 2), np.int64) for _ in range(n)]
    deg = np.zeros(n, np.int64)
    ne = 0
    for a in range(m + 1):
        for b in range(a + 1, m + 1):
            _append(adj, deg, a, b)
            _append(adj, deg, b, a)
            src[ne] = a
            dst[ne] = b
            ne += 1
    guard = 50 * n
    for i in range(m + 1, n):
        j = 0
        node = randbelow(i)
        rnd = uniform()
        # k_total is 2 * ne throughout
        if rnd * (2 * ne) < deg[node] and _below_cutoff(deg[node], k_c):
            _append(adj, deg, i, node)
            _append(adj, deg, node, i)
            src[ne] = i
            dst[ne] = node
            ne += 1
            j += 1
        node = i
        fails = 0
        while j < m:
            if deg[node] == 0:
                # only the joiner itself can be edgeless; restart the walk
                node = randbelow(i)
            node = adj[node][randbelow(deg[node])]
            rnd = uniform()
            if (node != i and not _in(adj[i], deg[i], node)
                    and rnd * (2 * ne) < deg[node] and _below_cutoff(deg[node], k_c)):
                _append(adj, deg, i, node)
                _append(adj, deg, node, i)
                src[ne] = i
                dst[ne] = node
                ne += 1
                j += 1
                fails = 0
                continue
            fails += 1
            if fails >= guard:
                v = _roulette_eligible(deg, i, k_c, i, adj[i], deg[i])
                if v < 0:
                    return src[:ne], dst[:ne], i
                _append(adj, deg, i, v)
                _append(adj, deg, v, i)
                src[ne] = i
                dst[ne] = v
                ne += 1
                j += 1
                fails = 0
    return src[:ne], dst[:ne], -1


# ---------------------------------------------------------------------------
# configuration model

@jit
def stub_pairing_kernel(degrees, rng_seed):
    """Uniform random pairing of stubs (Fisher-Yates shuffle, consecutive pairs)."""
    seed(rng_seed)
    total = 0
    for k in degrees:
        total += k
    stubs = np.empty(total, np.int64)
    p = 0
    for v in range(len(degrees)):
        for _ in range(degrees[v]):
            stubs[p] = v
            p += 1
    for t in range(total - 1, 0, -1):
        r = randbelow(t + 1)
        tmp = stubs[t]
        stubs[t] = stubs[r]
        stubs[r] = tmp
    half = total // 2
    return stubs[0:2 * half:2].copy(), stubs[1:2 * half:2].copy()


# ---------------------------------------------------------------------------
# discover-and-attempt PA

@jit
def _reachable_nonpeer(s_indptr, s_indices, peer_id, odeg, k_c, tau):
    """True if some non-peer lies within tau hops of a peer that can still accept links."""
    n_s = len(s_indptr) - 1
    dist = np.full(n_s, -1, np.int64)
    queue = np.empty(n_s, np.int64)
    tail = 0
    for v in range(n_s):
        if peer_id[v] >= 0 and _below_cutoff(odeg[peer_id[v]], k_c):
            dist[v] = 0
            queue[tail] = v
            tail += 1
    head = 0
    while head < tail:
        u = queue[head]
        head += 1
        if dist[u] >= tau:
            continue
        for p in range(s_indptr[u], s_indptr[u + 1]):
            w = s_indices[p]
            if dist[w] < 0:
                if peer_id[w] < 0:
                    return True
                dist[w] = dist[u] + 1
                queue[tail] = w
                tail += 1
    return False


@jit
def dapa_kernel(s_indptr, s_indices, n_o, m, k_c, tau, seed_pool, rng_seed):
    """DAPA overlay growth on a substrate in CSR form.

    Returns (src, dst, substrate_of, n_peers); n_peers < n_o means the
    candidate pool ran dry.
    """
    seed(rng_seed)
    n_s = len(s_indptr) - 1
    max_edges = 1 + m * n_o
    src = np.empty(max_edges, np.int64)
    dst = np.empty(max_edges, np.int64)
    peer_id = np.full(n_s, -1, np.int64)
    substrate_of = np.full(n_o, -1, np.int64)
    odeg = np.zeros(n_o, np.int64)

    a = seed_pool[randbelow(len(seed_pool))]
    b = a
    while b == a:
        b = seed_pool[randbelow(len(seed_pool))]
    peer_id[a] = 0
    peer_id[b] = 1
    substrate_of[0] = a
    substrate_of[1] = b
    src[0] = 0
    dst[0] = 1
    odeg[0] = 1
    odeg[1] = 1
    ne = 1
    n_peers = 2

    mark = np.zeros(n_s, np.int64)
    dist = np.zeros(n_s, np.int64)
    queue = np.empty(n_s, np.int64)
    horizon = np.empty(n_o, np.int64)
    chosen = np.empty(m, np.int64)
    stamp = 0
    fails = 0
    guard = 50 * n_s
    while n_peers < n_o:
        node = randbelow(n_s)
        if peer_id[node] >= 0:
            continue
        # breadth-first search truncated at tau, collecting visible peers
        stamp += 1
        mark[node] = stamp
        dist[node] = 0
        queue[0] = node
        head = 0
        tail = 1
        h = 0
        while head < tail:
            u = queue[head]
            head += 1
            if dist[u] >= tau:
                continue
            for p in range(s_indptr[u], s_indptr[u + 1]):
                w = s_indices[p]
                if mark[w] != stamp:
                    mark[w] = stamp
                    dist[w] = dist[u] + 1
                    queue[tail] = w
                    tail += 1
                    pid = peer_id[w]
                    if pid >= 0 and _below_cutoff(odeg[pid], k_c):
                        horizon[h] = pid
                        h += 1
        if h == 0:
            fails += 1
            if fails >= n_s:
                if not _reachable_nonpeer(s_indptr, s_indices, peer_id, odeg, k_c, tau):
                    break
                fails = 0
            continue
        fails = 0
        new = n_peers
        if h <= m:
            for t in range(h):
                src[ne] = new
                dst[ne] = horizon[t]
                odeg[horizon[t]] += 1
                odeg[new] += 1
                ne += 1
        else:
            htotal = 0
            for t in range(h):
                htotal += odeg[horizon[t]]
            for j in range(m):
                rejects = 0
                pick = -1
                while True:
                    q = horizon[randbelow(h)]
                    rnd = uniform()
                    if (not _in(chosen, j, q) and rnd * htotal < odeg[q]
                            and _below_cutoff(odeg[q], k_c)):
                        pick = q
                        break
                    rejects += 1
                    if rejects >= guard:
                        wsum = 0
                        for t in range(h):
                            q = horizon[t]
                            if not _in(chosen, j, q) and _below_cutoff(odeg[q], k_c):
                                wsum += odeg[q]
                        if wsum > 0:
                            r = randbelow(wsum)
                            for t in range(h):
                                q = horizon[t]
                                if not _in(chosen, j, q) and _below_cutoff(odeg[q], k_c):
                                    r -= odeg[q]
                                    if r < 0:
                                        pick = q
                                        break
                        break
                if pick < 0:
                    break
                chosen[j] = pick
                src[ne] = new
                dst[ne] = pick
                odeg[pick] += 1
                odeg[new] += 1
                htotal += 1
                ne += 1
        peer_id[node] = new
        substrate_of[new] = node
        n_peers += 1
    return src[:ne], dst[:ne], substrate_of, n_peers


# ---------------------------------------------------------------------------
# searches on CSR graphs

@jit
def flood_kernel(indptr, indices, source, ttl, k_min, target, mark, rng_seed):
    """Level-synchronous flood; k_min <= 0 means plain flooding.

    ``mark`` is caller-owned scratch of length N, filled with -1 on entry and
    restored on exit.  Returns per-hop arrays: new_hits[h] (nodes first
    reached at hop h, h = 1..ttl), sent[h] (messages sent at hop h, h =
    0..ttl-1), and the hop at which ``target`` was reached (-1 if never).
    """
    seed(rng_seed)
    n = len(indptr) - 1
    new_hits = np.zeros(ttl + 1, np.int64)
    sent = np.zeros(ttl + 1, np.int64)
    frontier = np.empty(n, np.int64)
    parent = np.empty(n, np.int64)
    nxt = np.empty(n, np.int64)
    nxt_parent = np.empty(n, np.int64)
    touched = np.empty(n, np.int64)
    n_touched = 1
    touched[0] = source
    mark[source] = 0
    frontier[0] = source
    parent[0] = -1
    n_front = 1
    delivered = -1
    if source == target:
        delivered = 0
    scratch = np.empty(n, np.int64)
    for hop in range(ttl):
        n_next = 0
        for f in range(n_front):
            u = frontier[f]
            pu = parent[f]
            start = indptr[u]
            deg = indptr[u + 1] - start
            # candidate recipients: all neighbors except the sender
            c = 0
            for p in range(start, start + deg):
                w = indices[p]
                if w != pu:
                    scratch[c] = w
                    c += 1
            fan = c
            if k_min > 0:
                if pu < 0:
                    fan = min(deg, k_min)
                elif deg > k_min:
                    fan = k_min
            if fan < c:
                # partial Fisher-Yates: first `fan` slots become a uniform sample
                for t in range(fan):
                    r = t + randbelow(c - t)
                    tmp = scratch[t]
                    scratch[t] = scratch[r]
                    scratch[r] = tmp
            sent[hop] += fan
            for t in range(fan):
                w = scratch[t]
                if mark[w] < 0:
                    mark[w] = hop + 1
                    touched[n_touched] = w
                    n_touched += 1
                    nxt[n_next] = w
                    nxt_parent[n_next] = u
                    n_next += 1
                    if w == target and delivered < 0:
                        delivered = hop + 1
        new_hits[hop + 1] = n_next
        for f in range(n_next):
            frontier[f] = nxt[f]
            parent[f] = nxt_parent[f]
        n_front = n_next
        if n_front == 0:
            break
    for t in range(n_touched):
        mark[touched[t]] = -1
    return new_hits, sent, delivered


@jit
def walk_kernel(indptr, indices, source, steps, target, mark, rng_seed):
    """Single non-backtracking walker; backtracks only at dead ends.

    Returns (distinct_after[s] for s = 0..steps, steps_taken, delivery_step).
    ``mark`` is scratch as in flood_kernel.
    """
    seed(rng_seed)
    distinct = np.zeros(steps + 1, np.int64)
    visited = np.empty(steps + 1, np.int64)
    n_vis = 0
    mark[source] = 0
    visited[n_vis] = source
    n_vis += 1
    prev = -1
    cur = source
    hits = 0
    taken = 0
    delivered = -1
    for s in range(1, steps + 1):
        start = indptr[cur]
        deg = indptr[cur + 1] - start
        if deg == 0:
            break
        if prev < 0 or deg == 1:
            nxt = indices[start + randbelow(deg)]
        else:
            # uniform over neighbors other than prev (simple graph: prev occurs once)
            # slot of prev is remapped to the last slot, which r never hits
            r = randbelow(deg - 1)
            nxt = indices[start + r]
            if nxt == prev:
                nxt = indices[start + deg - 1]
        prev = cur
        cur = nxt
        taken = s
        if mark[cur] < 0:
            mark[cur] = s
            visited[n_vis] = cur
            n_vis += 1
            hits += 1
        distinct[s] = hits
        if cur == target:
            delivered = s
            break
    for s in range(taken + 1, steps + 1):
        distinct[s] = hits
    for t in range(n_vis):
        mark[visited[t]] = -1
    return distinct, taken, delivered
