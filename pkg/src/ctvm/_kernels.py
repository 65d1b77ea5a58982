"""Compiled inner loops: per-index RNG streams, reverse sampling, forward cascades.

Every random draw for sample (or trial) ``i`` comes from a SplitMix64 stream
seeded by mixing ``(master_seed, i)``, so the output for an index never depends
on which thread or batch produced it. All kernels release the GIL.
"""

from __future__ import annotations

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0

_jit = nb.njit(cache=True, nogil=True)


@_jit
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@_jit
def stream_state(master, index):
    return _mix(_mix(np.uint64(master)) ^ (np.uint64(index) * _GOLDEN + _GOLDEN))


@_jit
def next_uniform(state):
    """Advance ``state`` (a 1-element uint64 array) and return a float in [0, 1)."""
    state[0] += _GOLDEN
    return float(_mix(state[0]) >> np.uint64(11)) * _INV53


@_jit
def alias_draw(state, alias_prob, alias_idx):
    k = alias_prob.shape[0]
    j = int(next_uniform(state) * k)
    if j >= k:
        j = k - 1
    if next_uniform(state) < alias_prob[j]:
        return j
    return alias_idx[j]


@_jit
def _push(buf, size, value):
    if size == buf.shape[0]:
        grown = np.empty(buf.shape[0] * 2, dtype=buf.dtype)
        grown[:size] = buf[:size]
        buf = grown
    buf[size] = value
    return buf


@_jit
def _reverse_bfs(in_ptr, in_src, in_prob, state, stamp, gen, queue, head, tail):
    """Continue a reverse live-edge BFS; ``queue[:tail]`` already holds the sample."""
    while head < tail:
        v = queue[head]
        head += 1
        for e in range(in_ptr[v], in_ptr[v + 1]):
            w = in_src[e]
            if stamp[w] == gen:
                continue
            if next_uniform(state) < in_prob[e]:
                stamp[w] = gen
                queue[tail] = w
                tail += 1
    return tail


@_jit
def benefit_batch(master, start, stop, in_ptr, in_src, in_prob, alias_prob, alias_idx, candidates):
    """Plain reverse-reachable samples ``start..stop-1`` with benefit-proportional sources.

    Returns ``(sources, lengths, nodes)``; ``nodes`` is the concatenation of
    every sample's node list, source first.
    """
    n = in_ptr.shape[0] - 1
    count = stop - start
    sources = np.empty(count, dtype=np.int32)
    lengths = np.empty(count, dtype=np.int64)
    out = np.empty(max(16, 4 * count), dtype=np.int32)
    used = 0
    stamp = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int32)
    state = np.empty(1, dtype=np.uint64)
    for k in range(count):
        state[0] = stream_state(master, start + k)
        gen = k + 1
        u = candidates[alias_draw(state, alias_prob, alias_idx)]
        stamp[u] = gen
        queue[0] = u
        size = _reverse_bfs(in_ptr, in_src, in_prob, state, stamp, gen, queue, 0, 1)
        sources[k] = u
        lengths[k] = size
        for i in range(size):
            out = _push(out, used, queue[i])
            used += 1
    return sources, lengths, out[:used].copy()


@_jit
def importance_batch(master, start, stop, in_ptr, in_src, in_prob, gamma, alias_prob, alias_idx,
                     candidates):
    """Importance samples ``start..stop-1``: every sample holds at least two nodes.

    The source is drawn proportional to ``gamma(u) * b(u)``. The first live
    in-edge of the source is drawn from its conditional distribution given
    that at least one in-edge is live (walking the in-list in order), later
    in-edges of the source are flipped independently, and a plain reverse BFS
    finishes the sample.
    """
    n = in_ptr.shape[0] - 1
    count = stop - start
    sources = np.empty(count, dtype=np.int32)
    lengths = np.empty(count, dtype=np.int64)
    out = np.empty(max(16, 4 * count), dtype=np.int32)
    used = 0
    stamp = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int32)
    state = np.empty(1, dtype=np.uint64)
    for k in range(count):
        state[0] = stream_state(master, start + k)
        gen = k + 1
        u = candidates[alias_draw(state, alias_prob, alias_idx)]
        stamp[u] = gen
        queue[0] = u
        lo = in_ptr[u]
        hi = in_ptr[u + 1]
        # first live in-edge: P(E_i) = p_i * prod_{j<i} (1 - p_j), normalised by gamma(u)
        r = next_uniform(state) * gamma[u]
        none_before = 1.0
        first = hi - 1
        acc = 0.0
        for e in range(lo, hi):
            acc += in_prob[e] * none_before
            if r < acc:
                first = e
                break
            none_before *= 1.0 - in_prob[e]
        w = in_src[first]
        stamp[w] = gen
        queue[1] = w
        tail = 2
        for e in range(first + 1, hi):
            if next_uniform(state) < in_prob[e]:
                w = in_src[e]
                stamp[w] = gen
                queue[tail] = w
                tail += 1
        # the source's in-edges are settled; BFS resumes from its in-neighbours
        size = _reverse_bfs(in_ptr, in_src, in_prob, state, stamp, gen, queue, 1, tail)
        sources[k] = u
        lengths[k] = size
        for i in range(size):
            out = _push(out, used, queue[i])
            used += 1
    return sources, lengths, out[:used].copy()


@_jit
def cascade_batch(master, start, stop, out_ptr, out_dst, out_prob, benefit, seeds):
    """Forward IC cascades for trials ``start..stop-1``; returns the benefit of each."""
    n = out_ptr.shape[0] - 1
    count = stop - start
    result = np.empty(count, dtype=np.float64)
    stamp = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int32)
    state = np.empty(1, dtype=np.uint64)
    for k in range(count):
        state[0] = stream_state(master, start + k)
        gen = k + 1
        tail = 0
        total = 0.0
        for s in seeds:
            if stamp[s] != gen:
                stamp[s] = gen
                queue[tail] = s
                tail += 1
                total += benefit[s]
        head = 0
        while head < tail:
            u = queue[head]
            head += 1
            for e in range(out_ptr[u], out_ptr[u + 1]):
                v = out_dst[e]
                if stamp[v] == gen:
                    continue
                if next_uniform(state) < out_prob[e]:
                    stamp[v] = gen
                    queue[tail] = v
                    tail += 1
                    total += benefit[v]
        result[k] = total
    return result
