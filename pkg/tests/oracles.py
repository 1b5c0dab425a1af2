"""Independent oracles used by the unit and acceptance suites.

These deliberately avoid reusing the library's internals: edit distance,
shift enumeration, and gradient references are re-derived here by brute
force so the two routes stay independent.
"""

import numpy as np


def edit_distance(a, b):
    """Plain quadratic DP Levenshtein over token lists."""
    d = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        d[i][0] = i
    for j in range(len(b) + 1):
        d[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[len(a)][len(b)]


def _all_shifts(hyp, ref, max_block=10, max_distance=50):
    """Every single block move whose block occurs contiguously in ref."""
    ref_subseqs = set()
    for i in range(len(ref)):
        for l in range(1, min(max_block, len(ref) - i) + 1):
            ref_subseqs.add(tuple(ref[i:i + l]))
    results = []
    for start in range(len(hyp)):
        for length in range(1, min(max_block, len(hyp) - start) + 1):
            block = tuple(hyp[start:start + length])
            if block not in ref_subseqs:
                continue
            rest = hyp[:start] + hyp[start + length:]
            for dest in range(len(rest) + 1):
                if dest == start or abs(dest - start) > max_distance:
                    continue
                moved = rest[:dest] + list(block) + rest[dest:]
                if moved != hyp:
                    results.append(moved)
    return results


def ter_bruteforce(hyp_tokens, ref_tokens):
    """Exhaustive minimum of (#shifts + edit distance) over all shift
    sequences, by plain depth-layered enumeration."""
    best = edit_distance(hyp_tokens, ref_tokens)
    layer = {tuple(hyp_tokens)}
    visited = set(layer)
    depth = 0
    while layer and depth + 1 < best:
        depth += 1
        nxt = set()
        for state in layer:
            for moved in _all_shifts(list(state), ref_tokens):
                key = tuple(moved)
                if key in visited:
                    continue
                visited.add(key)
                nxt.add(key)
                cost = depth + edit_distance(moved, ref_tokens)
                if cost < best:
                    best = cost
        layer = nxt
    return best


def finite_difference_grads(loss_fn, param_arrays, h=1e-5, sample=None,
                            rng=None):
    """Central finite differences of a scalar loss w.r.t. flat entries of
    each parameter array. When ``sample`` is given, only that many random
    entries per array are probed."""
    grads = {}
    for name, arr in param_arrays.items():
        flat = arr.ravel()
        if sample is not None and flat.size > sample:
            idxs = rng.choice(flat.size, size=sample, replace=False)
        else:
            idxs = np.arange(flat.size)
        entries = {}
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + h
            up = loss_fn()
            flat[i] = orig - h
            down = loss_fn()
            flat[i] = orig
            entries[int(i)] = (up - down) / (2 * h)
        grads[name] = entries
    return grads


def relative_error(a, b, floor=1e-6):
    return abs(a - b) / max(abs(a), abs(b), floor)
