"""Brute-force reference implementations used only by the tests.

Nothing here imports the code under test except plain data containers, so a
bug in the package cannot leak into the expected values.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


# ---------------------------------------------------------------- metrics


def box_iou(a, b):
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    w = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    h = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = w * h
    if inter == 0.0:
        return 0.0
    return inter / ((ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter)


def brute_force_match(gts, dts, tau):
    """Enumerate every injective partial matching and keep the greedy-best one.

    ``gts`` are coordinate tuples, ``dts`` are ``(coords, score)``. The
    greedy-best matching is the one whose vector of partner IoUs, read in
    descending-score order, is lexicographically largest (unmatched counts
    as -1, equal IoU prefers the lower gt index).
    """
    order = sorted(range(len(dts)), key=lambda i: (-dts[i][1], i))
    ious = [[box_iou(dts[d][0], g) for g in gts] for d in range(len(dts))]
    best_key, best = None, None
    choices = [None] + list(range(len(gts)))
    for combo in itertools.product(choices, repeat=len(order)):
        used = [c for c in combo if c is not None]
        if len(used) != len(set(used)):
            continue
        ok = True
        key = []
        for d, g in zip(order, combo):
            if g is None:
                key.append((-1.0, 0))
                continue
            v = ious[d][g]
            if v < tau or v <= 0.0:
                ok = False
                break
            key.append((v, -g))
        if not ok:
            continue
        # the greedy rule is a prefix rule: a free gt that qualifies must be taken
        if best_key is None or key > best_key:
            best_key, best = key, dict(zip(order, combo))
    pairs = sorted((g, d, ious[d][g]) for d, g in best.items() if g is not None)
    return pairs


def naive_greedy(gts, dts, tau):
    """Plain greedy matching written from the textual rule. Returns {dt: gt}."""
    order = sorted(range(len(dts)), key=lambda i: (-dts[i][1], i))
    taken = set()
    out = {}
    for d in order:
        best_g, best_v = None, None
        for g in range(len(gts)):
            if g in taken:
                continue
            v = box_iou(dts[d][0], gts[g])
            if v <= 0.0 or v < tau:
                continue
            if best_v is None or v > best_v:
                best_g, best_v = g, v
        if best_g is not None:
            taken.add(best_g)
            out[d] = best_g
    return out


def naive_ap(images, tau):
    """AP by sweeping every score threshold over pooled detections.

    ``images`` is a list of ``(gts, dts)``; scores must be distinct.
    Precision at each threshold comes from re-matching only the detections at
    or above it, image by image.
    """
    n_gt = sum(len(g) for g, _ in images)
    scores = sorted({s for _, d in images for _, s in d}, reverse=True)
    points = []
    for thr in scores:
        tp = fp = 0
        for g, d in images:
            kept = [x for x in d if x[1] >= thr]
            m = naive_greedy(g, kept, tau)
            tp += len(m)
            fp += len(kept) - len(m)
        points.append((tp / n_gt, tp / (tp + fp)))
    total = 0.0
    for k in range(101):
        r = k / 100
        cands = [p for rc, p in points if rc >= r]
        total += max(cands) if cands else 0.0
    return total / 101


def naive_ar(images, thresholds, max_det):
    n_gt = sum(len(g) for g, _ in images)
    rec = []
    for tau in thresholds:
        tp = 0
        for g, d in images:
            top = sorted(range(len(d)), key=lambda i: (-d[i][1], i))[:max_det]
            tp += len(naive_greedy(g, [d[i] for i in top], tau))
        rec.append(tp / n_gt)
    return sum(rec) / len(rec)


def naive_lrp(images, s, tau):
    n_tp = n_fp = n_fn = 0
    loc = 0.0
    for g, d in images:
        kept = [x for x in d if x[1] > s]
        m = naive_greedy(g, kept, tau)
        for di, gi in m.items():
            loc += (1.0 - box_iou(kept[di][0], g[gi])) / (1.0 - tau)
        n_tp += len(m)
        n_fp += len(kept) - len(m)
        n_fn += len(g) - len(m)
    return (loc + n_fp + n_fn) / (n_tp + n_fp + n_fn)


def naive_olrp(images, tau):
    """Minimum LRP over a dense threshold set: every score, every midpoint, 0."""
    scores = sorted({s for _, d in images for _, s in d})
    grid = {0.0} | set(scores)
    grid |= {(a + b) / 2 for a, b in zip(scores, scores[1:])}
    return min(naive_lrp(images, s, tau) for s in grid)


# ---------------------------------------------------------------- allocation


def window_patterns(period, horizon, active):
    """All 0/1 frame vectors whose every length-``period`` window sums to ``active``."""
    out = []
    for bits in itertools.product((0, 1), repeat=horizon):
        if all(sum(bits[k : k + period]) == active for k in range(horizon - period + 1)):
            out.append(bits)
    return out


def brute_force_allocation(p):
    """Enumerate every x vector of a tiny problem and every compatible y.

    ``p`` is a plain dict description (see tests/test_allocation.py). Returns
    ``(best_objective, best_x)`` or ``(None, None)`` when infeasible. The
    objective is computed in exact rational arithmetic and converted at the end.
    """
    V, D, B = p["streams"], p["detectors"], p["bitrates"]
    S, M = p["sites"], p["machines"]
    F = math.lcm(*[d["period"] for d in D])
    big_m = max(len(S), p["dps"])
    triples = [(v, di, bi) for v in range(len(V)) for di in range(len(D)) for bi in range(len(B))]
    best, best_x = None, None
    pattern_cache = {}
    for bits in itertools.product((0, 1), repeat=len(triples)):
        chosen = [t for t, b in zip(triples, bits) if b]
        # one bitrate per (stream, detector): the documented reading of the timing rows
        pairs = [(v, di) for v, di, _ in chosen]
        if len(pairs) != len(set(pairs)):
            continue
        if any(sum(1 for v, _, _ in chosen if v == vv) > p["dps"] for vv in range(len(V))):
            continue
        ok = True
        for mi, m in enumerate(M):
            used = [(v, di) for v, di, _ in chosen if D[di]["machine"] == mi]
            # the exclusive flag replaces the memory rows
            if not p.get("exclusive") and sum(D[di]["ram"] for _, di in used) > m["ram"]:
                ok = False
            if p.get("exclusive") and len(used) > 1:
                ok = False
        if not ok:
            continue
        for v in range(len(V)):
            for s in range(len(S)):
                bw = p["links"][v][s]
                load = sum(
                    Fraction(B[bi]) / D[di]["period"]
                    for vv, di, bi in chosen
                    if vv == v and M[D[di]["machine"]]["site"] == s
                )
                if bw is None:  # intra-site
                    continue
                if load > Fraction(bw):
                    ok = False
        if not ok:
            continue
        # y: per stream, every combination of window-consistent patterns
        for v in range(len(V)):
            dets = [di for vv, di, _ in chosen if vv == v]
            pats = []
            for di in dets:
                key = (D[di]["period"], F)
                if key not in pattern_cache:
                    pattern_cache[key] = window_patterns(D[di]["period"], F, 1)
                pats.append(pattern_cache[key])
            found = False
            for combo in itertools.product(*pats):
                counts = [sum(c[f] for c in combo) for f in range(F)]
                if all(1 <= c <= p["dpf"] for c in counts):
                    found = True
                    break
            if not found:
                ok = False
                break
        if not ok:
            continue
        w = Fraction(p["w"]).limit_denominator(10**6)
        acc = sum(
            Fraction(B[bi]) / D[di]["period"] * Fraction(D[di]["acc"][bi]).limit_denominator(10**9)
            for _, di, bi in chosen
        )
        links = 0
        for v in range(len(V)):
            for s in range(len(S)):
                n = sum(1 for vv, di, _ in chosen if vv == v and M[D[di]["machine"]]["site"] == s)
                links += -(-n // big_m)
        obj = acc * w - links * (1 - w)
        if best is None or obj > best:
            best, best_x = obj, chosen
    return (float(best) if best is not None else None), best_x


# ---------------------------------------------------------------- clustering


def union_find_clusters(points, max_link):
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    pts = np.asarray(points, dtype=float)
    for i in range(n):
        for j in range(i + 1, n):
            if math.dist(pts[i], pts[j]) <= max_link:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(sorted(g) for g in groups.values())
