"""Classical geometric derendering baseline.

Pipeline: Otsu binarization, Zhang-Suen thinning to a one-pixel
8-connected skeleton, skeleton-graph extraction (endpoints and junctions
as nodes, pixel chains as edges), then a greedy traversal that starts at
the leftmost endpoint and continues through junctions along the smallest
turning angle. Stroke order follows a left-to-right writing prior. This
is intentionally a weak contrast baseline for the learned pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .ink import DigitalInk, Stroke
from .normalize import SimplifySpec, hallucinate_time, simplify
from .raster import RasterImage

_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True, eq=False, init=False)
class BinaryImage:
    """A foreground mask: (height, width) bool, read-only."""

    mask: np.ndarray

    def __init__(self, mask: np.ndarray):
        arr = np.asarray(mask, dtype=bool)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-d mask, got shape {arr.shape}")
        if arr.flags.writeable or arr.base is not None:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "mask", arr)

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryImage):
            return NotImplemented
        return np.array_equal(self.mask, other.mask)


def binarize(img: RasterImage) -> BinaryImage:
    """Otsu threshold on 0.299R + 0.587G + 0.114B grayscale.

    Foreground is the minority-intensity side (fraction <= 0.5): ink is
    sparse. Uniform images produce an empty foreground.
    """
    px = img.pixels.astype(np.float64)
    gray = np.clip(
        np.rint(0.299 * px[..., 0] + 0.587 * px[..., 1] + 0.114 * px[..., 2]), 0, 255
    ).astype(np.int64)
    counts = np.bincount(gray.ravel(), minlength=256).astype(np.float64)
    if np.count_nonzero(counts) <= 1:
        return BinaryImage(np.zeros(gray.shape, bool))
    total = gray.size
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(counts)
    m0 = np.cumsum(counts * levels)
    mu = m0[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mu * w0 - total * m0) ** 2 / (w0 * (total - w0))
    between[~np.isfinite(between)] = -1.0
    threshold = int(np.argmax(between))
    dark = gray <= threshold
    fg = dark if dark.mean() <= 0.5 else ~dark
    return BinaryImage(fg)


if _accel.USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _zs_pass(img, step):  # pragma: no cover - numba build
        h, w = img.shape
        marker = np.zeros(img.shape, np.uint8)
        count = 0
        for i in range(1, h - 1):
            for j in range(1, w - 1):
                if img[i, j] == 0:
                    continue
                p2 = img[i - 1, j]
                p3 = img[i - 1, j + 1]
                p4 = img[i, j + 1]
                p5 = img[i + 1, j + 1]
                p6 = img[i + 1, j]
                p7 = img[i + 1, j - 1]
                p8 = img[i, j - 1]
                p9 = img[i - 1, j - 1]
                b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9
                if b < 2 or b > 6:
                    continue
                a = 0
                if p2 == 0 and p3 == 1:
                    a += 1
                if p3 == 0 and p4 == 1:
                    a += 1
                if p4 == 0 and p5 == 1:
                    a += 1
                if p5 == 0 and p6 == 1:
                    a += 1
                if p6 == 0 and p7 == 1:
                    a += 1
                if p7 == 0 and p8 == 1:
                    a += 1
                if p8 == 0 and p9 == 1:
                    a += 1
                if p9 == 0 and p2 == 1:
                    a += 1
                if a != 1:
                    continue
                if step == 0:
                    if p2 * p4 * p6 != 0 or p4 * p6 * p8 != 0:
                        continue
                else:
                    if p2 * p4 * p8 != 0 or p2 * p6 * p8 != 0:
                        continue
                marker[i, j] = 1
                count += 1
        if count > 0:
            for i in range(1, h - 1):
                for j in range(1, w - 1):
                    if marker[i, j] == 1:
                        img[i, j] = 0
        return count

else:

    def _zs_pass(img, step):
        core = img[1:-1, 1:-1]
        p2 = img[0:-2, 1:-1]
        p3 = img[0:-2, 2:]
        p4 = img[1:-1, 2:]
        p5 = img[2:, 2:]
        p6 = img[2:, 1:-1]
        p7 = img[2:, 0:-2]
        p8 = img[1:-1, 0:-2]
        p9 = img[0:-2, 0:-2]
        ring = (p2, p3, p4, p5, p6, p7, p8, p9, p2)
        b = sum(p.astype(np.int64) for p in ring[:8])
        a = sum(((ring[k] == 0) & (ring[k + 1] == 1)).astype(np.int64) for k in range(8))
        cond = (core == 1) & (b >= 2) & (b <= 6) & (a == 1)
        if step == 0:
            cond &= (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
        else:
            cond &= (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
        count = int(np.count_nonzero(cond))
        if count:
            core[cond] = 0
        return count


def skeletonize(image: BinaryImage) -> BinaryImage:
    """Zhang-Suen thinning to a 1-px, 8-connected skeleton.

    Preserves the number of 8-connected foreground components and is
    idempotent on its own output.
    """
    if not image.mask.any():
        return image
    h, w = image.mask.shape
    img = np.zeros((h + 2, w + 2), np.uint8)
    img[1:-1, 1:-1] = image.mask
    while _zs_pass(img, 0) + _zs_pass(img, 1) > 0:
        pass
    return BinaryImage(img[1:-1, 1:-1].astype(bool))


def count_components(image: BinaryImage) -> int:
    """Number of 8-connected foreground components."""
    mask = image.mask
    seen = np.zeros_like(mask, dtype=bool)
    h, w = mask.shape
    count = 0
    for r0, c0 in np.argwhere(mask):
        if seen[r0, c0]:
            continue
        count += 1
        stack = [(int(r0), int(c0))]
        seen[r0, c0] = True
        while stack:
            r, c = stack.pop()
            for dr, dc in _OFFSETS:
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and mask[rr, cc] and not seen[rr, cc]:
                    seen[rr, cc] = True
                    stack.append((rr, cc))
    return count


@dataclass(frozen=True, eq=False)
class SkeletonEdge:
    """Pixel chain between two nodes; ``pixels`` includes both end pixels.

    Self-loops (a == b) are legal and represent cycles through a node.
    """

    a: int
    b: int
    pixels: np.ndarray  # (k, 2) int64 rows of (row, col)


@dataclass(frozen=True)
class SkeletonGraph:
    """Nodes are clusters of special pixels, keyed by a representative pixel."""

    nodes: tuple[tuple[int, int], ...]  # representative (row, col) per node
    edges: tuple[SkeletonEdge, ...]


def build_skeleton_graph(skel: BinaryImage) -> SkeletonGraph:
    """Split a thin skeleton into nodes and simple pixel chains.

    Node pixels are those whose 8-neighbor count differs from 2
    (endpoints, junctions, isolated dots); adjacent junction pixels merge
    into a single node so that thinning's small junction clusters do not
    shatter into micro-edges. Chains of degree-2 pixels become edges, and
    node-free cycles get a synthetic node at their leftmost pixel. Every
    skeleton pixel lands in exactly one chain or belongs to a node.
    """
    mask = skel.mask
    h, w = mask.shape
    padded = np.zeros((h + 2, w + 2), np.int64)
    padded[1:-1, 1:-1] = mask
    cnt = sum(padded[1 + dr : h + 1 + dr, 1 + dc : w + 1 + dc] for dr, dc in _OFFSETS)
    node_px = mask & (cnt != 2)
    junction = mask & (cnt >= 3)

    def in_bounds(p):
        return 0 <= p[0] < h and 0 <= p[1] < w

    cluster_id = np.full(mask.shape, -1, np.int64)
    reps: list[tuple[int, int]] = []
    pixel_queue: list[tuple[int, int]] = []  # node pixels in cluster-creation order

    def add_cluster(pixels: list[tuple[int, int]]) -> int:
        cid = len(reps)
        for p in pixels:
            cluster_id[p] = cid
            pixel_queue.append(p)
        reps.append(min(pixels, key=lambda p: (p[1], p[0])))  # leftmost, then topmost
        return cid

    for r0, c0 in np.argwhere(junction):
        if cluster_id[r0, c0] >= 0:
            continue
        comp = [(int(r0), int(c0))]
        stack = [comp[0]]
        cluster_id[r0, c0] = -2  # mark during fill
        while stack:
            r, c = stack.pop()
            for dr, dc in _OFFSETS:
                q = (r + dr, c + dc)
                if in_bounds(q) and junction[q] and cluster_id[q] == -1:
                    cluster_id[q] = -2
                    comp.append(q)
                    stack.append(q)
        add_cluster(comp)
    for r, c in np.argwhere(node_px & ~junction):
        add_cluster([(int(r), int(c))])

    visited = np.zeros_like(mask, dtype=bool)
    edges: list[SkeletonEdge] = []
    seen_pairs: set[tuple[tuple[int, int], tuple[int, int]]] = set()

    i = 0
    while True:
        if i == len(pixel_queue):
            rest = mask & ~visited & ~node_px
            if not rest.any():
                break
            pts = np.argwhere(rest)
            k = int(np.lexsort((pts[:, 0], pts[:, 1]))[0])  # leftmost, then topmost
            seed = (int(pts[k, 0]), int(pts[k, 1]))
            node_px[seed] = True
            add_cluster([seed])
            continue
        a = pixel_queue[i]
        a_id = int(cluster_id[a])
        for off in _OFFSETS:
            q = (a[0] + off[0], a[1] + off[1])
            if not in_bounds(q) or not mask[q]:
                continue
            if node_px[q]:
                if cluster_id[q] == a_id:
                    continue  # internal to the cluster
                pair = (a, q) if a <= q else (q, a)
                if pair in seen_pairs:
                    continue
                seen_pairs.add(pair)
                edges.append(
                    SkeletonEdge(a_id, int(cluster_id[q]), np.array([a, q], dtype=np.int64))
                )
            elif not visited[q]:
                chain = [a]
                prev, cur = a, q
                b_id = None
                while True:
                    visited[cur] = True
                    chain.append(cur)
                    nxt = None
                    nxt_node = None
                    for off2 in _OFFSETS:
                        r = (cur[0] + off2[0], cur[1] + off2[1])
                        if not in_bounds(r) or not mask[r] or r == prev:
                            continue
                        if node_px[r]:
                            if nxt_node is None:
                                nxt_node = r
                        elif not visited[r] and nxt is None:
                            nxt = r
                    if nxt_node is not None:
                        chain.append(nxt_node)
                        b_id = int(cluster_id[nxt_node])
                        break
                    if nxt is None:
                        # dead end at a non-node pixel: promote it
                        node_px[cur] = True
                        visited[cur] = False
                        b_id = add_cluster([cur])
                        break
                    prev, cur = cur, nxt
                edges.append(SkeletonEdge(a_id, b_id, np.asarray(chain, dtype=np.int64)))
        i += 1
    return SkeletonGraph(tuple(reps), tuple(edges))


def _chain_dir(pixels: np.ndarray, at_end: bool) -> tuple[float, float]:
    # Direction of travel in (x, y); averaged over up to 3 trailing pixels.
    k = min(3, len(pixels) - 1)
    if k == 0:
        return (0.0, 0.0)
    if at_end:
        d = pixels[-1] - pixels[-1 - k]
    else:
        d = pixels[k] - pixels[0]
    return (float(d[1]), float(d[0]))


def _turn_angle(u: tuple[float, float], v: tuple[float, float]) -> float:
    dot = u[0] * v[0] + u[1] * v[1]
    cross = u[0] * v[1] - u[1] * v[0]
    return abs(math.atan2(cross, dot))


def route_edges(graph: SkeletonGraph) -> list[list[tuple[int, bool]]]:
    """Group edges into pen routes; each edge is consumed exactly once.

    Routes start at the leftmost node of unused degree 1 (falling back to
    the leftmost node with any unused edge, for cycles) and continue at
    junctions along the smallest turning angle. Returns, per route, the
    ordered (edge_index, forward) traversal.
    """
    incidence: list[list[tuple[int, bool]]] = [[] for _ in graph.nodes]
    for e_idx, e in enumerate(graph.edges):
        incidence[e.a].append((e_idx, True))
        incidence[e.b].append((e_idx, False))
    used = [False] * len(graph.edges)
    degree = [sum(1 for _ in inc) for inc in incidence]
    remaining = len(graph.edges)
    routes: list[list[tuple[int, bool]]] = []

    def node_key(i: int) -> tuple[int, int]:
        r, c = graph.nodes[i]
        return (c, r)

    while remaining:
        open_nodes = [i for i in range(len(graph.nodes)) if degree[i] > 0]
        ends = [i for i in open_nodes if degree[i] == 1]
        start = min(ends or open_nodes, key=node_key)
        cur = start
        in_dir = None
        route: list[tuple[int, bool]] = []
        while True:
            options = [(e, fwd) for e, fwd in incidence[cur] if not used[e]]
            if not options:
                break
            if in_dir is None:
                e_idx, fwd = options[0]
            else:
                e_idx, fwd = min(
                    options,
                    key=lambda opt: (
                        _turn_angle(
                            in_dir,
                            _out_dir(graph.edges[opt[0]], opt[1]),
                        ),
                        opt[0],
                    ),
                )
            used[e_idx] = True
            remaining -= 1
            edge = graph.edges[e_idx]
            degree[edge.a] -= 1
            degree[edge.b] -= 1
            route.append((e_idx, fwd))
            pixels = edge.pixels if fwd else edge.pixels[::-1]
            in_dir = _chain_dir(pixels, at_end=True)
            cur = edge.b if fwd else edge.a
        routes.append(route)
    return routes


def _out_dir(edge: SkeletonEdge, fwd: bool) -> tuple[float, float]:
    pixels = edge.pixels if fwd else edge.pixels[::-1]
    return _chain_dir(pixels, at_end=False)


def trace_strokes(skel: BinaryImage) -> DigitalInk:
    """Convert a thin skeleton into ordered strokes.

    Pixel chains become point lists at pixel centers (x = column + 0.5,
    y = row + 0.5), simplified with tolerance 1.0 and given synthetic
    20 ms timestamps. Strokes are ordered by their leftmost x
    (left-to-right writing prior).
    """
    graph = build_skeleton_graph(skel)
    routes = route_edges(graph)
    polylines: list[np.ndarray] = []
    for route in routes:
        pts: list[tuple[int, int]] = []
        for e_idx, fwd in route:
            chain = graph.edges[e_idx].pixels
            seq = chain if fwd else chain[::-1]
            rows = [tuple(p) for p in seq]
            if pts:
                rows = rows[1:]  # junction pixel shared with the previous edge
            pts.extend(rows)
        if pts:
            polylines.append(np.asarray(pts, dtype=np.float64))
    connected = {e.a for e in graph.edges} | {e.b for e in graph.edges}
    for i, node in enumerate(graph.nodes):
        if i not in connected:
            polylines.append(np.asarray([node], dtype=np.float64))
    polylines.sort(key=lambda p: (p[:, 1].min(), p[:, 0].min()))
    # pixel (row, col) -> its center (x, y) = (col + 0.5, row + 0.5)
    strokes = [Stroke(np.column_stack([p[:, 1] + 0.5, p[:, 0] + 0.5])) for p in polylines]
    ink = DigitalInk(strokes)
    ink = simplify(ink, SimplifySpec(1.0))
    return hallucinate_time(ink)


def derender_word(img: RasterImage) -> DigitalInk:
    """Binarize, thin, and trace a word image; output in pixel coordinates."""
    return trace_strokes(skeletonize(binarize(img)))
