"""Patch-similarity graphs and the discrete nonlocal calculus.

A graph connects each pixel to its most similar peers inside a search
window. Similarity is measured between Gaussian-windowed patches of the
two chroma coordinates (saturation weight) and of the achromatic
coordinate (value weight). Edge fields live on the directed adjacency;
gradients, divergences and Laplacians are the usual graph-calculus
operators scaled by square roots of the weights, so that the gradient
and minus the divergence are exact adjoints.

Adjacency is stored CSR-style: ``indptr``/``indices`` plus one weight
pair per directed edge. Weights are symmetric by construction (each
undirected edge carries a single weight value used in both directions).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .image import as_image, rgb_to_sv

__all__ = [
    "PatchParams",
    "NonlocalGraph",
    "build_graph",
    "build_channel_graph",
    "nl_gradient",
    "nl_divergence",
    "nl_laplacian",
    "nl_inner",
    "save_graph",
    "load_graph",
]


@dataclass(frozen=True)
class PatchParams:
    """Patch-comparison geometry and filtering strength.

    patch_radius : half-width of the compared patch ((2r+1)^2 pixels)
    search_radius : half-width of the candidate window around each pixel
    neighbor_count : neighbors retained per pixel before symmetrization
    kernel_sigma : std (pixels) of the Gaussian patch window
    h0 : filtering parameter; roughly the noise level
    """

    patch_radius: int = 2
    search_radius: int = 5
    neighbor_count: int = 10
    kernel_sigma: float = 1.0
    h0: float = 0.1

    def __post_init__(self):
        if self.patch_radius < 0:
            raise ValueError("patch_radius must be >= 0")
        if self.search_radius < 1:
            raise ValueError("search_radius must be >= 1")
        window = (2 * self.search_radius + 1) ** 2 - 1
        if not 1 <= self.neighbor_count <= window:
            raise ValueError(
                f"neighbor_count must be in [1, {window}], got {self.neighbor_count}"
            )
        if self.kernel_sigma <= 0:
            raise ValueError("kernel_sigma must be > 0")
        if self.h0 <= 0:
            raise ValueError("h0 must be > 0")


@dataclass
class _ChannelView:
    """Per-edge arrays for one weight channel, precomputed for the solver."""

    indptr: np.ndarray
    indices: np.ndarray
    edge_src: np.ndarray
    reverse: np.ndarray
    w: np.ndarray
    sqrt_w: np.ndarray
    wsum: np.ndarray  # per-pixel sum of w over incident edges


@dataclass
class NonlocalGraph:
    """Symmetric pixel-similarity graph over an H x W raster.

    ``indices[indptr[i]:indptr[i+1]]`` lists the neighbors of pixel i in
    increasing order; ``ws``/``wv`` hold the saturation and value
    weights of each directed edge; ``reverse[e]`` is the index of the
    opposite direction of edge e.
    """

    shape: tuple[int, int]
    indptr: np.ndarray
    indices: np.ndarray
    ws: np.ndarray
    wv: np.ndarray
    reverse: np.ndarray = field(init=False)
    edge_src: np.ndarray = field(init=False)

    def __post_init__(self):
        self.indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        self.ws = np.ascontiguousarray(self.ws, dtype=np.float64)
        self.wv = np.ascontiguousarray(self.wv, dtype=np.float64)
        degrees = np.diff(self.indptr)
        self.edge_src = np.repeat(np.arange(self.n, dtype=np.int64), degrees)
        keys = self.edge_src * self.n + self.indices
        rev_keys = self.indices * self.n + self.edge_src
        self.reverse = np.searchsorted(keys, rev_keys)
        if not np.array_equal(keys[self.reverse], rev_keys):
            raise ValueError("adjacency pattern is not symmetric")

    @property
    def n(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def n_edges(self) -> int:
        return self.indices.size

    @classmethod
    def from_undirected_edges(cls, shape, pairs, ws, wv) -> "NonlocalGraph":
        """Build a graph from a list of undirected (i, j) pixel pairs.

        Intended for tests and toy problems; weights are given once per
        pair and shared by both directions.
        """
        n = shape[0] * shape[1]
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        ws = np.asarray(ws, dtype=np.float64)
        wv = np.asarray(wv, dtype=np.float64)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            raise ValueError("self-loops are not allowed")
        src = np.concatenate([pairs[:, 0], pairs[:, 1]])
        dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
        ws2 = np.concatenate([ws, ws])
        wv2 = np.concatenate([wv, wv])
        order = np.lexsort((dst, src))
        src, dst, ws2, wv2 = src[order], dst[order], ws2[order], wv2[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(tuple(shape), indptr, dst, ws2, wv2)

    def weights(self, channel: str) -> np.ndarray:
        if channel == "saturation":
            return self.ws
        if channel == "value":
            return self.wv
        raise ValueError(f"unknown channel {channel!r}")

    def channel_view(self, channel: str) -> _ChannelView:
        w = self.weights(channel)
        wsum = np.bincount(self.edge_src, weights=w, minlength=self.n)
        return _ChannelView(
            indptr=self.indptr,
            indices=self.indices,
            edge_src=self.edge_src,
            reverse=self.reverse,
            w=w,
            sqrt_w=np.sqrt(w),
            wsum=wsum,
        )

    def validate(self) -> None:
        """Check the structural invariants; raises ValueError on breach."""
        if np.any(self.indices == self.edge_src):
            raise ValueError("graph contains self-loops")
        for name, w in (("ws", self.ws), ("wv", self.wv)):
            if np.any(w <= 0.0) or np.any(w > 1.0):
                raise ValueError(f"{name} weights outside (0, 1]")
            if not np.array_equal(w, w[self.reverse]):
                raise ValueError(f"{name} weights are not symmetric")


def _patch_kernel(radius: int, sigma: float) -> np.ndarray:
    """Gaussian patch window on [-r, r]^2, normalized to sum 1."""
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    g1 = np.exp(-(t**2) / (2.0 * sigma**2))
    k = np.outer(g1, g1)
    return k / k.sum()


def _patch_distances(channels: list[np.ndarray], params: PatchParams) -> np.ndarray:
    """Windowed squared patch distances D(i, i+delta) for every offset.

    Returns an (H*W, (2*sr+1)^2) array; entries for the zero offset and
    for candidates falling outside the image are +inf. Out-of-image
    patch samples use symmetric (mirror) extension.
    """
    h, w = channels[0].shape
    r, sr = params.patch_radius, params.search_radius
    pad = r + sr
    padded = [np.pad(c, pad, mode="symmetric") for c in channels]
    kernel = _patch_kernel(r, params.kernel_sigma)
    side = 2 * sr + 1
    dist = np.full((h * w, side * side), np.inf)
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    for dy in range(-sr, sr + 1):
        for dx in range(-sr, sr + 1):
            if dy == 0 and dx == 0:
                continue
            off = (dy + sr) * side + (dx + sr)
            # squared difference, evaluated on [-r, H-1+r] x [-r, W-1+r]
            diff = np.zeros((h + 2 * r, w + 2 * r))
            lo_y, lo_x = pad - r, pad - r
            for c in padded:
                base = c[lo_y : lo_y + h + 2 * r, lo_x : lo_x + w + 2 * r]
                shifted = c[
                    lo_y + dy : lo_y + dy + h + 2 * r,
                    lo_x + dx : lo_x + dx + w + 2 * r,
                ]
                diff += (base - shifted) ** 2
            d = ndimage.correlate(diff, kernel, mode="constant")
            if r > 0:
                d = d[r:-r, r:-r]
            valid = (rows + dy >= 0) & (rows + dy < h) & (cols + dx >= 0) & (cols + dx < w)
            d = np.where(valid, d, np.inf)
            dist[:, off] = d.ravel()
    return dist


def _assemble(shape, dist_s, dist_v, params: PatchParams) -> NonlocalGraph:
    """Turn distance tables into a symmetric top-m graph."""
    h, w = shape
    n = h * w
    sr = params.search_radius
    side = 2 * sr + 1
    inv = 1.0 / (2.0 * params.h0**2)
    with np.errstate(under="ignore"):
        ws = np.exp(-dist_s * inv)
        wv = np.exp(-dist_v * inv)
    combined = ws + wv  # -inf distances give weight 0 on invalid slots
    invalid = ~np.isfinite(dist_s)
    combined[invalid] = -np.inf
    if np.all(invalid):
        raise ValueError("no candidate neighbors; image too small for the window")
    m = min(params.neighbor_count, side * side - 1)
    # stable sort keeps offset enumeration order on ties (deterministic)
    order = np.argsort(-combined, axis=1, kind="stable")[:, :m]
    picked_valid = ~np.take_along_axis(invalid, order, axis=1)
    src = np.repeat(np.arange(n, dtype=np.int64), m)[picked_valid.ravel()]
    off = order.ravel()[picked_valid.ravel()]
    dy = off // side - sr
    dx = off % side - sr
    dst = src + dy * w + dx
    # union-symmetrize the pattern: keep each unordered pair once
    a = np.minimum(src, dst)
    b = np.maximum(src, dst)
    pair_keys = np.unique(a * n + b)
    a = pair_keys // n
    b = pair_keys % n
    # canonical weight: the value computed from the low-index endpoint,
    # so both directions share the exact same float
    off_ab = (b // w - a // w + sr) * side + (b % w - a % w + sr)
    pair_ws = ws[a, off_ab]
    pair_wv = wv[a, off_ab]
    # exp underflow to exactly 0 would violate the (0, 1] weight range
    tiny = np.finfo(np.float64).tiny
    pair_ws = np.maximum(pair_ws, tiny)
    pair_wv = np.maximum(pair_wv, tiny)
    graph = NonlocalGraph.from_undirected_edges(shape, np.column_stack([a, b]), pair_ws, pair_wv)
    graph.validate()
    return graph


def build_graph(img, params: PatchParams | None = None) -> NonlocalGraph:
    """Build the saturation/value similarity graph from an observed image.

    For each pixel, Gaussian-windowed squared patch distances to every
    candidate in the search window are computed in the saturation plane
    (chroma pair) and on the value axis, converted to weights
    exp(-D / 2 h0^2), and the ``neighbor_count`` candidates with largest
    combined weight are retained. The sparsity pattern is symmetrized by
    union, which preserves the exact weight symmetry.
    """
    img = as_image(img)
    params = params or PatchParams()
    side = 2 * params.patch_radius + 1
    if img.shape[0] < side or img.shape[1] < side:
        raise ValueError(
            f"image {img.shape[:2]} smaller than the {side}x{side} patch"
        )
    sv = rgb_to_sv(img)
    dist_s = _patch_distances([sv[:, :, 0], sv[:, :, 1]], params)
    dist_v = _patch_distances([sv[:, :, 2]], params)
    return _assemble(img.shape[:2], dist_s, dist_v, params)


def build_channel_graph(raster, params: PatchParams | None = None) -> NonlocalGraph:
    """Similarity graph of a single scalar raster (per-channel baseline).

    Both weight channels of the returned graph carry the same grayscale
    patch weights, so the graph plugs into the same operator machinery.
    """
    raster = np.asarray(raster, dtype=np.float64)
    if raster.ndim != 2:
        raise ValueError(f"expected a 2-D raster, got shape {raster.shape}")
    if not np.all(np.isfinite(raster)):
        raise ValueError("raster contains NaN or Inf")
    params = params or PatchParams()
    side = 2 * params.patch_radius + 1
    if raster.shape[0] < side or raster.shape[1] < side:
        raise ValueError(
            f"raster {raster.shape} smaller than the {side}x{side} patch"
        )
    dist = _patch_distances([raster], params)
    return _assemble(raster.shape, dist, dist, params)


def _check_raster(x, graph: NonlocalGraph, pair: bool) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    want = graph.shape + ((2,) if pair else ())
    flat = (graph.n, 2) if pair else (graph.n,)
    if x.shape == want:
        return x.reshape(flat)
    if x.shape == flat:
        return x
    raise ValueError(f"raster shape {x.shape} does not match graph {want}")


def nl_gradient(x, graph: NonlocalGraph, channel: str) -> np.ndarray:
    """Edge-indexed difference (x(j) - x(i)) * sqrt(w(i, j)).

    ``channel`` selects the weight ("saturation" expects an (H, W, 2)
    raster pair, "value" a scalar raster). The result aligns with the
    graph's directed edge order.
    """
    pair = channel == "saturation"
    x = _check_raster(x, graph, pair)
    sw = np.sqrt(graph.weights(channel))
    if pair:
        return (x[graph.indices] - x[graph.edge_src]) * sw[:, None]
    return (x[graph.indices] - x[graph.edge_src]) * sw


def nl_divergence(p, graph: NonlocalGraph, channel: str) -> np.ndarray:
    """Adjoint-consistent divergence: sum_j (p(i,j) - p(j,i)) sqrt(w(i,j))."""
    p = np.asarray(p, dtype=np.float64)
    pair = channel == "saturation"
    want = (graph.n_edges, 2) if pair else (graph.n_edges,)
    if p.shape != want:
        raise ValueError(f"field shape {p.shape} does not match graph edges {want}")
    sw = np.sqrt(graph.weights(channel))
    h, w = graph.shape
    if pair:
        contrib = (p - p[graph.reverse]) * sw[:, None]
        out = np.empty((graph.n, 2))
        for k in range(2):
            out[:, k] = np.bincount(graph.edge_src, weights=contrib[:, k], minlength=graph.n)
        return out.reshape(h, w, 2)
    contrib = (p - p[graph.reverse]) * sw
    return np.bincount(graph.edge_src, weights=contrib, minlength=graph.n).reshape(h, w)


def nl_laplacian(x, graph: NonlocalGraph, channel: str) -> np.ndarray:
    """Graph Laplacian 2 * sum_j (x(j) - x(i)) w(i, j) on a scalar raster."""
    x = _check_raster(x, graph, pair=False)
    w = graph.weights(channel)
    contrib = 2.0 * (x[graph.indices] - x[graph.edge_src]) * w
    out = np.bincount(graph.edge_src, weights=contrib, minlength=graph.n)
    return out.reshape(graph.shape)


def nl_inner(a, b) -> float:
    """Sum over all directed edges of the pointwise product.

    Pair-valued fields are summed componentwise into a single scalar.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"field shapes differ: {a.shape} vs {b.shape}")
    return float(np.sum(a * b))


_MAGIC = b"NLG1"


def save_graph(graph: NonlocalGraph, path) -> None:
    """Write the graph as a little-endian binary cache.

    Layout: magic "NLG1", uint32 pixel count, uint32 degree per pixel,
    then per directed edge a (uint32 neighbor, float64 ws, float64 wv)
    triple in adjacency order.
    """
    path = Path(path)
    degrees = np.diff(graph.indptr).astype("<u4")
    triples = np.empty(
        graph.n_edges, dtype=[("j", "<u4"), ("ws", "<f8"), ("wv", "<f8")]
    )
    triples["j"] = graph.indices
    triples["ws"] = graph.ws
    triples["wv"] = graph.wv
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", graph.n))
        fh.write(degrees.tobytes())
        fh.write(triples.tobytes())


def load_graph(path, shape: tuple[int, int]) -> NonlocalGraph:
    """Read a graph cache written by :func:`save_graph`.

    ``shape`` supplies the raster dimensions the cache was built for;
    the stored pixel count must match.
    """
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a graph cache (bad magic)")
    (n,) = struct.unpack_from("<I", raw, 4)
    if n != shape[0] * shape[1]:
        raise ValueError(
            f"{path}: cache holds {n} pixels, expected {shape[0] * shape[1]}"
        )
    off = 8
    degrees = np.frombuffer(raw, dtype="<u4", count=n, offset=off).astype(np.int64)
    off += 4 * n
    n_edges = int(degrees.sum())
    triples = np.frombuffer(
        raw, dtype=[("j", "<u4"), ("ws", "<f8"), ("wv", "<f8")], count=n_edges, offset=off
    )
    indptr = np.concatenate([[0], np.cumsum(degrees)])
    graph = NonlocalGraph(
        tuple(shape),
        indptr,
        triples["j"].astype(np.int64),
        triples["ws"].astype(np.float64),
        triples["wv"].astype(np.float64),
    )
    graph.validate()
    return graph
