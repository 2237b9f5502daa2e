"""
Quadtree and Barnes-Hut estimate of the t-SNE gradient

The tree is stored in flat arrays. Each node covers a contiguous range of
``order`` (points sorted into tree order), so "cell contains point i" is a
range test. Traversal runs for a whole block of query points at once: the
frontier is a list of (point, node) pairs that is either summarized, evaluated
exactly (leaves) or expanded into child pairs, level by level. Expansion keeps
each point's pairs in the same relative order whatever else is in the block,
so per-point sums do not depend on how points are split across workers.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

from src.errors import ParameterError
from src.tsne.affinities import AffinityMatrix
from src.tsne.objective import exact_repulsion
from src.utils.parallel import map_blocks

logger = logging.getLogger(__name__)

MAX_DEPTH = 48


@dataclass(frozen=True)
class QuadTree:
    center_of_mass: np.ndarray   # (nodes, 2)
    count: np.ndarray            # (nodes,)
    width: np.ndarray            # (nodes,) side length of the square cell
    start: np.ndarray            # (nodes,) first slot in ``order``
    end: np.ndarray              # (nodes,) one past the last slot
    children: np.ndarray         # (nodes, 4), -1 where empty
    is_leaf: np.ndarray          # (nodes,)
    order: np.ndarray            # point indices in tree order
    position: np.ndarray         # slot of each point in ``order``

    @property
    def n_nodes(self) -> int:
        return self.count.shape[0]


def build_quadtree(Y: np.ndarray) -> QuadTree:
    """
    Build a quadtree over 2-D points

    Cells split into quadrants (SW, SE, NW, NE) until they hold one point, all
    their points coincide, or MAX_DEPTH is reached.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] != 2:
        raise ParameterError(f"Quadtree needs N x 2 points, got shape {Y.shape}")

    lo = Y.min(axis=0)
    hi = Y.max(axis=0)
    root_width = float(np.max(hi - lo)) * (1.0 + 1e-9) or 1.0
    root_center = 0.5 * (lo + hi)

    com, counts, widths, starts, ends, children, leaves = [], [], [], [], [], [], []
    order: list[int] = []

    def build(indices: np.ndarray, center: np.ndarray, width: float, depth: int) -> int:
        node = len(counts)
        pts = Y[indices]
        com.append(pts.mean(axis=0))
        counts.append(indices.size)
        widths.append(width)
        starts.append(len(order))
        ends.append(-1)
        children.append([-1, -1, -1, -1])
        coincident = bool(np.all(pts == pts[0]))
        leaf = indices.size == 1 or coincident or depth >= MAX_DEPTH
        leaves.append(leaf)

        if leaf:
            order.extend(indices.tolist())
        else:
            east = pts[:, 0] > center[0]
            north = pts[:, 1] > center[1]
            quadrant = east.astype(np.int64) + 2 * north.astype(np.int64)
            half = 0.5 * width
            for q in range(4):
                members = indices[quadrant == q]
                if members.size == 0:
                    continue
                offset = np.array([0.5 * half if q & 1 else -0.5 * half,
                                   0.5 * half if q & 2 else -0.5 * half])
                children[node][q] = build(members, center + offset, half, depth + 1)
        ends[node] = len(order)
        return node

    build(np.arange(Y.shape[0]), root_center, root_width, 0)

    order_arr = np.array(order, dtype=np.int64)
    position = np.empty_like(order_arr)
    position[order_arr] = np.arange(order_arr.size)
    return QuadTree(
        center_of_mass=np.array(com),
        count=np.array(counts, dtype=np.float64),
        width=np.array(widths),
        start=np.array(starts, dtype=np.int64),
        end=np.array(ends, dtype=np.int64),
        children=np.array(children, dtype=np.int64),
        is_leaf=np.array(leaves, dtype=bool),
        order=order_arr,
        position=position,
    )


def _repulsion_block(
    tree: QuadTree,
    Y: np.ndarray,
    theta: float,
    block: range
) -> tuple[np.ndarray, np.ndarray]:
    points = np.arange(block.start, block.stop)
    size = points.size
    forces = np.zeros((size, 2))
    z = np.zeros(size)

    local = np.arange(size)
    nodes = np.zeros(size, dtype=np.int64)
    theta_sq = theta * theta

    while local.size:
        pt = points[local]
        diff = Y[pt] - tree.center_of_mass[nodes]
        dist_sq = np.einsum("ij,ij->i", diff, diff)
        slot = tree.position[pt]
        contains = (tree.start[nodes] <= slot) & (slot < tree.end[nodes])
        leaf = tree.is_leaf[nodes]

        # cell diagonal / dist < theta, never for cells holding the query point
        summarize = ~leaf & ~contains & (2.0 * tree.width[nodes] ** 2 < theta_sq * dist_sq)
        if summarize.any():
            w = 1.0 / (1.0 + dist_sq[summarize])
            n_cell = tree.count[nodes[summarize]]
            target = local[summarize]
            z += np.bincount(target, weights=n_cell * w, minlength=size)
            weighted = (n_cell * w * w)[:, None] * diff[summarize]
            forces[:, 0] += np.bincount(target, weights=weighted[:, 0], minlength=size)
            forces[:, 1] += np.bincount(target, weights=weighted[:, 1], minlength=size)

        if leaf.any():
            leaf_local = local[leaf]
            leaf_nodes = nodes[leaf]
            lengths = tree.end[leaf_nodes] - tree.start[leaf_nodes]
            target = np.repeat(leaf_local, lengths)
            firsts = np.repeat(tree.start[leaf_nodes] - np.cumsum(lengths) + lengths, lengths)
            members = tree.order[firsts + np.arange(lengths.sum())]
            keep = members != points[target]
            target = target[keep]
            members = members[keep]
            pair_diff = Y[points[target]] - Y[members]
            w = 1.0 / (1.0 + np.einsum("ij,ij->i", pair_diff, pair_diff))
            z += np.bincount(target, weights=w, minlength=size)
            weighted = (w * w)[:, None] * pair_diff
            forces[:, 0] += np.bincount(target, weights=weighted[:, 0], minlength=size)
            forces[:, 1] += np.bincount(target, weights=weighted[:, 1], minlength=size)

        expand = ~leaf & ~summarize
        child_nodes = tree.children[nodes[expand]]
        present = child_nodes >= 0
        local = np.repeat(local[expand], 4)[present.ravel()]
        nodes = child_nodes[present]

    return forces, z


def barnes_hut_repulsion(
    Y: np.ndarray,
    theta: float,
    n_threads: int = 1,
    tree: Optional[QuadTree] = None
) -> tuple[np.ndarray, np.ndarray]:
    """
    Estimate per-point repulsive forces sum_j W_ij^2 (y_i - y_j) and Z contributions

    Args:
        Y: N x 2 embedding
        theta: Opening angle in [0, 1]; 0 opens every cell
        n_threads: Worker threads
        tree: Prebuilt quadtree over Y

    Returns:
        Tuple of (N x 2 unnormalized forces, per-point sums of W_ij)
    """
    if not 0.0 <= theta <= 1.0:
        raise ParameterError(f"theta must lie in [0, 1], got {theta}")
    Y = np.asarray(Y, dtype=np.float64)
    n = Y.shape[0]

    if np.all(Y == Y[0]):
        logger.debug("All embedding points coincide; using exact repulsion")
        forces, _ = exact_repulsion(Y)
        return forces, np.full(n, float(n - 1))

    tree = tree or build_quadtree(Y)
    parts = map_blocks(lambda block: _repulsion_block(tree, Y, theta, block), n, n_threads)
    forces = np.concatenate([f for f, _ in parts])
    z = np.concatenate([z for _, z in parts])
    return forces, z


def attractive_forces(P: sparse.csr_matrix, Y: np.ndarray) -> np.ndarray:
    """sum_j P_ij W_ij (y_i - y_j) over the stored entries of P"""
    coo = P.tocoo()
    rows, cols, vals = coo.row, coo.col, coo.data
    diff = Y[rows] - Y[cols]
    w = 1.0 / (1.0 + np.einsum("ij,ij->i", diff, diff))
    weighted = (vals * w)[:, None] * diff
    n = Y.shape[0]
    return np.column_stack([
        np.bincount(rows, weights=weighted[:, 0], minlength=n),
        np.bincount(rows, weights=weighted[:, 1], minlength=n),
    ])


def barnes_hut_terms(
    P,
    Y: np.ndarray,
    theta: float,
    n_threads: int = 1
) -> tuple[np.ndarray, float]:
    """
    Barnes-Hut gradient together with the estimated normalizer Z

    Returns:
        Tuple of (N x 2 gradient, Z)
    """
    if isinstance(P, AffinityMatrix):
        P = P.entries
    P = sparse.csr_matrix(P)
    Y = np.asarray(Y, dtype=np.float64)
    if P.shape != (Y.shape[0], Y.shape[0]):
        raise ParameterError(f"Shape mismatch: P {P.shape} vs {Y.shape[0]} points")

    attractive = attractive_forces(P, Y)
    repulsive, z = barnes_hut_repulsion(Y, theta, n_threads)
    Z = float(np.sum(z))
    return 4.0 * (attractive - repulsive / Z), Z


def barnes_hut_gradient(P, Y: np.ndarray, theta: float, n_threads: int = 1) -> np.ndarray:
    """
    Gradient of KL(P || Q) with the repulsive term estimated on a quadtree

    Args:
        P: Sparse (or dense) symmetric affinities; only stored entries attract
        Y: N x 2 embedding
        theta: Opening angle in [0, 1]
        n_threads: Worker threads for the traversal

    Returns:
        N x 2 gradient matrix
    """
    grad, _ = barnes_hut_terms(P, Y, theta, n_threads)
    return grad


def sparse_kl_divergence(P, Y: np.ndarray, Z: float, floor: float = 1e-12) -> float:
    """
    KL(P || Q) over the stored entries of P, with Q_ij = W_ij / Z

    Equivalent to the dense KL when every non-zero P_ij is stored.
    """
    if isinstance(P, AffinityMatrix):
        P = P.entries
    coo = sparse.coo_matrix(P)
    mask = coo.data > 0
    rows, cols, p = coo.row[mask], coo.col[mask], coo.data[mask]
    diff = Y[rows] - Y[cols]
    q = 1.0 / (1.0 + np.einsum("ij,ij->i", diff, diff)) / Z
    return float(np.sum(p * (np.log(np.maximum(p, floor)) - np.log(np.maximum(q, floor)))))
