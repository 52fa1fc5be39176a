"""Content blocks of a PSD operator along a packet tree.

The content block at node w is sqrt(R) P_w sqrt(R): a PSD piece of R
supported on the node's subspace after square-root conjugation. At any
fixed depth the blocks sum back to R, and block traces are consistent
under refinement, so they define cylinder weights on the tree (total
mass = trace of R). Vector energies <x, C_w x> = ||P_w sqrt(R) x||^2
give per-node densities relative to those weights.

Block trace weights are evaluated through the identity
tr(sqrt(R) P_w sqrt(R)) = tr(P_w R), which needs no square root; the
dense-block route is kept as an independent cross-check in tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AbsoluteContinuityViolation,
    DimensionMismatchError,
    NumericalBreakdownError,
)
from .psdcore import PsdOperator, SymMatrix, as_entries, hs_norm, make_psd, trace
from .tree import PacketNode, PacketTree


@dataclass(frozen=True)
class ContentBlock:
    node: PacketNode
    operator: PsdOperator
    trace_weight: float
    hs_weight: float


@dataclass(frozen=True)
class ContentDecomposition:
    """Depth-slice of content blocks, in lexicographic node order."""

    depth: int
    blocks: tuple[ContentBlock, ...]
    source_trace: float

    def to_rows(self, include_blocks: bool = False) -> list[dict]:
        rows = []
        for blk in self.blocks:
            row = {
                "word": blk.node.word,
                "trace_weight": blk.trace_weight,
                "hs_weight": blk.hs_weight,
            }
            if include_blocks:
                row["block"] = [float(v) for v in blk.operator.matrix.ravel()]
            rows.append(row)
        return rows


@dataclass(frozen=True)
class CylinderWeights:
    """Masses tr(C_w(R)) for every node up to the tree's max depth."""

    max_depth: int
    source_trace: float
    rows: tuple[tuple[str, int, float], ...]

    def mass(self, node) -> float:
        word = node.word if isinstance(node, PacketNode) else node
        for w, _, m in self.rows:
            if w == word:
                return m
        raise KeyError(word)

    def by_depth(self, n: int) -> list[tuple[str, float]]:
        return [(word, mass) for word, depth, mass in self.rows if depth == n]

    def to_rows(self) -> list[dict]:
        return [{"word": w, "depth": d, "mass": m} for w, d, m in self.rows]


def _check_dims(r: PsdOperator, tree: PacketTree) -> None:
    if r.dim != tree.ambient_dim:
        raise DimensionMismatchError(
            f"operator dim {r.dim} != tree ambient dim {tree.ambient_dim}"
        )


def node_trace_weight(entries: np.ndarray, tree: PacketTree, node: PacketNode) -> float:
    """tr(P_w A) evaluated through the node basis (no square root)."""
    b = tree.basis(node)
    return float(np.sum((b @ entries) * b))


def trace_scores(a, tree: PacketTree, n: int) -> np.ndarray:
    """Block trace weights tr(P_w A) for all depth-n nodes, in node order."""
    e = as_entries(a)
    return np.array([node_trace_weight(e, tree, nd) for nd in tree.nodes_at(n)])


def hs_scores_squared(a, tree: PacketTree, n: int) -> np.ndarray:
    """Squared HS norms of the content blocks, via ||C_w(A)||^2 = ||B A B^T||_F^2."""
    e = as_entries(a)
    out = np.empty(len(tree.nodes_at(n)))
    for i, nd in enumerate(tree.nodes_at(n)):
        b = tree.basis(nd)
        blk = b @ e @ b.T
        out[i] = float(np.sum(blk * blk))
    return out


def content_operator(
    r: PsdOperator, tree: PacketTree, node: PacketNode, tol: float | None = None
) -> ContentBlock:
    """Dense content block sqrt(R) P_w sqrt(R), symmetrized and PSD-clamped."""
    _check_dims(r, tree)
    b = tree.basis(node)
    m = b @ r.sqrt_entries()
    op = make_psd(SymMatrix(m.T @ m), tol)
    return ContentBlock(node, op, trace(op), hs_norm(op))


def depth_decomposition(
    r: PsdOperator, tree: PacketTree, n: int, tol: float | None = None
) -> ContentDecomposition:
    """All depth-n content blocks; verifies that they sum back to R."""
    _check_dims(r, tree)
    blocks = tuple(content_operator(r, tree, nd, tol) for nd in tree.nodes_at(n))
    total = np.zeros_like(r.matrix)
    for blk in blocks:
        total = total + blk.operator.matrix
    r_fro = hs_norm(r)
    err = float(np.max(np.abs(total - r.matrix)))
    if err > 1e-8 * (1.0 + r_fro):
        raise NumericalBreakdownError(
            0, f"depth-{n} blocks fail to reconstruct the source: max error {err:.3e}"
        )
    return ContentDecomposition(n, blocks, trace(r))


def cylinder_weights(r: PsdOperator, tree: PacketTree) -> CylinderWeights:
    """Masses for every node with |w| <= max_depth; additivity verified.

    Tiny negative rounding noise is clamped to zero so all masses are
    nonnegative; the root mass equals trace(R) exactly by construction.
    """
    _check_dims(r, tree)
    e = r.matrix
    masses = {}
    rows = []
    for node in tree.all_nodes():
        mass = max(node_trace_weight(e, tree, node), 0.0)
        masses[node.word] = mass
        rows.append((node.word, node.depth, mass))
    total = trace(r)
    budget = 1e-9 * (1.0 + abs(total))
    if abs(masses[tree.root.word] - total) > budget:
        raise NumericalBreakdownError(
            0, f"root mass {masses[tree.root.word]:.6e} != trace {total:.6e}"
        )
    for node in tree.all_nodes():
        kids = tree.children(node)
        if not kids:
            continue
        gap = abs(masses[node.word] - sum(masses[k.word] for k in kids))
        if gap > budget:
            raise NumericalBreakdownError(
                0, f"cylinder additivity fails at {node.word!r}: gap {gap:.3e}"
            )
    return CylinderWeights(tree.max_depth, total, tuple(rows))


def vector_weight(r: PsdOperator, tree: PacketTree, x, node: PacketNode) -> float:
    """Packet energy ||P_w sqrt(R) x||^2 of the vector x at node w."""
    _check_dims(r, tree)
    vx = np.asarray(x, dtype=np.float64)
    if vx.shape != (r.dim,):
        raise DimensionMismatchError(f"vector shape {vx.shape} != ({r.dim},)")
    y = tree.basis(node) @ (r.sqrt_entries() @ vx)
    return float(y @ y)


def discrete_density(r: PsdOperator, tree: PacketTree, x, n: int) -> dict[PacketNode, float]:
    """Per-node energy density at depth n: vector weight over cylinder mass.

    Nodes whose mass is below 1e-12 * trace(R) are omitted when the vector
    weight vanishes too; a nonzero vector weight on a zero-mass node raises
    AbsoluteContinuityViolation (possible only through rounding defects,
    since a vanishing trace forces the whole block to vanish).
    """
    _check_dims(r, tree)
    vx = np.asarray(x, dtype=np.float64)
    if vx.shape != (r.dim,):
        raise DimensionMismatchError(f"vector shape {vx.shape} != ({r.dim},)")
    eps = 1e-12 * trace(r)
    sx = r.sqrt_entries() @ vx
    out = {}
    for node in tree.nodes_at(n):
        mu = node_trace_weight(r.matrix, tree, node)
        y = tree.basis(node) @ sx
        nu = float(y @ y)
        if mu > eps:
            out[node] = nu / mu
        elif nu > eps:
            raise AbsoluteContinuityViolation(
                f"node {node.word!r} has mass {mu:.3e} but vector weight {nu:.3e}"
            )
    return out


def parallelogram_check(r: PsdOperator, tree: PacketTree, x, y, n: int) -> float:
    """Max depth-n violation of the parallelogram law for vector weights."""
    _check_dims(r, tree)
    vx = np.asarray(x, dtype=np.float64)
    vy = np.asarray(y, dtype=np.float64)
    s = r.sqrt_entries()
    imgs = [s @ (vx + vy), s @ (vx - vy), s @ vx, s @ vy]
    worst = 0.0
    for node in tree.nodes_at(n):
        b = tree.basis(node)
        e_sum, e_diff, e_x, e_y = (float(np.sum((b @ z) ** 2)) for z in imgs)
        worst = max(worst, abs(e_sum + e_diff - 2.0 * e_x - 2.0 * e_y))
    return worst
