"""Packet trees: node words, per-node orthonormal bases, projections.

Two realizations are shipped, both dyadic:

* ``shannon``: contiguous frequency bands on an ambient dimension 2**levels,
  where the node at word w and depth n owns the band of size 2**(levels-n)
  starting at offset m(w) * 2**(levels-n) (m(w) = the word read as a binary
  integer). Frequency index k lives at array position k + 2**(levels-1),
  so projections are exact diagonal 0/1 matrices.
* ``filterbank-1d`` / ``filterbank-2d``: orthogonal two-channel filter bank
  iterated along the word (lowpass taps for child 0, highpass for child 1)
  with periodic boundary; 2D uses the separable tensor product on square
  patches, nodes being pairs of equal-length words.

Node ordering is lexicographic everywhere; 2D words are serialized as
"row,col" which preserves pair-lexicographic order under string compare.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .errors import (
    InvalidDepthError,
    InvalidFilterError,
    MalformedInputError,
    UnknownNodeError,
)
from .psdcore import PsdOperator, SymMatrix, make_psd

_FILTER_TOL = 1e-10


@dataclass(frozen=True)
class PacketNode:
    """Tree node identified by its word; depth equals the word length."""

    word: str
    depth: int

    def is_pair(self) -> bool:
        return "," in self.word

    def pair(self) -> tuple[str, str]:
        row, _, col = self.word.partition(",")
        return row, col


@dataclass(frozen=True)
class FilterPair:
    """Orthogonal two-channel filter pair (lowpass h, highpass g)."""

    h: tuple[float, ...]
    g: tuple[float, ...]

    @staticmethod
    def from_lowpass(taps) -> "FilterPair":
        """Derive g as the alternating-sign flip of h and validate both.

        Checks sum(h) = sqrt(2) and double-shift orthonormality
        sum_k h[k] h[k+2j] = delta_{j,0} to 1e-10.
        """
        h = tuple(float(x) for x in taps)
        n = len(h)
        if n < 2 or n % 2 != 0:
            raise InvalidFilterError(f"tap count must be even and >= 2, got {n}")
        if abs(sum(h) - math.sqrt(2.0)) > _FILTER_TOL:
            raise InvalidFilterError(f"taps must sum to sqrt(2), got {sum(h):.12f}")
        for j in range(n // 2):
            acc = sum(h[k] * h[k + 2 * j] for k in range(n - 2 * j))
            want = 1.0 if j == 0 else 0.0
            if abs(acc - want) > _FILTER_TOL:
                raise InvalidFilterError(
                    f"double-shift orthonormality fails at shift {2 * j}: {acc:.3e}"
                )
        g = tuple((-1.0) ** k * h[n - 1 - k] for k in range(n))
        return FilterPair(h, g)


def haar_filter() -> FilterPair:
    return FilterPair.from_lowpass([1.0 / math.sqrt(2.0)] * 2)


def d4_filter() -> FilterPair:
    s3 = math.sqrt(3.0)
    scale = 4.0 * math.sqrt(2.0)
    return FilterPair.from_lowpass(
        [(1.0 + s3) / scale, (3.0 + s3) / scale, (3.0 - s3) / scale, (1.0 - s3) / scale]
    )


def named_filter(name: str) -> FilterPair:
    try:
        return {"haar": haar_filter, "d4": d4_filter}[name.lower()]()
    except KeyError:
        raise InvalidFilterError(f"unknown filter {name!r}; expected haar or d4") from None


def filter_from_json(obj) -> FilterPair:
    """Parse {"h": [...]} with g derived from h."""
    if not isinstance(obj, dict) or "h" not in obj:
        raise MalformedInputError('filter JSON must have an "h" key')
    return FilterPair.from_lowpass(obj["h"])


class PacketTree:
    """Immutable tree of nodes with orthonormal row bases per node."""

    __slots__ = ("realization", "ambient_dim", "max_depth", "_levels", "_basis", "_children")

    def __init__(self, realization, ambient_dim, max_depth, levels, basis, children):
        self.realization = realization
        self.ambient_dim = int(ambient_dim)
        self.max_depth = int(max_depth)
        self._levels = levels
        self._basis = basis
        self._children = children
        for b in basis.values():
            b.setflags(write=False)

    @property
    def root(self) -> PacketNode:
        return self._levels[0][0]

    def nodes_at(self, n: int) -> list[PacketNode]:
        if not 0 <= n <= self.max_depth:
            raise InvalidDepthError(f"depth {n} out of range [0, {self.max_depth}]")
        return list(self._levels[n])

    def has_node(self, node: PacketNode) -> bool:
        return node.word in self._basis and len(self._levels) > node.depth and node in self._levels[node.depth]

    def basis(self, node: PacketNode) -> np.ndarray:
        """Orthonormal rows spanning the node's subspace."""
        try:
            return self._basis[node.word]
        except KeyError:
            raise UnknownNodeError(f"node {node.word!r} is not in this tree") from None

    def children(self, node: PacketNode) -> tuple[PacketNode, ...]:
        return self._children.get(node.word, ())

    def all_nodes(self):
        for level in self._levels:
            yield from level

    def subspace_dim(self, node: PacketNode) -> int:
        return self.basis(node).shape[0]

    def __repr__(self):
        return (
            f"PacketTree({self.realization!r}, ambient_dim={self.ambient_dim}, "
            f"max_depth={self.max_depth})"
        )


def _dyadic_words(n: int) -> list[str]:
    return ["".join(bits) for bits in product("01", repeat=n)]


def build_shannon_tree(levels: int, max_depth: int) -> PacketTree:
    """Frequency-band tree with diagonal projections; ambient dim 2**levels."""
    if levels < 1:
        raise InvalidDepthError(f"levels must be >= 1, got {levels}")
    if not 1 <= max_depth <= levels:
        raise InvalidDepthError(f"max_depth must be in [1, levels={levels}], got {max_depth}")
    dim = 2**levels
    eye = np.eye(dim)
    tree_levels, basis, children = [], {}, {}
    for n in range(max_depth + 1):
        words = _dyadic_words(n)
        nodes = [PacketNode(w, n) for w in words]
        tree_levels.append(nodes)
        size = 2 ** (levels - n)
        for w in words:
            start = int(w, 2) * size if w else 0
            basis[w] = eye[start : start + size].copy()
            if n < max_depth:
                children[w] = (PacketNode(w + "0", n + 1), PacketNode(w + "1", n + 1))
    return PacketTree("shannon", dim, max_depth, tree_levels, basis, children)


def _analysis_stage(taps: tuple[float, ...], d: int) -> np.ndarray:
    """Periodized convolve-and-downsample matrix, shape (d/2, d)."""
    out = np.zeros((d // 2, d))
    for i in range(d // 2):
        for k, t in enumerate(taps):
            out[i, (2 * i + k) % d] += t
    return out


def build_filter_tree_1d(filters: FilterPair, signal_len: int, depth: int) -> PacketTree:
    """Iterated two-channel filter bank; requires 2**depth | signal_len."""
    if depth < 1:
        raise InvalidDepthError(f"depth must be >= 1, got {depth}")
    if signal_len < 1 or signal_len % (2**depth) != 0:
        raise InvalidDepthError(
            f"2^depth = {2**depth} must divide signal_len = {signal_len}"
        )
    tree_levels = [[PacketNode("", 0)]]
    basis = {"": np.eye(signal_len)}
    children = {}
    for n in range(1, depth + 1):
        d = signal_len // 2 ** (n - 1)
        low = _analysis_stage(filters.h, d)
        high = _analysis_stage(filters.g, d)
        nodes = []
        for parent in tree_levels[n - 1]:
            pb = basis[parent.word]
            kids = (PacketNode(parent.word + "0", n), PacketNode(parent.word + "1", n))
            basis[kids[0].word] = low @ pb
            basis[kids[1].word] = high @ pb
            children[parent.word] = kids
            nodes.extend(kids)
        tree_levels.append(sorted(nodes, key=lambda nd: nd.word))
    return PacketTree("filterbank-1d", signal_len, depth, tree_levels, basis, children)


def build_filter_tree_2d(filters: FilterPair, patch_side: int, depth: int) -> PacketTree:
    """Separable tensor-product tree on patch_side x patch_side patches.

    Depth-n nodes are pairs of depth-n words (4**n nodes), serialized
    "row,col"; the basis is the Kronecker product of the 1D bases, matching
    row-major patch flattening.
    """
    one_d = build_filter_tree_1d(filters, patch_side, depth)
    dim = patch_side * patch_side
    tree_levels, basis, children = [], {}, {}
    for n in range(depth + 1):
        words = [nd.word for nd in one_d.nodes_at(n)]
        nodes = []
        for row, col in product(words, words):
            node = PacketNode(f"{row},{col}", n)
            nodes.append(node)
            basis[node.word] = np.kron(
                one_d.basis(PacketNode(row, n)), one_d.basis(PacketNode(col, n))
            )
            if n < depth:
                children[node.word] = tuple(
                    PacketNode(f"{row}{a},{col}{b}", n + 1) for a in "01" for b in "01"
                )
        tree_levels.append(nodes)
    return PacketTree("filterbank-2d", dim, depth, tree_levels, basis, children)


def projection(tree: PacketTree, node: PacketNode) -> PsdOperator:
    """Orthogonal projection onto the node's subspace, as a PSD operator."""
    b = tree.basis(node)
    return make_psd(SymMatrix(b.T @ b))


def depth_nodes(tree: PacketTree, n: int) -> list[PacketNode]:
    """Depth-n nodes in lexicographic word order."""
    return tree.nodes_at(n)


@dataclass(frozen=True)
class TreeValidationReport:
    """Max violation observed per tree invariant."""

    partition: float
    child_sum: float
    child_orthogonality: float
    basis_orthonormality: float

    def max_violation(self) -> float:
        return max(self.partition, self.child_sum, self.child_orthogonality, self.basis_orthonormality)

    def ok(self, tol: float = 1e-10) -> bool:
        return self.max_violation() <= tol

    def as_dict(self) -> dict:
        return {
            "partition": self.partition,
            "child_sum": self.child_sum,
            "child_orthogonality": self.child_orthogonality,
            "basis_orthonormality": self.basis_orthonormality,
        }


def validate_tree(tree: PacketTree) -> TreeValidationReport:
    """Numerically check the partition, splitting, and orthonormality axioms."""
    eye = np.eye(tree.ambient_dim)
    proj = {}
    for node in tree.all_nodes():
        b = tree.basis(node)
        proj[node.word] = b.T @ b
    partition = 0.0
    for n in range(tree.max_depth + 1):
        acc = sum(proj[nd.word] for nd in tree.nodes_at(n))
        partition = max(partition, float(np.max(np.abs(acc - eye))))
    child_sum = 0.0
    child_orth = 0.0
    for node in tree.all_nodes():
        kids = tree.children(node)
        if not kids:
            continue
        acc = sum(proj[k.word] for k in kids)
        child_sum = max(child_sum, float(np.max(np.abs(proj[node.word] - acc))))
        for u, w in combinations(kids, 2):
            child_orth = max(child_orth, float(np.max(np.abs(proj[u.word] @ proj[w.word]))))
    ortho = 0.0
    for node in tree.all_nodes():
        b = tree.basis(node)
        gram = b @ b.T
        ortho = max(ortho, float(np.max(np.abs(gram - np.eye(b.shape[0])))))
    return TreeValidationReport(partition, child_sum, child_orth, ortho)


def tree_description(tree: PacketTree) -> dict:
    """Diagnostic JSON payload: realization, dims, and per-node words."""
    return {
        "realization": tree.realization,
        "ambient_dim": tree.ambient_dim,
        "max_depth": tree.max_depth,
        "nodes": [
            {"word": nd.word, "depth": nd.depth, "dim": tree.subspace_dim(nd)}
            for nd in tree.all_nodes()
        ],
    }


class ShannonSymbol:
    """Nonnegative multiplier values r(k) for k in [-2**(levels-1), 2**(levels-1))."""

    __slots__ = ("levels", "values")

    def __init__(self, levels: int, values):
        if levels < 1:
            raise MalformedInputError(f"levels must be >= 1, got {levels}")
        vals = np.asarray(values, dtype=np.float64)
        if vals.shape != (2**levels,):
            raise MalformedInputError(
                f"symbol needs {2**levels} values for levels={levels}, got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise MalformedInputError("symbol values must be finite")
        self.levels = int(levels)
        self.values = vals
        self.values.setflags(write=False)

    def value(self, k: int) -> float:
        """r(k); index k counts from -2**(levels-1)."""
        return float(self.values[k + 2 ** (self.levels - 1)])

    def to_matrix(self) -> SymMatrix:
        return SymMatrix(np.diag(self.values))

    def to_operator(self, tol: float | None = None) -> PsdOperator:
        """Diagonal PSD operator; negative symbol values raise NotPositiveError."""
        return make_psd(self.to_matrix(), tol)

    @staticmethod
    def from_json(obj) -> "ShannonSymbol":
        if not isinstance(obj, dict) or "levels" not in obj or "r" not in obj:
            raise MalformedInputError('symbol JSON must have "levels" and "r" keys')
        levels = obj["levels"]
        if not isinstance(levels, int):
            raise MalformedInputError('"levels" must be an integer')
        return ShannonSymbol(levels, obj["r"])
