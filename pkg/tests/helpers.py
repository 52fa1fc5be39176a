"""Shared independent oracles and constructions for the test suite."""

import numpy as np

import wpcontent as w


def random_gram(rng, dim, scale=1.0):
    g = rng.standard_normal((dim, dim))
    return w.make_psd(w.SymMatrix(scale * (g.T @ g) / dim))


def shannon_band(levels, word):
    """Frequency indices owned by a node, computed from the band formula.

    Independent of the tree implementation: the depth-n node with binary
    value m owns {-2^(levels-1) + m*2^(levels-n), ..., + (m+1)*2^(levels-n) - 1}.
    """
    n = len(word)
    m = int(word, 2) if word else 0
    size = 2 ** (levels - n)
    lo = -(2 ** (levels - 1)) + m * size
    return list(range(lo, lo + size))


def band_positions(levels, word):
    """Array positions of the band (index k stored at k + 2^(levels-1))."""
    return [k + 2 ** (levels - 1) for k in shannon_band(levels, word)]


def geometric_symbol(levels):
    """The symbol r(k) = 2^(-|k|) truncated to the ambient band."""
    half = 2 ** (levels - 1)
    return w.ShannonSymbol(levels, [2.0 ** (-abs(k)) for k in range(-half, half)])


def spread_vector(tree, n):
    """Unit vector with equal energy 1/N in every depth-n subspace."""
    nodes = tree.nodes_at(n)
    v = np.zeros(tree.ambient_dim)
    for nd in nodes:
        v += tree.basis(nd)[0]
    return v / np.sqrt(len(nodes))

def block_diagonal_gram(rng, tree, n, dim):
    """PSD operator that commutes with every depth-n projection."""
    g = rng.standard_normal((dim, dim))
    a = (g.T @ g) / dim
    pinched = w.conditional_expectation(a, tree, n)
    return w.make_psd(pinched)


def piecewise_smooth_image(size=64):
    """Smooth waves plus a bright rectangle and disc (piecewise smooth)."""
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    img = 0.35 + 0.25 * np.sin(2 * np.pi * yy / size) * np.cos(2 * np.pi * xx / size)
    img[size // 4 : size * 5 // 8, size // 8 : size * 7 // 16] += 0.3
    rr = (yy - 0.7 * size) ** 2 + (xx - 0.72 * size) ** 2
    img = np.where(rr < (0.19 * size) ** 2, 0.85, img)
    return w.ImageBuffer(np.clip(img, 0.0, 1.0))
