import numpy as np

from dirh2.blocktree import build_block_tree
from dirh2.clustering import build_cluster_tree, level_diameter
from dirh2.directions import build_directions
from dirh2.geometry import build_sphere_mesh

ETA1, ETA2 = 20.0, 5.0


def sphere_system(level, kappa, leaf_size=16, parabolic=True):
    """Mesh, cluster tree, directions and block tree for the sphere setups."""
    mesh = build_sphere_mesh(level)
    tree = build_cluster_tree(mesh.midpoints, leaf_size)
    deltas = [level_diameter(tree, l) for l in range(tree.depth + 1)]
    dirs = build_directions(deltas, kappa, ETA1)
    bt = build_block_tree(tree, dirs, kappa, ETA1, ETA2, parabolic=parabolic)
    return mesh, tree, dirs, bt


def line_system(n, kappa, leaf_size=16):
    """Kernel matrix on a segment: the cluster tree is binary (two nonempty
    half-cells per split), so every non-leaf cluster has exactly two sons
    and blocks appear on several levels."""
    pts = np.zeros((n, 3))
    pts[:, 0] = np.linspace(0.0, 1.0, n)
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    np.fill_diagonal(d, 1.0)
    dense = np.exp(1j * kappa * d) / (4 * np.pi * d)
    np.fill_diagonal(dense, 1.0 / n)
    tree = build_cluster_tree(pts, leaf_size)
    deltas = [level_diameter(tree, l) for l in range(tree.depth + 1)]
    dirs = build_directions(deltas, kappa, ETA1)
    bt = build_block_tree(tree, dirs, kappa, ETA1, ETA2)
    return dense, tree, dirs, bt


def dense_accessor(dense):
    return lambda rows, cols: dense[np.ix_(rows, cols)]
