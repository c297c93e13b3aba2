"""Directional nested-basis matrix representation and its fast matvec.

The matrix is stored as
  * per (leaf cluster, direction) basis matrices,
  * per (son cluster, parent direction) transfer matrices that define the
    bases of non-leaf clusters implicitly,
  * one small coupling matrix per admissible block,
  * one dense block per inadmissible block.

A matvec runs in three phases: a bottom-up forward transformation of the
input through the column basis, coupling products, and a top-down backward
transformation scattering through the row basis; nearfield blocks multiply
directly.  Every stored matrix is applied exactly once.

The container is immutable after construction and matvecs keep all scratch
per call, so concurrent reads are safe; coupling and nearfield sums run in
ascending block order, which fixes the floating-point result.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .blocktree import ADMISSIBLE, INADMISSIBLE, Block, BlockTree
from .clustering import Cluster, ClusterTree
from .directions import DirectionHierarchy
from .linalg import read_cmx, write_cmx

__all__ = [
    "DirectionalClusterBasis",
    "DH2Matrix",
    "expand_factor",
    "expand_dense",
    "storage_report",
    "StorageReport",
    "save_dh2",
    "load_dh2",
]


@dataclass
class DirectionalClusterBasis:
    """Basis keys are (cluster id, direction index at the cluster's level);
    transfer keys are (son cluster id, direction index at the parent level)."""

    leaf: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    transfer: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    rank: dict[tuple[int, int], int] = field(default_factory=dict)

    def used_by_cluster(self) -> dict[int, list[int]]:
        used: dict[int, list[int]] = {}
        for (cid, c) in self.rank:
            used.setdefault(cid, []).append(c)
        for cid in used:
            used[cid].sort()
        return used


@dataclass
class DH2Matrix:
    tree: ClusterTree
    directions: DirectionHierarchy
    blocks: BlockTree
    row_basis: DirectionalClusterBasis
    col_basis: DirectionalClusterBasis
    coupling: dict[int, np.ndarray]
    nearfield: dict[int, np.ndarray]

    def __post_init__(self):
        self._row_used = self.row_basis.used_by_cluster()
        self._col_used = self.col_basis.used_by_cluster()

    @property
    def n(self) -> int:
        return self.tree[self.tree.root].size

    # -- matvec ---------------------------------------------------------

    def _forward(self, basis, used, x, counter=None) -> dict:
        xhat: dict[tuple[int, int], np.ndarray] = {}
        # clusters are stored parent-first, so descending ids visit sons first
        for cid in range(len(self.tree) - 1, -1, -1):
            dirs = used.get(cid)
            if not dirs:
                continue
            cluster = self.tree[cid]
            for c in dirs:
                if cluster.is_leaf:
                    xhat[(cid, c)] = basis.leaf[(cid, c)].conj().T @ x[cluster.index_set]
                    if counter is not None:
                        counter["leaf"] += 1
                else:
                    c2 = self.directions.son_index(cluster.level, c)
                    acc = np.zeros(basis.rank[(cid, c)], dtype=np.complex128)
                    for son in cluster.sons:
                        acc += basis.transfer[(son, c)].conj().T @ xhat[(son, c2)]
                        if counter is not None:
                            counter["transfer"] += 1
                    xhat[(cid, c)] = acc
        return xhat

    def _backward(self, basis, used, yhat, y, counter=None) -> None:
        for cid in range(len(self.tree)):  # parent-first
            dirs = used.get(cid)
            if not dirs:
                continue
            cluster = self.tree[cid]
            for c in dirs:
                coeff = yhat[(cid, c)]
                if cluster.is_leaf:
                    y[cluster.index_set] += basis.leaf[(cid, c)] @ coeff
                    if counter is not None:
                        counter["leaf"] += 1
                else:
                    c2 = self.directions.son_index(cluster.level, c)
                    for son in cluster.sons:
                        yhat[(son, c2)] += basis.transfer[(son, c)] @ coeff
                        if counter is not None:
                            counter["transfer"] += 1

    def matvec(self, x: np.ndarray, counter=None) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (self.n,):
            raise ValueError(f"expected a vector of length {self.n}")
        y = np.zeros(self.n, dtype=np.complex128)
        xhat = self._forward(self.col_basis, self._col_used, x, counter)
        yhat = {
            (cid, c): np.zeros(self.row_basis.rank[(cid, c)], dtype=np.complex128)
            for cid, dirs in self._row_used.items()
            for c in dirs
        }
        for bid in self.blocks.admissible_leaves:
            b = self.blocks[bid]
            yhat[(b.t, b.c_index)] += self.coupling[bid] @ xhat[(b.s, b.c_index)]
            if counter is not None:
                counter["coupling"] += 1
        self._backward(self.row_basis, self._row_used, yhat, y, counter)
        for bid in self.blocks.inadmissible_leaves:
            b = self.blocks[bid]
            y[self.tree[b.t].index_set] += self.nearfield[bid] @ x[self.tree[b.s].index_set]
            if counter is not None:
                counter["nearfield"] += 1
        return y

    def matvec_adjoint(self, x: np.ndarray, counter=None) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (self.n,):
            raise ValueError(f"expected a vector of length {self.n}")
        y = np.zeros(self.n, dtype=np.complex128)
        xhat = self._forward(self.row_basis, self._row_used, x, counter)
        yhat = {
            (cid, c): np.zeros(self.col_basis.rank[(cid, c)], dtype=np.complex128)
            for cid, dirs in self._col_used.items()
            for c in dirs
        }
        for bid in self.blocks.admissible_leaves:
            b = self.blocks[bid]
            yhat[(b.s, b.c_index)] += self.coupling[bid].conj().T @ xhat[(b.t, b.c_index)]
            if counter is not None:
                counter["coupling"] += 1
        self._backward(self.col_basis, self._col_used, yhat, y, counter)
        for bid in self.blocks.inadmissible_leaves:
            b = self.blocks[bid]
            y[self.tree[b.s].index_set] += (
                self.nearfield[bid].conj().T @ x[self.tree[b.t].index_set]
            )
            if counter is not None:
                counter["nearfield"] += 1
        return y

    def stored_matrix_count(self) -> int:
        return (
            len(self.row_basis.leaf)
            + len(self.row_basis.transfer)
            + len(self.col_basis.leaf)
            + len(self.col_basis.transfer)
            + len(self.coupling)
            + len(self.nearfield)
        )


def expand_factor(
    basis: DirectionalClusterBasis,
    tree: ClusterTree,
    dirs: DirectionHierarchy,
    cid: int,
    c: int,
) -> np.ndarray:
    """Explicit basis matrix of (cluster, direction), rows aligned with the
    cluster's sorted index set.  Non-leaf factors are expanded through the
    transfer matrices."""
    cluster = tree[cid]
    if cluster.is_leaf:
        return basis.leaf[(cid, c)]
    out = np.zeros((cluster.size, basis.rank[(cid, c)]), dtype=np.complex128)
    c2 = dirs.son_index(cluster.level, c)
    for son in cluster.sons:
        sub = expand_factor(basis, tree, dirs, son, c2)
        pos = np.searchsorted(cluster.index_set, tree[son].index_set)
        out[pos] = sub @ basis.transfer[(son, c)]
    return out


def expand_dense(a: DH2Matrix, cap: int = 4096) -> np.ndarray:
    """Assemble the represented matrix block by block (test oracle)."""
    n = a.n
    if n > cap:
        raise ValueError(f"dense expansion capped at {cap} rows, matrix has {n}")
    out = np.zeros((n, n), dtype=np.complex128)
    for bid in a.blocks.admissible_leaves:
        b = a.blocks[bid]
        v = expand_factor(a.row_basis, a.tree, a.directions, b.t, b.c_index)
        w = expand_factor(a.col_basis, a.tree, a.directions, b.s, b.c_index)
        rows = a.tree[b.t].index_set
        cols = a.tree[b.s].index_set
        out[np.ix_(rows, cols)] = v @ a.coupling[bid] @ w.conj().T
    for bid in a.blocks.inadmissible_leaves:
        b = a.blocks[bid]
        rows = a.tree[b.t].index_set
        cols = a.tree[b.s].index_set
        out[np.ix_(rows, cols)] = a.nearfield[bid]
    return out


@dataclass
class StorageReport:
    leaf_entries: int
    transfer_entries: int
    coupling_entries: int
    nearfield_entries: int

    @property
    def total(self) -> int:
        return (
            self.leaf_entries
            + self.transfer_entries
            + self.coupling_entries
            + self.nearfield_entries
        )

    def mem_per_dof_kib(self, n: int) -> float:
        return self.total * 16.0 / 1024.0 / n


def storage_report(a: DH2Matrix) -> StorageReport:
    leaf = sum(m.size for m in a.row_basis.leaf.values())
    leaf += sum(m.size for m in a.col_basis.leaf.values())
    transfer = sum(m.size for m in a.row_basis.transfer.values())
    transfer += sum(m.size for m in a.col_basis.transfer.values())
    coupling = sum(m.size for m in a.coupling.values())
    nearfield = sum(m.size for m in a.nearfield.values())
    return StorageReport(leaf, transfer, coupling, nearfield)


# -- DH2v1 container --------------------------------------------------------


def _basis_manifest(basis: DirectionalClusterBasis, prefix: str, outdir: Path) -> dict:
    leaf_entries = []
    for (cid, c) in sorted(basis.leaf):
        name = f"{prefix}_leaf_{cid}_{c}.cmx"
        write_cmx(outdir / name, basis.leaf[(cid, c)])
        leaf_entries.append([cid, c, name])
    transfer_entries = []
    for (cid, c) in sorted(basis.transfer):
        name = f"{prefix}_tr_{cid}_{c}.cmx"
        write_cmx(outdir / name, basis.transfer[(cid, c)])
        transfer_entries.append([cid, c, name])
    ranks = [[cid, c, int(basis.rank[(cid, c)])] for (cid, c) in sorted(basis.rank)]
    return {"leaf": leaf_entries, "transfer": transfer_entries, "rank": ranks}


def save_dh2(a: DH2Matrix, directory: str | Path) -> None:
    """Write the DH2v1 container: a JSON manifest plus one CMX1 file per
    stored matrix."""
    outdir = Path(directory)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "version": "DH2v1",
        "n": a.n,
        "tree": {
            "root": a.tree.root,
            "depth": a.tree.depth,
            "level_extents": a.tree.level_extents.tolist(),
            "clusters": [
                {
                    "id": c.id,
                    "level": c.level,
                    "parent": c.parent,
                    "index_set": c.index_set.tolist(),
                    "cell_min": c.cell_min.tolist(),
                    "cell_max": c.cell_max.tolist(),
                    "sons": list(c.sons),
                }
                for c in a.tree.clusters
            ],
        },
        "directions": {
            "levels": [lv.tolist() for lv in a.directions.levels],
            "son_maps": [sm.tolist() for sm in a.directions.son_maps],
        },
        "blocks": {
            "root": a.blocks.root,
            "kappa": a.blocks.kappa,
            "eta1": a.blocks.eta1,
            "eta2": a.blocks.eta2,
            "parabolic": a.blocks.parabolic,
            "nodes": [
                {
                    "id": b.id,
                    "t": b.t,
                    "s": b.s,
                    "status": b.status,
                    "c_index": b.c_index,
                    "sons": list(b.sons),
                }
                for b in a.blocks.blocks
            ],
        },
        "row_basis": _basis_manifest(a.row_basis, "row", outdir),
        "col_basis": _basis_manifest(a.col_basis, "col", outdir),
        "coupling": [],
        "nearfield": [],
    }
    for bid in sorted(a.coupling):
        name = f"s_{bid}.cmx"
        write_cmx(outdir / name, a.coupling[bid])
        manifest["coupling"].append([bid, name])
    for bid in sorted(a.nearfield):
        name = f"nf_{bid}.cmx"
        write_cmx(outdir / name, a.nearfield[bid])
        manifest["nearfield"].append([bid, name])
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, separators=(",", ":"))
    )


def _load_basis(entry: dict, directory: Path) -> DirectionalClusterBasis:
    basis = DirectionalClusterBasis()
    for cid, c, name in entry["leaf"]:
        basis.leaf[(cid, c)] = read_cmx(directory / name)
    for cid, c, name in entry["transfer"]:
        basis.transfer[(cid, c)] = read_cmx(directory / name)
    for cid, c, k in entry["rank"]:
        basis.rank[(cid, c)] = k
    return basis


def load_dh2(directory: str | Path) -> DH2Matrix:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest.get("version") != "DH2v1":
        raise ValueError("not a DH2v1 container")
    tm = manifest["tree"]
    clusters = [
        Cluster(
            id=c["id"],
            level=c["level"],
            parent=c["parent"],
            index_set=np.array(c["index_set"], dtype=np.int64),
            cell_min=np.array(c["cell_min"]),
            cell_max=np.array(c["cell_max"]),
            sons=list(c["sons"]),
        )
        for c in tm["clusters"]
    ]
    tree = ClusterTree(
        clusters=clusters,
        root=tm["root"],
        depth=tm["depth"],
        level_extents=np.array(tm["level_extents"]),
    )
    dm = manifest["directions"]
    dirs = DirectionHierarchy(
        levels=[np.array(lv, dtype=float).reshape(-1, 3) for lv in dm["levels"]],
        son_maps=[np.array(sm, dtype=np.int64) for sm in dm["son_maps"]],
    )
    bm = manifest["blocks"]
    blocks = [
        Block(
            id=b["id"],
            t=b["t"],
            s=b["s"],
            status=b["status"],
            c_index=b["c_index"],
            sons=list(b["sons"]),
        )
        for b in bm["nodes"]
    ]
    bt = BlockTree(
        blocks=blocks,
        root=bm["root"],
        admissible_leaves=[b.id for b in blocks if b.status == ADMISSIBLE],
        inadmissible_leaves=[b.id for b in blocks if b.status == INADMISSIBLE],
        kappa=bm["kappa"],
        eta1=bm["eta1"],
        eta2=bm["eta2"],
        parabolic=bm["parabolic"],
    )
    return DH2Matrix(
        tree=tree,
        directions=dirs,
        blocks=bt,
        row_basis=_load_basis(manifest["row_basis"], directory),
        col_basis=_load_basis(manifest["col_basis"], directory),
        coupling={bid: read_cmx(directory / name) for bid, name in manifest["coupling"]},
        nearfield={bid: read_cmx(directory / name) for bid, name in manifest["nearfield"]},
    )
