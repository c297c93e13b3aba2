"""Dense complex linear algebra primitives shared by assembly and compression.

All matrices are numpy ``complex128`` arrays.  The on-disk format ("CMX1")
is fixed little-endian column-major so files are portable between runs and
tools; in memory we use whatever layout numpy gives us.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "SVDResult",
    "svd",
    "truncation_rank",
    "power_iteration_norm",
    "multiply",
    "adjoint_multiply",
    "take_submatrix",
    "vstack",
    "qr_orthonormal",
    "write_cmx",
    "read_cmx",
]

_CMX_MAGIC = b"CMX1"


@dataclass
class SVDResult:
    """Factorization a = u @ diag(sigma) @ v.conj().T.

    ``u`` and ``v`` have orthonormal columns, ``sigma`` is real,
    non-negative and non-increasing.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.conj().T


def _canonical_signs(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Make the largest-magnitude entry of every left singular vector real
    # and positive; the compensating phase goes into v so the product is
    # unchanged.  Serialized bases then do not depend on LAPACK's phase
    # choices.
    if u.shape[1] == 0:
        return u, v
    idx = np.argmax(np.abs(u), axis=0)
    lead = u[idx, np.arange(u.shape[1])]
    mag = np.abs(lead)
    phase = np.where(mag > 0.0, lead / np.where(mag > 0.0, mag, 1.0), 1.0)
    return u * phase.conj(), v * phase.conj()


def svd(a: np.ndarray) -> SVDResult:
    """Singular value decomposition with a deterministic sign convention.

    Raises ``numpy.linalg.LinAlgError`` if the underlying iteration does
    not converge.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.size == 0:
        raise ValueError("svd of an empty matrix")
    if not np.isfinite(a).all():
        raise ValueError("svd input contains non-finite entries")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    u, v = _canonical_signs(u, vh.conj().T)
    return SVDResult(u=u, sigma=s, v=v)


def truncation_rank(singular_values: np.ndarray, tolerance: float, max_rank: int) -> int:
    """Smallest k with sigma_{k+1} <= tolerance, at least 1 while sigma_1 > 0,
    capped at ``max_rank``."""
    if tolerance < 0.0:
        raise ValueError("tolerance must be >= 0")
    if max_rank < 1:
        raise ValueError("max_rank must be >= 1")
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0 or s[0] == 0.0:
        return 0
    below = np.nonzero(s <= tolerance)[0]
    k = int(below[0]) if below.size else int(s.size)
    return min(max(k, 1), int(max_rank))


def power_iteration_norm(apply_a, apply_ah, dim: int, iterations: int, seed: int) -> float:
    """Estimate the spectral norm of an operator given by matvec callbacks.

    Runs power iteration on A^H A started from a seeded random vector and
    returns the Rayleigh-quotient estimate ||A v||.  If the iterate
    collapses to zero the start vector is redrawn (three attempts) before
    concluding the operator is numerically zero.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    for attempt in range(4):
        rng = np.random.default_rng(seed + attempt)
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        dead = False
        for _ in range(iterations):
            z = apply_ah(apply_a(v))
            nz = np.linalg.norm(z)
            if nz == 0.0:
                dead = True
                break
            v = z / nz
        if not dead:
            return float(np.linalg.norm(apply_a(v)))
    return 0.0


def multiply(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.asarray(a) @ np.asarray(x)


def adjoint_multiply(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T @ np.asarray(x)


def take_submatrix(a: np.ndarray, rows, cols) -> np.ndarray:
    return np.asarray(a)[np.ix_(np.asarray(rows, dtype=np.intp), np.asarray(cols, dtype=np.intp))]


def vstack(blocks) -> np.ndarray:
    return np.vstack([np.asarray(b) for b in blocks])


def qr_orthonormal(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR factorization; q has orthonormal columns."""
    q, r = np.linalg.qr(np.asarray(a, dtype=np.complex128))
    return q, r


def write_cmx(path: str | Path, a: np.ndarray) -> None:
    """Write a complex matrix in the CMX1 format.

    Layout: magic ``CMX1``, rows and cols as u64 little-endian, then the
    entries column-major as interleaved (re, im) float64 little-endian.
    """
    a = np.ascontiguousarray(np.asarray(a, dtype=np.complex128).T)  # .T: column-major payload
    with open(path, "wb") as fh:
        fh.write(_CMX_MAGIC)
        fh.write(struct.pack("<QQ", a.shape[1], a.shape[0]))
        fh.write(a.astype("<c16", copy=False).tobytes())


def read_cmx(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CMX_MAGIC:
            raise ValueError(f"not a CMX1 file: bad magic {magic!r}")
        rows, cols = struct.unpack("<QQ", fh.read(16))
        payload = fh.read(16 * rows * cols)
    if len(payload) != 16 * rows * cols:
        raise ValueError("truncated CMX1 file")
    flat = np.frombuffer(payload, dtype="<c16")
    # C-contiguous result so reloaded matrices multiply bit-identically
    return np.ascontiguousarray(flat.reshape(cols, rows).T.astype(np.complex128))
