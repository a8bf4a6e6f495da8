"""Dense complex linear algebra on multi-qudit operators.

Composite indices are row-major with qudit 0 as the most significant digit.
Matrices are plain ``numpy.ndarray`` objects; :class:`DensityOperator` pairs a
matrix with the :class:`SubsystemLayout` that names its qudits and parties.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL_BUILD = 1e-12
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
DEFAULT_DENSE_CAP = 4096


class DenseCapExceeded(ValueError):
    """Raised when a dense operator would exceed the configured dimension cap."""


class NotHermitianError(ValueError):
    pass


def dense_cap() -> int:
    """Largest matrix dimension allowed for dense storage.

    Read from ``QDISTILL_DENSE_CAP`` on every call so tests and the CLI can
    override it without reloading the module.
    """
    raw = os.environ.get("QDISTILL_DENSE_CAP")
    if raw is None:
        return DEFAULT_DENSE_CAP
    return int(raw)


def check_dense_dim(dim: int) -> None:
    cap = dense_cap()
    if dim > cap:
        raise DenseCapExceeded(
            f"dense dimension {dim} exceeds cap {cap}; use the label-space "
            "(LabelDistribution) path or raise QDISTILL_DENSE_CAP"
        )


@dataclass(frozen=True)
class SubsystemLayout:
    """Qudit dimensions plus the party holding each qudit."""

    dims: tuple[int, ...]
    parties: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))
        object.__setattr__(self, "parties", tuple(str(p) for p in self.parties))
        if len(self.dims) != len(self.parties):
            raise ValueError("every qudit must belong to exactly one party")
        if not self.dims:
            raise ValueError("layout needs at least one qudit")
        if any(x < 1 for x in self.dims):
            raise ValueError(f"invalid qudit dimensions {self.dims}")

    @classmethod
    def uniform(cls, d: int, parties: Sequence[str]) -> "SubsystemLayout":
        return cls((d,) * len(parties), tuple(parties))

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def num_qudits(self) -> int:
        return len(self.dims)

    @property
    def party_names(self) -> tuple[str, ...]:
        """Parties in order of first appearance."""
        return tuple(dict.fromkeys(self.parties))

    def qudits_of(self, party: str) -> tuple[int, ...]:
        qs = tuple(i for i, p in enumerate(self.parties) if p == party)
        if not qs:
            raise ValueError(f"party {party!r} holds no qudit in this layout")
        return qs

    def qudits_of_parties(self, parties: Iterable[str]) -> tuple[int, ...]:
        out: list[int] = []
        for p in parties:
            out.extend(self.qudits_of(p))
        return tuple(sorted(out))

    def restrict(self, keep: Iterable[int]) -> "SubsystemLayout":
        keep = sorted(keep)
        return SubsystemLayout(
            tuple(self.dims[i] for i in keep), tuple(self.parties[i] for i in keep)
        )

    def check_indices(self, qudits: Iterable[int]) -> tuple[int, ...]:
        qs = tuple(sorted(set(int(q) for q in qudits)))
        for q in qs:
            if not 0 <= q < self.num_qudits:
                raise IndexError(f"qudit index {q} out of range for {self.num_qudits} qudits")
        return qs


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, PSD, unit-trace matrix on a :class:`SubsystemLayout`."""

    matrix: np.ndarray = field(repr=False)
    layout: SubsystemLayout

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (self.layout.dim, self.layout.dim):
            raise ValueError(
                f"matrix shape {mat.shape} does not match layout dimension {self.layout.dim}"
            )
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_ket(cls, vector: np.ndarray, layout: SubsystemLayout) -> "DensityOperator":
        v = np.asarray(vector, dtype=complex).reshape(-1)
        return cls(np.outer(v, v.conj()), layout)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def validate(self, tol: float = PSD_TOL) -> None:
        """Raise ``ValueError`` unless Hermitian, PSD and trace one."""
        check_hermitian(self.matrix, HERMITIAN_TOL)
        if abs(self.trace() - 1) > 1e-10:
            raise ValueError(f"trace {self.trace()} is not 1")
        lam = np.linalg.eigvalsh(self.matrix)
        if lam[0] < -tol:
            raise ValueError(f"not positive semidefinite: min eigenvalue {lam[0]:.3e}")


def check_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {m.shape}")
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol:
        raise NotHermitianError(f"matrix is not Hermitian (max deviation {dev:.3e})")


def tensor_product(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of matrices or vectors, left to right."""
    if not mats:
        raise ValueError("need at least one operand")
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def _as_tensor(rho: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    return np.asarray(rho).reshape(tuple(dims) * 2)


def ptrace(rho: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Partial trace of a raw matrix, keeping the qudits in ``keep`` (in ascending order)."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    for q in keep:
        if not 0 <= q < n:
            raise IndexError(f"qudit index {q} out of range for {n} qudits")
    drop = [q for q in range(n) if q not in keep]
    t = _as_tensor(rho, dims)
    # einsum labels: row index i_q, column index i_q for traced qudits
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    if 2 * n > 52:
        raise ValueError("too many qudits for partial trace")
    row = letters[:n]
    col = letters[n:]
    for q in drop:
        col[q] = row[q]
    out = [row[q] for q in keep] + [col[q] for q in keep]
    expr = "".join(row) + "".join(col) + "->" + "".join(out)
    dk = int(np.prod([dims[q] for q in keep]))
    return np.einsum(expr, t).reshape(dk, dk)


def ptranspose(m: np.ndarray, dims: Sequence[int], side: Iterable[int]) -> np.ndarray:
    """Partial transpose of a raw matrix over the qudits in ``side``."""
    dims = list(dims)
    n = len(dims)
    side = set(side)
    for q in side:
        if not 0 <= q < n:
            raise IndexError(f"qudit index {q} out of range for {n} qudits")
    t = _as_tensor(m, dims)
    axes = list(range(2 * n))
    for q in side:
        axes[q], axes[n + q] = n + q, q
    dim = int(np.prod(dims))
    return np.ascontiguousarray(t.transpose(axes)).reshape(dim, dim)


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    keep = list(keep)
    if not keep:
        raise ValueError("keep set must be nonempty")
    keep = rho.layout.check_indices(keep)
    red = ptrace(rho.matrix, rho.layout.dims, keep)
    return DensityOperator(red, rho.layout.restrict(keep))


def partial_transpose(rho: DensityOperator, side: Iterable[int]) -> np.ndarray:
    side = rho.layout.check_indices(side)
    return ptranspose(rho.matrix, rho.layout.dims, side)


def spectral_decompose(m: np.ndarray, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : np.ndarray
        Real eigenvalues in descending order.
    eigenvectors : np.ndarray
        Orthonormal eigenvectors as columns, matching ``eigenvalues``.
    """
    m = np.asarray(m, dtype=complex)
    check_hermitian(m, tol)
    herm = (m + m.conj().T) / 2
    lam, vecs = np.linalg.eigh(herm)
    return lam[::-1].copy(), vecs[:, ::-1].copy()


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_ket(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


# QSM-JSON: {"dims": [...], "entries": [[re, im], ...]} row-major.
# A ket has prod(dims) entries, a matrix prod(dims)**2.


def to_qsm_json(array: np.ndarray, dims: Sequence[int]) -> dict:
    arr = np.asarray(array, dtype=complex)
    dim = int(np.prod(dims))
    if arr.size not in (dim, dim * dim):
        raise ValueError(f"array of size {arr.size} does not fit dims {list(dims)}")
    flat = arr.reshape(-1)
    return {
        "dims": [int(x) for x in dims],
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def from_qsm_json(obj: dict | str) -> tuple[np.ndarray, list[int]]:
    """Inverse of :func:`to_qsm_json`; returns ``(array, dims)``.

    Kets come back as 1-D arrays, operators as square matrices.
    """
    if isinstance(obj, str):
        obj = json.loads(obj)
    dims = [int(x) for x in obj["dims"]]
    entries = np.array([complex(re, im) for re, im in obj["entries"]], dtype=complex)
    dim = int(np.prod(dims))
    if entries.size == dim:
        return entries, dims
    if entries.size == dim * dim:
        return entries.reshape(dim, dim), dims
    raise ValueError(f"{entries.size} entries do not fit dims {dims}")
