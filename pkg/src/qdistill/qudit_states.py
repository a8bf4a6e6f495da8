"""Generalized Bell states in d x d, Weyl operators and the Fourier basis.

The d**2 maximally entangled states are

    |psi_nm> = d**-0.5 * sum_j exp(2 pi i j n / d) |j> (x) |(j + m) mod d>

and ``(I (x) X**m Z**n) |psi_00> = |psi_nm>`` with ``X|j> = |j+1>`` and
``Z|j> = exp(2 pi i j / d)|j>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .linalg_core import SubsystemLayout, ptrace

NORM_TOL = 1e-12


@dataclass(frozen=True, order=True)
class BellLabel:
    """Index pair ``(n, m)`` of ``|psi_nm>``; ``n`` is the phase, ``m`` the shift."""

    n: int
    m: int
    d: int

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if not (0 <= self.n < self.d and 0 <= self.m < self.d):
            raise ValueError(f"label ({self.n}, {self.m}) out of range for d={self.d}")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.n, self.m)

    def __str__(self) -> str:
        return f"({self.n},{self.m})"


def all_labels(d: int) -> list[BellLabel]:
    return [BellLabel(n, m, d) for n in range(d) for m in range(d)]


@dataclass(frozen=True)
class Ket:
    """Normalized pure state with its subsystem layout."""

    vector: np.ndarray = field(repr=False)
    layout: SubsystemLayout

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex).reshape(-1)
        if v.size != self.layout.dim:
            raise ValueError(f"vector of size {v.size} does not match layout dimension {self.layout.dim}")
        norm = np.linalg.norm(v)
        if abs(norm - 1) > NORM_TOL * max(1, v.size):
            raise ValueError(f"ket is not normalized (norm {norm})")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def density(self) -> np.ndarray:
        return np.outer(self.vector, self.vector.conj())


def basis_ket(d: int, j: int, party: str = "A") -> Ket:
    v = np.zeros(d, dtype=complex)
    v[j] = 1
    return Ket(v, SubsystemLayout((d,), (party,)))


def bell_vector(d: int, n: int, m: int) -> np.ndarray:
    v = np.zeros(d * d, dtype=complex)
    j = np.arange(d)
    v[j * d + (j + m) % d] = np.exp(2j * np.pi * j * n / d) / np.sqrt(d)
    return v


def bell_state(label: BellLabel, parties: tuple[str, str] = ("A", "B")) -> Ket:
    return Ket(bell_vector(label.d, label.n, label.m), SubsystemLayout.uniform(label.d, parties))


def shift_operator(d: int) -> np.ndarray:
    """Cyclic shift ``X|j> = |j+1 mod d>``."""
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def phase_operator(d: int) -> np.ndarray:
    """Clock ``Z|j> = exp(2 pi i j / d)|j>``."""
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def weyl_operator(label: BellLabel) -> np.ndarray:
    """``W_nm = X**m Z**n``, the second-qudit twist taking psi_00 to psi_nm."""
    d = label.d
    x = np.linalg.matrix_power(shift_operator(d), label.m)
    z = np.linalg.matrix_power(phase_operator(d), label.n)
    return x @ z


def weyl_from_ints(d: int, n: int, m: int) -> np.ndarray:
    return weyl_operator(BellLabel(n % d, m % d, d))


def fourier_basis(d: int) -> list[Ket]:
    """Vectors ``|f_a> = d**-0.5 sum_j exp(-2 pi i j a / d)|j>`` for a = 0..d-1."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    j = np.arange(d)
    layout = SubsystemLayout((d,), ("A",))
    return [Ket(np.exp(-2j * np.pi * j * a / d) / np.sqrt(d), layout) for a in range(d)]


def computational_basis(d: int) -> list[Ket]:
    return [basis_ket(d, j) for j in range(d)]


def is_maximally_entangled(psi: Ket, tol: float = 1e-10) -> tuple[bool, float]:
    """Check that both one-qudit reductions of ``psi`` equal ``I/d``.

    Returns the verdict and the worst max-entry deviation over both sides.
    """
    dims = psi.layout.dims
    if len(dims) != 2 or dims[0] != dims[1]:
        raise ValueError(f"expected two qudits of equal dimension, got dims {dims}")
    d = dims[0]
    rho = psi.density()
    target = np.eye(d) / d
    dev = max(np.max(np.abs(ptrace(rho, dims, [q]) - target)) for q in (0, 1))
    return bool(dev <= tol), float(dev)


def fidelity(a: Ket | np.ndarray, b: Ket | np.ndarray) -> float:
    """``|<a|b>|**2`` between pure states."""
    va = a.vector if isinstance(a, Ket) else np.asarray(a).reshape(-1)
    vb = b.vector if isinstance(b, Ket) else np.asarray(b).reshape(-1)
    if va.size != vb.size:
        raise ValueError(f"dimension mismatch: {va.size} vs {vb.size}")
    return float(min(1.0, abs(np.vdot(va, vb)) ** 2))


class UnsupportedFamilyError(ValueError):
    pass


@dataclass(frozen=True)
class MesFamily:
    """d pairwise orthogonal MES sharing one Bell index.

    ``kind="shift"`` fixes ``n`` and runs over ``m``; ``kind="phase"`` fixes
    ``m`` and runs over ``n``.
    """

    kind: str
    fixed_index: int
    d: int

    def __post_init__(self):
        if self.kind not in ("shift", "phase"):
            raise ValueError(f"family kind must be 'shift' or 'phase', got {self.kind!r}")
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if not 0 <= self.fixed_index < self.d:
            raise ValueError(f"fixed index {self.fixed_index} out of range for d={self.d}")

    @classmethod
    def phase(cls, d: int, m: int = 0) -> "MesFamily":
        return cls("phase", m, d)

    @classmethod
    def shift(cls, d: int, n: int = 0) -> "MesFamily":
        return cls("shift", n, d)

    def members(self) -> list[BellLabel]:
        if self.kind == "shift":
            return [BellLabel(self.fixed_index, k, self.d) for k in range(self.d)]
        return [BellLabel(k, self.fixed_index, self.d) for k in range(self.d)]

    def __contains__(self, label: BellLabel) -> bool:
        if label.d != self.d:
            return False
        if self.kind == "shift":
            return label.n == self.fixed_index
        return label.m == self.fixed_index


def family_from_labels(labels: Iterable[BellLabel]) -> MesFamily:
    """Identify a supported family from an explicit label set.

    Only the shift and phase families have a single-copy LOCC protocol here;
    any other set of d labels is rejected.
    """
    labels = list(labels)
    if not labels:
        raise UnsupportedFamilyError("empty label set")
    d = labels[0].d
    pairs = {lb.pair for lb in labels}
    if len(pairs) != d or len(labels) != d:
        raise UnsupportedFamilyError(f"need exactly d={d} distinct labels, got {len(pairs)}")
    ns = {n for n, _ in pairs}
    ms = {m for _, m in pairs}
    if len(ns) == 1:
        return MesFamily.shift(d, ns.pop())
    if len(ms) == 1:
        return MesFamily.phase(d, ms.pop())
    raise UnsupportedFamilyError(
        f"labels {sorted(pairs)} share neither n nor m; only shift/phase families "
        "have an implemented single-copy discrimination protocol"
    )
