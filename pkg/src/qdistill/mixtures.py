"""Bell-diagonal mixtures: the four-party state, the full mixture and multi-copy states.

Every state built here is diagonal in the product Bell basis, so each has a
label form (a classical distribution over strings of Bell labels) and, when it
fits under the dense cap, an explicit density matrix. Biparty ``k`` occupies
qudits ``(2k, 2k+1)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .linalg_core import DenseCapExceeded, DensityOperator, SubsystemLayout, check_dense_dim
from .qudit_states import MesFamily, bell_vector

LabelString = tuple[tuple[int, int], ...]

FOUR_PARTIES = ("A", "B", "C", "D")


def biparty_parties(k: int) -> tuple[str, ...]:
    """Party names for ``k`` biparties: A0, B0, A1, B1, ..."""
    out: list[str] = []
    for i in range(k):
        out += [f"A{i}", f"B{i}"]
    return tuple(out)


def biparty_layout(d: int, k: int, parties: Optional[Sequence[str]] = None) -> SubsystemLayout:
    parties = biparty_parties(k) if parties is None else tuple(parties)
    if len(parties) != 2 * k:
        raise ValueError(f"need {2 * k} party names, got {len(parties)}")
    return SubsystemLayout.uniform(d, parties)


@dataclass(frozen=True)
class LabelDistribution:
    """Probability distribution over strings of Bell labels, one label per biparty."""

    d: int
    num_biparties: int
    support: dict = field(hash=False)

    def __post_init__(self):
        clean: dict[LabelString, float] = {}
        for key, p in self.support.items():
            key = tuple((int(n), int(m)) for n, m in key)
            if len(key) != self.num_biparties:
                raise ValueError(f"label string {key} has length {len(key)}, expected {self.num_biparties}")
            for n, m in key:
                if not (0 <= n < self.d and 0 <= m < self.d):
                    raise ValueError(f"label ({n},{m}) out of range for d={self.d}")
            if p < 0:
                raise ValueError(f"negative probability {p} for {key}")
            if p > 0:
                clean[key] = clean.get(key, 0.0) + float(p)
        total = math.fsum(clean.values())
        if abs(total - 1) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "support", dict(sorted(clean.items())))

    @classmethod
    def uniform(cls, d: int, strings: Sequence[LabelString]) -> "LabelDistribution":
        strings = list(dict.fromkeys(tuple(s) for s in strings))
        if not strings:
            raise ValueError("empty support")
        k = len(strings[0])
        p = 1.0 / len(strings)
        return cls(d, k, {s: p for s in strings})

    def __len__(self) -> int:
        return len(self.support)

    def prob(self, s: LabelString) -> float:
        return self.support.get(tuple(s), 0.0)

    def is_uniform(self, tol: float = 1e-12) -> bool:
        ps = list(self.support.values())
        return max(ps) - min(ps) <= tol

    def entropy_bits(self) -> float:
        return -math.fsum(p * math.log2(p) for p in self.support.values())

    def tensor(self, other: "LabelDistribution") -> "LabelDistribution":
        if other.d != self.d:
            raise ValueError("dimension mismatch")
        sup = {a + b: pa * pb for a, pa in self.support.items() for b, pb in other.support.items()}
        return LabelDistribution(self.d, self.num_biparties + other.num_biparties, sup)

    def power(self, k: int) -> "LabelDistribution":
        if k < 1:
            raise ValueError("power must be >= 1")
        out = self
        for _ in range(k - 1):
            out = out.tensor(self)
        return out

    @property
    def layout(self) -> SubsystemLayout:
        return biparty_layout(self.d, self.num_biparties)

    def to_dense(self, layout: Optional[SubsystemLayout] = None) -> DensityOperator:
        layout = self.layout if layout is None else layout
        dim = self.d ** (2 * self.num_biparties)
        check_dense_dim(dim)
        vecs = {(n, m): bell_vector(self.d, n, m) for n in range(self.d) for m in range(self.d)}
        rho = np.zeros((dim, dim), dtype=complex)
        for s, p in self.support.items():
            v = vecs[s[0]]
            for lab in s[1:]:
                v = np.kron(v, vecs[lab])
            rho += p * np.outer(v, v.conj())
        return DensityOperator(rho, layout)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "biparties": self.num_biparties,
            "support": [{"labels": [list(x) for x in s], "p": p} for s, p in self.support.items()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LabelDistribution":
        sup = {tuple(tuple(x) for x in e["labels"]): e["p"] for e in obj["support"]}
        return cls(int(obj["d"]), int(obj["biparties"]), sup)


@dataclass(frozen=True)
class Mixture:
    """Label form of a state, plus its dense form when under the cap."""

    labels: LabelDistribution
    dense: Optional[DensityOperator] = None
    notice: str = ""


def _with_dense(labels: LabelDistribution, layout: Optional[SubsystemLayout] = None) -> Mixture:
    try:
        return Mixture(labels, labels.to_dense(layout))
    except DenseCapExceeded as exc:
        return Mixture(labels, None, str(exc))


def four_party_labels(family: MesFamily) -> LabelDistribution:
    return LabelDistribution.uniform(family.d, [(lb.pair, lb.pair) for lb in family.members()])


def four_party_state(d: int, family: Optional[MesFamily] = None, dense: bool = True) -> Mixture:
    """``(1/d) sum_i |Psi_i><Psi_i|_AB (x) |Psi_i><Psi_i|_CD`` over a d-member family.

    Defaults to the phase family ``{psi_n0}``. Qudits are ordered A, B, C, D.
    """
    family = MesFamily.phase(d) if family is None else family
    if family.d != d:
        raise ValueError(f"family dimension {family.d} does not match d={d}")
    labels = four_party_labels(family)
    if not dense:
        return Mixture(labels)
    return _with_dense(labels, SubsystemLayout.uniform(d, FOUR_PARTIES))


def uniform_full_mixture(d: int, dense: bool = True) -> Mixture:
    """Equal mixture of ``|Psi_i>|Psi_i>`` over all d**2 Bell labels, on A, B, C, D."""
    pairs = [(n, m) for n in range(d) for m in range(d)]
    labels = LabelDistribution.uniform(d, [(p, p) for p in pairs])
    if not dense:
        return Mixture(labels)
    return _with_dense(labels, SubsystemLayout.uniform(d, FOUR_PARTIES))


def multi_copy_labels(d: int, n: int) -> LabelDistribution:
    if n < 1:
        raise ValueError(f"number of copies must be >= 1, got {n}")
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    pairs = [(a, b) for a in range(d) for b in range(d)]
    return LabelDistribution.uniform(d, [(p,) * n for p in pairs])


def multi_copy_state(d: int, n: int, dense: bool = True) -> Mixture:
    """``(1/d**2) sum_i |Psi_i><Psi_i|**(x)n`` on n biparties."""
    labels = multi_copy_labels(d, n)
    if not dense:
        return Mixture(labels)
    return _with_dense(labels)


def check_perfect_matching(pairing: Sequence[Sequence[int]]) -> int:
    """Validate a perfect matching on 0..2k-1 and return the number of biparties."""
    flat = [int(i) for pair in pairing for i in pair]
    if any(len(pair) != 2 for pair in pairing):
        raise ValueError("every pair must have exactly two members")
    if sorted(flat) != list(range(len(flat))) or not flat:
        raise ValueError(f"pairing {list(map(tuple, pairing))} is not a perfect matching")
    return len(flat)


class PairingDistribution:
    """Uniform distribution of ``rho_2`` on each pair of a perfect matching.

    Both members of a pair carry the same label; pairs are independent and
    uniform over the d**2 labels. The support has d**(2 * pairs) strings, so
    membership and size are computed directly and the explicit table is only
    built on demand.
    """

    def __init__(self, d: int, pairing: Sequence[Sequence[int]]):
        self.num_biparties = check_perfect_matching(pairing)
        self.d = d
        self.pairs = tuple((int(i), int(j)) for i, j in pairing)
        self._explicit: Optional[LabelDistribution] = None

    def __len__(self) -> int:
        return self.d ** (2 * len(self.pairs))

    def prob(self, s: LabelString) -> float:
        s = tuple(tuple(x) for x in s)
        if len(s) != self.num_biparties:
            return 0.0
        if all(s[i] == s[j] for i, j in self.pairs):
            return 1.0 / len(self)
        return 0.0

    def is_uniform(self, tol: float = 1e-12) -> bool:
        return True

    def entropy_bits(self) -> float:
        return 2 * len(self.pairs) * math.log2(self.d)

    def explicit(self) -> LabelDistribution:
        if self._explicit is None:
            if len(self) > 10**6:
                raise DenseCapExceeded(f"pairing support of {len(self)} strings is too large to list")
            labels = [(a, b) for a in range(self.d) for b in range(self.d)]
            strings = []
            for choice in itertools.product(labels, repeat=len(self.pairs)):
                s: list = [None] * self.num_biparties
                for (i, j), lab in zip(self.pairs, choice):
                    s[i] = lab
                    s[j] = lab
                strings.append(tuple(s))
            self._explicit = LabelDistribution.uniform(self.d, strings)
        return self._explicit

    @property
    def support(self) -> dict:
        return self.explicit().support

    @property
    def layout(self) -> SubsystemLayout:
        return biparty_layout(self.d, self.num_biparties)

    def to_dense(self, layout: Optional[SubsystemLayout] = None) -> DensityOperator:
        check_dense_dim(self.d ** (2 * self.num_biparties))
        return self.explicit().to_dense(layout)

    def to_json(self) -> dict:
        return self.explicit().to_json()


def pairing_labels(d: int, pairing: Sequence[Sequence[int]]) -> PairingDistribution:
    return PairingDistribution(d, pairing)


def pairing_product(d: int, pairing: Sequence[Sequence[int]], dense: bool = False) -> Mixture:
    labels = pairing_labels(d, pairing)
    if not dense:
        return Mixture(labels)
    return _with_dense(labels)


def consecutive_pairing(k: int) -> list[tuple[int, int]]:
    if k % 2:
        raise ValueError(f"cannot pair an odd number ({k}) of biparties")
    return [(2 * i, 2 * i + 1) for i in range(k // 2)]


def perfect_matchings(items: Sequence[int]) -> Iterator[list[tuple[int, int]]]:
    """All perfect matchings of ``items`` ((k-1)!! of them)."""
    items = list(items)
    if not items:
        yield []
        return
    first = items[0]
    for idx in range(1, len(items)):
        rest = items[1:idx] + items[idx + 1 :]
        for sub in perfect_matchings(rest):
            yield [(first, items[idx])] + sub


def bell_product_basis(d: int, k: int) -> np.ndarray:
    """Unitary whose columns are the Bell-product vectors, in label-string order."""
    check_dense_dim(d ** (2 * k))
    single = np.column_stack([bell_vector(d, n, m) for n in range(d) for m in range(d)])
    out = single
    for _ in range(k - 1):
        out = np.kron(out, single)
    return out


def bell_basis_coefficients(rho: np.ndarray, d: int, k: int) -> tuple[dict, float]:
    """Diagonal of ``rho`` in the Bell-product basis, plus its largest off-diagonal entry.

    The dictionary maps label strings to their (real) weights; entries below
    1e-14 are dropped.
    """
    u = bell_product_basis(d, k)
    r = u.conj().T @ np.asarray(rho) @ u
    diag = np.real(np.diag(r))
    off = float(np.max(np.abs(r - np.diag(np.diag(r))))) if r.size > 1 else 0.0
    pairs = [(n, m) for n in range(d) for m in range(d)]
    coeffs = {}
    for idx, s in enumerate(itertools.product(pairs, repeat=k)):
        if abs(diag[idx]) > 1e-14:
            coeffs[s] = float(diag[idx])
    return coeffs, off


def permute_biparties(rho: np.ndarray, d: int, perm: Sequence[int]) -> np.ndarray:
    """Reorder biparties: new biparty ``i`` is old biparty ``perm[i]``."""
    k = len(perm)
    qperm = [q for b in perm for q in (2 * b, 2 * b + 1)]
    t = np.asarray(rho).reshape((d,) * (4 * k))
    axes = qperm + [2 * k + q for q in qperm]
    dim = d ** (2 * k)
    return t.transpose(axes).reshape(dim, dim)


# Descriptors let reports name a state without building it up front.


@dataclass(frozen=True)
class FourParty:
    d: int
    family: Optional[MesFamily] = None

    def build(self, dense: bool = False) -> Mixture:
        return four_party_state(self.d, self.family, dense=dense)

    def describe(self) -> str:
        fam = self.family or MesFamily.phase(self.d)
        return f"four-party(d={self.d}, {fam.kind} family, fixed={fam.fixed_index})"


@dataclass(frozen=True)
class FullMixture:
    d: int

    def build(self, dense: bool = False) -> Mixture:
        return uniform_full_mixture(self.d, dense=dense)

    def describe(self) -> str:
        return f"full-mixture(d={self.d})"


@dataclass(frozen=True)
class MultiCopy:
    """``rho_n``, optionally raised to a tensor power (``rho_n**(x)power``)."""

    d: int
    n: int
    power: int = 1

    def build(self, dense: bool = False) -> Mixture:
        labels = multi_copy_labels(self.d, self.n).power(self.power)
        return _with_dense(labels) if dense else Mixture(labels)

    def describe(self) -> str:
        base = f"rho_{self.n}(d={self.d})"
        return base if self.power == 1 else f"{base}^(x){self.power}"


@dataclass(frozen=True)
class Pairing:
    """``rho_2`` on each pair of a perfect matching of the biparties."""

    d: int
    pairs: tuple[tuple[int, int], ...]

    def build(self, dense: bool = False) -> Mixture:
        return pairing_product(self.d, self.pairs, dense=dense)

    def describe(self) -> str:
        return f"rho_2 on pairs {list(self.pairs)} (d={self.d})"


def resolve(desc) -> Mixture:
    """Build the label form (and dense form under the cap) for a descriptor."""
    if not hasattr(desc, "build"):
        raise TypeError(f"cannot resolve state descriptor {desc!r}")
    return desc.build(dense=False)


__all__ = [
    "LabelDistribution",
    "Mixture",
    "FourParty",
    "FullMixture",
    "MultiCopy",
    "Pairing",
    "four_party_state",
    "uniform_full_mixture",
    "multi_copy_state",
    "pairing_product",
    "pairing_labels",
    "multi_copy_labels",
    "perfect_matchings",
    "consecutive_pairing",
    "bell_basis_coefficients",
    "permute_biparties",
    "biparty_layout",
]
