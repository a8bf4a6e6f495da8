"""PPT checks and negativity across bipartitions of the parties."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .linalg_core import DensityOperator, SubsystemLayout, partial_transpose

PPT_TOL = 1e-10
MAX_ENUMERATED_PARTIES = 8


@dataclass(frozen=True)
class Cut:
    left: frozenset
    right: frozenset
    auxiliary: bool = False

    def __post_init__(self):
        object.__setattr__(self, "left", frozenset(self.left))
        object.__setattr__(self, "right", frozenset(self.right))
        if not self.left or not self.right:
            raise ValueError("both sides of a cut must be nonempty")
        if self.left & self.right:
            raise ValueError(f"cut sides overlap: {sorted(self.left & self.right)}")

    @classmethod
    def parse(cls, text: str) -> "Cut":
        """Parse ``"AC|BD"`` (single-letter parties) or ``"A0,A1|B0,B1"``."""
        if "|" not in text:
            raise ValueError(f"cut {text!r} must contain '|'")
        left, right = text.split("|", 1)

        def side(s: str) -> frozenset:
            s = s.strip()
            if "," in s:
                return frozenset(x.strip() for x in s.split(","))
            return frozenset(s) if s.isalpha() else frozenset([s])

        return cls(side(left), side(right))

    def label(self, order: tuple[str, ...] = ()) -> str:
        def key(p):
            return (order.index(p) if p in order else len(order), p)

        sep = "" if all(len(p) == 1 for p in self.left | self.right) else ","
        return sep.join(sorted(self.left, key=key)) + "|" + sep.join(sorted(self.right, key=key))

    def validate(self, layout: SubsystemLayout) -> None:
        names = set(layout.party_names)
        if (self.left | self.right) != names:
            raise ValueError(
                f"cut {self.label()} does not partition the parties {sorted(names)}"
            )


@dataclass(frozen=True)
class PptResult:
    cut: str
    min_pt_eig: float
    verdict: str
    negativity: float

    def to_json(self) -> dict:
        return {
            "cut": self.cut,
            "min_pt_eig": self.min_pt_eig,
            "verdict": self.verdict,
            "negativity": self.negativity,
        }


def pt_spectrum(rho: DensityOperator, cut: Cut, transpose_left: bool = False) -> np.ndarray:
    cut.validate(rho.layout)
    side = rho.layout.qudits_of_parties(cut.left if transpose_left else cut.right)
    pt = partial_transpose(rho, side)
    return np.linalg.eigvalsh((pt + pt.conj().T) / 2)


def ppt_check(rho: DensityOperator, cut: Cut, tol: float = PPT_TOL) -> PptResult:
    """Partial-transpose spectrum across ``cut`` (transposing the right side)."""
    lam = pt_spectrum(rho, cut)
    neg = max(0.0, float(-np.sum(lam[lam < -tol])))
    verdict = "PPT" if lam[0] >= -tol else "NPT"
    return PptResult(cut.label(rho.layout.party_names), float(lam[0]), verdict, neg)


def negativity(rho: DensityOperator, cut: Cut, tol: float = PPT_TOL) -> float:
    """Sum of the magnitudes of the negative partial-transpose eigenvalues."""
    return ppt_check(rho, cut, tol).negativity


def enumerate_cuts(layout: SubsystemLayout) -> list[Cut]:
    """All bipartitions of the parties, each listed once.

    Unbalanced cuts are flagged ``auxiliary``; for four parties the three
    2-vs-2 cuts AB|CD, AC|BD, AD|BC are the unflagged ones.
    """
    parties = layout.party_names
    k = len(parties)
    if k < 2:
        raise ValueError("need at least two parties to form a cut")
    if k > MAX_ENUMERATED_PARTIES:
        raise ValueError(
            f"{k} parties give {2 ** (k - 1) - 1} cuts; pass an explicit cut list "
            f"above {MAX_ENUMERATED_PARTIES} parties"
        )
    first, rest = parties[0], parties[1:]
    cuts = []
    for size in range(0, k - 1):
        for combo in itertools.combinations(rest, size):
            left = {first, *combo}
            right = set(parties) - left
            cuts.append(Cut(left, right, auxiliary=len(left) != len(right)))
    return cuts
