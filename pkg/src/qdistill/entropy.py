"""Von Neumann entropy, quantum relative entropy and candidate upper bounds.

All quantities are in bits. A relative entropy whose first argument leaks out
of the second argument's support is the explicit value :data:`INFINITE`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .linalg_core import DensityOperator, spectral_decompose
from .mixtures import LabelDistribution, MultiCopy, PairingDistribution, resolve

LABEL_TYPES = (LabelDistribution, PairingDistribution)

INFINITE = math.inf
SUPPORT_REL_TOL = 1e-10
LEAK_TOL = 1e-10


def _support_threshold(lam: np.ndarray, rel_tol: float) -> float:
    top = float(np.max(np.abs(lam))) if lam.size else 0.0
    return rel_tol * top


def format_bits(value: float):
    """JSON-friendly form: a number, or the string ``"infinite"``."""
    return "infinite" if math.isinf(value) else value


@dataclass(frozen=True)
class EntropyResult:
    value_bits: float
    method: str
    support_contained: bool
    witness: Optional[object] = field(default=None, compare=False)

    def __post_init__(self):
        if math.isinf(self.value_bits) == self.support_contained:
            raise ValueError("INFINITE must occur exactly when support containment fails")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value_bits)

    def to_json(self) -> dict:
        out = {
            "value_bits": format_bits(self.value_bits),
            "method": self.method,
            "support_contained": self.support_contained,
        }
        if self.witness is not None:
            w = self.witness
            out["witness"] = [list(x) for x in w] if isinstance(w, tuple) else np.asarray(w).tolist()
        return out


def _eig(rho: Union[DensityOperator, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    return spectral_decompose(m)


def von_neumann_entropy(rho: Union[DensityOperator, np.ndarray], rel_tol: float = SUPPORT_REL_TOL) -> float:
    """``-sum lambda log2 lambda`` over the support of ``rho``."""
    lam, _ = _eig(rho)
    if lam[-1] < -1e-10:
        raise ValueError(f"not positive semidefinite: min eigenvalue {lam[-1]:.3e}")
    lam = lam[lam > _support_threshold(lam, rel_tol)]
    return float(max(0.0, -math.fsum(float(x) * math.log2(float(x)) for x in lam)))


def _leak(rho_m: np.ndarray, sigma_vecs: np.ndarray) -> tuple[float, np.ndarray]:
    """Weight of ``rho`` outside span(sigma_vecs) and the most-leaked direction."""
    dim = rho_m.shape[0]
    proj_out = np.eye(dim) - sigma_vecs @ sigma_vecs.conj().T
    outside = proj_out @ rho_m @ proj_out
    outside = (outside + outside.conj().T) / 2
    lam, vecs = np.linalg.eigh(outside)
    return float(np.trace(outside).real), vecs[:, -1]


def support_contained_dense(
    rho: Union[DensityOperator, np.ndarray],
    sigma: Union[DensityOperator, np.ndarray],
    rel_tol: float = SUPPORT_REL_TOL,
    leak_tol: float = LEAK_TOL,
) -> tuple[bool, Optional[np.ndarray]]:
    r = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    lam_s, vec_s = _eig(sigma)
    on = lam_s > _support_threshold(lam_s, rel_tol)
    leak, direction = _leak(r, vec_s[:, on])
    if leak > leak_tol:
        return False, direction
    return True, None


def relative_entropy(
    rho: Union[DensityOperator, np.ndarray],
    sigma: Union[DensityOperator, np.ndarray],
    rel_tol: float = SUPPORT_REL_TOL,
) -> EntropyResult:
    """``S(rho||sigma) = Tr rho (log2 rho - log2 sigma)`` from dense spectra."""
    r = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    s = sigma.matrix if isinstance(sigma, DensityOperator) else np.asarray(sigma)
    if r.shape != s.shape:
        raise ValueError(f"dimension mismatch: {r.shape} vs {s.shape}")
    lam_s, vec_s = spectral_decompose(s)
    on = lam_s > _support_threshold(lam_s, rel_tol)
    leak, direction = _leak(r, vec_s[:, on])
    if leak > LEAK_TOL:
        return EntropyResult(INFINITE, "dense", False, direction)
    # Tr rho log sigma = sum_k log lambda_k <v_k|rho|v_k> over sigma's support
    weights = np.real(np.einsum("ik,ij,jk->k", vec_s[:, on].conj(), r, vec_s[:, on]))
    cross = math.fsum(float(w) * math.log2(float(lv)) for w, lv in zip(weights, lam_s[on]))
    value = -von_neumann_entropy(r, rel_tol) - cross
    return EntropyResult(float(max(0.0, value)), "dense", True)


def _check_shapes(p: LabelDistribution, q: LabelDistribution) -> None:
    if p.d != q.d or p.num_biparties != q.num_biparties:
        raise ValueError(
            f"shape mismatch: (d={p.d}, biparties={p.num_biparties}) vs "
            f"(d={q.d}, biparties={q.num_biparties})"
        )


def kl_label(p: LabelDistribution, q: LabelDistribution) -> EntropyResult:
    """Classical relative entropy between label distributions.

    Equals the quantum relative entropy because both states are diagonal in
    the same Bell-product basis.
    """
    _check_shapes(p, q)
    terms = []
    for s, ps in p.support.items():
        qs = q.prob(s)
        if qs <= 0:
            return EntropyResult(INFINITE, "label", False, s)
        terms.append(ps * math.log2(ps / qs))
    return EntropyResult(float(max(0.0, math.fsum(terms))), "label", True)


def support_contained(p, q):
    """Whether supp(p) lies inside supp(q), with a violating witness when not.

    Accepts two :class:`LabelDistribution` (witness: a label string) or two
    dense operators (witness: a leaked eigenvector).
    """
    if isinstance(p, LABEL_TYPES) and isinstance(q, LABEL_TYPES):
        _check_shapes(p, q)
        for s in p.support:
            if q.prob(s) <= 0:
                return False, s
        return True, None
    if isinstance(p, LABEL_TYPES) or isinstance(q, LABEL_TYPES):
        raise TypeError("support_contained needs two operands of the same kind")
    pm = p.matrix if isinstance(p, DensityOperator) else np.asarray(p)
    qm = q.matrix if isinstance(q, DensityOperator) else np.asarray(q)
    if pm.shape != qm.shape:
        raise ValueError(f"shape mismatch: {pm.shape} vs {qm.shape}")
    return support_contained_dense(pm, qm)


def formal_count_bound(p: LabelDistribution, q: LabelDistribution) -> float:
    """``log2(|supp q| / |supp p|)`` for uniform distributions.

    This is the relative entropy the two uniform distributions would have if
    supp(p) were inside supp(q); containment is deliberately not checked.
    """
    if not (p.is_uniform() and q.is_uniform()):
        raise ValueError("formal_count_bound needs distributions uniform over their supports")
    return math.log2(len(q)) - math.log2(len(p))


@dataclass(frozen=True)
class CandidateReport:
    """Upper bound on E_r(target) from one candidate separable state."""

    target: str
    candidate: str
    result: EntropyResult
    halved: bool
    formal_count_bits: float
    note: str

    @property
    def bound_bits(self) -> float:
        return self.result.value_bits

    def to_json(self) -> dict:
        return {
            "target": self.target,
            "candidate": self.candidate,
            "bound_bits": format_bits(self.bound_bits),
            "result": self.result.to_json(),
            "halved": self.halved,
            "formal_count_bits": self.formal_count_bits,
            "note": self.note,
        }


def er_candidate_report(target, candidate, halve: bool = False, method: str = "label") -> CandidateReport:
    """Evaluate ``S(target || candidate)`` as an upper bound on E_r(target).

    Parameters
    ----------
    target, candidate
        State descriptors from :mod:`qdistill.mixtures` (``FourParty``,
        ``FullMixture``, ``MultiCopy``, ``Pairing``).
    halve
        Only for a target that is a two-fold tensor power: divide the bound by
        two, reading it as a per-copy bound. The report records that this step
        (which assumes ``2 E_r(x) <= E_r(x (x) x)``) was applied.
    method
        ``"label"`` (classical KL) or ``"dense"`` (spectral, under the cap).
    """
    tm, cm = resolve(target), resolve(candidate)
    if method == "label":
        res = kl_label(tm.labels, cm.labels)
    elif method == "dense":
        res = relative_entropy(tm.labels.to_dense(), cm.labels.to_dense())
    else:
        raise ValueError(f"unknown method {method!r}")
    try:
        formal = formal_count_bound(tm.labels, cm.labels)
    except ValueError:
        formal = math.nan
    notes = []
    if halve:
        if not (isinstance(target, MultiCopy) and target.power == 2):
            raise ValueError("halving applies only to a two-fold tensor power target")
        res = EntropyResult(res.value_bits / 2, res.method, res.support_contained, res.witness)
        formal = formal / 2
        notes.append("halving step applied: bound divided by 2 assuming 2 E_r(x) <= E_r(x (x) x)")
    if res.is_infinite:
        notes.append(
            f"support of target not contained in candidate (witness {res.witness}); "
            "relative entropy is infinite, formal count reported separately"
        )
    else:
        notes.append("finite relative entropy to the candidate")
    return CandidateReport(target.describe(), candidate.describe(), res, halve, formal, "; ".join(notes))
