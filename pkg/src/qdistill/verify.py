"""The verification grid behind ``qdistill verify``.

Each criterion is a function of a :class:`VerifyContext` returning a
:class:`CriterionResult`. ``d_max``/``n_max`` restrict every parameter range;
``perturb`` corrupts one amplitude of every Bell state the criteria build so the
harness can be shown to fail.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .distill import distill_four_party, distill_multi_copy, ed_summary, run_four_party
from .entropy import formal_count_bound, kl_label, relative_entropy, support_contained
from .linalg_core import (
    SubsystemLayout,
    ptrace,
    ptranspose,
    random_density,
    random_ket,
)
from .locc import (
    LoccTranscript,
    OutcomeSource,
    PureState,
    discriminate_single_copy,
    discriminate_two_copy,
    enumerate_branches,
    measure_local,
    teleport,
)
from .mixtures import (
    LabelDistribution,
    bell_basis_coefficients,
    consecutive_pairing,
    four_party_state,
    multi_copy_labels,
    multi_copy_state,
    pairing_labels,
    perfect_matchings,
    uniform_full_mixture,
)
from .qudit_states import BellLabel, MesFamily, all_labels, bell_vector, fidelity, fourier_basis, weyl_operator
from .separability import Cut, ppt_check

PERTURBATION = 1e-3


@dataclass
class VerifyContext:
    d_max: Optional[int] = None
    n_max: Optional[int] = None
    seed: int = 0
    perturb: bool = False

    def ds(self, values) -> list[int]:
        return [d for d in values if self.d_max is None or d <= self.d_max]

    def ns(self, values) -> list[int]:
        return [n for n in values if self.n_max is None or n <= self.n_max]

    def bell(self, d: int, n: int, m: int) -> np.ndarray:
        v = bell_vector(d, n, m)
        if self.perturb:
            v = v.copy()
            v[0] += PERTURBATION
        return v


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.index:2d}. {self.name}: {self.detail} ({self.seconds:.2f}s)"

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
        }


def c01_bell_orthonormality(ctx: VerifyContext) -> tuple[bool, str]:
    worst = 0.0
    ds = ctx.ds(range(2, 8))
    for d in ds:
        basis = np.column_stack([ctx.bell(d, n, m) for n in range(d) for m in range(d)])
        worst = max(worst, float(np.max(np.abs(basis.conj().T @ basis - np.eye(d * d)))))
    return worst <= 1e-12, f"d in {ds}: max Gram deviation {worst:.2e} (tol 1e-12)"


def c02_max_entanglement(ctx: VerifyContext) -> tuple[bool, str]:
    worst = 0.0
    ds = ctx.ds(range(2, 6))
    for d in ds:
        for n, m in itertools.product(range(d), repeat=2):
            v = ctx.bell(d, n, m)
            rho = np.outer(v, v.conj())
            for side in (0, 1):
                worst = max(worst, float(np.max(np.abs(ptrace(rho, [d, d], [side]) - np.eye(d) / d))))
    return worst <= 1e-12, f"d in {ds}: max reduction deviation {worst:.2e} (tol 1e-12)"


def c03_eq5_relative_entropy(ctx: VerifyContext) -> tuple[bool, str]:
    ok = True
    parts = []
    for d in ctx.ds(range(2, 6)):
        rho, sig = four_party_state(d), uniform_full_mixture(d)
        lab = kl_label(rho.labels, sig.labels).value_bits
        err = abs(lab - math.log2(d))
        ok &= err <= 1e-9
        msg = f"d={d} label err {err:.1e}"
        if rho.dense is not None and d <= 4:
            den = relative_entropy(rho.dense, sig.dense).value_bits
            ok &= abs(den - math.log2(d)) <= 1e-9 and abs(den - lab) <= 1e-9
            msg += f", dense err {abs(den - math.log2(d)):.1e}"
        parts.append(msg)
    return ok, "; ".join(parts)


def c04_even_n(ctx: VerifyContext) -> tuple[bool, str]:
    ok = True
    parts = []
    for d, m in [(2, 2), (2, 3), (3, 2), (5, 2)]:
        if d not in ctx.ds([d]) or 2 * m not in ctx.ns([2 * m]):
            continue
        val = kl_label(multi_copy_labels(d, 2 * m), pairing_labels(d, consecutive_pairing(2 * m))).value_bits
        err = abs(val - (2 * m - 2) * math.log2(d))
        ok &= err <= 1e-12
        parts.append(f"(d={d},m={m}) err {err:.1e}")
    if ctx.ds([2]) and ctx.ns([4]):
        den = relative_entropy(
            multi_copy_state(2, 4).dense, pairing_labels(2, [(0, 1), (2, 3)]).to_dense()
        ).value_bits
        ok &= abs(den - 2.0) <= 1e-9
        parts.append(f"dense 256x256 err {abs(den - 2):.1e}")
    return ok, "; ".join(parts)


def c05_discrimination(ctx: VerifyContext, sampled_runs: int = 100) -> tuple[bool, str]:
    ds = ctx.ds(range(2, 6))
    failures = 0
    branches = 0
    for d in ds:
        for kind in ("shift", "phase"):
            for fixed in range(d):
                fam = MesFamily(kind, fixed, d)
                for hidden in fam.members():
                    res = enumerate_branches(
                        lambda f: discriminate_single_copy(fam, hidden, forced=f), 2, d
                    )
                    total = sum(r.probability for _, r in res)
                    branches += len(res)
                    failures += sum(r.inferred != hidden or not r.transcript.is_locc() for _, r in res)
                    failures += abs(total - 1) > 1e-12
        for hidden in all_labels(d):
            res = enumerate_branches(lambda f: discriminate_two_copy(d, hidden, forced=f), 4, d)
            branches += len(res)
            failures += sum(r.inferred != hidden or not r.transcript.is_locc() for _, r in res)
            failures += abs(sum(r.probability for _, r in res) - 1) > 1e-12
            for s in range(sampled_runs):
                failures += discriminate_two_copy(d, hidden, rng_seed=ctx.seed + s).inferred != hidden
    return failures == 0, f"d in {ds}: {branches} exhaustive branches + sampled runs, {failures} failures"


def c06_four_party(ctx: VerifyContext) -> tuple[bool, str]:
    ok = True
    parts = []
    for d in ctx.ds(range(2, 6)):
        rep = distill_four_party(d, rng_seed=ctx.seed)
        worst = 1.0
        fam = MesFamily.phase(d)
        for hidden in fam.members():
            for _, run in enumerate_branches(
                lambda f: run_four_party(d, fam, hidden, OutcomeSource(None, f)), 2, d
            ):
                worst = min(worst, run.fidelity)
        ok &= abs(rep.yield_bits - math.log2(d)) <= 1e-12 and worst >= 1 - 1e-10 and rep.locc_audit_ok
        if d == 2:
            ok &= rep.yield_bits == 1.0
        parts.append(f"d={d} yield {rep.yield_bits:.6f}, min F {worst:.12f}")
    return ok, "; ".join(parts)


def c07_multi_copy(ctx: VerifyContext) -> tuple[bool, str]:
    ok = True
    parts = []
    for d, n in [(2, 3), (2, 4), (2, 5), (3, 3), (3, 4)]:
        if not (ctx.ds([d]) and ctx.ns([n])):
            continue
        rep = distill_multi_copy(d, n, ctx.seed)
        ok &= abs(rep.yield_bits - (n - 2) * math.log2(d)) <= 1e-12 and rep.locc_audit_ok
        ok &= all(f >= 1 - 1e-10 for f in rep.per_biparty_fidelity)
        parts.append(f"(d={d},n={n}) yield {rep.yield_bits:.4f}")
    for d in ctx.ds([2, 3]):
        for n in (1, 2):
            rep = distill_multi_copy(d, n, ctx.seed)
            ok &= rep.yield_bits == 0 and rep.reason == "separable"
    parts.append("n in {1,2}: yield 0 (separable)")
    return ok, "; ".join(parts)


def c08_ppt(ctx: VerifyContext) -> tuple[bool, str]:
    ok = True
    parts = []
    for d in ctx.ds([2, 3]):
        full = uniform_full_mixture(d).dense
        worst = min(ppt_check(full, Cut.parse(c)).min_pt_eig for c in ("AB|CD", "AC|BD", "AD|BC"))
        ok &= worst >= -1e-10
        neg = ppt_check(four_party_state(d).dense, Cut.parse("AC|BD")).negativity
        ok &= neg > 1e-6
        for n in (1, 2):
            st = multi_copy_state(d, n).dense
            side_a = [p for p in st.layout.party_names if p.startswith("A")]
            side_b = [p for p in st.layout.party_names if p.startswith("B")]
            ok &= ppt_check(st, Cut(side_a, side_b)).verdict == "PPT"
        parts.append(f"d={d}: rho^S min PT eig {worst:.1e}, rho AC|BD negativity {neg:.4f}")
    return ok, "; ".join(parts)


def c09_teleport(ctx: VerifyContext, inputs: int = 100) -> tuple[bool, str]:
    rng = np.random.default_rng(ctx.seed)
    worst = 1.0
    for d in ctx.ds(range(2, 6)):
        for i in range(inputs):
            psi = random_ket(d, rng)
            out = teleport(psi, BellLabel(0, 0, d), rng_seed=ctx.seed + i).output
            worst = min(worst, fidelity(out, psi))
    ok = worst >= 1 - 1e-10
    twisted_ok = True
    if ctx.ds([3]):
        d = 3
        psi = random_ket(d, rng)
        for ch in all_labels(d):
            matches = set()
            for forced in range(d * d):
                out = teleport(psi, ch, BellLabel(0, 0, d), forced=[forced]).output
                hits = [lb for lb in all_labels(d) if fidelity(out, weyl_operator(lb) @ psi) >= 1 - 1e-10]
                matches.add(tuple(hits))
            twisted_ok &= len(matches) == 1 and len(next(iter(matches))) == 1
    ok &= twisted_ok
    return ok, f"min fidelity {worst:.12f}; mismatched-channel twists outcome-independent: {twisted_ok}"


def c10_odd_n(ctx: VerifyContext) -> tuple[bool, str]:
    if not (ctx.ds([2]) and ctx.ns([3])):
        return True, "skipped by grid restriction"
    target = multi_copy_labels(2, 3).power(2)
    failures = 0
    witness = None
    count = 0
    for matching in perfect_matchings(range(6)):
        count += 1
        contained, w = support_contained(target, pairing_labels(2, matching))
        if contained:
            failures += 1
        witness = witness or w
    formal = formal_count_bound(target, pairing_labels(2, consecutive_pairing(6)))
    rep = ed_summary(2, 3, rng_seed=ctx.seed)
    ok = (
        count == 15
        and failures == 0
        and witness is not None
        and abs(formal - 2.0) <= 1e-12
        and abs(rep.lower_bound_bits - 1.0) <= 1e-12
        and rep.paper_value_bits == 1.0
        and math.isinf(rep.upper_bound_bits)
    )
    return ok, (
        f"{count} matchings, {failures} contain support, witness {witness}; formal {formal} bits; "
        f"lower {rep.lower_bound_bits}, upper {rep.upper_bound_bits}"
    )


def c11_properties(ctx: VerifyContext, instances: int = 100) -> tuple[bool, str]:
    rng = np.random.default_rng(ctx.seed)
    failures = 0
    for i in range(instances):
        d = int(rng.integers(2, 4))
        dims = [d, d]
        rho = random_density(d * d, rng)
        side = [int(rng.integers(0, 2))]
        pt = ptranspose(rho, dims, side)
        failures += not np.array_equal(ptranspose(pt, dims, side), rho)
        failures += abs(np.trace(pt) - np.trace(rho)) > 1e-12
        failures += abs(np.trace(ptrace(rho, dims, [0])) - np.trace(rho)) > 1e-12
        # Born rule on a random two-qudit ket, measured locally
        layout = SubsystemLayout.uniform(d, ("A", "B"))
        state = PureState(layout, [((0, 1), random_ket(d * d, rng))])
        tr = LoccTranscript(layout, i)
        out = measure_local(state, "A", fourier_basis(d), int(rng.integers(0, 2**31)), tr)
        failures += abs(sum(out.event.probabilities) - 1) > 1e-12
        failures += abs(state.norm() - 1) > 1e-12
        failures += not tr.is_locc()
        # dense/label agreement for a random Bell-diagonal state
        k = 1 if d == 3 else int(rng.integers(1, 3))
        probs: dict = {}
        for x in rng.random(3):
            s = tuple((int(rng.integers(0, d)), int(rng.integers(0, d))) for _ in range(k))
            probs[s] = probs.get(s, 0.0) + float(x)
        total = sum(probs.values())
        dist = LabelDistribution(d, k, {s: p / total for s, p in probs.items()})
        coeffs, off = bell_basis_coefficients(dist.to_dense().matrix, d, k)
        failures += off > 1e-10
        failures += any(abs(coeffs.get(s, 0.0) - p) > 1e-10 for s, p in dist.support.items())
    return failures == 0, f"{instances} randomized instances, {failures} failures"


CRITERIA: list[tuple[str, Callable[[VerifyContext], tuple[bool, str]]]] = [
    ("Bell-basis orthonormality", c01_bell_orthonormality),
    ("maximal entanglement of every psi_nm", c02_max_entanglement),
    ("S(rho||rho^S) = log2 d, dense and label", c03_eq5_relative_entropy),
    ("even-n bound (2m-2) log2 d", c04_even_n),
    ("discrimination exactness", c05_discrimination),
    ("four-party distillation yield log2 d", c06_four_party),
    ("multi-copy distillation yield (n-2) log2 d", c07_multi_copy),
    ("PPT evidence across the named cuts", c08_ppt),
    ("teleportation", c09_teleport),
    ("odd-n support finding", c10_odd_n),
    ("property suite", c11_properties),
]


def verify_all(
    d_max: Optional[int] = None, n_max: Optional[int] = None, seed: int = 0, perturb: bool = False
) -> list[CriterionResult]:
    """Run every criterion in order; results keep criterion order."""
    ctx = VerifyContext(d_max, n_max, seed, perturb)
    results = []
    for idx, (name, fn) in enumerate(CRITERIA, start=1):
        t0 = time.perf_counter()
        try:
            passed, detail = fn(ctx)
        except Exception as exc:  # a crash is a failed criterion, not a crashed harness
            passed, detail = False, f"error: {type(exc).__name__}: {exc}"
        results.append(CriterionResult(idx, name, bool(passed), detail, time.perf_counter() - t0))
    return results


__all__ = ["verify_all", "CriterionResult", "VerifyContext", "CRITERIA"]
