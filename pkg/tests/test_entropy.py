import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdistill.entropy import (
    INFINITE,
    EntropyResult,
    er_candidate_report,
    formal_count_bound,
    kl_label,
    relative_entropy,
    support_contained,
    von_neumann_entropy,
)
from qdistill.linalg_core import random_density
from qdistill.mixtures import (
    FourParty,
    FullMixture,
    LabelDistribution,
    MultiCopy,
    Pairing,
    consecutive_pairing,
    four_party_state,
    multi_copy_labels,
    pairing_labels,
    uniform_full_mixture,
)


def test_von_neumann_examples():
    assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(2.0, abs=1e-12)
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0
    assert von_neumann_entropy(four_party_state(3).dense) == pytest.approx(math.log2(3), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 6))
def test_relative_entropy_self_is_zero_and_nonnegative(seed, dim):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(dim, rng), random_density(dim, rng)
    assert relative_entropy(rho, rho).value_bits < 1e-10
    assert relative_entropy(rho, sigma).value_bits >= 0


def test_relative_entropy_matches_matrix_log(rng):
    rho, sigma = random_density(3, rng), random_density(3, rng)

    def logm2(m):
        lam, v = np.linalg.eigh(m)
        return v @ np.diag(np.log2(lam)) @ v.conj().T

    oracle = np.trace(rho @ (logm2(rho) - logm2(sigma))).real
    assert relative_entropy(rho, sigma).value_bits == pytest.approx(oracle, abs=1e-10)


def test_orthogonal_support_is_infinite():
    res = relative_entropy(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    assert res.value_bits == INFINITE and not res.support_contained
    assert np.allclose(np.abs(res.witness), [1, 0])
    assert res.to_json()["value_bits"] == "infinite"


def test_entropy_result_invariant():
    with pytest.raises(ValueError):
        EntropyResult(INFINITE, "label", True)
    with pytest.raises(ValueError):
        EntropyResult(1.0, "label", False)


def test_kl_label_examples():
    p = LabelDistribution(2, 1, {((0, 0),): 0.5, ((1, 0),): 0.5})
    q = LabelDistribution.uniform(2, [((a, b),) for a in range(2) for b in range(2)])
    assert kl_label(p, q).value_bits == pytest.approx(1.0, abs=1e-15)
    res = kl_label(q, p)
    assert res.value_bits == INFINITE and res.witness in {((0, 1),), ((1, 1),)}
    with pytest.raises(ValueError):
        kl_label(p, multi_copy_labels(2, 2))


@pytest.mark.parametrize("d", [2, 3])
def test_label_and_dense_paths_agree(d):
    t, c = four_party_state(d), uniform_full_mixture(d)
    assert abs(kl_label(t.labels, c.labels).value_bits - relative_entropy(t.dense, c.dense).value_bits) < 1e-9


def test_kl_additive_under_tensor():
    p = LabelDistribution(2, 1, {((0, 0),): 0.25, ((1, 0),): 0.75})
    q = LabelDistribution(2, 1, {((0, 0),): 0.5, ((1, 0),): 0.5})
    one = kl_label(p, q).value_bits
    assert kl_label(p.tensor(p), q.tensor(q)).value_bits == pytest.approx(2 * one, abs=1e-14)


def test_support_contained_dispatch():
    target = multi_copy_labels(2, 4)
    ok, w = support_contained(target, pairing_labels(2, consecutive_pairing(4)))
    assert ok and w is None
    with pytest.raises(TypeError):
        support_contained(target, np.eye(4))
    ok, w = support_contained(np.diag([0.5, 0.5]), np.diag([1.0, 0.0]))
    assert not ok and w is not None


def test_formal_count_bound_odd_case():
    target = multi_copy_labels(2, 3).power(2)
    assert formal_count_bound(target, pairing_labels(2, consecutive_pairing(6))) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        formal_count_bound(LabelDistribution(2, 1, {((0, 0),): 0.25, ((1, 0),): 0.75}), target)


def test_candidate_report_finite_and_halved():
    rep = er_candidate_report(FourParty(3), FullMixture(3))
    assert rep.bound_bits == pytest.approx(math.log2(3)) and not rep.halved
    rep = er_candidate_report(MultiCopy(2, 3, power=2), Pairing(2, tuple(consecutive_pairing(6))), halve=True)
    assert rep.bound_bits == INFINITE and rep.halved
    assert rep.formal_count_bits == pytest.approx(1.0)
    assert "halving" in rep.note and "not contained" in rep.note
    json.dumps(rep.to_json())
    with pytest.raises(ValueError):
        er_candidate_report(FourParty(2), FullMixture(2), halve=True)


def test_candidate_report_dense_method():
    rep = er_candidate_report(FourParty(2), FullMixture(2), method="dense")
    assert rep.result.method == "dense" and rep.bound_bits == pytest.approx(1.0, abs=1e-9)


def test_dense_path_at_d5_under_cap():
    t, c = four_party_state(5), uniform_full_mixture(5)
    assert t.dense is not None
    assert relative_entropy(t.dense, c.dense).value_bits == pytest.approx(math.log2(5), abs=1e-9)
