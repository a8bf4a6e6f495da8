import json
import math

import numpy as np
import pytest

from qdistill.distill import (
    DistillationReport,
    candidate_ppt_note,
    distill_four_party,
    distill_multi_copy,
    ed_summary,
    odd_matching_scan,
    paper_value,
    run_multi_copy,
)
from qdistill.locc import OutcomeSource
from qdistill.qudit_states import BellLabel, MesFamily, bell_vector


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_four_party_yield(d):
    rep = distill_four_party(d)
    assert rep.yield_bits == pytest.approx(math.log2(d), abs=1e-12)
    assert rep.per_biparty_fidelity[0] >= 1 - 1e-10
    assert rep.locc_audit_ok and len(rep.transcripts) == d


def test_four_party_shift_family():
    rep = distill_four_party(3, MesFamily.shift(3, 2), rng_seed=5)
    assert rep.yield_bits == pytest.approx(math.log2(3))


@pytest.mark.parametrize("d,n", [(2, 3), (2, 4), (3, 3), (3, 5), (5, 5)])
def test_multi_copy_yield(d, n):
    rep = distill_multi_copy(d, n)
    assert rep.yield_bits == pytest.approx((n - 2) * math.log2(d), abs=1e-12)
    assert rep.surviving_biparties == n - 2 and rep.locc_audit_ok


@pytest.mark.parametrize("n", [1, 2])
def test_small_n_separable(n):
    rep = distill_multi_copy(3, n)
    assert rep.yield_bits == 0 and rep.reason == "separable"


def test_measuring_biparties_end_unentangled():
    run = run_multi_copy(3, 4, BellLabel(2, 1, 3), OutcomeSource(3))
    phi = bell_vector(3, 0, 0)
    for k in (0, 1):
        red = run.state.reduced_density((2 * k, 2 * k + 1))
        assert np.vdot(phi, red @ phi).real <= 1 / 3 + 1e-10
    assert all(f >= 1 - 1e-10 for f in run.fidelities)


def test_seed_determinism():
    a = distill_multi_copy(3, 4, rng_seed=11)
    b = distill_multi_copy(3, 4, rng_seed=11)
    assert [t.to_jsonl() for t in a.transcripts] == [t.to_jsonl() for t in b.transcripts]
    assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)


def test_ed_summary_four_party():
    rep = ed_summary(2, fourparty=True)
    assert rep.lower_bound_bits == pytest.approx(1.0)
    assert rep.upper_bound_bits == pytest.approx(1.0, abs=1e-9) and rep.agreement
    assert "PPT" in rep.candidate_ppt


def test_ed_summary_even_n():
    rep = ed_summary(2, 4)
    assert rep.lower_bound_bits == pytest.approx(2.0) and rep.upper_bound_bits == pytest.approx(2.0)
    assert rep.agreement


def test_ed_summary_odd_n_reports_infinite_upper():
    rep = ed_summary(2, 3)
    assert math.isinf(rep.upper_bound_bits) and rep.witness is not None
    assert rep.formal_count_bits == pytest.approx(1.0)
    assert rep.matchings_checked == 15 and rep.agreement
    out = rep.to_json()
    assert out["upper_bound_bits"] == "infinite"
    json.dumps(out)


def test_ed_summary_odd_n_large_d_stays_implicit():
    rep = ed_summary(5, 5)
    assert rep.lower_bound_bits == pytest.approx(3 * math.log2(5))
    assert math.isinf(rep.upper_bound_bits) and rep.matchings_checked == 945


def test_odd_matching_scan_counts():
    checked, contained, witness = odd_matching_scan(2, 3)
    assert (checked, contained) == (15, 0) and witness is not None


def test_candidate_check_for_d3_is_npt():
    assert candidate_ppt_note(3, "full").startswith("candidate NPT")
    assert candidate_ppt_note(2, "rho2").startswith("candidate PPT")


def test_agreement_definition():
    rep = DistillationReport(2, 4, "multi-copy", 2.0, 2, [1.0, 1.0], 2.0, 2.0, upper_bound_bits=2.5)
    assert not rep.agreement
    rep.upper_bound_bits = math.inf
    assert rep.agreement
    rep.lower_bound_bits = 1.0
    assert not rep.agreement


def test_paper_value():
    assert paper_value(3, fourparty=True) == pytest.approx(math.log2(3))
    assert paper_value(2, 5) == 3.0 and paper_value(2, 1) == 0.0
