import numpy as np
import pytest

from pcrca import example3
from pcrca.metrics import MetricKind


def test_corrected_vector_sums_to_one():
    assert sum(example3.RAW_VECTOR) == pytest.approx(1.63)
    assert example3.corrected_vector().sum() == pytest.approx(1.0)


def test_extended_table_marginalizes_back():
    t = example3.distribution(include_t=True)
    base = example3.distribution()
    assert np.allclose(t.marginal(example3.READ_ORDER).probabilities, base.probabilities)


@pytest.fixture(scope="module")
def results():
    return {r.metric: r for r in example3.reproduce(oracle_samples=5000, seed=2)}


def test_intervals(results):
    assert results[MetricKind.PN].reported == pytest.approx((0.175, 0.245), abs=1e-3)
    assert results[MetricKind.PNS].reported == pytest.approx((0.35, 0.49), abs=1e-3)
    assert all(r.passed for r in results.values())


def test_structure(results):
    pn = results[MetricKind.PN]
    assert pn.degree == 2 and pn.dimensions == (8, 16)
    assert pn.denominator == pytest.approx(0.33625)


def test_oracle_contained(results):
    assert all(r.oracle_contained for r in results.values())


def test_without_reduction_same_numbers(results):
    for r in example3.reproduce(use_reduction=False):
        ref = results[r.metric]
        assert r.degree == 4
        assert (r.interval.lower, r.interval.upper) == pytest.approx((ref.interval.lower, ref.interval.upper), abs=1e-6)


def test_record_fields(results):
    rec = results[MetricKind.PNS].record()
    assert rec["metric"] == "PNS" and rec["passed"] is True and rec["oracle_contained"] is True
