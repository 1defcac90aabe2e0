import numpy as np
import pytest

from batchqn.bench import (BenchConfig, BenchError, BenchRow, compare, from_csv, run_bench,
                           run_variant, to_csv, to_markdown)


@pytest.fixture(scope="module")
def curve_table():
    return run_bench(BenchConfig("curve"))


def row(label, **kw):
    base = dict(time=1.0, iterations=10, value=1e-3, forward=20, reverse=20, ls_iterations=15,
                problem="curve", seed=1)
    base.update(kw)
    return BenchRow(label, **base)


def test_default_curve_variants(curve_table):
    labels = [r.label for r in curve_table.rows]
    assert labels == ["baseline-legacy", "W4", "W4-polyfit", "W8", "W8-polyfit"]
    assert curve_table.row("W4-polyfit").iterations < curve_table.row("baseline-legacy").iterations
    assert not curve_table.failures


def test_csv_round_trip(curve_table):
    back = from_csv(to_csv(curve_table))
    assert back.rows == curve_table.rows
    assert (back.problem, back.seed) == ("curve", 1)


def test_markdown_has_every_row(curve_table):
    md = to_markdown(curve_table)
    assert all(r.label in md for r in curve_table.rows)


def test_repetitions_are_deterministic():
    t = run_bench(BenchConfig("rosenbrock", repetitions=3))
    assert len(t.rows) == 5


def test_expectation_split_row():
    t = run_bench(BenchConfig("expectation"))
    split = t.row("split-interface")
    assert split.reverse <= split.iterations + 1


def test_legacy_trajectory_independent_of_batch_width():
    cfg = BenchConfig("curve")
    xs = [run_variant(cfg, dict(legacy_interface=True, batch=w))[0] for w in (1, 4, 8)]
    for x in xs[1:]:
        np.testing.assert_array_equal(x, xs[0])


def test_compare_examples():
    same = compare(row("a"), row("b"))
    assert all(v == 1.0 for v in same.ratios.values())
    c = compare(row("before", iterations=65, reverse=1134), row("after", iterations=18, reverse=266),
                {"iterations": 3.0, "reverse": 5.0})
    assert c.ratios["iterations"] == pytest.approx(3.61, abs=5e-3)
    assert c.ratios["reverse"] == pytest.approx(4.26, abs=5e-3)
    assert c.passed == {"iterations": True, "reverse": False}
    assert not c.ok
    assert len(c.lines()) == 5


def test_compare_refuses_mismatched_rows():
    with pytest.raises(BenchError):
        compare(row("a"), row("b", seed=2))
    with pytest.raises(BenchError):
        compare(row("a"), row("b", problem="rosenbrock"))


def test_config_validation():
    with pytest.raises(BenchError):
        BenchConfig("nope")
    with pytest.raises(BenchError):
        BenchConfig("curve", repetitions=0)
    with pytest.raises(Exception):
        BenchConfig("curve", variants={"x": {"batch": 3}})
