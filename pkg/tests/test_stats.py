import itertools
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats as sps

from dmmo.core import ContractError
from dmmo.stats import rankdata, render_table, significance_mark, summarize, wilcoxon_rank_sum


def permutation_p_value(a, b):
    """Two-sided p-value by enumerating every relabelling of the pooled sample."""
    pooled = list(a) + list(b)
    N, n = len(pooled), len(a)
    ordered = sorted(pooled)
    midrank = {v: Fraction(sum(i + 1 for i, w in enumerate(ordered) if w == v), ordered.count(v)) for v in pooled}
    ranks = [midrank[v] for v in pooled]
    expected = Fraction(n * (N + 1), 2)
    observed = abs(sum(ranks[:n]) - expected)
    hits = total = 0
    for subset in itertools.combinations(range(N), n):
        total += 1
        hits += abs(sum(ranks[i] for i in subset) - expected) >= observed
    return Fraction(hits, total)


def test_examples():
    assert wilcoxon_rank_sum([1, 2, 3], [1, 2, 3]).p_value == 1.0
    res = wilcoxon_rank_sum([1, 2, 3], [10, 11, 12])
    assert res.p_value == pytest.approx(0.1, abs=1e-15) and res.method == "exact" and res.direction == -1
    rng = np.random.default_rng(0)
    res = wilcoxon_rank_sum(rng.normal(0, 1, 20), rng.normal(5, 1, 20))
    assert res.p_value < 1e-6 and res.method == "normal"
    res = wilcoxon_rank_sum([4.0] * 5, [4.0] * 9)
    assert (res.p_value, res.direction) == (1.0, 0)
    with pytest.raises(ContractError):
        wilcoxon_rank_sum([1.0], [2.0, 3.0])


def test_exact_matches_permutation_oracle_with_ties():
    rng = np.random.default_rng(1)
    for n, m in [(2, 2), (3, 4), (4, 4), (5, 3), (6, 6)]:
        a, b = rng.integers(0, 4, n).tolist(), rng.integers(1, 5, m).tolist()
        if len(set(a + b)) == 1:
            continue
        assert wilcoxon_rank_sum(a, b).p_value == float(permutation_p_value(a, b))


def test_normal_approximation_matches_scipy():
    rng = np.random.default_rng(2)
    for _ in range(20):
        a = np.round(rng.normal(0, 1, 12), 1)
        b = np.round(rng.normal(0.5, 1, 15), 1)
        ours = wilcoxon_rank_sum(a, b).p_value
        ref = sps.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True).pvalue
        assert ours == pytest.approx(ref, rel=1e-9)


def test_exact_without_ties_matches_scipy():
    rng = np.random.default_rng(3)
    for n in range(2, 8):
        a, b = rng.normal(size=n), rng.normal(0.7, 1, size=7)
        ref = sps.mannwhitneyu(a, b, alternative="two-sided", method="exact").pvalue
        assert wilcoxon_rank_sum(a, b).p_value == pytest.approx(ref, rel=1e-12)


def test_rankdata_midranks():
    assert rankdata([3, 1, 3, 2]).tolist() == [3.5, 1.0, 3.5, 2.0]
    assert np.array_equal(rankdata([5, 2, 2, 9, 5]), sps.rankdata([5, 2, 2, 9, 5]))


def test_significance_marks():
    good, bad = [0.1, 0.11, 0.12, 0.13, 0.09], [0.5, 0.52, 0.51, 0.55, 0.6]
    assert significance_mark(good, bad)[0] == "-"
    assert significance_mark(bad, good)[0] == "+"
    assert significance_mark(good, good)[0] == "="


def _records(algorithm, migd, migdx, problem="DMMF1"):
    return [{"problem": problem, "config": "C1", "algorithm": algorithm, "migd": a, "migdx": b}
            for a, b in zip(migd, migdx)]


def test_summarize_single_variant_has_no_marks():
    s = summarize(_records("CAE-AN", [0.1, 0.2, 0.3], [1.0, 2.0, 3.0]))
    (row,) = s["rows"]
    assert "migd_mark" not in row and s["tally"] == {}
    assert row["migd_mean"] == pytest.approx(0.2) and row["migd_std"] == pytest.approx(0.1)
    assert row["migdx_mean"] == pytest.approx(2.0) and row["migdx_std"] == pytest.approx(1.0)


def test_summarize_identical_variants_all_equal():
    recs = _records("CAE-AN", [0.1, 0.2, 0.3], [1, 2, 3]) + _records("DNSGA2-A", [0.1, 0.2, 0.3], [1, 2, 3])
    s = summarize(recs)
    assert s["reference"] == "CAE-AN"
    other = [r for r in s["rows"] if r["algorithm"] == "DNSGA2-A"][0]
    assert other["migd_mark"] == "=" and other["migdx_mark"] == "="
    assert s["tally"]["DNSGA2-A"]["migd"] == {"+": 0, "-": 0, "=": 1}
    assert "CAE-AN vs DNSGA2-A" in render_table(s)


def test_summarize_means_match_summation():
    rng = np.random.default_rng(4)
    vals = {alg: rng.random((10, 2)) + k for k, alg in enumerate(["CAE-AN", "DNSGA2-A"])}
    recs = [r for alg, v in vals.items() for r in _records(alg, v[:, 0], v[:, 1])]
    s = summarize(recs)
    for row in s["rows"]:
        v = vals[row["algorithm"]]
        assert row["migd_mean"] == pytest.approx(sum(v[:, 0]) / 10, abs=1e-12)
        assert row["migdx_std"] == pytest.approx(np.sqrt(sum((v[:, 1] - v[:, 1].mean()) ** 2) / 9), abs=1e-12)
    other = [r for r in s["rows"] if r["algorithm"] == "DNSGA2-A"][0]
    assert other["migd_mark"] == "-"  # reference significantly better
