import dataclasses

import numpy as np
import pytest
from scipy import stats

from dmmo.baselines import VARIANTS, ablation_response, get_variant, random_reinit_response, respond
from dmmo.cae import CAEParams
from dmmo.core import ContractError, Population
from dmmo.moea import GAParams, NicheParams
from dmmo.problems import get_problem

P = get_problem("DMMF1")


def _pop(n=100, t=0.0, seed=0):
    X = P.random_solutions(n, np.random.default_rng(seed))
    return Population(X, P.evaluate(X, t), t)


def _rows_kept(old, new):
    return sum(any(np.array_equal(x, y) for y in old.X) for x in new.X)


def test_reinit_fractions():
    prev = _pop()
    same = random_reinit_response(prev, 0.0, P, 0.2, np.random.default_rng(1))
    assert np.array_equal(same.X, prev.X) and same.t == 0.2
    assert np.array_equal(same.F, P.evaluate(prev.X, 0.2))
    fresh = random_reinit_response(prev, 1.0, P, 0.2, np.random.default_rng(1))
    assert _rows_kept(prev, fresh) == 0
    part = random_reinit_response(prev, 0.2, P, 0.2, np.random.default_rng(1))
    assert _rows_kept(prev, part) == 80
    with pytest.raises(ContractError):
        random_reinit_response(prev, 1.5, P, 0.2, np.random.default_rng(1))


def test_none_variant_is_uniform():
    rng = np.random.default_rng(2)
    variant = get_variant("CAE-AN_none")
    X = np.vstack([ablation_response(variant, None, None, 100, P, 0.4, rng, _pop(seed=k)).X for k in range(20)])
    lo, hi = P.bounds
    for j in range(P.n_var):
        assert stats.kstest((X[:, j] - lo[j]) / (hi[j] - lo[j]), "uniform").pvalue > 1e-3


def _drift_sets():
    rng = np.random.default_rng(3)
    x1 = rng.random(50)
    prev = np.column_stack([x1, np.where(x1 < 0.5, 0.0, 2.0)])
    curr = prev + [0.0, 0.3]
    return (Population(prev, P.evaluate(prev, 0.0), 0.0), Population(curr, P.evaluate(curr, 0.2), 0.2))


def test_translation_variant_shifts_by_centroids():
    pos2, pos1 = _drift_sets()
    pop = ablation_response(get_variant("CAE-AN_noAE"), pos2, pos1, 50, P, 0.4, np.random.default_rng(4),
                            ga=GAParams(pop_size=50), niche=NicheParams.for_problem(P, 10))
    assert np.allclose(np.sort(pop.X, axis=0), np.sort(pos1.X + [0.0, 0.3], axis=0), atol=1e-12)


@pytest.mark.parametrize("name", list(VARIANTS))
def test_every_variant_returns_valid_population(name):
    pos2, pos1 = _drift_sets()
    prev = _pop(t=0.2)
    rng = np.random.default_rng(5)
    ga, niche = GAParams(), NicheParams.for_problem(P, 10)
    for env_index, archive in ((1, [pos1]), (2, [pos2, pos1])):
        pop = respond(get_variant(name), env_index, prev, archive, P, 0.4, rng, CAEParams(), ga, niche)
        lo, hi = P.bounds
        assert len(pop) == 100 and pop.t == 0.4
        assert np.all((pop.X >= lo) & (pop.X <= hi))
        assert np.array_equal(pop.F, P.evaluate(pop.X, 0.4))


def test_history_variants_reinitialise_before_two_archives():
    prev = _pop(t=0.2)
    pop = respond(get_variant("CAE-AN"), 1, prev, [_drift_sets()[1]], P, 0.4, np.random.default_rng(6))
    assert _rows_kept(prev, pop) == 0
    with pytest.raises(ContractError):
        ablation_response(get_variant("CAE-AN"), None, None, 100, P, 0.4, np.random.default_rng(6))


def test_variants_differ_only_at_switch_points():
    full = get_variant("CAE-AN")
    expected = {
        "CAE-AN_none": {"response", "niching"},
        "CAE-AN_noC": {"response"},
        "CAE-AN_noAE": {"response"},
        "CAE-AN_noadaptive": {"niching"},
        "DNSGA2-A": {"response", "niching", "reinit_fraction"},
    }
    for name, fields in expected.items():
        other = get_variant(name)
        diff = {f.name for f in dataclasses.fields(full) if f.name != "id" and getattr(full, f.name) != getattr(other, f.name)}
        assert diff == fields, name
    assert get_variant("DNSGA2-A").reinit_fraction == 0.2
    with pytest.raises(KeyError):
        get_variant("NSGA-III")
