import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dssl.adapt import (
    Candidate,
    CandidateGrid,
    SelectionError,
    default_alphas,
    excess_risk,
    select,
    select_euclidean,
    split,
)
from dssl.adapt import _argmin
from dssl.core import Fallback, LabeledSet
from dssl.density import GridSpec, fit_kde
from dssl.geodesic import build_graph, distance
from dssl.synth import make_uniform_components


@pytest.fixture(scope="module")
def two_blocks():
    inst = make_uniform_components(
        [((0.0, 0.0), (0.4, 1.0)), ((0.6, 0.0), (1.0, 1.0))], [1.0, -1.0], sigma=0.2
    )
    grid = GridSpec([-0.1, -0.1], [1.1, 1.1], 80)
    model = fit_kde(inst.sample_unlabeled(4000, 1), grid, c2=0.15)
    lab = inst.sample_labeled(24, 2)
    return inst, grid, model, lab


def _labeled(n, seed=0):
    rng = np.random.default_rng(seed)
    return LabeledSet(rng.random((n, 2)), rng.normal(size=n))


def test_split_even():
    T, V = split(_labeled(10), 0.5, 3)
    assert (T.n, V.n) == (5, 5)
    pts = {tuple(p) for p in T.points} | {tuple(p) for p in V.points}
    assert len(pts) == 10


def test_split_deterministic():
    a = split(_labeled(11), 0.3, 7)
    b = split(_labeled(11), 0.3, 7)
    assert a[0] == b[0] and a[1] == b[1]


def test_split_errors():
    with pytest.raises(SelectionError):
        split(_labeled(1), 0.5, 0)
    with pytest.raises(SelectionError):
        split(_labeled(10), 0.01, 0)


def test_grid_validation():
    with pytest.raises(ValueError):
        CandidateGrid(alphas=(1.0, 2.0))
    with pytest.raises(ValueError):
        CandidateGrid(alphas=(0.0, 2.0, 1.0))
    with pytest.raises(ValueError):
        CandidateGrid(bandwidths=())
    with pytest.raises(ValueError):
        CandidateGrid(split_fraction=1.0)


def test_default_alphas():
    assert default_alphas(1000) == (0.0, 1.0, 2.0, 4.0, math.log(1000), 8.0)


def test_singleton_grid(two_blocks):
    _, _, model, lab = two_blocks
    rep = select(lab, model, CandidateGrid(alphas=(0.0,), bandwidths=(0.3,)), snap="interior")
    assert (rep.chosen.alpha, rep.chosen.h) == (0.0, 0.3)
    assert len(rep.table) == 1


def test_zero_risk_candidate_chosen():
    # noiseless constant labels: a covering bandwidth predicts exactly
    inst = make_uniform_components([((0.0, 0.0), (1.0, 1.0))], [2.0])
    grid = GridSpec([-0.1, -0.1], [1.1, 1.1], 60)
    model = fit_kde(inst.sample_unlabeled(3000, 0), grid, c2=0.15)
    lab = inst.sample_labeled(12, 1)
    rep = select(lab, model, CandidateGrid(alphas=(0.0, 1.0), bandwidths=(0.01, 5.0)), snap="interior")
    zero = [c for c in rep.table if c.risk == 0.0]
    assert zero and (rep.chosen.alpha, rep.chosen.h) == (zero[0].alpha, zero[0].h)


def test_three_by_three_matches_independent_recomputation(two_blocks):
    _, _, model, lab = two_blocks
    alphas, hs = (0.0, 1.0, 2.0), (0.15, 0.4, 1.0)
    rep = select(lab, model, CandidateGrid(alphas=alphas, bandwidths=hs, seed=5), snap="interior")
    T, V = split(lab, 0.5, 5)
    risks = {}
    for a in alphas:
        g = build_graph(model, a, 16)
        for h in hs:
            sq = []
            for xv, yv in zip(V.points, V.labels):
                near = [yt for xt, yt in zip(T.points, T.labels)
                        if distance(g, xt, xv, snap="interior").value <= h]
                pred = sum(near) / len(near) if near else T.labels.mean()
                sq.append((pred - yv) ** 2)
            risks[(a, h)] = sum(sq) / len(sq)
    table = {(c.alpha, c.h): c.risk for c in rep.table}
    assert set(table) == set(risks)
    for k in risks:
        assert table[k] == pytest.approx(risks[k], rel=1e-12, abs=1e-15)
    best = min(risks, key=lambda k: (risks[k], k))
    assert (rep.chosen.alpha, rep.chosen.h) == best


def test_ties_go_to_smallest(two_blocks):
    _, _, model, lab = two_blocks
    # bandwidths beyond every finite distance: all candidates predict the same
    rep = select(lab, model, CandidateGrid(alphas=(0.0, 1.0), bandwidths=(1e6, 2e6)), snap="interior")
    risks = {c.risk for c in rep.table}
    assert len(risks) == 1
    assert (rep.chosen.alpha, rep.chosen.h) == (0.0, 1e6)


@settings(max_examples=60, deadline=None)
@given(
    risks=st.lists(st.one_of(st.floats(0, 10), st.just(math.inf)), min_size=1, max_size=12),
    scale=st.sampled_from([2.0, 1024.0]),
)
def test_argmin_invariant_under_increasing_transform(risks, scale):
    # power-of-two scaling stays strictly increasing in floating point
    table = [Candidate(float(i // 3), float(i % 3 + 1), r) for i, r in enumerate(risks)]
    moved = [Candidate(c.alpha, c.h, scale * c.risk)
             for c in table]
    a, b = _argmin(table), _argmin(moved)
    assert (a is None) == (b is None)
    if a is not None:
        assert (a.alpha, a.h) == (b.alpha, b.h)
        assert a.risk == min(c.risk for c in table)


def test_selection_is_deterministic(two_blocks):
    _, _, model, lab = two_blocks
    g = CandidateGrid(alphas=(0.0, 1.0, 2.0), seed=4)
    a = select(lab, model, g, snap="interior")
    b = select(lab, model, g, snap="interior", n_jobs=2)
    assert a == b and a.to_json() == b.to_json()


def test_all_failed_raises(two_blocks):
    _, _, model, lab = two_blocks
    g = CandidateGrid(alphas=(0.0, 1.0), bandwidths=(1e-9,))
    with pytest.raises(SelectionError):
        select(lab, model, g, fallback=Fallback.UNDEFINED, snap="interior")


def test_report_json_shape(two_blocks):
    _, _, model, lab = two_blocks
    rep = select(lab, model, CandidateGrid(alphas=(0.0, 2.0)), snap="interior")
    blob = json.loads(rep.to_json())
    assert {"chosen", "table", "n_train", "n_val", "seed"} <= set(blob)
    assert set(blob["chosen"]) == {"alpha", "h"}
    assert all(set(row) == {"alpha", "h", "risk"} for row in blob["table"])
    assert blob["n_train"] + blob["n_val"] == lab.n
    # default bandwidth grid: 8 values per alpha
    assert len(blob["table"]) == 16


def test_semisupervised_beats_euclidean_across_gap(two_blocks):
    inst, _, model, lab = two_blocks
    rep = select(lab, model, CandidateGrid(alphas=(0.0, 2.0), bandwidths=(1.0,)), snap="interior")
    base = select_euclidean(lab, bandwidths=(1.0,))
    # a bandwidth wider than the gap mixes labels in Euclidean distance only
    assert rep.table[-1].risk < base.table[0].risk
    assert base.method == "euclidean"


def test_excess_risk_cases():
    M = 1.5
    inst = make_uniform_components([((0.0, 0.0), (0.4, 1.0)), ((0.6, 0.0), (1.0, 1.0))], [M, -M])
    assert excess_risk(inst.f_star, inst, 500, 0) == 0.0
    n = 4000
    shifted = excess_risk(lambda x: inst.f_star(x) + 1.0, inst, n, 1)
    assert abs(shifted - 1.0) <= 1e-12
    assert excess_risk(lambda x: np.zeros(len(x)), inst, 300, 2) == M**2
    with pytest.raises(ValueError):
        excess_risk(inst.f_star, inst, 0)
