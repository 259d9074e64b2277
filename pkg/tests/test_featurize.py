import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circuitgnn.bondgraph import BgNodeKind, to_bond_graph
from circuitgnn.errors import DivisionByZero, EmptyDataset, MissingCategoryInBase
from circuitgnn.featurize import (N_KINDS, ONE_HOT_ORDER, CapRepr, EdgeMode, FeatureConfig,
                                  IndRepr, NormalizationBase, featurize, fit_normalization,
                                  one_hot, transform_value)
from circuitgnn.netlist import parse_netlist

from conftest import continuous_circuits

OPT = FeatureConfig.optimal()
BUCK = "V1 1 0 12\nS1 1 2 0.6\nS2 2 0 0.4\nL1 2 3 100u\nC1 3 0 10u\nR1 3 0 5\n.freq 100k\n.mode CCM\n"


def test_optimal_preset():
    assert OPT == FeatureConfig(EdgeMode.Ones, CapRepr.Inverse, IndRepr.Raw)
    assert OPT.feature_dim == 10
    assert FeatureConfig(include_phase_column=True, include_frequency_column=True).feature_dim == 12


def test_one_hot_positions():
    assert one_hot(BgNodeKind.Se).tolist() == [1, 0, 0, 0, 0, 0, 0, 0, 0]
    assert one_hot(BgNodeKind.Junction0).tolist() == [0, 0, 0, 0, 0, 0, 1, 0, 0]
    assert one_hot(BgNodeKind.Junction1s).tolist() == [0, 0, 0, 0, 0, 0, 0, 1, 0]
    assert [int(np.argmax(one_hot(k))) for k in (BgNodeKind.Sf, BgNodeKind.I, BgNodeKind.R,
                                                 BgNodeKind.C, BgNodeKind.Junction1)] == [1, 2, 3, 4, 5]


def test_one_hot_injective():
    vecs = [tuple(one_hot(k)) for k in BgNodeKind]
    assert len(set(vecs)) == len(BgNodeKind) == N_KINDS
    assert all(sum(v) == 1 for v in vecs)
    assert set(ONE_HOT_ORDER) == set(BgNodeKind)


def test_transform_value():
    inv = FeatureConfig(cap_repr=CapRepr.Inverse)
    assert transform_value(BgNodeKind.C, 1e-6, inv) == pytest.approx(1e6)
    assert transform_value(BgNodeKind.C, 1e-6, FeatureConfig(cap_repr=CapRepr.NegativeInverse)) \
        == pytest.approx(-1e6)
    assert transform_value(BgNodeKind.I, 1e-3, FeatureConfig(ind_repr=IndRepr.Inverse)) \
        == pytest.approx(1e3)
    for cfg in (inv, FeatureConfig(cap_repr=CapRepr.Raw), FeatureConfig(ind_repr=IndRepr.Inverse)):
        assert transform_value(BgNodeKind.R, 5.0, cfg) == 5.0
    with pytest.raises(DivisionByZero):
        transform_value(BgNodeKind.C, 0.0, inv)


def _graphs(text_values, kind="R"):
    prefix = {"R": "R", "C": "C"}[kind]
    return [to_bond_graph(parse_netlist(f"V1 1 0 1\n{prefix}1 1 0 {v}")) for v in text_values]


def test_fit_normalization_resistors():
    graphs = _graphs([2, 5, 10])
    base = fit_normalization(graphs, OPT)
    assert base.maxima["R"] == 10
    vals = [featurize(g, base, OPT).x[5, N_KINDS] for g in graphs]
    assert vals == pytest.approx([0.2, 0.5, 1.0])


def test_fit_normalization_inverse_capacitors():
    graphs = _graphs(["1e-6", "2e-6"], "C")
    base = fit_normalization(graphs, OPT)
    # oracle: transform then max, written out directly
    expected = max(abs(1 / 1e-6), abs(1 / 2e-6))
    assert base.maxima["C"] == pytest.approx(expected)
    vals = [featurize(g, base, OPT).x[5, N_KINDS] for g in graphs]
    assert vals == pytest.approx([1.0, 0.5])


def test_fit_normalization_single_graph_hits_one():
    g = to_bond_graph(parse_netlist("V1 1 0 3\nR1 1 2 4\nL1 2 3 1e-3\nC1 3 0 1e-6"))
    s = featurize(g, fit_normalization([g], OPT), OPT)
    v = s.x[:, N_KINDS]
    assert np.all(np.abs(v) <= 1.0)
    for kind in (BgNodeKind.Se, BgNodeKind.R, BgNodeKind.I, BgNodeKind.C):
        col = ONE_HOT_ORDER.index(kind)
        assert np.abs(v[s.x[:, col] == 1]).max() == 1.0


def test_fit_normalization_empty():
    with pytest.raises(EmptyDataset):
        fit_normalization([], OPT)


def test_rows_for_resistor_and_junction():
    g = to_bond_graph(parse_netlist("V1 1 0 1\nR1 1 0 5"))
    s = featurize(g, NormalizationBase({"V": 1.0, "R": 10.0}), OPT)
    assert s.x[5].tolist() == [0, 0, 0, 1, 0, 0, 0, 0, 0, 0.5]
    assert s.x[0].tolist() == [0, 0, 0, 0, 0, 0, 1, 0, 0, 0.0]
    assert set(np.unique(s.adjacency)) <= {0.0, 1.0}


def test_missing_category():
    g = to_bond_graph(parse_netlist("V1 1 0 1\nR1 1 0 5"))
    with pytest.raises(MissingCategoryInBase):
        featurize(g, NormalizationBase({"V": 1.0}), OPT)


def test_duty_weights_override_edge_mode():
    g = to_bond_graph(parse_netlist(BUCK))
    base = fit_normalization([g], OPT)
    for mode in EdgeMode:
        cfg = FeatureConfig(mode, CapRepr.Inverse)
        s = featurize(g, fit_normalization([g], cfg), cfg)
        j1s = g.find("S1", BgNodeKind.Junction1s).id
        assert set(s.adjacency[j1s][s.adjacency[j1s] != 0]) == {0.6}
    assert base.maxima["frequency"] == 1e5


def test_phase_and_frequency_columns():
    g = to_bond_graph(parse_netlist(BUCK + ".phase S1 3.141592653589793\n"))
    cfg = FeatureConfig(include_phase_column=True, include_frequency_column=True)
    s = featurize(g, fit_normalization([g], cfg), cfg)
    ctl = [n for n in g.nodes if n.control and n.label == "S1"][0]
    assert s.x[ctl.id, N_KINDS + 1] == pytest.approx(0.5)
    assert s.x[ctl.id, N_KINDS + 2] == 1.0
    assert s.x[ctl.id, N_KINDS] == 0.0


def test_scaling_factor_moves_values_to_edges():
    g = to_bond_graph(parse_netlist("V1 1 0 1\nR1 1 0 5"))
    cfg = FeatureConfig(EdgeMode.ScalingFactor, CapRepr.Inverse)
    s = featurize(g, NormalizationBase({"V": 2.0, "R": 10.0}), cfg)
    assert np.all(s.x[:, N_KINDS] == 0)
    assert s.adjacency[4, 5] == 0.5  # J1(R1) -- R1
    assert s.adjacency[2, 3] == 0.5  # J1(V1) -- V1
    assert s.adjacency[0, 4] == 1.0


def test_frequency_modes():
    text = "V1 1 0 1\nR1 1 2 1\nL1 2 3 1e-3\nC1 3 0 1e-6\n.freq 2000\n"
    g = to_bond_graph(parse_netlist(text))
    f_res = 1 / (2 * np.pi * np.sqrt(1e-3 * 1e-6))
    cfg = FeatureConfig(EdgeMode.NormalizedFrequency)
    s = featurize(g, fit_normalization([g], cfg), cfg)
    c_node = g.find("C1", BgNodeKind.C).id
    r_node = g.find("R1", BgNodeKind.R).id
    assert s.adjacency[c_node - 1, c_node] == pytest.approx(f_res / 2000)
    assert s.adjacency[r_node - 1, r_node] == pytest.approx(2000 / f_res)
    cfg = FeatureConfig(EdgeMode.Frequency)
    s = featurize(g, fit_normalization([g], cfg), cfg)
    assert set(np.unique(s.adjacency)) == {0.0, 1.0}


@settings(max_examples=100, deadline=None)
@given(continuous_circuits(), st.sampled_from([EdgeMode.Ones, EdgeMode.Frequency,
                                               EdgeMode.ScalingFactor]),
       st.sampled_from(list(CapRepr)), st.sampled_from(list(IndRepr)))
def test_sample_invariants(circuit, edge, cap, ind):
    cfg = FeatureConfig(edge, cap, ind)
    g = to_bond_graph(circuit)
    s = featurize(g, fit_normalization([g], cfg), cfg)
    assert s.x.shape == (len(g.nodes), cfg.feature_dim)
    assert np.all(s.x[:, :N_KINDS].sum(axis=1) == 1)
    assert np.all(np.abs(s.x[:, N_KINDS]) <= 1.0)
    a = s.adjacency
    assert np.array_equal(a, a.T) and np.all(np.diag(a) == 0)
    assert np.all((a >= 0) & (a <= 1))


@settings(max_examples=60, deadline=None)
@given(continuous_circuits(), st.randoms(use_true_random=False))
def test_featurize_is_permutation_equivariant(circuit, rnd):
    g = to_bond_graph(circuit)
    base = fit_normalization([g], OPT)
    s = featurize(g, base, OPT)
    perm = list(range(len(g.nodes)))
    rnd.shuffle(perm)
    inv = np.argsort(perm)
    # relabel node ids: old node perm[i] becomes new node i
    from dataclasses import replace
    nodes = tuple(replace(g.nodes[perm[i]], id=i) for i in range(len(perm)))
    edges = tuple(replace(e, a=int(min(inv[e.a], inv[e.b])), b=int(max(inv[e.a], inv[e.b])))
                  for e in g.edges)
    s2 = featurize(replace(g, nodes=nodes, edges=edges), base, OPT)
    p = np.eye(len(perm))[perm]
    assert np.array_equal(s2.x, p @ s.x)
    assert np.array_equal(s2.adjacency, p @ s.adjacency @ p.T)
    assert s.permuted(perm) == s2


def test_feature_config_round_trip():
    for cfg in itertools.product(EdgeMode, CapRepr, IndRepr, (False, True)):
        c = FeatureConfig(*cfg)
        assert FeatureConfig.from_dict(c.to_dict()) == c
    assert OPT.fingerprint() != FeatureConfig().fingerprint() or OPT == FeatureConfig()
