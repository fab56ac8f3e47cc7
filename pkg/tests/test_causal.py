import itertools
import json
from importlib import resources

import numpy as np
import pytest

from infoflow import (
    BayesNet,
    CapacityError,
    FlowEvent,
    InfoMeasure,
    Node,
    attribute_flows,
    ballot_scenario,
    conditional_mi,
    joint,
    leakage_profile,
    fork_collider_graph,
    twins_scenario,
)
from infoflow.causal import load_net, net_from_json_dict, net_to_json_dict
from helpers import entropy_cells, mi_cells, naive_net_joint, naive_pair_mi


def binary_root(name, p1=0.5):
    return Node(name, ("0", "1"), (), np.array([1 - p1, p1]))


def copy_node(name, parent):
    return Node(name, ("0", "1"), (parent,), np.array([[1.0, 0.0], [0.0, 1.0]]))


def random_small_net(rng, n_nodes=5):
    nodes = []
    for k in range(n_nodes):
        card = int(rng.integers(2, 4))
        n_par = int(rng.integers(0, min(k, 2) + 1))
        pars = sorted(rng.choice(k, size=n_par, replace=False).tolist())
        par_names = tuple(nodes[p].name for p in pars)
        rows = int(np.prod([nodes[p].card for p in pars])) if pars else 1
        cpt = rng.dirichlet(np.ones(card), size=rows)
        nodes.append(Node(f"N{k}", tuple(str(s) for s in range(card)), par_names, cpt))
    return BayesNet(tuple(nodes))


def explicit_event(sender, receiver, datum, t=0):
    return FlowEvent(
        id=f"x:{t}:{sender}>{receiver}:{datum}",
        t=t,
        sender=sender,
        receiver=receiver,
        datum=datum,
        measure=InfoMeasure(1.0, 2, 1),
        kind="explicit",
        context_id=f"c:{t}:{sender}>{receiver}",
    )


class TestJoint:
    def test_single_root(self):
        net = BayesNet((binary_root("A"),))
        assert np.allclose(joint(net).probs, [0.5, 0.5])

    def test_deterministic_chain_is_diagonal(self):
        net = BayesNet((binary_root("X"), copy_node("Y", "X")))
        assert np.allclose(joint(net).probs, np.eye(2) / 2)

    def test_fork_collider_graph_sums_to_one(self):
        dense = joint(fork_collider_graph(seed=42))
        assert dense.probs.sum() == pytest.approx(1.0, abs=1e-6)
        assert dense.probs.size == 2**9

    def test_matches_naive_factor_product(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            net = random_small_net(rng)
            dense = joint(net)
            naive = naive_net_joint(net)
            flat = dense.probs.reshape(-1)
            for i, combo in enumerate(itertools.product(*(range(c) for c in net.cards))):
                assert abs(flat[i] - naive[combo]) < 1e-12

    def test_capacity_guard_names_size(self):
        net = BayesNet(tuple(binary_root(f"R{i}") for i in range(23)))
        with pytest.raises(CapacityError, match=str(2**23)):
            joint(net)

    def test_requires_topological_declaration(self):
        with pytest.raises(ValueError, match="topological"):
            BayesNet((copy_node("Y", "X"), binary_root("X")))

    def test_rejects_bad_cpt_shape(self):
        with pytest.raises(ValueError, match="rows"):
            BayesNet(
                (
                    binary_root("A"),
                    Node("B", ("0", "1"), ("A",), np.array([[0.5, 0.5]])),
                )
            )


class TestLeakageProfile:
    def test_disconnected_node_leaks_nothing(self):
        net = BayesNet((binary_root("X"), copy_node("M", "X"), binary_root("H", 0.4)))
        prof = leakage_profile(net, "M")
        assert prof.per_node_mi["H"] < 1e-9

    def test_deterministic_copy_reveals_everything(self):
        net = BayesNet((Node("X", ("0", "1"), (), np.array([0.7, 0.3])), copy_node("M", "X")))
        prof = leakage_profile(net, "M")
        assert prof.per_node_mi["X"] == pytest.approx(entropy_cells([0.7, 0.3]), abs=1e-12)

    def test_collider_keeps_parents_independent(self):
        rng = np.random.default_rng(5)
        net = BayesNet(
            (
                binary_root("A", 0.3),
                binary_root("B", 0.6),
                Node("C", ("0", "1"), ("A", "B"), rng.dirichlet(np.ones(2), size=4)),
            )
        )
        assert leakage_profile(net, "A").per_node_mi["B"] < 1e-9

    def test_fork_collider_graph_all_nodes_leak(self):
        prof = leakage_profile(fork_collider_graph(seed=42), "M")
        assert set(prof.per_node_mi) == set("ABCDEFG") | {"X"}
        assert all(v > 1e-6 for v in prof.per_node_mi.values())

    def test_fork_collider_graph_mi_matches_naive_oracle(self):
        net = fork_collider_graph(seed=42)
        prof = leakage_profile(net, "M")
        for v in ("A", "D", "G", "X"):
            assert prof.per_node_mi[v] == pytest.approx(naive_pair_mi(net, "M", v), abs=1e-12)

    def test_mi_bounded_by_marginal_entropies(self):
        net = fork_collider_graph(seed=42)
        dense = joint(net)
        prof = leakage_profile(net, "M")
        h_m = entropy_cells(dense.marginal("M"))
        for v, mi in prof.per_node_mi.items():
            assert mi <= min(h_m, entropy_cells(dense.marginal(v))) + 1e-9

    def test_observed_value_must_exist(self):
        net = BayesNet((binary_root("X"), copy_node("M", "X")))
        with pytest.raises(ValueError, match="unknown message value"):
            leakage_profile(net, "M", observed="7")

    def test_sorted_rows_descend(self):
        rows = leakage_profile(fork_collider_graph(seed=42), "M").rows_sorted()
        mis = [r["mi_sh"] for r in rows]
        assert mis == sorted(mis, reverse=True)


class TestTwins:
    def test_identical_branch_pins_sibling(self):
        _, report = twins_scenario()
        assert report["posterior_entropy_s2_identical_sh"] == pytest.approx(0.0, abs=1e-12)

    def test_fraternal_branch_stays_uniform(self):
        _, report = twins_scenario()
        assert report["posterior_entropy_s2_fraternal_sh"] == pytest.approx(1.0, abs=1e-12)

    def test_conditional_mi_against_eight_state_oracle(self):
        # brute force over the 8 joint states, independent of the library
        joint_cells = {}
        for z, s1, s2 in itertools.product(range(2), repeat=3):
            p_s2 = (1.0 if s2 == s1 else 0.0) if z == 0 else 0.5
            joint_cells[(z, s1, s2)] = 0.5 * 0.5 * p_s2
        expected = 0.0
        for s1 in range(2):
            p_s1 = sum(p for (z, s, s2), p in joint_cells.items() if s == s1)
            cond = {
                (z, s2): joint_cells[(z, s1, s2)] / p_s1
                for z in range(2)
                for s2 in range(2)
            }
            expected += p_s1 * mi_cells(cond)
        _, report = twins_scenario()
        assert report["mi_zygosity_s2_given_s1_sh"] == pytest.approx(expected, abs=1e-12)
        assert report["mi_zygosity_s2_given_s1_sh"] == pytest.approx(0.3112781244591328, abs=1e-9)

    def test_zygosity_marginally_independent_of_sibling(self):
        net, _ = twins_scenario()
        assert conditional_mi(joint(net), "Z", "S2") < 1e-12

    def test_rejects_degenerate_prior(self):
        with pytest.raises(ValueError):
            twins_scenario(q=0.0)


class TestBallot:
    def test_three_voters_against_enumeration(self):
        # enumerate the 8 voter configurations by hand
        cells = {}
        for cfg in itertools.product(range(2), repeat=3):
            cells[(sum(cfg), cfg[0])] = cells.get((sum(cfg), cfg[0]), 0.0) + 1 / 8
        _, report = ballot_scenario(3)
        assert report["i_tally_v1_sh"] == pytest.approx(mi_cells(cells), abs=1e-12)
        assert report["i_tally_v1_sh"] == pytest.approx(0.311278, abs=1e-6)

    def test_unanimous_tally_pins_every_vote(self):
        _, report = ballot_scenario(3)
        assert report["posterior_v1"]["3"]["entropy_sh"] == pytest.approx(0.0, abs=1e-12)
        assert report["posterior_v1"]["0"]["entropy_sh"] == pytest.approx(0.0, abs=1e-12)

    def test_posterior_probability_at_tally_one(self):
        _, report = ballot_scenario(3)
        assert report["posterior_v1"]["1"]["p_v1_one"] == pytest.approx(1 / 3, abs=1e-12)

    def test_chain_rule_identity(self):
        for n in (2, 3, 5):
            _, report = ballot_scenario(n)
            assert report["i_tally_v1_sh"] + report["h_v1_given_tally_sh"] == pytest.approx(
                1.0, abs=1e-9
            )

    def test_net_tally_is_deterministic_sum(self):
        net, _ = ballot_scenario(3)
        dense = joint(net)
        m = dense.marginal("V1", "V2", "V3", "T")
        for v1, v2, v3 in itertools.product(range(2), repeat=3):
            row = m[v1, v2, v3]
            assert row[v1 + v2 + v3] == pytest.approx(0.125, abs=1e-12)
            assert row.sum() == pytest.approx(0.125, abs=1e-12)

    def test_capacity_and_domain_errors(self):
        with pytest.raises(CapacityError):
            ballot_scenario(21)
        with pytest.raises(ValueError):
            ballot_scenario(1)


class TestAttributeFlows:
    def test_twins_flows_induce_sibling_context(self):
        net, _ = twins_scenario()
        events = [
            explicit_event("twin1", "receiver", "S1"),
            explicit_event("twin1", "receiver", "Z"),
        ]
        ownership = {"S1": "twin1", "Z": "twin2", "S2": "twin2"}
        pairs = attribute_flows(events, net, ownership)
        assert len(pairs) == 2
        for cause, induced in pairs:
            assert induced.sender == "twin2"
            assert induced.receiver == "receiver"
            assert all(f.kind == "implicit" for f in induced.flows)
        # the ancestry reveal leaks the sibling trait only given the first message
        leak = {f.datum: f.measure.selective_sh for f in pairs[1][1].flows}
        assert leak["S2"] == pytest.approx(0.3112781244591328, abs=1e-9)

    def test_disconnected_message_induces_nothing(self):
        net = BayesNet((binary_root("X"), copy_node("M", "X"), binary_root("H")))
        pairs = attribute_flows(
            [explicit_event("a", "b", "H")], net, ownership={"X": "c", "M": "a"}
        )
        assert pairs == []

    def test_ballot_release_induces_one_context_per_voter(self):
        net, _ = ballot_scenario(4)
        ownership = {f"V{i + 1}": f"voter{i + 1}" for i in range(4)}
        pairs = attribute_flows([explicit_event("authority", "public", "T")], net, ownership)
        assert len(pairs) == 4
        assert sorted(p[1].sender for p in pairs) == [f"voter{i + 1}" for i in range(4)]

    def test_sender_owned_nodes_induce_nothing(self):
        net, _ = twins_scenario()
        events = [explicit_event("twin1", "receiver", "Z")]
        pairs = attribute_flows(events, net, ownership={"S1": "twin1", "Z": "twin1", "S2": "twin1"})
        assert pairs == []

    def test_receiver_owned_nodes_induce_nothing(self):
        net, _ = twins_scenario()
        events = [explicit_event("twin1", "receiver", "Z")]
        pairs = attribute_flows(events, net, ownership={"S2": "receiver"})
        assert pairs == []

    def test_unknown_node_rejected(self):
        net, _ = twins_scenario()
        with pytest.raises(ValueError, match="unknown node"):
            attribute_flows([explicit_event("a", "b", "nope")], net, ownership={})
        with pytest.raises(ValueError, match="unknown node"):
            attribute_flows([], net, ownership={"nope": "a"})

    def test_node_mapping_skips_unmodeled_data(self):
        net, _ = twins_scenario()
        events = [explicit_event("twin1", "receiver", "shoe_size")]
        pairs = attribute_flows(events, net, ownership={"S2": "twin2"}, node_of={})
        assert pairs == []


class TestNetJson:
    def test_round_trip(self):
        net = fork_collider_graph(seed=42)
        back = net_from_json_dict(json.loads(json.dumps(net_to_json_dict(net))))
        assert back.names == net.names
        for a, b in zip(net.nodes, back.nodes):
            assert np.array_equal(a.cpt, b.cpt)

    def test_bundled_fixture_matches_builder(self):
        with resources.files("infoflow.data").joinpath("fork_collider.json").open() as fh:
            bundled = net_from_json_dict(json.load(fh))
        built = fork_collider_graph(seed=42)
        assert bundled.names == built.names
        for a, b in zip(bundled.nodes, built.nodes):
            assert np.array_equal(a.cpt, b.cpt)

    def test_missing_cpt_row_rejected(self):
        doc = {
            "nodes": [
                {"name": "A", "states": ["0", "1"], "parents": [], "cpt": [0.5, 0.5]},
                {
                    "name": "B",
                    "states": ["0", "1"],
                    "parents": ["A"],
                    "cpt": {"0": [0.5, 0.5]},
                },
            ]
        }
        with pytest.raises(ValueError, match="one row per parent combination"):
            net_from_json_dict(doc)

    def test_load_net(self, tmp_path):
        path = tmp_path / "net.json"
        net, _ = twins_scenario()
        path.write_text(json.dumps(net_to_json_dict(net)))
        assert load_net(path).names == net.names
