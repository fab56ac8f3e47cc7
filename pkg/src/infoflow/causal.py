"""Exact inference on small categorical DAG models of data dependencies.

Builds the dense joint by enumeration (guarded by a hard state-space
cap, since exact factoring does not scale), profiles how much each
variable leaks through a transmitted message node, and attributes
flows: an explicit flow whose message carries information about a node
owned by somebody other than the sender induces an implicit flow from
that owner. Ships two fully worked scenarios (sibling bundling via a
shared-ancestry switch, and a released ballot tally) plus the seeded
fork/collider network used as a regression fixture.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from ._kernels import dense_joint, entropy_bits, mi_bits
from .errors import CapacityError
from .measures import SUM_TOL, InfoMeasure, _check_labels, _freeze
from .society import Context, FlowEvent, bundle_contexts

STATE_SPACE_CAP = 2**22
JOINT_SUM_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Node:
    """Categorical node: states, parent names, and a CPT.

    ``cpt`` has shape (number of parent-state combinations, number of
    states); combinations run row-major over the parents in declared
    order (first parent most significant).
    """

    name: str
    states: tuple[str, ...]
    parents: tuple[str, ...]
    cpt: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", _check_labels(self.states, f"states of {self.name}"))
        object.__setattr__(self, "parents", tuple(self.parents))
        if len(set(self.parents)) != len(self.parents):
            raise ValueError(f"duplicate parents on node {self.name!r}")
        c = np.asarray(self.cpt, dtype=np.float64).copy()
        if c.ndim == 1:
            c = c.reshape(1, -1)
        if c.ndim != 2 or c.shape[1] != len(self.states):
            raise ValueError(f"cpt of {self.name!r} must have {len(self.states)} columns")
        if (c < 0).any():
            raise ValueError(f"negative cpt entry on node {self.name!r}")
        bad = np.abs(c.sum(axis=1) - 1.0) > SUM_TOL
        if bad.any():
            raise ValueError(f"cpt rows {np.flatnonzero(bad).tolist()} of {self.name!r} not stochastic")
        object.__setattr__(self, "cpt", _freeze(c))

    @property
    def card(self) -> int:
        return len(self.states)


@dataclass(frozen=True, eq=False)
class BayesNet:
    """DAG of categorical nodes; declaration order must be topological."""

    nodes: tuple[Node, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate node names")
        seen: dict[str, Node] = {}
        for node in self.nodes:
            for p in node.parents:
                if p not in seen:
                    raise ValueError(
                        f"parent {p!r} of {node.name!r} not declared earlier (order must be topological)"
                    )
            expect_rows = 1
            for p in node.parents:
                expect_rows *= seen[p].card
            if node.cpt.shape[0] != expect_rows:
                raise ValueError(
                    f"cpt of {node.name!r} has {node.cpt.shape[0]} rows, expected {expect_rows}"
                )
            seen[node.name] = node

    def node(self, name: str) -> Node:
        for n in self.nodes:
            if n.name == name:
                return n
        raise ValueError(f"unknown node {name!r}")

    def index(self, name: str) -> int:
        for i, n in enumerate(self.nodes):
            if n.name == name:
                return i
        raise ValueError(f"unknown node {name!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n.name for n in self.nodes)

    @property
    def cards(self) -> tuple[int, ...]:
        return tuple(n.card for n in self.nodes)

    def state_space_size(self) -> int:
        return math.prod(self.cards)


@dataclass(frozen=True, eq=False)
class DenseJoint:
    """Exact joint over all nodes as a dense probability tensor."""

    names: tuple[str, ...]
    states: tuple[tuple[str, ...], ...]
    probs: np.ndarray

    def marginal(self, *names: str) -> np.ndarray:
        """Marginal tensor with axes in the requested name order."""
        keep = [self.names.index(n) for n in names]
        drop = tuple(i for i in range(len(self.names)) if i not in keep)
        m = self.probs.sum(axis=drop) if drop else self.probs
        perm = [sorted(keep).index(k) for k in keep]
        return np.transpose(m, perm)

    def states_of(self, name: str) -> tuple[str, ...]:
        return self.states[self.names.index(name)]


def joint(net: BayesNet) -> DenseJoint:
    """Dense joint by enumerating every state combination.

    Refuses state spaces beyond STATE_SPACE_CAP configurations; exact
    enumeration is a desk-scale tool.
    """
    size = net.state_space_size()
    if size > STATE_SPACE_CAP:
        raise CapacityError(
            f"state space has {size} configurations, exceeding the cap of {STATE_SPACE_CAP}"
        )
    name_to_idx = {n.name: i for i, n in enumerate(net.nodes)}
    cards = np.asarray(net.cards, dtype=np.int64)
    cpts = [n.cpt for n in net.nodes]
    parents = [[name_to_idx[p] for p in n.parents] for n in net.nodes]
    flat = dense_joint(cards, cpts, parents)
    total = float(flat.sum())
    if abs(total - 1.0) > JOINT_SUM_TOL:
        raise ValueError(f"joint sums to {total}, outside tolerance")
    probs = flat.reshape(tuple(net.cards))
    return DenseJoint(
        names=net.names,
        states=tuple(n.states for n in net.nodes),
        probs=_freeze(probs),
    )


def conditional_mi(dense: DenseJoint, a: str, b: str, given: list[str] | tuple[str, ...] = ()) -> float:
    """I(a; b | given) in Sh, from the dense joint."""
    axes = [a, b] + [g for g in given]
    m = dense.marginal(*axes)
    flat = m.reshape(m.shape[0], m.shape[1], -1)
    total = 0.0
    for g in range(flat.shape[2]):
        cell = np.ascontiguousarray(flat[:, :, g])
        pg = float(cell.sum())
        if pg > 0.0:
            total += pg * mi_bits(cell / pg)
    return max(total, 0.0)


@dataclass(frozen=True)
class LeakageProfile:
    """Per-node information revealed by transmitting one message node."""

    message_node: str
    observed_value: str
    per_node_mi: dict[str, float]
    per_node_posterior_entropy_drop: dict[str, float]

    def rows_sorted(self) -> list[dict]:
        rows = [
            {
                "node": v,
                "mi_sh": self.per_node_mi[v],
                "posterior_entropy_drop_sh": self.per_node_posterior_entropy_drop[v],
            }
            for v in self.per_node_mi
        ]
        rows.sort(key=lambda r: (-r["mi_sh"], r["node"]))
        return rows

    def to_json_dict(self) -> dict:
        return {
            "message_node": self.message_node,
            "observed_value": self.observed_value,
            "profile": self.rows_sorted(),
        }


def leakage_profile(net: BayesNet, message: str, observed: str | None = None) -> LeakageProfile:
    """I(message; V) and realized posterior-entropy drop for every other node V.

    The drop is H(V) - H(V | message = observed); when no observed value
    is passed, the message's most probable value is used. Nodes
    independent of the message report (numerically) zero.
    """
    dense = joint(net)
    msg_node = net.node(message)
    pm = dense.marginal(message)
    if observed is None:
        obs_idx = int(np.argmax(pm))
    else:
        if observed not in msg_node.states:
            raise ValueError(f"unknown message value {observed!r}")
        obs_idx = msg_node.states.index(observed)
    if pm[obs_idx] <= 0.0:
        raise ValueError(f"message value {msg_node.states[obs_idx]!r} has probability 0")

    mis: dict[str, float] = {}
    drops: dict[str, float] = {}
    for node in net.nodes:
        if node.name == message:
            continue
        m2 = np.ascontiguousarray(dense.marginal(message, node.name))
        mis[node.name] = max(mi_bits(m2), 0.0)
        h_prior = entropy_bits(m2.sum(axis=0))
        cond = np.ascontiguousarray(m2[obs_idx] / pm[obs_idx])
        drops[node.name] = h_prior - entropy_bits(cond)
    return LeakageProfile(
        message_node=message,
        observed_value=msg_node.states[obs_idx],
        per_node_mi=mis,
        per_node_posterior_entropy_drop=drops,
    )


# ---------------------------------------------------------------------------
# worked scenarios
# ---------------------------------------------------------------------------


def twins_scenario(q: float = 0.5) -> tuple[BayesNet, dict]:
    """Sibling bundling: a shared-ancestry switch couples two traits.

    Z is the ancestry switch (identical/fraternal, prior q), S1 the
    sender's trait, S2 the sibling's. When Z = identical, S2 copies S1;
    otherwise it is independent. The report quantifies the induced
    implicit flow: once S1 is observed, revealing Z = identical drives
    the posterior entropy of S2 to zero.
    """
    if not (0.0 < q < 1.0):
        raise ValueError(f"q must be in (0,1), got {q}")
    z = Node("Z", ("identical", "fraternal"), (), np.array([q, 1.0 - q]))
    s1 = Node("S1", ("0", "1"), (), np.array([0.5, 0.5]))
    s2 = Node(
        "S2",
        ("0", "1"),
        ("Z", "S1"),
        np.array(
            [
                [1.0, 0.0],  # identical, S1=0
                [0.0, 1.0],  # identical, S1=1
                [0.5, 0.5],  # fraternal, S1=0
                [0.5, 0.5],  # fraternal, S1=1
            ]
        ),
    )
    net = BayesNet((z, s1, s2))
    dense = joint(net)
    probs = dense.marginal("Z", "S1", "S2")

    def h_s2_given(z_idx: int, s1_idx: int) -> float:
        cell = probs[z_idx, s1_idx]
        return entropy_bits(np.ascontiguousarray(cell / cell.sum()))

    report = {
        "zygosity_prior": q,
        "posterior_entropy_s2_identical_sh": h_s2_given(0, 0),
        "posterior_entropy_s2_fraternal_sh": h_s2_given(1, 0),
        "mi_zygosity_s2_given_s1_sh": conditional_mi(dense, "Z", "S2", ["S1"]),
        "mi_s1_s2_sh": conditional_mi(dense, "S1", "S2"),
    }
    return net, report


def ballot_scenario(n_voters: int) -> tuple[BayesNet, dict]:
    """Released tally of n iid uniform binary votes.

    The report is computed by enumerating all 2^n voter configurations:
    mutual information between the tally and one vote, and the posterior
    over that vote for every tally value (unanimous tallies pin it
    down exactly).
    """
    if n_voters < 2:
        raise ValueError(f"need at least 2 voters, got {n_voters}")
    if n_voters > 20:
        raise CapacityError(f"{n_voters} voters exceed the 20-voter enumeration cap")
    n = n_voters
    voters = [Node(f"V{i + 1}", ("0", "1"), (), np.array([0.5, 0.5])) for i in range(n)]
    combos = np.arange(2**n, dtype=np.int64)
    tally = np.zeros(2**n, dtype=np.int64)
    for k in range(n):
        tally += (combos >> k) & 1
    cpt = np.zeros((2**n, n + 1))
    cpt[combos, tally] = 1.0
    t_node = Node("T", tuple(str(t) for t in range(n + 1)), tuple(v.name for v in voters), cpt)
    net = BayesNet(tuple(voters) + (t_node,))

    # report via direct enumeration of voter configurations
    v1 = (combos >> (n - 1)) & 1  # first parent is the most significant digit
    jm = np.zeros((n + 1, 2))
    np.add.at(jm, (tally, v1), 2.0**-n)
    p_t = jm.sum(axis=1)
    posterior = {}
    h_v1_given_t = 0.0
    for t in range(n + 1):
        row = jm[t] / p_t[t]
        h = entropy_bits(np.ascontiguousarray(row))
        posterior[str(t)] = {"p_v1_one": float(row[1]), "entropy_sh": h}
        h_v1_given_t += float(p_t[t]) * h
    report = {
        "n_voters": n,
        "i_tally_v1_sh": max(mi_bits(jm), 0.0),
        "h_v1_given_tally_sh": h_v1_given_t,
        "posterior_v1": posterior,
    }
    return net, report


def fork_collider_graph(seed: int = 42) -> BayesNet:
    """Seeded all-binary fork/collider network with a transmitted message.

    Structure: A -> {D, E}; B, C -> D; D, F -> E; E, G -> X; X -> M.
    A forks into D and E; E and G collide on X; M is the transmitted
    message hanging off X. CPT rows are flat-Dirichlet draws from one
    seeded generator, so the resulting leakage values are reproducible
    fixtures.
    """
    rng = np.random.default_rng(seed)
    structure = [
        ("A", ()),
        ("B", ()),
        ("C", ()),
        ("F", ()),
        ("G", ()),
        ("D", ("A", "B", "C")),
        ("E", ("A", "D", "F")),
        ("X", ("E", "G")),
        ("M", ("X",)),
    ]
    nodes = []
    for name, parents in structure:
        rows = rng.dirichlet(np.ones(2), size=2 ** len(parents))
        nodes.append(Node(name, ("0", "1"), parents, rows))
    return BayesNet(tuple(nodes))


# ---------------------------------------------------------------------------
# flow attribution
# ---------------------------------------------------------------------------


def attribute_flows(
    context_log: list[FlowEvent],
    net: BayesNet,
    ownership: dict[str, str],
    threshold: float = 1e-6,
    window: int = 1,
    node_of: dict[str, str] | None = None,
) -> list[tuple[Context, Context]]:
    """Induce implicit contexts from explicit flows that leak others' data.

    For every explicit flow whose message node carries more than
    ``threshold`` Sh about a node owned by an entity other than the
    sender (or receiver), an implicit context is emitted with that owner
    as sender, paired with the explicit context that caused it. Because
    a receiver accumulates messages, the leak of each flow is measured
    conditionally on the earlier explicit messages in the same context.

    ``node_of`` optionally maps datum ids to net nodes; data without a
    mapping are skipped. Without it, each datum id must itself be a
    node name.
    """
    for node_name in ownership:
        net.node(node_name)  # raises on unknown nodes
    if node_of is not None:
        for node_name in node_of.values():
            net.node(node_name)

    def message_node(ev: FlowEvent) -> str | None:
        if node_of is not None:
            return node_of.get(ev.datum)
        net.node(ev.datum)  # raises on unknown nodes
        return ev.datum

    dense = joint(net)
    pairs: list[tuple[Context, Context]] = []
    for ctx in bundle_contexts(context_log, window=window):
        conditioning: list[str] = []
        for flow in ctx.flows:
            if flow.kind != "explicit":
                continue
            m = message_node(flow)
            if m is None:
                continue
            leaks: dict[str, list[tuple[str, float]]] = {}
            for node in net.nodes:
                owner = ownership.get(node.name)
                if node.name == m or owner is None:
                    continue
                if owner in (flow.sender, flow.receiver):
                    continue
                mi = conditional_mi(dense, m, node.name, conditioning)
                if mi > threshold:
                    leaks.setdefault(owner, []).append((node.name, mi))
            for owner, leaked in leaks.items():
                induced_id = f"{flow.id}~{owner}"
                induced_flows = tuple(
                    FlowEvent(
                        id=f"{induced_id}:{node_name}",
                        t=flow.t,
                        sender=owner,
                        receiver=flow.receiver,
                        datum=node_name,
                        measure=InfoMeasure(
                            selective_sh=mi,
                            logons=net.node(node_name).card,
                            metrons=1,
                        ),
                        kind="implicit",
                        context_id=induced_id,
                    )
                    for node_name, mi in leaked
                )
                pairs.append(
                    (
                        ctx,
                        Context(
                            id=induced_id,
                            t=flow.t,
                            sender=owner,
                            receiver=flow.receiver,
                            flows=induced_flows,
                        ),
                    )
                )
            if m not in conditioning:
                conditioning.append(m)
    return pairs


# ---------------------------------------------------------------------------
# JSON schema
# ---------------------------------------------------------------------------


def _combo_key(parent_states: tuple[str, ...]) -> str:
    return ",".join(parent_states)


def net_to_json_dict(net: BayesNet) -> dict:
    nodes = []
    for node in net.nodes:
        if not node.parents:
            cpt = [float(v) for v in node.cpt[0]]
        else:
            parent_states = [net.node(p).states for p in node.parents]
            for states in parent_states:
                if any("," in s for s in states):
                    raise ValueError("state labels used as cpt keys must not contain commas")
            cpt = {
                _combo_key(combo): [float(v) for v in node.cpt[i]]
                for i, combo in enumerate(itertools.product(*parent_states))
            }
        nodes.append(
            {
                "name": node.name,
                "states": list(node.states),
                "parents": list(node.parents),
                "cpt": cpt,
            }
        )
    return {"nodes": nodes}


def net_from_json_dict(d: dict) -> BayesNet:
    declared: dict[str, Node] = {}
    nodes = []
    for spec in d["nodes"]:
        name = spec["name"]
        parents = tuple(spec.get("parents", ()))
        cpt_spec = spec["cpt"]
        if not parents:
            if not isinstance(cpt_spec, list):
                raise ValueError(f"root node {name!r} expects a flat cpt list")
            cpt = np.asarray(cpt_spec, dtype=np.float64)
        else:
            for p in parents:
                if p not in declared:
                    raise ValueError(f"parent {p!r} of {name!r} not declared earlier")
            combos = list(itertools.product(*(declared[p].states for p in parents)))
            missing = [c for c in combos if _combo_key(c) not in cpt_spec]
            if missing or len(cpt_spec) != len(combos):
                raise ValueError(f"cpt of {name!r} must have exactly one row per parent combination")
            cpt = np.asarray([cpt_spec[_combo_key(c)] for c in combos], dtype=np.float64)
        node = Node(name, tuple(spec["states"]), parents, cpt)
        declared[name] = node
        nodes.append(node)
    return BayesNet(tuple(nodes))


def load_net(path) -> BayesNet:
    with open(path) as fh:
        return net_from_json_dict(json.load(fh))
