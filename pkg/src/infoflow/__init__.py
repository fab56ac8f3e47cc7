"""Exact information-flow accounting over finite distributions.

Information measures on labeled finite distributions, randomizing
mechanisms as channels with certified per-invocation information caps,
exact leakage profiles on small causal networks, a seeded simulator of
explicit/implicit flows with budget ledgers, and a linkage-attack
harness showing where k-anonymity fails.
"""

from ._kernels import backend
from .anonymity import AnonReport, Table, dp_release, k_anonymity_level, linkage_attack
from .causal import (
    BayesNet,
    DenseJoint,
    LeakageProfile,
    Node,
    attribute_flows,
    ballot_scenario,
    conditional_mi,
    joint,
    leakage_profile,
    fork_collider_graph,
    twins_scenario,
)
from .channels import (
    BoundCertificate,
    Channel,
    EpsReport,
    bound_sweep,
    check_mi_bound,
    compose,
    dp_to_mi_bound,
    mi_without_dp_example,
    post_process,
    push_through,
    random_channel,
    random_prior,
    randomized_response,
    realized_epsilon,
)
from .errors import CapacityError
from .measures import (
    UNBOUNDED,
    Dist,
    InfoMeasure,
    Joint,
    Representation,
    Unbounded,
    entropy,
    mutual_information,
    self_information,
    structural_metric_content,
    total_variation,
)
from .society import (
    BudgetStop,
    Context,
    DatumRecord,
    Entity,
    FactorState,
    FlowEvent,
    ImplicitChannel,
    Ledger,
    LogisticParams,
    ReleaseMechanism,
    Scenario,
    Simulation,
    SimulationResult,
    Society,
    bundle_contexts,
    decision_prob,
    ledger_report,
    load_scenario,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "AnonReport",
    "BayesNet",
    "BoundCertificate",
    "BudgetStop",
    "CapacityError",
    "Channel",
    "Context",
    "DatumRecord",
    "DenseJoint",
    "Dist",
    "Entity",
    "EpsReport",
    "FactorState",
    "FlowEvent",
    "ImplicitChannel",
    "InfoMeasure",
    "Joint",
    "LeakageProfile",
    "Ledger",
    "LogisticParams",
    "Node",
    "ReleaseMechanism",
    "Representation",
    "Scenario",
    "Simulation",
    "SimulationResult",
    "Society",
    "Table",
    "UNBOUNDED",
    "Unbounded",
    "attribute_flows",
    "backend",
    "ballot_scenario",
    "bound_sweep",
    "bundle_contexts",
    "check_mi_bound",
    "compose",
    "conditional_mi",
    "decision_prob",
    "dp_release",
    "dp_to_mi_bound",
    "entropy",
    "joint",
    "k_anonymity_level",
    "leakage_profile",
    "ledger_report",
    "linkage_attack",
    "load_scenario",
    "mi_without_dp_example",
    "mutual_information",
    "fork_collider_graph",
    "post_process",
    "push_through",
    "random_channel",
    "random_prior",
    "randomized_response",
    "realized_epsilon",
    "self_information",
    "simulate",
    "structural_metric_content",
    "total_variation",
    "twins_scenario",
]
