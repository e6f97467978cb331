"""Multi-contact grasp planning over hand kinematic redundancy."""

from _handspan import (
    HandModel,
    ObjectModel,
    ReachabilityMap,
    ValidationError,
    NoPermissiveOS,
    NoFeasibleGrasp,
    build_reachability_map,
    kinematic_efficiency,
    load_hand_model,
    load_object_catalog,
    make_cylinder,
    make_sphere,
    plan_sequential,
    synthesize_grasp,
)

__all__ = [
    "HandModel",
    "ObjectModel",
    "ReachabilityMap",
    "ValidationError",
    "NoPermissiveOS",
    "NoFeasibleGrasp",
    "build_reachability_map",
    "kinematic_efficiency",
    "load_hand_model",
    "load_object_catalog",
    "make_cylinder",
    "make_sphere",
    "plan_sequential",
    "synthesize_grasp",
]
