"""End-to-end checks of the Python surface against the native library."""

import math
import os

import pytest

import handspan

MODELS = os.environ.get("HANDSPAN_MODELS", "models")


@pytest.fixture(scope="session")
def human():
    return handspan.load_hand_model(os.path.join(MODELS, "human_20dof.json"))


@pytest.fixture(scope="session")
def human_map(human):
    return handspan.build_reachability_map(human, grid=7)


def test_hand_model_loads(human):
    assert human.dof == 20
    assert "PALM" in human.link_names
    assert human.link_id("F2L3") >= 0


def test_catalog_loads():
    pool = handspan.load_object_catalog(os.path.join(MODELS, "objects_16.json"))
    assert len(pool) == 16
    parts = sorted(o.num_parts for o in pool)
    assert parts[-2:] == [2, 3]  # the two composite objects


def test_opposition_spaces(human, human_map):
    assert human_map.num_opposition_spaces > 50
    spaces = human_map.opposition_spaces(human)
    for os_entry in spaces:
        assert 0 <= os_entry["cap_min"] <= os_entry["cap_max"]


def test_kinematic_efficiency_closed_form():
    ke = handspan.kinematic_efficiency(2, 6, 1.0)
    assert ke["kappa"] == pytest.approx(math.exp(9.0), rel=1e-12)


def test_synthesize_sphere_grasp(human, human_map):
    ball = handspan.make_sphere("ball", 10.0)
    sol = handspan.synthesize_grasp(human, human_map, ball, mode="single",
                                    restarts=4, seed=5)
    assert sol["feasible"]
    assert sol["max_violation"] <= 1e-6
    assert sol["contact_distance"] <= 20.0 + 1e-6
    assert len(sol["joint_angles"]) == 20


def test_synthesize_is_deterministic(human, human_map):
    ball = handspan.make_sphere("ball", 10.0)
    a = handspan.synthesize_grasp(human, human_map, ball, restarts=2, seed=3)
    b = handspan.synthesize_grasp(human, human_map, ball, restarts=2, seed=3)
    assert a["x"] == b["x"]
    assert a["objective"] == b["objective"]


def test_oversized_object_rejected(human, human_map):
    boulder = handspan.make_sphere("boulder", 500.0)
    with pytest.raises(handspan.NoPermissiveOS):
        handspan.synthesize_grasp(human, human_map, boulder, seed=1)
