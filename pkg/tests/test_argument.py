"""Skeleton generation, indicator extraction, refinement, and consistency."""
from __future__ import annotations

import random

import pytest

from driftwatch.architecture import load_architecture
from driftwatch.argument import (
    ArgumentNode,
    NodeKind,
    SkeletonError,
    check_consistency,
    check_refinement,
    extract_indicators,
    generate_skeleton,
    load_argument,
    to_dot,
    unquantified_claims,
)
from driftwatch.smb import ArtifactLink, LinkKind, Smb, load_smb

from helpers import FIXTURE_DIR, random_arch_smb


@pytest.fixture()
def arch():
    return load_architecture(FIXTURE_DIR / "architecture.yaml")


@pytest.fixture()
def smb():
    return load_smb(FIXTURE_DIR / "smb.yaml")


@pytest.fixture()
def argument():
    return load_argument(FIXTURE_DIR / "argument.yaml")


def insert_strategy_layer(argument, parent_id: str, rng: random.Random):
    """Splice a strategy node between a parent and its children."""
    node_id = f"S_extra_{rng.randint(0, 10**9)}"
    argument.nodes[node_id] = ArgumentNode(node_id, NodeKind.STRATEGY, "argue over sub-claims")
    argument.children[node_id] = argument.children.get(parent_id, [])
    argument.children[parent_id] = [node_id]
    return node_id


class TestGenerateSkeleton:
    def test_worked_example_shape(self, smb, arch):
        skeleton = generate_skeleton(smb, arch)
        kinds = {nid: node.kind for nid, node in skeleton.nodes.items()}
        root = skeleton.nodes[skeleton.root]
        assert root.kind is NodeKind.GOAL and "E4" in root.id
        assert root.quant_ref == "SPI_LRE"
        # top-event subgoal, one goal per barrier, one solution leaf per threat
        assert kinds["G.E3"] is NodeKind.GOAL
        for barrier in ("B1", "B2", "B3", "B4", "B5"):
            assert kinds[f"G.{barrier}"] is NodeKind.GOAL
        assert kinds["S.E1"] is NodeKind.SOLUTION
        assert kinds["S.E2"] is NodeKind.SOLUTION
        assert skeleton.nodes["G.B4"].quant_ref == "SPI_PFO"
        assert skeleton.nodes["S.E2"].quant_ref == "SPI_RMO"
        # barrier goals and solutions all hang below the top-event goal
        below_top = skeleton.descendants("G.E3")
        assert {"G.B1", "G.B2", "G.B3", "G.B4", "G.B5", "S.E1", "S.E2"} <= below_top
        assert skeleton.validate() == []

    def test_solution_leaves_equal_threat_count(self, smb, arch):
        skeleton = generate_skeleton(smb, arch)
        solutions = [n for n in skeleton.nodes.values() if n.kind is NodeKind.SOLUTION]
        threats = sum(len(b.threat_chains) for b in arch.bowties)
        assert len(solutions) == threats

    def test_empty_smb_flagged_unquantified(self, arch):
        skeleton = generate_skeleton(Smb(), arch)
        assert extract_indicators(skeleton) == set()
        assert len(unquantified_claims(skeleton)) == len(
            [n for n in skeleton.nodes.values() if n.kind in (NodeKind.GOAL, NodeKind.SOLUTION)]
        )

    def test_dangling_link_rejected(self, smb, arch):
        ind = smb.indicators["SPI_PFO"]
        smb.indicators["SPI_PFO"] = type(ind)(
            id=ind.id, metric=ind.metric, comparator=ind.comparator,
            threshold=ind.threshold, exposure=ind.exposure,
            links=(ArtifactLink(LinkKind.BARRIER, "B99"),),
        )
        with pytest.raises(SkeletonError, match="B99"):
            generate_skeleton(smb, arch)


class TestExtractIndicators:
    def test_skeleton_round_trip(self, smb, arch):
        skeleton = generate_skeleton(smb, arch)
        assert extract_indicators(skeleton) == smb.indicator_ids()

    def test_no_quant_refs(self):
        from driftwatch.argument import Argument

        argument = Argument()
        argument.add(ArgumentNode("G1", NodeKind.GOAL, "top"))
        assert extract_indicators(argument) == set()

    def test_extra_prose_goals_do_not_change_extraction(self, smb, arch, argument):
        skeleton = generate_skeleton(smb, arch)
        assert extract_indicators(argument) == extract_indicators(skeleton)


class TestCheckRefinement:
    def test_reflexive(self, smb, arch):
        skeleton = generate_skeleton(smb, arch)
        holds, mapping, missing = check_refinement(skeleton, skeleton)
        assert holds and not missing
        assert mapping == {nid: nid for nid in skeleton.nodes}

    def test_extra_strategy_layer_preserved(self, smb, arch):
        rng = random.Random(1)
        skeleton = generate_skeleton(smb, arch)
        thickened = generate_skeleton(smb, arch)
        insert_strategy_layer(thickened, "G.E3", rng)
        holds, mapping, _ = check_refinement(skeleton, thickened)
        assert holds
        assert mapping["G.E4"] == "G.E4"

    def test_deleted_quantified_node_detected(self, smb, arch):
        skeleton = generate_skeleton(smb, arch)
        pruned = generate_skeleton(smb, arch)
        # remove B4's effectiveness goal (carries SPI_PFO)
        parent = pruned.parent_of("G.B4")
        pruned.children[parent].remove("G.B4")
        del pruned.nodes["G.B4"]
        holds, _, missing = check_refinement(skeleton, pruned)
        assert not holds
        assert missing == ["G.B4"]

    def test_hand_written_argument_refines(self, smb, arch, argument):
        skeleton = generate_skeleton(smb, arch)
        holds, mapping, _ = check_refinement(skeleton, argument)
        assert holds
        assert mapping["G.E4"] == "G_top"
        assert mapping["G.B4"] == "G_B4"
        assert mapping["S.E2"] == "Sn_E2"


class TestCheckConsistency:
    def test_fixture_is_consistent(self, smb, arch, argument):
        verdict = check_consistency(smb, argument, arch)
        assert verdict.consistent
        assert verdict.fg_refines and verdict.gf_identity
        assert verdict.orphan_indicators == ()
        assert verdict.unknown_quant_refs == ()

    def test_unlinked_indicator_breaks_identity(self, smb, arch, argument):
        ind = smb.indicators["SPI_RMO"]
        smb.indicators["SPI_RMO"] = type(ind)(
            id=ind.id, metric=ind.metric, comparator=ind.comparator,
            threshold=ind.threshold, exposure=ind.exposure,
            links=(ArtifactLink(LinkKind.REQUIREMENT, "REQ-12"),),
        )
        verdict = check_consistency(smb, argument, arch)
        assert not verdict.gf_identity
        assert "SPI_RMO" in verdict.orphan_indicators

    def test_argument_quantifying_unknown_indicator_breaks_refinement(self, smb, arch, argument):
        argument.nodes["G_B1"].quant_ref = "SPI_GHOST"
        verdict = check_consistency(smb, argument, arch)
        assert not verdict.fg_refines
        assert "SPI_GHOST" in verdict.unknown_quant_refs

    def test_argument_missing_quantified_goal_breaks_refinement(self, smb, arch, argument):
        argument.children["S_barriers"].remove("G_B4")
        del argument.nodes["G_B4"]
        verdict = check_consistency(smb, argument, arch)
        assert not verdict.fg_refines
        assert verdict.unmapped_nodes


class TestRandomRoundTrip:
    def test_generated_skeletons_satisfy_both_directions(self):
        rng = random.Random(20260809)
        for _ in range(40):
            arch, smb = random_arch_smb(rng)
            skeleton = generate_skeleton(smb, arch)
            assert extract_indicators(skeleton) == smb.indicator_ids()
            assert skeleton.validate() == []
            holds, _, _ = check_refinement(skeleton, skeleton)
            assert holds
            verdict = check_consistency(smb, skeleton, arch)
            assert verdict.consistent


class TestFiles:
    def test_fixture_argument_validates(self, argument):
        assert argument.validate() == []
        assert argument.root == "G_top"

    def test_solution_with_children_rejected(self, tmp_path):
        from driftwatch.argument import ArgumentFileError

        doc = (
            "root: G1\n"
            "nodes:\n"
            "  - {id: G1, kind: goal, statement: top}\n"
            "  - {id: S1, kind: solution, statement: leaf}\n"
            "  - {id: G2, kind: goal, statement: below a solution}\n"
            "edges:\n"
            "  - [G1, S1]\n"
            "  - [S1, G2]\n"
        )
        path = tmp_path / "argument.yaml"
        path.write_text(doc)
        with pytest.raises(ArgumentFileError, match="leaf"):
            load_argument(path)

    def test_dot_export_mentions_every_node(self, argument):
        dot = to_dot(argument)
        for node_id in argument.nodes:
            assert node_id in dot
