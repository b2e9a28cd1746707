"""Structured safety arguments and their consistency with the measurement basis.

The skeleton generator G walks each bow tie right-to-left: per consequence a
root goal that the residual risk meets its allocated target, per precursor
event a mitigation goal, per barrier an operational-effectiveness goal, and a
solution leaf per initiating threat asserting its assumed probability. The
indicator extractor F collects quantified-claim references. Consistency holds
when G;F is the identity on indicator sets and F;G refines into the argument.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .architecture import BowTieView, EventKind, SafetyArchitecture, ThreatChain
from .smb import LinkKind, Smb


class NodeKind(str, enum.Enum):
    GOAL = "goal"
    STRATEGY = "strategy"
    SOLUTION = "solution"
    CONTEXT = "context"
    ASSUMPTION = "assumption"


@dataclass
class ArgumentNode:
    id: str
    kind: NodeKind
    statement: str
    quant_ref: Optional[str] = None  # indicator id backing the claim


@dataclass
class Argument:
    nodes: dict[str, ArgumentNode] = field(default_factory=dict)
    children: dict[str, list[str]] = field(default_factory=dict)
    root: Optional[str] = None

    def add(self, node: ArgumentNode, parent: str | None = None) -> ArgumentNode:
        if node.id in self.nodes:
            raise ValueError(f"duplicate node id {node.id!r}")
        self.nodes[node.id] = node
        self.children.setdefault(node.id, [])
        if parent is None:
            if self.root is not None:
                raise ValueError("argument already has a root")
            self.root = node.id
        else:
            self.children.setdefault(parent, []).append(node.id)
        return node

    def parent_of(self, node_id: str) -> Optional[str]:
        for parent, kids in self.children.items():
            if node_id in kids:
                return parent
        return None

    def descendants(self, node_id: str) -> set[str]:
        out: set[str] = set()
        stack = list(self.children.get(node_id, []))
        while stack:
            current = stack.pop()
            if current in out:
                continue
            out.add(current)
            stack.extend(self.children.get(current, []))
        return out

    def validate(self) -> list[str]:
        diags: list[str] = []
        if self.root is None:
            return ["argument has no root"]
        for parent, kids in self.children.items():
            if parent not in self.nodes:
                diags.append(f"edge from undeclared node {parent!r}")
            for kid in kids:
                if kid not in self.nodes:
                    diags.append(f"edge to undeclared node {kid!r}")
        reachable = {self.root} | self.descendants(self.root)
        unreachable = set(self.nodes) - reachable
        if unreachable:
            diags.append(f"nodes unreachable from the root: {sorted(unreachable)}")
        if self.root in self.descendants(self.root):
            diags.append("argument graph is cyclic")
        for node in self.nodes.values():
            if node.kind is NodeKind.SOLUTION and self.children.get(node.id):
                diags.append(f"solution node {node.id!r} must be a leaf")
        indegree: dict[str, int] = {}
        for kids in self.children.values():
            for kid in kids:
                indegree[kid] = indegree.get(kid, 0) + 1
        multi = [n for n, d in indegree.items() if d > 1]
        if multi:
            diags.append(f"nodes with multiple parents: {sorted(multi)}")
        return diags


@dataclass(frozen=True)
class ConsistencyVerdict:
    fg_refines: bool  # F;G <= I : the skeleton of the argument's indicators embeds into it
    gf_identity: bool  # G;F = I : extracting the generated skeleton returns the SMB's indicators
    witness: dict[str, str]  # skeleton node -> argument node, when fg_refines holds
    orphan_indicators: tuple[str, ...] = ()
    unquantified_claims: tuple[str, ...] = ()
    unmapped_nodes: tuple[str, ...] = ()
    unknown_quant_refs: tuple[str, ...] = ()

    @property
    def consistent(self) -> bool:
        return self.fg_refines and self.gf_identity


class SkeletonError(ValueError):
    """An indicator links to an element the architecture does not declare."""


def _chain_segments(chain: ThreatChain) -> list[tuple[str, tuple[str, ...]]]:
    """Split a threat chain at its intermediate events.

    Returns (cause event, barriers between it and the next event) pairs,
    ordered from the threat toward the top event.
    """
    boundaries = sorted(chain.intermediates)
    segments: list[tuple[str, tuple[str, ...]]] = []
    cause = chain.threat
    start = 0
    for position in boundaries:
        segments.append((cause, chain.barriers[start:position]))
        cause = chain.intermediates[position]
        start = position
    segments.append((cause, chain.barriers[start:]))
    return segments


def generate_skeleton(smb: Smb, arch: SafetyArchitecture) -> Argument:
    """The mapping G: embed an SMB into a skeleton argument over the bow ties."""
    for indicator in smb.indicators.values():
        for link in indicator.links:
            if link.kind is LinkKind.EVENT and link.ref not in arch.events:
                raise SkeletonError(f"indicator {indicator.id!r} links to unknown event {link.ref!r}")
            if link.kind is LinkKind.BARRIER and link.ref not in arch.barriers:
                raise SkeletonError(f"indicator {indicator.id!r} links to unknown barrier {link.ref!r}")

    argument = Argument()
    used_ids: dict[str, int] = {}

    def fresh_id(prefix: str, element: str) -> str:
        base = f"{prefix}.{element}"
        count = used_ids.get(base, 0)
        used_ids[base] = count + 1
        return base if count == 0 else f"{base}.{count + 1}"

    def indicator_ids_for(kind: LinkKind, element: str) -> list[str]:
        return sorted(ind.id for ind in smb.indicators_linked_to(kind, element))

    def attach_extra_indicators(parent: str, kind: LinkKind, element: str, refs: list[str]) -> None:
        for ref in refs:
            argument.add(
                ArgumentNode(
                    id=fresh_id("G", f"{element}.{ref}"),
                    kind=NodeKind.GOAL,
                    statement=f"{element} safety performance is monitored by {ref}",
                    quant_ref=ref,
                ),
                parent,
            )

    def add_barrier_goal(parent: str, barrier_id: str) -> None:
        refs = indicator_ids_for(LinkKind.BARRIER, barrier_id)
        node = argument.add(
            ArgumentNode(
                id=fresh_id("G", barrier_id),
                kind=NodeKind.GOAL,
                statement=f"Barrier {barrier_id} is operational and effective",
                quant_ref=refs[0] if refs else None,
            ),
            parent,
        )
        attach_extra_indicators(node.id, LinkKind.BARRIER, barrier_id, refs[1:])

    def develop_event(parent: str | None, event_id: str, recovery: tuple[str, ...]) -> str:
        """Goal that an event is acceptably mitigated; recurse over its causes."""
        refs = indicator_ids_for(LinkKind.EVENT, event_id)
        node = argument.add(
            ArgumentNode(
                id=fresh_id("G", event_id),
                kind=NodeKind.GOAL,
                statement=f"Event {event_id} is acceptably mitigated",
                quant_ref=refs[0] if refs else None,
            ),
            parent,
        )
        attach_extra_indicators(node.id, LinkKind.EVENT, event_id, refs[1:])
        for barrier_id in recovery:
            add_barrier_goal(node.id, barrier_id)
        for bowtie in arch.bowties:
            if bowtie.top_event != event_id:
                continue
            for chain in bowtie.threat_chains:
                develop_segments(node.id, _chain_segments(chain))
        return node.id

    def develop_segments(parent: str, segments: list[tuple[str, tuple[str, ...]]]) -> None:
        """Walk one chain right-to-left: nearest segment first, then its cause."""
        cause, barriers = segments[-1]
        for barrier_id in barriers:
            add_barrier_goal(parent, barrier_id)
        cause_event = arch.events.get(cause)
        if cause_event is not None and cause_event.kind is EventKind.THREAT:
            refs = indicator_ids_for(LinkKind.EVENT, cause)
            leaf = argument.add(
                ArgumentNode(
                    id=fresh_id("S", cause),
                    kind=NodeKind.SOLUTION,
                    statement=f"Threat {cause} has the stated (assumed) probability of occurrence",
                    quant_ref=refs[0] if refs else None,
                ),
                parent,
            )
            for ref in refs[1:]:
                argument.add(
                    ArgumentNode(
                        id=fresh_id("S", f"{cause}.{ref}"),
                        kind=NodeKind.SOLUTION,
                        statement=f"Threat {cause} occurrence is monitored by {ref}",
                        quant_ref=ref,
                    ),
                    parent,
                )
        else:
            # intermediate cause: goal node, then recurse into the remaining chain
            refs = indicator_ids_for(LinkKind.EVENT, cause)
            node = argument.add(
                ArgumentNode(
                    id=fresh_id("G", cause),
                    kind=NodeKind.GOAL,
                    statement=f"Event {cause} is acceptably mitigated",
                    quant_ref=refs[0] if refs else None,
                ),
                parent,
            )
            attach_extra_indicators(node.id, LinkKind.EVENT, cause, refs[1:])
            develop_segments(node.id, segments[:-1])

    consequences: list[tuple[str, BowTieView, tuple[str, ...]]] = []
    for bowtie in arch.bowties:
        for chain in bowtie.consequence_chains:
            consequences.append((chain.consequence, bowtie, chain.barriers))

    if len(consequences) == 1:
        consequence, bowtie, recovery = consequences[0]
        refs = indicator_ids_for(LinkKind.EVENT, consequence)
        root = argument.add(
            ArgumentNode(
                id=fresh_id("G", consequence),
                kind=NodeKind.GOAL,
                statement=f"Residual risk of {consequence} meets the allocated safety target",
                quant_ref=refs[0] if refs else None,
            )
        )
        attach_extra_indicators(root.id, LinkKind.EVENT, consequence, refs[1:])
        develop_event(root.id, bowtie.top_event, recovery)
    else:
        root = argument.add(
            ArgumentNode(
                id="G.root",
                kind=NodeKind.GOAL,
                statement="All consequence events are acceptably mitigated",
            )
        )
        for consequence, bowtie, recovery in consequences:
            refs = indicator_ids_for(LinkKind.EVENT, consequence)
            goal = argument.add(
                ArgumentNode(
                    id=fresh_id("G", consequence),
                    kind=NodeKind.GOAL,
                    statement=f"Residual risk of {consequence} meets the allocated safety target",
                    quant_ref=refs[0] if refs else None,
                ),
                root.id,
            )
            attach_extra_indicators(goal.id, LinkKind.EVENT, consequence, refs[1:])
            develop_event(goal.id, bowtie.top_event, recovery)
    return argument


def extract_indicators(argument: Argument) -> set[str]:
    """The mapping F: all indicator ids referenced by quantified claims."""
    return {node.quant_ref for node in argument.nodes.values() if node.quant_ref}


def unquantified_claims(argument: Argument) -> list[str]:
    """Goal/solution nodes carrying no quantified-claim reference."""
    return sorted(
        node.id
        for node in argument.nodes.values()
        if node.kind in (NodeKind.GOAL, NodeKind.SOLUTION) and not node.quant_ref
    )


def check_refinement(skeleton: Argument, argument: Argument) -> tuple[bool, dict[str, str], list[str]]:
    """Does the skeleton embed into the argument?

    Looks for an injective mapping preserving node kind and quantRef, where
    each skeleton parent maps to an ancestor of its child's image (extra
    strategy/goal layers in the full argument are permitted). Returns
    (holds, mapping, unmapped skeleton nodes).
    """
    if skeleton.root is None:
        return True, {}, []
    if argument.root is None:
        return False, {}, sorted(skeleton.nodes)

    order: list[str] = []
    queue = [skeleton.root]
    while queue:
        current = queue.pop(0)
        order.append(current)
        queue.extend(skeleton.children.get(current, []))

    def candidates(skel_id: str, scope: set[str] | None) -> list[str]:
        source = skeleton.nodes[skel_id]
        pool = scope if scope is not None else set(argument.nodes)
        # same-id candidates first, so a skeleton embeds into itself identically
        return sorted(
            (
                target_id
                for target_id in pool
                if argument.nodes[target_id].kind is source.kind
                and argument.nodes[target_id].quant_ref == source.quant_ref
            ),
            key=lambda target_id: (target_id != skel_id, target_id),
        )

    mapping: dict[str, str] = {}
    used: set[str] = set()
    deepest_failure = [0, order[0] if order else ""]

    def extend(index: int) -> bool:
        if index == len(order):
            return True
        skel_id = order[index]
        parent = skeleton.parent_of(skel_id)
        scope = argument.descendants(mapping[parent]) if parent is not None else None
        for target in candidates(skel_id, scope):
            if target in used:
                continue
            mapping[skel_id] = target
            used.add(target)
            if extend(index + 1):
                return True
            used.discard(target)
            del mapping[skel_id]
        if index >= deepest_failure[0]:
            deepest_failure[0] = index
            deepest_failure[1] = skel_id
        return False

    if extend(0):
        return True, dict(mapping), []
    return False, {}, [deepest_failure[1]]


def check_consistency(smb: Smb, argument: Argument, arch: SafetyArchitecture) -> ConsistencyVerdict:
    """Both consistency directions plus an enumeration of discrepancies."""
    skeleton = generate_skeleton(smb, arch)
    extracted = extract_indicators(skeleton)
    declared = smb.indicator_ids()
    orphans = tuple(sorted(declared - extracted))
    gf_identity = extracted == declared

    argument_refs = extract_indicators(argument)
    unknown_refs = tuple(sorted(argument_refs - declared))
    fg_refines = True
    witness: dict[str, str] = {}
    unmapped: tuple[str, ...] = ()
    if unknown_refs:
        fg_refines = False
    else:
        sub = smb.subset(sorted(argument_refs))
        arg_skeleton = generate_skeleton(sub, arch)
        fg_refines, witness, missing = check_refinement(arg_skeleton, argument)
        unmapped = tuple(missing)

    return ConsistencyVerdict(
        fg_refines=fg_refines,
        gf_identity=gf_identity,
        witness=witness,
        orphan_indicators=orphans,
        unquantified_claims=tuple(unquantified_claims(skeleton)),
        unmapped_nodes=unmapped,
        unknown_quant_refs=unknown_refs,
    )


# ---------------------------------------------------------------------------
# File loading and rendering
# ---------------------------------------------------------------------------

class ArgumentFileError(ValueError):
    """Malformed argument document."""


def argument_from_dict(doc: dict) -> Argument:
    argument = Argument()
    root = doc.get("root")
    for raw in doc.get("nodes") or []:
        try:
            node = ArgumentNode(
                id=str(raw["id"]),
                kind=NodeKind(raw["kind"]),
                statement=str(raw.get("statement", "")),
                quant_ref=raw.get("quantRef"),
            )
        except (KeyError, ValueError) as exc:
            raise ArgumentFileError(f"bad node record {raw!r}: {exc}") from None
        if node.id in argument.nodes:
            raise ArgumentFileError(f"duplicate node id {node.id!r}")
        argument.nodes[node.id] = node
        argument.children.setdefault(node.id, [])
    for edge in doc.get("edges") or []:
        if not isinstance(edge, (list, tuple)) or len(edge) != 2:
            raise ArgumentFileError(f"bad edge {edge!r}; expected [parent, child]")
        parent, child = str(edge[0]), str(edge[1])
        argument.children.setdefault(parent, []).append(child)
    if root is not None:
        argument.root = str(root)
    else:
        targets = {kid for kids in argument.children.values() for kid in kids}
        roots = [n for n in argument.nodes if n not in targets]
        if len(roots) != 1:
            raise ArgumentFileError(f"expected a single root, found {sorted(roots)}")
        argument.root = roots[0]
    diags = argument.validate()
    if diags:
        raise ArgumentFileError("; ".join(diags))
    return argument


def load_argument(path: str | Path) -> Argument:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ArgumentFileError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ArgumentFileError(f"{path}: expected a mapping at the top level")
    return argument_from_dict(doc)


def argument_to_dict(argument: Argument) -> dict:
    return {
        "root": argument.root,
        "nodes": [
            {
                "id": node.id,
                "kind": node.kind.value,
                "statement": node.statement,
                **({"quantRef": node.quant_ref} if node.quant_ref else {}),
            }
            for node in argument.nodes.values()
        ],
        "edges": [[parent, kid] for parent, kids in argument.children.items() for kid in kids],
    }


_DOT_SHAPES = {
    NodeKind.GOAL: "box",
    NodeKind.STRATEGY: "parallelogram",
    NodeKind.SOLUTION: "circle",
    NodeKind.CONTEXT: "oval",
    NodeKind.ASSUMPTION: "oval",
}


def to_dot(argument: Argument) -> str:
    """Graph-description export for external visualization."""
    lines = ["digraph argument {", "  rankdir=TB;"]
    for node in argument.nodes.values():
        label = node.statement.replace('"', "'")
        if node.quant_ref:
            label += f"\\n[{node.quant_ref}]"
        lines.append(f'  "{node.id}" [shape={_DOT_SHAPES[node.kind]}, label="{node.id}\\n{label}"];')
    for parent, kids in argument.children.items():
        for kid in kids:
            lines.append(f'  "{parent}" -> "{kid}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
