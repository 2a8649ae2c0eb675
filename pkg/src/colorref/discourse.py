"""Coherence-based discourse graph and commitment extraction.

Each utterance adds a node that attaches to earlier nodes via typed
coherence relations. Traversing the graph in order yields the director's
commitments: descriptive constraints on the target referent T, auxiliary
referents, and inequalities between referents.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from .formula import Formula, Not, formula_to_obj, obj_to_formula

TARGET = "T"

DIRECTOR = "director"
MATCHER = "matcher"


class DiscourseError(Exception):
    pass


class CoherenceRelation(enum.Enum):
    CLARIFICATION = "clarification"
    ANSWER = "answer"
    CONFIRMATION = "confirmation"
    REJECTION = "rejection"
    PARALLEL = "parallel"
    BACKGROUND = "background"
    ALTERNATIVE = "alternative"
    EXPANSION = "expansion"


@dataclass(frozen=True)
class Identify:
    referent: str
    formula: Formula


@dataclass(frozen=True)
class Distinguish:
    left: str
    right: str


@dataclass(frozen=True)
class AskClarification:
    referent: str
    formula: Formula


@dataclass(frozen=True)
class Confirmation:
    referent: str
    # When the answer narrows a disjunctive question ("lighter or darker?"
    # -> "lighter"), `refined` is the confirmed disjunct; otherwise the
    # clarification's own formula is what gets committed.
    refined: Formula | None = None


@dataclass(frozen=True)
class Rejection:
    referent: str
    formula: Formula | None = None


@dataclass(frozen=True)
class Select:
    referent: str


@dataclass(frozen=True)
class NoneMove:
    """Director said something the matcher could not understand."""


Move = Identify | Distinguish | AskClarification | Confirmation | Rejection | Select | NoneMove


@dataclass
class DiscourseNode:
    id: int
    speaker: str
    moves: list
    attachments: list[tuple[int, CoherenceRelation]]


@dataclass(frozen=True)
class CommitmentSet:
    referents: frozenset[str]
    positive: tuple[tuple[str, Formula], ...]
    inequalities: frozenset[tuple[str, str]]
    target: str = TARGET


class DiscourseGraph:
    def __init__(self):
        self.nodes: list[DiscourseNode] = [
            DiscourseNode(0, DIRECTOR, [], [])
        ]
        self.most_recent_director = 0
        self.most_recent_clarification: int | None = None
        self._aux_counter = 0

    def _add_node(self, speaker, moves, attachments) -> int:
        for parent, _ in attachments:
            if not 0 <= parent < len(self.nodes):
                raise DiscourseError(f"attachment target {parent} does not exist")
        node = DiscourseNode(len(self.nodes), speaker, list(moves), list(attachments))
        self.nodes.append(node)
        return node.id

    def fresh_auxiliary(self) -> str:
        self._aux_counter += 1
        return f"A{self._aux_counter}"


def new_graph() -> DiscourseGraph:
    return DiscourseGraph()


def attach_director_description(
    g: DiscourseGraph, formula: Formula, negated_referents=()
) -> int:
    """Director describes the target; optional extra descriptions of patches
    the target is *not* introduce auxiliary referents."""
    moves: list = [Identify(TARGET, formula)]
    for desc in negated_referents:
        aux = g.fresh_auxiliary()
        moves.append(Distinguish(TARGET, aux))
        moves.append(Identify(aux, desc))
    node_id = g._add_node(
        DIRECTOR, moves, [(g.most_recent_director, CoherenceRelation.EXPANSION)]
    )
    g.most_recent_director = node_id
    return node_id


def attach_clarification(g: DiscourseGraph, formula: Formula) -> int:
    node_id = g._add_node(
        MATCHER,
        [AskClarification(TARGET, formula)],
        [(0, CoherenceRelation.CLARIFICATION)],
    )
    g.most_recent_clarification = node_id
    return node_id


def _require_pending_clarification(g: DiscourseGraph) -> int:
    if g.most_recent_clarification is None:
        raise DiscourseError("no pending clarification to answer")
    return g.most_recent_clarification


def attach_confirmation(g: DiscourseGraph, refined: Formula | None = None) -> int:
    clar = _require_pending_clarification(g)
    node_id = g._add_node(
        DIRECTOR,
        [Confirmation(TARGET, refined)],
        [
            (clar, CoherenceRelation.CONFIRMATION),
            (g.most_recent_director, CoherenceRelation.ANSWER),
        ],
    )
    g.most_recent_director = node_id
    g.most_recent_clarification = None
    return node_id


def attach_rejection(g: DiscourseGraph, new_formula: Formula | None = None) -> int:
    clar = _require_pending_clarification(g)
    moves: list = [Rejection(TARGET)]
    if new_formula is not None:
        moves.append(Identify(TARGET, new_formula))
    node_id = g._add_node(
        DIRECTOR,
        moves,
        [
            (clar, CoherenceRelation.REJECTION),
            (g.most_recent_director, CoherenceRelation.ANSWER),
        ],
    )
    g.most_recent_director = node_id
    g.most_recent_clarification = None
    return node_id


def _clarification_formula(g: DiscourseGraph, node: DiscourseNode) -> Formula:
    for parent_id, rel in node.attachments:
        if rel in (CoherenceRelation.CONFIRMATION, CoherenceRelation.REJECTION):
            for move in g.nodes[parent_id].moves:
                if isinstance(move, AskClarification):
                    return move.formula
    raise DiscourseError(f"node {node.id} answers no clarification")


def extract_commitments(g: DiscourseGraph) -> CommitmentSet:
    """Traverse nodes in order and collect the director's commitments.

    Clarification formulas only commit the director once confirmed (as
    stated) or rejected (negated); unanswered ones contribute nothing.
    """
    referents = {TARGET}
    positive: list[tuple[str, Formula]] = []
    inequalities: set[tuple[str, str]] = set()
    for node in g.nodes:
        for move in node.moves:
            if isinstance(move, Identify):
                referents.add(move.referent)
                positive.append((move.referent, move.formula))
            elif isinstance(move, Distinguish):
                referents.update((move.left, move.right))
                if move.left == move.right:
                    raise DiscourseError("inequality must relate distinct referents")
                inequalities.add((move.left, move.right))
            elif isinstance(move, Confirmation):
                clar = _clarification_formula(g, node)
                positive.append((TARGET, move.refined or clar))
            elif isinstance(move, Rejection):
                clar = _clarification_formula(g, node)
                positive.append((TARGET, Not(clar)))
    return CommitmentSet(
        referents=frozenset(referents),
        positive=tuple(positive),
        inequalities=frozenset(inequalities),
    )


def commitments_to_target_constraints(cs: CommitmentSet) -> list[Formula]:
    """Ordered descriptive constraints on the target.

    Auxiliary descriptions distinguished from T contribute their negation
    (exclusion reading)."""
    excluded = {b for a, b in cs.inequalities if a == cs.target}
    excluded |= {a for a, b in cs.inequalities if b == cs.target}
    out: list[Formula] = []
    for referent, formula in cs.positive:
        if referent == cs.target:
            out.append(formula)
        elif referent in excluded:
            out.append(Not(formula))
    return out


# --- serialization -------------------------------------------------------

def _move_to_obj(move) -> dict:
    if isinstance(move, Identify):
        return {"move": "identify", "referent": move.referent,
                "formula": formula_to_obj(move.formula)}
    if isinstance(move, Distinguish):
        return {"move": "distinguish", "left": move.left, "right": move.right}
    if isinstance(move, AskClarification):
        return {"move": "ask_clarification", "referent": move.referent,
                "formula": formula_to_obj(move.formula)}
    if isinstance(move, Confirmation):
        return {"move": "confirmation", "referent": move.referent,
                "refined": formula_to_obj(move.refined) if move.refined else None}
    if isinstance(move, Rejection):
        return {"move": "rejection", "referent": move.referent,
                "formula": formula_to_obj(move.formula) if move.formula else None}
    if isinstance(move, Select):
        return {"move": "select", "referent": move.referent}
    if isinstance(move, NoneMove):
        return {"move": "none"}
    raise TypeError(f"not a move: {move!r}")


def _obj_to_move(obj):
    kind = obj["move"]
    if kind == "identify":
        return Identify(obj["referent"], obj_to_formula(obj["formula"]))
    if kind == "distinguish":
        return Distinguish(obj["left"], obj["right"])
    if kind == "ask_clarification":
        return AskClarification(obj["referent"], obj_to_formula(obj["formula"]))
    if kind == "confirmation":
        refined = obj.get("refined")
        return Confirmation(obj["referent"],
                            obj_to_formula(refined) if refined else None)
    if kind == "rejection":
        f = obj.get("formula")
        return Rejection(obj["referent"], obj_to_formula(f) if f else None)
    if kind == "select":
        return Select(obj["referent"])
    if kind == "none":
        return NoneMove()
    raise ValueError(f"unknown move kind {kind!r}")


def graph_to_json(g: DiscourseGraph) -> str:
    obj = {
        "nodes": [
            {
                "id": n.id,
                "speaker": n.speaker,
                "moves": [_move_to_obj(m) for m in n.moves],
                "attachments": [[p, rel.value] for p, rel in n.attachments],
            }
            for n in g.nodes
        ],
        "most_recent_director": g.most_recent_director,
        "most_recent_clarification": g.most_recent_clarification,
        "aux_counter": g._aux_counter,
    }
    return json.dumps(obj, sort_keys=True)


def graph_from_json(text: str) -> DiscourseGraph:
    obj = json.loads(text)
    g = DiscourseGraph()
    g.nodes = [
        DiscourseNode(
            n["id"],
            n["speaker"],
            [_obj_to_move(m) for m in n["moves"]],
            [(p, CoherenceRelation(rel)) for p, rel in n["attachments"]],
        )
        for n in obj["nodes"]
    ]
    g.most_recent_director = obj["most_recent_director"]
    g.most_recent_clarification = obj["most_recent_clarification"]
    g._aux_counter = obj["aux_counter"]
    return g
