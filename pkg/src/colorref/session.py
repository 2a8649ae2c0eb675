"""Dialogue session management for live play.

A session owns one display context, one discourse graph, and one policy.
`session_step` runs the full pipeline for a director utterance: tokenize,
parse, attach, extract commitments, evaluate, decide, and reply.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field

from .colors import DisplayContext, ExhaustedLexiconError, Lexicon, best_identifying_expression
from .discourse import (
    DiscourseGraph,
    attach_clarification,
    attach_confirmation,
    attach_director_description,
    attach_rejection,
    commitments_to_target_constraints,
    extract_commitments,
    new_graph,
)
from .evaluation import posterior_over_constraints
from .formula import Atom, Formula, disjuncts
from .grammar import Pcfg
from .parsing import (
    InterpretationError,
    NoParse,
    astar_best_parse,
    outcome_to_formula,
    tokenize,
)
from .policy import Action, DialogueState, QFunction, baseline_decide

MAX_UTTERANCE_CHARS = 500
MAX_SESSION_TURNS = 15

YES_WORDS = frozenset({"yes", "yeah", "yep", "yup", "correct", "right", "exactly", "sure"})
# "not" is deliberately absent: "not green" is a NegP description.
NO_WORDS = frozenset({"no", "nope", "nah", "wrong", "incorrect"})

CLARIFY_TEMPLATE = "{term}?"
NONE_REPLY = "sorry, i didn't catch that - can you describe the color another way?"


class SessionError(Exception):
    pass


@dataclass
class Session:
    context: DisplayContext
    policy: str | QFunction = "baseline"
    id: str = field(default_factory=lambda: uuid.uuid4().hex)
    graph: DiscourseGraph = field(default_factory=new_graph)
    turn: int = 0
    status: str = "open"  # open | selected | timeout
    transcript: list[dict] = field(default_factory=list)
    used_labels: set[str] = field(default_factory=set)
    pending_clarification: Formula | None = None
    history: list[Action] = field(default_factory=list)

    def decide(self, state: DialogueState) -> Action:
        if self.policy == "baseline":
            return baseline_decide(state)
        q = self.policy.values(state)
        return (
            Action.SELECT
            if q[Action.SELECT] > q[Action.ASK_CLARIFICATION]
            else Action.ASK_CLARIFICATION
        )


@dataclass
class TrialRecord:
    session_id: str
    context: DisplayContext
    transcript: list[dict]
    outcome: str
    rating: int | None = None
    feedback: str = ""

    def __post_init__(self):
        if self.rating is not None and self.rating not in range(6):
            raise ValueError("rating must be an integer from 0 to 5")

    def to_json(self) -> str:
        return json.dumps(
            {
                "session_id": self.session_id,
                "patches": [p.as_tuple() for p in self.context.patches],
                "target": self.context.target_index,
                "transcript": self.transcript,
                "outcome": self.outcome,
                "rating": self.rating,
                "feedback": self.feedback,
            },
            sort_keys=True,
        )


def _classify_answer(tokens: list[str]) -> str | None:
    """yes/no word-class detection for a pending clarification."""
    if not tokens:
        return None
    head = tokens[0]
    if head in YES_WORDS:
        return "yes"
    if head in NO_WORDS:
        return "no"
    return None


def session_step(
    session: Session,
    utterance: str,
    lexicon: Lexicon,
    pcfg: Pcfg,
    alpha: float = 1.0,
) -> dict:
    """Process one director utterance and return the matcher's reply.

    Reply dicts: {"type": "clarify", "text": ...},
    {"type": "select", "index": i, "correct": bool},
    {"type": "none", "text": ...}, {"type": "timeout"}.
    """
    if session.status != "open":
        raise SessionError(f"session is {session.status}; no further steps allowed")
    if len(utterance) > MAX_UTTERANCE_CHARS:
        raise SessionError(f"utterance exceeds {MAX_UTTERANCE_CHARS} characters")

    session.transcript.append({"role": "director", "text": utterance})
    tokens = tokenize(utterance, lexicon)

    handled = False
    if session.pending_clarification is not None:
        answer = _classify_answer(tokens)
        if answer == "yes":
            attach_confirmation(session.graph)
            session.pending_clarification = None
            handled = True
        elif answer == "no":
            rest = tokens[1:]
            replacement = None
            if rest:
                try:
                    replacement = outcome_to_formula(
                        astar_best_parse(pcfg, rest), lexicon
                    )
                except InterpretationError:
                    replacement = None
            attach_rejection(session.graph, replacement)
            session.pending_clarification = None
            handled = True

    if not handled:
        outcome = astar_best_parse(pcfg, tokens) if tokens else NoParse()
        try:
            formula = outcome_to_formula(outcome, lexicon)
        except InterpretationError:
            formula = None
        if formula is None:
            # NONE move: no commitment; ask the director to rephrase.
            reply = {"type": "none", "text": NONE_REPLY}
            session.transcript.append({"role": "matcher", **reply})
            return reply
        pending = session.pending_clarification
        if pending is not None and (
            formula == pending or formula in disjuncts(pending)
        ):
            # Echoing the question (or one of its disjuncts) confirms it.
            attach_confirmation(session.graph, refined=formula)
            session.pending_clarification = None
        else:
            attach_director_description(session.graph, formula)

    constraints = commitments_to_target_constraints(
        extract_commitments(session.graph)
    )
    posterior = posterior_over_constraints(lexicon, constraints, session.context)
    state = DialogueState(posterior.probs, tuple(session.history))
    action = session.decide(state)

    if action == Action.ASK_CLARIFICATION:
        try:
            term = best_identifying_expression(
                lexicon,
                session.context.without_target(),
                posterior.argmax(),
                session.used_labels,
                alpha=alpha,
            )
        except ExhaustedLexiconError:
            action = Action.SELECT  # nothing left to ask about

    if action == Action.SELECT:
        index = posterior.argmax()
        session.status = "selected"
        correct = (
            index == session.context.target_index
            if session.context.target_index is not None
            else None
        )
        reply = {"type": "select", "index": index, "correct": correct}
        session.transcript.append(
            {"role": "matcher", **reply, "posterior": list(posterior.probs)}
        )
        return reply

    session.turn += 1
    session.history.append(Action.ASK_CLARIFICATION)
    if session.turn >= MAX_SESSION_TURNS:
        session.status = "timeout"
        reply = {"type": "timeout"}
        session.transcript.append({"role": "matcher", **reply})
        return reply
    session.used_labels.add(term.label)
    attach_clarification(session.graph, Atom(term.label))
    session.pending_clarification = Atom(term.label)
    reply = {"type": "clarify", "text": CLARIFY_TEMPLATE.format(term=term.label)}
    session.transcript.append(
        {"role": "matcher", **reply, "posterior": list(posterior.probs)}
    )
    return reply


def replay_transcript(
    transcript: list[dict],
    context: DisplayContext,
    policy,
    lexicon: Lexicon,
    pcfg: Pcfg,
    alpha: float = 1.0,
) -> list[dict]:
    """Re-run the director side of a persisted transcript; returns the
    matcher replies produced by a fresh session."""
    session = Session(context=context, policy=policy)
    replies = []
    for entry in transcript:
        if entry.get("role") != "director":
            continue
        if session.status != "open":
            break
        replies.append(session_step(session, entry["text"], lexicon, pcfg, alpha=alpha))
    return replies
