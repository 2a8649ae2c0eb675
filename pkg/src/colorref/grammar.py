"""Context-free grammar over color phrases, with PCFG weights.

Grammar files are plain text, one production block per line:

    S -> CP | NegP
    CLR -> @lexicon

"@lexicon" expands CLR into one terminal rule per lexicon label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .colors import Lexicon

NORMALIZATION_TOL = 1e-9


class GrammarError(Exception):
    pass


@dataclass(frozen=True)
class Rule:
    lhs: str
    rhs: tuple[str, ...]

    def __str__(self):
        return f"{self.lhs} -> {' '.join(self.rhs)}"


class Grammar:
    def __init__(self, rules, start: str = "S"):
        rules = tuple(rules)
        if not rules:
            raise GrammarError("grammar has no rules")
        self.rules = rules
        self.start = start
        self.nonterminals = frozenset(r.lhs for r in rules)
        if start not in self.nonterminals:
            raise GrammarError(f"start symbol {start!r} has no rules")
        self._by_lhs: dict[str, tuple[Rule, ...]] = {}
        for r in rules:
            if not r.rhs:
                raise GrammarError(f"epsilon rule not supported: {r}")
            self._by_lhs.setdefault(r.lhs, ())
            self._by_lhs[r.lhs] = self._by_lhs[r.lhs] + (r,)
        self.terminals = frozenset(
            sym for r in rules for sym in r.rhs if sym not in self.nonterminals
        )

    def rules_for(self, lhs: str) -> tuple[Rule, ...]:
        return self._by_lhs.get(lhs, ())

    def is_terminal(self, sym: str) -> bool:
        return sym not in self.nonterminals


DEFAULT_GRAMMAR_TEXT = """\
S -> CP | NegP
CP -> ADJ CLR | CLR
ADJ -> grassy | super
NegP -> NEG CP | NEG ADJ
NEG -> not
CLR -> @lexicon
"""


def parse_grammar_text(text: str, lexicon: Lexicon, start: str = "S") -> Grammar:
    rules: list[Rule] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise GrammarError(f"line {lineno}: expected 'LHS -> RHS'")
        lhs, rhs_text = line.split("->", 1)
        lhs = lhs.strip()
        if not lhs:
            raise GrammarError(f"line {lineno}: empty left-hand side")
        for alt in rhs_text.split("|"):
            alt = alt.strip()
            if not alt:
                raise GrammarError(f"line {lineno}: empty alternative")
            if alt == "@lexicon":
                for label in lexicon.labels():
                    rules.append(Rule(lhs, (label,)))
            else:
                rules.append(Rule(lhs, tuple(alt.split())))
    return Grammar(rules, start=start)


def load_grammar(path, lexicon: Lexicon, start: str = "S") -> Grammar:
    with open(path, encoding="utf-8") as fh:
        return parse_grammar_text(fh.read(), lexicon, start=start)


def default_grammar(lexicon: Lexicon) -> Grammar:
    return parse_grammar_text(DEFAULT_GRAMMAR_TEXT, lexicon)


def first_sets(grammar: Grammar) -> dict[str, frozenset[str]]:
    """Terminals that can begin a derivation of each nonterminal."""
    first: dict[str, set[str]] = {nt: set() for nt in grammar.nonterminals}
    changed = True
    while changed:
        changed = False
        for rule in grammar.rules:
            head = rule.rhs[0]
            add = {head} if grammar.is_terminal(head) else first[head]
            if not add <= first[rule.lhs]:
                first[rule.lhs] |= add
                changed = True
    return {nt: frozenset(s) for nt, s in first.items()}


class Pcfg:
    """Grammar plus per-nonterminal normalized rule probabilities."""

    def __init__(self, grammar: Grammar, weights: dict[Rule, float]):
        self.grammar = grammar
        self.weights = dict(weights)
        totals: dict[str, float] = {}
        for rule in grammar.rules:
            w = self.weights.get(rule)
            if w is None:
                raise GrammarError(f"missing weight for rule {rule}")
            if w <= 0:
                raise GrammarError(f"non-positive weight for rule {rule}")
            totals[rule.lhs] = totals.get(rule.lhs, 0.0) + w
        for lhs, total in totals.items():
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise GrammarError(f"weights for {lhs} sum to {total}, expected 1")

    @classmethod
    def uniform(cls, grammar: Grammar) -> "Pcfg":
        weights = {}
        for rule in grammar.rules:
            weights[rule] = 1.0 / len(grammar.rules_for(rule.lhs))
        return cls(grammar, weights)

    def weight(self, rule: Rule) -> float:
        return self.weights[rule]

    def save_weights(self, path) -> None:
        obj = {str(rule): w for rule, w in self.weights.items()}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)

    @classmethod
    def load_weights(cls, path, grammar: Grammar) -> "Pcfg":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        weights = {}
        for rule in grammar.rules:
            key = str(rule)
            if key not in obj:
                raise GrammarError(f"weights file missing rule {key!r}")
            weights[rule] = float(obj[key])
        return cls(grammar, weights)
