"""Utterance parsing: tokenization, Earley charts, A* best parse, recovery.

Unknown tokens are never terminals: they kill the chart and force partial
parsing, where the first-sets of the grammar decide where to resume.
"""

from __future__ import annotations

import heapq
import logging
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field

from .colors import Lexicon
from .formula import Atom, Formula, Not
from .grammar import Grammar, Pcfg, Rule, first_sets

log = logging.getLogger(__name__)

_PUNCT = re.compile(r"[^a-z0-9\s]+")


class InterpretationError(Exception):
    """A parse tree could not be mapped to a formula."""


class EmptyCorpusError(Exception):
    pass


def tokenize(utterance: str, lexicon: Lexicon) -> list[str]:
    """Lowercase, strip punctuation, split, and merge multiword lexicon labels.

    Merging is greedy longest-match so that e.g. "dark blue" becomes a
    single CLR terminal when the lexicon contains it.
    """
    words = _PUNCT.sub(" ", utterance.lower()).split()
    out: list[str] = []
    i = 0
    max_words = lexicon.max_label_words
    while i < len(words):
        merged = None
        for span in range(min(max_words, len(words) - i), 1, -1):
            candidate = " ".join(words[i : i + span])
            if candidate in lexicon:
                merged = candidate
                out.append(candidate)
                i += span
                break
        if merged is None:
            out.append(words[i])
            i += 1
    return out


@dataclass(frozen=True)
class ParseTree:
    """A derivation node. Leaves carry the terminal token as their symbol."""

    symbol: str
    children: tuple["ParseTree", ...]
    span: tuple[int, int]
    probability: float = field(default=1.0, compare=False)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def tokens(self) -> list[str]:
        if self.is_leaf:
            return [self.symbol]
        return [tok for c in self.children for tok in c.tokens()]

    def rules(self) -> list[Rule]:
        """Rules applied in this derivation, pre-order."""
        if self.is_leaf:
            return []
        out = [Rule(self.symbol, tuple(c.symbol for c in self.children))]
        for c in self.children:
            out.extend(c.rules())
        return out


@dataclass(frozen=True)
class Complete:
    tree: ParseTree
    n_parses: int


@dataclass(frozen=True)
class Partial:
    fragments: tuple[ParseTree, ...]

    def __post_init__(self):
        if not self.fragments:
            raise ValueError("a partial outcome needs at least one fragment")


@dataclass(frozen=True)
class NoParse:
    pass


ParseOutcome = Complete | Partial | NoParse


def earley_parse(pcfg: Pcfg, tokens: list[str]) -> set[ParseTree]:
    """All complete derivations of the token list from the start symbol."""
    if not tokens:
        raise ValueError("earley_parse requires a nonempty token list")
    g = pcfg.grammar
    n = len(tokens)

    # Items are (rule, dot, origin). chart[k] holds items after k tokens.
    chart: list[set[tuple[Rule, int, int]]] = [set() for _ in range(n + 1)]

    def push(k, item, agenda):
        if item not in chart[k]:
            chart[k].add(item)
            agenda.append(item)

    agenda: list[tuple[Rule, int, int]] = []
    for rule in g.rules_for(g.start):
        push(0, (rule, 0, 0), agenda)

    for k in range(n + 1):
        if k > 0:
            agenda = []
            tok = tokens[k - 1]
            for rule, dot, origin in chart[k - 1]:
                if dot < len(rule.rhs) and rule.rhs[dot] == tok:
                    push(k, (rule, dot + 1, origin), agenda)
            if not chart[k]:
                return set()  # chart died; no extension can parse
        # predict / complete to fixpoint
        while agenda:
            rule, dot, origin = agenda.pop()
            if dot == len(rule.rhs):
                for prule, pdot, porigin in list(chart[origin]):
                    if pdot < len(prule.rhs) and prule.rhs[pdot] == rule.lhs:
                        push(k, (prule, pdot + 1, porigin), agenda)
            else:
                sym = rule.rhs[dot]
                if not g.is_terminal(sym):
                    # no epsilon rules, so no same-position completions to replay
                    for nrule in g.rules_for(sym):
                        push(k, (nrule, 0, k), agenda)

    # Completed constituents: (lhs, start, end) -> rules that derived them.
    completed: dict[tuple[str, int, int], set[Rule]] = defaultdict(set)
    for end in range(n + 1):
        for rule, dot, origin in chart[end]:
            if dot == len(rule.rhs):
                completed[(rule.lhs, origin, end)].add(rule)

    memo: dict[tuple[str, int, int], list[ParseTree]] = {}

    def build(sym: str, i: int, j: int) -> list[ParseTree]:
        key = (sym, i, j)
        if key in memo:
            return memo[key]
        memo[key] = []  # cycle guard; grammar has no epsilon rules
        trees: list[ParseTree] = []
        for rule in completed.get(key, ()):
            for children in tile(rule.rhs, i, j):
                prob = pcfg.weight(rule)
                for c in children:
                    prob *= c.probability
                trees.append(ParseTree(sym, tuple(children), (i, j), prob))
        memo[key] = trees
        return trees

    def tile(symbols: tuple[str, ...], i: int, j: int):
        if not symbols:
            if i == j:
                yield ()
            return
        head, rest = symbols[0], symbols[1:]
        if g.is_terminal(head):
            if i < j and tokens[i] == head:
                leaf = ParseTree(head, (), (i, i + 1))
                for tail in tile(rest, i + 1, j):
                    yield (leaf,) + tail
        else:
            for k in range(i + 1, j + 1):
                if (head, i, k) in completed:
                    for sub in build(head, i, k):
                        for tail in tile(rest, k, j):
                            yield (sub,) + tail

    return set(build(g.start, 0, n))


def _best_inside(pcfg: Pcfg) -> dict[str, float]:
    """Upper bound on the weight of any derivation from each nonterminal."""
    g = pcfg.grammar
    best = {nt: 0.0 for nt in g.nonterminals}
    for _ in range(len(g.nonterminals) + 1):
        changed = False
        for rule in g.rules:
            v = pcfg.weight(rule)
            for sym in rule.rhs:
                if not g.is_terminal(sym):
                    v *= best[sym]
            if v > best[rule.lhs]:
                best[rule.lhs] = v
                changed = True
        if not changed:
            break
    return best


def _min_yield(grammar: Grammar) -> dict[str, int]:
    big = 10**9
    m = {nt: big for nt in grammar.nonterminals}
    changed = True
    while changed:
        changed = False
        for rule in grammar.rules:
            v = sum(1 if grammar.is_terminal(s) else m[s] for s in rule.rhs)
            if v < m[rule.lhs]:
                m[rule.lhs] = v
                changed = True
    return m


def astar_best_parse(pcfg: Pcfg, tokens: list[str]) -> ParseOutcome:
    """Most probable complete parse via A* over leftmost derivations.

    The heuristic for a pending symbol is the best derivation weight it can
    possibly achieve (an admissible upper bound). Falls back to partial
    parse recovery when no complete parse exists.
    """
    if not tokens:
        return NoParse()
    g = pcfg.grammar
    n = len(tokens)
    best = _best_inside(pcfg)
    min_yield = _min_yield(g)

    def h(remaining: tuple[str, ...]) -> float:
        v = 0.0
        for sym in remaining:
            if not g.is_terminal(sym):
                b = best[sym]
                if b <= 0:
                    return math.inf
                v -= math.log(b)
        return v

    # Search state: (f, tiebreak, pos, remaining symbols, g_cost, rule trail)
    counter = 0
    start = (h((g.start,)), 0, 0, (g.start,), 0.0, ())
    heap = [start]
    while heap:
        f, _, pos, remaining, g_cost, trail = heapq.heappop(heap)
        if not remaining:
            if pos == n:
                tree = _tree_from_leftmost(pcfg, trail, tokens)
                n_parses = len(earley_parse(pcfg, tokens))
                return Complete(tree, n_parses)
            continue
        needed = sum(
            1 if g.is_terminal(s) else min_yield[s] for s in remaining
        )
        if pos + needed > n:
            continue
        head, rest = remaining[0], remaining[1:]
        if g.is_terminal(head):
            if pos < n and tokens[pos] == head:
                counter += 1
                heapq.heappush(
                    heap, (g_cost + h(rest), counter, pos + 1, rest, g_cost, trail)
                )
        else:
            for rule in g.rules_for(head):
                w = pcfg.weight(rule)
                ng = g_cost - math.log(w)
                nrem = rule.rhs + rest
                counter += 1
                heapq.heappush(
                    heap, (ng + h(nrem), counter, pos, nrem, ng, trail + (rule,))
                )
    return partial_parse_recover(pcfg, tokens)


def _tree_from_leftmost(pcfg: Pcfg, trail: tuple[Rule, ...], tokens: list[str]):
    """Reconstruct the parse tree from a leftmost rule sequence."""
    g = pcfg.grammar
    it = iter(trail)
    pos = 0

    def expand(sym: str) -> ParseTree:
        nonlocal pos
        if g.is_terminal(sym):
            leaf = ParseTree(sym, (), (pos, pos + 1))
            pos += 1
            return leaf
        rule = next(it)
        assert rule.lhs == sym
        start = pos
        children = tuple(expand(s) for s in rule.rhs)
        prob = pcfg.weight(rule)
        for c in children:
            prob *= c.probability
        return ParseTree(sym, children, (start, pos), prob)

    return expand(g.start)


def _shift_spans(tree: ParseTree, offset: int) -> ParseTree:
    i, j = tree.span
    return ParseTree(
        tree.symbol,
        tuple(_shift_spans(c, offset) for c in tree.children),
        (i + offset, j + offset),
        tree.probability,
    )


def partial_parse_recover(pcfg: Pcfg, tokens: list[str]) -> ParseOutcome:
    """Greedy maximal-prefix recovery of non-overlapping partial parses.

    At each position, parse the longest segment admitting a complete parse;
    on failure, resume at the next token in the first-set of some
    nonterminal.
    """
    g = pcfg.grammar
    resumable = set().union(*first_sets(g).values())
    fragments: list[ParseTree] = []
    n = len(tokens)
    p = 0
    while p < n:
        if tokens[p] in resumable:
            found = None
            for q in range(n, p, -1):
                trees = earley_parse(pcfg, tokens[p:q])
                if trees:
                    found = (max(trees, key=lambda t: t.probability), q)
                    break
            if found is not None:
                tree, q = found
                fragments.append(_shift_spans(tree, p))
                p = q
                continue
        p += 1
    if fragments:
        return Partial(tuple(fragments))
    return NoParse()


def tree_to_formula(tree: ParseTree, lexicon: Lexicon) -> Formula:
    """Compositional interpretation of a parse tree as a formula.

    Adjectives form a compound atom when "<adj> <color>" is in the lexicon
    and are otherwise dropped as semantically vacuous modifiers.
    """
    sym = tree.symbol
    if sym == "S":
        return tree_to_formula(tree.children[0], lexicon)
    if sym == "CP":
        if len(tree.children) == 1:
            return tree_to_formula(tree.children[0], lexicon)
        adj = _leaf_token(tree.children[0])
        color = _leaf_token(tree.children[1])
        compound = f"{adj} {color}"
        if compound in lexicon:
            return Atom(compound)
        log.debug("dropping vacuous adjective %r in %r", adj, compound)
        return Atom(color)
    if sym == "NegP":
        inner = tree.children[1]
        if inner.symbol == "ADJ":
            adj = _leaf_token(inner)
            if adj in lexicon:
                return Not(Atom(adj))
            raise InterpretationError(f"negated adjective {adj!r} is not a color")
        return Not(tree_to_formula(inner, lexicon))
    if sym == "CLR":
        label = _leaf_token(tree)
        if label not in lexicon:
            raise InterpretationError(f"unmapped terminal {label!r}")
        return Atom(label)
    raise InterpretationError(f"cannot interpret tree rooted at {sym!r}")


def _leaf_token(tree: ParseTree) -> str:
    node = tree
    while not node.is_leaf:
        node = node.children[0]
    return node.symbol


def outcome_to_formula(outcome: ParseOutcome, lexicon: Lexicon) -> Formula | None:
    """Complete -> formula; Partial -> fragments conjoined; NoParse -> None."""
    from .formula import conjoin

    if isinstance(outcome, Complete):
        return tree_to_formula(outcome.tree, lexicon)
    if isinstance(outcome, Partial):
        return conjoin(tree_to_formula(f, lexicon) for f in outcome.fragments)
    return None


def induce_pcfg_weights(
    grammar: Grammar,
    corpus,
    evaluator,
    lexicon: Lexicon,
    smoothing: float = 0.1,
) -> Pcfg:
    """Estimate PCFG weights from (utterance, context-with-target) pairs.

    Every parse of an utterance is converted to a target constraint and
    weighted by the posterior mass its constraint puts on the true target
    (normalized across the utterance's parses); weighted rule counts are
    then normalized per nonterminal with add-lambda smoothing.
    """
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpusError("cannot induce weights from an empty corpus")
    base = Pcfg.uniform(grammar)
    counts: dict[Rule, float] = defaultdict(float)
    unparsed = 0
    for utterance, ctx in corpus:
        if ctx.target_index is None:
            raise ValueError(f"corpus row {utterance!r} has no target index")
        tokens = tokenize(utterance, lexicon)
        trees = earley_parse(base, tokens) if tokens else set()
        if not trees:
            unparsed += 1
            continue
        scored = []
        for tree in trees:
            try:
                f = tree_to_formula(tree, lexicon)
            except InterpretationError:
                continue
            posterior = evaluator([f], ctx)
            scored.append((tree, posterior.probs[ctx.target_index]))
        total = sum(w for _, w in scored)
        if not scored or total <= 0:
            unparsed += 1
            continue
        for tree, w in scored:
            for rule in tree.rules():
                counts[rule] += w / total
    if unparsed:
        log.info("induce_pcfg_weights: %d/%d utterances contributed no parse",
                 unparsed, len(corpus))
    weights: dict[Rule, float] = {}
    for lhs in grammar.nonterminals:
        rules = grammar.rules_for(lhs)
        total = sum(counts[r] for r in rules) + smoothing * len(rules)
        for r in rules:
            weights[r] = (counts[r] + smoothing) / total
    return Pcfg(grammar, weights)
