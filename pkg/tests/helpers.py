"""Independent oracles used by the parser tests and the acceptance suite."""

from colorref.parsing import ParseTree


def derive_all(pcfg, symbol, max_tokens, _depth=0):
    """Brute-force top-down enumeration of all derivation trees of `symbol`
    with a bounded yield. Returns a list of (tree, tokens) pairs with spans
    starting at 0; callers re-span when embedding."""
    g = pcfg.grammar
    if _depth > 32:  # safety bound; our grammars are far shallower
        return []
    if g.is_terminal(symbol):
        if max_tokens < 1:
            return []
        return [(ParseTree(symbol, (), (0, 1)), (symbol,))]
    out = []
    for rule in g.rules_for(symbol):
        for children, tokens in _derive_seq(pcfg, rule.rhs, max_tokens, _depth + 1):
            prob = pcfg.weight(rule)
            for c in children:
                prob *= c.probability
            tree = ParseTree(symbol, tuple(children), (0, len(tokens)), prob)
            out.append((tree, tokens))
    return out


def _derive_seq(pcfg, symbols, max_tokens, depth):
    if not symbols:
        return [((), ())]
    out = []
    head, rest = symbols[0], symbols[1:]
    for tree, tokens in derive_all(pcfg, head, max_tokens, depth):
        budget = max_tokens - len(tokens)
        if budget < len(rest):  # every symbol yields at least one token
            continue
        for tail_children, tail_tokens in _derive_seq(pcfg, rest, budget, depth):
            out.append(((tree,) + tail_children, tokens + tail_tokens))
    return out


def _respan(tree, start):
    """Rebuild spans left to right so the tree's leaves sit at absolute
    positions beginning at `start`."""
    if tree.is_leaf:
        return ParseTree(tree.symbol, (), (start, start + 1), tree.probability), start + 1
    children = []
    pos = start
    for c in tree.children:
        rebuilt, pos = _respan(c, pos)
        children.append(rebuilt)
    return ParseTree(tree.symbol, tuple(children), (start, pos), tree.probability), pos


def oracle_derivations(pcfg, max_tokens):
    """Map from token tuple to the set of derivation trees from the start
    symbol, over all derivable strings of bounded length."""
    table: dict[tuple, set] = {}
    for tree, tokens in derive_all(pcfg, pcfg.grammar.start, max_tokens):
        rebuilt, _ = _respan(tree, 0)
        table.setdefault(tokens, set()).add(rebuilt)
    return table


def oracle_parse(pcfg, tokens):
    """Derivation set of one token list, by brute-force enumeration."""
    table = oracle_derivations(pcfg, len(tokens))
    return table.get(tuple(tokens), set())
