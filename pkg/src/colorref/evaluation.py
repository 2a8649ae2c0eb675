"""Semantic evaluation: target constraints -> posterior over the 3 patches.

Constraints are treated as independent evidence; composition follows the
probability algebra: conjunction multiplies, disjunction is the de Morgan
complement-product, negation is the per-patch complement. Every composed
vector is renormalized over the three candidates; zero-mass results fall
back to uniform with an observable flag.
"""

from __future__ import annotations

from dataclasses import dataclass

from .colors import DegenerateEvidenceError, DisplayContext, Lexicon, literal_listener
from .formula import And, Atom, Formula, Not, Or

POSTERIOR_TOL = 1e-9

_UNIFORM = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)


class UnknownTermError(Exception):
    pass


@dataclass(frozen=True)
class Posterior:
    probs: tuple[float, float, float]
    fallback: bool = False

    def __post_init__(self):
        if len(self.probs) != 3:
            raise ValueError("posterior must have 3 entries")
        if any(p < 0 for p in self.probs):
            raise ValueError("posterior entries must be nonnegative")
        if abs(sum(self.probs) - 1.0) > POSTERIOR_TOL:
            raise ValueError(f"posterior sums to {sum(self.probs)}, expected 1")

    def argmax(self) -> int:
        """Index of the most likely patch; ties break to the lowest index."""
        return max(range(3), key=lambda i: (self.probs[i], -i))


def _normalize(raw, fallback: bool) -> Posterior:
    total = sum(raw)
    if total <= 0.0:
        return Posterior(_UNIFORM, True)
    return Posterior(tuple(v / total for v in raw), fallback)


def eval_atom(lexicon: Lexicon, label: str, ctx: DisplayContext) -> Posterior:
    if label not in lexicon:
        raise UnknownTermError(f"unknown color term {label!r}")
    try:
        return Posterior(literal_listener(lexicon[label], ctx))
    except DegenerateEvidenceError:
        return Posterior(_UNIFORM, True)


def eval_formula(lexicon: Lexicon, f: Formula, ctx: DisplayContext) -> Posterior:
    if isinstance(f, Atom):
        return eval_atom(lexicon, f.label, ctx)
    if isinstance(f, And):
        a = eval_formula(lexicon, f.left, ctx)
        b = eval_formula(lexicon, f.right, ctx)
        raw = tuple(pa * pb for pa, pb in zip(a.probs, b.probs))
        return _normalize(raw, a.fallback or b.fallback)
    if isinstance(f, Or):
        a = eval_formula(lexicon, f.left, ctx)
        b = eval_formula(lexicon, f.right, ctx)
        raw = tuple(
            1.0 - (1.0 - pa) * (1.0 - pb) for pa, pb in zip(a.probs, b.probs)
        )
        return _normalize(raw, a.fallback or b.fallback)
    if isinstance(f, Not):
        a = eval_formula(lexicon, f.inner, ctx)
        raw = tuple(1.0 - p for p in a.probs)
        return _normalize(raw, a.fallback)
    raise TypeError(f"not a formula: {f!r}")


def posterior_over_constraints(
    lexicon: Lexicon, constraints, ctx: DisplayContext
) -> Posterior:
    """Product of per-constraint posteriors, renormalized; empty -> uniform."""
    raw = [1.0, 1.0, 1.0]
    fallback = False
    for f in constraints:
        p = eval_formula(lexicon, f, ctx)
        fallback = fallback or p.fallback
        raw = [r * q for r, q in zip(raw, p.probs)]
    return _normalize(tuple(raw), fallback)
