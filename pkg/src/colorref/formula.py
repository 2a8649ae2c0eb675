"""Description-logic formulas over lexicon terms."""

from __future__ import annotations

from dataclasses import dataclass


class Formula:
    """Base class: Atom | And | Or | Not."""

    __slots__ = ()


@dataclass(frozen=True)
class Atom(Formula):
    label: str


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Not(Formula):
    inner: Formula


def conjoin(formulas) -> Formula:
    """Left-fold a nonempty sequence of formulas with And."""
    formulas = list(formulas)
    if not formulas:
        raise ValueError("cannot conjoin an empty sequence")
    out = formulas[0]
    for f in formulas[1:]:
        out = And(out, f)
    return out


def disjuncts(f: Formula) -> list[Formula]:
    """Flatten a (possibly nested) Or into its disjuncts."""
    if isinstance(f, Or):
        return disjuncts(f.left) + disjuncts(f.right)
    return [f]


def formula_to_text(f: Formula) -> str:
    if isinstance(f, Atom):
        return f.label
    if isinstance(f, And):
        return f"({formula_to_text(f.left)} and {formula_to_text(f.right)})"
    if isinstance(f, Or):
        return f"({formula_to_text(f.left)} or {formula_to_text(f.right)})"
    if isinstance(f, Not):
        return f"not {formula_to_text(f.inner)}"
    raise TypeError(f"not a formula: {f!r}")


def formula_to_obj(f: Formula):
    """JSON-friendly representation, inverse of obj_to_formula."""
    if isinstance(f, Atom):
        return {"atom": f.label}
    if isinstance(f, And):
        return {"and": [formula_to_obj(f.left), formula_to_obj(f.right)]}
    if isinstance(f, Or):
        return {"or": [formula_to_obj(f.left), formula_to_obj(f.right)]}
    if isinstance(f, Not):
        return {"not": formula_to_obj(f.inner)}
    raise TypeError(f"not a formula: {f!r}")


def obj_to_formula(obj) -> Formula:
    if "atom" in obj:
        return Atom(obj["atom"])
    if "and" in obj:
        a, b = obj["and"]
        return And(obj_to_formula(a), obj_to_formula(b))
    if "or" in obj:
        a, b = obj["or"]
        return Or(obj_to_formula(a), obj_to_formula(b))
    if "not" in obj:
        return Not(obj_to_formula(obj["not"]))
    raise ValueError(f"not a serialized formula: {obj!r}")
