"""Matcher agent for the three-patch color reference game."""

from importlib import resources


def default_lexicon_path() -> str:
    return str(resources.files("colorref").joinpath("data/lexicon.jsonl"))


def default_grammar_path() -> str:
    return str(resources.files("colorref").joinpath("data/grammar.txt"))
