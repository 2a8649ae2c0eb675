import pytest

from colorref import default_grammar_path, default_lexicon_path
from colorref.colors import ColorPatch, ColorTerm, DisplayContext, Lexicon, load_lexicon
from colorref.grammar import Pcfg, load_grammar


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon(default_lexicon_path())


@pytest.fixture(scope="session")
def grammar(lexicon):
    return load_grammar(default_grammar_path(), lexicon)


@pytest.fixture(scope="session")
def pcfg(grammar):
    return Pcfg.uniform(grammar)


def make_term(label, hue, sat=0.8, light=0.5, spread_hue=20.0, spread_sat=0.3,
              spread_light=0.2):
    return ColorTerm(label, hue, sat, light, spread_hue, spread_sat, spread_light)


@pytest.fixture(scope="session")
def small_lexicon():
    """Ten single-word terms spread around the hue wheel."""
    labels = ["red", "orange", "yellow", "green", "teal", "cyan", "blue",
              "purple", "magenta", "pink"]
    return Lexicon(make_term(l, i * 36.0) for i, l in enumerate(labels))


def patch(hue, sat=0.8, light=0.5):
    return ColorPatch(hue, sat, light)


def ctx_of(h0, h1, h2, target=None):
    return DisplayContext((patch(h0), patch(h1), patch(h2)), target)
