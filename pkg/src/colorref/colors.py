"""Color lexicon and per-term applicability semantics.

The matcher reasons about a display of three color patches. Each lexicon
term carries a Gaussian kernel in hue/saturation/lightness space; the
kernel value is the term's applicability to a patch, which Bayes-inverts
into a listener distribution over the three candidates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

TRUTH_THRESHOLD = 0.5


class LexiconError(Exception):
    """Raised for malformed or invalid lexicon files."""


class DegenerateEvidenceError(Exception):
    """All three patches have zero applicability for a term."""


class ExhaustedLexiconError(Exception):
    """Every lexicon term has already been used in the dialogue."""


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class ColorPatch:
    """A point in HSL space. Hue wraps modulo 360; sat/light clamp to [0, 1]."""

    hue: float
    saturation: float
    lightness: float

    def __post_init__(self):
        object.__setattr__(self, "hue", float(self.hue) % 360.0)
        object.__setattr__(self, "saturation", _clamp01(float(self.saturation)))
        object.__setattr__(self, "lightness", _clamp01(float(self.lightness)))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.hue, self.saturation, self.lightness)


@dataclass(frozen=True)
class DisplayContext:
    """An ordered triple of patches; target_index is only known director-side."""

    patches: tuple[ColorPatch, ColorPatch, ColorPatch]
    target_index: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "patches", tuple(self.patches))
        if len(self.patches) != 3:
            raise ValueError("a display context holds exactly 3 patches")
        if self.target_index is not None and self.target_index not in (0, 1, 2):
            raise ValueError(f"target_index {self.target_index!r} out of range")

    def without_target(self) -> "DisplayContext":
        return DisplayContext(self.patches, None)


@dataclass(frozen=True)
class ColorTerm:
    label: str
    hue: float
    sat: float
    light: float
    spread_hue: float
    spread_sat: float
    spread_light: float

    def __post_init__(self):
        if not self.label:
            raise LexiconError("color term label must be nonempty")
        for name in ("spread_hue", "spread_sat", "spread_light"):
            if getattr(self, name) <= 0:
                raise LexiconError(f"{self.label!r}: {name} must be strictly positive")


class Lexicon:
    """Immutable label -> ColorTerm map."""

    def __init__(self, terms):
        terms = list(terms)
        if not terms:
            raise LexiconError("lexicon must be nonempty")
        self._terms: dict[str, ColorTerm] = {}
        for t in terms:
            if t.label in self._terms:
                raise LexiconError(f"duplicate label {t.label!r}")
            self._terms[t.label] = t
        self._max_label_words = max(len(l.split()) for l in self._terms)

    def __len__(self):
        return len(self._terms)

    def __contains__(self, label):
        return label in self._terms

    def __getitem__(self, label) -> ColorTerm:
        return self._terms[label]

    def __iter__(self):
        return iter(self._terms.values())

    def labels(self) -> list[str]:
        return list(self._terms)

    @property
    def max_label_words(self) -> int:
        return self._max_label_words


def load_lexicon(path) -> Lexicon:
    """Load a lexicon from a JSON-lines file (one term object per line)."""
    terms = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LexiconError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            try:
                terms.append(
                    ColorTerm(
                        label=obj["label"],
                        hue=float(obj["hue"]),
                        sat=float(obj["sat"]),
                        light=float(obj["light"]),
                        spread_hue=float(obj["spread_hue"]),
                        spread_sat=float(obj["spread_sat"]),
                        spread_light=float(obj["spread_light"]),
                    )
                )
            except KeyError as exc:
                raise LexiconError(f"{path}:{lineno}: missing field {exc.args[0]!r}") from exc
    return Lexicon(terms)


def hue_distance(a: float, b: float) -> float:
    """Circular distance on the hue wheel, always in [0, 180]."""
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def applicability(term: ColorTerm, patch: ColorPatch) -> float:
    """Gaussian kernel value in [0, 1]; 1.0 exactly at the term's mean."""
    dh = hue_distance(term.hue, patch.hue) / term.spread_hue
    ds = (term.sat - patch.saturation) / term.spread_sat
    dl = (term.light - patch.lightness) / term.spread_light
    return math.exp(-0.5 * (dh * dh + ds * ds + dl * dl))


def literal_listener(term: ColorTerm, ctx: DisplayContext) -> tuple[float, float, float]:
    """Bayes inversion of applicability under a uniform prior over patches."""
    apps = [applicability(term, p) for p in ctx.patches]
    total = sum(apps)
    if total <= 0.0:
        raise DegenerateEvidenceError(f"term {term.label!r} applies to no patch")
    return tuple(a / total for a in apps)


def speaker_distribution(
    lexicon: Lexicon, ctx: DisplayContext, target: int, alpha: float = 1.0
) -> dict[str, float]:
    """Distribution over lexicon terms for describing the given patch.

    Pragmatic-speaker form: proportional to the literal listener's mass on
    the target, raised to the rationality power alpha. Terms with zero
    listener mass on the target are excluded (probability 0).
    """
    if len(lexicon) == 0:
        raise LexiconError("empty lexicon")
    scores: dict[str, float] = {}
    for term in lexicon:
        try:
            mass = literal_listener(term, ctx)[target]
        except DegenerateEvidenceError:
            mass = 0.0
        scores[term.label] = mass**alpha if mass > 0.0 else 0.0
    total = sum(scores.values())
    if total <= 0.0:
        # Kernel applicability underflowed for every term; treat all as equal.
        n = len(scores)
        return {label: 1.0 / n for label in scores}
    return {label: s / total for label, s in scores.items()}


def best_identifying_expression(
    lexicon: Lexicon,
    ctx: DisplayContext,
    patch_index: int,
    used: set[str],
    alpha: float = 1.0,
) -> ColorTerm:
    """Most likely unused expression for the patch; ties break lexicographically."""
    dist = speaker_distribution(lexicon, ctx, patch_index, alpha=alpha)
    candidates = [(label, p) for label, p in dist.items() if label not in used]
    if not candidates:
        raise ExhaustedLexiconError("all lexicon terms already used")
    best_label = max(candidates, key=lambda lp: (lp[1], _rev_key(lp[0])))[0]
    return lexicon[best_label]


def _rev_key(label: str):
    # Inverts lexicographic order so that max() prefers the smaller label on ties.
    return tuple(-ord(c) for c in label)


def sample_true_description(
    lexicon: Lexicon,
    ctx: DisplayContext,
    target: int,
    rng: np.random.Generator,
    threshold: float = TRUTH_THRESHOLD,
    exclude: set[str] | None = None,
) -> ColorTerm:
    """Sample a term that is merely true of the target patch.

    Candidates are terms whose applicability to the target exceeds the truth
    threshold; sampling weight is proportional to applicability. Falls back
    to the argmax-applicability term when no candidate clears the threshold.
    """
    exclude = exclude or set()
    patch = ctx.patches[target]
    apps = {
        t.label: applicability(t, patch) for t in lexicon if t.label not in exclude
    }
    if not apps:
        raise ExhaustedLexiconError("all lexicon terms already used")
    candidates = {l: a for l, a in apps.items() if a >= threshold}
    if not candidates:
        best = max(apps.items(), key=lambda la: (la[1], _rev_key(la[0])))[0]
        return lexicon[best]
    labels = sorted(candidates)
    weights = np.array([candidates[l] for l in labels])
    weights = weights / weights.sum()
    choice = rng.choice(len(labels), p=weights)
    return lexicon[labels[int(choice)]]
