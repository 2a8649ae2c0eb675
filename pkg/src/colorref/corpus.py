"""CIC-style corpus ingestion and first-utterance evaluation."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

from .colors import ColorPatch, DisplayContext, Lexicon
from .evaluation import posterior_over_constraints
from .grammar import Pcfg
from .parsing import (
    Complete,
    InterpretationError,
    NoParse,
    Partial,
    astar_best_parse,
    outcome_to_formula,
    tokenize,
)

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = (
    "utterance",
    "h0", "s0", "l0",
    "h1", "s1", "l1",
    "h2", "s2", "l2",
    "target_index",
)


class CorpusError(Exception):
    pass


def ingest_cic(path) -> list[tuple[str, DisplayContext]]:
    """Read (utterance, context-with-target) rows from a CSV file.

    Malformed rows are skipped and reported via logging.
    """
    rows: list[tuple[str, DisplayContext]] = []
    skipped = 0
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            log.warning("%s: empty corpus file", path)
            return rows
        missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise CorpusError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            try:
                patches = tuple(
                    ColorPatch(
                        float(row[f"h{i}"]), float(row[f"s{i}"]), float(row[f"l{i}"])
                    )
                    for i in range(3)
                )
                target = int(row["target_index"])
                if target not in (0, 1, 2):
                    raise ValueError(f"target_index {target} out of range")
                rows.append((row["utterance"], DisplayContext(patches, target)))
            except (ValueError, TypeError, KeyError) as exc:
                skipped += 1
                log.warning("%s:%d: skipping row (%s)", path, lineno, exc)
    if skipped:
        log.warning("%s: skipped %d malformed rows", path, skipped)
    return rows


@dataclass
class CoverageReport:
    """Parse coverage in mutually exclusive categories, plus accuracy."""

    total: int = 0
    complete: int = 0
    one_nopp: int = 0
    two_nopps: int = 0
    three_plus_nopps: int = 0
    no_parse: int = 0
    successes: int = 0

    @property
    def success_rate(self) -> float | None:
        """Fraction of completely parsed rows whose argmax hits the target.

        None when no row had a complete parse."""
        if self.complete == 0:
            return None
        return self.successes / self.complete

    def rates(self) -> dict[str, float]:
        if self.total == 0:
            return {}
        return {
            "complete": self.complete / self.total,
            "one_nopp": self.one_nopp / self.total,
            "two_nopps": self.two_nopps / self.total,
            "three_plus_nopps": self.three_plus_nopps / self.total,
            "no_parse": self.no_parse / self.total,
        }


def first_utterance_eval(
    corpus, pcfg: Pcfg, lexicon: Lexicon
) -> CoverageReport:
    """Parse each first utterance and score posterior-argmax accuracy over
    the rows with a complete parse; also tally parse coverage."""
    report = CoverageReport()
    for utterance, ctx in corpus:
        report.total += 1
        tokens = tokenize(utterance, lexicon)
        outcome = astar_best_parse(pcfg, tokens) if tokens else NoParse()
        if isinstance(outcome, Complete):
            report.complete += 1
            try:
                f = outcome_to_formula(outcome, lexicon)
            except InterpretationError:
                f = None
            if f is not None:
                post = posterior_over_constraints(lexicon, [f], ctx)
                if post.argmax() == ctx.target_index:
                    report.successes += 1
        elif isinstance(outcome, Partial):
            k = len(outcome.fragments)
            if k == 1:
                report.one_nopp += 1
            elif k == 2:
                report.two_nopps += 1
            else:
                report.three_plus_nopps += 1
        else:
            report.no_parse += 1
    return report
