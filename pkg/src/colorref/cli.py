"""Command-line interface: training, diagnostics, terminal play, serving."""

from __future__ import annotations

import click
import numpy as np

from . import default_grammar_path, default_lexicon_path
from .colors import load_lexicon
from .corpus import first_utterance_eval, ingest_cic
from .evaluation import posterior_over_constraints
from .grammar import Pcfg, load_grammar
from .parsing import (
    Complete,
    NoParse,
    Partial,
    astar_best_parse,
    induce_pcfg_weights,
    tokenize,
)
from .policy import Action, DialogueState, QFunction, TrainConfig, baseline_decide
from .session import Session, session_step
from .simulator import (
    SimUserConfig,
    clarification_histogram,
    evaluate_policy,
    sample_context,
    train_policy,
)


def _load_artifacts(lexicon_path, grammar_path, weights_path=None):
    lexicon = load_lexicon(lexicon_path or default_lexicon_path())
    grammar = load_grammar(grammar_path or default_grammar_path(), lexicon)
    if weights_path:
        pcfg = Pcfg.load_weights(weights_path, grammar)
    else:
        pcfg = Pcfg.uniform(grammar)
    return lexicon, pcfg


def _decider(model_path):
    if model_path is None:
        return baseline_decide, "baseline"
    qf = QFunction.load(model_path)

    def decide(state: DialogueState) -> Action:
        q = qf.values(state)
        return (
            Action.SELECT
            if q[Action.SELECT] > q[Action.ASK_CLARIFICATION]
            else Action.ASK_CLARIFICATION
        )

    return decide, "model"


lexicon_option = click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
grammar_option = click.option("--grammar", "grammar_path", type=click.Path(exists=True), default=None)
seed_option = click.option("--seed", type=int, default=0, show_default=True)


@click.group()
def main():
    """Matcher agent for the three-patch color reference game."""


@main.command()
@lexicon_option
@seed_option
@click.option("--episodes", type=int, default=4000, show_default=True)
@click.option("--px", type=float, default=0.4, show_default=True)
@click.option("--mode", type=str, default="random", show_default=True)
@click.option("--out", type=click.Path(), required=True, help="Model JSON output path.")
@click.option("--curves", type=click.Path(), default=None, help="CSV of per-episode loss/reward.")
def train(lexicon_path, seed, episodes, px, mode, out, curves):
    """Train the DQN clarification policy against the user simulator."""
    lexicon, _ = _load_artifacts(lexicon_path, None)
    cfg = TrainConfig(episodes=episodes)
    qf, curve_data = train_policy(
        lexicon, cfg, SimUserConfig(p_x=px, seed=seed), context_mode=mode
    )
    qf.save(out, config=cfg, seed=seed)
    if curves:
        curve_data.save_csv(curves)
    click.echo(f"trained {episodes} episodes; model written to {out}")


@main.command("eval")
@lexicon_option
@seed_option
@click.option("--model", "model_path", type=click.Path(exists=True), default=None,
              help="Model file; omit to evaluate the threshold baseline.")
@click.option("--episodes", type=int, default=400, show_default=True)
@click.option("--px", type=float, default=0.4, show_default=True)
@click.option("--mode", type=str, default="random", show_default=True)
def eval_cmd(lexicon_path, seed, model_path, episodes, px, mode):
    """Evaluate a policy over simulated episodes."""
    lexicon, _ = _load_artifacts(lexicon_path, None)
    decide, name = _decider(model_path)
    rng = np.random.default_rng(seed)
    result = evaluate_policy(decide, lexicon, episodes, px, rng, context_mode=mode)
    click.echo(
        f"{name}: {result.successes}/{result.episodes} successes "
        f"({result.success_rate:.1%}), mean return {result.mean_return:+.3f}"
    )


@main.command()
@lexicon_option
@seed_option
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--contexts", "n_contexts", type=int, default=400, show_default=True)
@click.option("--px", type=float, default=0.4, show_default=True)
@click.option("--mode", type=str, default="random", show_default=True)
@click.option("--out", type=click.Path(), required=True, help="Histogram CSV output.")
def histogram(lexicon_path, seed, model_path, n_contexts, px, mode, out):
    """First-turn clarify-vs-select histogram by max-posterior bin."""
    lexicon, _ = _load_artifacts(lexicon_path, None)
    decide, _ = _decider(model_path)
    rng = np.random.default_rng(seed)
    contexts = [sample_context(rng, mode) for _ in range(n_contexts)]
    hist = clarification_histogram(decide, lexicon, contexts, px, rng)
    hist.save_csv(out)
    click.echo(f"histogram over {n_contexts} first turns written to {out}")


@main.command("induce-weights")
@lexicon_option
@grammar_option
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True, help="Weights JSON output.")
def induce_weights(lexicon_path, grammar_path, corpus_path, out):
    """Induce PCFG weights from a CIC-style corpus CSV."""
    lexicon, pcfg = _load_artifacts(lexicon_path, grammar_path)
    corpus = ingest_cic(corpus_path)

    def evaluator(constraints, ctx):
        return posterior_over_constraints(lexicon, constraints, ctx)

    induced = induce_pcfg_weights(pcfg.grammar, corpus, evaluator, lexicon)
    induced.save_weights(out)
    click.echo(f"induced weights for {len(induced.weights)} rules written to {out}")


@main.command()
@lexicon_option
@grammar_option
@click.option("--weights", "weights_path", type=click.Path(exists=True), default=None)
@click.argument("utterance")
def parse(lexicon_path, grammar_path, weights_path, utterance):
    """Parse an utterance and print the outcome."""
    lexicon, pcfg = _load_artifacts(lexicon_path, grammar_path, weights_path)
    tokens = tokenize(utterance, lexicon)
    click.echo(f"tokens: {tokens}")
    outcome = astar_best_parse(pcfg, tokens) if tokens else NoParse()
    if isinstance(outcome, Complete):
        click.echo(f"complete parse (of {outcome.n_parses}), "
                   f"p={outcome.tree.probability:.4g}")
        click.echo(_render_tree(outcome.tree))
    elif isinstance(outcome, Partial):
        click.echo(f"partial parse: {len(outcome.fragments)} fragment(s)")
        for frag in outcome.fragments:
            click.echo(f"  span {frag.span}: {' '.join(frag.tokens())}")
    else:
        click.echo("no parse")


def _render_tree(tree, indent=0):
    pad = "  " * indent
    if tree.is_leaf:
        return f"{pad}{tree.symbol!r}"
    lines = [f"{pad}{tree.symbol}"]
    for c in tree.children:
        lines.append(_render_tree(c, indent + 1))
    return "\n".join(lines)


@main.command("cic-eval")
@lexicon_option
@grammar_option
@click.option("--weights", "weights_path", type=click.Path(exists=True), default=None)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
def cic_eval(lexicon_path, grammar_path, weights_path, corpus_path):
    """First-utterance accuracy and parse coverage over a corpus."""
    lexicon, pcfg = _load_artifacts(lexicon_path, grammar_path, weights_path)
    corpus = ingest_cic(corpus_path)
    report = first_utterance_eval(corpus, pcfg, lexicon)
    for name, rate in report.rates().items():
        click.echo(f"{name:>18}: {rate:.4f}")
    if report.success_rate is None:
        click.echo("success rate: n/a (no complete parses)")
    else:
        click.echo(f"success rate over complete parses: {report.success_rate:.1%}")


def _swatch(patch) -> str:
    r, g, b = _hsl_to_rgb(patch.hue, patch.saturation, patch.lightness)
    return f"\x1b[48;2;{r};{g};{b}m      \x1b[0m"


def _hsl_to_rgb(h, s, l):
    c = (1 - abs(2 * l - 1)) * s
    x = c * (1 - abs((h / 60) % 2 - 1))
    m = l - c / 2
    sector = int(h // 60) % 6
    r, g, b = [(c, x, 0), (x, c, 0), (0, c, x), (0, x, c), (x, 0, c), (c, 0, x)][sector]
    return tuple(round((v + m) * 255) for v in (r, g, b))


@main.command()
@lexicon_option
@grammar_option
@seed_option
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--mode", type=str, default="random", show_default=True)
def play(lexicon_path, grammar_path, seed, model_path, mode):
    """Play a game in the terminal: you are the director."""
    lexicon, pcfg = _load_artifacts(lexicon_path, grammar_path)
    rng = np.random.default_rng(seed)
    ctx = sample_context(rng, mode)
    policy = "baseline" if model_path is None else QFunction.load(model_path)
    session = Session(context=ctx, policy=policy)
    click.echo("patches:   " + "  ".join(_swatch(p) for p in ctx.patches))
    click.echo("indices:     0        1        2")
    click.echo(f"your target is patch {ctx.target_index} - describe it!")
    while session.status == "open":
        text = click.prompt("you", type=str)
        reply = session_step(session, text, lexicon, pcfg)
        if reply["type"] == "clarify":
            click.echo(f"matcher: {reply['text']}")
        elif reply["type"] == "select":
            verdict = "correct!" if reply["correct"] else "wrong."
            click.echo(f"matcher selects patch {reply['index']} - {verdict}")
        elif reply["type"] == "timeout":
            click.echo("matcher: we ran out of turns.")
        else:
            click.echo(f"matcher: {reply['text']}")


@main.command()
@lexicon_option
@grammar_option
@seed_option
@click.option("--weights", "weights_path", type=click.Path(exists=True), default=None)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--host", type=str, default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--mode", type=str, default="random", show_default=True)
def serve(lexicon_path, grammar_path, seed, weights_path, model_path, host, port,
          data_dir, mode):
    """Run the matcher service."""
    import uvicorn

    from .server import create_app

    app = create_app(
        lexicon_path=lexicon_path,
        grammar_path=grammar_path,
        weights_path=weights_path,
        model_path=model_path,
        seed=seed,
        data_dir=data_dir,
        context_mode=mode,
    )
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
