"""User simulation, episode loop, DQN training, and histogram analyses."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .colors import (
    ColorPatch,
    DisplayContext,
    ExhaustedLexiconError,
    Lexicon,
    best_identifying_expression,
    hue_distance,
    sample_true_description,
)
from .discourse import (
    attach_clarification,
    attach_confirmation,
    attach_director_description,
    attach_rejection,
    commitments_to_target_constraints,
    extract_commitments,
    new_graph,
)
from .evaluation import posterior_over_constraints
from .formula import Atom
from .policy import (
    Action,
    AdamState,
    DialogueState,
    QFunction,
    ReplayBuffer,
    TrainConfig,
    Transition,
    dqn_update,
    epsilon_schedule,
    reward,
    select_action,
    sync_target,
)

log = logging.getLogger(__name__)

CLOSE_HUE_GAP = 20.0
FAR_HUE_GAP = 60.0
SAMPLING_CAP = 10000

CONTEXT_MODES = ("random", "far", "close", "split")


class ContextSamplingError(Exception):
    pass


@dataclass(frozen=True)
class SimUserConfig:
    p_x: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_x <= 1.0:
            raise ValueError("p_x must lie in [0, 1]")


def _random_patch(rng: np.random.Generator) -> ColorPatch:
    return ColorPatch(rng.uniform(0, 360), rng.uniform(0, 1), rng.uniform(0, 1))


def _hue_gaps(patches) -> list[float]:
    return [
        hue_distance(patches[0].hue, patches[1].hue),
        hue_distance(patches[0].hue, patches[2].hue),
        hue_distance(patches[1].hue, patches[2].hue),
    ]


def sample_context(rng: np.random.Generator, mode: str = "random") -> DisplayContext:
    """Sample a 3-patch display with a uniform target.

    Modes constrain pairwise hue gaps: far > 60 degrees, close < 20, split
    has two close patches and one far one.
    """
    if mode not in CONTEXT_MODES:
        raise ValueError(f"unknown context mode {mode!r}")
    for _ in range(SAMPLING_CAP):
        patches = tuple(_random_patch(rng) for _ in range(3))
        gaps = sorted(_hue_gaps(patches))
        if mode == "random":
            ok = True
        elif mode == "far":
            ok = gaps[0] > FAR_HUE_GAP
        elif mode == "close":
            ok = gaps[2] < CLOSE_HUE_GAP
        else:  # split
            ok = gaps[0] < CLOSE_HUE_GAP and gaps[2] > FAR_HUE_GAP and gaps[1] > FAR_HUE_GAP
        if ok:
            return DisplayContext(patches, int(rng.integers(3)))
    raise ContextSamplingError(f"no {mode!r} context found in {SAMPLING_CAP} tries")


def sim_first_description(
    lexicon: Lexicon,
    ctx: DisplayContext,
    p_x: float,
    rng: np.random.Generator,
    used: set[str] | None = None,
    alpha: float = 1.0,
) -> str:
    """Director's opening description.

    With probability p_x: a merely-true sample; otherwise the most likely
    identifying expression.
    """
    if ctx.target_index is None:
        raise ValueError("simulated director needs a target index")
    used = used or set()
    if rng.random() < p_x:
        term = sample_true_description(lexicon, ctx, ctx.target_index, rng, exclude=used)
    else:
        term = best_identifying_expression(
            lexicon, ctx, ctx.target_index, used, alpha=alpha
        )
    return term.label


def sim_respond_to_clarification(
    lexicon: Lexicon,
    ctx: DisplayContext,
    clar_label: str,
    constraints,
    p_x: float,
    rng: np.random.Generator,
    used: set[str],
    alpha: float = 1.0,
) -> tuple[bool, str | None]:
    """Confirm iff the posterior including the clarification as a tentative
    constraint puts its (unique) argmax on the target; otherwise reject with
    a fresh description. Posterior ties count as non-target."""
    if ctx.target_index is None:
        raise ValueError("simulated director needs a target index")
    tentative = list(constraints) + [Atom(clar_label)]
    post = posterior_over_constraints(lexicon, tentative, ctx)
    top = max(post.probs)
    winners = [i for i, p in enumerate(post.probs) if p == top]
    if winners == [ctx.target_index]:
        return True, None
    try:
        new_label = sim_first_description(lexicon, ctx, p_x, rng, used=used, alpha=alpha)
    except ExhaustedLexiconError:
        new_label = None
    return False, new_label


@dataclass
class TurnRecord:
    director_text: str | None
    matcher_action: str | None
    posterior: tuple[float, float, float]
    reward: float = 0.0


@dataclass
class EpisodeLog:
    context: DisplayContext
    turns: list[TurnRecord] = field(default_factory=list)
    outcome: str = "open"  # success | failure | timeout
    episode_return: float = 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "patches": [p.as_tuple() for p in self.context.patches],
                "target": self.context.target_index,
                "turns": [
                    {
                        "director": t.director_text,
                        "matcher": t.matcher_action,
                        "posterior": list(t.posterior),
                        "reward": t.reward,
                    }
                    for t in self.turns
                ],
                "outcome": self.outcome,
                "return": self.episode_return,
            }
        )


def run_episode(
    decide,
    lexicon: Lexicon,
    ctx: DisplayContext,
    p_x: float,
    rng: np.random.Generator,
    max_turns: int = 15,
    alpha: float = 1.0,
    on_transition=None,
) -> EpisodeLog:
    """Full simulated dialogue: director describes, matcher clarifies or
    selects, simulator answers clarifications; 15-turn cap ends in failure.

    `decide` maps a DialogueState to an Action; `on_transition` (optional)
    observes (state, action, reward, next_state-or-None) for training.
    """
    graph = new_graph()
    used: set[str] = set()
    log_ = EpisodeLog(context=ctx)

    first = sim_first_description(lexicon, ctx, p_x, rng, used=used, alpha=alpha)
    used.add(first)
    attach_director_description(graph, Atom(first))
    constraints = commitments_to_target_constraints(extract_commitments(graph))
    post = posterior_over_constraints(lexicon, constraints, ctx)
    log_.turns.append(TurnRecord(first, None, post.probs))

    history: list[Action] = []
    public_ctx = ctx.without_target()
    for turn in range(max_turns):
        state = DialogueState(post.probs, tuple(history))
        action = decide(state)
        if action == Action.ASK_CLARIFICATION and used >= set(lexicon.labels()):
            action = Action.SELECT  # exhausted lexicon forces selection
        if action == Action.SELECT:
            mu = post.argmax()
            correct = mu == ctx.target_index
            r = reward(Action.SELECT, correct, turn)
            log_.turns.append(TurnRecord(None, f"select:{mu}", post.probs, r))
            log_.episode_return += r
            log_.outcome = "success" if correct else "failure"
            if on_transition:
                on_transition(state, Action.SELECT, r, None)
            break

        r = reward(Action.ASK_CLARIFICATION, turn=turn)
        mu = post.argmax()
        term = best_identifying_expression(lexicon, public_ctx, mu, used, alpha=alpha)
        used.add(term.label)
        attach_clarification(graph, Atom(term.label))
        confirmed, new_label = sim_respond_to_clarification(
            lexicon, ctx, term.label, constraints, p_x, rng, used, alpha=alpha
        )
        if confirmed:
            attach_confirmation(graph)
            answer = "confirm"
        else:
            replacement = Atom(new_label) if new_label else None
            if new_label:
                used.add(new_label)
            attach_rejection(graph, replacement)
            answer = f"reject:{new_label or ''}"
        constraints = commitments_to_target_constraints(extract_commitments(graph))
        post = posterior_over_constraints(lexicon, constraints, ctx)
        log_.turns.append(
            TurnRecord(answer, f"clarify:{term.label}", post.probs, r)
        )
        log_.episode_return += r
        history.append(Action.ASK_CLARIFICATION)
        if turn == max_turns - 1:
            log_.outcome = "timeout"
            if on_transition:
                on_transition(state, Action.ASK_CLARIFICATION, r, None)
            break
        if on_transition:
            next_state = DialogueState(post.probs, tuple(history))
            on_transition(state, Action.ASK_CLARIFICATION, r, next_state)
    return log_


@dataclass
class TrainingCurves:
    losses: list[float] = field(default_factory=list)
    returns: list[float] = field(default_factory=list)

    def save_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["episode", "loss", "reward"])
            for i, (l, r) in enumerate(zip(self.losses, self.returns)):
                writer.writerow([i, l, r])


def train_policy(
    lexicon: Lexicon,
    cfg: TrainConfig,
    sim: SimUserConfig,
    context_mode: str = "random",
    alpha: float = 1.0,
) -> tuple[QFunction, TrainingCurves]:
    """Train the DQN against the user simulator; seed-deterministic."""
    rng = np.random.default_rng(sim.seed)
    policy_net = QFunction()
    target_net = policy_net.copy()
    buffer = ReplayBuffer(cfg.replay_capacity)
    adam = AdamState(policy_net.weights.shape)
    curves = TrainingCurves()
    update_count = 0

    for episode in range(cfg.episodes):
        eps = epsilon_schedule(
            episode, cfg.epsilon_start, cfg.epsilon_end, cfg.epsilon_horizon
        )
        ctx = sample_context(rng, context_mode)
        episode_losses: list[float] = []

        def on_transition(state, action, r, next_state):
            nonlocal update_count
            buffer.push(Transition(state, action, r, next_state))
            batch = buffer.sample(cfg.batch_size, rng)
            loss = dqn_update(policy_net, target_net, batch, cfg, adam)
            update_count += 1
            if update_count % cfg.target_sync_every == 0:
                sync_target(policy_net, target_net)
            episode_losses.append(loss)

        episode_log = run_episode(
            lambda s: select_action(policy_net, s, eps, rng),
            lexicon,
            ctx,
            sim.p_x,
            rng,
            max_turns=cfg.max_turns,
            alpha=alpha,
            on_transition=on_transition,
        )
        curves.losses.append(float(np.mean(episode_losses)) if episode_losses else 0.0)
        curves.returns.append(episode_log.episode_return)
    return policy_net, curves


@dataclass
class EvalResult:
    episodes: int
    successes: int
    mean_return: float
    logs: list[EpisodeLog] = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        return self.successes / self.episodes if self.episodes else 0.0


def evaluate_policy(
    decide,
    lexicon: Lexicon,
    n_episodes: int,
    p_x: float,
    rng: np.random.Generator,
    context_mode: str = "random",
    max_turns: int = 15,
    alpha: float = 1.0,
    keep_logs: bool = False,
) -> EvalResult:
    successes = 0
    total_return = 0.0
    logs: list[EpisodeLog] = []
    for _ in range(n_episodes):
        ctx = sample_context(rng, context_mode)
        ep = run_episode(
            decide, lexicon, ctx, p_x, rng, max_turns=max_turns, alpha=alpha
        )
        successes += ep.outcome == "success"
        total_return += ep.episode_return
        if keep_logs:
            logs.append(ep)
    return EvalResult(
        n_episodes, successes, total_return / n_episodes if n_episodes else 0.0, logs
    )


N_BINS = 10


@dataclass
class Histogram:
    """First-turn action counts bucketed by max-posterior probability."""

    select_counts: list[int] = field(default_factory=lambda: [0] * N_BINS)
    clarify_counts: list[int] = field(default_factory=lambda: [0] * N_BINS)

    def clarifications_at_or_above(self, prob: float) -> int:
        start = min(int(prob * N_BINS), N_BINS - 1)
        return sum(self.clarify_counts[start:])

    def selects_at_or_above(self, prob: float) -> int:
        start = min(int(prob * N_BINS), N_BINS - 1)
        return sum(self.select_counts[start:])

    def save_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_low", "bin_high", "select", "clarify"])
            for b in range(N_BINS):
                writer.writerow(
                    [b / N_BINS, (b + 1) / N_BINS,
                     self.select_counts[b], self.clarify_counts[b]]
                )


def clarification_histogram(
    decide,
    lexicon: Lexicon,
    contexts,
    p_x: float,
    rng: np.random.Generator,
    alpha: float = 1.0,
) -> Histogram:
    """First-turn decision per context, bucketed by max posterior."""
    hist = Histogram()
    for ctx in contexts:
        first = sim_first_description(lexicon, ctx, p_x, rng, alpha=alpha)
        post = posterior_over_constraints(lexicon, [Atom(first)], ctx)
        state = DialogueState(post.probs, ())
        action = decide(state)
        b = min(int(max(post.probs) * N_BINS), N_BINS - 1)
        if action == Action.SELECT:
            hist.select_counts[b] += 1
        else:
            hist.clarify_counts[b] += 1
    return hist


@dataclass(frozen=True)
class ExperimentConfig:
    """On-disk experiment description (JSON)."""

    seed: int = 0
    p_x: float = 0.4
    context_mode: str = "random"
    train: TrainConfig = field(default_factory=TrainConfig)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        train = TrainConfig.from_dict(obj.pop("train", {}))
        return cls(train=train, **obj)
