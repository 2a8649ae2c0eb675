"""Clarify-vs-select decision policies.

Two implementations: a rule-based threshold baseline, and a DQN with
linear function approximation, a 200-slot circular replay buffer, and a
periodically synced target network.
"""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass

import numpy as np

MAX_TURNS = 15
N_ACTIONS = 2
FEATURE_DIM = 3 + MAX_TURNS * N_ACTIONS  # posterior + one-hot action history

SELECT_THRESHOLD = 0.95

REWARD_SELECT_CORRECT = 0.3
REWARD_SELECT_WRONG = -0.5
REWARD_CLARIFY = -0.1
REWARD_TIMEOUT = -1.0


class Action(enum.IntEnum):
    ASK_CLARIFICATION = 0
    SELECT = 1


@dataclass(frozen=True)
class DialogueState:
    """Posterior snapshot plus the one-hot history of prior matcher actions."""

    posterior: tuple[float, float, float]
    history: tuple[Action, ...] = ()

    def __post_init__(self):
        if len(self.posterior) != 3:
            raise ValueError("posterior must have 3 entries")
        if len(self.history) > MAX_TURNS:
            raise ValueError("history exceeds the turn horizon")

    @property
    def turn(self) -> int:
        return len(self.history)

    def features(self) -> np.ndarray:
        # Posterior entries enter sorted descending: patch order is arbitrary,
        # and a linear Q needs the confidence ranking to be position-stable.
        x = np.zeros(FEATURE_DIM)
        x[:3] = sorted(self.posterior, reverse=True)
        for t, a in enumerate(self.history):
            x[3 + t * N_ACTIONS + int(a)] = 1.0
        return x


def baseline_decide(state: DialogueState) -> Action:
    """Select iff the most likely patch exceeds the 0.95 threshold (strict)."""
    if max(state.posterior) > SELECT_THRESHOLD:
        return Action.SELECT
    return Action.ASK_CLARIFICATION


def reward(action: Action, correct: bool | None = None, turn: int = 0) -> float:
    """Reward schedule: +0.3 / -0.5 on select, -0.1 per clarification, and
    -1 for the clarification that runs the dialogue into the 15-turn cap."""
    if turn >= MAX_TURNS:
        raise ValueError(f"turn {turn} beyond the {MAX_TURNS}-turn horizon")
    if action == Action.SELECT:
        if correct is None:
            raise ValueError("select reward needs a correctness flag")
        return REWARD_SELECT_CORRECT if correct else REWARD_SELECT_WRONG
    if turn == MAX_TURNS - 1:
        return REWARD_TIMEOUT
    return REWARD_CLARIFY


class QFunction:
    """Linear action-value map: FEATURE_DIM features -> N_ACTIONS values."""

    def __init__(self, weights: np.ndarray | None = None):
        if weights is None:
            weights = np.zeros((N_ACTIONS, FEATURE_DIM))
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (N_ACTIONS, FEATURE_DIM):
            raise ValueError(f"expected weights of shape {(N_ACTIONS, FEATURE_DIM)}")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        self.weights = weights

    def values(self, state: DialogueState) -> np.ndarray:
        return self.weights @ state.features()

    def copy(self) -> "QFunction":
        return QFunction(self.weights.copy())

    def save(self, path, config: "TrainConfig | None" = None, seed: int | None = None):
        obj = {
            "feature_dim": FEATURE_DIM,
            "n_actions": N_ACTIONS,
            "weights": self.weights.tolist(),
            "train_config": config.to_dict() if config else None,
            "seed": seed,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh)

    @classmethod
    def load(cls, path) -> "QFunction":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        if obj["feature_dim"] != FEATURE_DIM or obj["n_actions"] != N_ACTIONS:
            raise ValueError("model file dimensions do not match this build")
        return cls(np.array(obj["weights"]))


def q_values(qf: QFunction, state: DialogueState) -> np.ndarray:
    return qf.values(state)


def select_action(
    qf: QFunction, state: DialogueState, epsilon: float, rng: np.random.Generator
) -> Action:
    """Epsilon-greedy action choice; exact ties break toward clarification."""
    if epsilon > 0 and rng.random() < epsilon:
        return Action(int(rng.integers(N_ACTIONS)))
    q = qf.values(state)
    return Action.SELECT if q[Action.SELECT] > q[Action.ASK_CLARIFICATION] else Action.ASK_CLARIFICATION


def epsilon_schedule(
    episode: int, start: float = 1.0, end: float = 0.05, horizon: int = 1000
) -> float:
    """Linear decay from start to end over the first `horizon` episodes."""
    if episode >= horizon:
        return end
    return start + (end - start) * episode / horizon


@dataclass(frozen=True)
class Transition:
    state: DialogueState
    action: Action
    reward: float
    next_state: DialogueState | None  # None marks a terminal transition


class ReplayBuffer:
    """Circular experience memory; overwrites the oldest entry when full."""

    def __init__(self, capacity: int = 200):
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)

    def push(self, transition: Transition) -> None:
        self._items.append(transition)

    def __len__(self) -> int:
        return len(self._items)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        k = min(batch_size, len(self._items))
        if k == 0:
            return []
        idx = rng.choice(len(self._items), size=k, replace=False)
        items = list(self._items)
        return [items[int(i)] for i in idx]

    def snapshot(self) -> list[Transition]:
        return list(self._items)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 24
    gamma: float = 1.0
    learning_rate: float = 0.001
    weight_decay: float = 0.01
    target_sync_every: int = 20
    episodes: int = 4000
    max_turns: int = MAX_TURNS
    eval_episodes: int = 400
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_horizon: int = 1000
    huber_delta: float = 1.0
    replay_capacity: int = 200

    def __post_init__(self):
        if self.target_sync_every < 1:
            raise ValueError("target sync period must be >= 1")
        for name in ("batch_size", "gamma", "learning_rate", "episodes", "max_turns"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return dataclass_to_dict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainConfig":
        return cls(**obj)


def dataclass_to_dict(cfg) -> dict:
    return {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}


class AdamState:
    """Per-parameter Adam moments, with decoupled weight decay."""

    def __init__(self, shape, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self, weights: np.ndarray, grad: np.ndarray, lr: float, weight_decay: float):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        weights -= lr * m_hat / (np.sqrt(v_hat) + self.eps)
        weights -= lr * weight_decay * weights


def _huber(delta: np.ndarray, threshold: float) -> np.ndarray:
    absd = np.abs(delta)
    quad = 0.5 * delta * delta
    lin = threshold * (absd - 0.5 * threshold)
    return np.where(absd <= threshold, quad, lin)


def _huber_grad(delta: np.ndarray, threshold: float) -> np.ndarray:
    return np.clip(delta, -threshold, threshold)


def dqn_update(
    policy_net: QFunction,
    target_net: QFunction,
    batch: list[Transition],
    cfg: TrainConfig,
    adam: AdamState,
) -> float:
    """One gradient step on the TD error of a replay batch; returns mean loss.

    Terminal transitions drop the bootstrap term. The TD error passes
    through a Huber loss and an Adam step with decoupled weight decay.
    """
    if not batch:
        return 0.0
    feats = np.stack([t.state.features() for t in batch])
    actions = np.array([int(t.action) for t in batch])
    rewards = np.array([t.reward for t in batch])
    targets = rewards.copy()
    for i, t in enumerate(batch):
        if t.next_state is not None:
            targets[i] += cfg.gamma * float(
                np.max(target_net.values(t.next_state))
            )
    preds = (feats @ policy_net.weights.T)[np.arange(len(batch)), actions]
    delta = preds - targets
    loss = float(np.mean(_huber(delta, cfg.huber_delta)))
    dldd = _huber_grad(delta, cfg.huber_delta) / len(batch)
    grad = np.zeros_like(policy_net.weights)
    for i, a in enumerate(actions):
        grad[a] += dldd[i] * feats[i]
    adam.step(policy_net.weights, grad, cfg.learning_rate, cfg.weight_decay)
    return loss


def sync_target(policy_net: QFunction, target_net: QFunction) -> None:
    target_net.weights = policy_net.weights.copy()
