import json

import numpy as np
import pytest

from colorref.colors import Lexicon, hue_distance
from colorref.policy import Action, MAX_TURNS, TrainConfig, baseline_decide
from colorref.simulator import (
    CLOSE_HUE_GAP,
    FAR_HUE_GAP,
    EpisodeLog,
    ExperimentConfig,
    Histogram,
    SimUserConfig,
    clarification_histogram,
    evaluate_policy,
    run_episode,
    sample_context,
    sim_first_description,
    sim_respond_to_clarification,
    train_policy,
)
from conftest import ctx_of, make_term

ALWAYS_CLARIFY = lambda state: Action.ASK_CLARIFICATION
ALWAYS_SELECT = lambda state: Action.SELECT


def gaps(ctx):
    hs = [p.hue for p in ctx.patches]
    return [hue_distance(hs[0], hs[1]), hue_distance(hs[0], hs[2]),
            hue_distance(hs[1], hs[2])]


class TestSampleContext:
    def test_random_has_target(self):
        ctx = sample_context(np.random.default_rng(0))
        assert ctx.target_index in (0, 1, 2)

    def test_far_mode(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            assert all(g > FAR_HUE_GAP for g in gaps(sample_context(rng, "far")))

    def test_close_mode(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            assert all(g < CLOSE_HUE_GAP for g in gaps(sample_context(rng, "close")))

    def test_split_mode(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            gs = sorted(gaps(sample_context(rng, "split")))
            assert gs[0] < CLOSE_HUE_GAP
            assert gs[1] > FAR_HUE_GAP and gs[2] > FAR_HUE_GAP

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            sample_context(np.random.default_rng(0), "sideways")

    def test_seed_determinism(self):
        a = sample_context(np.random.default_rng(7), "split")
        b = sample_context(np.random.default_rng(7), "split")
        assert a == b


class TestSimUserConfig:
    def test_p_x_bounds(self):
        SimUserConfig(p_x=0.0)
        SimUserConfig(p_x=1.0)
        with pytest.raises(ValueError):
            SimUserConfig(p_x=1.2)
        with pytest.raises(ValueError):
            SimUserConfig(p_x=-0.1)


class TestFirstDescription:
    def test_identifying_when_px_zero(self, lexicon):
        from colorref.colors import best_identifying_expression

        ctx = sample_context(np.random.default_rng(5), "far")
        label = sim_first_description(lexicon, ctx, 0.0, np.random.default_rng(0))
        expected = best_identifying_expression(lexicon, ctx, ctx.target_index, set())
        assert label == expected.label

    def test_merely_true_when_px_one(self, lexicon):
        from colorref.colors import applicability

        ctx = ctx_of(120, 125, 115, target=0)
        rng = np.random.default_rng(0)
        label = sim_first_description(lexicon, ctx, 1.0, rng)
        # a merely-true description holds of the target but need not
        # distinguish it; check it is the most applicable or clears 0.5
        app = applicability(lexicon[label], ctx.patches[0])
        best = max(applicability(t, ctx.patches[0]) for t in lexicon)
        assert app >= 0.5 or app == best

    def test_requires_target(self, lexicon):
        with pytest.raises(ValueError):
            sim_first_description(lexicon, ctx_of(0, 120, 240), 0.0,
                                  np.random.default_rng(0))


class TestRespondToClarification:
    def lex(self):
        return Lexicon([make_term("red", 0), make_term("green", 120),
                        make_term("blue", 240)])

    def test_confirms_when_clarification_identifies_target(self):
        ctx = ctx_of(0, 120, 240, target=1)
        confirmed, new_label = sim_respond_to_clarification(
            self.lex(), ctx, "green", [], 0.0, np.random.default_rng(0), set()
        )
        assert confirmed and new_label is None

    def test_rejects_wrong_patch_with_fresh_description(self):
        ctx = ctx_of(0, 120, 240, target=1)
        confirmed, new_label = sim_respond_to_clarification(
            self.lex(), ctx, "red", [], 0.0, np.random.default_rng(0),
            used={"red"},
        )
        assert not confirmed
        assert new_label == "green"

    def test_exhausted_lexicon_rejects_without_replacement(self):
        lex = self.lex()
        ctx = ctx_of(0, 120, 240, target=1)
        confirmed, new_label = sim_respond_to_clarification(
            lex, ctx, "red", [], 0.0, np.random.default_rng(0),
            used=set(l.label for l in lex),
        )
        assert not confirmed and new_label is None


class TestRunEpisode:
    def test_far_context_baseline_succeeds(self, lexicon):
        rng = np.random.default_rng(0)
        for _ in range(10):
            ctx = sample_context(rng, "far")
            ep = run_episode(baseline_decide, lexicon, ctx, 0.0, rng)
            assert ep.outcome == "success"

    def test_return_equals_turn_reward_sum(self, lexicon):
        rng = np.random.default_rng(4)
        for _ in range(10):
            ctx = sample_context(rng, "random")
            ep = run_episode(baseline_decide, lexicon, ctx, 0.5, rng)
            assert ep.episode_return == pytest.approx(
                sum(t.reward for t in ep.turns)
            )
            assert ep.outcome in ("success", "failure", "timeout")

    def test_immediate_select_reward(self, lexicon):
        rng = np.random.default_rng(0)
        ctx = sample_context(rng, "far")
        ep = run_episode(ALWAYS_SELECT, lexicon, ctx, 0.0, rng)
        assert len(ep.turns) == 2  # description + selection
        assert ep.episode_return in (0.3, -0.5)

    def test_always_clarify_times_out(self, lexicon):
        rng = np.random.default_rng(0)
        ctx = sample_context(rng, "close")
        ep = run_episode(ALWAYS_CLARIFY, lexicon, ctx, 0.0, rng)
        assert ep.outcome == "timeout"
        assert ep.episode_return == pytest.approx(-2.4)
        assert len(ep.turns) == 1 + MAX_TURNS

    def test_exhausted_lexicon_forces_selection(self):
        lex = Lexicon([make_term("red", 0), make_term("blue", 240)])
        rng = np.random.default_rng(0)
        ctx = ctx_of(0, 240, 120, target=0)
        ep = run_episode(ALWAYS_CLARIFY, lex, ctx, 0.0, rng)
        assert ep.outcome in ("success", "failure")
        assert len(ep.turns) < 1 + MAX_TURNS

    def test_transition_stream_is_consistent(self, lexicon):
        rng = np.random.default_rng(9)
        ctx = sample_context(rng, "random")
        seen = []
        ep = run_episode(
            baseline_decide, lexicon, ctx, 0.5, rng,
            on_transition=lambda *t: seen.append(t),
        )
        assert seen, "every episode emits at least one transition"
        assert seen[-1][3] is None  # terminal
        assert sum(t[2] for t in seen) == pytest.approx(ep.episode_return)
        for s, a, r, ns in seen[:-1]:
            assert ns is not None
            assert ns.turn == s.turn + 1

    def test_determinism(self, lexicon):
        ctx = sample_context(np.random.default_rng(2), "random")
        a = run_episode(baseline_decide, lexicon, ctx, 0.5,
                        np.random.default_rng(33))
        b = run_episode(baseline_decide, lexicon, ctx, 0.5,
                        np.random.default_rng(33))
        assert a.to_json() == b.to_json()

    def test_log_serializes(self, lexicon):
        rng = np.random.default_rng(0)
        ctx = sample_context(rng, "random")
        ep = run_episode(baseline_decide, lexicon, ctx, 0.5, rng)
        obj = json.loads(ep.to_json())
        assert obj["outcome"] == ep.outcome
        assert len(obj["turns"]) == len(ep.turns)


class TestTrainPolicy:
    CFG = TrainConfig(episodes=25)

    def test_bit_reproducible(self, lexicon):
        qa, ca = train_policy(lexicon, self.CFG, SimUserConfig(p_x=0.4, seed=5))
        qb, cb = train_policy(lexicon, self.CFG, SimUserConfig(p_x=0.4, seed=5))
        assert np.array_equal(qa.weights, qb.weights)
        assert ca.losses == cb.losses
        assert ca.returns == cb.returns

    def test_seed_changes_outcome(self, lexicon):
        qa, _ = train_policy(lexicon, self.CFG, SimUserConfig(p_x=0.4, seed=5))
        qb, _ = train_policy(lexicon, self.CFG, SimUserConfig(p_x=0.4, seed=6))
        assert not np.array_equal(qa.weights, qb.weights)

    def test_curves_cover_every_episode(self, lexicon, tmp_path):
        _, curves = train_policy(lexicon, self.CFG, SimUserConfig(p_x=0.4, seed=1))
        assert len(curves.losses) == self.CFG.episodes
        assert len(curves.returns) == self.CFG.episodes
        path = tmp_path / "curves.csv"
        curves.save_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "episode,loss,reward"
        assert len(lines) == 1 + self.CFG.episodes


class TestEvaluatePolicy:
    def test_counts(self, lexicon):
        result = evaluate_policy(
            baseline_decide, lexicon, 20, 0.4, np.random.default_rng(0)
        )
        assert result.episodes == 20
        assert 0 <= result.successes <= 20
        assert 0.0 <= result.success_rate <= 1.0

    def test_baseline_is_strong_at_px_zero(self, lexicon):
        result = evaluate_policy(
            baseline_decide, lexicon, 50, 0.0, np.random.default_rng(1)
        )
        assert result.success_rate >= 0.9

    def test_keep_logs(self, lexicon):
        result = evaluate_policy(
            baseline_decide, lexicon, 5, 0.4, np.random.default_rng(2),
            keep_logs=True,
        )
        assert len(result.logs) == 5
        assert all(isinstance(l, EpisodeLog) for l in result.logs)


class TestHistogram:
    def test_counts_partition_contexts(self, lexicon):
        rng = np.random.default_rng(0)
        contexts = [sample_context(rng) for _ in range(40)]
        hist = clarification_histogram(baseline_decide, lexicon, contexts, 0.4, rng)
        assert sum(hist.select_counts) + sum(hist.clarify_counts) == 40

    def test_baseline_never_selects_below_threshold(self, lexicon):
        rng = np.random.default_rng(0)
        contexts = [sample_context(rng) for _ in range(60)]
        hist = clarification_histogram(baseline_decide, lexicon, contexts, 0.4, rng)
        assert sum(hist.select_counts[:9]) == 0  # only the [0.9, 1.0) bin selects

    def test_at_or_above_helpers(self):
        hist = Histogram()
        hist.clarify_counts[8] = 3
        hist.clarify_counts[9] = 2
        hist.select_counts[9] = 7
        assert hist.clarifications_at_or_above(0.8) == 5
        assert hist.clarifications_at_or_above(0.9) == 2
        assert hist.selects_at_or_above(0.8) == 7

    def test_save_csv(self, lexicon, tmp_path):
        hist = Histogram()
        path = tmp_path / "hist.csv"
        hist.save_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "bin_low,bin_high,select,clarify"
        assert len(lines) == 11


class TestExperimentConfig:
    def test_load(self, tmp_path):
        path = tmp_path / "exp.json"
        path.write_text(json.dumps({
            "seed": 3, "p_x": 0.7, "context_mode": "close",
            "train": {"episodes": 100, "batch_size": 8},
        }))
        cfg = ExperimentConfig.load(path)
        assert cfg.seed == 3
        assert cfg.p_x == 0.7
        assert cfg.context_mode == "close"
        assert cfg.train.episodes == 100
        assert cfg.train.batch_size == 8
        assert cfg.train.gamma == 1.0
