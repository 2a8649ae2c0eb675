import pytest
from hypothesis import given, strategies as st

from colorref.colors import DisplayContext, Lexicon, literal_listener
from colorref.evaluation import (
    Posterior,
    UnknownTermError,
    eval_atom,
    eval_formula,
    posterior_over_constraints,
)
from colorref.formula import And, Atom, Not, Or
from conftest import ctx_of, make_term

TOL = 1e-12


@pytest.fixture(scope="module")
def ctx():
    return ctx_of(10, 120, 250)


def certain_lexicon():
    """Terms with tiny spreads: each applies to exactly one patch of
    ctx_of(10, 120, 250), so the listener distribution is one-hot."""
    return Lexicon([
        make_term("first", 10, spread_hue=1e-3),
        make_term("second", 120, spread_hue=1e-3),
        make_term("third", 250, spread_hue=1e-3),
    ])


class TestPosterior:
    def test_validation(self):
        with pytest.raises(ValueError):
            Posterior((0.5, 0.5))
        with pytest.raises(ValueError):
            Posterior((0.7, 0.4, -0.1))
        with pytest.raises(ValueError):
            Posterior((0.5, 0.4, 0.2))

    def test_argmax_tie_breaks_low(self):
        assert Posterior((0.4, 0.4, 0.2)).argmax() == 0
        assert Posterior((0.2, 0.4, 0.4)).argmax() == 1


class TestEvalAtom:
    def test_matches_listener(self, lexicon, ctx):
        for label in ("green", "blue", "red"):
            post = eval_atom(lexicon, label, ctx)
            assert post.probs == literal_listener(lexicon[label], ctx)
            assert not post.fallback

    def test_unknown_term(self, lexicon, ctx):
        with pytest.raises(UnknownTermError):
            eval_atom(lexicon, "zorp", ctx)

    def test_degenerate_term_uniform_fallback(self, ctx):
        lex = Lexicon([make_term("t", 0, spread_hue=1e-6, spread_sat=1e-6)])
        far = ctx_of(180, 170, 190)
        post = eval_atom(lex, "t", far)
        assert post.fallback
        assert post.probs == (pytest.approx(1 / 3),) * 3


class TestAlgebra:
    def test_and_is_renormalized_product(self, lexicon, ctx):
        a = eval_atom(lexicon, "green", ctx)
        b = eval_atom(lexicon, "blue", ctx)
        raw = [pa * pb for pa, pb in zip(a.probs, b.probs)]
        total = sum(raw)
        got = eval_formula(lexicon, And(Atom("green"), Atom("blue")), ctx)
        for g_, e in zip(got.probs, raw):
            assert g_ == pytest.approx(e / total, abs=TOL)

    def test_or_is_complement_product(self, lexicon, ctx):
        a = eval_atom(lexicon, "green", ctx)
        b = eval_atom(lexicon, "blue", ctx)
        raw = [1 - (1 - pa) * (1 - pb) for pa, pb in zip(a.probs, b.probs)]
        total = sum(raw)
        got = eval_formula(lexicon, Or(Atom("green"), Atom("blue")), ctx)
        for g_, e in zip(got.probs, raw):
            assert g_ == pytest.approx(e / total, abs=TOL)

    def test_not_is_renormalized_complement(self, lexicon, ctx):
        a = eval_atom(lexicon, "green", ctx)
        raw = [1 - p for p in a.probs]
        total = sum(raw)
        got = eval_formula(lexicon, Not(Atom("green")), ctx)
        for g_, e in zip(got.probs, raw):
            assert g_ == pytest.approx(e / total, abs=TOL)

    def test_one_hot_cases(self):
        lex = certain_lexicon()
        ctx = ctx_of(10, 120, 250)
        assert eval_formula(lex, Atom("first"), ctx).probs == (1.0, 0.0, 0.0)
        assert eval_formula(lex, Not(Atom("first")), ctx).probs == (0.0, 0.5, 0.5)
        got = eval_formula(lex, Or(Atom("first"), Atom("second")), ctx)
        assert got.probs == (0.5, 0.5, 0.0)
        got = eval_formula(lex, And(Not(Atom("first")), Not(Atom("second"))), ctx)
        assert got.probs == (0.0, 0.0, 1.0)

    def test_commutativity(self, lexicon, ctx):
        ab = eval_formula(lexicon, And(Atom("green"), Atom("blue")), ctx)
        ba = eval_formula(lexicon, And(Atom("blue"), Atom("green")), ctx)
        assert ab.probs == pytest.approx(ba.probs, abs=TOL)
        ab = eval_formula(lexicon, Or(Atom("green"), Atom("blue")), ctx)
        ba = eval_formula(lexicon, Or(Atom("blue"), Atom("green")), ctx)
        assert ab.probs == pytest.approx(ba.probs, abs=TOL)

    def test_contradiction_falls_back_to_uniform(self):
        lex = certain_lexicon()
        ctx = ctx_of(10, 120, 250)
        got = eval_formula(lex, And(Atom("first"), Not(Atom("first"))), ctx)
        assert got.fallback
        assert got.probs == (pytest.approx(1 / 3),) * 3

    def test_fallback_flag_propagates(self):
        lex = Lexicon([
            make_term("first", 10, spread_hue=1e-3),
            make_term("nowhere", 200, spread_hue=1e-6, spread_sat=1e-6),
        ])
        ctx = ctx_of(10, 120, 250)
        got = eval_formula(lex, And(Atom("first"), Atom("nowhere")), ctx)
        assert got.fallback


FORMULA_LABELS = ["red", "green", "blue", "pink", "teal"]


def formulas(depth=3):
    atoms = st.builds(Atom, st.sampled_from(FORMULA_LABELS))
    return st.recursive(
        atoms,
        lambda sub: st.one_of(
            st.builds(And, sub, sub),
            st.builds(Or, sub, sub),
            st.builds(Not, sub),
        ),
        max_leaves=2**depth,
    )


class TestProperties:
    @given(f=formulas())
    def test_always_a_proper_distribution(self, small_lexicon, f):
        post = eval_formula(small_lexicon, f, ctx_of(10, 120, 250))
        assert sum(post.probs) == pytest.approx(1.0, abs=1e-9)
        assert all(p >= 0 for p in post.probs)

    @given(f=formulas(), perm=st.permutations([0, 1, 2]))
    def test_patch_permutation_equivariance(self, small_lexicon, f, perm):
        base = ctx_of(10, 120, 250)
        shuffled = DisplayContext(tuple(base.patches[i] for i in perm))
        got = eval_formula(small_lexicon, f, shuffled)
        want = eval_formula(small_lexicon, f, base)
        for new_pos, old_pos in enumerate(perm):
            assert got.probs[new_pos] == pytest.approx(want.probs[old_pos], abs=TOL)


class TestPosteriorOverConstraints:
    def test_empty_is_uniform(self, lexicon, ctx):
        post = posterior_over_constraints(lexicon, [], ctx)
        assert post.probs == (pytest.approx(1 / 3),) * 3
        assert not post.fallback

    def test_equals_iterated_and(self, lexicon, ctx):
        fs = [Atom("green"), Not(Atom("blue")), Atom("teal")]
        combined = posterior_over_constraints(lexicon, fs, ctx)
        parts = [eval_formula(lexicon, f, ctx) for f in fs]
        raw = [1.0, 1.0, 1.0]
        for p in parts:
            raw = [r * q for r, q in zip(raw, p.probs)]
        total = sum(raw)
        for g_, e in zip(combined.probs, raw):
            assert g_ == pytest.approx(e / total, abs=TOL)

    def test_order_invariance(self, lexicon, ctx):
        fs = [Atom("green"), Not(Atom("blue")), Atom("teal")]
        a = posterior_over_constraints(lexicon, fs, ctx)
        b = posterior_over_constraints(lexicon, list(reversed(fs)), ctx)
        assert a.probs == pytest.approx(b.probs, abs=TOL)

    def test_conflicting_evidence_fallback(self):
        lex = certain_lexicon()
        ctx = ctx_of(10, 120, 250)
        post = posterior_over_constraints(
            lex, [Atom("first"), Atom("second")], ctx
        )
        assert post.fallback
        assert post.probs == (pytest.approx(1 / 3),) * 3
