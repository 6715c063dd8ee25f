import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from eyepeek import metrics as m
from eyepeek.simulate import render_template

WORDS = ["TEXT", "HELLO", "WAVE", "QUIZ", "BANK", "MAIL", "LOGIN", "PAY", "CODE", "DOCS"]


def template(word, cap=12):
    return render_template(word, cap)


def shift(img, dx):
    out = np.roll(img, dx, axis=1)
    out[:, :dx] = img[:, :1]
    return out


class TestCwssim:
    def test_identity(self):
        x = template("TEXT")
        assert m.cwssim(x, x).value == pytest.approx(1.0, abs=1e-6)

    def test_symmetric(self):
        a = template("TEXT")
        b = np.random.default_rng(3).random(a.shape)
        assert abs(m.cwssim(a, b).value - m.cwssim(b, a).value) < 1e-9

    @pytest.mark.parametrize("word", WORDS)
    def test_two_pixel_shift_tolerated(self, word):
        x = template(word)
        assert m.cwssim(x, shift(x, 2)).value >= 0.90

    def test_different_text_scores_lower_than_shift(self):
        a, b = template("TEXT"), template("MAIL")
        h, w = min(a.shape[0], b.shape[0]), min(a.shape[1], b.shape[1])
        a, b = a[:h, :w], b[:h, :w]
        assert m.cwssim(a, b).value < m.cwssim(a, shift(a, 2)).value

    @pytest.mark.parametrize("word", WORDS[:4])
    def test_monotone_under_noise(self, word):
        x = template(word)
        noise = np.random.default_rng(1).standard_normal(x.shape)
        scores = [m.cwssim(x, x + s * noise).value for s in (0, 0.05, 0.1, 0.2)]
        assert all(b < a for a, b in zip(scores, scores[1:]))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            m.cwssim(np.zeros((40, 40)), np.zeros((40, 41)))

    def test_small_inputs_padded(self):
        x = np.random.default_rng(0).random((10, 12))
        s = m.cwssim(x, x)
        assert s.value == pytest.approx(1.0, abs=1e-6)
        assert len(s.levels) == 4

    @given(hnp.arrays(np.float64, (33, 35), elements=st.floats(0, 1)),
           hnp.arrays(np.float64, (33, 35), elements=st.floats(0, 1)))
    def test_range(self, a, b):
        v = m.cwssim(a, b).value
        assert 0.0 <= v <= 1.0

    def test_reflection_similarity_ignores_gain_and_offset(self):
        x = template("TEXT")
        assert m.reflection_similarity(0.1 * x + 0.3, x) == pytest.approx(1.0, abs=1e-6)


class TestPixelStats:
    def test_constant(self):
        assert m.pixel_stats(np.full((5, 7), 0.3)) == pytest.approx((0.3, 0.0))

    def test_checkerboard(self):
        board = np.indices((8, 8)).sum(axis=0) % 2
        assert m.pixel_stats(board) == pytest.approx((0.5, 0.5))

    @given(hnp.arrays(np.float64, st.integers(1, 200), elements=st.floats(0, 1)), st.randoms())
    def test_permutation_invariant(self, x, rnd):
        y = x.copy()
        rnd.shuffle(y)
        assert m.pixel_stats(x) == pytest.approx(m.pixel_stats(y))

    def test_empty(self):
        with pytest.raises(ValueError):
            m.pixel_stats(np.array([]))


class TestPearson:
    def test_affine(self):
        xs = [1.0, 2.5, 3.0, 7.0]
        assert m.pearson(xs, [2 * x + 1 for x in xs]) == pytest.approx(1.0)
        assert m.pearson(xs, [-x for x in xs]) == pytest.approx(-1.0)

    def test_hand_value(self):
        assert m.pearson([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6)

    def test_zero_variance(self):
        with pytest.raises(m.UndefinedCorrelation):
            m.pearson([1, 1, 1], [1, 2, 3])

    def test_too_few(self):
        with pytest.raises(ValueError):
            m.pearson([1, 2], [3, 4])

    @given(st.lists(st.floats(-100, 100), min_size=3, max_size=30).filter(lambda v: np.ptp(v) > 1e-3),
           st.floats(0.1, 10), st.floats(-50, 50))
    def test_positive_affine_invariance(self, xs, a, b):
        ys = np.sin(np.arange(len(xs))) + np.arange(len(xs))
        r = m.pearson(xs, ys)
        assert m.pearson([a * x + b for x in xs], ys) == pytest.approx(r, abs=1e-6)


class TestAttackScore:
    def test_zero(self):
        assert m.attack_score([0] * 6) == 0

    @given(st.lists(st.floats(0, 0.5), min_size=6, max_size=6))
    def test_homogeneous(self, acc):
        assert m.attack_score([2 * a for a in acc]) == pytest.approx(2 * m.attack_score(acc))

    def test_largest_size_lowest_weight(self):
        assert m.attack_score([0, 0, 0, 0, 0, 1], 1.5) == pytest.approx(1.5)
        assert m.attack_score([1, 0, 0, 0, 0, 0], 1.5) == pytest.approx(1.5 ** 6)

    def test_arity(self):
        with pytest.raises(ValueError):
            m.attack_score([1] * 5)
