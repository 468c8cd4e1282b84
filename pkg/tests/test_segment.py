import math

import numpy as np
import pytest
from conftest import make_track
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import segment_spans

from bytespan.segment import ConstraintConfig, Span, segment

UNSTABLE = "unstable"
FIG1_GLOBAL = (4.0, 3.5, 3.2, 3.0, 1.0, 0.8, 0.5, 0.4)
FIG1_MONOTONIC = (4.0, 2.5, 3.0, 2.8, 2.0, 1.5, 0.5, 0.9)


def pieces(track, cfg):
    return [track.data[s.start : s.end].decode() for s in segment(track, cfg)]


class TestFigureOne:
    def test_global(self):
        track = make_track(UNSTABLE, FIG1_GLOBAL)
        assert pieces(track, ConstraintConfig("global", theta_g=2.5)) == ["u", "n", "s", "table"]

    def test_monotonic(self):
        track = make_track(UNSTABLE, FIG1_MONOTONIC)
        assert pieces(track, ConstraintConfig("monotonic")) == ["un", "stabl", "e"]

    def test_combined_rescues_small_rise(self):
        track = make_track(UNSTABLE, FIG1_MONOTONIC)
        assert pieces(track, ConstraintConfig("combined", theta_g=1.0)) == ["un", "stable"]


class TestTrivialShapes:
    def test_increasing_monotonic_gives_singletons(self):
        track = make_track("abcdef", np.arange(6.0))
        assert pieces(track, ConstraintConfig("monotonic")) == list("abcdef")

    def test_decreasing_monotonic_gives_one_span(self):
        track = make_track("abcdef", np.arange(6.0)[::-1])
        assert pieces(track, ConstraintConfig("monotonic")) == ["abcdef"]

    def test_pretoken_start_always_breaks(self):
        track = make_track("ab cd", [5, 4, 3, 2, 1])
        assert pieces(track, ConstraintConfig("monotonic")) == ["ab", " cd"]

    def test_span_fields(self):
        track = make_track("ab", [1, 2], doc_id="x")
        assert segment(track, ConstraintConfig("monotonic")) == [Span("x", 0, 1), Span("x", 1, 1)]

    def test_entropy_signal(self):
        track = make_track("ab", [1, 2], entropy=[2, 1])
        assert pieces(track, ConstraintConfig("monotonic", signal="entropy")) == ["ab"]
        assert pieces(track, ConstraintConfig("monotonic", signal="surprisal")) == ["a", "b"]


class TestTies:
    """Equal values break the span: continuation needs a strict decrease or
    a value strictly below the threshold."""

    def test_flat_signal_monotonic(self):
        track = make_track("aaaa", [2.0] * 4)
        assert pieces(track, ConstraintConfig("monotonic")) == list("aaaa")

    def test_value_at_threshold(self):
        track = make_track("ab", [3.0, 2.5])
        assert pieces(track, ConstraintConfig("global", theta_g=2.5)) == ["a", "b"]

    def test_slack_makes_flat_signal_continue(self):
        track = make_track("aaaa", [2.0] * 4)
        assert pieces(track, ConstraintConfig("monotonic", theta_m=0.5)) == ["aaaa"]


class TestConfig:
    @pytest.mark.parametrize("kind", ["global", "combined"])
    def test_threshold_required(self, kind):
        with pytest.raises(ValueError):
            ConstraintConfig(kind)
        with pytest.raises(ValueError):
            ConstraintConfig(kind, theta_g=math.nan)

    def test_negative_slack(self):
        with pytest.raises(ValueError):
            ConstraintConfig("monotonic", theta_m=-0.1)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            ConstraintConfig("local")


# letters, digits, punctuation and spaces give random pre-token boundaries;
# values come from a coarse grid so ties are common
GRID = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.5])


def _with_values(text: str, seed: int):
    data = text.encode()
    return data, np.random.default_rng(seed).choice(GRID, len(data))


track_strategy = st.builds(
    _with_values, st.text(st.sampled_from(list("aab1 .é")), min_size=1, max_size=40),
    st.integers(0, 2**32 - 1),
)
config_strategy = st.one_of(
    st.builds(ConstraintConfig, st.just("global"), theta_g=st.sampled_from([0.0, 1.0, 1.5, 3.0])),
    st.builds(ConstraintConfig, st.just("monotonic"), theta_m=st.sampled_from([0.0, 0.5])),
    st.builds(ConstraintConfig, st.just("combined"), theta_g=st.sampled_from([0.0, 1.0, 1.5, 3.0]),
              theta_m=st.sampled_from([0.0, 0.5])),
)


class TestProperties:
    @settings(max_examples=10_000)
    @given(track_strategy, config_strategy)
    def test_partition(self, spec, cfg):
        data, values = spec
        spans = segment(make_track(data, values), cfg)
        assert spans[0].start == 0 and spans[-1].end == len(data)
        assert all(a.end == b.start for a, b in zip(spans, spans[1:]))
        assert all(s.length >= 1 for s in spans)
        assert b"".join(data[s.start : s.end] for s in spans) == data

    @given(track_strategy, config_strategy)
    def test_pretoken_respect(self, spec, cfg):
        data, values = spec
        track = make_track(data, values)
        bounds = track.boundaries
        for s in segment(track, cfg):
            assert not any(s.start < b < s.end for b in bounds)

    @given(track_strategy, config_strategy)
    def test_oracle(self, spec, cfg):
        data, values = spec
        track = make_track(data, values)
        got = [(s.start, s.length) for s in segment(track, cfg)]
        assert got == segment_spans(data, values, track.boundaries[:-1], cfg.kind, cfg.theta_g, cfg.theta_m)

    @given(track_strategy)
    def test_combined_with_minus_infinity_is_monotonic(self, spec):
        track = make_track(*spec)
        assert segment(track, ConstraintConfig("monotonic")) == segment(
            track, ConstraintConfig("combined", theta_g=-math.inf)
        )

    @given(track_strategy)
    def test_global_extremes(self, spec):
        track = make_track(*spec)
        whole = segment(track, ConstraintConfig("global", theta_g=math.inf))
        assert [s.start for s in whole] == list(track.boundaries[:-1])
        single = segment(track, ConstraintConfig("global", theta_g=-math.inf))
        assert len(single) == len(track.data)

    @given(track_strategy, st.floats(0, 5), st.floats(0, 5))
    def test_threshold_monotone(self, spec, a, b):
        track = make_track(*spec)
        lo, hi = sorted((a, b))
        n_lo = len(segment(track, ConstraintConfig("global", theta_g=lo)))
        n_hi = len(segment(track, ConstraintConfig("global", theta_g=hi)))
        assert n_hi <= n_lo
