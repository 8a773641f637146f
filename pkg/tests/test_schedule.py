import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adjckpt import schedule as sched
from adjckpt.errors import InvalidArgumentError, ScheduleValidationError


def brute_recompute(n, m, _cache={}):
    """Unmemoized recursion in spirit; tiny cache only to keep tests quick."""
    if m >= n:
        return 0
    if m == 1:
        return n * (n - 1) // 2
    key = (n, m)
    if key not in _cache:
        _cache[key] = min(
            k + brute_recompute(k, m) + brute_recompute(n - k, m - 1)
            for k in range(1, n)
        )
    return _cache[key]


def plain_dp_table(nmax, mmax):
    """Independent bottom-up evaluation with no closed-form shortcuts."""
    table = np.zeros((mmax + 1, nmax + 1), dtype=np.int64)
    n = np.arange(nmax + 1)
    table[1] = n * (n - 1) // 2
    for m in range(2, mmax + 1):
        for nn in range(2, nmax + 1):
            if m >= nn:
                continue
            ks = np.arange(1, nn)
            table[m, nn] = (ks + table[m, 1:nn] + table[m - 1, nn - 1 : 0 : -1]).min()
    return table


class TestRecomputeCount:
    def test_invalid_arguments(self):
        for n, m in [(0, 1), (1, 0), (0, 0), (-3, 2)]:
            with pytest.raises(InvalidArgumentError):
                sched.recompute_count(n, m)

    def test_single_slot_closed_form(self):
        for n in range(1, 101):
            assert sched.recompute_count(n, 1) == n * (n - 1) // 2

    def test_enough_slots_means_no_recomputation(self):
        assert sched.recompute_count(5, 5) == 0
        assert sched.recompute_count(7, 30) == 0

    def test_known_values(self):
        assert sched.recompute_count(4, 1) == 6
        assert sched.recompute_count(10, 3) == brute_recompute(10, 3)

    def test_matches_unmemoized_recursion(self):
        for n in range(1, 13):
            for m in range(1, 5):
                assert sched.recompute_count(n, m) == brute_recompute(n, m)

    def test_matches_plain_dp_over_full_grid(self):
        table = plain_dp_table(200, 20)
        for n in range(1, 201):
            for m in range(1, 21):
                if m >= n:
                    assert sched.recompute_count(n, m) == 0
                else:
                    assert sched.recompute_count(n, m) == table[m, n], (n, m)

    def test_monotonicity(self):
        for n in range(2, 120):
            for m in range(1, 14):
                assert sched.recompute_count(n, m + 1) <= sched.recompute_count(n, m)
                assert sched.recompute_count(n + 1, m) >= sched.recompute_count(n, m)

    @given(n=st.integers(1, 400), m=st.integers(1, 40))
    @settings(max_examples=80, deadline=None)
    def test_nonnegative_and_zero_iff_enough_slots(self, n, m):
        p = sched.recompute_count(n, m)
        assert p >= 0
        assert (p == 0) == (m >= n)


class TestGenerateSchedule:
    def test_single_step_stream(self):
        acts = sched.generate_schedule(1, 1)
        assert acts == [
            sched.Store(slot=0, state=0),
            sched.PrimalCapture(step=0),
            sched.AdjointStep(step=0),
            sched.Discard(slot=0),
        ]

    def test_all_states_stored(self):
        stats = sched.schedule_stats(sched.generate_schedule(3, 3), 3, 3)
        assert stats.recompute_steps == 0
        assert stats.writes == 3

    @pytest.mark.parametrize("n,m", [(20, 4), (10, 2), (37, 5), (64, 7)])
    def test_replay_count_equals_dp(self, n, m):
        stats = sched.schedule_stats(sched.generate_schedule(n, m), n, m)
        assert stats.recompute_steps == sched.recompute_count(n, m)

    def test_stats_match_closed_counts_on_grid(self):
        for n in range(1, 61):
            for m in range(1, 11):
                acts = sched.generate_schedule(n, m)
                assert sched.schedule_stats(acts, n, m) == sched.schedule_counts(n, m)

    @given(n=st.integers(1, 90), m=st.integers(1, 12))
    @settings(max_examples=60, deadline=None)
    def test_generated_streams_validate(self, n, m):
        stats = sched.schedule_stats(sched.generate_schedule(n, m), n, m)
        assert stats.peak_slots <= m
        assert stats.recompute_steps == sched.recompute_count(n, m)


class TestValidation:
    def test_restore_before_store_rejected(self):
        bad = [sched.Restore(slot=0, state=0), sched.AdjointStep(step=0)]
        with pytest.raises(ScheduleValidationError) as err:
            sched.schedule_stats(bad, 1, 1)
        assert err.value.index == 0

    def test_adjoint_out_of_order_rejected(self):
        acts = sched.generate_schedule(2, 2)
        swapped = [a for a in acts]
        ai = [i for i, a in enumerate(swapped) if isinstance(a, sched.AdjointStep)]
        swapped[ai[0]], swapped[ai[1]] = swapped[ai[1]], swapped[ai[0]]
        with pytest.raises(ScheduleValidationError):
            sched.schedule_stats(swapped, 2, 2)

    def test_too_many_slots_rejected(self):
        acts = sched.generate_schedule(4, 2)
        with pytest.raises(ScheduleValidationError):
            sched.schedule_stats(acts, 4, 1)

    def test_truncated_stream_rejected(self):
        acts = sched.generate_schedule(5, 2)[:-4]
        with pytest.raises(ScheduleValidationError):
            sched.schedule_stats(acts, 5, 2)

    def test_adjoint_without_capture_rejected(self):
        bad = [
            sched.Store(slot=0, state=0),
            sched.AdjointStep(step=0),
            sched.Discard(slot=0),
        ]
        with pytest.raises(ScheduleValidationError) as err:
            sched.schedule_stats(bad, 1, 1)
        assert err.value.index == 1


GOLDEN_5_2 = """\
STORE slot=0 state=0
ADVANCE from=0 to=2
STORE slot=1 state=2
ADVANCE from=2 to=4
CAPTURE step=4
ADJOINT step=4
RESTORE slot=1 state=2
ADVANCE from=2 to=3
CAPTURE step=3
ADJOINT step=3
RESTORE slot=1 state=2
CAPTURE step=2
ADJOINT step=2
DISCARD slot=1
RESTORE slot=0 state=0
ADVANCE from=0 to=1
STORE slot=1 state=1
CAPTURE step=1
ADJOINT step=1
DISCARD slot=1
RESTORE slot=0 state=0
ADJOINT step=0
DISCARD slot=0
"""


class TestTextForm:
    def test_golden_schedule(self):
        assert sched.format_schedule(sched.generate_schedule(5, 2)) == GOLDEN_5_2

    @given(n=st.integers(1, 40), m=st.integers(1, 8))
    @settings(max_examples=40, deadline=None)
    def test_round_trip(self, n, m):
        acts = sched.generate_schedule(n, m)
        assert sched.parse_schedule(sched.format_schedule(acts)) == acts

    def test_bad_line_rejected(self):
        with pytest.raises(InvalidArgumentError):
            sched.parse_action("WIBBLE slot=1")
        with pytest.raises(InvalidArgumentError):
            sched.parse_action("STORE slot=1")
