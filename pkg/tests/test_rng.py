import numpy as np
import pytest

from uwsim.rng import RngStream, rng_uniform


def test_replay_is_identical():
    a = RngStream(7, 3).uniform(500)
    b = RngStream(7, 3).uniform(500)
    assert np.array_equal(a, b)


def test_single_draws_match_block_draws():
    s = RngStream(11, 0)
    singles = [rng_uniform(s) for _ in range(9)]
    assert s.counter == 9
    assert np.array_equal(singles, RngStream(11, 0).uniform(9))


def test_streams_differ():
    a = RngStream(5, 0).uniform(100)
    b = RngStream(5, 1).uniform(100)
    assert np.all(a != b)


def test_start_counter_resumes_sequence():
    full = RngStream(2, 4).uniform(20)
    resumed = RngStream(2, 4, counter=13).uniform(7)
    assert np.array_equal(full[13:], resumed)


def test_independent_of_other_streams():
    ref = RngStream(9, 2).uniform(50)
    others = [RngStream(9, i) for i in range(5)]
    for o in others:
        o.uniform(37)
    assert np.array_equal(RngStream(9, 2).uniform(50), ref)


def test_substreams_differ():
    s = RngStream(1, 1)
    assert not np.array_equal(s.child(0).uniform(10), s.child(1).uniform(10))


def test_range_and_mean():
    u = RngStream(42, 0).uniform(1_000_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.002


def test_negative_counter_rejected():
    with pytest.raises(ValueError):
        RngStream(0, 0, counter=-1)
