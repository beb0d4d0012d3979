import numpy as np
import pytest
from hypothesis import given, strategies as st

from ddcoherence.sequences import (
    PulseSequence,
    SequenceError,
    SymmetricFiveTiming,
    custom,
    intervals,
    make,
    make_cpmg,
    make_echo,
    make_pdd,
    make_ramsey,
    make_symmetric5,
    make_udd,
)

FAMILIES = [make_udd, make_pdd, make_cpmg]


def test_udd_values():
    assert make_udd(1).fractions == (0.5,)
    np.testing.assert_allclose(make_udd(5).fractions, [0.0670, 0.25, 0.5, 0.75, 0.9330], atol=5e-5)
    np.testing.assert_allclose(intervals(make_udd(5))[:3], [0.0670, 0.1830, 0.25], atol=5e-5)
    np.testing.assert_allclose(intervals(make_udd(5)),
                               [0.0670, 0.1830, 0.25, 0.25, 0.1830, 0.0670], atol=5e-5)


def test_pdd_values():
    assert make_pdd(1).fractions == (0.5,)
    np.testing.assert_allclose(make_pdd(3).fractions, [0.25, 0.5, 0.75])
    np.testing.assert_allclose(intervals(make_pdd(5))[1:3], [1 / 6, 1 / 6])
    assert round(100 * intervals(make_pdd(5))[1], 1) == 16.7


def test_cpmg_values():
    assert make_cpmg(1).fractions == (0.5,)
    np.testing.assert_allclose(make_cpmg(2).fractions, [0.25, 0.75])
    np.testing.assert_allclose(intervals(make_cpmg(5))[:3], [0.1, 0.2, 0.2])


def test_ramsey_and_echo():
    np.testing.assert_array_equal(intervals(make_ramsey()), [1.0])
    np.testing.assert_array_equal(intervals(make_echo()), [0.5, 0.5])
    assert make("ramsey", 0).n_pulses == 0
    with pytest.raises(SequenceError):
        make("echo", 2)


def test_symmetric5():
    cp = make_symmetric5(SymmetricFiveTiming(0.1, 0.2, 0.2))
    np.testing.assert_allclose(cp.fractions, [0.1, 0.3, 0.5, 0.7, 0.9], atol=1e-15)
    np.testing.assert_allclose(cp.fractions, make_cpmg(5).fractions, atol=1e-15)
    udd = make_symmetric5(SymmetricFiveTiming(0.0670, 0.1830, 0.25))
    np.testing.assert_allclose(udd.fractions, make_udd(5).fractions, atol=5e-5)
    opt = make_symmetric5(SymmetricFiveTiming(0.112, 0.192, 0.196))
    assert opt.n_pulses == 5
    assert SymmetricFiveTiming.from_inner(0.192, 0.196).tau0_frac == pytest.approx(0.112)
    with pytest.raises(SequenceError):
        SymmetricFiveTiming(0.1, 0.2, 0.3)
    with pytest.raises(SequenceError):
        SymmetricFiveTiming.from_inner(0.3, 0.2)


@pytest.mark.parametrize("bad", [0, -1, 2.5])
def test_bad_pulse_number(bad):
    for ctor in FAMILIES:
        with pytest.raises(SequenceError):
            ctor(bad)


def test_custom_validation():
    with pytest.raises(SequenceError):
        custom([0.5, 0.4])
    with pytest.raises(SequenceError):
        custom([0.0, 0.5])
    with pytest.raises(SequenceError):
        custom([0.5, 1.0])
    assert custom([0.2, 0.7]).n_pulses == 2


@pytest.mark.parametrize("ctor", FAMILIES)
def test_family_invariants(ctor):
    for n in range(1, 31):
        seq = ctor(n)
        fr = np.array(seq.fractions)
        assert np.all(np.diff(fr) > 0) and fr[0] > 0 and fr[-1] < 1
        assert abs(intervals(seq).sum() - 1.0) <= 1e-12
        # mirror symmetry
        np.testing.assert_allclose(fr + fr[::-1], 1.0, atol=1e-12)


def test_families_coincide_for_one_pulse():
    assert make_udd(1).fractions == make_pdd(1).fractions == make_cpmg(1).fractions


def test_record_round_trip():
    for seq in [make_udd(4), make_pdd(3), make_cpmg(7), make_ramsey(), make_echo(), custom([0.1, 0.6])]:
        assert PulseSequence.from_record(seq.to_record()) == seq
    with pytest.raises(SequenceError):
        PulseSequence.from_record({"type": "udd", "n": 3, "fractions": [0.25, 0.5, 0.75]})


@given(st.lists(st.floats(0.001, 0.999), min_size=1, max_size=12, unique=True))
def test_intervals_sum_to_one(xs):
    xs = sorted(xs)
    if np.any(np.diff(xs) < 1e-9):
        return
    seq = custom(xs)
    assert abs(intervals(seq).sum() - 1.0) < 1e-12
    np.testing.assert_allclose(seq.reversed().reversed().fractions, seq.fractions, atol=1e-15)
