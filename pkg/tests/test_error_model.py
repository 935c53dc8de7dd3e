import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from argreweight import (
    DetectorErrorModel,
    ErrorMechanism,
    build_repetition_code,
    build_surface_code_phenomenological,
    canonicalize,
    check_matrices,
    format_dem,
    parse_dem,
)
from argreweight.error_model import DemSyntaxError
from argreweight.sampler import logical_of, syndrome_of


def test_parse_single_error():
    m = parse_dem("error(0.1) D0 L0")
    assert m.num_mechanisms == 1
    assert m.mechanisms[0] == ErrorMechanism(0.1, (0,), (0,))
    assert (m.num_detectors, m.num_observables) == (1, 1)


def test_parse_empty():
    m = parse_dem("")
    assert (m.num_mechanisms, m.num_detectors, m.num_observables) == (0, 0, 0)


def test_parse_probability_out_of_range():
    with pytest.raises(DemSyntaxError) as info:
        parse_dem("error(1.5) D0")
    assert info.value.line == 1


@pytest.mark.parametrize(
    "text, line",
    [
        ("error(0.1) D0\nrepeat 3 {", 2),
        ("error(0.1) D0 ^ D1", 1),
        ("\n\nerror(0.1) D-1", 3),
        ("error(0.1) X0", 1),
        ("error(0.1)", 1),
        ("detector_count x", 1),
        ("error(0.1) D0\ndetector(1, 2) D0", 2),
    ],
)
def test_parse_errors_report_line(text, line):
    with pytest.raises(DemSyntaxError) as info:
        parse_dem(text)
    assert info.value.line == line


def test_parse_column_points_at_bad_target():
    with pytest.raises(DemSyntaxError) as info:
        parse_dem("error(0.1) D0 Q3")
    assert info.value.column == 15


def test_parse_declared_counts_and_comments():
    text = "# header\ndetector_count 5\nobservable_count 2\n\n  error(0.25) D3 L1  # trailing\n"
    with pytest.raises(DemSyntaxError):
        parse_dem(text)  # inline trailing comments are not part of the grammar
    m = parse_dem("# header\ndetector_count 5\nobservable_count 2\n\n  error(0.25) D3 L1  \n")
    assert (m.num_detectors, m.num_observables) == (5, 2)
    assert m.mechanisms[0].detectors == (3,)


def test_declared_count_too_small():
    with pytest.raises(DemSyntaxError):
        parse_dem("detector_count 1\nerror(0.1) D4")


def test_targets_sorted_and_cancelled():
    m = parse_dem("error(0.2) D4 D1 D4 D2 L0")
    assert m.mechanisms[0].detectors == (1, 2)


def test_round_pragma():
    m = parse_dem("error(0.1) D0\n# round: 2\nerror(0.1) D1")
    assert [x.round for x in m.mechanisms] == [0, 2]


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(probability=0.0, detectors=(0,)),
        dict(probability=1.0, detectors=(0,)),
        dict(probability=0.1, detectors=(0, 0)),
        dict(probability=0.1, detectors=(-1,)),
        dict(probability=0.1),
    ],
)
def test_mechanism_invariants(kwargs):
    with pytest.raises(ValueError):
        ErrorMechanism(**kwargs)


def test_mechanism_observable_only_allowed():
    assert ErrorMechanism(0.1, (), (0,)).detectors == ()


def test_model_index_bounds():
    with pytest.raises(ValueError):
        DetectorErrorModel((ErrorMechanism(0.1, (3,)),), 2, 0)


def test_canonicalize_examples():
    m = canonicalize(parse_dem("error(0.1) D0\nerror(0.1) D0"))
    assert m.num_mechanisms == 1
    assert m.mechanisms[0].probability == pytest.approx(0.18, abs=1e-15)
    m = canonicalize(parse_dem("error(0.1) D0\nerror(0.1) D1"))
    assert m.num_mechanisms == 2
    m = canonicalize(parse_dem("error(0.5) D0\nerror(0.5) D0"))
    assert m.mechanisms[0].probability == 0.5


def test_canonicalize_keeps_first_occurrence_order():
    m = canonicalize(parse_dem("error(0.1) D1\nerror(0.2) D0\nerror(0.3) D1"))
    assert [x.detectors for x in m.mechanisms] == [(1,), (0,)]


def test_repetition_d3_single_round():
    m = build_repetition_code(3, 1, 0.1, 0)
    assert (m.num_mechanisms, m.num_detectors, m.num_observables) == (3, 2, 1)
    assert m.mechanisms[0] == ErrorMechanism(0.1, (0,), (0,), 0)
    assert m.mechanisms[1] == ErrorMechanism(0.1, (0, 1), (), 0)
    assert m.mechanisms[2].detectors == (1,)
    h, lo = check_matrices(m)
    np.testing.assert_array_equal(h.toarray(), [[1, 1, 0], [0, 1, 1]])
    # one representative of the logical class; see the ledger for the choice
    np.testing.assert_array_equal(lo.toarray(), [[1, 0, 0]])


def test_repetition_two_rounds():
    m = build_repetition_code(3, 2, 0.1, 0.1)
    data = [x for x in m.mechanisms if len(x.detectors) != 2 or x.detectors[1] - x.detectors[0] != 2]
    meas = [x for x in m.mechanisms if x not in data]
    assert len(data) == 6 and len(meas) == 2
    assert ErrorMechanism(0.1, (0, 2), (), 0) in meas
    assert {x.round for x in m.mechanisms} == {0, 1}


@pytest.mark.parametrize("args", [(2, 1, 0.1, 0.1), (1, 1, 0.1, 0.1), (3, 0, 0.1, 0.1), (3, 1, 0.6, 0.1)])
def test_repetition_bad_args(args):
    with pytest.raises(ValueError):
        build_repetition_code(*args)


def test_repetition_logical_operator():
    for d in (3, 5, 7):
        m = build_repetition_code(d, 1, 0.1, 0)
        ones = np.ones(d, dtype=np.uint8)
        assert not syndrome_of(m, ones).any()
        assert logical_of(m, ones).tolist() == [1]


def test_surface_d3():
    m = build_surface_code_phenomenological(3, 1, 0.1)
    assert (m.num_detectors, m.num_observables) == (4, 1)
    assert all(len(x.detectors) <= 2 for x in m.mechanisms)
    assert sum(len(x.detectors) == 1 for x in m.mechanisms) >= 2
    with pytest.raises(ValueError):
        build_surface_code_phenomenological(1, 1, 0.1)


def test_surface_distance_is_three():
    """Smallest undetectable logical error of the d=3 patch has weight 3."""
    m = build_surface_code_phenomenological(3, 1, 0.1)
    n = m.num_mechanisms
    best = None
    for e in itertools.product((0, 1), repeat=n):
        e = np.array(e, dtype=np.uint8)
        if not syndrome_of(m, e).any() and logical_of(m, e).any():
            w = int(e.sum())
            best = w if best is None else min(best, w)
    assert best == 3


def test_surface_multi_round_is_matchable():
    m = build_surface_code_phenomenological(5, 3, 0.01)
    assert m.num_detectors == 12 * 3
    assert all(1 <= len(x.detectors) <= 2 for x in m.mechanisms)


def test_check_matrices_edge_cases():
    h, lo = check_matrices(parse_dem(""))
    assert h.shape == (0, 0) and lo.shape == (0, 0)
    h, lo = check_matrices(parse_dem("error(0.2) D0 L0"))
    assert h.toarray().tolist() == [[1]] and lo.toarray().tolist() == [[1]]


def test_detector_rounds():
    m = build_repetition_code(3, 3, 0.1, 0.1)
    assert m.detector_rounds.tolist() == [0, 0, 1, 1, 2, 2]
    assert m.num_rounds == 3


def test_syndrome_length_mismatch():
    m = build_repetition_code(3, 1, 0.1, 0)
    with pytest.raises(ValueError):
        syndrome_of(m, [1, 0])
    with pytest.raises(ValueError):
        logical_of(m, [1, 0, 2])


@st.composite
def models(draw):
    n_det = draw(st.integers(0, 6))
    n_obs = draw(st.integers(0, 2))
    mechs = []
    for _ in range(draw(st.integers(0, 8))):
        dets = draw(st.sets(st.integers(0, n_det - 1), max_size=3)) if n_det else set()
        obs = draw(st.sets(st.integers(0, n_obs - 1), max_size=1)) if n_obs else set()
        if not dets and not obs:
            continue
        p = draw(st.floats(1e-9, 0.999, allow_nan=False))
        mechs.append(ErrorMechanism(p, tuple(dets), tuple(obs), draw(st.integers(0, 3))))
    return DetectorErrorModel(tuple(mechs), n_det, n_obs)


@settings(max_examples=150, deadline=None)
@given(models())
def test_format_parse_round_trip(m):
    assert parse_dem(format_dem(m)) == m


@settings(max_examples=150, deadline=None)
@given(models())
def test_canonicalize_idempotent(m):
    c = canonicalize(m)
    assert canonicalize(c) == c
    sigs = [x.signature for x in c.mechanisms]
    assert len(sigs) == len(set(sigs))


@settings(max_examples=100, deadline=None)
@given(models(), st.data())
def test_gf2_linearity(m, data):
    n = m.num_mechanisms
    bits = st.lists(st.integers(0, 1), min_size=n, max_size=n)
    a = np.array(data.draw(bits), dtype=np.uint8)
    b = np.array(data.draw(bits), dtype=np.uint8)
    np.testing.assert_array_equal(syndrome_of(m, a ^ b), syndrome_of(m, a) ^ syndrome_of(m, b))
    np.testing.assert_array_equal(logical_of(m, a ^ b), logical_of(m, a) ^ logical_of(m, b))
