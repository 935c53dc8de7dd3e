import numpy as np
import pytest

from argreweight import (
    ReweightRule,
    WindowLayout,
    argument_reweighting,
    build_repetition_code,
    build_surface_code_phenomenological,
    decode_sliding_window,
    parse_dem,
)
from argreweight.decoders import BpOsdDecoder, MwpmDecoder
from argreweight.sampler import sample_batch, syndrome_of
from argreweight.windowing import SlidingWindowDecoder, window_slice


def test_layout_arithmetic():
    lay = WindowLayout(2, 2, 8)
    assert lay.num_windows == 4
    assert [lay.bounds(k)[0] for k in range(4)] == [0, 2, 4, 6]
    assert lay.bounds(1) == (2, 4, 6)
    assert lay.bounds(3) == (6, 8, 8)  # short final window, committed in full
    with pytest.raises(IndexError):
        lay.bounds(4)
    with pytest.raises(IndexError):
        lay.bounds(-1)


@pytest.mark.parametrize("args", [(0, 1, 4), (1, -1, 4), (1, 1, 0)])
def test_layout_invariants(args):
    with pytest.raises(ValueError):
        WindowLayout(*args)
    with pytest.raises(ValueError):
        WindowLayout(1, 1, 4, "everything")


def test_for_distance():
    assert WindowLayout.for_distance(3, 9) == WindowLayout(3, 3, 9)


def test_first_window_covers_whole_four_round_model():
    m = build_repetition_code(3, 4, 0.1, 0.1)
    w = window_slice(m, WindowLayout(2, 2, 4), 0)
    assert w.model.num_mechanisms == m.num_mechanisms
    assert w.mechanism_map.tolist() == list(range(m.num_mechanisms))
    assert w.commit_mask.sum() == sum(x.round < 2 for x in m.mechanisms)


def test_window_slice_maps_are_injective():
    m = build_repetition_code(5, 8, 0.05, 0.05)
    lay = WindowLayout(2, 2, 8)
    for k in range(lay.num_windows):
        w = window_slice(m, lay, k)
        assert len(set(w.mechanism_map.tolist())) == len(w.mechanism_map)
        assert len(set(w.detector_map.tolist())) == len(w.detector_map)
        start, _, end = lay.bounds(k)
        assert all(start <= m.mechanisms[q].round < end for q in w.mechanism_map)


def test_window_slice_rejects_short_layout():
    m = build_repetition_code(3, 4, 0.1, 0.1)
    with pytest.raises(ValueError):
        window_slice(m, WindowLayout(1, 0, 2), 0)


def test_single_window_matches_global():
    m = build_surface_code_phenomenological(3, 3, 0.05)
    lay = WindowLayout(3, 0, 3)
    rule = ReweightRule("ratio", 1.5)
    dec = BpOsdDecoder().fit(m)
    win = SlidingWindowDecoder(m, lay, BpOsdDecoder())
    _, syn, _ = sample_batch(m, 21, 0, 300)
    for s in syn:
        g = argument_reweighting(dec, m.priors, s, m.dense_observable_matrix, "3R-LEC", rule)
        w = win.decide(s, "3R-LEC", rule)
        assert g.accepted == w.accepted
        if g.accepted:
            np.testing.assert_array_equal(g.correction, w.correction)


def test_zero_syndrome_accepts_everywhere():
    m = build_repetition_code(3, 8, 0.05, 0.05)
    v = decode_sliding_window(m, WindowLayout(2, 2, 8), MwpmDecoder(), "3R-LEC", ReweightRule("ratio", 2.0),
                              np.zeros(m.num_detectors, np.uint8))
    assert v.accepted and not v.correction.any()
    assert v.rounds_used == 1


def test_measurement_error_two_windows():
    m = build_repetition_code(3, 4, 0.05, 0.05)
    q = next(i for i, x in enumerate(m.mechanisms) if x.round == 1 and x.detectors == (2, 4))
    e = np.zeros(m.num_mechanisms, np.uint8)
    e[q] = 1
    s = syndrome_of(m, e)
    lay = WindowLayout(2, 2, 4)
    assert lay.num_windows == 2
    win = SlidingWindowDecoder(m, lay, MwpmDecoder())
    global_c = MwpmDecoder().fit(m).decode(None, s)
    np.testing.assert_array_equal(win.decode(s), global_c)
    np.testing.assert_array_equal(global_c, e)
    v = win.decide(s, "3R-LEC", ReweightRule("ratio", 1.2))
    assert v.accepted
    np.testing.assert_array_equal(v.correction, e)


def test_committed_correction_reproduces_syndrome():
    m = build_repetition_code(5, 6, 0.04, 0.04)
    win = SlidingWindowDecoder(m, WindowLayout(2, 2, 6), BpOsdDecoder())
    rule = ReweightRule("ratio", 1.3)
    _, syn, _ = sample_batch(m, 2, 0, 300)
    for s in syn:
        np.testing.assert_array_equal(syndrome_of(m, win.decode(s)), s)
        v = win.decide(s, "2R-LEC", rule)
        if v.accepted:
            np.testing.assert_array_equal(syndrome_of(m, v.correction), s)


def test_scopes_agree_without_buffer_mechanisms():
    m = build_repetition_code(5, 6, 0.04, 0.04)
    lay_full = WindowLayout(2, 2, 6, "full_window")
    lay_commit = WindowLayout(2, 2, 6, "commit_only")
    full = SlidingWindowDecoder(m, lay_full, BpOsdDecoder())
    commit = SlidingWindowDecoder(m, lay_commit, BpOsdDecoder())
    rule = ReweightRule("ratio", 2.0)
    _, syn, _ = sample_batch(m, 8, 0, 400)
    checked = 0
    for s in syn:
        # replay the windows to see whether a first-round correction reached the buffer
        residual = s.copy()
        touches_buffer = False
        for w, dec in zip(full.windows, full.decoders):
            c = dec.decode(None, residual[w.detector_map])
            if (c.astype(bool) & ~w.commit_mask).any():
                touches_buffer = True
                break
            part = np.zeros(m.num_mechanisms, np.uint8)
            part[w.mechanism_map[c.astype(bool)]] = 1
            residual ^= syndrome_of(m, part)
        if touches_buffer:
            continue
        checked += 1
        # only the first round is reweighted under PEC and 2R-LEC; deeper
        # criteria also reweight later corrections, which may reach the buffer
        for crit in ("PEC", "2R-LEC"):
            a, b = full.decide(s, crit, rule), commit.decide(s, crit, rule)
            assert a.accepted == b.accepted
    assert checked > 100


def test_window_decoder_error_rejects_with_index():
    m = parse_dem("error(0.1) D0 D1\n# round: 1\nerror(0.1) D2")
    win = SlidingWindowDecoder(m, WindowLayout(1, 0, 2), BpOsdDecoder())
    # window 0 cannot explain D0 without D1
    v = win.decide(np.array([1, 0, 0], np.uint8), "2R-LEC", ReweightRule("ratio", 2.0))
    assert not v.accepted
    assert v.diagnostic.startswith("window")
