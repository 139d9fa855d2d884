import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from packetscatter.barrier import BarrierProfile, discretize, refractive_index, validate
from packetscatter.errors import EmptySamples, NonFiniteDensity, NonPositiveWidth, ZeroWaveVector


def test_profile_geometry(hole):
    assert len(hole) == 3
    assert hole.edges[0] == 0.0
    assert hole.length == pytest.approx(2 * 1.617078716677778 + 5.797866122407543)
    assert hole.q_at([-1.0, 0.0, 2.0, hole.length, 100.0]).tolist() == [0.0, 0.5, -0.3, 0.0, 0.0]


@pytest.mark.parametrize("bins, exc, index", [
    ([(0.1, 1.0), (0.2, 0.0)], NonPositiveWidth, 1),
    ([(0.1, -2.0)], NonPositiveWidth, 0),
    ([(0.1, 1.0), (0.2, 1.0), (float("nan"), 1.0)], NonFiniteDensity, 2),
    ([(float("inf"), 1.0)], NonFiniteDensity, 0),
])
def test_validate_names_bad_bin(bins, exc, index):
    with pytest.raises(exc) as info:
        BarrierProfile(tuple(bins))
    assert info.value.index == index


def test_validate_passthrough(hole):
    assert validate(hole) is hole


def test_refractive_index_branches():
    assert refractive_index(0.0, 1.0) == pytest.approx(1.0)
    assert refractive_index(0.5, 1.0) == pytest.approx(np.sqrt(0.5))
    n = refractive_index(2.0, 1.0)
    assert n.real == 0 and n.imag == pytest.approx(1.0)
    # negative density speeds the wave up
    assert refractive_index(-3.0, 1.0) == pytest.approx(2.0)
    with pytest.raises(ZeroWaveVector):
        refractive_index(0.1, 0.0)


def test_discretize_linear_ramp():
    # mean of q = x over [j, j+1] is j + 1/2
    prof = discretize([(0, 0), (4, 4)], 4)
    assert prof.q.tolist() == pytest.approx([0.5, 1.5, 2.5, 3.5])
    assert prof.widths.tolist() == pytest.approx([1.0] * 4)


def test_discretize_step_and_shift():
    # repeated x encodes a jump; samples start at x=10 and are shifted to 0
    prof = discretize([(10, 1), (11, 1), (11, 3), (12, 3)], 4)
    assert prof.q.tolist() == pytest.approx([1, 1, 3, 3])
    assert prof.edges[0] == 0.0 and prof.length == pytest.approx(2.0)


def test_discretize_errors():
    with pytest.raises(EmptySamples):
        discretize([], 3)
    with pytest.raises(EmptySamples):
        discretize([(1.0, 2.0), (1.0, 3.0)], 3)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 10), st.floats(-2, 2)), min_size=2, max_size=12),
       st.integers(1, 20))
def test_discretize_preserves_integral(samples, n_bins):
    xs = [s[0] for s in samples]
    if max(xs) - min(xs) < 1e-6:
        return
    prof = discretize(samples, n_bins)
    pts = np.array(sorted(samples, key=lambda s: s[0]))
    # integral of the interpolant is the trapezoid sum of the sorted samples
    ref = np.sum(0.5 * (pts[1:, 1] + pts[:-1, 1]) * np.diff(pts[:, 0]))
    assert np.sum(prof.q * prof.widths) == pytest.approx(ref, abs=1e-9)
