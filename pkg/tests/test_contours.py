import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from voscascade.contours import ContourMode, count_contours, is_high_noise

from oracles import external_count, hole_count, to_lists


def random_masks(max_side=16):
    shape = st.tuples(st.integers(1, max_side), st.integers(1, max_side))
    return shape.flatmap(lambda s: arrays(bool, s))


def scattered(n, size=16):
    m = np.zeros((size, size), bool)
    for k in range(n):
        m[(k // 4) * 4, (k % 4) * 4] = True
    return m


def square_with_hole_and_block():
    m = np.zeros((12, 14), bool)
    m[1:8, 1:8] = True
    m[3:6, 3:6] = False
    m[9:11, 10:12] = True
    return m


def test_empty():
    s = count_contours(np.zeros((5, 5), bool))
    assert (s.external_contours, s.hole_contours, s.total_contours) == (0, 0, 0)


def test_filled_square():
    m = np.zeros((9, 9), bool)
    m[2:7, 2:7] = True
    s = count_contours(m)
    assert (s.external_contours, s.hole_contours, s.total_contours) == (1, 0, 1)


def test_square_with_hole_and_block():
    m = square_with_hole_and_block()
    grid = to_lists(m)
    expected = (external_count(grid), hole_count(grid))
    assert expected == (2, 1)
    s = count_contours(m, object_id=4, frame_index=9)
    assert (s.external_contours, s.hole_contours, s.total_contours) == (2, 1, 3)
    assert (s.object_id, s.frame_index) == (4, 9)


def test_external_only_mode():
    s = count_contours(square_with_hole_and_block(), mode=ContourMode.EXTERNAL_ONLY)
    assert (s.external_contours, s.hole_contours, s.total_contours) == (2, 0, 2)
    assert count_contours(square_with_hole_and_block(), mode="external-only").total_contours == 2


def test_diagonal_pixels_are_one_component():
    m = np.eye(5, dtype=bool)
    assert count_contours(m).external_contours == 1


def test_diagonal_gap_is_not_a_hole():
    # The centre pixel touches the outside only diagonally: 4-connected background keeps it enclosed.
    m = np.array([[0, 1, 0],
                  [1, 0, 1],
                  [0, 1, 0]], bool)
    m = np.pad(m, 1)
    s = count_contours(m)
    assert (s.external_contours, s.hole_contours) == (1, 1)
    grid = to_lists(m)
    assert (external_count(grid), hole_count(grid)) == (1, 1)


def test_border_background_is_never_a_hole():
    m = np.ones((5, 5), bool)
    m[0, 2] = m[1, 2] = False
    assert count_contours(m).hole_contours == 0


@pytest.mark.parametrize("n, noisy", [(7, True), (6, False), (0, False)])
def test_high_noise_boundary(n, noisy):
    m = scattered(n)
    assert external_count(to_lists(m)) == n
    assert is_high_noise(m, 6) is noisy


def test_threshold_positive():
    with pytest.raises(ValueError):
        is_high_noise(scattered(3), 0)


@settings(max_examples=300)
@given(random_masks())
def test_matches_flood_fill(m):
    grid = to_lists(m)
    s = count_contours(m)
    assert s.external_contours == external_count(grid)
    assert s.hole_contours == hole_count(grid)
    assert s.total_contours == s.external_contours + s.hole_contours
    assert (s.total_contours == 0) == (not m.any())


@given(random_masks(10), st.integers(0, 4), st.integers(0, 4))
def test_translation_invariance(m, dy, dx):
    padded = np.pad(m, 1)
    moved = np.zeros((padded.shape[0] + dy, padded.shape[1] + dx), bool)
    moved[dy:, dx:] = padded
    a, b = count_contours(padded), count_contours(moved)
    assert (a.external_contours, a.hole_contours) == (b.external_contours, b.hole_contours)


@given(random_masks(10))
def test_isolated_pixel_adds_one_component(m):
    big = np.zeros((m.shape[0] + 3, m.shape[1] + 3), bool)
    big[:m.shape[0], :m.shape[1]] = m
    before = count_contours(big)
    big[-1, -1] = True
    after = count_contours(big)
    assert after.external_contours == before.external_contours + 1
    assert after.hole_contours == before.hole_contours
