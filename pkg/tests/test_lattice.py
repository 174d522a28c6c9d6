import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torus_ergodic.lattice import (
    ModeBox,
    count_states,
    eigenvalue,
    enumerate_energy_shell,
    iter_modes,
    resonance_defect,
    resonance_mask,
    resonance_set,
    shell_radius,
)


def brute_count(E, N, R=30):
    return sum(1 for n in itertools.product(range(-R, R + 1), repeat=N) if sum(c * c for c in n) / 2 <= E)


def brute_resonance(k, N, R):
    k2 = sum(c * c for c in k)
    return [p for p in itertools.product(range(-R, R + 1), repeat=N)
            if sum(a * b for a, b in zip(k, p)) + k2 / 2 == 0]


@pytest.mark.parametrize("n, mu", [((0,), 0), ((1, 1), 1), ((-2,), 2)])
def test_eigenvalue(n, mu):
    assert eigenvalue(n) == mu


# (1, 2): the corners (+-1, +-1) have mu = 1 <= 1, so the count is 9
@pytest.mark.parametrize("E, N, expected", [(0, 1, 1), (2, 1, 5), (1, 2, 9)])
def test_count_states_examples(E, N, expected):
    assert count_states(E, N) == expected
    assert brute_count(E, N) == expected


@pytest.mark.parametrize("N", [1, 2, 3])
def test_count_states_matches_brute_force(N):
    for E in [0, 0.4, 0.5, 1, 1.5, 7.25, 12, 40]:
        assert count_states(E, N) == brute_count(E, N, R=9)


def test_resonance_set_examples():
    assert resonance_set(2, ModeBox(1, 5)) == [(-1,)]
    assert resonance_set(3, ModeBox(1, 10)) == []
    assert resonance_set((1, 1), ModeBox(2, 2)) == [(-2, 1), (-1, 0), (0, -1), (1, -2)]
    assert resonance_set((1, 1), ModeBox(2, 2)) == brute_resonance((1, 1), 2, 2)


def test_resonance_set_zero_frequency_is_whole_box():
    box = ModeBox(2, 3)
    assert resonance_set((0, 0), box) == list(box)


@pytest.mark.parametrize("N, R", [(1, 7), (2, 4)])
def test_resonance_set_brute_force_all_k(N, R):
    box = ModeBox(N, R)
    for k in iter_modes(N, 4):
        got = resonance_set(k, box)
        assert got == brute_resonance(k, N, R)
        if sum(c * c for c in k) % 2:
            assert got == []


def test_resonance_mask_agrees_with_set():
    fb, mb = ModeBox(2, 3), ModeBox(2, 5)
    mask = resonance_mask(fb, mb)
    for i, k in enumerate(fb):
        assert [tuple(p) for p in mb.modes[mask[i]]] == resonance_set(k, mb)


def test_resonance_symmetry_in_k():
    # k and -k have mirrored resonant sets: p solves for k iff -p solves for -k
    box = ModeBox(2, 5)
    for k in iter_modes(2, 3):
        neg = tuple(-c for c in k)
        assert sorted(tuple(-c for c in p) for p in resonance_set(k, box)) == sorted(resonance_set(neg, box))


def test_nonresonant_gap():
    fb, mb = ModeBox(2, 4), ModeBox(2, 6)
    d = resonance_defect(fb.modes[:, None, :], mb.modes[None, :, :])
    # 2(k.p + |k|^2/2) is an integer, so non-resonant |k.p + |k|^2/2| >= 1/2
    assert np.all((d == 0) | (np.abs(d) >= 1))


@pytest.mark.parametrize("E, expected", [(0, [(0,)]), (0.4, [(0,)]), (0.5, [(-1,), (0,), (1,)])])
def test_enumerate_energy_shell_examples(E, expected):
    assert enumerate_energy_shell(E, 1) == expected


@settings(max_examples=100, deadline=None)
@given(E=st.floats(0, 80, allow_nan=False), N=st.integers(1, 2))
def test_shell_length_equals_count(E, N):
    shell = enumerate_energy_shell(E, N)
    assert len(shell) == count_states(E, N)
    assert shell == sorted(shell)
    assert all(eigenvalue(n) <= E for n in shell)


@settings(max_examples=100, deadline=None)
@given(E1=st.floats(0, 100), E2=st.floats(0, 100), N=st.integers(1, 3))
def test_count_states_monotone(E1, E2, N):
    lo, hi = sorted((E1, E2))
    assert count_states(lo, N) <= count_states(hi, N)


def test_box_enumeration_and_index():
    box = ModeBox(2, 2)
    assert box.size == 25 == len(list(box))
    assert list(box) == list(iter_modes(2, 2))
    for i, n in enumerate(box):
        assert box.index(n) == i
    assert box.indices(np.array([[3, 0]]))[0] == -1
    with pytest.raises(KeyError):
        box.index((3, 0))


def test_box_rejects_bad_sizes():
    with pytest.raises(ValueError):
        ModeBox(0, 1)
    with pytest.raises(ValueError):
        ModeBox(1, -1)


def test_shell_radius():
    assert shell_radius(300) == 24
    assert shell_radius(0.49) == 0
    assert shell_radius(0.5) == 1
    with pytest.raises(ValueError):
        shell_radius(-1)
