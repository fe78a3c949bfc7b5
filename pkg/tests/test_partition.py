import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from o2kms.conformal import conformal_table
from o2kms.critical import harmonic
from o2kms.errors import CapExceeded, NoAtomicMeasure
from o2kms.partition import (atomic_measure, partition_bruteforce, partition_sequence,
                             sandwich_check, total_mass)
from o2kms.shift import TailPoint, birkhoff_sum


def literal_Z(beta, n):
    """Z_n from scratch: scan {0,1}^n, keep stems of level n, sum Boltzmann factors."""
    if n == 0:
        return 1.0
    total = []
    for bits in itertools.product("01", repeat=n):
        stem = "".join(bits)
        if stem[-1] != "0":
            continue
        s = 0.0
        for j in range(n):
            s += 1.0 / (stem[j:].index("0") + 1)
        total.append(math.exp(-beta * s))
    return math.fsum(total)


def test_examples():
    assert partition_sequence(2.0, 0).Z.tolist() == [1.0]
    assert partition_bruteforce(2.0, 0) == 1.0
    assert partition_bruteforce(2.0, 2) == pytest.approx(math.exp(-4) + math.exp(-3), rel=1e-15)
    Z = partition_sequence(2.0, 2).Z
    assert Z[1] == pytest.approx(math.exp(-2.0))
    assert Z[2] == pytest.approx(math.exp(-4.0) + math.exp(-3.0))


@pytest.mark.parametrize("n", range(0, 11))
def test_bruteforce_matches_literal(n):
    assert partition_bruteforce(1.3, n) == pytest.approx(literal_Z(1.3, n), rel=1e-14)


@pytest.mark.parametrize("beta", [1.0, 1.5, 2.0, 4.0])
def test_recursion_matches_bruteforce(beta):
    Z = partition_sequence(beta, 16).Z
    for n in range(17):
        assert abs(Z[n] - partition_bruteforce(beta, n)) <= 1e-12 * Z[n]


def test_recursion_residual_and_positivity():
    beta = 1.7
    table = partition_sequence(beta, 300)
    Z = table.Z
    assert Z[0] == 1.0 and np.all(Z >= 0)
    w = [math.exp(-beta * harmonic(k)) for k in range(1, 301)]
    for n in range(1, 301):
        rhs = math.fsum(w[k - 1] * Z[n - k] for k in range(1, n + 1))
        assert abs(Z[n] - rhs) <= 1e-12 * max(1.0, Z[n])
    np.testing.assert_allclose(table.partial_M, np.concatenate([[0], np.cumsum(Z[1:])]),
                               rtol=1e-13)


def test_caps():
    with pytest.raises(CapExceeded):
        partition_sequence(2.0, 100_001)
    with pytest.raises(CapExceeded):
        partition_bruteforce(2.0, 21)
    with pytest.raises(CapExceeded):
        atomic_measure(4.0, 21)


def test_csv_export():
    text = partition_sequence(3.0, 3).to_csv().splitlines()
    assert text[0] == "n,Z,partial_M"
    assert text[1] == "0,1.0,0.0"
    assert len(text) == 5


def test_sandwich_examples(beta0):
    beta = 2.0
    assert sandwich_check(beta, 20)
    assert sandwich_check(beta0 - 0.2, 20)
    assert sandwich_check(beta0 + 0.2, 20)
    # N = 1 by hand
    z1, z2 = math.exp(-beta), math.exp(-2 * beta) + math.exp(-1.5 * beta)
    assert z1 <= (1 + z1) * math.exp(-beta) <= z1 + z2
    assert sandwich_check(beta, 1)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 8.0), st.integers(1, 60))
def test_sandwich_property(beta, N):
    assert sandwich_check(beta, N)


def test_total_mass():
    est = total_mass(4.0)
    assert est.converged
    assert est.gap <= 1e-10 * est.value
    Z = partition_sequence(4.0, est.N).Z
    assert est.value == pytest.approx(math.fsum(Z[1:]), rel=1e-14)
    # prefix at 2000 already within the reported gap of the estimate
    head = math.fsum(partition_sequence(4.0, 2000).Z[1:])
    assert 0 < est.value - head < 1e-8
    div = total_mass(1.0)
    assert not div.converged
    assert div.value > 1e3


def test_total_mass_vanishes_at_large_beta():
    values = [total_mass(b).value for b in (10.0, 20.0, 40.0)]
    assert values[0] > values[1] > values[2]
    assert values[2] < 1e-16


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 6.0), st.floats(0.01, 2.0))
def test_Z_nonincreasing_in_beta(beta, step):
    a = partition_sequence(beta, 40).Z
    b = partition_sequence(beta + step, 40).Z
    assert np.all(b <= a * (1 + 1e-13))


def test_atomic_measure_examples():
    m = atomic_measure(4.0, 12)
    Z = partition_sequence(4.0, 12)
    assert m.partial_M == pytest.approx(Z.partial_M[12], rel=1e-14)
    assert m.atom_at_x == pytest.approx(1 / (1 + Z.partial_M[12]), rel=1e-14)
    assert m.weight(TailPoint.from_string("0")) == pytest.approx(
        math.exp(-4.0) / (1 + Z.partial_M[12]), rel=1e-14)
    assert m.weight(TailPoint.from_string("0" * 13)) == 0.0
    with pytest.raises(NoAtomicMeasure):
        atomic_measure(1.0, 8)
    with pytest.raises(NoAtomicMeasure):
        atomic_measure(0.5, 8)


def test_atomic_measure_weights():
    m = atomic_measure(3.0, 9)
    atoms = list(m.atoms())
    assert len(atoms) == 2**9
    assert all(w > 0 for _, w in atoms)
    assert math.fsum(w for _, w in atoms) == pytest.approx(1.0, abs=1e-15)
    for y, w in atoms[:: 17]:
        expected = math.exp(-3.0 * birkhoff_sum(y, y.level)) / m.normalizer
        assert w == pytest.approx(expected, rel=1e-14)


def test_atomic_near_critical_refused(beta0):
    with pytest.raises(NoAtomicMeasure):
        atomic_measure(beta0 - 1e-3, 6)


def test_atomic_conformality():
    beta = 4.0
    m = atomic_measure(beta, 20)
    tol = m.tail_tolerance
    assert tol is not None and tol <= 1e-5
    for n in range(0, 6):
        for i in range(1 << n):
            w = format(i, f"0{n}b") if n else ""
            assert abs(m.cylinder_mass("0" + w) - math.exp(-beta) * m.cylinder_mass(w)) <= tol


def test_atomic_matches_conformal_table():
    beta = 4.0
    m = atomic_measure(beta, 20)
    table = conformal_table(beta, 6)
    worst = 0.0
    for n in range(7):
        for i, mass in enumerate(table.levels[n]):
            w = format(i, f"0{n}b") if n else ""
            worst = max(worst, abs(m.cylinder_mass(w) - mass))
    assert worst <= m.tail_tolerance


def test_atomic_json():
    obj = json.loads(atomic_measure(5.0, 3).to_json())
    assert set(obj["atoms"]) == {"", "0", "00", "10", "000", "010", "100", "110"}
    assert obj["level_cap"] == 3
