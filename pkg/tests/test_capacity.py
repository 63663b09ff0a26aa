import math

import numpy as np
import pytest

from perron_lab import oracles
from perron_lab.capacity import (Annulus, Degenerate, NotOnBoundary, Verdict, classify, condenser_capacity,
                                 condenser_solve, wiener_sum)
from perron_lab.region import CantorBar, Disk, Empty, Point, Rect


def test_disk_in_disk():
    cap = condenser_capacity(Disk((0, 0), 0.25), Annulus((0, 0), 0.25, 1.0), 1 / 256)
    assert cap == pytest.approx(oracles.annulus_capacity(0.25, 1.0), rel=0.03)


def test_point_capacity_tends_to_zero():
    shell = Annulus((0, 0), 0.1, 1.0)
    assert condenser_capacity(Point((0, 0)), shell, 1 / 32) == 0.0
    caps = [condenser_capacity(Point((0, 0)), shell, 1 / n, drop_polar=False) for n in (16, 64, 256)]
    assert caps[0] > caps[1] > caps[2] > 0
    # a four-cell hole of size h: capacity is comparable to 2 pi / ln(1 / h)
    assert caps[2] == pytest.approx(2 * math.pi / math.log(256), rel=0.35)


def test_empty_set_has_zero_capacity():
    res = condenser_solve(Empty(), Annulus((0, 0), 0.5, 1.0), 1 / 32)
    assert res.value == 0.0 and not np.any(res.potential)


def test_monotone_in_the_compact():
    shell = Annulus((0, 0), 0.5, 1.0)
    small = condenser_capacity(Disk((0, 0), 0.2), shell, 1 / 64)
    mid = condenser_capacity(Disk((0, 0), 0.2) | Rect((0, -0.05), (0.4, 0.05)), shell, 1 / 64)
    big = condenser_capacity(Disk((0, 0), 0.45), shell, 1 / 64)
    assert small <= mid + 1e-6 <= big + 2e-6


def test_cantor_bar_capacities_nonincreasing_in_generation():
    shell = Annulus((0, 0), 1.0, 2.0)
    caps = [condenser_capacity(CantorBar(k, -1, 1), shell, 1 / 54) for k in range(3)]
    assert caps[0] >= caps[1] - 1e-6 >= caps[2] - 2e-6
    assert caps[2] > 0.5 * caps[0]


def test_scaling_covariance():
    a = condenser_capacity(Disk((0, 0), 0.3), Annulus((0, 0), 0.3, 1.0), 1 / 128)
    b = condenser_capacity(Disk((0, 0), 0.075), Annulus((0, 0), 0.075, 0.25), 1 / 512)
    assert b == pytest.approx(a, rel=0.05)
    c = condenser_capacity(Rect((-0.2, -0.1), (0.2, 0.1)), Annulus((0, 0), 0.3, 1.0), 1 / 128)
    d = condenser_capacity(Rect((-0.1, -0.05), (0.1, 0.05)), Annulus((0, 0), 0.15, 0.5), 1 / 256)
    assert d == pytest.approx(c, rel=0.05)


def test_guards():
    with pytest.raises(Degenerate):
        condenser_capacity(Disk((0, 0), 1.0), Annulus((0, 0), 0.9, 1.0), 1 / 64)
    with pytest.raises(ValueError):
        condenser_capacity(Disk((0, 0), 0.25), Annulus((0, 0), 0.25, 0.3), 1 / 32)
    with pytest.raises(ValueError):
        Annulus((0, 0), 1.0, 0.5)
    with pytest.raises(NotOnBoundary):
        wiener_sum(Rect((0, 0), (1, 1)), (0.5, 0.5), 4)
    with pytest.raises(NotOnBoundary):
        wiener_sum(Rect((0, 0), (1, 1)), (3.0, 3.0), 4)


def test_classify_thresholds():
    assert classify(np.array([1.0, 1.0, 1.0, 1.0]), 1.0, 4) is Verdict.REGULAR
    assert classify(np.zeros(4), 0.0, 4) is Verdict.IRREGULAR
    assert classify(np.array([1.0] + [0.0] * 9), 0.0, 10) is Verdict.IRREGULAR
    assert classify(np.array([1.0, 0.0, 0.0, 0.0]), 0.0, 4) is Verdict.INCONCLUSIVE
    assert classify(np.array([1.0, 0.5, 0.05, 0.05]), 0.05, 4) is Verdict.INCONCLUSIVE


def test_corner_wiener_sum_is_linear():
    rep = wiener_sum(Rect((0, 0), (1, 1)), (0.0, 0.0), 6)
    caps = np.array([lv.cap for lv in rep.levels])
    assert np.allclose(caps, caps[0], rtol=1e-9)
    assert np.all(np.diff(rep.partial_sums) >= 0)
    assert rep.verdict is Verdict.REGULAR
    assert wiener_sum(Rect((0, 0), (1, 1)), (0.0, 0.0), 8).verdict is Verdict.REGULAR


def test_edge_point_is_regular_and_puncture_irregular():
    assert wiener_sum(Rect((0, 0), (1, 1)), (0.5, 0.0), 5).verdict is Verdict.REGULAR
    pd = Disk((0, 0), 1) - Point((0, 0))
    rep = wiener_sum(pd, (0.0, 0.0), 6)
    assert rep.verdict is Verdict.IRREGULAR and rep.partial_sums[-1] == 0.0
    assert wiener_sum(pd, (0.0, 0.0), 8).verdict is Verdict.IRREGULAR


def test_cantor_endpoint_is_regular():
    region = Disk((0, 0), 2) - CantorBar(4, -1, 1)
    rep = wiener_sum(region, (-1.0, 0.0), 5)
    caps = np.array([lv.cap for lv in rep.levels])
    assert caps.min() > 0.5 * caps.max()
    assert rep.verdict is Verdict.REGULAR


def test_wiener_rows_layout():
    rep = wiener_sum(Rect((0, 0), (1, 1)), (1.0, 1.0), 3)
    rows = rep.rows()
    assert [r[0] for r in rows] == [1, 2, 3]
    assert [r[1] for r in rows] == [0.5, 0.25, 0.125]
    assert rows[-1][3] == pytest.approx(sum(r[2] for r in rows))
