import math

import numpy as np
import pytest

from floquet_thermo.baths import eval_rate, make_flat_bath, make_ohmic_bath, make_tabulated_bath


def baths():
    return [make_flat_bath("f", 0.8, 0.3), make_ohmic_bath("o", 1.7, 0.5, 4.0),
            make_tabulated_bath("t", 1.1, [0.0, 1.0, 3.0], [0.1, 0.4, 0.2])]


def test_flat_values():
    b = make_flat_bath("a", 1.0, 1.0)
    assert eval_rate(b, 2.0) == 1.0
    assert eval_rate(b, -2.0) == pytest.approx(math.exp(-2.0), rel=1e-15)
    assert eval_rate(b, -2.0) == pytest.approx(0.13534, abs=1e-5)
    assert eval_rate(make_flat_bath("a", 1.0, 0.1), 5.0) == 0.1


def test_ohmic_values():
    b = make_ohmic_bath("a", 1.0, 1.0, 10.0)
    assert eval_rate(b, 1.0) == pytest.approx(math.exp(-0.1), rel=1e-15)
    assert eval_rate(b, 1.0) == pytest.approx(0.90484, abs=1e-5)
    assert eval_rate(make_ohmic_bath("a", 2.0, 1.0, 3.0), 0.0) == 0.0


def test_continuity_at_zero():
    for b in baths():
        assert eval_rate(b, 0.0) == pytest.approx(eval_rate(b, -1e-12), abs=1e-11)


@pytest.mark.parametrize("w", [0.5, 1.0, 3.0])
def test_detailed_balance_ratio(w):
    for b in baths()[:2]:
        assert eval_rate(b, w) / eval_rate(b, -w) == pytest.approx(math.exp(w / b.temperature),
                                                                   rel=1e-12)


def test_non_negative_on_dense_grid():
    for b in baths():
        assert min(eval_rate(b, w) for w in np.linspace(-10, 10, 401)) >= 0


def test_tabulated_clamps_below_grid():
    b = make_tabulated_bath("t", 1.0, [0.5, 2.0], [1.0, 2.0])
    assert eval_rate(b, 0.2) == 0.0
    assert eval_rate(b, 1.25) == pytest.approx(1.5)


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), -float("inf")])
def test_non_finite_frequency(bad):
    with pytest.raises(ValueError):
        eval_rate(make_flat_bath("a", 1.0, 1.0), bad)


def test_invalid_parameters():
    with pytest.raises(ValueError, match="'cold'"):
        make_flat_bath("cold", 0.0, 1.0)
    with pytest.raises(ValueError):
        make_flat_bath("a", 1.0, -1.0)
    with pytest.raises(ValueError):
        make_ohmic_bath("a", 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        make_tabulated_bath("a", 1.0, [1.0, 0.5], [1.0, 1.0])
