import dataclasses

import numpy as np
import pytest

from delaycir.errors import DelayMisaligned, NonDivisibleFactor
from delaycir.experiments import (
    BLOCK_SIZE, convergence_study, default_h_list, fit_slope, moment_study, positivity_census,
    simulate_ensemble,
)
from delaycir.driver import GridSpec
from delaycir.model import EXAMPLE_1, InitialHistory
from delaycir.schemes import ControlConfig

CTRL1 = ControlConfig(10.0, 1.0)


def test_default_h_list():
    assert default_h_list() == [2.0 ** -10, 2.0 ** -8, 2.0 ** -6, 2.0 ** -4, 2.0 ** -2]


def test_fit_slope_recovers_power_law():
    h = np.array([0.5, 0.25, 0.125])
    assert fit_slope(h, 3 * h ** 1.5) == pytest.approx(1.5)
    assert fit_slope(np.append(h, 0.01), np.append(3 * h ** 1.5, 0.0)) == pytest.approx(1.5)


def test_reference_entry_has_zero_error():
    rep = convergence_study(EXAMPLE_1, CTRL1, "bim", 1.0, 2.0 ** -7, [2.0 ** -7, 2.0 ** -5],
                            40, master_seed=3)
    assert rep.strong_error[0] == 0.0 and rep.std_error[0] == 0.0
    assert rep.strong_error[1] > 0


def test_deterministic_model_errors_shrink():
    p = dataclasses.replace(EXAMPLE_1, sigma=0.0, delta=0.0, beta=0.0)
    ctrl = ControlConfig(p.lam, 0.0)
    rep = convergence_study(p, ctrl, "bim", 1.0, 2.0 ** -11, default_h_list(), 3, master_seed=0)
    # noise-free: every path has the same gap, so the standard error vanishes
    assert np.all(rep.std_error == 0)
    assert np.all(np.diff(rep.strong_error) > 0)
    # squared gap of the pure discretisation against the closed form
    for h, e in zip(rep.h_list, rep.strong_error):
        exact = lambda k: p.mu + (1 - p.mu) * (1 + p.lam * k) ** (-round(1 / k))
        assert e == pytest.approx((exact(2.0 ** -11) - exact(h)) ** 2, rel=1e-9)


def test_convergence_input_checks():
    with pytest.raises(NonDivisibleFactor):
        convergence_study(EXAMPLE_1, CTRL1, "bim", 1.0, 0.01, [0.025], 4, 0)
    with pytest.raises(DelayMisaligned):
        convergence_study(EXAMPLE_1, CTRL1, "bim", 4.0, 0.125, [0.125 * 16], 4, 0)


def test_worker_count_does_not_change_results():
    n = BLOCK_SIZE * 2 + 5
    a = convergence_study(EXAMPLE_1, CTRL1, "bim", 1.0, 2.0 ** -6, [2.0 ** -4], n, 8, workers=1)
    b = convergence_study(EXAMPLE_1, CTRL1, "bim", 1.0, 2.0 ** -6, [2.0 ** -4], n, 8, workers=3)
    assert a.strong_error.tobytes() == b.strong_error.tobytes()
    g = GridSpec.from_step(2.0, 0.1, 1.0)
    p1 = simulate_ensemble("euler", EXAMPLE_1, None, g, n, 2, workers=1)
    p4 = simulate_ensemble("euler", EXAMPLE_1, None, g, n, 2, workers=4)
    assert all(x.values.tobytes() == y.values.tobytes() for x, y in zip(p1, p4))


def test_census_deterministic_model_has_no_events():
    p = dataclasses.replace(EXAMPLE_1, sigma=0.0, delta=0.0)
    c = positivity_census(p, ControlConfig(p.lam, 0.0), ["bim", "euler"], 0.1, 5.0, 20, 0)
    for scheme in ("bim", "euler"):
        assert c[scheme].negativity_events == 0 and c[scheme].paths_with_negative_value == 0


def test_census_bim_clean_euler_negative():
    c = positivity_census(EXAMPLE_1, CTRL1, ["bim"], 0.5, 10.0, 10, 0)
    assert c["bim"].paths_with_negative_value == 0 and c["bim"].clamp_events == 0
    c = positivity_census(EXAMPLE_1, CTRL1, ["euler"], 0.01, 10.0, 10, 0)
    assert c["euler"].paths_with_negative_value >= 1


def test_moment_study_constant_ensemble():
    p = dataclasses.replace(EXAMPLE_1, sigma=0.0, delta=0.0, beta=0.0)
    st = moment_study(p, ControlConfig(p.lam, 0.0), "bim", 0.1, 3.0, 4, 0,
                      history=InitialHistory.constant(p.mu))
    assert np.all(st.report.mean == p.mu)
    assert st.bound_applicable
    assert np.all(st.bound.values >= st.report.mean)


def test_moment_study_flags_inapplicable_bound():
    from delaycir.model import EXAMPLE_2
    st = moment_study(EXAMPLE_2, ControlConfig(200.0, 5.0), "bim", 0.1, 2.0, 10, 0)
    assert not st.bound_applicable
