import math
import warnings

import numpy as np
import pytest
import scipy.integrate
import scipy.special
from hypothesis import given, settings, strategies as st

from floquet_thermo.baths import make_flat_bath, make_ohmic_bath
from floquet_thermo.dynamics import steady_state
from floquet_thermo.floquet import propagate, smooth_hamiltonian
from floquet_thermo.generators import build_static
from floquet_thermo.operators import SIGMA_X, SIGMA_Z, gibbs_state
from floquet_thermo.qubit import (
    ModulationProfile, QubitModel, averaged_rates, build_qubit_bundle, effective_temperature,
    periodic_hamiltonian, pq, pq_table, pulse_train_weight, single_harmonic_current, t_eff, xi,
    xi_table,
)
from floquet_thermo.thermo import steady_report


def pulse(om=1.5):
    return ModulationProfile(1.0, 2 * math.pi / om, "pulse_train")


def quiet_model(mod, baths, q_max=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return QubitModel(mod, tuple(baths), q_max)


def test_constant_modulation_weights():
    mod = ModulationProfile(1.0, 3.0)
    assert xi(mod, 0) == pytest.approx(1.0, abs=1e-12)
    assert all(abs(xi(mod, q)) < 1e-12 for q in (-3, -1, 1, 2))
    assert pq(mod, 0) == pytest.approx(1.0, abs=1e-12)


def test_pulse_train_closed_form():
    mod = pulse()
    assert pq(mod, 1) == pytest.approx(4 / math.pi ** 2, abs=1e-8)
    assert pq(mod, -1) == pytest.approx(0.405285, abs=1e-6)
    assert pq(mod, 3) == pytest.approx(0.045032, abs=1e-6)
    for q in range(-10, 11):
        if q % 2:
            assert abs(pq(mod, q) - 4 / (math.pi ** 2 * q * q)) <= 1e-8
        else:
            assert pq(mod, q) <= 1e-10
        assert pulse_train_weight(q) == pytest.approx(pq(mod, q), abs=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.3, 4.0), st.floats(-math.pi, math.pi))
def test_sinusoid_bessel_weights(ratio, om, phase):
    amp = ratio * om
    if amp >= 1.0:
        amp, om = 0.9, 0.9 / ratio
    mod = ModulationProfile(1.0, 2 * math.pi / om, "sinusoidal", amplitude=amp, phase=phase)
    bessel = scipy.special.jv(np.arange(-8, 9), amp / om) ** 2
    assert np.max(np.abs(pq_table(mod, 8) - bessel)) < 1e-8


def test_weights_are_non_negative_and_bath_independent():
    mod = ModulationProfile(1.0, 2.0, "sinusoidal", amplitude=0.7)
    assert np.all(pq_table(mod, 8) >= 0)
    a = quiet_model(mod, [make_flat_bath("h", 1.0, 0.1)])
    b = quiet_model(mod, [make_ohmic_bath("x", 3.0, 2.0, 1.0)])
    assert np.array_equal(a.weights, b.weights)


def test_effective_temperature_examples():
    assert effective_temperature(1.3, 1.0, 0.5, 0) == 1.3
    assert effective_temperature(1.3, 1.0, 0.5, 1) == pytest.approx(2.6)
    assert effective_temperature(1.3, 1.0, 3.0, 1) == pytest.approx(-0.65)
    assert effective_temperature(1.3, 1.0, 0.5, 2) == math.inf


def test_averaged_rates_without_modulation():
    bath = make_ohmic_bath("h", 0.7, 0.4, 3.0)
    r = averaged_rates(quiet_model(ModulationProfile(1.0, 2.0), [bath]))
    assert r.excited["h"] == pytest.approx(bath.rate(1.0), rel=1e-12)
    assert r.ground["h"] == pytest.approx(bath.rate(-1.0), rel=1e-12)
    assert r.ground["h"] / r.excited["h"] == pytest.approx(math.exp(-1 / 0.7), rel=1e-12)


def test_averaged_rates_pulse_flat():
    gamma0, temp, om = 0.2, 1.0, 1.5
    model = quiet_model(pulse(om), [make_flat_bath("h", temp, gamma0)])
    r = averaged_rates(model)
    odd = [q for q in range(-31, 32) if q % 2]
    weight = {q: 4 / (math.pi ** 2 * q * q) for q in odd}

    def flat(w):  # flat spectrum with detailed balance on the negative axis
        return gamma0 if w >= 0 else gamma0 * math.exp(w / temp)

    # sideband q pairs with the quantum omega0 - q * Omega
    assert r.excited["h"] == pytest.approx(sum(weight[q] * flat(1 - q * om) for q in odd), rel=1e-8)
    assert r.ground["h"] == pytest.approx(sum(weight[q] * flat(q * om - 1) for q in odd), rel=1e-8)
    series = sum(weight.values())
    assert r.tail_mass == pytest.approx(1 - series, abs=1e-8)
    assert series < 0.999  # the 1/q^2 tail leaves 1.3% of the mass beyond |q| = 31


def test_truncation_warning_reports_required_q():
    with pytest.warns(UserWarning, match=r"Q >= \d+"):
        QubitModel(pulse(), (make_flat_bath("h", 1.0, 0.1),))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        QubitModel(ModulationProfile(1.0, 2.0, "sinusoidal", amplitude=0.9),
                   (make_flat_bath("h", 1.0, 0.1),))


def test_t_eff_limits():
    undriven = ModulationProfile(1.0, 2.0)
    one = quiet_model(undriven, [make_ohmic_bath("h", 0.8, 0.3, 5.0)])
    assert t_eff(one) == pytest.approx(0.8, abs=1e-10)
    two = quiet_model(undriven, [make_flat_bath("h", 2.0, 0.1), make_flat_bath("c", 0.5, 0.3)])
    assert 0.5 < t_eff(two) < 2.0


def test_t_eff_matches_steady_populations():
    mod = ModulationProfile(1.0, 2 * math.pi / 2.5, "sinusoidal", amplitude=0.9)
    model = quiet_model(mod, [make_ohmic_bath("h", 2.0, 0.1, 4.0), make_flat_bath("c", 0.5, 0.05)])
    rho = steady_state(build_qubit_bundle(model))
    assert np.max(np.abs(rho - gibbs_state(model.hamiltonian, t_eff(model)))) < 1e-8
    assert abs(rho[0, 1]) <= 1e-10


def test_modulation_validation():
    with pytest.raises(ValueError):
        ModulationProfile(1.0, 2.0, "sinusoidal", amplitude=1.0)
    with pytest.raises(ValueError):
        ModulationProfile(1.0, 2.0, "square")
    with pytest.raises(ValueError):
        ModulationProfile(-1.0, 2.0)
    with pytest.raises(ValueError):
        ModulationProfile.tabulated([0, 1, 2], [1.0, -0.2, 1.0])
    with pytest.raises(ValueError, match="sample mean"):
        ModulationProfile(2.0, 2.0, "tabulated", samples=((0.0, 1.0), (2.0, 1.0)))


def test_mean_frequency_by_quadrature():
    sin = ModulationProfile(1.3, 2.1, "sinusoidal", amplitude=0.9, phase=0.4)
    tab = ModulationProfile.tabulated([0, 0.5, 1.7, 2.0], [1.0, 1.8, 0.6, 1.0])
    for mod in (sin, tab):
        mean, _ = scipy.integrate.quad(mod.frequency, 0, mod.period, points=mod.breakpoints or None,
                                       epsabs=1e-13)
        assert abs(mean / mod.period - mod.omega0) <= 1e-10
        assert abs(mod.phase_offset(mod.period * (1 - 1e-12))) < 1e-9


def test_tabulated_phase_is_exact_integral():
    mod = ModulationProfile.tabulated([0, 0.5, 1.7, 2.0], [1.0, 1.8, 0.6, 1.0])
    for t in (0.3, 0.9, 1.9):
        total, _ = scipy.integrate.quad(mod.frequency, 0, t, points=[0.5, 1.7], epsabs=1e-13)
        assert mod.total_phase(t) == pytest.approx(total, abs=1e-12)


def test_exact_phase_propagator_matches_integrator():
    mod = ModulationProfile(1.0, 2 * math.pi / 1.5, "sinusoidal", amplitude=0.6, phase=0.2)
    exact = periodic_hamiltonian(mod)
    stepped = smooth_hamiltonian(exact.evaluator, mod.period)
    for t in (0.7, 5.3):
        assert np.linalg.norm(propagate(exact, t) - propagate(stepped, t)) < 1e-9


def test_bundle_reduces_to_static_without_modulation():
    bath = make_ohmic_bath("h", 0.9, 0.3, 4.0)
    model = QubitModel(ModulationProfile(1.0, 2.0), (bath,), q_max=0)
    ref = build_static(0.5 * SIGMA_Z, [(SIGMA_X, bath)])
    assert np.max(np.abs(build_qubit_bundle(model).total - ref.total)) < 1e-12


def test_pulse_bundle_has_no_even_harmonics():
    b = build_qubit_bundle(quiet_model(pulse(), [make_flat_bath("h", 1.0, 0.1)]))
    assert b.channels and all(ch.q % 2 for ch in b.channels)


def test_single_harmonic_currents():
    bath = make_flat_bath("h", 0.9, 0.2)
    undriven = QubitModel(ModulationProfile(1.0, 2.0), (bath,), q_max=0)
    assert abs(single_harmonic_current(undriven, gibbs_state(undriven.hamiltonian, 0.9), "h", 0)) < 1e-12

    mod = ModulationProfile(1.0, 2 * math.pi / 2.5, "sinusoidal", amplitude=0.9)
    model = quiet_model(mod, [make_ohmic_bath("h", 2.0, 0.1, 4.0), make_flat_bath("c", 0.5, 0.05)])
    b = build_qubit_bundle(model)
    rho = steady_state(b)
    total = sum(single_harmonic_current(model, rho, a, q) for a in ("h", "c") for q in model.harmonics)
    assert abs(total + steady_report(b, rho).power) < 1e-9


def test_pulse_single_bath_total_current_sign():
    model = quiet_model(pulse(), [make_flat_bath("h", 1.0, 0.05)])
    rho = steady_state(build_qubit_bundle(model))
    total = sum(single_harmonic_current(model, rho, "h", q) for q in model.harmonics)
    assert total < 0  # heat leaves the system; the drive supplies the work


def test_xi_cache_is_read_only():
    table = xi_table(pulse(), 3)
    with pytest.raises(ValueError):
        table[0] = 1
