import numpy as np
import pytest

from admweights import (
    BOWLIN_TRUE,
    FitOptions,
    Formula,
    SynthSpec,
    ccr_scores,
    direct_regression,
    fit_constrained,
    generate,
    random_spec,
    recovery_error,
    true_scores,
)

RECOVERED_REFERENCE = Formula([0.488, 0.13420, 0.17243], [1.0])
DIRECT_REFERENCE = Formula([1.1054, 0.14811, 0.16198], [1.0])


def test_generate_h8_cost():
    spec = SynthSpec(BOWLIN_TRUE, [[100, 3000, 2000]], [0.9048])
    assert generate(spec).inputs[0, 0] == pytest.approx(884.75, abs=0.01)


def test_generate_h1_cost_efficient():
    spec = SynthSpec(BOWLIN_TRUE, [[50, 3000, 2000]], [1.0])
    d = generate(spec)
    assert d.inputs[0, 0] == pytest.approx(775.5, abs=0.05)
    assert d.inputs[0, 0] == BOWLIN_TRUE.output_weights @ np.array([50, 3000, 2000])


def test_generate_rejects_zero_cost():
    with pytest.raises(ValueError, match="efficient cost"):
        generate(SynthSpec(Formula([1.0, 0.0], [1.0]), [[0.0, 5.0]], [1.0]))


def test_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(BOWLIN_TRUE, [[1, 1, 1]], [1.2])
    with pytest.raises(ValueError):
        SynthSpec(BOWLIN_TRUE, [[1, 1]], [1.0])
    with pytest.raises(ValueError, match="input_mix"):
        SynthSpec(Formula([1.0], [1.0, 2.0]), [[1.0]], [1.0])


def test_true_scores_bowlin(bowlin):
    ts = true_scores(bowlin, BOWLIN_TRUE)
    expected = {"H10": 0.85, "H13": 0.96, "H15": 0.86, "H1": 1.00}
    for name, value in expected.items():
        assert ts[bowlin.index(name)] == pytest.approx(value, abs=5e-3), name


@pytest.mark.parametrize("seed", range(20))
def test_round_trip(seed):
    spec = random_spec(seed)
    np.testing.assert_allclose(true_scores(generate(spec), spec.true_formula), spec.efficiencies, rtol=0, atol=1e-12)


def test_multi_input_round_trip():
    rng = np.random.default_rng(0)
    truth = Formula([0.4, 0.9], [2.0, 0.5])
    eff = rng.uniform(0.6, 1.0, 10)
    spec = SynthSpec(truth, rng.uniform(1, 5, (10, 2)), eff, input_mix=rng.uniform(0.5, 2, (10, 2)))
    d = generate(spec)
    assert d.m == 2
    np.testing.assert_allclose(true_scores(d, truth), eff, atol=1e-12)


def test_recovery_of_reference_fit(bowlin):
    m = recovery_error(BOWLIN_TRUE, RECOVERED_REFERENCE, bowlin)
    np.testing.assert_allclose(m.coefficient_errors[:3], [0.024, 0.0039, 0.0132], atol=5e-4)
    assert m.max_coefficient_error <= 0.03
    assert m.max_score_error <= 0.01


def test_recovery_identical_is_zero(bowlin):
    m = recovery_error(BOWLIN_TRUE, BOWLIN_TRUE.scaled(3.0), bowlin)
    assert max(m.coefficient_errors) == pytest.approx(0, abs=1e-15)
    assert m.max_score_error == pytest.approx(0, abs=1e-15)


def test_recovery_direct_regression(bowlin):
    m = recovery_error(BOWLIN_TRUE, DIRECT_REFERENCE, bowlin)
    assert m.coefficient_errors[0] == pytest.approx(1.2108, abs=1e-3)
    fitted = recovery_error(BOWLIN_TRUE, direct_regression(bowlin), bowlin)
    assert fitted.coefficient_errors[0] == pytest.approx(1.21, abs=0.01)


def test_recovery_dimension_mismatch(bowlin):
    with pytest.raises(ValueError):
        recovery_error(BOWLIN_TRUE, Formula([1.0, 1.0], [1.0]), bowlin)


def test_end_to_end_recovery():
    good = 0
    for trial in range(100):
        spec = random_spec(trial, n=12 + trial % 10)
        d = generate(spec)
        dea = ccr_scores(d)
        fit = fit_constrained(d, dea.scores, FitOptions(n_starts=6, seed=42 + trial), dea)
        m = recovery_error(spec.true_formula, fit.formula, d)
        truth = true_scores(d, spec.true_formula)
        if m.max_coefficient_error <= 0.10 and np.abs(fit.predicted - truth).max() <= 0.02:
            good += 1
    assert good >= 95
