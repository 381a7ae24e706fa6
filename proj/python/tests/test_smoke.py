import math

import pytest

import pairprobit as pp


def test_lead_conditional_and_odds():
    data = pp.load_lead_dataset()
    assert len(data) == 33
    fit = pp.fit_conditional_mle(data, se=True)
    assert fit["converged"]
    assert fit["lambda"] == pytest.approx(0.9992, abs=1e-3)
    assert fit["se"][0] ** 2 == pytest.approx(0.1733, abs=1e-3)
    assert pp.treatment_odds(fit["lambda"], "normal(0,0.1257)") == pytest.approx(1.653, abs=0.01)
    assert pp.treatment_odds(0.0, "cauchy") == 1.0


def test_heckman_lead():
    fit = pp.fit_heckman_ml(pp.load_lead_dataset())
    assert fit["lambda"] == pytest.approx(1.2278, abs=5e-3)
    assert fit["lambda_variance"] == pytest.approx(0.1257, abs=0.01)


def test_cml_closed_form():
    pairs = [pp.MatchedPair(1, 0)] * 10 + [pp.MatchedPair(0, 1)] * 20
    fit = pp.fit_cml_logit(pp.Dataset(pairs))
    assert fit["lambda"] == pytest.approx(math.log(0.5), abs=1e-9)


def test_dataset_round_trip_and_errors():
    data = pp.parse_dataset_text("y_a,y_b,d,x_a_1,x_b_1\n1,0,1,0.25,1.5\n0,1,0,-1,2\n")
    assert data.dimension == 1
    assert pp.parse_dataset_text(pp.emit_dataset(data)) == data
    with pytest.raises(pp.PairProbitError, match="parse"):
        pp.parse_dataset_text("y_a,y_b,d\n2,0,1\n")
    with pytest.raises(pp.PairProbitError, match="no_discordant_pairs"):
        pp.fit_conditional_mle(pp.load_leukaemia_dataset(threshold=0.0))


def test_g_function_identity():
    for x in (-3.0, -0.5, 0.0, 1.2, 4.0):
        assert pp.g_function(x) - pp.g_function(-x) == pytest.approx(-math.sqrt(math.pi) * x, abs=1e-12)
    assert pp.conditional_prob_at(0.0) == 0.5


def test_simulate_deterministic():
    text = "tau = normal(0,1)\nlambda = 0.5\nn = 200\nestimators = conditional\n"
    a = pp.simulate(scenario=text, reps=5, seed=3, workers=1)
    b = pp.simulate(scenario=text, reps=5, seed=3, workers=2)
    assert a == b
    assert a[0]["estimator"] == "conditional"
    assert a[0]["replications"] + a[0]["failures"] == 5
