"""Matched-pairs probit estimation: conditional MLE, Heckman, CML, IPW."""

from ._pairprobit import (
    Dataset,
    MatchedPair,
    PairProbitError,
    conditional_prob_at,
    emit_dataset,
    fit_cml_logit,
    fit_conditional_mle,
    fit_heckman_ml,
    g_function,
    ipw_ate,
    load_lead_dataset,
    load_leukaemia_dataset,
    log_g_function,
    naive_ate,
    parse_dataset,
    parse_dataset_text,
    simulate,
    treatment_odds,
)

__all__ = [
    "Dataset",
    "MatchedPair",
    "PairProbitError",
    "conditional_prob_at",
    "emit_dataset",
    "fit_cml_logit",
    "fit_conditional_mle",
    "fit_heckman_ml",
    "g_function",
    "ipw_ate",
    "load_lead_dataset",
    "load_leukaemia_dataset",
    "log_g_function",
    "naive_ate",
    "parse_dataset",
    "parse_dataset_text",
    "simulate",
    "treatment_odds",
]
