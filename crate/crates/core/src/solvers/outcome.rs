//! Certificates and their absence.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub label: String,
    pub coefficient: f64,
}

/// A solution over the ansatz that passed both residual tests.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate<T> {
    pub ansatz: String,
    /// Nonzero coefficients in ansatz order.
    pub terms: Vec<Term>,
    pub integer_lifts: Vec<i64>,
    pub fit_residual: f64,
    pub holdout_residual: f64,
    #[serde(skip)]
    pub value: T,
}

/// The best attempt over the ansatz, which did not pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoCertificate {
    pub ansatz: String,
    pub best_fit_residual: f64,
    pub best_holdout_residual: f64,
    pub note: String,
}

pub(crate) const NOT_A_PROOF: &str =
    "no solution within this ansatz; this is not a proof that none exists";

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case", bound = "")]
pub enum Outcome<T> {
    Certificate(Certificate<T>),
    NoCertificate(NoCertificate),
}

impl<T> Outcome<T> {
    pub fn is_certificate(&self) -> bool {
        matches!(self, Outcome::Certificate(_))
    }

    pub fn certificate(&self) -> Option<&Certificate<T>> {
        match self {
            Outcome::Certificate(c) => Some(c),
            Outcome::NoCertificate(_) => None,
        }
    }

    pub fn fit_residual(&self) -> f64 {
        match self {
            Outcome::Certificate(c) => c.fit_residual,
            Outcome::NoCertificate(n) => n.best_fit_residual,
        }
    }

    pub fn holdout_residual(&self) -> f64 {
        match self {
            Outcome::Certificate(c) => c.holdout_residual,
            Outcome::NoCertificate(n) => n.best_holdout_residual,
        }
    }

    /// The same outcome without the solved object, for reports.
    pub fn summary(&self) -> Outcome<()> {
        match self {
            Outcome::Certificate(c) => Outcome::Certificate(Certificate {
                ansatz: c.ansatz.clone(),
                terms: c.terms.clone(),
                integer_lifts: c.integer_lifts.clone(),
                fit_residual: c.fit_residual,
                holdout_residual: c.holdout_residual,
                value: (),
            }),
            Outcome::NoCertificate(n) => Outcome::NoCertificate(n.clone()),
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Outcome<U> {
        match self {
            Outcome::Certificate(c) => Outcome::Certificate(Certificate {
                ansatz: c.ansatz,
                terms: c.terms,
                integer_lifts: c.integer_lifts,
                fit_residual: c.fit_residual,
                holdout_residual: c.holdout_residual,
                value: f(c.value),
            }),
            Outcome::NoCertificate(n) => Outcome::NoCertificate(n),
        }
    }
}

pub(crate) fn terms(labels: &[String], coeffs: &[f64]) -> Vec<Term> {
    labels
        .iter()
        .zip(coeffs)
        .filter(|(_, c)| c.abs() > 1e-12)
        .map(|(l, c)| Term {
            label: l.clone(),
            coefficient: *c,
        })
        .collect()
}

/// Certificate if both residuals pass, otherwise the documented absence.
#[allow(clippy::too_many_arguments)]
pub(crate) fn decide<T>(
    ansatz: &str,
    labels: &[String],
    coeffs: &[f64],
    integer_lifts: Vec<i64>,
    fit_residual: f64,
    holdout_residual: f64,
    tol_fit: f64,
    tol_holdout: f64,
    value: T,
) -> Outcome<T> {
    if fit_residual < tol_fit && holdout_residual < tol_holdout {
        Outcome::Certificate(Certificate {
            ansatz: ansatz.to_string(),
            terms: terms(labels, coeffs),
            integer_lifts,
            fit_residual,
            holdout_residual,
            value,
        })
    } else {
        Outcome::NoCertificate(NoCertificate {
            ansatz: ansatz.to_string(),
            best_fit_residual: fit_residual,
            best_holdout_residual: holdout_residual,
            note: format!("{NOT_A_PROOF} (ansatz: {ansatz})"),
        })
    }
}
