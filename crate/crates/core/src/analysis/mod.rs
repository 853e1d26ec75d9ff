//! Rate fitting and numerical lemma checks.

pub mod fit;
pub mod lemmas;

pub use fit::{fit_exp_rate, fit_poly_rate, RateFit, RateModel};
pub use lemmas::{LemmaReport, LemmaStatus};
