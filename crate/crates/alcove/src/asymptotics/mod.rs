//! Limit machinery: tuning regimes, localizations, the limiting objective
//! of the centered and scaled estimator, and its minimization.

mod ext_real;
mod regime;
mod vphi;

pub use ext_real::ExtReal;
pub use regime::{regime_from_schedule, NoiseDraw, Regime, TuningSchedule};
pub use vphi::{
    check_minimizer, finite_sample_penalty, limit_objective, minimize_limit_objective,
    minimizer_document, KktCase, KktCoordinate, KktReport, Localization, MinimizerDocument,
};
