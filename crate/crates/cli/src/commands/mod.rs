pub mod report;
pub mod run;
pub mod simulate;
pub mod sweep;

/// Full-precision, locale-free number formatting for tables and summaries.
pub fn num(v: f64) -> String {
    format!("{v}")
}
