//! Observed convergence orders along a mesh ladder.

use std::fmt::Write;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateRow {
    pub h: f64,
    pub elements: usize,
    pub error: f64,
}

/// Errors along a ladder of decreasing `h` with the observed order
/// `log(e_{i-1}/e_i) / log(h_{i-1}/h_i)` between consecutive rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RateTable {
    pub quantity: String,
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn new(quantity: impl Into<String>) -> Self {
        Self { quantity: quantity.into(), rows: Vec::new() }
    }

    /// Append a level. `h` must decrease strictly and `error` be positive.
    pub fn push(&mut self, h: f64, elements: usize, error: f64) -> Result<()> {
        if !(error > 0.0 && error.is_finite()) {
            return Err(Error::Problem(format!("{}: error {error} must be positive and finite", self.quantity)));
        }
        if !(h > 0.0) || self.rows.last().is_some_and(|r| h >= r.h) {
            return Err(Error::Problem(format!("{}: mesh sizes must decrease strictly (got h = {h})", self.quantity)));
        }
        self.rows.push(RateRow { h, elements, error });
        Ok(())
    }

    /// Observed order per row; the first row has none.
    pub fn rates(&self) -> Vec<Option<f64>> {
        let mut out = vec![None];
        out.extend(self.rows.windows(2).map(|w| Some((w[0].error / w[1].error).ln() / (w[0].h / w[1].h).ln())));
        out.truncate(self.rows.len());
        out
    }

    pub fn final_rate(&self) -> Option<f64> {
        self.rates().last().copied().flatten()
    }

    /// Whether errors decrease strictly along the ladder.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }

    /// CSV with columns `h,elements,error,rate`; the first rate is empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,elements,error,rate\n");
        for (r, rate) in self.rows.iter().zip(self.rates()) {
            let rate = rate.map(|v| format!("{v:.6}")).unwrap_or_default();
            let _ = writeln!(s, "{:.6e},{},{:.6e},{}", r.h, r.elements, r.error, rate);
        }
        s
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n{:>10} {:>10} {:>12} {:>6}\n", self.quantity, "h", "Elements", "Error", "Rate");
        for (r, rate) in self.rows.iter().zip(self.rates()) {
            let rate = rate.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(s, "{:>10.4e} {:>10} {:>12.3e} {:>6}", r.h, r.elements, r.error, rate);
        }
        s
    }
}
