//! Published reference values and precision-aware comparison.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

/// The checked-in reference table.
pub const BUILTIN: &str = include_str!("../../data/reference.toml");

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("cannot parse reference value {0:?}")]
    Value(String),
    #[error("reference file: {0}")]
    Toml(#[from] toml::de::Error),
}

/// A published number as printed, e.g. `"16.4k"`, `"2.3 M"` or `"66%"`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub text: String,
    pub value: f64,
    /// Significant digits of the printed mantissa. Trailing zeros of an
    /// integer mantissa are not counted.
    pub sig_digits: u32,
}

impl FromStr for Reference {
    type Err = ReferenceError;

    fn from_str(s: &str) -> Result<Reference, ReferenceError> {
        let bad = || ReferenceError::Value(s.to_string());
        let t = s.trim();
        let t = t.strip_suffix('%').unwrap_or(t).trim_end();
        let (mantissa, scale) = match t.chars().last() {
            Some('k') => (&t[..t.len() - 1], 1e3),
            Some('M') => (&t[..t.len() - 1], 1e6),
            Some('G') => (&t[..t.len() - 1], 1e9),
            _ => (t, 1.0),
        };
        let mantissa = mantissa.trim_end();
        if mantissa.is_empty() || !mantissa.chars().all(|c| c.is_ascii_digit() || c == '.') {
            return Err(bad());
        }
        let value: f64 = mantissa.parse().map_err(|_| bad())?;
        let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
        let mut sig = digits.trim_start_matches('0');
        if !mantissa.contains('.') {
            sig = sig.trim_end_matches('0');
        }
        Ok(Reference {
            text: s.trim().to_string(),
            value: value * scale,
            sig_digits: sig.len().max(1) as u32,
        })
    }
}

/// Round `x` to `sig` significant digits, halves away from zero.
pub fn round_sig(x: f64, sig: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exp = x.abs().log10().floor() as i32;
    let q = 10f64.powi(exp + 1 - sig as i32);
    (x / q).round() * q
}

impl Reference {
    /// Signed deviation of `x` from the reference, in percent.
    pub fn delta_pct(&self, x: f64) -> f64 {
        (x - self.value) / self.value * 100.0
    }

    /// Whether `x`, printed at the reference's precision, reads the same.
    pub fn matches_rounded(&self, x: f64) -> bool {
        let r = round_sig(x, self.sig_digits);
        (r - self.value).abs() <= 1e-9 * self.value.abs().max(1.0)
    }
}

type Tables = BTreeMap<String, BTreeMap<String, BTreeMap<String, Reference>>>;

/// Reference values keyed by table, row label and metric.
#[derive(Clone, Debug, Default)]
pub struct References(Tables);

impl References {
    pub fn parse(text: &str) -> Result<References, ReferenceError> {
        let raw: BTreeMap<String, BTreeMap<String, BTreeMap<String, String>>> = toml::from_str(text)?;
        let mut out = Tables::new();
        for (table, rows) in raw {
            let t = out.entry(table).or_default();
            for (row, metrics) in rows {
                let r = t.entry(row).or_default();
                for (metric, value) in metrics {
                    r.insert(metric, value.parse()?);
                }
            }
        }
        Ok(References(out))
    }

    pub fn builtin() -> References {
        References::parse(BUILTIN).expect("built-in reference table parses")
    }

    pub fn get(&self, table: &str, row: &str, metric: &str) -> Option<&Reference> {
        self.0.get(table)?.get(row)?.get(metric)
    }
}
