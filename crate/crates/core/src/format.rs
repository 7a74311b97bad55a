//! Fixed-precision numeric output shared by the CSV and JSON reports.

use num_complex::Complex64;

/// Significant digits used for every number that leaves the library as text.
pub const SIGNIFICANT_DIGITS: usize = 15;

/// Rounds `x` to [`SIGNIFICANT_DIGITS`] significant decimal digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Decimal text with at most 15 significant digits, exponent form.
pub fn fmt_sig(x: f64) -> String {
    format!("{:e}", round_sig(x))
}

pub fn round_complex(z: Complex64) -> Complex64 {
    Complex64::new(round_sig(z.re), round_sig(z.im))
}

/// JSON `[re, im]` pair rounded to 15 significant digits.
pub fn complex_json(z: Complex64) -> serde_json::Value {
    serde_json::json!([round_sig(z.re), round_sig(z.im)])
}

/// JSON number rounded to 15 significant digits; non-finite values become `null`.
pub fn real_json(x: f64) -> serde_json::Value {
    serde_json::json!(round_sig(x))
}
