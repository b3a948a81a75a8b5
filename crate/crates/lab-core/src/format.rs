//! Deterministic numeric formatting for report emitters.

/// Formats a float with 15 significant digits in scientific notation.
///
/// Output is locale-independent and byte-stable across runs, which keeps
/// emitted CSV/JSON comparable as golden files. Zero normalizes to "0.0" so
/// a negative zero cannot leak run-to-run differences.
pub fn sig15(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{:.14e}", x)
}

#[cfg(test)]
mod tests {
    use super::sig15;

    #[test]
    fn fifteen_digits_stable() {
        assert_eq!(sig15(4.0 / 3.0), "1.33333333333333e0");
        assert_eq!(sig15(-0.0), "0.0");
        assert_eq!(sig15(0.0), "0.0");
        assert_eq!(sig15(1e-12), "1.00000000000000e-12");
        assert_eq!(sig15(-271.5), "-2.71500000000000e2");
    }

    #[test]
    fn non_finite_values_named() {
        assert_eq!(sig15(f64::NAN), "NaN");
        assert_eq!(sig15(f64::INFINITY), "inf");
        assert_eq!(sig15(f64::NEG_INFINITY), "-inf");
    }
}
