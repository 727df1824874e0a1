//! Text formatting shared by the CSV writers.

/// Positional decimal notation with 17 significant digits (exact `f64` round trip).
pub fn format_decimal(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0.0000000000000000".to_string() } else { format!("{x}") };
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (16 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}
