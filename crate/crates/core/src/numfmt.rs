//! Fixed 17-significant-digit float formatting shared by every text format.
//!
//! 17 significant digits round-trip any finite `f64` exactly, so files written
//! here parse back to bit-identical values.

/// Formats `v` as `d.dddddddddddddddde±XX` (17 significant digits).
pub fn fmt17(v: f64) -> String {
    if v == 0.0 {
        // normalizes -0.0 as well
        return "0.0000000000000000e+00".to_string();
    }
    let s = format!("{:.16e}", v);
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}
