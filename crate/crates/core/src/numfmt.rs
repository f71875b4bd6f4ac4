//! Canonical number formatting: shortest decimal text that parses back to
//! the identical `f64`.

/// Plain notation for moderate magnitudes, exponent notation otherwise.
/// Both forms are the shortest representation that round-trips bitwise.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
