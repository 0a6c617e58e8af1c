//! Number and bit-vector rendering shared by every output format.

/// Decimal with at most 12 significant digits, no exponent, trailing zeros trimmed.
pub fn decimal(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { "0".into() } else { v.to_string() };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let places = (11 - magnitude).max(0) as usize;
    let mut s = format!("{v:.places$}");
    if s.contains('.') {
        let keep = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(keep);
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// Lowercase hex, zero-padded to `ceil(k / 4)` digits.
pub fn bits_hex(bits: u64, k: usize) -> String {
    let width = k.div_ceil(4).max(1);
    format!("{bits:0width$x}")
}

pub fn parse_bits_hex(s: &str) -> Option<u64> {
    if s.is_empty() || s.len() > 16 {
        return None;
    }
    u64::from_str_radix(s, 16).ok()
}

/// `side x side` grid of `*` (dot) and `.` (blank), row 0 first.
pub fn ascii_grid(bits: u64, side: usize) -> String {
    let mut out = String::with_capacity(side * (side + 1));
    for r in 0..side {
        for c in 0..side {
            out.push(if bits >> (r * side + c) & 1 == 1 { '*' } else { '.' });
        }
        out.push('\n');
    }
    out
}

/// Column name of half-seat bucket `h`: `hist_0`, `hist_0_5`, `hist_1`, ...
pub fn hist_column(h: usize) -> String {
    if h.is_multiple_of(2) {
        format!("hist_{}", h / 2)
    } else {
        format!("hist_{}_5", h / 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals() {
        assert_eq!(decimal(0.0), "0");
        assert_eq!(decimal(1.0), "1");
        assert_eq!(decimal(0.25), "0.25");
        assert_eq!(decimal(4.0 / 13.0), "0.307692307692");
        assert_eq!(decimal(2.0 / 3.0), "0.666666666667");
        assert_eq!(decimal(-3.269021882), "-3.269021882");
        assert_eq!(decimal(12345.678901234567), "12345.6789012");
        assert_eq!(decimal(9.9999999999999), "10");
        assert_eq!(decimal(1e-20), "0.00000000000000000001");
    }

    #[test]
    fn hex_and_grids() {
        assert_eq!(bits_hex(0x8dfc, 25), "0008dfc");
        assert_eq!(bits_hex(0, 1), "0");
        assert_eq!(parse_bits_hex("0008dfc"), Some(0x8dfc));
        assert_eq!(parse_bits_hex("xyz"), None);
        assert_eq!(ascii_grid(0b1001, 2), "*.\n.*\n");
        assert_eq!(hist_column(0), "hist_0");
        assert_eq!(hist_column(1), "hist_0_5");
        assert_eq!(hist_column(10), "hist_5");
    }
}
