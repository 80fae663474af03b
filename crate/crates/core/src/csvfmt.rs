//! Number formatting shared by the CSV writers.

/// Scientific notation with 12 significant digits; infinities as `inf`.
pub fn sci(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else if v.is_nan() {
        "nan".to_string()
    } else if v == 0.0 {
        // avoid "-0.00000000000e0"
        format!("{:.11e}", 0.0f64)
    } else {
        format!("{v:.11e}")
    }
}

#[cfg(test)]
mod tests {
    use super::sci;

    #[test]
    fn formats() {
        assert_eq!(sci(640256.0), "6.40256000000e5");
        assert_eq!(sci(0.8), "8.00000000000e-1");
        assert_eq!(sci(-0.0), "0.00000000000e0");
        assert_eq!(sci(f64::INFINITY), "inf");
    }
}
