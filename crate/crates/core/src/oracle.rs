//! Brute-force reference computations.
//!
//! Each function here works from the raw definitions, with no shared code
//! path into [`crate::spectra`] or [`crate::response`]: fresh complex
//! exponentials instead of twiddle tables, full-length sums instead of the
//! periodic reductions, explicit symbol-moment bookkeeping instead of the
//! closed forms. They are slow on purpose and intended for desk-scale
//! cross-checks (tests and `selftest`).

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::masks::Mask;

fn bit(mask: &Mask, i: i64) -> u8 {
    let n = mask.period() as i64;
    mask.bits()[(((i % n) + n) % n) as usize]
}

/// `a[k]` by direct counting of coincident ones.
pub fn autocorr(mask: &Mask) -> Vec<usize> {
    let n = mask.period() as i64;
    (0..n).map(|k| (0..n).filter(|&i| bit(mask, i) == 1 && bit(mask, i - k) == 1).count()).collect()
}

/// For each residue `d` mod N, how many ordered support pairs `(x, y)`
/// have `x - y = d`.
pub fn difference_counts(mask: &Mask) -> Vec<usize> {
    let n = mask.period();
    let support: Vec<usize> = (0..n).filter(|&i| mask.bits()[i] == 1).collect();
    let mut counts = vec![0; n];
    for &x in &support {
        for &y in &support {
            counts[(x + n - y) % n] += 1;
        }
    }
    counts
}

/// `R_{k,l}` summed over a whole CPI of `pulses` periods, unreduced.
pub fn cross_term_cpi(mask: &Mask, k: i64, l: i64, pulses: usize) -> usize {
    let len = (mask.period() * pulses) as i64;
    (0..len).filter(|&n| bit(mask, n) == 0 && bit(mask, n - k) == 1 && bit(mask, n - l) == 1).count()
}

fn gamma(mask: &Mask, k: i64, len: usize) -> Vec<f64> {
    (0..len as i64).map(|n| f64::from((1 - bit(mask, n)) * bit(mask, n - k))).collect()
}

/// Direct DFT of `seq` at every bin, each exponential computed afresh.
pub fn dft(seq: &[f64]) -> Vec<Complex64> {
    let len = seq.len();
    (0..len)
        .map(|nu| {
            seq.iter()
                .enumerate()
                .map(|(n, &v)| v * Complex64::from_polar(1.0, -TAU * ((nu * n) % len) as f64 / len as f64))
                .sum()
        })
        .collect()
}

/// `S_{k,N}(nu)` for all `nu`.
pub fn spectrum_n(mask: &Mask, k: usize) -> Vec<Complex64> {
    dft(&gamma(mask, k as i64, mask.period()))
}

/// `S_{k,MN}(nu)` for all `nu`, from the tiled length-MN sequence.
pub fn spectrum_mn(mask: &Mask, k: usize, pulses: usize) -> Vec<Complex64> {
    dft(&gamma(mask, k as i64, mask.period() * pulses))
}

/// `E{ prod x_i^(p_i) conj(x_i)^(q_i) }` for independent unit-energy
/// symbols with zero mean, zero pseudo-variance and fourth moment `mu4`.
/// Each factor is `(symbol index, conjugated)`.
pub fn symbol_moment(factors: &[(i64, bool)], mu4: f64) -> f64 {
    let mut groups: BTreeMap<i64, (u32, u32)> = BTreeMap::new();
    for &(idx, conj) in factors {
        let e = groups.entry(idx).or_default();
        if conj {
            e.1 += 1;
        } else {
            e.0 += 1;
        }
    }
    groups
        .values()
        .map(|&(p, q)| match (p, q) {
            (0, 0) => 1.0,
            // mean and pseudo-variance vanish
            (1, 0) | (0, 1) | (2, 0) | (0, 2) => 0.0,
            (1, 1) => 1.0,
            (2, 2) => mu4,
            // odd mixed moments: the only one reachable from a
            // four-factor correlation also contains a singleton
            (2, 1) | (1, 2) => 0.0,
            other => panic!("moment {other:?} not covered by the symbol model"),
        })
        .product()
}

/// `E{|r(k,l,nu)|^2}` as the full double sum over `n, m in 0..MN`, with
/// each symbol expectation taken from [`symbol_moment`].
pub fn expected_response(mask: &Mask, pulses: usize, mu4: f64, k: usize, l: usize, nu: usize) -> f64 {
    let len = (mask.period() * pulses) as i64;
    let (k, l) = (k as i64, l as i64);
    let active: Vec<i64> =
        (0..len).filter(|&n| bit(mask, n) == 0 && bit(mask, n - k) == 1 && bit(mask, n - l) == 1).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for &n in &active {
        for &m in &active {
            let moment = symbol_moment(&[(n - k, false), (n - l, true), (m - k, true), (m - l, false)], mu4);
            if moment != 0.0 {
                let phase = TAU * (nu as i64 * (n - m)) as f64 / len as f64;
                acc += Complex64::from_polar(moment, phase);
            }
        }
    }
    acc.re
}

/// Every mask of period `period` with exactly `weight` ones, in
/// lexicographic order of their supports.
pub fn all_masks(period: usize, weight: usize) -> Vec<Vec<u8>> {
    fn rec(start: usize, period: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=period - left {
            cur[i] = 1;
            rec(i + 1, period, left - 1, cur, out);
            cur[i] = 0;
        }
    }
    let mut out = Vec::new();
    rec(0, period, weight, &mut vec![0; period], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_rules() {
        assert_eq!(symbol_moment(&[(1, false), (1, true), (2, true), (2, false)], 1.32), 1.0);
        assert_eq!(symbol_moment(&[(1, false), (1, true), (1, true), (1, false)], 1.32), 1.32);
        assert_eq!(symbol_moment(&[(1, false), (2, true), (2, true), (1, false)], 1.32), 0.0);
        assert_eq!(symbol_moment(&[(1, false), (1, true), (1, true), (3, false)], 1.32), 0.0);
    }

    #[test]
    fn enumeration_count() {
        assert_eq!(all_masks(7, 3).len(), 35);
        assert_eq!(all_masks(11, 5).len(), 462);
    }
}
