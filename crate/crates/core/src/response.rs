//! Closed-form expected range-Doppler response `E{|r(k,l,nu)|^2}`.
//!
//! Off the range mainlobe (`k != l`) the response is `M * R_{k,l}` for
//! every Doppler bin. On the mainlobe it is
//! `|S_{k,MN}(nu)|^2 + (mu4 - 1) M (rho N - a[k])`, where the deterministic
//! part only lives on the grating bins `nu = n M`.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::csvfmt::sci;
use crate::masks::Mask;
use crate::montecarlo::Constellation;
use crate::spectra::{self, SpectraError, SpectralSummary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResponseError {
    #[error("a CPI needs at least one period (M = 0)")]
    NoPulses,
    #[error("fourth moment mu4 = {0} is below 1")]
    InvalidMu4(f64),
    #[error(transparent)]
    Delay(#[from] SpectraError),
    #[error("Doppler bin {nu} outside 0..{limit}")]
    DopplerOutOfRange { nu: usize, limit: usize },
    #[error("empty {0} index set")]
    EmptyIndexSet(&'static str),
}

/// A mask repeated over `M` periods, with the constellation's fourth moment.
#[derive(Debug, Clone)]
pub struct ScenarioParams {
    mask: Mask,
    pulses: usize,
    mu4: f64,
    summary: SpectralSummary,
}

impl ScenarioParams {
    pub fn new(mask: Mask, pulses: usize, mu4: f64) -> Result<Self, ResponseError> {
        if pulses == 0 {
            return Err(ResponseError::NoPulses);
        }
        if mu4.is_nan() || mu4 < 1.0 || mu4.is_infinite() {
            return Err(ResponseError::InvalidMu4(mu4));
        }
        let summary = SpectralSummary::new(&mask);
        Ok(ScenarioParams { mask, pulses, mu4, summary })
    }

    pub fn with_constellation(mask: Mask, pulses: usize, constellation: &Constellation) -> Result<Self, ResponseError> {
        Self::new(mask, pulses, constellation.mu4())
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    /// `M`, the number of mask periods per CPI.
    pub fn pulses(&self) -> usize {
        self.pulses
    }

    pub fn mu4(&self) -> f64 {
        self.mu4
    }

    pub fn period(&self) -> usize {
        self.mask.period()
    }

    /// `M N`, the CPI length and the number of Doppler bins.
    pub fn cpi_len(&self) -> usize {
        self.pulses * self.mask.period()
    }

    pub fn summary(&self) -> &SpectralSummary {
        &self.summary
    }

    fn check_nu(&self, nu: usize) -> Result<(), ResponseError> {
        if nu >= self.cpi_len() {
            return Err(ResponseError::DopplerOutOfRange { nu, limit: self.cpi_len() });
        }
        Ok(())
    }

    /// Doppler-flat part of the mainlobe, `(mu4 - 1) M (rho N - a[k])`.
    pub fn random_floor(&self, k: usize) -> f64 {
        (self.mu4 - 1.0) * self.pulses as f64 * self.summary.received(k) as f64
    }
}

/// `E{|r(k,l,nu)|^2}` for delays `k, l in 1..N` and `nu in 0..MN`.
pub fn expected_response(p: &ScenarioParams, k: usize, l: usize, nu: usize) -> Result<f64, ResponseError> {
    let n = p.period();
    spectra::check_delay(k, n)?;
    spectra::check_delay(l, n)?;
    p.check_nu(nu)?;
    if k != l {
        return Ok(p.pulses as f64 * p.summary.cross_term(k, l)? as f64);
    }
    let s = spectra::s_kmn(&p.mask, k, p.pulses, nu);
    Ok(s.norm_sqr() + p.random_floor(k))
}

fn mainlobe_from_bins(p: &ScenarioParams, k: usize, bins: &[Complex64], nu: usize) -> f64 {
    let m = p.pulses;
    let deterministic = if nu.is_multiple_of(m) { (m * m) as f64 * bins[nu / m].norm_sqr() } else { 0.0 };
    deterministic + p.random_floor(k)
}

/// Mainlobe values at `nu = 0..M`: the peak at `nu = 0` followed by the
/// flat sidelobe floor.
pub fn moderate_slice(p: &ScenarioParams, k: usize) -> Result<Vec<f64>, ResponseError> {
    spectra::check_delay(k, p.period())?;
    let m = p.pulses as f64;
    let received = p.summary.received(k) as f64;
    let floor = p.random_floor(k);
    let mut out = vec![floor; p.pulses];
    out[0] = m * m * received * received + floor;
    Ok(out)
}

/// Mainlobe values on the grating bins `nu = n M`, `n = 0..N`.
pub fn grating_lobes(p: &ScenarioParams, k: usize) -> Result<Vec<f64>, ResponseError> {
    spectra::check_delay(k, p.period())?;
    let m = p.pulses as f64;
    let floor = p.random_floor(k);
    Ok(spectra::s_kn_all(&p.mask, k).iter().map(|s| m * m * s.norm_sqr() + floor).collect())
}

/// Which Doppler mismatches a grid covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DopplerRegime {
    /// Every bin below `M`: range and Doppler processing decouple.
    Moderate,
    /// Some bin at or beyond `M`, where grating lobes appear.
    High,
}

impl DopplerRegime {
    pub fn classify(nu_set: &[usize], pulses: usize) -> DopplerRegime {
        if nu_set.iter().all(|&nu| nu < pulses) {
            DopplerRegime::Moderate
        } else {
            DopplerRegime::High
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSource {
    ClosedForm,
    MonteCarlo,
}

/// Dense `(k, l, nu)` tensor of response values, `nu` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseGrid {
    pub k_set: Vec<usize>,
    pub l_set: Vec<usize>,
    pub nu_set: Vec<usize>,
    pub values: Vec<f64>,
    pub source: GridSource,
    /// Standard errors, Monte Carlo grids only.
    pub se: Option<Vec<f64>>,
    pub trials: Option<u64>,
}

impl ResponseGrid {
    fn offset(&self, ki: usize, li: usize, vi: usize) -> usize {
        (ki * self.l_set.len() + li) * self.nu_set.len() + vi
    }

    /// Value at positions `(ki, li, vi)` of the index sets.
    pub fn get(&self, ki: usize, li: usize, vi: usize) -> f64 {
        self.values[self.offset(ki, li, vi)]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn regime(&self, pulses: usize) -> DopplerRegime {
        DopplerRegime::classify(&self.nu_set, pulses)
    }

    /// Grid points in storage order.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.k_set
            .iter()
            .flat_map(move |&k| self.l_set.iter().flat_map(move |&l| self.nu_set.iter().map(move |&nu| (k, l, nu))))
    }

    /// `k,l,nu,value` for closed-form grids, `k,l,nu,value,se,trials` for
    /// Monte Carlo grids.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        match (&self.se, self.source) {
            (Some(se), GridSource::MonteCarlo) => {
                writeln!(out, "k,l,nu,value,se,trials")?;
                let trials = self.trials.unwrap_or(0);
                for (((k, l, nu), v), s) in self.points().zip(&self.values).zip(se) {
                    writeln!(out, "{k},{l},{nu},{},{},{trials}", sci(*v), sci(*s))?;
                }
            }
            _ => {
                writeln!(out, "k,l,nu,value")?;
                for ((k, l, nu), v) in self.points().zip(&self.values) {
                    writeln!(out, "{k},{l},{nu},{}", sci(*v))?;
                }
            }
        }
        Ok(())
    }
}

/// Validates index sets against the scenario.
pub fn check_index_sets(
    p: &ScenarioParams,
    k_set: &[usize],
    l_set: &[usize],
    nu_set: &[usize],
) -> Result<(), ResponseError> {
    for (name, set) in [("k", k_set), ("l", l_set), ("nu", nu_set)] {
        if set.is_empty() {
            return Err(ResponseError::EmptyIndexSet(name));
        }
    }
    for &k in k_set.iter().chain(l_set) {
        spectra::check_delay(k, p.period())?;
    }
    for &nu in nu_set {
        p.check_nu(nu)?;
    }
    Ok(())
}

/// Closed-form grid over the given index sets. Output is independent of
/// evaluation order.
pub fn build_grid(
    p: &ScenarioParams,
    k_set: &[usize],
    l_set: &[usize],
    nu_set: &[usize],
) -> Result<ResponseGrid, ResponseError> {
    check_index_sets(p, k_set, l_set, nu_set)?;
    let pulses = p.pulses as f64;
    let rows: Vec<f64> = k_set
        .par_iter()
        .flat_map_iter(|&k| {
            let bins = l_set.contains(&k).then(|| spectra::s_kn_all(&p.mask, k));
            let mut row = Vec::with_capacity(l_set.len() * nu_set.len());
            for &l in l_set {
                if l == k {
                    let bins = bins.as_ref().expect("diagonal spectrum");
                    row.extend(nu_set.iter().map(|&nu| mainlobe_from_bins(p, k, bins, nu)));
                } else {
                    let v = pulses * p.summary.cross_term(k, l).expect("validated") as f64;
                    row.extend(std::iter::repeat_n(v, nu_set.len()));
                }
            }
            row
        })
        .collect();
    Ok(ResponseGrid {
        k_set: k_set.to_vec(),
        l_set: l_set.to_vec(),
        nu_set: nu_set.to_vec(),
        values: rows,
        source: GridSource::ClosedForm,
        se: None,
        trials: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masks::{comb_mask, singer_mask};

    fn singer6() -> ScenarioParams {
        ScenarioParams::new(singer_mask(6).unwrap(), 50, 1.32).unwrap()
    }

    #[test]
    fn singer_mainlobe_and_floor() {
        let p = singer6();
        for k in [1, 20, 62] {
            let peak = expected_response(&p, k, k, 0).unwrap();
            assert!((peak - 640_256.0).abs() < 1e-6, "{peak}");
            for nu in [1, 7, 49] {
                let side = expected_response(&p, k, k, nu).unwrap();
                assert!((side - 256.0).abs() < 1e-9, "{side}");
            }
        }
        let slice = moderate_slice(&p, 20).unwrap();
        assert_eq!(slice.len(), 50);
        assert!((slice[0] - 640_256.0).abs() < 1e-6);
        assert!(slice[1..].iter().all(|&v| (v - 256.0).abs() < 1e-9));
    }

    #[test]
    fn off_mainlobe_is_doppler_flat() {
        let p = singer6();
        let a = expected_response(&p, 20, 30, 0).unwrap();
        assert_eq!(expected_response(&p, 20, 30, 17).unwrap(), a);
        assert_eq!(a, 50.0 * p.summary().cross_term(20, 30).unwrap() as f64);
    }

    #[test]
    fn constant_modulus_kills_slice_sidelobes() {
        let p = ScenarioParams::new(singer_mask(5).unwrap(), 8, 1.0).unwrap();
        let slice = moderate_slice(&p, 3).unwrap();
        assert!(slice[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn blanked_comb_bin() {
        let p = ScenarioParams::new(comb_mask(63, 3).unwrap(), 50, 1.32).unwrap();
        assert!(moderate_slice(&p, 3).unwrap().iter().all(|&v| v == 0.0));
        let p6 = ScenarioParams::new(comb_mask(6, 3).unwrap(), 4, 1.32).unwrap();
        assert!(grating_lobes(&p6, 3).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grating_lobe_sum() {
        let p = ScenarioParams::new(singer_mask(3).unwrap(), 4, 1.0).unwrap();
        let lobes = grating_lobes(&p, 1).unwrap();
        let sum: f64 = lobes[1..].iter().sum();
        assert!((sum - 160.0).abs() < 1e-9);
        let main = moderate_slice(&p, 1).unwrap()[0];
        assert!((lobes[0] - main).abs() < 1e-12);
        for (n, v) in lobes.iter().enumerate() {
            let direct = expected_response(&p, 1, 1, n * 4).unwrap();
            assert!((v - direct).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn errors() {
        let p = singer6();
        assert_eq!(expected_response(&p, 0, 3, 0), Err(ResponseError::Delay(SpectraError::BlindRange)));
        assert_eq!(expected_response(&p, 3, 0, 0), Err(ResponseError::Delay(SpectraError::BlindRange)));
        assert_eq!(expected_response(&p, 3, 3, 3150), Err(ResponseError::DopplerOutOfRange { nu: 3150, limit: 3150 }));
        assert!(matches!(expected_response(&p, 63, 3, 0), Err(ResponseError::Delay(_))));
        assert_eq!(ScenarioParams::new(singer_mask(3).unwrap(), 0, 1.0).unwrap_err(), ResponseError::NoPulses);
        assert!(ScenarioParams::new(singer_mask(3).unwrap(), 2, 0.9).is_err());
        assert!(ScenarioParams::new(singer_mask(3).unwrap(), 2, f64::NAN).is_err());
        assert_eq!(build_grid(&p, &[], &[1], &[0]).unwrap_err(), ResponseError::EmptyIndexSet("k"));
        assert!(build_grid(&p, &[1], &[0], &[0]).is_err());
    }

    #[test]
    fn grid_matches_pointwise_evaluation() {
        let p = singer6();
        let l_set: Vec<usize> = (1..63).collect();
        let nu_set: Vec<usize> = (0..10).collect();
        let g = build_grid(&p, &[20], &l_set, &nu_set).unwrap();
        assert_eq!(g.len(), 62 * 10);
        for (li, &l) in l_set.iter().enumerate() {
            for (vi, &nu) in nu_set.iter().enumerate() {
                assert_eq!(g.get(0, li, vi), expected_response(&p, 20, l, nu).unwrap());
            }
            if l != 20 {
                assert!(nu_set.iter().enumerate().all(|(vi, _)| g.get(0, li, vi) == g.get(0, li, 0)));
            }
        }
        assert_eq!(g.regime(50), DopplerRegime::Moderate);
        let global = build_grid(&p, &[5], &[5], &[0, 50, 51]).unwrap();
        assert_eq!(global.regime(50), DopplerRegime::High);
        assert!((global.get(0, 0, 2) - 256.0).abs() < 1e-9);
    }

    #[test]
    fn csv_layout() {
        let p = ScenarioParams::new(singer_mask(3).unwrap(), 2, 1.32).unwrap();
        let g = build_grid(&p, &[1], &[1, 2], &[0, 1]).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,l,nu,value");
        assert_eq!(lines.len(), 5);
        // M^2 (rho N - a)^2 + (mu4 - 1) M (rho N - a) = 16 + 0.32 * 4
        assert_eq!(lines[1], "1,1,0,1.72800000000e1");
    }
}
