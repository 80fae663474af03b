//! Mask quality metrics and bound certificates.
//!
//! Doppler-sidelobe aggregates use the per-period normalisation
//!
//! ```text
//! g(a[k]) = f(a[k]) + (N - 1)(mu4 - 1)(rho N - a[k]),   f(a) = (rho N - a)(N - rho N + a)
//! I = sum_{k=1}^{N-1} g(a[k]),   J = max_k g(a[k])
//! ```
//!
//! in which the bounds
//! `I <= rho(1-rho)N^2 (N - rho(1-rho)N^2/(N-1) + (N-1)(mu4-1))` (equality
//! for cyclic difference sets) and
//! `I >= rho(1-rho)^2 N^3 + (mu4-1) rho(1-rho) N^2 (N-1)` (equality for
//! combs) are exact. [`cpi_doppler_sidelobe_sum`] gives the same sum in CPI
//! units, `sum_k sum_{n=1}^{N-1} E{|r(k,k,nM)|^2}`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::csvfmt::sci;
use crate::masks::{detect_comb, verify_cds, Mask};
use crate::response::{expected_response, ResponseError, ScenarioParams};
use crate::spectra::{doppler_energy_exact, SpectralSummary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("average range sidelobe needs N >= 3, got N = {0}")]
    PeriodTooShort(usize),
    #[error("compare needs at least two masks")]
    TooFewMasks,
    #[error("unknown normalization {0:?} (expected none, by_rho or by_mainlobe)")]
    UnknownNormalization(String),
    #[error(transparent)]
    Response(#[from] ResponseError),
}

/// Spread of the zero-Doppler mainlobe `E{|r(k,k,0)|^2}` over `k = 1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fluctuation {
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// `max / min`; infinite when some range bin is fully blanked.
    pub peak_to_peak_ratio: f64,
    /// Population variance over `k`.
    pub variance: f64,
}

pub fn mainlobe_fluctuation(p: &ScenarioParams) -> Fluctuation {
    let values: Vec<f64> = (1..p.period()).map(|k| expected_response(p, k, k, 0).expect("valid delay")).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    // exactly zero for a flat profile
    let variance =
        if min == max { 0.0 } else { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64 };
    let peak_to_peak_ratio = if min > 0.0 { max / min } else { f64::INFINITY };
    Fluctuation { values, min, max, peak_to_peak_ratio, variance }
}

/// `max_{k != l} M R_{k,l}`; Doppler-independent.
pub fn peak_range_sidelobe(p: &ScenarioParams) -> f64 {
    p.pulses() as f64 * p.summary().max_off_diagonal_cross() as f64
}

/// Mean range sidelobe per period,
/// `rho(1-rho)(rho N - 1) N^2 / ((N-1)(N-2))`. Mask independent.
pub fn avg_range_sidelobe(period: usize, duty: f64) -> Result<f64, MetricsError> {
    if period < 3 {
        return Err(MetricsError::PeriodTooShort(period));
    }
    let n = period as f64;
    Ok(duty * (1.0 - duty) * (duty * n - 1.0) * n * n / ((n - 1.0) * (n - 2.0)))
}

/// Brute-force mean of `R_{k,l}` over `k != l`.
pub fn mean_cross_term(summary: &SpectralSummary) -> f64 {
    let n = summary.period();
    summary.off_diagonal_cross_sum() as f64 / ((n - 1) * (n - 2)) as f64
}

/// `g(a) = f(a) + (N - 1)(mu4 - 1)(w - a)`.
pub fn g_value(period: usize, weight: usize, a: usize, mu4: f64) -> f64 {
    doppler_energy_exact(period, weight, a) as f64 + (period - 1) as f64 * (mu4 - 1.0) * (weight - a) as f64
}

/// `I` with its universal bounds and exact equality flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerSidelobeSum {
    pub value: f64,
    pub upper: f64,
    pub lower: f64,
    /// `sum_k f(a[k])`, exact.
    pub deterministic: u64,
    pub attains_upper: bool,
    pub attains_lower: bool,
}

pub fn i_upper(period: usize, weight: usize, mu4: f64) -> f64 {
    let n = period as f64;
    let spread = (weight * (period - weight)) as f64; // rho(1-rho)N^2
    spread * (n - spread / (n - 1.0) + (n - 1.0) * (mu4 - 1.0))
}

pub fn i_lower(period: usize, weight: usize, mu4: f64) -> f64 {
    let n = period as f64;
    let silent = (period - weight) as f64;
    let spread = weight as f64 * silent; // rho(1-rho)N^2
    weight as f64 * silent * silent + (mu4 - 1.0) * spread * (n - 1.0)
}

pub fn doppler_sidelobe_sum(mask: &Mask, mu4: f64) -> DopplerSidelobeSum {
    doppler_sidelobe_sum_from(&SpectralSummary::new(mask), mu4)
}

pub fn doppler_sidelobe_sum_from(s: &SpectralSummary, mu4: f64) -> DopplerSidelobeSum {
    let (n, w) = (s.period(), s.weight());
    let deterministic: u64 = (1..n).map(|k| s.doppler_energy(k)).sum();
    // sum_k (w - a[k]) = w (N - w) for every mask
    let floor_sum = (w * (n - w)) as f64;
    let value = deterministic as f64 + (n - 1) as f64 * (mu4 - 1.0) * floor_sum;
    // Equalities on the mask-dependent part, in integers:
    // upper f-part = w(N-w)(N(N-1) - w(N-w)) / (N-1), lower f-part = w(N-w)^2.
    let (n64, w64) = (n as u64, w as u64);
    let spread = w64 * (n64 - w64);
    let attains_upper = deterministic * (n64 - 1) == spread * (n64 * (n64 - 1) - spread);
    let attains_lower = deterministic == w64 * (n64 - w64) * (n64 - w64);
    DopplerSidelobeSum {
        value,
        upper: i_upper(n, w, mu4),
        lower: i_lower(n, w, mu4),
        deterministic,
        attains_upper,
        attains_lower,
    }
}

/// The same aggregate in CPI units:
/// `M^2 sum_k f(a[k]) + M (N-1)(mu4-1) sum_k (rho N - a[k])`.
pub fn cpi_doppler_sidelobe_sum(p: &ScenarioParams) -> f64 {
    let s = doppler_sidelobe_sum_from(p.summary(), p.mu4());
    let m = p.pulses() as f64;
    let (n, w) = (p.period(), p.summary().weight());
    m * m * s.deterministic as f64 + m * (n - 1) as f64 * (p.mu4() - 1.0) * (w * (n - w)) as f64
}

/// `J = max_k g(a[k])`.
pub fn worst_case_j(mask: &Mask, mu4: f64) -> f64 {
    worst_case_j_from(&SpectralSummary::new(mask), mu4)
}

pub fn worst_case_j_from(s: &SpectralSummary, mu4: f64) -> f64 {
    (1..s.period()).map(|k| g_value(s.period(), s.weight(), s.a(k), mu4)).fold(f64::NEG_INFINITY, f64::max)
}

/// Whether `min_{k != 0} a[k] >= (rho - 1/2) N`, the region where `g` is
/// decreasing in `a`. Checked in integers as `2 min a >= 2w - N`.
pub fn monotonicity_check(mask: &Mask) -> bool {
    let a = crate::spectra::autocorr(mask);
    let min = *a[1..].iter().min().expect("period >= 2");
    2 * min as i64 >= 2 * mask.weight() as i64 - mask.period() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    None,
    /// Divide by the duty cycle.
    ByRho,
    /// Divide by the zero-Doppler mainlobe of the same range bin.
    ByMainlobe,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::None => "none",
            Normalization::ByRho => "by_rho",
            Normalization::ByMainlobe => "by_mainlobe",
        })
    }
}

impl FromStr for Normalization {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, MetricsError> {
        match s {
            "none" => Ok(Normalization::None),
            "by_rho" | "rho" => Ok(Normalization::ByRho),
            "by_mainlobe" | "mainlobe" => Ok(Normalization::ByMainlobe),
            _ => Err(MetricsError::UnknownNormalization(s.to_string())),
        }
    }
}

/// Mean mainlobe Doppler sidelobe over `nu = 1..MN`, per range bin.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanDopplerSidelobe {
    pub normalization: Normalization,
    /// Entry `i` is range bin `k = i + 1`.
    pub per_k: Vec<f64>,
    pub worst: f64,
    pub worst_k: usize,
}

/// Uses `sum_{nu=1}^{MN-1} |S_{k,MN}(nu)|^2 = M^2 f(a[k])`, so each mean is
/// `M^2 f(a[k]) / (MN - 1) + (mu4 - 1) M (rho N - a[k])`. A blanked bin
/// (zero mainlobe) has zero sidelobes and reports 0 under `ByMainlobe`.
pub fn mean_doppler_sidelobe(p: &ScenarioParams, normalization: Normalization) -> MeanDopplerSidelobe {
    let m = p.pulses() as f64;
    let bins = (p.cpi_len() - 1) as f64;
    let s = p.summary();
    let per_k: Vec<f64> = (1..p.period())
        .map(|k| {
            let mean = if bins > 0.0 { m * m * s.doppler_energy(k) as f64 / bins + p.random_floor(k) } else { 0.0 };
            match normalization {
                Normalization::None => mean,
                Normalization::ByRho => mean / s.duty(),
                Normalization::ByMainlobe => {
                    let main = expected_response(p, k, k, 0).expect("valid delay");
                    if main > 0.0 {
                        mean / main
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect();
    let (worst_k, worst) =
        per_k.iter().enumerate().fold((1, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i + 1, v) } else { acc });
    MeanDopplerSidelobe { normalization, per_k, worst, worst_k }
}

/// One row of the per-`k` table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerK {
    pub k: usize,
    pub a: usize,
    pub f: u64,
    pub g: f64,
}

/// Everything reported for one mask in a given scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mask_id: String,
    pub period: usize,
    pub weight: usize,
    pub duty: f64,
    pub is_cds: bool,
    pub lambda: Option<usize>,
    pub comb: Option<(usize, usize)>,
    pub fluctuation: Fluctuation,
    pub psl_range: f64,
    pub avg_range_sidelobe: f64,
    pub doppler_sum: DopplerSidelobeSum,
    pub cpi_doppler_sum: f64,
    pub j_value: f64,
    pub monotone: bool,
    pub per_k: Vec<PerK>,
    pub mean_doppler_sidelobe: MeanDopplerSidelobe,
}

impl MetricsReport {
    pub fn new(
        mask_id: impl Into<String>,
        p: &ScenarioParams,
        normalization: Normalization,
    ) -> Result<Self, MetricsError> {
        let mask = p.mask();
        let s = p.summary();
        let cds = verify_cds(mask);
        let (n, w) = (mask.period(), mask.weight());
        let per_k =
            (1..n).map(|k| PerK { k, a: s.a(k), f: s.doppler_energy(k), g: g_value(n, w, s.a(k), p.mu4()) }).collect();
        Ok(MetricsReport {
            mask_id: mask_id.into(),
            period: n,
            weight: w,
            duty: mask.duty(),
            is_cds: cds.is_cds,
            lambda: cds.lambda,
            comb: detect_comb(mask),
            fluctuation: mainlobe_fluctuation(p),
            psl_range: peak_range_sidelobe(p),
            avg_range_sidelobe: p.pulses() as f64 * avg_range_sidelobe(n, mask.duty())?,
            doppler_sum: doppler_sidelobe_sum_from(s, p.mu4()),
            cpi_doppler_sum: cpi_doppler_sidelobe_sum(p),
            j_value: worst_case_j_from(s, p.mu4()),
            monotone: monotonicity_check(mask),
            per_k,
            mean_doppler_sidelobe: mean_doppler_sidelobe(p, normalization),
        })
    }
}

/// Reports for several masks under a shared `M` and `mu4`, in input order.
pub fn compare(
    masks: &[(String, Mask)],
    pulses: usize,
    mu4: f64,
    normalization: Normalization,
) -> Result<Vec<MetricsReport>, MetricsError> {
    if masks.len() < 2 {
        return Err(MetricsError::TooFewMasks);
    }
    masks
        .par_iter()
        .map(|(id, mask)| {
            let p = ScenarioParams::new(mask.clone(), pulses, mu4)?;
            MetricsReport::new(id.clone(), &p, normalization)
        })
        .collect()
}

pub const REPORT_HEADER: &str = "mask_id,N,w,rho,is_cds,lambda,mainlobe_min,mainlobe_max,ptp_ratio,psl_range,avg_range_sl,I,I_lower,I_upper,J,worst_mean_doppler_sl";

pub fn write_reports_csv<W: Write>(reports: &[MetricsReport], out: &mut W) -> io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.mask_id,
            r.period,
            r.weight,
            sci(r.duty),
            r.is_cds,
            r.lambda.map(|l| l.to_string()).unwrap_or_default(),
            sci(r.fluctuation.min),
            sci(r.fluctuation.max),
            sci(r.fluctuation.peak_to_peak_ratio),
            sci(r.psl_range),
            sci(r.avg_range_sidelobe),
            sci(r.doppler_sum.value),
            sci(r.doppler_sum.lower),
            sci(r.doppler_sum.upper),
            sci(r.j_value),
            sci(r.mean_doppler_sidelobe.worst),
        )?;
    }
    Ok(())
}

/// `k,a,f,g` table for one report.
pub fn write_per_k_csv<W: Write>(report: &MetricsReport, out: &mut W) -> io::Result<()> {
    writeln!(out, "k,a,f,g,mean_doppler_sl")?;
    for (row, md) in report.per_k.iter().zip(&report.mean_doppler_sidelobe.per_k) {
        writeln!(out, "{},{},{},{},{}", row.k, row.a, row.f, sci(row.g), sci(*md))?;
    }
    Ok(())
}
