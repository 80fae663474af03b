//! Symbol-level Monte Carlo oracle for `E{|r(k,l,nu)|^2}`.
//!
//! Nothing here uses the closed forms: streams are drawn symbol by symbol,
//! `r(k,l,nu)` is evaluated straight from its defining sum, and the
//! second moment is estimated with a standard error.
//!
//! Reproducibility: trial `t` of a run seeded with `s` draws from the
//! ChaCha8 stream `(s, t)`, so serial and parallel runs produce the same
//! per-trial values, and the reduction runs serially in trial order.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::csvfmt::sci;
use crate::masks::Mask;
use crate::response::{self, GridSource, ResponseError, ResponseGrid, ScenarioParams};
use crate::spectra::{self, SpectraError};

/// Tolerance on the constellation moment identities.
pub const MOMENT_TOLERANCE: f64 = 1e-12;

/// Default cap on `points * trials * MN` for one validation run.
pub const DEFAULT_BUDGET: u64 = 5_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error("unknown constellation {0:?} (expected qpsk, qam16 or qam64)")]
    UnknownConstellation(String),
    #[error("constellation violates {moment}: {value:e}")]
    InvalidConstellation { moment: &'static str, value: f64 },
    #[error("at least 2 trials are needed, got {0}")]
    TooFewTrials(u64),
    #[error("Doppler bin {nu} outside 0..{limit}")]
    DopplerOutOfRange { nu: usize, limit: usize },
    #[error(transparent)]
    Delay(#[from] SpectraError),
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error("scenario mu4 {scenario} does not match constellation mu4 {constellation}")]
    Mu4Mismatch { scenario: f64, constellation: f64 },
    #[error("simulation needs {required} symbol operations, budget is {budget}")]
    BudgetExceeded { required: u64, budget: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstellationName {
    Qpsk,
    Qam16,
    Qam64,
    Custom,
}

impl fmt::Display for ConstellationName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstellationName::Qpsk => "qpsk",
            ConstellationName::Qam16 => "qam16",
            ConstellationName::Qam64 => "qam64",
            ConstellationName::Custom => "custom",
        })
    }
}

impl FromStr for ConstellationName {
    type Err = MonteCarloError;

    fn from_str(s: &str) -> Result<Self, MonteCarloError> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" | "qam4" => Ok(ConstellationName::Qpsk),
            "qam16" | "16qam" => Ok(ConstellationName::Qam16),
            "qam64" | "64qam" => Ok(ConstellationName::Qam64),
            _ => Err(MonteCarloError::UnknownConstellation(s.to_string())),
        }
    }
}

/// Equiprobable unit-energy symbol alphabet with zero mean and zero
/// pseudo-variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    name: ConstellationName,
    points: Vec<Complex64>,
    mu4: f64,
    mu4_ratio: Option<(u64, u64)>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Constellation {
    /// Built-in square QAM alphabets (QPSK is 4-QAM).
    pub fn named(name: ConstellationName) -> Result<Self, MonteCarloError> {
        let side = match name {
            ConstellationName::Qpsk => 2,
            ConstellationName::Qam16 => 4,
            ConstellationName::Qam64 => 8,
            ConstellationName::Custom => return Err(MonteCarloError::UnknownConstellation("custom".into())),
        };
        Ok(Self::square_qam(name, side))
    }

    pub fn qpsk() -> Self {
        Self::square_qam(ConstellationName::Qpsk, 2)
    }

    pub fn qam16() -> Self {
        Self::square_qam(ConstellationName::Qam16, 4)
    }

    pub fn qam64() -> Self {
        Self::square_qam(ConstellationName::Qam64, 8)
    }

    // Odd-integer lattice {±1, ±3, ...}^2; moments are exact rationals
    // before scaling.
    fn square_qam(name: ConstellationName, side: i64) -> Self {
        let levels: Vec<i64> = (0..side).map(|i| 2 * i - (side - 1)).collect();
        let lattice: Vec<(i64, i64)> = levels.iter().flat_map(|&i| levels.iter().map(move |&q| (i, q))).collect();
        let count = lattice.len() as u64;
        let second: u64 = lattice.iter().map(|&(i, q)| (i * i + q * q) as u64).sum();
        let fourth: u64 = lattice.iter().map(|&(i, q)| ((i * i + q * q) as u64).pow(2)).sum();
        let (num, den) = (count * fourth, second * second);
        let g = gcd(num, den);
        let scale = (count as f64 / second as f64).sqrt();
        let points = lattice.iter().map(|&(i, q)| Complex64::new(i as f64 * scale, q as f64 * scale)).collect();
        Constellation { name, points, mu4: num as f64 / den as f64, mu4_ratio: Some((num / g, den / g)) }
    }

    /// A user alphabet, taken as given and validated.
    pub fn custom(points: Vec<Complex64>) -> Result<Self, MonteCarloError> {
        if points.is_empty() {
            return Err(MonteCarloError::InvalidConstellation { moment: "non-empty alphabet", value: 0.0 });
        }
        let n = points.len() as f64;
        let mu4 = points.iter().map(|p| p.norm_sqr().powi(2)).sum::<f64>() / n;
        let c = Constellation { name: ConstellationName::Custom, points, mu4, mu4_ratio: None };
        c.validate()?;
        Ok(c)
    }

    /// A user alphabet rescaled to unit average energy, then validated.
    pub fn custom_normalized(points: Vec<Complex64>) -> Result<Self, MonteCarloError> {
        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len().max(1) as f64;
        if energy.is_nan() || energy <= 0.0 {
            return Err(MonteCarloError::InvalidConstellation { moment: "unit energy", value: energy });
        }
        let scale = energy.sqrt().recip();
        Self::custom(points.into_iter().map(|p| p * scale).collect())
    }

    pub fn name(&self) -> ConstellationName {
        self.name
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// `E{|x|^4}` for unit-energy symbols.
    pub fn mu4(&self) -> f64 {
        self.mu4
    }

    /// `mu4` as a reduced fraction, for the built-in lattice alphabets.
    pub fn mu4_ratio(&self) -> Option<(u64, u64)> {
        self.mu4_ratio
    }

    pub fn mean(&self) -> Complex64 {
        self.points.iter().sum::<Complex64>() / self.points.len() as f64
    }

    pub fn pseudo_variance(&self) -> Complex64 {
        self.points.iter().map(|p| p * p).sum::<Complex64>() / self.points.len() as f64
    }

    pub fn energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Checks zero mean, zero pseudo-variance, unit energy and `mu4 >= 1`.
    pub fn validate(&self) -> Result<(), MonteCarloError> {
        let mean = self.mean().norm();
        if mean > MOMENT_TOLERANCE {
            return Err(MonteCarloError::InvalidConstellation { moment: "zero mean", value: mean });
        }
        let pv = self.pseudo_variance().norm();
        if pv > MOMENT_TOLERANCE {
            return Err(MonteCarloError::InvalidConstellation { moment: "zero pseudo-variance", value: pv });
        }
        let energy = self.energy();
        if (energy - 1.0).abs() > MOMENT_TOLERANCE {
            return Err(MonteCarloError::InvalidConstellation { moment: "unit energy", value: energy });
        }
        if self.mu4 < 1.0 - MOMENT_TOLERANCE {
            return Err(MonteCarloError::InvalidConstellation { moment: "mu4 >= 1", value: self.mu4 });
        }
        Ok(())
    }
}

impl FromStr for Constellation {
    type Err = MonteCarloError;

    fn from_str(s: &str) -> Result<Self, MonteCarloError> {
        Constellation::named(s.parse()?)
    }
}

/// Seed for item `index` of a run seeded with `master` (SplitMix64 finaliser).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Masked symbols `x_i` for `i = -(N-1) .. MN-1`.
///
/// Negative indices are the tail of the previous CPI's stream: fresh,
/// independent symbols, never a cyclic copy.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    lead: usize,
    symbols: Vec<Complex64>,
}

impl SymbolStream {
    /// `x_i`; panics outside the drawn range.
    #[inline]
    pub fn at(&self, i: i64) -> Complex64 {
        self.symbols[(i + self.lead as i64) as usize]
    }

    /// First index held, `-(N-1)`.
    pub fn start(&self) -> i64 {
        -(self.lead as i64)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }
}

fn draw_with(mask: &Mask, pulses: usize, constellation: &Constellation, rng: &mut ChaCha8Rng) -> SymbolStream {
    let n = mask.period();
    let lead = n - 1;
    let points = constellation.points();
    let symbols = (-(lead as i64)..(pulses * n) as i64)
        .map(|i| if mask.at(i) == 1 { points[rng.gen_range(0..points.len())] } else { Complex64::new(0.0, 0.0) })
        .collect();
    SymbolStream { lead, symbols }
}

/// Draws i.i.d. uniform symbols on the mask's transmit slots, zeros
/// elsewhere; deterministic in `seed`.
pub fn draw_stream(mask: &Mask, pulses: usize, constellation: &Constellation, seed: u64) -> SymbolStream {
    draw_with(mask, pulses, constellation, &mut trial_rng(seed, 0))
}

/// A single point target seen through a masked CPI.
#[derive(Debug, Clone)]
pub struct EchoScenario {
    pub mask: Mask,
    pub pulses: usize,
    pub constellation: Constellation,
    /// `k_0`, the target's delay bin.
    pub true_delay: usize,
    /// `nu_0`, the target's Doppler bin.
    pub true_doppler: usize,
    /// `nu_t`, the Doppler hypothesis of the correlator.
    pub trial_doppler: usize,
}

impl EchoScenario {
    pub fn new(
        mask: Mask,
        pulses: usize,
        constellation: Constellation,
        true_delay: usize,
        true_doppler: usize,
        trial_doppler: usize,
    ) -> Result<Self, MonteCarloError> {
        if pulses == 0 {
            return Err(ResponseError::NoPulses.into());
        }
        spectra::check_delay(true_delay, mask.period())?;
        let limit = pulses * mask.period();
        for nu in [true_doppler, trial_doppler] {
            if nu >= limit {
                return Err(MonteCarloError::DopplerOutOfRange { nu, limit });
            }
        }
        Ok(EchoScenario { mask, pulses, constellation, true_delay, true_doppler, trial_doppler })
    }

    pub fn cpi_len(&self) -> usize {
        self.pulses * self.mask.period()
    }

    /// Doppler mismatch `nu = nu_t - nu_0`, mod MN.
    pub fn mismatch(&self) -> usize {
        let len = self.cpi_len();
        (self.trial_doppler + len - self.true_doppler) % len
    }
}

/// Precomputed correlator for one `(scenario, l)`: the sample positions
/// where `m_r[n] m_t[n-k0] m_t[n-l] = 1` and their phase factors.
struct Correlator {
    delay: i64,
    reference: i64,
    taps: Vec<(i64, Complex64)>,
}

impl Correlator {
    fn new(s: &EchoScenario, l: usize) -> Result<Self, MonteCarloError> {
        spectra::check_delay(l, s.mask.period())?;
        let len = s.cpi_len();
        let nu = s.mismatch();
        let table = spectra::twiddles(len);
        let (k, l) = (s.true_delay as i64, l as i64);
        let taps = (0..len as i64)
            .filter(|&n| s.mask.at(n) == 0 && s.mask.at(n - k) == 1 && s.mask.at(n - l) == 1)
            .map(|n| (n, table[(nu * n as usize) % len]))
            .collect();
        Ok(Correlator { delay: k, reference: l, taps })
    }

    fn eval(&self, stream: &SymbolStream) -> Complex64 {
        self.taps.iter().map(|&(n, w)| stream.at(n - self.delay) * stream.at(n - self.reference).conj() * w).sum()
    }
}

/// `r(k0, l, nu_t - nu_0)` for one realisation of the symbol stream.
pub fn correlate(scenario: &EchoScenario, stream: &SymbolStream, l: usize) -> Result<Complex64, MonteCarloError> {
    Ok(Correlator::new(scenario, l)?.eval(stream))
}

/// Sample mean of `|r|^2` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean_sq: f64,
    /// Standard error of the mean, from the unbiased sample variance.
    pub se: f64,
    pub trials: u64,
    pub seed: u64,
}

fn summarize(samples: &[f64], seed: u64) -> McEstimate {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    McEstimate { mean_sq: mean, se: (var / n).sqrt(), trials: samples.len() as u64, seed }
}

/// Estimates `E{|r(k0, l, nu)|^2}` over `trials` independent streams.
pub fn estimate(scenario: &EchoScenario, l: usize, trials: u64, seed: u64) -> Result<McEstimate, MonteCarloError> {
    if trials < 2 {
        return Err(MonteCarloError::TooFewTrials(trials));
    }
    let corr = Correlator::new(scenario, l)?;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let stream = draw_with(&scenario.mask, scenario.pulses, &scenario.constellation, &mut trial_rng(seed, t));
            corr.eval(&stream).norm_sqr()
        })
        .collect();
    Ok(summarize(&samples, seed))
}

/// Work estimate used for the budget check.
pub fn simulation_cost(points: usize, trials: u64, cpi_len: usize) -> u64 {
    (points as u64).saturating_mul(trials).saturating_mul(cpi_len as u64)
}

fn check_mu4(p: &ScenarioParams, c: &Constellation) -> Result<(), MonteCarloError> {
    if (p.mu4() - c.mu4()).abs() > MOMENT_TOLERANCE {
        return Err(MonteCarloError::Mu4Mismatch { scenario: p.mu4(), constellation: c.mu4() });
    }
    Ok(())
}

/// Monte Carlo counterpart of [`response::build_grid`]. Point `i` (storage
/// order) uses seed `derive_seed(seed, i)`; the target sits at `nu_0 = 0`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_grid(
    p: &ScenarioParams,
    constellation: &Constellation,
    k_set: &[usize],
    l_set: &[usize],
    nu_set: &[usize],
    trials: u64,
    seed: u64,
    budget: u64,
) -> Result<ResponseGrid, MonteCarloError> {
    response::check_index_sets(p, k_set, l_set, nu_set)?;
    check_mu4(p, constellation)?;
    if trials < 2 {
        return Err(MonteCarloError::TooFewTrials(trials));
    }
    let points: Vec<(usize, usize, usize)> =
        k_set.iter().flat_map(|&k| l_set.iter().flat_map(move |&l| nu_set.iter().map(move |&nu| (k, l, nu)))).collect();
    let required = simulation_cost(points.len(), trials, p.cpi_len());
    if required > budget {
        return Err(MonteCarloError::BudgetExceeded { required, budget });
    }
    let mut values = Vec::with_capacity(points.len());
    let mut se = Vec::with_capacity(points.len());
    for (i, &(k, l, nu)) in points.iter().enumerate() {
        let scenario = EchoScenario::new(p.mask().clone(), p.pulses(), constellation.clone(), k, 0, nu)?;
        let est = estimate(&scenario, l, trials, derive_seed(seed, i as u64))?;
        values.push(est.mean_sq);
        se.push(est.se);
    }
    Ok(ResponseGrid {
        k_set: k_set.to_vec(),
        l_set: l_set.to_vec(),
        nu_set: nu_set.to_vec(),
        values,
        source: GridSource::MonteCarlo,
        se: Some(se),
        trials: Some(trials),
    })
}

/// One grid point compared against the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedPoint {
    pub k: usize,
    pub l: usize,
    pub nu: usize,
    pub mc_mean: f64,
    pub mc_se: f64,
    pub trials: u64,
    pub closed_form: f64,
    /// `(mc - closed) / se`; for deterministic points (`se` ~ 0) this is 0
    /// on agreement and infinite otherwise.
    pub z: f64,
}

/// Relative tolerance for points whose `|r|^2` does not vary.
const DETERMINISTIC_TOLERANCE: f64 = 1e-9;

pub fn z_score(mc_mean: f64, se: f64, closed: f64) -> f64 {
    let scale = closed.abs().max(1.0);
    if se <= DETERMINISTIC_TOLERANCE * scale {
        let diff = mc_mean - closed;
        if diff.abs() <= DETERMINISTIC_TOLERANCE * scale {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    } else {
        (mc_mean - closed) / se
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    pub trials: u64,
    pub seed: u64,
    /// Points with `|z|` above this are flagged.
    pub z_threshold: f64,
    /// The run passes when at most this fraction of points is flagged.
    pub max_flagged_fraction: f64,
    pub budget: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            trials: 10_000,
            seed: 0,
            z_threshold: 3.0,
            max_flagged_fraction: 0.02,
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub points: Vec<ValidatedPoint>,
    pub config: ValidationConfig,
}

impl ValidationReport {
    pub fn flagged(&self) -> usize {
        self.points.iter().filter(|p| p.z.is_nan() || p.z.abs() > self.config.z_threshold).count()
    }

    pub fn flagged_fraction(&self) -> f64 {
        self.flagged() as f64 / self.points.len().max(1) as f64
    }

    pub fn passed(&self) -> bool {
        self.flagged_fraction() <= self.config.max_flagged_fraction
    }

    pub fn max_abs_z(&self) -> f64 {
        self.points.iter().map(|p| p.z.abs()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "k,l,nu,mc_mean,mc_se,trials,closed_form,z")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.k,
                p.l,
                p.nu,
                sci(p.mc_mean),
                sci(p.mc_se),
                p.trials,
                sci(p.closed_form),
                sci(p.z)
            )?;
        }
        Ok(())
    }
}

/// Simulates every grid point and scores it against the closed form.
pub fn validate_grid(
    p: &ScenarioParams,
    constellation: &Constellation,
    k_set: &[usize],
    l_set: &[usize],
    nu_set: &[usize],
    config: ValidationConfig,
) -> Result<ValidationReport, MonteCarloError> {
    let mc = simulate_grid(p, constellation, k_set, l_set, nu_set, config.trials, config.seed, config.budget)?;
    let closed = response::build_grid(p, k_set, l_set, nu_set)?;
    let se = mc.se.as_ref().expect("monte carlo grid carries standard errors");
    let points = mc
        .points()
        .zip(mc.values.iter().zip(se))
        .zip(&closed.values)
        .map(|(((k, l, nu), (&mean, &s)), &cf)| ValidatedPoint {
            k,
            l,
            nu,
            mc_mean: mean,
            mc_se: s,
            trials: config.trials,
            closed_form: cf,
            z: z_score(mean, s, cf),
        })
        .collect();
    Ok(ValidationReport { points, config })
}
