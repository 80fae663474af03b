//! N-periodic 0/1 transmission masks.
//!
//! A [`Mask`] stores one period of `m_t[n]`; all indexing is cyclic. The
//! receiver listens exactly where the transmitter is silent, see
//! [`Mask::reception`].

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::galois::{BinaryField, GaloisError};
use crate::spectra;

/// Singer masks are supported for `3 <= m <= 20`.
pub const SINGER_MIN_DEGREE: u32 = 3;
pub const SINGER_MAX_DEGREE: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("singer degree m={0} outside {SINGER_MIN_DEGREE}..={SINGER_MAX_DEGREE}")]
    DegreeOutOfRange(u32),
    #[error("comb spacing d={spacing} does not divide N={period}")]
    SpacingNotDivisor { period: usize, spacing: usize },
    #[error("comb spacing d={0} must be at least 2")]
    SpacingTooSmall(usize),
    #[error("weight w={weight} must satisfy 0 < w < N={period}")]
    WeightOutOfRange { period: usize, weight: usize },
    #[error("illegal character {ch:?} at column {column}")]
    IllegalCharacter { ch: char, column: usize },
    #[error("empty line in mask text")]
    EmptyLine,
    #[error("mask text contains no bit line")]
    MissingBits,
    #[error("mask text contains more than one bit line")]
    ExtraBits,
    #[error("invalid mask spec {0:?}")]
    InvalidSpec(String),
    #[error(transparent)]
    Field(#[from] GaloisError),
}

/// Which construction produced a mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskFamily {
    Singer,
    Comb,
    Random,
    Custom,
}

impl fmt::Display for MaskFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskFamily::Singer => "singer",
            MaskFamily::Comb => "comb",
            MaskFamily::Random => "random",
            MaskFamily::Custom => "custom",
        })
    }
}

/// One period of an N-periodic transmission mask with `0 < w < N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    bits: Vec<u8>,
    weight: usize,
    family: MaskFamily,
}

impl Mask {
    /// Builds a mask from one period of bits (each 0 or 1).
    pub fn new(bits: Vec<u8>, family: MaskFamily) -> Result<Self, MaskError> {
        if let Some((column, &b)) = bits.iter().enumerate().find(|(_, &b)| b > 1) {
            return Err(MaskError::IllegalCharacter { ch: char::from(b'0' + b.min(9)), column });
        }
        let weight = bits.iter().map(|&b| b as usize).sum();
        if weight == 0 || weight == bits.len() {
            return Err(MaskError::WeightOutOfRange { period: bits.len(), weight });
        }
        Ok(Mask { bits, weight, family })
    }

    /// Builds a mask of period `period` with ones exactly on `support`
    /// (indices taken mod `period`).
    pub fn from_support(period: usize, support: &[usize], family: MaskFamily) -> Result<Self, MaskError> {
        let mut bits = vec![0u8; period];
        for &i in support {
            bits[i % period] = 1;
        }
        Mask::new(bits, family)
    }

    pub fn period(&self) -> usize {
        self.bits.len()
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    /// Duty cycle `rho = w / N`.
    pub fn duty(&self) -> f64 {
        self.weight as f64 / self.period() as f64
    }

    pub fn family(&self) -> MaskFamily {
        self.family
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// `m_t[i]` for any integer `i`, reduced mod N.
    #[inline]
    pub fn at(&self, i: i64) -> u8 {
        self.bits[i.rem_euclid(self.bits.len() as i64) as usize]
    }

    /// Indices in `0..N` where the mask is 1.
    pub fn support(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).collect()
    }

    /// Cyclic delay by `shift`: `bits'[n] = bits[(n - shift) mod N]`.
    pub fn cyclic_shift(&self, shift: i64) -> Mask {
        let n = self.period() as i64;
        let bits = (0..n).map(|i| self.at(i - shift)).collect();
        Mask { bits, weight: self.weight, family: self.family }
    }

    /// The complementary reception mask `m_r[n] = 1 - m_t[n]`.
    pub fn reception(&self) -> ReceptionMask {
        ReceptionMask { bits: self.bits.iter().map(|&b| 1 - b).collect() }
    }

    /// Same bits, relabelled as a custom mask.
    pub fn into_custom(self) -> Mask {
        Mask { family: MaskFamily::Custom, ..self }
    }
}

impl fmt::Display for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_mask(self))
    }
}

impl FromStr for Mask {
    type Err = MaskError;

    fn from_str(s: &str) -> Result<Self, MaskError> {
        parse_mask(s)
    }
}

/// Complement of a transmission mask: the listening slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceptionMask {
    bits: Vec<u8>,
}

impl ReceptionMask {
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn period(&self) -> usize {
        self.bits.len()
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    #[inline]
    pub fn at(&self, i: i64) -> u8 {
        self.bits[i.rem_euclid(self.bits.len() as i64) as usize]
    }
}

/// Singer difference set of period `2^m - 1` realised as the trace-zero
/// exponents: `bits[i] = 1` iff `Tr(alpha^i) = 0`.
///
/// The support is a `(2^m-1, 2^(m-1)-1, 2^(m-2)-1)` cyclic difference set.
pub fn singer_mask(degree: u32) -> Result<Mask, MaskError> {
    if !(SINGER_MIN_DEGREE..=SINGER_MAX_DEGREE).contains(&degree) {
        return Err(MaskError::DegreeOutOfRange(degree));
    }
    let field = BinaryField::new(degree)?;
    let mut bits = Vec::with_capacity(field.group_order() as usize);
    for p in field.powers() {
        bits.push(1 - field.trace(p)?);
    }
    Mask::new(bits, MaskFamily::Singer)
}

/// Comb mask with ones at multiples of `spacing`.
pub fn comb_mask(period: usize, spacing: usize) -> Result<Mask, MaskError> {
    if spacing < 2 {
        return Err(MaskError::SpacingTooSmall(spacing));
    }
    if period == 0 || !period.is_multiple_of(spacing) {
        return Err(MaskError::SpacingNotDivisor { period, spacing });
    }
    let bits = (0..period).map(|n| u8::from(n % spacing == 0)).collect();
    Mask::new(bits, MaskFamily::Comb)
}

/// `weight` ones placed uniformly without replacement, reproducible from
/// `seed` on every platform (ChaCha8 stream).
pub fn random_mask(period: usize, weight: usize, seed: u64) -> Result<Mask, MaskError> {
    if weight == 0 || weight >= period {
        return Err(MaskError::WeightOutOfRange { period, weight });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<usize> = (0..period).collect();
    // partial Fisher-Yates
    for i in 0..weight {
        let j = rng.gen_range(i..period);
        slots.swap(i, j);
    }
    Mask::from_support(period, &slots[..weight], MaskFamily::Random)
}

/// Result of checking a mask for the cyclic-difference-set property.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CdsStatus {
    pub is_cds: bool,
    /// Common off-peak autocorrelation value, when it exists.
    pub lambda: Option<usize>,
}

/// A mask is a cyclic difference set iff `a[k]` is one constant for all
/// `k != 0`.
pub fn verify_cds(mask: &Mask) -> CdsStatus {
    let a = spectra::autocorr(mask);
    let lambda = a[1];
    if a[1..].iter().all(|&v| v == lambda) {
        CdsStatus { is_cds: true, lambda: Some(lambda) }
    } else {
        CdsStatus { is_cds: false, lambda: None }
    }
}

/// Detects a (possibly shifted) comb: returns `(spacing, offset)` when the
/// ones sit exactly on `offset + j * spacing`.
pub fn detect_comb(mask: &Mask) -> Option<(usize, usize)> {
    let n = mask.period();
    let w = mask.weight();
    if !n.is_multiple_of(w) {
        return None;
    }
    let spacing = n / w;
    let offset = mask.support()[0];
    let comb = (0..n).all(|i| mask.bits()[i] == u8::from(i % spacing == offset % spacing));
    comb.then_some((spacing, offset))
}

/// Parses the mask text format: `#` comment lines and exactly one line of
/// `0`/`1` characters.
pub fn parse_mask(text: &str) -> Result<Mask, MaskError> {
    let mut found: Option<Vec<u8>> = None;
    for line in text.lines() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            return Err(MaskError::EmptyLine);
        }
        if found.is_some() {
            return Err(MaskError::ExtraBits);
        }
        let bits = line
            .chars()
            .enumerate()
            .map(|(column, ch)| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(MaskError::IllegalCharacter { ch, column }),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        found = Some(bits);
    }
    Mask::new(found.ok_or(MaskError::MissingBits)?, MaskFamily::Custom)
}

/// The single bit line, without trailing newline.
pub fn serialize_mask(mask: &Mask) -> String {
    mask.bits().iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

/// A mask family string such as `singer:m=6`, `comb:N=63,d=3` or
/// `random:N=63,w=31,seed=7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskSpec {
    Singer { degree: u32 },
    Comb { period: usize, spacing: usize },
    Random { period: usize, weight: usize, seed: u64 },
}

impl MaskSpec {
    pub fn build(&self) -> Result<Mask, MaskError> {
        match *self {
            MaskSpec::Singer { degree } => singer_mask(degree),
            MaskSpec::Comb { period, spacing } => comb_mask(period, spacing),
            MaskSpec::Random { period, weight, seed } => random_mask(period, weight, seed),
        }
    }
}

impl fmt::Display for MaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskSpec::Singer { degree } => write!(f, "singer:m={degree}"),
            MaskSpec::Comb { period, spacing } => write!(f, "comb:N={period},d={spacing}"),
            MaskSpec::Random { period, weight, seed } => write!(f, "random:N={period},w={weight},seed={seed}"),
        }
    }
}

impl FromStr for MaskSpec {
    type Err = MaskError;

    fn from_str(s: &str) -> Result<Self, MaskError> {
        let bad = || MaskError::InvalidSpec(s.to_string());
        let (family, params) = s.split_once(':').ok_or_else(bad)?;
        let mut kv = std::collections::BTreeMap::new();
        for item in params.split(',') {
            let (k, v) = item.split_once('=').ok_or_else(bad)?;
            let v: u64 = v.trim().parse().map_err(|_| bad())?;
            if kv.insert(k.trim(), v).is_some() {
                return Err(bad());
            }
        }
        let mut take = |key: &str| kv.remove(key).ok_or_else(bad);
        let spec = match family.trim() {
            "singer" => MaskSpec::Singer { degree: u32::try_from(take("m")?).map_err(|_| bad())? },
            "comb" => MaskSpec::Comb { period: take("N")? as usize, spacing: take("d")? as usize },
            "random" => {
                MaskSpec::Random { period: take("N")? as usize, weight: take("w")? as usize, seed: take("seed")? }
            }
            _ => return Err(bad()),
        };
        if !kv.is_empty() {
            return Err(bad());
        }
        Ok(spec)
    }
}
