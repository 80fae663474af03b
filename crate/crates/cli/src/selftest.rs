//! Desk-scale consistency checks bundled with the binary.

use std::collections::HashSet;
use std::io::Write;
use std::time::Instant;

use masklab_core::masks::{comb_mask, random_mask, serialize_mask, singer_mask, MaskSpec};
use masklab_core::metrics::doppler_sidelobe_sum;
use masklab_core::montecarlo::{derive_seed, validate_grid, ValidationConfig, ValidationReport};
use masklab_core::response::expected_response;
use masklab_core::spectra::{self, SpectralSummary};
use masklab_core::{oracle, BinaryField, Constellation, FieldElement, Mask, ScenarioParams};

use crate::args::SelftestOptions;
use crate::error::CliError;
use crate::run::{check_declared, mask_file_body, mask_from_text, LoadedMask};

pub struct Check {
    pub name: &'static str,
    /// Detail line on success, diagnostic on failure.
    pub outcome: Result<String, String>,
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn suite() -> Vec<(String, Mask)> {
    let mut masks: Vec<(String, Mask)> = (3..=6).map(|m| (format!("singer:m={m}"), singer_mask(m).unwrap())).collect();
    masks.push(("comb:N=6,d=3".into(), comb_mask(6, 3).unwrap()));
    masks.push(("comb:N=63,d=3".into(), comb_mask(63, 3).unwrap()));
    for seed in 0..20 {
        let n = 5 + (seed as usize * 7) % 40;
        let w = 1 + (seed as usize * 13) % (n - 1);
        masks.push((format!("random:N={n},w={w},seed={seed}"), random_mask(n, w, seed).unwrap()));
    }
    masks
}

fn galois() -> Outcome {
    for m in 2..=20 {
        let f = BinaryField::new(m).map_err(|e| e.to_string())?;
        if m <= 12 {
            let order = f.group_order();
            let mut seen = HashSet::new();
            let mut x = FieldElement::ONE;
            for _ in 0..order {
                ensure(!x.is_zero() && seen.insert(x.bits()), || format!("GF(2^{m}): alpha has order below {order}"))?;
                x = f.mul(x, f.alpha()).map_err(|e| e.to_string())?;
            }
            ensure(x == FieldElement::ONE, || format!("GF(2^{m}): alpha^{order} != 1"))?;
        }
    }
    Ok("built-in polynomials for m=2..20 accepted; alpha generates GF(2^m)* for m<=12".into())
}

fn singer_counts() -> Outcome {
    for m in 3..=8u32 {
        let mask = singer_mask(m).map_err(|e| e.to_string())?;
        let counts = oracle::difference_counts(&mask);
        let (w, lambda) = ((1usize << (m - 1)) - 1, (1usize << (m - 2)) - 1);
        ensure(counts[0] == w && counts[1..].iter().all(|&c| c == lambda), || {
            format!("singer:m={m} difference counts {counts:?}")
        })?;
    }
    Ok("(2^m-1, 2^(m-1)-1, 2^(m-2)-1) for m=3..8".into())
}

fn sum_identities() -> Outcome {
    let masks = suite();
    for (id, mask) in &masks {
        let a = spectra::autocorr(mask);
        let w = mask.weight();
        ensure(a == oracle::autocorr(mask), || format!("{id}: autocorrelation disagrees with direct count"))?;
        ensure(a.iter().sum::<usize>() == w * w, || format!("{id}: sum of a[k] != w^2"))?;
        let summary = SpectralSummary::new(mask);
        let formula = spectra::off_diagonal_cross_sum_formula(mask.period(), w);
        ensure(summary.off_diagonal_cross_sum() == formula, || {
            format!("{id}: off-diagonal R sum {} != {formula}", summary.off_diagonal_cross_sum())
        })?;
    }
    Ok(format!("{} masks", masks.len()))
}

fn parseval() -> Outcome {
    let masks = suite();
    let mut worst: f64 = 0.0;
    for (id, mask) in &masks {
        let summary = SpectralSummary::new(mask);
        for k in 1..mask.period() {
            let s = oracle::spectrum_n(mask, k);
            let energy: f64 = s[1..].iter().map(|z| z.norm_sqr()).sum();
            let err = (energy - summary.doppler_energy(k) as f64).abs();
            worst = worst.max(err);
            ensure(err <= 1e-6, || format!("{id}, k={k}: Doppler energy {energy} vs {}", summary.doppler_energy(k)))?;
        }
    }
    Ok(format!("{} masks, max error {worst:.2e}", masks.len()))
}

fn sparsity() -> Outcome {
    let cases = [(singer_mask(3).unwrap(), 4), (singer_mask(4).unwrap(), 8), (comb_mask(6, 3).unwrap(), 16)];
    for (mask, pulses) in &cases {
        let len = (mask.period() * pulses) as f64;
        for k in 1..mask.period() {
            let tiled = oracle::spectrum_mn(mask, k, *pulses);
            for (nu, z) in tiled.iter().enumerate() {
                if nu % pulses == 0 {
                    let expect = spectra::s_kn(mask, k, nu / pulses) * *pulses as f64;
                    let err = (z - expect).norm();
                    ensure(err <= 1e-9 * expect.norm().max(1.0), || {
                        format!("N={} M={pulses} k={k} nu={nu}: {z} vs {expect}", mask.period())
                    })?;
                } else {
                    ensure(z.norm() <= 1e-9 * len, || {
                        format!("N={} M={pulses} k={k} nu={nu}: |S|={}", mask.period(), z.norm())
                    })?;
                }
            }
        }
    }
    Ok("tiled spectra vanish off multiples of M and scale by M on them".into())
}

fn moment_oracle() -> Outcome {
    let mask = singer_mask(3).unwrap();
    let pulses = 4;
    let mut count = 0;
    for mu4 in [1.0, 1.32] {
        let p = ScenarioParams::new(mask.clone(), pulses, mu4).map_err(|e| e.to_string())?;
        for k in 1..7 {
            for l in 1..7 {
                for nu in 0..28 {
                    let closed = expected_response(&p, k, l, nu).map_err(|e| e.to_string())?;
                    let brute = oracle::expected_response(&mask, pulses, mu4, k, l, nu);
                    ensure((closed - brute).abs() <= 1e-9 * brute.abs().max(1.0), || {
                        format!("mu4={mu4} k={k} l={l} nu={nu}: closed {closed}, direct {brute}")
                    })?;
                    count += 1;
                }
            }
        }
    }
    Ok(format!("{count} points of singer:m=3, M=4"))
}

fn bounds() -> Outcome {
    for mu4 in [1.0, 1.32] {
        for (id, mask) in suite() {
            let s = doppler_sidelobe_sum(&mask, mu4);
            let tol = 1e-9 * s.upper.max(1.0);
            ensure(s.lower - tol <= s.value && s.value <= s.upper + tol, || format!("{id}, mu4={mu4}: {s:?}"))?;
            if id.starts_with("singer") {
                ensure(s.attains_upper, || format!("{id}: difference set below the upper bound"))?;
            }
            if id.starts_with("comb") {
                ensure(s.attains_lower, || format!("{id}: comb above the lower bound"))?;
            }
        }
    }
    Ok("lower <= I <= upper; difference sets attain the upper bound, combs the lower".into())
}

fn monte_carlo(opts: &SelftestOptions) -> Outcome {
    let mask = singer_mask(3).unwrap();
    let c = Constellation::qam16();
    let p = ScenarioParams::with_constellation(mask, 4, &c).map_err(|e| e.to_string())?;
    let config = ValidationConfig {
        trials: opts.trials,
        seed: opts.seed,
        max_flagged_fraction: 0.0,
        budget: u64::MAX,
        ..ValidationConfig::default()
    };
    let start = Instant::now();
    let mut report = ValidationReport { points: Vec::new(), config };
    for i in 0..4u64 {
        let k = 1 + (derive_seed(opts.seed, 2 * i) % 6) as usize;
        let l = 1 + (derive_seed(opts.seed, 2 * i + 1) % 6) as usize;
        let nu = (derive_seed(opts.seed, 100 + i) % 28) as usize;
        let cfg = ValidationConfig { seed: derive_seed(opts.seed, 1000 + i), ..config };
        report.points.extend(validate_grid(&p, &c, &[k], &[k, l], &[nu], cfg).map_err(|e| e.to_string())?.points);
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed <= opts.time_budget, || format!("took {elapsed:.1} s, budget {} s", opts.time_budget))?;
    ensure(report.passed(), || {
        let bad: Vec<String> = report
            .points
            .iter()
            .filter(|pt| pt.z.abs() > report.config.z_threshold)
            .map(|pt| format!("(k={}, l={}, nu={}) z={:.2}", pt.k, pt.l, pt.nu, pt.z))
            .collect();
        format!("flagged {}", bad.join(", "))
    })?;
    Ok(format!(
        "singer:m=3, M=4, qam16, {} points x {} trials, max |z| {:.2}, {elapsed:.2} s",
        report.points.len(),
        opts.trials,
        report.max_abs_z()
    ))
}

fn corrupted_mask() -> Outcome {
    let spec = MaskSpec::Singer { degree: 4 };
    let good = LoadedMask { id: spec.to_string(), mask: spec.build().unwrap(), spec: Some(spec), declared: None };
    let text = mask_file_body(&good);
    let intact = mask_from_text("intact", &text).map_err(|e| e.to_string())?;
    check_declared(&intact).map_err(|e| format!("intact file rejected: {e}"))?;
    let bits = serialize_mask(&good.mask);
    let mut flipped = bits.clone().into_bytes();
    flipped[5] = if flipped[5] == b'1' { b'0' } else { b'1' };
    let corrupted = text.replace(&bits, std::str::from_utf8(&flipped).unwrap());
    let diagnostic = match mask_from_text("corrupted", &corrupted) {
        Ok(m) => match check_declared(&m) {
            Err(CliError::Contract(msg)) => msg,
            other => return Err(format!("flipped bit not detected: {other:?}")),
        },
        Err(e) => return Err(format!("flipped file unreadable: {e}")),
    };
    let garbled = text.replace(&bits, &bits.replacen('1', "x", 1));
    ensure(mask_from_text("garbled", &garbled).is_err(), || "illegal character accepted".into())?;
    Ok(diagnostic)
}

pub fn checks(opts: &SelftestOptions) -> Vec<Check> {
    vec![
        Check { name: "galois field tables", outcome: galois() },
        Check { name: "singer difference counts", outcome: singer_counts() },
        Check { name: "sum identities", outcome: sum_identities() },
        Check { name: "doppler energy (parseval)", outcome: parseval() },
        Check { name: "tiled spectrum sparsity", outcome: sparsity() },
        Check { name: "closed form vs moment expansion", outcome: moment_oracle() },
        Check { name: "doppler sidelobe sum bounds", outcome: bounds() },
        Check { name: "monte carlo z-check", outcome: monte_carlo(opts) },
        Check { name: "corrupted mask detection", outcome: corrupted_mask() },
    ]
}

pub fn run(opts: &SelftestOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let results = checks(opts);
    let mut failed = Vec::new();
    for c in &results {
        match &c.outcome {
            Ok(detail) => writeln!(out, "[PASS] {}: {detail}", c.name)?,
            Err(why) => {
                writeln!(out, "[FAIL] {}: {why}", c.name)?;
                failed.push(c.name);
            }
        }
    }
    writeln!(out, "{} of {} checks passed", results.len() - failed.len(), results.len())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Contract(format!("self test failed: {}", failed.join(", "))))
    }
}
