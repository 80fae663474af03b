//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero if any criterion fails.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use masklab_core::masks::{comb_mask, random_mask, singer_mask, verify_cds};
use masklab_core::metrics::{doppler_sidelobe_sum, i_lower, i_upper};
use masklab_core::montecarlo::{derive_seed, validate_grid, ValidationConfig};
use masklab_core::response::expected_response;
use masklab_core::spectra::{self, SpectralSummary};
use masklab_core::{oracle, Constellation, Mask, MaskFamily, ScenarioParams};
use num_complex::Complex64;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

/// `(id, mask)` pairs shared by several criteria.
fn suite() -> Vec<(String, Mask)> {
    let mut v: Vec<(String, Mask)> = (3..=6).map(|m| (format!("singer(m={m})"), singer_mask(m).unwrap())).collect();
    v.push(("comb(6,3)".into(), comb_mask(6, 3).unwrap()));
    v.push(("comb(63,3)".into(), comb_mask(63, 3).unwrap()));
    for seed in 0..12u64 {
        let n = 7 + (seed as usize * 11) % 50;
        let w = 1 + (seed as usize * 5) % (n - 1);
        v.push((format!("random({n},{w},seed={seed})"), random_mask(n, w, seed).unwrap()));
    }
    v
}

fn random_masks(count: usize, salt: u64) -> Vec<Mask> {
    (0..count as u64)
        .map(|i| {
            let s = derive_seed(salt, i);
            let n = 5 + (s % 60) as usize;
            let w = 1 + ((s >> 8) % (n as u64 - 1)) as usize;
            random_mask(n, w, s >> 16).unwrap()
        })
        .collect()
}

/// `f(a) + (N - 1)(mu4 - 1)(rho N - a)` for every nonzero delay, from the
/// directly counted autocorrelation.
fn per_delay_terms(mask: &Mask, mu4: f64) -> Vec<f64> {
    let n = mask.period() as f64;
    let rho = mask.weight() as f64 / n;
    oracle::autocorr(mask)[1..]
        .iter()
        .map(|&a| {
            let a = a as f64;
            (rho * n - a) * (n - rho * n + a) + (n - 1.0) * (mu4 - 1.0) * (rho * n - a)
        })
        .collect()
}

fn i_value(mask: &Mask, mu4: f64) -> f64 {
    per_delay_terms(mask, mu4).iter().sum()
}

fn j_value(mask: &Mask, mu4: f64) -> f64 {
    per_delay_terms(mask, mu4).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn ac1() -> Outcome {
    let m = singer_mask(6).map_err(|e| e.to_string())?;
    ensure(m.period() == 63 && m.weight() == 31, || format!("singer(6) has N={}, w={}", m.period(), m.weight()))?;
    let a = spectra::autocorr(&m);
    ensure(a[1..].iter().all(|&x| x == 15), || format!("a[k] = {:?}", &a[1..]))?;
    for deg in 3..=6u32 {
        let m = singer_mask(deg).map_err(|e| e.to_string())?;
        let (v, k, lambda) = ((1usize << deg) - 1, (1usize << (deg - 1)) - 1, (1usize << (deg - 2)) - 1);
        ensure(m.period() == v && m.weight() == k, || format!("singer(m={deg}) sizes"))?;
        let counts = oracle::difference_counts(&m);
        ensure(counts[0] == k && counts[1..].iter().all(|&c| c == lambda), || format!("m={deg}: {counts:?}"))?;
    }
    Ok("singer(6) is (63,31) with a[k]=15; m=3..6 pass the difference-count brute force".into())
}

fn ac2() -> Outcome {
    let mut masks: Vec<(String, Mask)> = (3..=6).map(|m| (format!("singer(m={m})"), singer_mask(m).unwrap())).collect();
    masks.push(("comb(63,3)".into(), comb_mask(63, 3).unwrap()));
    masks.extend(random_masks(200, 2).into_iter().enumerate().map(|(i, m)| (format!("random #{i}"), m)));
    for (id, m) in &masks {
        let (n, w) = (m.period(), m.weight());
        let mut total = 0usize;
        for k in 1..n as i64 {
            for l in 1..n as i64 {
                if k != l {
                    total += oracle::cross_term_cpi(m, k, l, 1);
                }
            }
        }
        // rho (1 - rho)(rho N - 1) N^2 in integers
        let expect = w * (n - w) * (w - 1);
        ensure(total == expect, || format!("{id}: sum {total}, expected {expect}"))?;
        let lib = SpectralSummary::new(m).off_diagonal_cross_sum();
        ensure(lib == expect as u64, || format!("{id}: library sum {lib}, expected {expect}"))?;
    }
    Ok(format!("exact for {} masks", masks.len()))
}

fn ac3() -> Outcome {
    let mask = singer_mask(5).unwrap();
    let pulses = 8;
    let c = Constellation::qam16();
    let p = ScenarioParams::with_constellation(mask.clone(), pulses, &c).map_err(|e| e.to_string())?;
    let len = p.cpi_len();
    for k in 1..31 {
        for l in (1..31).filter(|&l| l != k) {
            let target = (pulses * oracle::cross_term_cpi(&mask, k as i64, l as i64, 1)) as f64;
            for nu in 0..len {
                let v = expected_response(&p, k, l, nu).map_err(|e| e.to_string())?;
                ensure(v == target, || format!("(k={k}, l={l}, nu={nu}): {v} != M R = {target}"))?;
            }
        }
    }
    let mut points = BTreeSet::new();
    let mut i = 0;
    while points.len() < 50 {
        let s = derive_seed(3, i);
        i += 1;
        let k = 1 + (s % 30) as usize;
        let l = 1 + ((s >> 8) % 30) as usize;
        if k != l {
            points.insert((k, l, ((s >> 16) % len as u64) as usize));
        }
    }
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for (j, &(k, l, nu)) in points.iter().enumerate() {
        let cfg = ValidationConfig {
            trials: 10_000,
            seed: derive_seed(33, j as u64),
            budget: u64::MAX,
            ..Default::default()
        };
        let r = validate_grid(&p, &c, &[k], &[l], &[nu], cfg).map_err(|e| e.to_string())?;
        let z = r.points[0].z;
        worst = worst.max(z.abs());
        ok += usize::from(z.abs() <= 3.0);
    }
    ensure(ok * 100 >= 98 * points.len(), || format!("only {ok}/{} points within |z| <= 3", points.len()))?;
    Ok(format!("zero spread over nu for all 870 pairs; MC {ok}/50 within |z| <= 3 (max |z| {worst:.2})"))
}

fn ac4() -> Outcome {
    let cases: Vec<(Mask, usize, Vec<usize>)> = vec![
        (singer_mask(3).unwrap(), 4, (1..7).collect()),
        (singer_mask(4).unwrap(), 16, (1..15).collect()),
        (singer_mask(5).unwrap(), 8, (1..31).collect()),
        (singer_mask(6).unwrap(), 32, vec![1, 20, 62]),
        (comb_mask(6, 3).unwrap(), 64, (1..6).collect()),
        (comb_mask(63, 3).unwrap(), 4, vec![1, 3, 31]),
        (random_mask(40, 17, 4).unwrap(), 50, vec![1, 7, 39]),
    ];
    let mut checked = 0;
    for (mask, pulses, delays) in &cases {
        let mn = mask.period() * pulses;
        assert!(mn <= 2048);
        for &k in delays {
            let tiled = oracle::spectrum_mn(mask, k, *pulses);
            let base = spectra::s_kn_all(mask, k);
            for (nu, z) in tiled.iter().enumerate() {
                if nu % pulses == 0 {
                    let expect: Complex64 = base[nu / pulses] * *pulses as f64;
                    ensure((z - expect).norm() <= 1e-9 * expect.norm().max(1.0), || {
                        format!("N={} M={pulses} k={k} nu={nu}: {z} vs {expect}", mask.period())
                    })?;
                } else {
                    ensure(z.norm() <= 1e-9 * mn as f64, || {
                        format!("N={} M={pulses} k={k} nu={nu}: |S| = {:e}", mask.period(), z.norm())
                    })?;
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} bins, MN up to 2016"))
}

fn ac5() -> Outcome {
    let mut worst: f64 = 0.0;
    for (id, mask) in suite() {
        let n = mask.period() as f64;
        let rho = mask.duty();
        let a = oracle::autocorr(&mask);
        for k in 1..mask.period() {
            let energy: f64 = spectra::s_kn_all(&mask, k)[1..].iter().map(|z| z.norm_sqr()).sum();
            let ak = a[k] as f64;
            let f = (rho * n - ak) * (n - rho * n + ak);
            let err = (energy - f).abs();
            worst = worst.max(err);
            ensure(err <= 1e-6, || format!("{id} k={k}: {energy} vs {f}"))?;
            if id == "singer(m=3)" {
                ensure((energy - 10.0).abs() <= 1e-6 && f == 10.0, || format!("singer(3) k={k}: {energy}"))?;
            }
        }
    }
    Ok(format!("max deviation {worst:.1e}; singer(3) gives 10 per delay"))
}

fn ac6() -> Outcome {
    for mu4 in [1.0, 1.32] {
        for (id, mask) in suite().into_iter().filter(|(_, m)| verify_cds(m).is_cds) {
            let (n, w) = (mask.period(), mask.weight());
            let (value, upper) = (i_value(&mask, mu4), i_upper(n, w, mu4));
            ensure(rel_close(value, upper, 1e-9), || format!("{id} mu4={mu4}: I={value}, upper={upper}"))?;
            ensure(doppler_sidelobe_sum(&mask, mu4).attains_upper, || format!("{id}: equality not flagged"))?;
        }
    }
    let s3 = singer_mask(3).unwrap();
    let (v, u) = (i_value(&s3, 1.32), i_upper(7, 3, 1.32));
    ensure(rel_close(v, 83.04, 1e-12) && rel_close(u, 83.04, 1e-12), || format!("singer(3): I={v}, upper={u}"))?;
    let mut strict = 0;
    let mut seed = 0;
    while strict < 500 {
        let mask = random_masks(1, 6 + seed).remove(0);
        seed += 1;
        if verify_cds(&mask).is_cds {
            continue;
        }
        let (n, w) = (mask.period(), mask.weight());
        for mu4 in [1.0, 1.32] {
            let (value, upper) = (i_value(&mask, mu4), i_upper(n, w, mu4));
            ensure(value < upper, || format!("non-CDS N={n} w={w}: I={value} not below {upper}"))?;
            ensure(!doppler_sidelobe_sum(&mask, mu4).attains_upper, || "non-CDS flagged as attaining".into())?;
        }
        strict += 1;
    }
    Ok("CDS suite members attain the upper bound; singer(3) at mu4=1.32 gives 83.04; 500 non-CDS strictly below".into())
}

fn ac7() -> Outcome {
    for mu4 in [1.0, 1.32] {
        for (n, d) in [(6, 3), (63, 3)] {
            let mask = comb_mask(n, d).unwrap();
            let (value, lower) = (i_value(&mask, mu4), i_lower(n, n / d, mu4));
            ensure(rel_close(value, lower, 1e-12), || format!("comb({n},{d}) mu4={mu4}: I={value}, lower={lower}"))?;
            ensure(doppler_sidelobe_sum(&mask, mu4).attains_lower, || format!("comb({n},{d}): equality not flagged"))?;
        }
        for (id, mask) in suite() {
            let (value, lower) = (i_value(&mask, mu4), i_lower(mask.period(), mask.weight(), mu4));
            ensure(lower <= value + 1e-9 * value.abs().max(1.0), || format!("{id}: I={value} below lower {lower}"))?;
        }
    }
    let c = comb_mask(6, 3).unwrap();
    let (value, lower) = (i_value(&c, 1.0), i_lower(6, 2, 1.0));
    ensure(value == 32.0 && (lower - 32.0).abs() < 1e-12, || format!("comb(6,3): I={value}, lower={lower}"))?;
    Ok("comb(6,3) and comb(63,3) attain the lower bound; comb(6,3) at mu4=1 gives 32".into())
}

fn ac8() -> Outcome {
    let base = singer_mask(3).unwrap();
    let mut orbit = BTreeSet::new();
    for s in 0..7 {
        let shifted = base.cyclic_shift(s);
        orbit.insert(shifted.bits().to_vec());
        orbit.insert((0..7).map(|i| shifted.bits()[(7 - i) % 7]).collect::<Vec<u8>>());
    }
    let all = oracle::all_masks(7, 3);
    ensure(all.len() == 35, || format!("{} masks enumerated", all.len()))?;
    for mu4 in [1.0, 1.32] {
        let js: Vec<f64> =
            all.iter().map(|b| j_value(&Mask::new(b.clone(), MaskFamily::Custom).unwrap(), mu4)).collect();
        let best = js.iter().copied().fold(f64::INFINITY, f64::min);
        let winners: BTreeSet<Vec<u8>> =
            all.iter().zip(&js).filter(|(_, &j)| j == best).map(|(b, _)| b.clone()).collect();
        ensure(winners == orbit, || format!("mu4={mu4}: {} minimisers, orbit has {}", winners.len(), orbit.len()))?;
    }
    Ok(format!("minimum J over 35 masks attained exactly by the {}-mask orbit", orbit.len()))
}

fn ac9() -> Outcome {
    let q = Constellation::qpsk();
    let q16 = Constellation::qam16();
    ensure(q.mu4() == 1.0 && q.mu4_ratio() == Some((1, 1)), || format!("qpsk mu4 {}", q.mu4()))?;
    ensure(q16.mu4() == 1.32 && q16.mu4_ratio() == Some((33, 25)), || format!("qam16 mu4 {}", q16.mu4()))?;
    for c in [q, q16, Constellation::qam64()] {
        let pts = c.points();
        let n = pts.len() as f64;
        let mean: Complex64 = pts.iter().sum::<Complex64>() / n;
        let pseudo: Complex64 = pts.iter().map(|p| p * p).sum::<Complex64>() / n;
        let energy: f64 = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / n;
        let mu4: f64 = pts.iter().map(|p| p.norm_sqr().powi(2)).sum::<f64>() / n;
        ensure(mean.norm() <= 1e-12 && pseudo.norm() <= 1e-12 && (energy - 1.0).abs() <= 1e-12, || {
            format!("{:?}: mean {mean}, pseudo {pseudo}, energy {energy}", c.name())
        })?;
        ensure((mu4 - c.mu4()).abs() <= 1e-12, || format!("{:?}: direct mu4 {mu4} vs {}", c.name(), c.mu4()))?;
    }
    Ok("qpsk 1, qam16 33/25, qam64 29/21; moments within 1e-12".into())
}

fn ac10() -> Outcome {
    let mask = singer_mask(6).unwrap();
    let pulses = 50;
    let c = Constellation::qam16();
    let p = ScenarioParams::with_constellation(mask.clone(), pulses, &c).map_err(|e| e.to_string())?;
    for k in 1..63 {
        let main = expected_response(&p, k, k, 0).map_err(|e| e.to_string())?;
        ensure(rel_close(main, 640_256.0, 1e-12), || format!("mainlobe at k={k}: {main}"))?;
        for nu in 1..p.cpi_len() {
            let v = expected_response(&p, k, k, nu).map_err(|e| e.to_string())?;
            if nu % pulses == 0 {
                ensure(v > 256.0 + 1e-9, || format!("no grating lobe at k={k}, nu={nu}: {v}"))?;
            } else {
                ensure(rel_close(v, 256.0, 1e-12), || format!("sidelobe at k={k}, nu={nu}: {v}"))?;
            }
        }
    }
    for l in (1..63).filter(|&l| l != 20) {
        let first = expected_response(&p, 20, l, 0).map_err(|e| e.to_string())?;
        for nu in 1..p.cpi_len() {
            ensure(expected_response(&p, 20, l, nu).map_err(|e| e.to_string())? == first, || {
                format!("k=20, l={l} not flat")
            })?;
        }
    }
    let mut worst: f64 = 0.0;
    for (i, k) in [1usize, 13, 20, 41, 62].into_iter().enumerate() {
        let cfg = ValidationConfig {
            trials: 20_000,
            seed: derive_seed(10, i as u64),
            budget: u64::MAX,
            ..Default::default()
        };
        let r = validate_grid(&p, &c, &[k], &[k], &[0, 17], cfg).map_err(|e| e.to_string())?;
        for pt in &r.points {
            worst = worst.max(pt.z.abs());
            ensure(pt.z.abs() <= 3.0, || {
                format!("k={k}, nu={}: MC {} +- {} vs {}", pt.nu, pt.mc_mean, pt.mc_se, pt.closed_form)
            })?;
        }
    }
    Ok(format!(
        "mainlobe 640256, sidelobe 256, grating lobes at nu = 0 mod 50, flat k=20 surface; MC max |z| {worst:.2}"
    ))
}

fn ac11() -> Outcome {
    let masks = [singer_mask(3).unwrap(), random_mask(7, 2, 1).unwrap(), random_mask(7, 4, 2).unwrap()];
    let pulses = 4;
    let mut count = 0;
    for mask in &masks {
        for mu4 in [1.0, 1.32, 29.0 / 21.0] {
            let p = ScenarioParams::new(mask.clone(), pulses, mu4).map_err(|e| e.to_string())?;
            for k in 1..7 {
                for l in 1..7 {
                    for nu in 0..28 {
                        let closed = expected_response(&p, k, l, nu).map_err(|e| e.to_string())?;
                        let direct = oracle::expected_response(mask, pulses, mu4, k, l, nu);
                        ensure(rel_close(closed, direct, 1e-9), || {
                            format!("{mask} mu4={mu4} (k={k}, l={l}, nu={nu}): {closed} vs {direct}")
                        })?;
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{count} points agree"))
}

fn masklab(args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_masklab"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .env_remove("MASKLAB_MC_BUDGET")
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() && o.status.code() != Some(3) {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(o.stdout)
}

fn dir_contents(dir: &std::path::Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    Ok(files)
}

fn ac12() -> Outcome {
    let commands: &[&[&str]] = &[
        &["mask", "gen", "singer:m=6", "random:N=63,w=31,seed=7"],
        &["mask", "verify", "comb:N=63,d=3"],
        &["mask", "show", "singer:m=5"],
        &["response", "closed", "singer:m=6", "--M", "50", "--k", "20", "--l", "all", "--nu", "0..49"],
        &[
            "response",
            "mc",
            "singer:m=4",
            "--M",
            "4",
            "--k",
            "1..14:4",
            "--l",
            "all",
            "--nu",
            "0,9",
            "--trials",
            "500",
            "--seed",
            "9",
        ],
        &[
            "response",
            "both",
            "singer:m=3",
            "--M",
            "4",
            "--k",
            "all",
            "--nu",
            "0..27:3",
            "--trials",
            "2000",
            "--seed",
            "4",
        ],
        &["metrics", "singer:m=5", "comb:N=63,d=3", "--M", "8"],
        &["compare", "singer:m=6", "random:N=63,w=31,seed=7", "comb:N=63,d=3", "--M", "50"],
        &["bounds", "singer:m=5", "comb:N=63,d=3"],
    ];
    let scratch = std::env::temp_dir().join(format!("masklab-acceptance-{}", std::process::id()));
    for (i, cmd) in commands.iter().enumerate() {
        let reference = masklab(cmd, "1")?;
        for threads in ["1", "4"] {
            ensure(masklab(cmd, threads)? == reference, || format!("{cmd:?} differs with {threads} threads"))?;
        }
        let dirs: Vec<_> = (0..2).map(|r| scratch.join(format!("{i}-{r}"))).collect();
        for (d, threads) in dirs.iter().zip(["1", "4"]) {
            let mut args = cmd.to_vec();
            args.extend(["--out", d.to_str().unwrap()]);
            masklab(&args, threads)?;
        }
        let (a, b) = (dir_contents(&dirs[0])?, dir_contents(&dirs[1])?);
        ensure(!a.is_empty() && a == b, || format!("{cmd:?} wrote different files"))?;
    }
    let _ = std::fs::remove_dir_all(&scratch);
    Ok(format!("{} commands byte-identical across repeats and thread counts", commands.len()))
}

struct Criterion {
    id: &'static str,
    title: &'static str,
    limit: Option<Duration>,
    check: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: "AC1", title: "singer construction", limit: secs(1), check: ac1 },
        Criterion { id: "AC2", title: "range-sidelobe sum identity", limit: secs(5), check: ac2 },
        Criterion { id: "AC3", title: "doppler invariance off the diagonal", limit: secs(120), check: ac3 },
        Criterion { id: "AC4", title: "tiled spectrum sparsity", limit: None, check: ac4 },
        Criterion { id: "AC5", title: "doppler energy identity", limit: None, check: ac5 },
        Criterion { id: "AC6", title: "upper bound equality for difference sets", limit: None, check: ac6 },
        Criterion { id: "AC7", title: "lower bound equality for combs", limit: None, check: ac7 },
        Criterion { id: "AC8", title: "exhaustive worst-case minimiser", limit: secs(1), check: ac8 },
        Criterion { id: "AC9", title: "constellation moments", limit: None, check: ac9 },
        Criterion { id: "AC10", title: "mainlobe and sidelobe levels", limit: secs(180), check: ac10 },
        Criterion { id: "AC11", title: "moment-expansion oracle", limit: None, check: ac11 },
        Criterion { id: "AC12", title: "determinism", limit: None, check: ac12 },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => {
                Err(format!("took {:.2} s, limit {} s", elapsed.as_secs_f64(), limit.as_secs()))
            }
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("[PASS] {} {}: {detail} ({:.2} s)", c.id, c.title, elapsed.as_secs_f64()),
            Err(why) => {
                failures += 1;
                println!("[FAIL] {} {}: {why} ({:.2} s)", c.id, c.title, elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
