//! Command execution.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use masklab_core::csvfmt::sci;
use masklab_core::masks::{detect_comb, parse_mask, serialize_mask, verify_cds};
use masklab_core::metrics::{self, doppler_sidelobe_sum};
use masklab_core::montecarlo::{self, derive_seed, simulate_grid, validate_grid, ValidationConfig, ValidationReport};
use masklab_core::response::{self, build_grid};
use masklab_core::spectra::{self, SpectralSummary};
use masklab_core::{Constellation, Mask, MaskSpec, MetricsError, ScenarioParams, VERSION};

use crate::args::{Cli, Command, MaskAction, ResponseMode, RunOptions};
use crate::error::CliError;
use crate::{plot, selftest};

/// A mask named on the command line, with the family spec it claims to
/// come from when that is known.
#[derive(Debug, Clone)]
pub struct LoadedMask {
    pub id: String,
    pub mask: Mask,
    pub spec: Option<MaskSpec>,
    /// `# spec:` line found in a mask file.
    pub declared: Option<MaskSpec>,
}

impl LoadedMask {
    /// File-name-safe form of the id.
    pub fn slug(&self) -> String {
        let base = match self.spec {
            Some(_) => self.id.clone(),
            None => Path::new(&self.id).file_stem().map_or(self.id.clone(), |s| s.to_string_lossy().into_owned()),
        };
        base.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
    }
}

const SPEC_PREFIX: &str = "# spec:";

/// Resolves a `--mask` argument: a family spec, otherwise a mask file.
pub fn load_mask(arg: &str) -> Result<LoadedMask, CliError> {
    if let Ok(spec) = arg.parse::<MaskSpec>() {
        return Ok(LoadedMask { id: spec.to_string(), mask: spec.build()?, spec: Some(spec), declared: None });
    }
    let path = Path::new(arg);
    if !path.exists() {
        if arg.contains(':') {
            arg.parse::<MaskSpec>()?;
        }
        return Err(CliError::Config(format!("{arg:?} is neither a mask spec nor an existing file")));
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    mask_from_text(arg, &text)
}

/// Parses mask file contents, picking up a `# spec:` line if present.
pub fn mask_from_text(id: &str, text: &str) -> Result<LoadedMask, CliError> {
    let mask = parse_mask(text).map_err(|e| CliError::Config(format!("{id}: {e}")))?;
    let declared = text
        .lines()
        .find_map(|l| l.strip_prefix(SPEC_PREFIX))
        .map(|s| s.trim().parse::<MaskSpec>())
        .transpose()
        .map_err(|e| CliError::Config(format!("{id}: {e}")))?;
    Ok(LoadedMask { id: id.to_string(), mask, spec: None, declared })
}

fn load_masks(opts: &RunOptions) -> Result<Vec<LoadedMask>, CliError> {
    let args = opts.mask_args();
    if args.is_empty() {
        return Err(CliError::Config("no mask given; use --mask".into()));
    }
    args.iter().map(|a| load_mask(a)).collect()
}

fn single_mask(opts: &RunOptions) -> Result<LoadedMask, CliError> {
    let mut masks = load_masks(opts)?;
    if masks.len() != 1 {
        return Err(CliError::Config(format!("this command takes exactly one mask, got {}", masks.len())));
    }
    Ok(masks.remove(0))
}

/// Where a command's payloads go: files under `--out`, or stdout.
struct Sink<'a> {
    header: String,
    dir: Option<PathBuf>,
    stdout: &'a mut dyn Write,
    written: Vec<PathBuf>,
}

impl<'a> Sink<'a> {
    fn new(cli: &Cli, dir: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Self, CliError> {
        if let Some(d) = dir {
            fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
        }
        let header = format!("# masklab {VERSION}\n# config: {}\n# seed: {}\n", cli.canonical_line(), cli.seed());
        Ok(Sink { header, dir: dir.map(Path::to_path_buf), stdout, written: Vec::new() })
    }

    /// Writes one payload. On stdout the file name is dropped.
    fn emit(&mut self, name: &str, body: &[u8]) -> Result<(), CliError> {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                let mut bytes = self.header.clone().into_bytes();
                bytes.extend_from_slice(body);
                fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
                self.written.push(path);
            }
            None => {
                self.stdout.write_all(self.header.as_bytes())?;
                self.stdout.write_all(body)?;
            }
        }
        Ok(())
    }

    /// Human-facing text: on stdout when writing files, else on stderr so
    /// stdout stays a clean payload.
    fn note(&mut self, text: &str) -> Result<(), CliError> {
        if self.dir.is_some() {
            writeln!(self.stdout, "{text}")?;
        } else {
            eprintln!("{text}");
        }
        Ok(())
    }

    fn finish(mut self) -> Result<(), CliError> {
        for p in std::mem::take(&mut self.written) {
            writeln!(self.stdout, "wrote {}", p.display())?;
        }
        Ok(())
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Mask { action } => match action {
            MaskAction::Gen(o) => mask_gen(cli, o, stdout),
            MaskAction::Verify(o) => mask_verify(cli, o, stdout),
            MaskAction::Show(o) => mask_show(cli, o, stdout),
        },
        Command::Response { mode, opts } => response_cmd(cli, *mode, opts, stdout),
        Command::Metrics(o) => metrics_cmd(cli, o, false, stdout),
        Command::Compare(o) => metrics_cmd(cli, o, true, stdout),
        Command::Bounds(o) => bounds_cmd(cli, o, stdout),
        Command::Selftest(o) => selftest::run(o, stdout),
    }
}

fn check_plot_flag(opts: &RunOptions) -> Result<(), CliError> {
    if opts.plot_script && opts.out.is_none() {
        return Err(CliError::Config("--plot-script needs --out".into()));
    }
    Ok(())
}

/// The mask file text: spec line, parameters and the bit line.
pub fn mask_file_body(m: &LoadedMask) -> String {
    let mut s = String::new();
    if let Some(spec) = m.spec.or(m.declared) {
        s.push_str(&format!("{SPEC_PREFIX} {spec}\n"));
    }
    s.push_str(&format!("# N={} w={}\n{}\n", m.mask.period(), m.mask.weight(), serialize_mask(&m.mask)));
    s
}

fn mask_gen(cli: &Cli, opts: &RunOptions, stdout: &mut dyn Write) -> Result<(), CliError> {
    let masks = load_masks(opts)?;
    let mut sink = Sink::new(cli, opts.out.as_deref(), stdout)?;
    for m in &masks {
        sink.emit(&format!("{}.mask", m.slug()), mask_file_body(m).as_bytes())?;
    }
    sink.finish()
}

/// First disagreement between a mask and the one its declared spec builds.
pub fn check_declared(m: &LoadedMask) -> Result<(), CliError> {
    let Some(spec) = m.declared else { return Ok(()) };
    let expected = spec.build()?;
    if expected.period() != m.mask.period() {
        return Err(CliError::Contract(format!(
            "{}: declares {spec} (N={}) but holds {} bits",
            m.id,
            expected.period(),
            m.mask.period()
        )));
    }
    if let Some(i) = (0..expected.period()).find(|&i| expected.bits()[i] != m.mask.bits()[i]) {
        return Err(CliError::Contract(format!(
            "{}: does not match {spec}: bit {i} is {}, expected {}",
            m.id,
            m.mask.bits()[i],
            expected.bits()[i]
        )));
    }
    Ok(())
}

fn autocorr_table(mask: &Mask) -> String {
    let mut s = String::from("k,a\n");
    for (k, a) in spectra::autocorr(mask).iter().enumerate().skip(1) {
        s.push_str(&format!("{k},{a}\n"));
    }
    s
}

fn structure_lines(m: &LoadedMask) -> String {
    let cds = verify_cds(&m.mask);
    let lambda = cds.lambda.map_or("none".to_string(), |l| l.to_string());
    let comb = detect_comb(&m.mask).map_or("none".to_string(), |(d, off)| format!("d={d} offset={off}"));
    format!(
        "# mask: {}\n# N={} w={} rho={}\n# is_cds={} lambda={lambda}\n# comb: {comb}\n",
        m.id,
        m.mask.period(),
        m.mask.weight(),
        sci(m.mask.duty()),
        cds.is_cds
    )
}

fn mask_verify(cli: &Cli, opts: &RunOptions, stdout: &mut dyn Write) -> Result<(), CliError> {
    let masks = load_masks(opts)?;
    let mut sink = Sink::new(cli, opts.out.as_deref(), stdout)?;
    let mut failure = None;
    for m in &masks {
        let mut body = structure_lines(m);
        let status = match (check_declared(m), m.declared) {
            (Ok(()), Some(spec)) => format!("# declared spec {spec}: match\n"),
            (Ok(()), None) => String::new(),
            (Err(e), _) => {
                let line = format!("# declared spec: MISMATCH ({e})\n");
                failure.get_or_insert(e);
                line
            }
        };
        body.push_str(&status);
        body.push_str(&autocorr_table(&m.mask));
        sink.emit(&format!("{}.verify.csv", m.slug()), body.as_bytes())?;
    }
    sink.finish()?;
    failure.map_or(Ok(()), Err)
}

fn mask_show(cli: &Cli, opts: &RunOptions, stdout: &mut dyn Write) -> Result<(), CliError> {
    let masks = load_masks(opts)?;
    let mut sink = Sink::new(cli, opts.out.as_deref(), stdout)?;
    for m in &masks {
        let support: Vec<String> = m.mask.support().iter().map(usize::to_string).collect();
        let mut body = structure_lines(m);
        body.push_str(&format!("# bits: {}\n# support: {}\n", serialize_mask(&m.mask), support.join(" ")));
        body.push_str(&autocorr_table(&m.mask));
        sink.emit(&format!("{}.autocorr.csv", m.slug()), body.as_bytes())?;
        if opts.out.is_some() {
            let summary = SpectralSummary::new(&m.mask);
            let n = m.mask.period();
            let mut cross = String::from("k,l,R\n");
            for k in 1..n {
                for l in 1..n {
                    cross.push_str(&format!("{k},{l},{}\n", summary.cross_term(k, l)?));
                }
            }
            sink.emit(&format!("{}.cross_terms.csv", m.slug()), cross.as_bytes())?;
        }
    }
    sink.finish()
}

fn scenario_mu4(opts: &RunOptions, constellation: &Constellation) -> f64 {
    opts.mu4.unwrap_or_else(|| constellation.mu4())
}

/// Each true delay with the reference delays it is paired with.
type DelayRows = Vec<(usize, Vec<usize>)>;

/// Resolved delay rows and the Doppler set for a response run.
fn grid_plan(p: &ScenarioParams, opts: &RunOptions) -> Result<(DelayRows, Vec<usize>), CliError> {
    let n = p.period();
    let nu = opts.nu.resolve(0..p.cpi_len());
    let rows: Vec<(usize, Vec<usize>)> =
        opts.k.resolve(1..n).into_iter().map(|k| (k, opts.l.for_delay(k, 1..n))).collect();
    if rows.is_empty() {
        return Err(CliError::Config("empty delay set".into()));
    }
    for (k, l) in &rows {
        response::check_index_sets(p, &[*k], l, &nu)?;
    }
    Ok((rows, nu))
}

fn response_cmd(cli: &Cli, mode: ResponseMode, opts: &RunOptions, stdout: &mut dyn Write) -> Result<(), CliError> {
    check_plot_flag(opts)?;
    let m = single_mask(opts)?;
    let constellation = Constellation::named(opts.constellation)?;
    if mode != ResponseMode::Closed && opts.mu4.is_some() {
        return Err(CliError::Config(
            "--mu4 only applies to closed-form runs; simulation draws symbols from --constellation".into(),
        ));
    }
    let p = ScenarioParams::new(m.mask.clone(), opts.pulses, scenario_mu4(opts, &constellation))?;
    let (rows, nu) = grid_plan(&p, opts)?;
    if mode != ResponseMode::Closed {
        let points: usize = rows.iter().map(|(_, l)| l.len() * nu.len()).sum();
        let required = montecarlo::simulation_cost(points, opts.trials, p.cpi_len());
        if required > opts.budget {
            return Err(montecarlo::MonteCarloError::BudgetExceeded { required, budget: opts.budget }.into());
        }
    }
    let mut sink = Sink::new(cli, opts.out.as_deref(), stdout)?;
    let mut body = Vec::new();
    match mode {
        ResponseMode::Closed => {
            writeln!(body, "k,l,nu,value")?;
            for (k, l) in &rows {
                let grid = build_grid(&p, &[*k], l, &nu)?;
                for ((k, l, nu), v) in grid.points().zip(&grid.values) {
                    writeln!(body, "{k},{l},{nu},{}", sci(*v))?;
                }
            }
        }
        ResponseMode::Mc => {
            writeln!(body, "k,l,nu,value,se,trials")?;
            for (k, l) in &rows {
                let seed = derive_seed(opts.seed, *k as u64);
                let grid = simulate_grid(&p, &constellation, &[*k], l, &nu, opts.trials, seed, opts.budget)?;
                let se = grid.se.as_deref().unwrap_or_default();
                for (((k, l, nu), v), s) in grid.points().zip(&grid.values).zip(se) {
                    writeln!(body, "{k},{l},{nu},{},{},{}", sci(*v), sci(*s), opts.trials)?;
                }
            }
        }
        ResponseMode::Both => {
            let config = ValidationConfig {
                trials: opts.trials,
                seed: opts.seed,
                z_threshold: opts.z_threshold,
                budget: opts.budget,
                ..ValidationConfig::default()
            };
            let mut report = ValidationReport { points: Vec::new(), config };
            for (k, l) in &rows {
                let cfg = ValidationConfig { seed: derive_seed(opts.seed, *k as u64), ..config };
                report.points.extend(validate_grid(&p, &constellation, &[*k], l, &nu, cfg)?.points);
            }
            report.write_csv(&mut body)?;
            sink.emit("response_both.csv", &body)?;
            write_plot(&mut sink, opts)?;
            let verdict = format!(
                "validated {} points: {} with |z| > {} ({:.2}%, limit {:.2}%), max |z| = {:.3}",
                report.points.len(),
                report.flagged(),
                opts.z_threshold,
                100.0 * report.flagged_fraction(),
                100.0 * config.max_flagged_fraction,
                report.max_abs_z()
            );
            sink.note(&verdict)?;
            sink.finish()?;
            return if report.passed() {
                Ok(())
            } else {
                Err(CliError::Contract(format!("validation failed: {verdict}")))
            };
        }
    }
    sink.emit(&format!("response_{}.csv", mode.name()), &body)?;
    write_plot(&mut sink, opts)?;
    sink.finish()
}

fn write_plot(sink: &mut Sink<'_>, opts: &RunOptions) -> Result<(), CliError> {
    if opts.plot_script {
        sink.emit("plot.py", plot::SCRIPT.as_bytes())?;
    }
    Ok(())
}

fn metrics_cmd(cli: &Cli, opts: &RunOptions, comparing: bool, stdout: &mut dyn Write) -> Result<(), CliError> {
    check_plot_flag(opts)?;
    let masks = load_masks(opts)?;
    let mu4 = scenario_mu4(opts, &Constellation::named(opts.constellation)?);
    let named: Vec<(String, Mask)> = masks.iter().map(|m| (m.id.clone(), m.mask.clone())).collect();
    let reports = if comparing {
        metrics::compare(&named, opts.pulses, mu4, opts.normalize)?
    } else {
        named
            .iter()
            .map(|(id, mask)| {
                let p = ScenarioParams::new(mask.clone(), opts.pulses, mu4).map_err(MetricsError::from)?;
                metrics::MetricsReport::new(id.clone(), &p, opts.normalize)
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let mut sink = Sink::new(cli, opts.out.as_deref(), stdout)?;
    let mut body = Vec::new();
    metrics::write_reports_csv(&reports, &mut body)?;
    sink.emit(if comparing { "compare.csv" } else { "metrics.csv" }, &body)?;
    if opts.out.is_some() {
        for (m, r) in masks.iter().zip(&reports) {
            let mut per_k = Vec::new();
            metrics::write_per_k_csv(r, &mut per_k)?;
            sink.emit(&format!("{}.per_k.csv", m.slug()), &per_k)?;
        }
    }
    write_plot(&mut sink, opts)?;
    sink.finish()
}

pub const BOUNDS_HEADER: &str = "mask_id,N,w,I,I_lower,I_upper,attains_lower,attains_upper,is_cds,comb_spacing";

fn bounds_cmd(cli: &Cli, opts: &RunOptions, stdout: &mut dyn Write) -> Result<(), CliError> {
    let masks = load_masks(opts)?;
    let mu4 = scenario_mu4(opts, &Constellation::named(opts.constellation)?);
    if !(mu4.is_finite() && mu4 >= 1.0) {
        return Err(response::ResponseError::InvalidMu4(mu4).into());
    }
    let mut body = format!("{BOUNDS_HEADER}\n");
    let mut violations = Vec::new();
    for m in &masks {
        let s = doppler_sidelobe_sum(&m.mask, mu4);
        let tol = 1e-9 * s.upper.abs().max(1.0);
        if s.value < s.lower - tol || s.value > s.upper + tol {
            violations.push(format!("{}: I={} outside [{}, {}]", m.id, s.value, s.lower, s.upper));
        }
        let comb = detect_comb(&m.mask).map_or(String::new(), |(d, _)| d.to_string());
        body.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{comb}\n",
            m.id,
            m.mask.period(),
            m.mask.weight(),
            sci(s.value),
            sci(s.lower),
            sci(s.upper),
            s.attains_lower,
            s.attains_upper,
            verify_cds(&m.mask).is_cds
        ));
    }
    let mut sink = Sink::new(cli, opts.out.as_deref(), stdout)?;
    sink.emit("bounds.csv", body.as_bytes())?;
    sink.finish()?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Contract(format!("bound violated: {}", violations.join("; "))))
    }
}
