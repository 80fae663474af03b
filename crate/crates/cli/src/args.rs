//! Command-line grammar and its canonical textual form.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use masklab_core::montecarlo::DEFAULT_BUDGET;
use masklab_core::{ConstellationName, Normalization};

use crate::indexset::{IndexSet, ReferenceSet};

#[derive(Parser, Debug, Clone, PartialEq)]
#[command(name = "masklab", version, about = "Range-Doppler analysis of masked-modulation transmit masks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Generate, verify or inspect masks.
    Mask {
        #[command(subcommand)]
        action: MaskAction,
    },
    /// Expected |r(k, l, nu)|^2 on a grid, in closed form, by simulation, or both.
    Response {
        #[arg(value_enum)]
        mode: ResponseMode,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Per-mask figures of merit.
    Metrics(RunOptions),
    /// Doppler sidelobe sum against its upper and lower bounds.
    Bounds(RunOptions),
    /// Metrics for two or more masks side by side.
    Compare(RunOptions),
    /// Built-in desk-scale consistency checks.
    Selftest(SelftestOptions),
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum MaskAction {
    /// Build masks from family specs and write them in the mask text format.
    Gen(RunOptions),
    /// Report difference-set status, lambda, comb structure and a[k].
    Verify(RunOptions),
    /// Print the support and a[k]; with --out, also write a[k] and R_{k,l} tables.
    Show(RunOptions),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseMode {
    Closed,
    Mc,
    Both,
}

impl ResponseMode {
    pub fn name(self) -> &'static str {
        match self {
            ResponseMode::Closed => "closed",
            ResponseMode::Mc => "mc",
            ResponseMode::Both => "both",
        }
    }
}

/// Options shared by the analysis commands.
#[derive(Args, Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Masks given positionally; same syntax as --mask.
    #[arg(value_name = "MASK")]
    pub positional: Vec<String>,

    /// Mask family spec (`singer:m=6`, `comb:N=63,d=3`,
    /// `random:N=63,w=31,seed=7`) or path to a mask file. Repeatable.
    #[arg(long = "mask", value_name = "MASK")]
    pub masks: Vec<String>,

    /// Pulses per coherent processing interval.
    #[arg(long = "M", visible_alias = "pulses", value_name = "M", default_value_t = 8)]
    pub pulses: usize,

    /// Symbol alphabet: qpsk, qam16 or qam64.
    #[arg(long, default_value = "qam16")]
    pub constellation: ConstellationName,

    /// Fourth moment override for closed-form computations.
    #[arg(long)]
    pub mu4: Option<f64>,

    /// True delays. Index sets are `all`, or comma lists of `a`, `a..b`
    /// (inclusive) and `a..b:s` (stride s); `all` means 1..N-1.
    #[arg(long, default_value = "all", value_name = "SET")]
    pub k: IndexSet,

    /// Reference delays: `diag` pairs each k with l = k, otherwise an
    /// index set where `all` means 1..N-1.
    #[arg(long, default_value = "diag", value_name = "SET")]
    pub l: ReferenceSet,

    /// Doppler mismatch bins; `all` means 0..MN-1.
    #[arg(long, default_value = "all", value_name = "SET")]
    pub nu: IndexSet,

    /// Monte Carlo trials per grid point.
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,

    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory; without it results go to stdout.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Scaling of the mean Doppler sidelobe: none, by_rho or by_mainlobe.
    #[arg(long, default_value = "none")]
    pub normalize: Normalization,

    /// Cap on simulated symbol operations (points x trials x MN).
    #[arg(long, env = "MASKLAB_MC_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,

    /// |z| above which a validated point is flagged.
    #[arg(long, default_value_t = 3.0)]
    pub z_threshold: f64,

    /// Also write a plotting script for the emitted CSVs (requires --out).
    #[arg(long)]
    pub plot_script: bool,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct SelftestOptions {
    /// Trials for the Monte Carlo check.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Wall-clock limit for the Monte Carlo check, in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub time_budget: f64,
}

impl RunOptions {
    /// Positional masks followed by `--mask` ones.
    pub fn mask_args(&self) -> Vec<String> {
        self.positional.iter().chain(&self.masks).cloned().collect()
    }
}

#[derive(Clone, Copy, Default)]
struct Relevant {
    scenario: bool,
    grid: bool,
    simulation: bool,
    z: bool,
    normalize: bool,
}

impl Cli {
    /// Arguments (without the program name) that reproduce this run.
    /// Output locations are left out; defaults are spelled out so the
    /// form stays stable when defaults change.
    pub fn canonical_args(&self) -> Vec<String> {
        let (words, opts, rel): (Vec<&str>, &RunOptions, Relevant) = match &self.command {
            Command::Mask { action } => {
                let (w, o) = match action {
                    MaskAction::Gen(o) => ("gen", o),
                    MaskAction::Verify(o) => ("verify", o),
                    MaskAction::Show(o) => ("show", o),
                };
                (vec!["mask", w], o, Relevant::default())
            }
            Command::Response { mode, opts } => {
                let sim = *mode != ResponseMode::Closed;
                let rel = Relevant {
                    scenario: true,
                    grid: true,
                    simulation: sim,
                    z: *mode == ResponseMode::Both,
                    normalize: false,
                };
                (vec!["response", mode.name()], opts, rel)
            }
            Command::Metrics(o) => {
                (vec!["metrics"], o, Relevant { scenario: true, normalize: true, ..Default::default() })
            }
            Command::Compare(o) => {
                (vec!["compare"], o, Relevant { scenario: true, normalize: true, ..Default::default() })
            }
            Command::Bounds(o) => {
                let mut args: Vec<String> = vec!["bounds".into()];
                push_masks(&mut args, o);
                args.extend(["--constellation".into(), o.constellation.to_string()]);
                if let Some(mu4) = o.mu4 {
                    args.extend(["--mu4".into(), mu4.to_string()]);
                }
                return args;
            }
            Command::Selftest(s) => {
                return vec![
                    "selftest".into(),
                    "--trials".into(),
                    s.trials.to_string(),
                    "--seed".into(),
                    s.seed.to_string(),
                    "--time-budget".into(),
                    s.time_budget.to_string(),
                ];
            }
        };
        let mut args: Vec<String> = words.into_iter().map(String::from).collect();
        push_masks(&mut args, opts);
        let mut flag = |name: &str, value: String| {
            args.push(format!("--{name}"));
            args.push(value);
        };
        if rel.scenario {
            flag("M", opts.pulses.to_string());
            flag("constellation", opts.constellation.to_string());
            if let Some(mu4) = opts.mu4 {
                flag("mu4", mu4.to_string());
            }
        }
        if rel.grid {
            flag("k", opts.k.to_string());
            flag("l", opts.l.to_string());
            flag("nu", opts.nu.to_string());
        }
        if rel.simulation {
            flag("trials", opts.trials.to_string());
            flag("seed", opts.seed.to_string());
            flag("budget", opts.budget.to_string());
        }
        if rel.z {
            flag("z-threshold", opts.z_threshold.to_string());
        }
        if rel.normalize {
            flag("normalize", opts.normalize.to_string());
        }
        args
    }

    /// [`Cli::canonical_args`] as one shell-quoted line.
    pub fn canonical_line(&self) -> String {
        self.canonical_args().iter().map(|a| shell_quote(a)).collect::<Vec<_>>().join(" ")
    }

    /// The master seed recorded in output headers.
    pub fn seed(&self) -> u64 {
        match &self.command {
            Command::Mask { action: MaskAction::Gen(o) | MaskAction::Verify(o) | MaskAction::Show(o) } => o.seed,
            Command::Response { opts, .. } => opts.seed,
            Command::Metrics(o) | Command::Bounds(o) | Command::Compare(o) => o.seed,
            Command::Selftest(s) => s.seed,
        }
    }
}

fn push_masks(args: &mut Vec<String>, opts: &RunOptions) {
    for m in opts.mask_args() {
        args.push("--mask".into());
        args.push(m);
    }
}

fn shell_quote(s: &str) -> String {
    let plain = !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_.,:=/+@%".contains(c));
    if plain {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(line: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("masklab").chain(line.iter().copied())).unwrap()
    }

    fn reparse(cli: &Cli) -> Cli {
        Cli::try_parse_from(std::iter::once("masklab".to_string()).chain(cli.canonical_args())).unwrap()
    }

    #[test]
    fn canonical_form_round_trips() {
        let cases: &[&[&str]] = &[
            &["mask", "gen", "singer:m=6"],
            &["mask", "verify", "--mask", "some file.mask"],
            &[
                "response",
                "both",
                "singer:m=3",
                "--M",
                "4",
                "--k",
                "1..6:2",
                "--l",
                "all",
                "--nu",
                "0,5",
                "--trials",
                "99",
            ],
            &["response", "closed", "--mask", "singer:m=6", "--M", "50", "--mu4", "1.32", "--out", "/tmp/x"],
            &["metrics", "--mask", "comb:N=63,d=3", "--normalize", "by_mainlobe", "--constellation", "qpsk"],
            &["compare", "singer:m=6", "random:N=63,w=31,seed=7", "comb:N=63,d=3", "--M", "50"],
            &["bounds", "singer:m=5", "--mu4", "1.5"],
            &["selftest", "--trials", "1000", "--time-budget", "2.5"],
        ];
        for case in cases {
            let cli = parse(case);
            let again = reparse(&cli);
            assert_eq!(again.canonical_args(), cli.canonical_args(), "{case:?}");
            assert_eq!(reparse(&again), again);
            assert_eq!(again.seed(), cli.seed());
        }
    }

    #[test]
    fn canonical_text() {
        let cli = parse(&["response", "mc", "singer:m=3", "--M", "4", "--nu", "0..27:3", "--budget", "1000"]);
        assert_eq!(
            cli.canonical_line(),
            "response mc --mask singer:m=3 --M 4 --constellation qam16 --k all --l diag --nu 0..27:3 \
             --trials 10000 --seed 0 --budget 1000"
        );
        let cli = parse(&["mask", "show", "my mask's file"]);
        assert_eq!(cli.canonical_line(), r"mask show --mask 'my mask'\''s file'");
    }

    #[test]
    fn flag_aliases_and_errors() {
        assert_eq!(parse(&["metrics", "singer:m=3", "--pulses", "5"]), parse(&["metrics", "singer:m=3", "--M", "5"]));
        assert_eq!(parse(&["metrics", "--constellation", "16qam"]), parse(&["metrics"]));
        for bad in [
            &["response", "sideways"][..],
            &["metrics", "--constellation", "bpsk"],
            &["metrics", "--normalize", "sideways"],
            &["response", "closed", "--k", "4..1"],
        ] {
            assert!(Cli::try_parse_from(std::iter::once(&"masklab").chain(bad)).is_err(), "{bad:?}");
        }
    }
}
