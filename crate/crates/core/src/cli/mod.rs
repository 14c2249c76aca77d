//! Command-line front end: configuration, result files, charts and run
//! manifests.
//!
//! Exit codes: 0 on success, 2 when the configuration or command line is
//! rejected, 3 when a run fails after it has started.

pub mod chart;
pub mod config;
pub mod table;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::game::{self, GameParams, LeaseOutcome, PowerAllocation, SuConfig, TimeAllocation};
use crate::reputation;
use crate::selection::SelectionPolicy;
use crate::sim::{self, ScenarioConfig};

use chart::{emit_chart, ChartKind};
use config::{
    parse_config, parse_config_str, render_config, split_assignment, ParsedConfig, ASSUMED_DEFAULTS,
};
use table::{emit_csv, reputation_table, scenario1_table, scenario2_table, ResultTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Environment variable that caps the worker thread count.
pub const THREADS_ENV: &str = "SPECTRA_LEASE_THREADS";

pub const MANIFEST_FILE: &str = "manifest.cfg";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "spectra-lease",
    version,
    about = "Secure spectrum leasing simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single SU: secrecy rate, jamming power and cooperation share versus
    /// eavesdropper distance.
    Scenario1(RunArgs),
    /// Multi-SU: probability of leasing to an unreliable SU over time.
    Scenario2(RunArgs),
    /// Re-run a scenario from a manifest written by a previous run.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory; defaults to the one recorded in the manifest.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the leasing game for one set of channel gains.
    Solve {
        /// File with `g_ps`, `g_sp`, `g_ss` and `g_se` assignments.
        #[arg(long)]
        channels: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Quick numeric self-checks.
    Selftest,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Configuration file (`key = value` per line).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to one selection policy; may be repeated.
    #[arg(long)]
    policy: Vec<SelectionPolicy>,
    /// Slots per run.
    #[arg(long)]
    slots: Option<usize>,
    /// Independent runs.
    #[arg(long)]
    runs: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<String> {
        let mut o = self.cfg.set.clone();
        if let Some(s) = self.seed {
            o.push(format!("seed={s}"));
        }
        if !self.policy.is_empty() {
            let names: Vec<&str> = self.policy.iter().map(SelectionPolicy::as_str).collect();
            o.push(format!("policies={}", names.join(",")));
        }
        if let Some(s) = self.slots {
            o.push(format!("n_slots={s}"));
        }
        if let Some(r) = self.runs {
            o.push(format!("runs={r}"));
        }
        o
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    One,
    Two,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::One => "scenario1",
            Scenario::Two => "scenario2",
        }
    }

    fn from_name(s: &str) -> Result<Self> {
        match s {
            "scenario1" => Ok(Scenario::One),
            "scenario2" => Ok(Scenario::Two),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Everything needed to repeat a run exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub scenario: Scenario,
    pub tool_version: String,
    pub out: PathBuf,
    pub config: ScenarioConfig,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# spectra-lease run manifest");
        let _ = writeln!(
            s,
            "# defaults not taken from the published parameter list: {}",
            ASSUMED_DEFAULTS.join(", ")
        );
        let _ = writeln!(s, "scenario = {}", self.scenario.name());
        let _ = writeln!(s, "tool_version = {}", self.tool_version);
        let _ = writeln!(s, "out = {}", self.out.display());
        s.push_str(&render_config(&self.config));
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let parsed = parse_config_str(text, &[])?;
        let scenario = parsed
            .scenario
            .as_deref()
            .ok_or_else(|| Error::Config("manifest has no 'scenario' key".into()))
            .and_then(Scenario::from_name)?;
        Ok(RunManifest {
            scenario,
            tool_version: parsed.tool_version.unwrap_or_default(),
            out: PathBuf::from(parsed.out.unwrap_or_else(|| "out".into())),
            config: parsed.config,
        })
    }
}

/// Runs a scenario and writes its CSV files, charts and manifest into
/// `manifest.out`. Returns the paths written.
pub fn execute(manifest: &RunManifest) -> Result<Vec<PathBuf>> {
    let dir = &manifest.out;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    match manifest.scenario {
        Scenario::One => {
            let rows = sim::run_scenario1(&manifest.config)?;
            let csv = dir.join("scenario1.csv");
            emit_csv(&scenario1_table(&rows), &csv)?;
            let back = read_table(&csv)?;
            written.push(csv);
            for kind in [
                ChartKind::RateVsDistance,
                ChartKind::JammingVsDistance,
                ChartKind::AlphaBetaVsDistance,
            ] {
                let svg = dir.join(format!("{}.svg", kind.name()));
                emit_chart(&back, kind, &svg)?;
                written.push(svg);
            }
        }
        Scenario::Two => {
            let out = sim::run_scenario2(&manifest.config)?;
            let csv = dir.join("scenario2.csv");
            emit_csv(&scenario2_table(&out.windows), &csv)?;
            let back = read_table(&csv)?;
            written.push(csv);
            let svg = dir.join(format!("{}.svg", ChartKind::UnreliableVsTime.name()));
            emit_chart(&back, ChartKind::UnreliableVsTime, &svg)?;
            written.push(svg);
            if let Some(trace) = out.reputation_trace {
                let selfish: Vec<bool> = manifest
                    .config
                    .behaviors()
                    .iter()
                    .map(|b| b.is_selfish())
                    .collect();
                let rep = dir.join("scenario2_reputation.csv");
                emit_csv(&reputation_table(&trace, &selfish), &rep)?;
                written.push(rep);
            }
        }
    }
    let mpath = dir.join(MANIFEST_FILE);
    fs::write(&mpath, manifest.render()).map_err(|e| Error::io(&mpath, e))?;
    written.push(mpath);
    Ok(written)
}

fn read_table(path: &Path) -> Result<ResultTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ResultTable::from_csv(&text)
}

/// Reads `g_ps`, `g_sp`, `g_ss`, `g_se` assignments.
pub fn parse_channel_file(text: &str) -> Result<ChannelSet> {
    let mut g = [None; 4];
    const KEYS: [&str; 4] = ["g_ps", "g_sp", "g_ss", "g_se"];
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = split_assignment(line)?;
        let i = KEYS
            .iter()
            .position(|&n| n == k)
            .ok_or_else(|| Error::Config(format!("unknown channel key '{k}'")))?;
        let x: f64 = v
            .parse()
            .map_err(|_| Error::Config(format!("{k}: cannot parse '{v}' as a number")))?;
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::Config(format!(
                "{k} = {x} is out of range (expected finite and >= 0)"
            )));
        }
        g[i] = Some(x);
    }
    let get =
        |i: usize| g[i].ok_or_else(|| Error::Config(format!("missing channel key '{}'", KEYS[i])));
    Ok(ChannelSet {
        g_ps: get(0)?,
        g_sp: get(1)?,
        g_ss: get(2)?,
        g_se: get(3)?,
    })
}

pub fn render_outcome(outcome: &LeaseOutcome) -> String {
    let mut s = String::new();
    match outcome {
        LeaseOutcome::NoLease => {
            let _ = writeln!(s, "lease = no");
            let _ = writeln!(s, "secrecy_rate = 0");
        }
        LeaseOutcome::Leased(sol) => {
            let _ = writeln!(s, "lease = yes");
            for (k, v) in [
                ("alpha", sol.alpha_star),
                ("beta", sol.beta_star),
                ("p_s", sol.p_s_star),
                ("p_c", sol.powers.p_c),
                ("p_j", sol.powers.p_j),
                ("secrecy_rate", sol.secrecy_rate),
                ("su_utility", sol.su_utility),
            ] {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
    }
    s
}

/// Closed-form spot checks of the core formulas. Returns `(name, passed)`.
pub fn selftest() -> Vec<(&'static str, bool)> {
    let gp = GameParams::default();
    let ta = TimeAllocation {
        alpha: 0.5,
        beta: 0.5,
    };
    let ch = ChannelSet {
        g_ps: 4.0,
        g_sp: 3.0,
        g_ss: 1.0,
        g_se: 0.2,
    };
    let pw = PowerAllocation {
        p_s: 0.0,
        p_c: 2.0,
        p_j: 1.4,
    };
    let rate = game::secrecy_rate(&ta, &pw, &ch, &gp);
    let expected_rate =
        (0.5 * 13f64.log2()).min(0.25 * 7f64.log2()) - 0.25 * (1.0 + 0.4 / 1.28f64).log2();

    let su = SuConfig { p_max: 1.0 };
    let energy_ok = [0.0, 0.3, 1.0, 1.9].iter().all(|&p_s| {
        game::dependent_powers(p_s, &ta, &su, &gp)
            .map(|pw| pw.energy_residual(ta.beta, su.p_max).abs() < 1e-12)
            .unwrap_or(false)
    });

    let fixed = reputation::first_hand_step(0.4, 1.0, gp.eta3);
    let floor = reputation::first_hand_step(0.9, 0.0, gp.eta3);

    let solved = game::LeaderGrid::new(19)
        .and_then(|g| game::stackelberg_solve(&su, &ch, &gp, g))
        .map(|o| o.secrecy_rate() > 0.0)
        .unwrap_or(false);

    vec![
        (
            "secrecy rate closed form",
            (rate - expected_rate).abs() < 1e-12,
        ),
        ("energy equality holds", energy_ok),
        (
            "reputation fixed point at epsilon = 1",
            (fixed - 0.4).abs() < 1e-15,
        ),
        (
            "defection drops reputation to the floor",
            floor == reputation::REPUTATION_FLOOR,
        ),
        ("favourable channel is leased", solved),
    ]
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        Error::Config(format!(
            "{THREADS_ENV} must be a positive integer, got '{v}'"
        ))
    })?;
    // A pool that already exists (e.g. in tests) is left as is.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn load(args: &RunArgs, scenario: Scenario) -> Result<RunManifest> {
    let ParsedConfig { config, .. } = parse_config(args.cfg.config.as_deref(), &args.overrides())?;
    Ok(RunManifest {
        scenario,
        tool_version: TOOL_VERSION.to_string(),
        out: args.out.clone(),
        config,
    })
}

fn report(written: &[PathBuf]) {
    for p in written {
        println!("wrote {}", p.display());
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }

    // Errors before a run starts are configuration errors.
    let manifest = match &cli.command {
        Command::Scenario1(a) => load(a, Scenario::One),
        Command::Scenario2(a) => load(a, Scenario::Two),
        Command::Rerun { manifest, out } => fs::read_to_string(manifest)
            .map_err(|e| Error::io(manifest, e))
            .and_then(|t| RunManifest::parse(&t))
            .map(|mut m| {
                if let Some(o) = out {
                    m.out = o.clone();
                }
                m
            }),
        Command::Solve { channels, cfg } => {
            let prepared = fs::read_to_string(channels)
                .map_err(|e| Error::io(channels, e))
                .and_then(|t| parse_channel_file(&t))
                .and_then(|ch| Ok((ch, parse_config(cfg.config.as_deref(), &cfg.set)?.config)));
            let (ch, config) = match prepared {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            let solved = config.su_config().and_then(|su| {
                game::stackelberg_solve(&su, &ch, &config.game, config.leader_grid()?)
            });
            return match solved {
                Ok(o) => {
                    print!("{}", render_outcome(&o));
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_RUNTIME
                }
            };
        }
        Command::Selftest => {
            let results = selftest();
            for (name, ok) in &results {
                println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
            }
            return if results.iter().all(|r| r.1) {
                EXIT_OK
            } else {
                EXIT_RUNTIME
            };
        }
    };
    let manifest = match manifest {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute(&manifest) {
        Ok(written) => {
            report(&written);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
