//! Time-slotted Monte Carlo runs of the leasing game.
//!
//! Random streams are ChaCha8 generators keyed by the master seed, with the
//! stream number chosen by role:
//!
//! * single-SU sweep: realization `m` uses stream `m` for every distance,
//!   so all distances see the same underlying fading draws;
//! * multi-SU runs: run `r` uses stream `3r` for positions and fading,
//!   `3r + 1` for selection tie-breaks and random picks, and `3r + 2` for
//!   deviation draws. Every policy replays the same streams.
//!
//! Repetitions run on the rayon pool and are reduced in index order, so the
//! output does not depend on the number of worker threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{build_channels, ChannelSet, Position, SuPlacement, Topology, MIN_DISTANCE_M};
use crate::error::{Error, Result};
use crate::game::{
    secrecy_feasible, secrecy_rate, stackelberg_solve, GameParams, LeaderGrid, LeaseOutcome,
    PowerAllocation, SuConfig, TimeAllocation,
};
use crate::reputation::{ReputationTable, SuId};
use crate::selection::{select, SelectionPolicy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuBehavior {
    Reliable,
    /// Defects with probability `deviation_prob` in each slot it is selected.
    Selfish {
        deviation_prob: f64,
    },
}

impl SuBehavior {
    pub fn is_selfish(&self) -> bool {
        matches!(self, SuBehavior::Selfish { .. })
    }

    pub fn deviation_prob(&self) -> f64 {
        match *self {
            SuBehavior::Reliable => 0.0,
            SuBehavior::Selfish { deviation_prob } => deviation_prob,
        }
    }
}

/// Node placement. Positions are in meters; the PT sits at the origin by
/// default.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub pt: Position,
    pub pr: Position,
    /// Single-SU transmitter.
    pub st: Position,
    /// Single-SU receiver.
    pub sr: Position,
    /// Eavesdropper position for multi-SU runs. The sweep places it instead.
    pub ed: Position,
    /// Selfish SUs are drawn uniformly in this disk around the PT.
    pub selfish_radius: f64,
    /// Reliable SUs are drawn uniformly in the annulus between these radii.
    pub reliable_inner: f64,
    pub reliable_outer: f64,
    /// Distance between each multi-SU transmitter and its receiver.
    pub sr_distance: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            pt: Position::new(0.0, 0.0),
            pr: Position::new(5.0, 0.0),
            st: Position::new(2.5, 0.0),
            sr: Position::new(2.5, 1.5),
            ed: Position::new(2.5, 15.0),
            selfish_radius: 2.0,
            reliable_inner: 2.0,
            reliable_outer: 4.0,
            sr_distance: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_sus: usize,
    pub selfish_fraction: f64,
    pub deviation_prob: f64,
    pub n_slots: usize,
    /// Independent repetitions of the multi-SU run.
    pub runs: usize,
    /// Slots per reporting window.
    pub window: usize,
    /// Channel realizations per sweep distance.
    pub realizations: usize,
    /// Eavesdropper distances from the single SU, meters.
    pub sweep: Vec<f64>,
    /// Leader grid points per axis.
    pub grid: usize,
    pub p_max: f64,
    pub seed: u64,
    pub policies: Vec<SelectionPolicy>,
    pub game: GameParams,
    pub geometry: Geometry,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_sus: 10,
            selfish_fraction: 0.7,
            deviation_prob: 0.2,
            n_slots: 500,
            runs: 20,
            window: 50,
            realizations: 500,
            sweep: vec![2.6, 2.8, 3.0, 3.2, 3.4, 3.6, 3.8, 4.0],
            grid: crate::game::DEFAULT_LEADER_GRID,
            p_max: 1.0,
            seed: 1,
            policies: SelectionPolicy::ALL.to_vec(),
            game: GameParams::default(),
            geometry: Geometry::default(),
        }
    }
}

fn check(what: &'static str, value: f64, ok: bool, range: &str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(what, value, range))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.game.validate()?;
        check("n_sus", self.n_sus as f64, self.n_sus >= 1, ">= 1")?;
        check("n_slots", self.n_slots as f64, self.n_slots >= 1, ">= 1")?;
        check("runs", self.runs as f64, self.runs >= 1, ">= 1")?;
        check("window", self.window as f64, self.window >= 1, ">= 1")?;
        check(
            "realizations",
            self.realizations as f64,
            self.realizations >= 1,
            ">= 1",
        )?;
        check("grid", self.grid as f64, self.grid >= 1, ">= 1")?;
        check("p_max", self.p_max, self.p_max > 0.0, "> 0")?;
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        check(
            "selfish_fraction",
            self.selfish_fraction,
            unit(self.selfish_fraction),
            "[0, 1]",
        )?;
        check(
            "deviation_prob",
            self.deviation_prob,
            unit(self.deviation_prob),
            "[0, 1]",
        )?;
        if self.policies.is_empty() {
            return Err(Error::Config(
                "policies must name at least one policy".into(),
            ));
        }
        for &d in &self.sweep {
            check(
                "sweep",
                d,
                d >= MIN_DISTANCE_M,
                &format!(">= {MIN_DISTANCE_M}"),
            )?;
        }
        let g = &self.geometry;
        for p in [g.pt, g.pr, g.st, g.sr, g.ed] {
            if !p.is_finite() {
                return Err(Error::domain("position", f64::NAN, "finite"));
            }
        }
        check(
            "selfish_radius",
            g.selfish_radius,
            g.selfish_radius > 0.0,
            "> 0",
        )?;
        check(
            "reliable_inner",
            g.reliable_inner,
            g.reliable_inner >= 0.0,
            ">= 0",
        )?;
        check(
            "reliable_outer",
            g.reliable_outer,
            g.reliable_outer > g.reliable_inner,
            "> reliable_inner",
        )?;
        check(
            "sr_distance",
            g.sr_distance,
            g.sr_distance >= MIN_DISTANCE_M,
            ">= 0.1",
        )?;
        Ok(())
    }

    pub fn su_config(&self) -> Result<SuConfig> {
        SuConfig::new(self.p_max)
    }

    pub fn leader_grid(&self) -> Result<LeaderGrid> {
        LeaderGrid::new(self.grid)
    }

    /// The first `round(n_sus * selfish_fraction)` ids are selfish.
    pub fn behaviors(&self) -> Vec<SuBehavior> {
        let n_selfish = (self.n_sus as f64 * self.selfish_fraction).round() as usize;
        (0..self.n_sus)
            .map(|i| {
                if i < n_selfish {
                    SuBehavior::Selfish {
                        deviation_prob: self.deviation_prob,
                    }
                } else {
                    SuBehavior::Reliable
                }
            })
            .collect()
    }
}

/// Generator for stream `stream` of the master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Realized powers after the SU decides whether to honor its declaration.
/// Always consumes exactly one uniform draw.
pub fn apply_behavior<R: Rng + ?Sized>(
    behavior: SuBehavior,
    declared: &PowerAllocation,
    ta: &TimeAllocation,
    su: &SuConfig,
    rng: &mut R,
) -> (PowerAllocation, bool) {
    let u: f64 = rng.random();
    if u < behavior.deviation_prob() {
        (PowerAllocation::full_defection(ta.beta, su.p_max), true)
    } else {
        (*declared, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaseRecord {
    pub su: SuId,
    pub alpha_star: f64,
    pub beta_star: f64,
    pub declared: PowerAllocation,
    pub realized: PowerAllocation,
    pub deviated: bool,
    pub secrecy_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub slot: usize,
    /// `None` when no SU could support a positive secrecy rate.
    pub lease: Option<LeaseRecord>,
    /// Reputation of every SU after this slot, indexed by id.
    pub reputations: Vec<f64>,
}

/// Everything a PU needs to play one slot.
pub struct SlotEnv<'a> {
    pub game: &'a GameParams,
    pub su: SuConfig,
    pub grid: LeaderGrid,
    pub behaviors: &'a [SuBehavior],
    pub policy: SelectionPolicy,
}

/// Independent random streams of one repetition.
pub struct SlotStreams {
    pub env: ChaCha8Rng,
    pub select: ChaCha8Rng,
    pub behavior: ChaCha8Rng,
}

impl SlotStreams {
    pub fn for_run(seed: u64, run: u64) -> Self {
        SlotStreams {
            env: stream_rng(seed, 3 * run),
            select: stream_rng(seed, 3 * run + 1),
            behavior: stream_rng(seed, 3 * run + 2),
        }
    }
}

/// Plays one slot: fading, candidate filtering, selection, leader/follower
/// solve, behavior and the first-hand reputation update of the selected SU.
pub fn run_slot(
    slot: usize,
    topo: &Topology,
    table: &mut ReputationTable,
    env: &SlotEnv<'_>,
    streams: &mut SlotStreams,
) -> Result<SlotOutcome> {
    let channels = build_channels(topo, &mut streams.env)?;
    // One deviation draw per slot keeps the behavior stream aligned across policies.
    let candidates: Vec<SuId> = (0..channels.len())
        .filter(|&i| secrecy_feasible(&channels[i]))
        .collect();
    let lease = if candidates.is_empty() {
        let _: f64 = streams.behavior.random();
        None
    } else {
        let id = select(
            env.policy,
            table,
            &channels,
            &candidates,
            &mut streams.select,
        )?;
        Some(lease_to(
            id,
            &channels[id],
            table,
            env,
            &mut streams.behavior,
        )?)
    };
    Ok(SlotOutcome {
        slot,
        lease,
        reputations: (0..channels.len()).map(|i| table.get(i)).collect(),
    })
}

fn lease_to(
    id: SuId,
    ch: &ChannelSet,
    table: &mut ReputationTable,
    env: &SlotEnv<'_>,
    behavior_rng: &mut ChaCha8Rng,
) -> Result<LeaseRecord> {
    let sol = match stackelberg_solve(&env.su, ch, env.game, env.grid)? {
        LeaseOutcome::Leased(s) => s,
        LeaseOutcome::NoLease => {
            return Err(Error::Infeasible(
                "candidate filter admitted an infeasible SU",
            ))
        }
    };
    let ta = sol.time_allocation();
    let (realized, deviated) =
        apply_behavior(env.behaviors[id], &sol.powers, &ta, &env.su, behavior_rng);
    let rate = secrecy_rate(&ta, &realized, ch, env.game);
    table.observe(id, &realized, ch, env.game.eta3);
    Ok(LeaseRecord {
        su: id,
        alpha_star: sol.alpha_star,
        beta_star: sol.beta_star,
        declared: sol.powers,
        realized,
        deviated,
        secrecy_rate: rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub distance_m: f64,
    /// Averaged over all realizations; no-lease realizations count as zero.
    pub mean_secrecy_rate: f64,
    /// Averaged over the paired sample (see [`run_scenario1`]).
    pub mean_p_j_mw: f64,
    /// Averaged over the paired sample (see [`run_scenario1`]).
    pub mean_alpha_beta: f64,
}

fn sweep_topology(g: &Geometry, distance: f64) -> Topology {
    Topology {
        pt: g.pt,
        pr: g.pr,
        ed: Position::new(g.st.x + distance, g.st.y),
        sus: vec![SuPlacement { st: g.st, sr: g.sr }],
    }
}

/// Leader outcomes of realization `m` at every sweep distance.
pub fn sweep_realization(cfg: &ScenarioConfig, m: u64) -> Result<Vec<LeaseOutcome>> {
    let su = cfg.su_config()?;
    let grid = cfg.leader_grid()?;
    cfg.sweep
        .iter()
        .map(|&distance| {
            let topo = sweep_topology(&cfg.geometry, distance);
            let ch = build_channels(&topo, &mut stream_rng(cfg.seed, m))?[0];
            stackelberg_solve(&su, &ch, &cfg.game, grid)
        })
        .collect()
}

/// Single SU, eavesdropper moved away along the x axis. One row per distance.
///
/// Realization `m` replays the same fading draws at every distance. The
/// secrecy rate is averaged over all realizations. Strategy averages
/// (jamming power, cooperation share) only exist where the PU leases, and
/// the leased set grows with distance; to compare like with like they are
/// taken over the realizations that lease at every distance of the sweep.
/// If no realization does, each distance falls back to its own leased set.
pub fn run_scenario1(cfg: &ScenarioConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let table: Vec<Vec<LeaseOutcome>> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|m| sweep_realization(cfg, m))
        .collect::<Result<_>>()?;
    let paired: Vec<&Vec<LeaseOutcome>> = table
        .iter()
        .filter(|row| row.iter().all(|o| o.solution().is_some()))
        .collect();

    let rows = (0..cfg.sweep.len())
        .map(|k| {
            let rate = table.iter().map(|row| row[k].secrecy_rate()).sum::<f64>();
            let sample: Vec<_> = if paired.is_empty() {
                table.iter().filter_map(|row| row[k].solution()).collect()
            } else {
                paired.iter().filter_map(|row| row[k].solution()).collect()
            };
            let (mut p_j, mut ab) = (0.0, 0.0);
            for s in &sample {
                p_j += s.powers.p_j;
                ab += s.alpha_star * s.beta_star;
            }
            let n = sample.len().max(1) as f64;
            SweepRow {
                distance_m: cfg.sweep[k],
                mean_secrecy_rate: rate / table.len() as f64,
                mean_p_j_mw: p_j / n,
                mean_alpha_beta: ab / n,
            }
        })
        .collect();
    Ok(rows)
}

fn uniform_in_annulus<R: Rng + ?Sized>(
    center: Position,
    inner: f64,
    outer: f64,
    rng: &mut R,
) -> Position {
    let u: f64 = rng.random();
    let r = (inner * inner + u * (outer * outer - inner * inner)).sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    Position::new(center.x + r * theta.cos(), center.y + r * theta.sin())
}

fn placement_ok(topo: &Topology, su: &SuPlacement) -> bool {
    [
        topo.pt.distance_to(&su.st),
        su.st.distance_to(&topo.pr),
        su.st.distance_to(&su.sr),
        su.st.distance_to(&topo.ed),
    ]
    .iter()
    .all(|&d| d >= MIN_DISTANCE_M)
}

/// Fresh uniformly redrawn SU positions: selfish SUs near the PT, reliable
/// ones in the surrounding annulus. Placements closer than the minimum
/// separation to any node are redrawn.
pub fn draw_positions<R: Rng + ?Sized>(
    g: &Geometry,
    behaviors: &[SuBehavior],
    rng: &mut R,
) -> Topology {
    let mut topo = Topology {
        pt: g.pt,
        pr: g.pr,
        ed: g.ed,
        sus: Vec::with_capacity(behaviors.len()),
    };
    for b in behaviors {
        let (inner, outer) = if b.is_selfish() {
            (0.0, g.selfish_radius)
        } else {
            (g.reliable_inner, g.reliable_outer)
        };
        loop {
            let st = uniform_in_annulus(g.pt, inner, outer, rng);
            let sr = uniform_in_annulus(st, g.sr_distance, g.sr_distance, rng);
            let placement = SuPlacement { st, sr };
            if placement_ok(&topo, &placement) {
                topo.sus.push(placement);
                break;
            }
        }
    }
    topo
}

/// One full multi-SU run under `policy`.
pub fn run_multi_su(
    cfg: &ScenarioConfig,
    policy: SelectionPolicy,
    run: u64,
) -> Result<Vec<SlotOutcome>> {
    let behaviors = cfg.behaviors();
    let env = SlotEnv {
        game: &cfg.game,
        su: cfg.su_config()?,
        grid: cfg.leader_grid()?,
        behaviors: &behaviors,
        policy,
    };
    let mut streams = SlotStreams::for_run(cfg.seed, run);
    let mut table = ReputationTable::with_newcomers(0..cfg.n_sus);
    (0..cfg.n_slots)
        .map(|slot| {
            let topo = draw_positions(&cfg.geometry, &behaviors, &mut streams.env);
            run_slot(slot, &topo, &mut table, &env, &mut streams)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRow {
    /// One past the last slot index in the window.
    pub window_end_slot: usize,
    pub policy: SelectionPolicy,
    /// Fraction of slots in the window, pooled over runs, in which a
    /// selfish SU was selected.
    pub p_unreliable: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario2Output {
    pub windows: Vec<WindowRow>,
    /// Per-slot reputations from run 0 of the reputation policy, if it ran.
    pub reputation_trace: Option<Vec<SlotOutcome>>,
}

/// Window ends for `n_slots` slots cut into windows of `window`; the last
/// window may be short.
pub fn window_ends(n_slots: usize, window: usize) -> Vec<usize> {
    (1..=n_slots.div_ceil(window))
        .map(|k| (k * window).min(n_slots))
        .collect()
}

/// Multi-SU scenario: unreliable-selection probability over time for each
/// configured policy.
pub fn run_scenario2(cfg: &ScenarioConfig) -> Result<Scenario2Output> {
    cfg.validate()?;
    let behaviors = cfg.behaviors();
    let jobs: Vec<(SelectionPolicy, u64)> = cfg
        .policies
        .iter()
        .flat_map(|&p| (0..cfg.runs as u64).map(move |r| (p, r)))
        .collect();
    let results: Vec<Vec<SlotOutcome>> = jobs
        .par_iter()
        .map(|&(p, r)| run_multi_su(cfg, p, r))
        .collect::<Result<_>>()?;

    let ends = window_ends(cfg.n_slots, cfg.window);
    let mut windows = Vec::with_capacity(ends.len() * cfg.policies.len());
    let mut reputation_trace = None;
    for (pi, &policy) in cfg.policies.iter().enumerate() {
        let runs = &results[pi * cfg.runs..(pi + 1) * cfg.runs];
        if policy == SelectionPolicy::Reputation {
            reputation_trace = Some(runs[0].clone());
        }
        let mut start = 0;
        for &end in &ends {
            let mut hits = 0usize;
            for run in runs {
                hits += run[start..end]
                    .iter()
                    .filter(|o| o.lease.is_some_and(|l| behaviors[l.su].is_selfish()))
                    .count();
            }
            windows.push(WindowRow {
                window_end_slot: end,
                policy,
                p_unreliable: hits as f64 / ((end - start) * runs.len()) as f64,
            });
            start = end;
        }
    }
    Ok(Scenario2Output {
        windows,
        reputation_trace,
    })
}
