//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectra_lease::channel::{build_channels, ChannelSet, SuPlacement, Topology};
use spectra_lease::game::{
    feasible_interval, stackelberg_solve, su_best_response, su_utility, utility_second_derivative,
    GameParams, LeaderGrid, PowerAllocation, SuConfig, TimeAllocation,
};
use spectra_lease::reputation::{
    epsilon, first_hand_step, first_hand_update, REPUTATION_CEIL, REPUTATION_FLOOR,
};
use spectra_lease::selection::SelectionPolicy;
use spectra_lease::sim::{run_scenario1, run_scenario2, ScenarioConfig, WindowRow};

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn series(rows: &[WindowRow], policy: SelectionPolicy) -> Vec<f64> {
    rows.iter()
        .filter(|r| r.policy == policy)
        .map(|r| r.p_unreliable)
        .collect()
}

fn random_level(rows: &[WindowRow]) -> Verdict {
    let random = series(rows, SelectionPolicy::Random);
    let worst = random.iter().map(|p| (p - 0.70).abs()).fold(0.0, f64::max);
    verdict(
        !random.is_empty() && worst <= 0.05,
        format!("{} windows, max |p - 0.70| = {worst:.4}", random.len()),
    )
}

fn reputation_trend(rows: &[WindowRow]) -> Verdict {
    let rep = series(rows, SelectionPolicy::Reputation);
    let random = series(rows, SelectionPolicy::Random);
    let csi = series(rows, SelectionPolicy::BestCsi);
    let (first, last) = (rep[0], *rep.last().unwrap());
    let (csi_last, rnd_last) = (*csi.last().unwrap(), *random.last().unwrap());
    verdict(
        last < 0.15 && last < first && csi_last >= rnd_last,
        format!(
            "reputation first {first:.4} final {last:.4}; final best_csi {csi_last:.4} vs random {rnd_last:.4}"
        ),
    )
}

/// Counts adjacent pairs moving against `direction` (+1 nondecreasing,
/// -1 nonincreasing) and the largest relative size of such a move.
fn violations(values: &[f64], direction: f64) -> (usize, f64) {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for w in values.windows(2) {
        let step = (w[1] - w[0]) * direction;
        if step < 0.0 {
            count += 1;
            let scale = w[0].abs().max(w[1].abs());
            worst = worst.max(-step / scale);
        }
    }
    (count, worst)
}

fn monotone_sweep() -> Verdict {
    let cfg = ScenarioConfig::default();
    let rows = run_scenario1(&cfg).expect("scenario 1 runs");
    let col = |f: fn(&spectra_lease::sim::SweepRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let checks = [
        ("rate", violations(&col(|r| r.mean_secrecy_rate), 1.0)),
        ("p_j", violations(&col(|r| r.mean_p_j_mw), -1.0)),
        ("alpha*beta", violations(&col(|r| r.mean_alpha_beta), 1.0)),
    ];
    let ok = rows.len() >= 8
        && cfg.realizations >= 500
        && checks
            .iter()
            .all(|(_, (n, worst))| *n == 0 || (*n <= 1 && *worst < 0.02));
    let detail: Vec<String> = checks
        .iter()
        .map(|(name, (n, worst))| format!("{name}: {n} violations (max {:.3}%)", worst * 100.0))
        .collect();
    verdict(
        ok,
        format!(
            "{} distances x M={}; {}",
            rows.len(),
            cfg.realizations,
            detail.join(", ")
        ),
    )
}

fn random_instance(rng: &mut ChaCha8Rng) -> (TimeAllocation, ChannelSet) {
    let ta =
        TimeAllocation::new(rng.random_range(0.05..0.95), rng.random_range(0.05..0.95)).unwrap();
    let ch = ChannelSet::new(
        rng.random_range(0.1..5.0),
        rng.random_range(0.1..5.0),
        rng.random_range(0.1..5.0),
        rng.random_range(0.0..2.0),
    )
    .unwrap();
    (ta, ch)
}

fn concavity() -> Verdict {
    let gp = GameParams::default();
    let su = SuConfig::new(1.0).unwrap();
    let h = 1e-4 * su.p_max;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut draws, mut failures, mut worst) = (0, 0, 0.0_f64);
    while draws < 100 {
        let (ta, ch) = random_instance(&mut rng);
        let Ok((_, hi)) = feasible_interval(&ta, &su, &ch, &gp) else {
            continue;
        };
        let p = rng.random_range(0.05 * hi..0.9 * hi);
        if p < 2.0 * h {
            continue;
        }
        let u = |x: f64| su_utility(x, &ta, &su, &ch, &gp);
        let (Ok(um), Ok(u0), Ok(up)) = (u(p - h), u(p), u(p + h)) else {
            continue;
        };
        draws += 1;
        let analytic = utility_second_derivative(p, &ta, &su, &ch, &gp).unwrap();
        let numeric = (up - 2.0 * u0 + um) / (h * h);
        let rel = (analytic - numeric).abs() / analytic.abs();
        worst = worst.max(rel);
        if !(analytic < 0.0 && rel <= 1e-4) {
            failures += 1;
        }
    }
    verdict(
        failures == 0,
        format!("{draws} draws, {failures} failures, max relative gap {worst:.2e}"),
    )
}

fn best_response_oracle() -> Verdict {
    let gp = GameParams::default();
    let su = SuConfig::new(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut n, mut failures, mut worst) = (0, 0, 0.0_f64);
    while n < 150 {
        let (ta, ch) = random_instance(&mut rng);
        let Ok(br) = su_best_response(&ta, &su, &ch, &gp) else {
            continue;
        };
        let (lo, hi) = feasible_interval(&ta, &su, &ch, &gp).unwrap();
        let grid_best = (0..10_000)
            .filter_map(|k| {
                su_utility(lo + (hi - lo) * k as f64 / 9_999.0, &ta, &su, &ch, &gp).ok()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        n += 1;
        let shortfall = (grid_best - br.utility).max(0.0) / grid_best.abs().max(1e-12);
        worst = worst.max(shortfall);
        if shortfall > 1e-3 {
            failures += 1;
        }
    }
    verdict(
        failures == 0,
        format!("{n} instances, {failures} failures, max relative shortfall {worst:.2e}"),
    )
}

fn grid_refinement() -> Verdict {
    // Channels drawn from the default single-SU placement across the sweep.
    let cfg = ScenarioConfig::default();
    let g = cfg.geometry.clone();
    let gp = cfg.game;
    let su = cfg.su_config().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (coarse, fine) = (LeaderGrid::new(99).unwrap(), LeaderGrid::new(399).unwrap());
    let (mut n, mut failures, mut worst) = (0, 0, 0.0_f64);
    while n < 20 {
        let d = cfg.sweep[n % cfg.sweep.len()];
        let topo = Topology {
            pt: g.pt,
            pr: g.pr,
            ed: spectra_lease::channel::Position::new(g.st.x + d, g.st.y),
            sus: vec![SuPlacement { st: g.st, sr: g.sr }],
        };
        let ch = build_channels(&topo, &mut rng).unwrap()[0];
        let r_fine = stackelberg_solve(&su, &ch, &gp, fine)
            .unwrap()
            .secrecy_rate();
        if r_fine <= 0.0 {
            continue;
        }
        let r_coarse = stackelberg_solve(&su, &ch, &gp, coarse)
            .unwrap()
            .secrecy_rate();
        n += 1;
        let rel = (r_fine - r_coarse).abs() / r_fine;
        worst = worst.max(rel);
        if rel > 0.02 {
            failures += 1;
        }
    }
    verdict(
        failures == 0,
        format!(
            "{n} instances, {failures} failures, max relative gap {:.3}%",
            worst * 100.0
        ),
    )
}

fn reputation_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out_of_bounds = 0;
    for _ in 0..10_000 {
        let eta3 = rng.random_range(1e-3..2.0);
        let mut r = rng.random_range(REPUTATION_FLOOR..=REPUTATION_CEIL);
        for _ in 0..50 {
            let eps = match rng.random_range(0..10) {
                0 => 0.0,
                1 => f64::INFINITY,
                _ => 10f64.powf(rng.random_range(-6.0..6.0)),
            };
            r = first_hand_step(r, eps, eta3);
            if !(REPUTATION_FLOOR..=REPUTATION_CEIL).contains(&r) {
                out_of_bounds += 1;
            }
        }
    }
    let fixed = (0..1000).all(|_| {
        let r = rng.random_range(REPUTATION_FLOOR..=REPUTATION_CEIL);
        first_hand_step(r, 1.0, rng.random_range(1e-3..2.0)) == r
    });
    let ch = ChannelSet::new(1.0, 0.5, 0.8, 0.2).unwrap();
    let defect = PowerAllocation::full_defection(0.5, 1.0);
    let floor_hit = epsilon(&defect, &ch) == 0.0
        && first_hand_update(REPUTATION_CEIL, &defect, &ch, 0.1) == REPUTATION_FLOOR;
    verdict(
        out_of_bounds == 0 && fixed && floor_hit,
        format!(
            "10000 sequences x 50 updates, {out_of_bounds} out of bounds; eps=1 fixed point: {fixed}; one-step floor: {floor_hit}"
        ),
    )
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_spectra-lease"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn same_bytes(a: &Path, b: &Path, files: &[&str]) -> Result<(), String> {
    for f in files {
        let (x, y) = (fs::read(a.join(f)), fs::read(b.join(f)));
        match (x, y) {
            (Ok(x), Ok(y)) if x == y => {}
            _ => return Err(format!("{f} differs or is missing")),
        }
    }
    Ok(())
}

fn manifest_rerun() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |name: &str| tmp.path().join(name);
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let cases: [(&str, Vec<String>, &[&str]); 2] = [
        (
            "scenario1",
            vec![
                "--set".into(),
                "realizations=40".into(),
                "--set".into(),
                "grid=31".into(),
            ],
            &["scenario1.csv"],
        ),
        (
            "scenario2",
            vec![
                "--slots".into(),
                "80".into(),
                "--runs".into(),
                "3".into(),
                "--set".into(),
                "grid=31".into(),
                "--seed".into(),
                "9".into(),
            ],
            &["scenario2.csv", "scenario2_reputation.csv"],
        ),
    ];
    for (scenario, extra, files) in cases {
        let (first, second) = (dir(&format!("{scenario}-a")), dir(&format!("{scenario}-b")));
        let mut args: Vec<String> = vec![scenario.into(), "--out".into(), s(&first)];
        args.extend(extra);
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        if !run_cli(&argv) {
            return verdict(false, format!("{scenario} run failed"));
        }
        let manifest = s(&first.join("manifest.cfg"));
        if !run_cli(&["rerun", "--manifest", &manifest, "--out", &s(&second)]) {
            return verdict(false, format!("{scenario} rerun failed"));
        }
        if let Err(e) = same_bytes(&first, &second, files) {
            return verdict(false, format!("{scenario}: {e}"));
        }
    }
    verdict(
        true,
        "scenario1 and scenario2 CSVs identical after re-run from manifest",
    )
}

fn main() {
    let mut all_ok = true;
    let mut report = |id: u32, name: &str, start: Instant, v: Verdict| {
        all_ok &= v.ok;
        println!(
            "{} criterion {id} ({name}): {} [{:.1}s]",
            if v.ok { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    };

    let t = Instant::now();
    let s2 = run_scenario2(&ScenarioConfig::default()).expect("scenario 2 runs");
    report(1, "random-policy level", t, random_level(&s2.windows));
    report(
        2,
        "reputation-policy trend",
        t,
        reputation_trend(&s2.windows),
    );

    let t = Instant::now();
    report(3, "distance-sweep monotonicity", t, monotone_sweep());
    let t = Instant::now();
    report(4, "utility concavity", t, concavity());
    let t = Instant::now();
    report(5, "best-response oracle", t, best_response_oracle());
    let t = Instant::now();
    report(6, "leader grid refinement", t, grid_refinement());
    let t = Instant::now();
    report(7, "reputation properties", t, reputation_properties());
    let t = Instant::now();
    report(8, "manifest determinism", t, manifest_rerun());

    if !all_ok {
        std::process::exit(1);
    }
}
