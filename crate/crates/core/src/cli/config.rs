//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Every key is optional; anything left out keeps its default. Lists
//! (`sweep`, `policies`) are comma separated.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::channel::Position;
use crate::error::{Error, Result};
use crate::selection::SelectionPolicy;
use crate::sim::ScenarioConfig;

/// Parameters whose defaults do not come from the published parameter list.
pub const ASSUMED_DEFAULTS: [&str; 6] =
    ["eta3", "p_max", "geometry", "sweep", "runs", "realizations"];

/// Configuration plus any run metadata found alongside it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedConfig {
    pub config: ScenarioConfig,
    pub scenario: Option<String>,
    pub tool_version: Option<String>,
    pub out: Option<String>,
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}' as a number")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn range_err(key: &str, value: f64, range: &str) -> Error {
    Error::Config(format!(
        "{key} = {value} is out of range (expected {range})"
    ))
}

fn require_f64(key: &str, value: f64, ok: bool, range: &str) -> Result<f64> {
    if ok && value.is_finite() {
        Ok(value)
    } else {
        Err(range_err(key, value, range))
    }
}

fn set_position_coord(pos: &mut Position, axis: char, v: f64) {
    match axis {
        'x' => pos.x = v,
        _ => pos.y = v,
    }
}

/// Applies a single assignment to `cfg`, validating the value's range.
pub fn apply_key(parsed: &mut ParsedConfig, key: &str, value: &str) -> Result<()> {
    let cfg = &mut parsed.config;
    let value = value.trim();
    let f = |v: &str| parse_num::<f64>(key, v);
    let count = |v: &str| -> Result<usize> {
        let n: usize = parse_num(key, v)?;
        if n == 0 {
            return Err(range_err(key, 0.0, ">= 1"));
        }
        Ok(n)
    };
    let positive = |v: &str| -> Result<f64> {
        let x = f(v)?;
        require_f64(key, x, x > 0.0, "> 0")
    };
    let nonneg = |v: &str| -> Result<f64> {
        let x = f(v)?;
        require_f64(key, x, x >= 0.0, ">= 0")
    };
    let prob = |v: &str| -> Result<f64> {
        let x = f(v)?;
        require_f64(key, x, (0.0..=1.0).contains(&x), "[0, 1]")
    };
    match key {
        "scenario" => parsed.scenario = Some(value.to_string()),
        "tool_version" => parsed.tool_version = Some(value.to_string()),
        "out" => parsed.out = Some(value.to_string()),
        "seed" => cfg.seed = parse_num(key, value)?,
        "n_sus" => cfg.n_sus = count(value)?,
        "selfish_fraction" => cfg.selfish_fraction = prob(value)?,
        "deviation_prob" => cfg.deviation_prob = prob(value)?,
        "n_slots" => cfg.n_slots = count(value)?,
        "runs" => cfg.runs = count(value)?,
        "window" => cfg.window = count(value)?,
        "realizations" => cfg.realizations = count(value)?,
        "grid" => cfg.grid = count(value)?,
        "p_max" => cfg.p_max = positive(value)?,
        "p_p" => cfg.game.p_p = positive(value)?,
        "sigma2" => cfg.game.sigma2 = positive(value)?,
        "rho" => cfg.game.rho = positive(value)?,
        "eta1" => cfg.game.eta1 = nonneg(value)?,
        "eta2" => cfg.game.eta2 = nonneg(value)?,
        "eta3" => cfg.game.eta3 = positive(value)?,
        "t_slot" => cfg.game.t_slot = positive(value)?,
        "sweep" => {
            let v: Vec<f64> = parse_list(key, value)?;
            if v.is_empty() {
                return Err(Error::Config("sweep: needs at least one distance".into()));
            }
            for &d in &v {
                require_f64(key, d, d >= crate::channel::MIN_DISTANCE_M, ">= 0.1")?;
            }
            cfg.sweep = v;
        }
        "policies" => {
            let v = value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(SelectionPolicy::from_str)
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Config(format!("policies: {e}")))?;
            if v.is_empty() {
                return Err(Error::Config("policies: needs at least one policy".into()));
            }
            cfg.policies = v;
        }
        "selfish_radius" => cfg.geometry.selfish_radius = positive(value)?,
        "reliable_inner" => cfg.geometry.reliable_inner = nonneg(value)?,
        "reliable_outer" => cfg.geometry.reliable_outer = positive(value)?,
        "sr_distance" => {
            let x = f(value)?;
            cfg.geometry.sr_distance = require_f64(key, x, x >= 0.1, ">= 0.1")?;
        }
        _ => {
            let coord = key
                .strip_suffix("_x")
                .map(|n| (n, 'x'))
                .or_else(|| key.strip_suffix("_y").map(|n| (n, 'y')));
            let g = &mut cfg.geometry;
            let target = match coord {
                Some(("pt", a)) => Some((&mut g.pt, a)),
                Some(("pr", a)) => Some((&mut g.pr, a)),
                Some(("st", a)) => Some((&mut g.st, a)),
                Some(("sr", a)) => Some((&mut g.sr, a)),
                Some(("ed", a)) => Some((&mut g.ed, a)),
                _ => None,
            };
            match target {
                Some((pos, axis)) => {
                    let x = f(value)?;
                    set_position_coord(pos, axis, require_f64(key, x, true, "finite")?);
                }
                None => return Err(Error::Config(format!("unknown key '{key}'"))),
            }
        }
    }
    Ok(())
}

/// Splits `key = value` (or `key=value`).
pub fn split_assignment(line: &str) -> Result<(&str, &str)> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected 'key = value', got '{line}'")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::Config(format!("missing key in '{line}'")));
    }
    Ok((k, v.trim()))
}

/// Parses configuration text, then applies `overrides` (`key=value`
/// strings) on top. Overrides win over file values.
pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<ParsedConfig> {
    let mut parsed = ParsedConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = split_assignment(line)
            .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        if !seen.insert(k.to_string()) {
            return Err(Error::Config(format!(
                "line {}: duplicate key '{k}'",
                lineno + 1
            )));
        }
        apply_key(&mut parsed, k, v)
            .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip_prefix(&e))))?;
    }
    for o in overrides {
        let (k, v) = split_assignment(o)?;
        apply_key(&mut parsed, k, v)?;
    }
    parsed
        .config
        .validate()
        .map_err(|e| Error::Config(strip_prefix(&e)))?;
    Ok(parsed)
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<ParsedConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Every configuration key with its resolved value, in a fixed order.
/// `f64` values use the shortest representation that parses back exactly.
pub fn render_config(cfg: &ScenarioConfig) -> String {
    let g = &cfg.geometry;
    let gp = &cfg.game;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("seed", cfg.seed.to_string());
    kv("n_sus", cfg.n_sus.to_string());
    kv("selfish_fraction", cfg.selfish_fraction.to_string());
    kv("deviation_prob", cfg.deviation_prob.to_string());
    kv("n_slots", cfg.n_slots.to_string());
    kv("runs", cfg.runs.to_string());
    kv("window", cfg.window.to_string());
    kv("realizations", cfg.realizations.to_string());
    kv("grid", cfg.grid.to_string());
    kv("policies", join(&cfg.policies));
    kv("sweep", join(&cfg.sweep));
    kv("p_max", cfg.p_max.to_string());
    kv("p_p", gp.p_p.to_string());
    kv("sigma2", gp.sigma2.to_string());
    kv("rho", gp.rho.to_string());
    kv("eta1", gp.eta1.to_string());
    kv("eta2", gp.eta2.to_string());
    kv("eta3", gp.eta3.to_string());
    kv("t_slot", gp.t_slot.to_string());
    for (name, p) in [
        ("pt", g.pt),
        ("pr", g.pr),
        ("st", g.st),
        ("sr", g.sr),
        ("ed", g.ed),
    ] {
        kv(&format!("{name}_x"), p.x.to_string());
        kv(&format!("{name}_y"), p.y.to_string());
    }
    kv("selfish_radius", g.selfish_radius.to_string());
    kv("reliable_inner", g.reliable_inner.to_string());
    kv("reliable_outer", g.reliable_outer.to_string());
    kv("sr_distance", g.sr_distance.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameParams;

    #[test]
    fn empty_file_gives_defaults() {
        let p = parse_config_str("", &[]).unwrap();
        assert_eq!(p.config, ScenarioConfig::default());
        let gp = p.config.game;
        assert_eq!(
            (gp.t_slot, gp.eta1, gp.eta2, gp.sigma2, gp.rho, gp.p_p, gp.eta3),
            (1.0, 0.004, 0.0005, 1.0, 0.7, 3.0, 0.1)
        );
        assert_eq!(gp, GameParams::default());
    }

    #[test]
    fn override_wins() {
        let p = parse_config_str("rho = 0.5\n", &["rho=0.9".to_string()]).unwrap();
        assert_eq!(p.config.game.rho, 0.9);
        let mut expect = ScenarioConfig::default();
        expect.game.rho = 0.9;
        assert_eq!(p.config, expect);
    }

    #[test]
    fn negative_eta1_is_a_range_error() {
        let e = parse_config_str("eta1 = -1\n", &[])
            .unwrap_err()
            .to_string();
        assert!(e.contains("eta1") && e.contains("range"), "{e}");
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse_config_str("bogus = 3\n", &[])
            .unwrap_err()
            .to_string();
        assert!(e.contains("bogus"));
        let e = parse_config_str("n_slots = many\n", &[])
            .unwrap_err()
            .to_string();
        assert!(e.contains("n_slots"));
        let e = parse_config_str("rho 0.3\n", &[]).unwrap_err().to_string();
        assert!(e.contains("line 1"));
        let e = parse_config_str("rho = 1\nrho = 2\n", &[])
            .unwrap_err()
            .to_string();
        assert!(e.contains("duplicate"));
        let e = parse_config_str("policies = reputation, nearest\n", &[])
            .unwrap_err()
            .to_string();
        assert!(e.contains("nearest"));
        let e = parse_config_str("reliable_inner = 9\n", &[])
            .unwrap_err()
            .to_string();
        assert!(e.contains("reliable_outer"), "{e}");
    }

    #[test]
    fn comments_lists_and_positions() {
        let text = "# header\nsweep = 3, 4,5 # inline\npolicies = random\ned_y = -7.5\n\n";
        let p = parse_config_str(text, &[]).unwrap();
        assert_eq!(p.config.sweep, vec![3.0, 4.0, 5.0]);
        assert_eq!(p.config.policies, vec![SelectionPolicy::Random]);
        assert_eq!(p.config.geometry.ed.y, -7.5);
    }

    #[test]
    fn rendered_config_parses_back_exactly() {
        let mut cfg = ScenarioConfig::default();
        cfg.game.rho = 0.1 + 0.2;
        cfg.sweep = vec![1.0 / 3.0, 2.5];
        cfg.seed = u64::MAX;
        let back = parse_config_str(&render_config(&cfg), &[]).unwrap();
        assert_eq!(back.config, cfg);
    }
}
