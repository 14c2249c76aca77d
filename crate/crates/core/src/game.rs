//! Secrecy-rate objective, secondary-user utility and the leader/follower
//! solver.
//!
//! A slot of length `T` is split into three phases:
//!
//! * `(1-alpha)T` the PU broadcasts to the selected SU,
//! * `alpha*beta*T` the SU relays (decode-and-forward) and jams,
//! * `alpha*(1-beta)*T` the SU uses the leased spectrum for itself.
//!
//! The SU always exhausts its energy budget and keeps the jamming/relaying
//! ratio `rho` fixed, so its whole strategy collapses to the own-transmission
//! power `p_s`; relaying and jamming powers follow from [`dependent_powers`].

use std::cmp::Ordering;
use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::optimize::golden_section_max;

/// Smallest admissible argument of the reputation-proportional `ln` term.
pub const LN_ARG_FLOOR: f64 = 1e-12;

/// Default number of leader grid points per axis.
pub const DEFAULT_LEADER_GRID: usize = 99;

/// Best-response search stops once the bracket is below this fraction of `p_max`.
pub const BEST_RESPONSE_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameParams {
    /// PU transmit power, mW.
    pub p_p: f64,
    /// Noise power, mW.
    pub sigma2: f64,
    /// Jamming-to-relaying power ratio requested by the PU.
    pub rho: f64,
    /// Cost per mW of own transmission.
    pub eta1: f64,
    /// Cost per mW of relaying and jamming.
    pub eta2: f64,
    /// Reputation step coefficient.
    pub eta3: f64,
    /// Slot duration.
    pub t_slot: f64,
}

impl Default for GameParams {
    fn default() -> Self {
        GameParams {
            p_p: 3.0,
            sigma2: 1.0,
            rho: 0.7,
            eta1: 0.004,
            eta2: 0.0005,
            eta3: 0.1,
            t_slot: 1.0,
        }
    }
}

fn require(what: &'static str, value: f64, ok: bool, range: &str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(what, value, range))
    }
}

impl GameParams {
    pub fn validate(&self) -> Result<()> {
        require("p_p", self.p_p, self.p_p > 0.0, "> 0")?;
        require("sigma2", self.sigma2, self.sigma2 > 0.0, "> 0")?;
        require("rho", self.rho, self.rho > 0.0, "> 0")?;
        require("eta1", self.eta1, self.eta1 >= 0.0, ">= 0")?;
        require("eta2", self.eta2, self.eta2 >= 0.0, ">= 0")?;
        require("eta3", self.eta3, self.eta3 > 0.0, "> 0")?;
        require("t_slot", self.t_slot, self.t_slot > 0.0, "> 0")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAllocation {
    pub alpha: f64,
    pub beta: f64,
}

impl TimeAllocation {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        require("alpha", alpha, alpha > 0.0 && alpha < 1.0, "(0, 1)")?;
        require("beta", beta, beta > 0.0 && beta < 1.0, "(0, 1)")?;
        Ok(TimeAllocation { alpha, beta })
    }

    /// Share of the slot spent on relaying and jamming.
    pub fn cooperation_share(&self) -> f64 {
        self.alpha * self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerAllocation {
    pub p_s: f64,
    pub p_c: f64,
    pub p_j: f64,
}

impl PowerAllocation {
    /// Relative violation of `beta*(p_c + p_j) + (1-beta)*p_s = p_max`.
    pub fn energy_residual(&self, beta: f64, p_max: f64) -> f64 {
        let used = beta * (self.p_c + self.p_j) + (1.0 - beta) * self.p_s;
        (used - p_max).abs() / p_max
    }

    /// All energy spent on own transmission.
    pub fn full_defection(beta: f64, p_max: f64) -> Self {
        PowerAllocation {
            p_s: p_max / (1.0 - beta),
            p_c: 0.0,
            p_j: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuConfig {
    /// Maximum slot-average power, mW.
    pub p_max: f64,
}

impl SuConfig {
    pub fn new(p_max: f64) -> Result<Self> {
        require("p_max", p_max, p_max > 0.0, "> 0")?;
        Ok(SuConfig { p_max })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackelbergSolution {
    pub alpha_star: f64,
    pub beta_star: f64,
    pub p_s_star: f64,
    pub powers: PowerAllocation,
    pub secrecy_rate: f64,
    pub su_utility: f64,
}

impl StackelbergSolution {
    pub fn time_allocation(&self) -> TimeAllocation {
        TimeAllocation {
            alpha: self.alpha_star,
            beta: self.beta_star,
        }
    }
}

/// Result of the leader's decision for one candidate SU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeaseOutcome {
    Leased(StackelbergSolution),
    /// The channel cannot support a positive secrecy rate; the PU keeps the slot.
    NoLease,
}

impl LeaseOutcome {
    pub fn secrecy_rate(&self) -> f64 {
        match self {
            LeaseOutcome::Leased(s) => s.secrecy_rate,
            LeaseOutcome::NoLease => 0.0,
        }
    }

    pub fn solution(&self) -> Option<&StackelbergSolution> {
        match self {
            LeaseOutcome::Leased(s) => Some(s),
            LeaseOutcome::NoLease => None,
        }
    }
}

/// Secrecy rate delivered at PR over one slot, clamped at zero once.
pub fn secrecy_rate(
    ta: &TimeAllocation,
    pw: &PowerAllocation,
    ch: &ChannelSet,
    gp: &GameParams,
) -> f64 {
    let t = gp.t_slot;
    let coop = ta.alpha * ta.beta * t;
    let first_hop = (1.0 - ta.alpha) * t * (gp.p_p * ch.g_ps / gp.sigma2).ln_1p() / LN_2;
    let second_hop = coop * (pw.p_c * ch.g_sp / gp.sigma2).ln_1p() / LN_2;
    let leakage = coop * (pw.p_c * ch.g_se / (gp.sigma2 + pw.p_j * ch.g_se)).ln_1p() / LN_2;
    (first_hop.min(second_hop) - leakage).max(0.0)
}

/// Whether the channel admits a nonzero secrecy rate at all.
pub fn secrecy_feasible(ch: &ChannelSet) -> bool {
    ch.g_ps > ch.g_se && ch.g_sp > ch.g_se
}

/// Upper end of the own-power range allowed by the energy budget.
pub fn max_own_power(ta: &TimeAllocation, su: &SuConfig) -> f64 {
    su.p_max / (1.0 - ta.beta)
}

/// Relaying and jamming powers implied by `p_s` under the energy equality
/// and the `rho` ratio.
pub fn dependent_powers(
    p_s: f64,
    ta: &TimeAllocation,
    su: &SuConfig,
    gp: &GameParams,
) -> Result<PowerAllocation> {
    let hi = max_own_power(ta, su);
    if !(p_s >= 0.0 && p_s <= hi * (1.0 + 1e-12)) {
        return Err(Error::domain("p_s", p_s, format!("[0, {hi}]")));
    }
    let p_c = ((su.p_max - (1.0 - ta.beta) * p_s) / (ta.beta * (1.0 + gp.rho))).max(0.0);
    Ok(PowerAllocation {
        p_s,
        p_c,
        p_j: gp.rho * p_c,
    })
}

/// Affine pieces of the SU objective in `p_s`, shared by the utility, its
/// derivatives and the feasible-interval computation.
#[derive(Debug, Clone, Copy)]
struct UtilityShape {
    /// `alpha*(1-beta)*T`
    own_share: f64,
    /// `alpha*T`
    lease_share: f64,
    /// `g_ss / sigma2`
    snr_gain: f64,
    /// `ln` argument at `p_s = 0`
    ln_arg0: f64,
    /// Rate at which the `ln` argument falls per mW of `p_s`.
    ln_slope: f64,
    /// Upper energy bound on `p_s`.
    p_s_hi: f64,
    p_max: f64,
    eta1: f64,
    eta2: f64,
    beta: f64,
}

impl UtilityShape {
    fn new(ta: &TimeAllocation, su: &SuConfig, ch: &ChannelSet, gp: &GameParams) -> Self {
        let service_gain = ch.g_sp + gp.rho * ch.g_se;
        let denom = ta.beta * (1.0 + gp.rho);
        UtilityShape {
            own_share: ta.alpha * (1.0 - ta.beta) * gp.t_slot,
            lease_share: ta.alpha * gp.t_slot,
            snr_gain: ch.g_ss / gp.sigma2,
            ln_arg0: service_gain * su.p_max / denom + 1.0,
            ln_slope: (1.0 - ta.beta) * service_gain / denom + ch.g_ss,
            p_s_hi: max_own_power(ta, su),
            p_max: su.p_max,
            eta1: gp.eta1,
            eta2: gp.eta2,
            beta: ta.beta,
        }
    }

    fn ln_arg(&self, p_s: f64) -> f64 {
        self.ln_arg0 - self.ln_slope * p_s
    }

    /// Utility without feasibility checks.
    fn value(&self, p_s: f64) -> f64 {
        let rate = self.own_share * (self.snr_gain * p_s).ln_1p() / LN_2;
        let own_cost = self.eta1 * self.own_share * p_s;
        // alpha*beta*T*(p_c + p_j) == alpha*T*(p_max - (1-beta)*p_s)
        let service_cost = self.eta2 * self.lease_share * (self.p_max - (1.0 - self.beta) * p_s);
        rate - own_cost - service_cost + self.ln_arg(p_s).ln()
    }

    fn first_derivative(&self, p_s: f64) -> f64 {
        self.own_share * self.snr_gain / (LN_2 * (1.0 + self.snr_gain * p_s))
            - self.eta1 * self.own_share
            + self.eta2 * self.lease_share * (1.0 - self.beta)
            - self.ln_slope / self.ln_arg(p_s)
    }

    fn second_derivative(&self, p_s: f64) -> f64 {
        let x = 1.0 + self.snr_gain * p_s;
        let l = self.ln_arg(p_s);
        -self.own_share / LN_2 * self.snr_gain * self.snr_gain / (x * x)
            - self.ln_slope * self.ln_slope / (l * l)
    }

    fn feasible(&self, p_s: f64) -> bool {
        p_s >= 0.0 && p_s <= self.p_s_hi * (1.0 + 1e-12) && self.ln_arg(p_s) > LN_ARG_FLOOR
    }

    /// Largest `p_s` satisfying both the energy bound and the `ln` floor.
    /// The `ln` argument is affine and decreasing, so the feasible set is `[0, hi]`.
    fn upper_bound(&self) -> f64 {
        if self.ln_slope > 0.0 {
            self.p_s_hi
                .min((self.ln_arg0 - LN_ARG_FLOOR) / self.ln_slope)
        } else {
            self.p_s_hi
        }
    }
}

fn checked_shape(
    p_s: f64,
    ta: &TimeAllocation,
    su: &SuConfig,
    ch: &ChannelSet,
    gp: &GameParams,
) -> Result<UtilityShape> {
    let shape = UtilityShape::new(ta, su, ch, gp);
    if !(p_s >= 0.0 && p_s <= shape.p_s_hi * (1.0 + 1e-12)) {
        return Err(Error::domain("p_s", p_s, format!("[0, {}]", shape.p_s_hi)));
    }
    if shape.ln_arg(p_s) <= LN_ARG_FLOOR {
        return Err(Error::Infeasible(
            "reputation term argument is not positive",
        ));
    }
    Ok(shape)
}

/// Secondary-user utility as a function of its own-transmission power.
pub fn su_utility(
    p_s: f64,
    ta: &TimeAllocation,
    su: &SuConfig,
    ch: &ChannelSet,
    gp: &GameParams,
) -> Result<f64> {
    Ok(checked_shape(p_s, ta, su, ch, gp)?.value(p_s))
}

/// Analytic first derivative of [`su_utility`] with respect to `p_s`.
pub fn utility_first_derivative(
    p_s: f64,
    ta: &TimeAllocation,
    su: &SuConfig,
    ch: &ChannelSet,
    gp: &GameParams,
) -> Result<f64> {
    Ok(checked_shape(p_s, ta, su, ch, gp)?.first_derivative(p_s))
}

/// Analytic second derivative of [`su_utility`] with respect to `p_s`,
/// using squared channel magnitudes throughout.
pub fn utility_second_derivative(
    p_s: f64,
    ta: &TimeAllocation,
    su: &SuConfig,
    ch: &ChannelSet,
    gp: &GameParams,
) -> Result<f64> {
    Ok(checked_shape(p_s, ta, su, ch, gp)?.second_derivative(p_s))
}

/// Closed feasible interval `[0, hi]` for the SU's own power.
pub fn feasible_interval(
    ta: &TimeAllocation,
    su: &SuConfig,
    ch: &ChannelSet,
    gp: &GameParams,
) -> Result<(f64, f64)> {
    let shape = UtilityShape::new(ta, su, ch, gp);
    let hi = shape.upper_bound();
    if hi.is_nan() || hi < 0.0 || !shape.feasible(0.0) {
        return Err(Error::Infeasible("empty own-power interval"));
    }
    Ok((0.0, hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse {
    pub p_s: f64,
    pub utility: f64,
}

/// The SU's utility-maximizing own power for a given time split.
///
/// The utility is strictly concave, so a non-positive slope at the lower
/// end (or non-negative slope at the upper end) pins the maximizer to that
/// end. Otherwise golden-section search runs on the interior and the result
/// is compared against both endpoints.
pub fn su_best_response(
    ta: &TimeAllocation,
    su: &SuConfig,
    ch: &ChannelSet,
    gp: &GameParams,
) -> Result<BestResponse> {
    let shape = UtilityShape::new(ta, su, ch, gp);
    let (lo, hi) = feasible_interval(ta, su, ch, gp)?;
    let at = |p: f64| BestResponse {
        p_s: p,
        utility: shape.value(p),
    };
    if hi <= lo || shape.first_derivative(lo) <= 0.0 {
        return Ok(at(lo));
    }
    let hi_feasible = shape.feasible(hi);
    if hi_feasible && shape.first_derivative(hi) >= 0.0 {
        return Ok(at(hi));
    }
    let tol = BEST_RESPONSE_REL_TOL * su.p_max;
    let inner = golden_section_max(|p| shape.value(p), lo, hi, tol);
    let mut best = BestResponse {
        p_s: inner.x,
        utility: inner.value,
    };
    for end in [lo, hi] {
        if shape.feasible(end) {
            let cand = at(end);
            if cand.utility > best.utility {
                best = cand;
            }
        }
    }
    Ok(best)
}

/// Leader grid over `(0,1)^2`; point `k` on an axis is `k / (size + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeaderGrid {
    pub size: usize,
}

impl Default for LeaderGrid {
    fn default() -> Self {
        LeaderGrid {
            size: DEFAULT_LEADER_GRID,
        }
    }
}

impl LeaderGrid {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::domain("grid", 0.0, ">= 1"));
        }
        Ok(LeaderGrid { size })
    }

    pub fn point(&self, k: usize) -> f64 {
        (k + 1) as f64 / (self.size + 1) as f64
    }
}

/// Follower response and resulting secrecy rate for one leader strategy.
pub fn evaluate_leader_strategy(
    ta: &TimeAllocation,
    su: &SuConfig,
    ch: &ChannelSet,
    gp: &GameParams,
) -> Result<StackelbergSolution> {
    let br = su_best_response(ta, su, ch, gp)?;
    let powers = dependent_powers(br.p_s, ta, su, gp)?;
    Ok(StackelbergSolution {
        alpha_star: ta.alpha,
        beta_star: ta.beta,
        p_s_star: br.p_s,
        powers,
        secrecy_rate: secrecy_rate(ta, &powers, ch, gp),
        su_utility: br.utility,
    })
}

/// Total order used by the leader: higher rate wins, then smaller alpha,
/// then smaller beta. `Ordering::Greater` means `a` is preferred.
fn leader_preference(a: &StackelbergSolution, b: &StackelbergSolution) -> Ordering {
    a.secrecy_rate
        .total_cmp(&b.secrecy_rate)
        .then_with(|| b.alpha_star.total_cmp(&a.alpha_star))
        .then_with(|| b.beta_star.total_cmp(&a.beta_star))
}

fn preferred(a: StackelbergSolution, b: StackelbergSolution) -> StackelbergSolution {
    if leader_preference(&a, &b) == Ordering::Less {
        b
    } else {
        a
    }
}

/// Backward induction: for every grid point the PU anticipates the SU's best
/// response and keeps the time split with the highest secrecy rate.
pub fn stackelberg_solve(
    su: &SuConfig,
    ch: &ChannelSet,
    gp: &GameParams,
    grid: LeaderGrid,
) -> Result<LeaseOutcome> {
    gp.validate()?;
    ch.validate()?;
    if !secrecy_feasible(ch) {
        return Ok(LeaseOutcome::NoLease);
    }
    let best = (0..grid.size)
        .into_par_iter()
        .map(|i| {
            let alpha = grid.point(i);
            let mut row_best: Option<StackelbergSolution> = None;
            for j in 0..grid.size {
                let ta = TimeAllocation {
                    alpha,
                    beta: grid.point(j),
                };
                let sol = evaluate_leader_strategy(&ta, su, ch, gp)?;
                row_best = Some(match row_best {
                    Some(b) => preferred(b, sol),
                    None => sol,
                });
            }
            Ok(row_best)
        })
        .try_reduce(
            || None,
            |a, b| {
                Ok(match (a, b) {
                    (Some(x), Some(y)) => Some(preferred(x, y)),
                    (x, None) => x,
                    (None, y) => y,
                })
            },
        )?;
    Ok(best.map_or(LeaseOutcome::NoLease, LeaseOutcome::Leased))
}
