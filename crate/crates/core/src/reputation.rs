//! Per-SU trust values kept by a primary user.
//!
//! First-hand values move by `eta3 * ln(epsilon)` after each observed slot,
//! where `epsilon` weighs the power an SU spent serving the PU against the
//! power it spent on itself. A full defection (`epsilon = 0`) sends the
//! value straight to the floor, while recovery is bounded by the upper
//! clamp and by how much service the SU can physically deliver.

use std::collections::BTreeMap;

use crate::channel::ChannelSet;
use crate::game::PowerAllocation;

/// Lower end of the reputation range; newcomers start here.
pub const REPUTATION_FLOOR: f64 = 0.01;
pub const REPUTATION_CEIL: f64 = 1.0;

pub type SuId = usize;

/// Service-to-selfishness ratio of one observed power allocation.
///
/// `0/0` is neutral (1); a positive numerator over a zero denominator is
/// `+inf`.
pub fn epsilon(pw: &PowerAllocation, ch: &ChannelSet) -> f64 {
    let service = pw.p_j * ch.g_se + pw.p_c * ch.g_sp;
    let own = pw.p_s * ch.g_ss;
    if own == 0.0 {
        if service > 0.0 {
            f64::INFINITY
        } else {
            1.0
        }
    } else {
        service / own
    }
}

fn clamp(r: f64) -> f64 {
    r.clamp(REPUTATION_FLOOR, REPUTATION_CEIL)
}

/// Reputation after one slot with service ratio `eps`.
pub fn first_hand_step(r_prev: f64, eps: f64, eta3: f64) -> f64 {
    if eps <= 0.0 {
        return REPUTATION_FLOOR;
    }
    clamp(r_prev + eta3 * eps.ln())
}

pub fn first_hand_update(r_prev: f64, pw: &PowerAllocation, ch: &ChannelSet, eta3: f64) -> f64 {
    first_hand_step(r_prev, epsilon(pw, ch), eta3)
}

/// Mean of the values reported by neighbouring PUs, or the newcomer value
/// when nobody has an opinion.
pub fn second_hand(neighbor_reps: &[f64]) -> f64 {
    if neighbor_reps.is_empty() {
        return init_reputation();
    }
    let sum: f64 = neighbor_reps.iter().sum();
    clamp(sum / neighbor_reps.len() as f64)
}

pub fn init_reputation() -> f64 {
    REPUTATION_FLOOR
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReputationTable {
    entries: BTreeMap<SuId, f64>,
}

impl ReputationTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Table with every listed SU at the newcomer value.
    pub fn with_newcomers(ids: impl IntoIterator<Item = SuId>) -> Self {
        ReputationTable {
            entries: ids.into_iter().map(|id| (id, init_reputation())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Known value, or the newcomer value for an SU never seen before.
    pub fn get(&self, id: SuId) -> f64 {
        self.entries
            .get(&id)
            .copied()
            .unwrap_or_else(init_reputation)
    }

    pub fn contains(&self, id: SuId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn set(&mut self, id: SuId, r: f64) {
        self.entries.insert(id, clamp(r));
    }

    /// Registers an SU, consulting neighbouring PUs' tables when it is new.
    pub fn admit(&mut self, id: SuId, neighbors: &[&ReputationTable]) -> f64 {
        if let Some(&r) = self.entries.get(&id) {
            return r;
        }
        let reports: Vec<f64> = neighbors
            .iter()
            .filter_map(|t| t.entries.get(&id).copied())
            .collect();
        let r = second_hand(&reports);
        self.entries.insert(id, r);
        r
    }

    /// Applies one first-hand observation and returns the new value.
    pub fn observe(&mut self, id: SuId, pw: &PowerAllocation, ch: &ChannelSet, eta3: f64) -> f64 {
        let r = first_hand_update(self.get(id), pw, ch, eta3);
        self.entries.insert(id, r);
        r
    }

    pub fn iter(&self) -> impl Iterator<Item = (SuId, f64)> + '_ {
        self.entries.iter().map(|(&id, &r)| (id, r))
    }
}
