//! Relay-selection policies compared in the multi-SU scenario.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::reputation::{ReputationTable, SuId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SelectionPolicy {
    Reputation,
    Random,
    BestCsi,
}

impl SelectionPolicy {
    pub const ALL: [SelectionPolicy; 3] = [
        SelectionPolicy::Reputation,
        SelectionPolicy::Random,
        SelectionPolicy::BestCsi,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SelectionPolicy::Reputation => "reputation",
            SelectionPolicy::Random => "random",
            SelectionPolicy::BestCsi => "best_csi",
        }
    }
}

impl fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reputation" => Ok(SelectionPolicy::Reputation),
            "random" => Ok(SelectionPolicy::Random),
            "best_csi" => Ok(SelectionPolicy::BestCsi),
            other => Err(Error::Config(format!(
                "unknown policy '{other}' (expected reputation, random or best_csi)"
            ))),
        }
    }
}

/// Highest-reputation candidate; exact ties are broken uniformly at random.
pub fn select_reputation<R: Rng + ?Sized>(
    table: &ReputationTable,
    candidates: &[SuId],
    rng: &mut R,
) -> Result<SuId> {
    let best = candidates
        .iter()
        .map(|&id| table.get(id))
        .max_by(|a, b| a.total_cmp(b))
        .ok_or(Error::NoCandidate)?;
    let tied: Vec<SuId> = candidates
        .iter()
        .copied()
        .filter(|&id| table.get(id) == best)
        .collect();
    Ok(tied[rng.random_range(0..tied.len())])
}

/// Reputation policy over every SU in the table.
pub fn select_reputation_all<R: Rng + ?Sized>(
    table: &ReputationTable,
    rng: &mut R,
) -> Result<SuId> {
    let ids: Vec<SuId> = table.iter().map(|(id, _)| id).collect();
    select_reputation(table, &ids, rng)
}

pub fn select_random<R: Rng + ?Sized>(candidates: &[SuId], rng: &mut R) -> Result<SuId> {
    if candidates.is_empty() {
        return Err(Error::NoCandidate);
    }
    Ok(candidates[rng.random_range(0..candidates.len())])
}

/// Candidate with the strongest PT->ST gain, lowest id on ties.
/// `channels` is indexed by SU id.
pub fn select_best_csi(channels: &[ChannelSet], candidates: &[SuId]) -> Result<SuId> {
    let mut best: Option<SuId> = None;
    for &id in candidates {
        let g = channels.get(id).ok_or(Error::NoCandidate)?.g_ps;
        best = match best {
            Some(b) if channels[b].g_ps > g || (channels[b].g_ps == g && b < id) => Some(b),
            _ => Some(id),
        };
    }
    best.ok_or(Error::NoCandidate)
}

/// Applies `policy` to `candidates`.
pub fn select<R: Rng + ?Sized>(
    policy: SelectionPolicy,
    table: &ReputationTable,
    channels: &[ChannelSet],
    candidates: &[SuId],
    rng: &mut R,
) -> Result<SuId> {
    match policy {
        SelectionPolicy::Reputation => select_reputation(table, candidates, rng),
        SelectionPolicy::Random => select_random(candidates, rng),
        SelectionPolicy::BestCsi => select_best_csi(channels, candidates),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table(vals: &[(SuId, f64)]) -> ReputationTable {
        let mut t = ReputationTable::new();
        for &(id, r) in vals {
            t.set(id, r);
        }
        t
    }

    fn gains(g_ps: &[f64]) -> Vec<ChannelSet> {
        g_ps.iter()
            .map(|&g| ChannelSet::new(g, 1.0, 1.0, 0.0).unwrap())
            .collect()
    }

    #[test]
    fn reputation_picks_strict_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = table(&[(1, 0.9), (2, 0.3)]);
        for _ in 0..20 {
            assert_eq!(select_reputation_all(&t, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn reputation_ties_split_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = table(&[(1, 0.5), (2, 0.5)]);
        let n = 20_000;
        let ones = (0..n)
            .filter(|_| select_reputation_all(&t, &mut rng).unwrap() == 1)
            .count();
        let f = ones as f64 / n as f64;
        assert!((f - 0.5).abs() < 0.02, "{f}");
    }

    #[test]
    fn fresh_network_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = ReputationTable::with_newcomers(0..5);
        let mut counts = [0usize; 5];
        for _ in 0..25_000 {
            counts[select_reputation_all(&t, &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 25_000.0 - 0.2).abs() < 0.015);
        }
    }

    #[test]
    fn empty_candidates_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            select_reputation(&ReputationTable::new(), &[], &mut rng),
            Err(Error::NoCandidate)
        ));
        assert!(select_random(&[], &mut rng).is_err());
        assert!(select_best_csi(&gains(&[1.0]), &[]).is_err());
    }

    // Each frequency is binomial with p = 0.1, n = 1e5: sd ~ 0.00095, so
    // 0.005 is more than five standard deviations.
    #[test]
    fn random_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ids: Vec<SuId> = (0..10).collect();
        let mut counts = [0usize; 10];
        let n = 100_000;
        for _ in 0..n {
            counts[select_random(&ids, &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.1).abs() < 0.005);
        }
    }

    #[test]
    fn random_singleton_and_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(select_random(&[7], &mut rng).unwrap(), 7);
        let ids: Vec<SuId> = (0..10).collect();
        let mut a = ChaCha8Rng::seed_from_u64(6);
        let mut b = ChaCha8Rng::seed_from_u64(6);
        let sa: Vec<_> = (0..50)
            .map(|_| select_random(&ids, &mut a).unwrap())
            .collect();
        let sb: Vec<_> = (0..50)
            .map(|_| select_random(&ids, &mut b).unwrap())
            .collect();
        assert_eq!(sa, sb);
    }

    #[test]
    fn best_csi_argmax_and_ties() {
        let ch = gains(&[0.1, 0.9, 0.4]);
        assert_eq!(select_best_csi(&ch, &[0, 1, 2]).unwrap(), 1);
        assert_eq!(select_best_csi(&ch, &[2, 0]).unwrap(), 2);
        let ch = gains(&[0.5, 0.5, 0.5]);
        assert_eq!(select_best_csi(&ch, &[2, 1, 0]).unwrap(), 0);
    }

    #[test]
    fn best_csi_favors_nearest_su() {
        use crate::channel::{build_channels, Position, SuPlacement, Topology};
        let topo = Topology {
            pt: Position::new(0.0, 0.0),
            pr: Position::new(100.0, 0.0),
            ed: Position::new(0.0, 500.0),
            sus: [10.0, 20.0, 30.0]
                .iter()
                .map(|&d| SuPlacement {
                    st: Position::new(d, 0.0),
                    sr: Position::new(d, 10.0),
                })
                .collect(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut counts = [0usize; 3];
        for _ in 0..5000 {
            let ch = build_channels(&topo, &mut rng).unwrap();
            counts[select_best_csi(&ch, &[0, 1, 2]).unwrap()] += 1;
        }
        assert!(counts[0] > counts[1] && counts[1] > counts[2], "{counts:?}");
    }

    #[test]
    fn policy_names_round_trip() {
        for p in SelectionPolicy::ALL {
            assert_eq!(p.as_str().parse::<SelectionPolicy>().unwrap(), p);
        }
        assert!("nearest".parse::<SelectionPolicy>().is_err());
    }

    proptest! {
        #[test]
        fn argmax_survives_monotone_transform(vals in prop::collection::vec(0.011..0.99f64, 1..10), seed in any::<u64>()) {
            let t = table(&vals.iter().copied().enumerate().collect::<Vec<_>>());
            let squashed = table(&vals.iter().map(|&r| r.sqrt()).enumerate().collect::<Vec<_>>());
            let ids: Vec<SuId> = (0..vals.len()).collect();
            let a = select_reputation(&t, &ids, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let b = select_reputation(&squashed, &ids, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
