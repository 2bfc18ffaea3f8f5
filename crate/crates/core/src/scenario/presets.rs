//! Canonical experiment cells used by the sweep runner and the test
//! suites.
//!
//! A *cell* is one `(n, t, d, strategy, policy)` point of the parameter
//! grid: process 0 broadcasts one payload at step 0, the top `t` ids run
//! the Byzantine strategy, and the drop policy gets the full budget `d`.
//! Victim sets avoid the broadcaster so the adversary spends its budget
//! where it hurts.

use std::collections::BTreeSet;

use crate::adversary::{ByzStrategy, DropPolicy};
use crate::protocol::Config;
use crate::scenario::{AppBroadcast, Scenario, Schedule};
use crate::sigcrypt::ProcessId;

/// The payload broadcast by process 0 in every cell.
pub const CELL_PAYLOAD: &[u8] = b"m";
/// Conflicting payloads used by equivocating strategies.
pub const CELL_PAYLOAD_A: &[u8] = b"m-a";
pub const CELL_PAYLOAD_B: &[u8] = b"m-b";

/// Byzantine postures exercised by the sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum StrategyKind {
    Silent,
    Equivocate,
    CrashMidBroadcast,
    Replayer,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Silent,
        StrategyKind::Equivocate,
        StrategyKind::CrashMidBroadcast,
        StrategyKind::Replayer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Silent => "silent",
            StrategyKind::Equivocate => "equivocate",
            StrategyKind::CrashMidBroadcast => "crash_mid_broadcast",
            StrategyKind::Replayer => "replayer",
        }
    }
}

/// Message-adversary postures exercised by the sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PolicyKind {
    None,
    StaticSet,
    PerBroadcastRandom,
}

impl PolicyKind {
    pub const SWEEP: [PolicyKind; 2] = [PolicyKind::StaticSet, PolicyKind::PerBroadcastRandom];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::None => "none",
            PolicyKind::StaticSet => "static_set",
            PolicyKind::PerBroadcastRandom => "per_broadcast_random",
        }
    }
}

/// All `(t, d)` pairs satisfying the resilience assumption at `n`,
/// including the adversary-free `(0, 0)`.
pub fn valid_pairs(n: u32) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    let mut t = 0;
    while 3 * t < n {
        let mut d = 0;
        while n > 3 * t + 2 * d {
            pairs.push((t, d));
            d += 1;
        }
        t += 1;
    }
    pairs
}

/// One grid cell. `strategy` is ignored when `t == 0` (there is nobody
/// to run it). The broadcaster is process 0; Byzantine ids are the top
/// `t`; static victims are the lowest non-broadcaster correct ids.
pub fn cell(
    n: u32,
    t: u32,
    d: u32,
    strategy: StrategyKind,
    policy: PolicyKind,
    schedule: Schedule,
    master_seed: u64,
) -> Scenario {
    let byz_count = t.min(n - 1);
    let config = Config::new(n, t, d, n - byz_count).expect("grid cells are well-formed");
    let mut scenario = Scenario::new(config);
    scenario.master_seed = master_seed;
    scenario.horizon = match schedule {
        Schedule::Lockstep => 4 * u64::from(n),
        Schedule::SeededAsync { .. } => Scenario::default_async_horizon(n),
    };
    scenario.schedule = schedule;

    scenario.broadcasts.push(AppBroadcast {
        sender: ProcessId(0),
        payload: CELL_PAYLOAD.to_vec(),
        sn: 1,
        at_step: 0,
    });

    let correct: Vec<ProcessId> = (0..u64::from(n - byz_count)).map(ProcessId).collect();
    for i in 0..byz_count {
        let id = ProcessId(u64::from(n - 1 - i));
        let half = correct.len() / 2;
        let strat = match strategy {
            StrategyKind::Silent => ByzStrategy::Silent,
            StrategyKind::Equivocate => ByzStrategy::Equivocate {
                payload_a: CELL_PAYLOAD_A.to_vec(),
                payload_b: CELL_PAYLOAD_B.to_vec(),
                sn: 1,
                group_a: correct[..half].iter().copied().collect(),
                group_b: correct[half..].iter().copied().collect(),
            },
            StrategyKind::CrashMidBroadcast => ByzStrategy::CrashMidBroadcast {
                payload: CELL_PAYLOAD_A.to_vec(),
                sn: 1,
                recipients: correct[..correct.len().div_ceil(2)].iter().copied().collect(),
            },
            StrategyKind::Replayer => ByzStrategy::Replayer { budget: 2 * n },
        };
        scenario.byzantine.insert(id, strat);
    }

    scenario.drop_policy = match policy {
        PolicyKind::None => DropPolicy::None,
        PolicyKind::StaticSet => DropPolicy::StaticSet {
            victims: static_victims(n, byz_count, d),
        },
        PolicyKind::PerBroadcastRandom => DropPolicy::PerBroadcastRandom,
    };

    scenario
}

/// The worst-case static victim set: `d` correct processes, excluding
/// the broadcaster.
pub fn static_victims(n: u32, byz_count: u32, d: u32) -> BTreeSet<ProcessId> {
    let correct_non_sender = n - byz_count - 1;
    (1..=u64::from(d.min(correct_non_sender)))
        .map(ProcessId)
        .collect()
}

/// An adversary-free lockstep scenario: one broadcast, no Byzantine
/// processes, no suppression, model parameter `t` kept for the quorum
/// rule.
pub fn honest(n: u32, t: u32) -> Scenario {
    let config = Config::new(n, t, 0, n).expect("honest shape is well-formed");
    let mut scenario = Scenario::new(config);
    scenario.broadcasts.push(AppBroadcast {
        sender: ProcessId(0),
        payload: CELL_PAYLOAD.to_vec(),
        sn: 1,
        at_step: 0,
    });
    scenario
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_pairs_respect_the_assumption() {
        for n in 1..=12 {
            for (t, d) in valid_pairs(n) {
                assert!(n > 3 * t + 2 * d, "n={n} t={t} d={d}");
            }
        }
        assert_eq!(valid_pairs(4), vec![(0, 0), (0, 1), (1, 0)]);
        // n = 10: t up to 3, d shrinking with t.
        assert_eq!(
            valid_pairs(10),
            vec![
                (0, 0),
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (1, 0),
                (1, 1),
                (1, 2),
                (1, 3),
                (2, 0),
                (2, 1),
                (3, 0)
            ]
        );
    }

    #[test]
    fn cells_validate_for_the_whole_grid() {
        for n in 4..=10 {
            for (t, d) in valid_pairs(n) {
                for strategy in StrategyKind::ALL {
                    for policy in PolicyKind::SWEEP {
                        let s = cell(n, t, d, strategy, policy, Schedule::Lockstep, 1);
                        let warnings = s.validate().unwrap_or_else(|e| {
                            panic!("cell n={n} t={t} d={d} {strategy:?} {policy:?}: {e}")
                        });
                        assert!(warnings.is_empty());
                    }
                }
            }
        }
    }

    #[test]
    fn static_victims_exclude_broadcaster_and_byzantine() {
        let v = static_victims(10, 3, 3);
        assert_eq!(v.len(), 3);
        assert!(!v.contains(&ProcessId(0)));
        assert!(v.iter().all(|p| p.0 < 7));
    }
}
