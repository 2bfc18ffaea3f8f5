//! The two adversaries the protocol must survive.
//!
//! The *message adversary* acts on every broadcast a correct process
//! makes: it may suppress up to `d` of the copies addressed to correct
//! receivers. [`DropPolicy`] is its strategy catalogue; policies are
//! deterministic in `(policy, event, rng stream)` so runs replay exactly.
//!
//! *Byzantine processes* do not run the protocol at all. A
//! [`ByzStrategy`] may emit arbitrary bundles to arbitrary receiver
//! subsets, with one structural restriction enforcing unforgeability:
//! strategy code signs with its own key only. Signatures of other
//! processes can be copied from received bundles, never minted.
//!
//! [`build_boundary_attack`] assembles the partition attack showing
//! `n > 3t + 2d` is tight: at `n = 3t + 2d` no correct process can ever
//! gather a quorum for the equivocator's slot, while the same attack at
//! `n = 3t + 2d + 1` lets `c - d` correct processes deliver one message.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::protocol::{Bundle, Config};
use crate::scenario::{AppBroadcast, DelayRule, Scenario, Schedule};
use crate::sigcrypt::{encode_triplet, KeyPair, ProcessId, Scheme};

/// Message-adversary strategy for one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DropPolicy {
    /// No suppression; the network behaves reliably.
    None,
    /// Suppress every copy addressed to a fixed victim set.
    StaticSet { victims: BTreeSet<ProcessId> },
    /// For each broadcast, suppress `d` victims drawn from the run's
    /// adversary RNG stream.
    PerBroadcastRandom,
    /// Content-targeted suppression: each rule kills the copies of
    /// bundles carrying `payload` addressed to `victims`. Used by the
    /// partition attack.
    TargetedPartition { rules: Vec<PartitionRule> },
    /// Suppress a fixed victim set only before round `tau`; the
    /// adversary goes quiescent afterwards.
    QuiescentAfterTau {
        victims: BTreeSet<ProcessId>,
        tau: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionRule {
    pub payload: Vec<u8>,
    pub victims: BTreeSet<ProcessId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("victim set of size {got} exceeds the adversary budget d = {d}")]
    VictimSetTooLarge { got: usize, d: u32 },
    #[error("boundary attack needs t + d >= 1")]
    DegenerateSchedule,
}

impl DropPolicy {
    /// Check the policy's victim sets against the per-broadcast budget.
    pub fn validate(&self, d: u32) -> Result<(), AdversaryError> {
        let check = |set: &BTreeSet<ProcessId>| {
            if set.len() > d as usize {
                Err(AdversaryError::VictimSetTooLarge { got: set.len(), d })
            } else {
                Ok(())
            }
        };
        match self {
            DropPolicy::None | DropPolicy::PerBroadcastRandom => Ok(()),
            DropPolicy::StaticSet { victims } => check(victims),
            DropPolicy::QuiescentAfterTau { victims, .. } => check(victims),
            DropPolicy::TargetedPartition { rules } => {
                rules.iter().try_for_each(|r| check(&r.victims))
            }
        }
    }
}

/// One broadcast by a correct process, as seen by the message adversary.
#[derive(Clone, Copy, Debug)]
pub struct BroadcastEvent<'a> {
    pub sender: ProcessId,
    pub bundle: &'a Bundle,
    pub round: u64,
}

/// Pick the receivers whose copies this broadcast loses. Returns a subset
/// of `correct` of size at most `d`. The sender's own copy is exempt
/// unless `suppress_self` is set (a process normally always receives its
/// own broadcast; the flag exists for sensitivity runs).
pub fn select_suppressed(
    policy: &DropPolicy,
    event: &BroadcastEvent<'_>,
    correct: &BTreeSet<ProcessId>,
    d: u32,
    suppress_self: bool,
    rng: &mut ChaCha8Rng,
) -> BTreeSet<ProcessId> {
    let eligible = |p: &ProcessId| correct.contains(p) && (suppress_self || *p != event.sender);
    let chosen: BTreeSet<ProcessId> = match policy {
        DropPolicy::None => BTreeSet::new(),
        DropPolicy::StaticSet { victims } => victims.iter().copied().filter(eligible).collect(),
        DropPolicy::PerBroadcastRandom => {
            let pool: Vec<ProcessId> = correct.iter().copied().filter(eligible).collect();
            let take = (d as usize).min(pool.len());
            let mut picked: Vec<ProcessId> =
                pool.choose_multiple(rng, take).copied().collect();
            picked.sort();
            picked.into_iter().collect()
        }
        DropPolicy::TargetedPartition { rules } => rules
            .iter()
            .filter(|r| r.payload == event.bundle.payload)
            .flat_map(|r| r.victims.iter().copied())
            .filter(eligible)
            .collect(),
        DropPolicy::QuiescentAfterTau { victims, tau } => {
            if event.round >= *tau {
                BTreeSet::new()
            } else {
                victims.iter().copied().filter(eligible).collect()
            }
        }
    };
    debug_assert!(chosen.len() <= d as usize);
    chosen
}

/// Catalogue of Byzantine behaviors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ByzStrategy {
    /// Never sends anything. Also models a cleanly crashed process.
    Silent,
    /// Starts a broadcast but "crashes" mid-way: the initial bundle
    /// reaches only a strict subset of processes, then silence forever.
    CrashMidBroadcast {
        payload: Vec<u8>,
        sn: u64,
        recipients: BTreeSet<ProcessId>,
    },
    /// Sends payload `a` to one group and a conflicting payload `b` to
    /// another, both under the same `(sn, self)` slot.
    Equivocate {
        payload_a: Vec<u8>,
        payload_b: Vec<u8>,
        sn: u64,
        group_a: BTreeSet<ProcessId>,
        group_b: BTreeSet<ProcessId>,
    },
    /// Re-sends every bundle it receives to all processes, up to a total
    /// budget (keeps runs finite).
    Replayer { budget: u32 },
    /// One cell of the coordinated boundary partition attack. The leader fakes an
    /// mbrb-broadcast with different payloads per side; colleagues
    /// countersign whichever leader bundle they receive and echo it to
    /// that side only.
    PartitionAttacker {
        leader: ProcessId,
        payload_a: Vec<u8>,
        payload_b: Vec<u8>,
        sn: u64,
        side_a: BTreeSet<ProcessId>,
        side_b: BTreeSet<ProcessId>,
        colleagues: BTreeSet<ProcessId>,
    },
}

/// A point-to-point Byzantine transmission: unlike correct processes,
/// Byzantine ones are not forced through the broadcast macro.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawSend {
    pub targets: BTreeSet<ProcessId>,
    pub bundle: Bundle,
}

/// A Byzantine process: its strategy plus the only key material it may
/// sign with — its own.
#[derive(Clone, Debug)]
pub struct ByzProcess {
    pub id: ProcessId,
    pub strategy: ByzStrategy,
    keys: KeyPair,
    scheme: Scheme,
    n: u32,
    started: bool,
    echoed_a: bool,
    echoed_b: bool,
    replays: u32,
}

impl ByzProcess {
    pub fn new(strategy: ByzStrategy, keys: KeyPair, scheme: Scheme, n: u32) -> Self {
        ByzProcess {
            id: keys.owner,
            strategy,
            keys,
            scheme,
            n,
            started: false,
            echoed_a: false,
            echoed_b: false,
            replays: 0,
        }
    }

    fn sign_own(&self, payload: &[u8], sn: u64, slot_sender: ProcessId) -> crate::sigcrypt::Signature {
        let enc = encode_triplet(payload, sn, slot_sender).expect("strategy payloads encode");
        self.scheme.sign(&self.keys.secret, self.id, &enc)
    }

    /// Advance the strategy. Lockstep calls this once per round with the
    /// round inbox; the async engine calls it once per received bundle.
    pub fn step(&mut self, round: u64, inbox: &[Bundle], _rng: &mut ChaCha8Rng) -> Vec<RawSend> {
        match self.strategy.clone() {
            ByzStrategy::Silent => Vec::new(),
            ByzStrategy::CrashMidBroadcast {
                payload,
                sn,
                recipients,
            } => {
                if self.started {
                    return Vec::new();
                }
                self.started = true;
                let sig = self.sign_own(&payload, sn, self.id);
                vec![RawSend {
                    targets: recipients,
                    bundle: Bundle::canonical(payload, sn, self.id, [sig]),
                }]
            }
            ByzStrategy::Equivocate {
                payload_a,
                payload_b,
                sn,
                group_a,
                group_b,
            } => {
                if self.started {
                    return Vec::new();
                }
                self.started = true;
                let sig_a = self.sign_own(&payload_a, sn, self.id);
                let sig_b = self.sign_own(&payload_b, sn, self.id);
                vec![
                    RawSend {
                        targets: group_a,
                        bundle: Bundle::canonical(payload_a, sn, self.id, [sig_a]),
                    },
                    RawSend {
                        targets: group_b,
                        bundle: Bundle::canonical(payload_b, sn, self.id, [sig_b]),
                    },
                ]
            }
            ByzStrategy::Replayer { budget } => {
                let everyone: BTreeSet<ProcessId> =
                    (0..u64::from(self.n)).map(ProcessId).collect();
                let mut sends = Vec::new();
                for bundle in inbox {
                    if self.replays >= budget {
                        break;
                    }
                    self.replays += 1;
                    sends.push(RawSend {
                        targets: everyone.clone(),
                        bundle: bundle.clone(),
                    });
                }
                sends
            }
            ByzStrategy::PartitionAttacker {
                leader,
                payload_a,
                payload_b,
                sn,
                side_a,
                side_b,
                colleagues,
            } => {
                let mut sends = Vec::new();
                if self.id == leader && !self.started {
                    self.started = true;
                    // The leader's twin initial bundles. Colleagues get
                    // both so they can copy the leader's signatures.
                    let sig_a = self.sign_own(&payload_a, sn, leader);
                    let sig_b = self.sign_own(&payload_b, sn, leader);
                    sends.push(RawSend {
                        targets: side_a.union(&colleagues).copied().collect(),
                        bundle: Bundle::canonical(payload_a.clone(), sn, leader, [sig_a]),
                    });
                    sends.push(RawSend {
                        targets: side_b.union(&colleagues).copied().collect(),
                        bundle: Bundle::canonical(payload_b.clone(), sn, leader, [sig_b]),
                    });
                }
                if self.id != leader {
                    for bundle in inbox {
                        if bundle.sender != leader || bundle.sn != sn {
                            continue;
                        }
                        let Some(leader_sig) =
                            bundle.sigs.iter().find(|s| s.signer == leader).cloned()
                        else {
                            continue;
                        };
                        if bundle.payload == payload_a && !self.echoed_a {
                            self.echoed_a = true;
                            let own = self.sign_own(&payload_a, sn, leader);
                            sends.push(RawSend {
                                targets: side_a.clone(),
                                bundle: Bundle::canonical(
                                    payload_a.clone(),
                                    sn,
                                    leader,
                                    [own, leader_sig.clone()],
                                ),
                            });
                        } else if bundle.payload == payload_b && !self.echoed_b {
                            self.echoed_b = true;
                            let own = self.sign_own(&payload_b, sn, leader);
                            sends.push(RawSend {
                                targets: side_b.clone(),
                                bundle: Bundle::canonical(
                                    payload_b.clone(),
                                    sn,
                                    leader,
                                    [own, leader_sig],
                                ),
                            });
                        }
                    }
                }
                let _ = round;
                sends
            }
        }
    }
}

/// The five-set partition behind the boundary attack, plus the attack
/// payloads and the release round for the artificially delayed messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSchedule {
    pub q1: BTreeSet<ProcessId>,
    pub q2: BTreeSet<ProcessId>,
    pub q3: BTreeSet<ProcessId>,
    pub d1: BTreeSet<ProcessId>,
    pub d2: BTreeSet<ProcessId>,
    pub payload_a: Vec<u8>,
    pub payload_b: Vec<u8>,
    pub tau: u64,
}

/// A ready-to-run partition-attack experiment.
#[derive(Clone, Debug)]
pub struct PartitionAttackPlan {
    pub partition: PartitionSchedule,
    pub scenario: Scenario,
}

/// Build the partition attack at the exact boundary `n = 3t + 2d`.
pub fn build_boundary_attack(
    t: u32,
    d: u32,
    payload_a: &[u8],
    payload_b: &[u8],
) -> Result<PartitionAttackPlan, AdversaryError> {
    build_partition_attack(t, d, payload_a, payload_b, false, 0)
}

/// Same attack with one extra correct process (`n = 3t + 2d + 1`), where
/// the assumption holds again and delivery must go through.
pub fn build_boundary_control(
    t: u32,
    d: u32,
    payload_a: &[u8],
    payload_b: &[u8],
) -> Result<PartitionAttackPlan, AdversaryError> {
    build_partition_attack(t, d, payload_a, payload_b, true, 0)
}

/// Full builder; `master_seed` feeds key generation only (the attack
/// itself is deterministic).
pub fn build_partition_attack(
    t: u32,
    d: u32,
    payload_a: &[u8],
    payload_b: &[u8],
    control: bool,
    master_seed: u64,
) -> Result<PartitionAttackPlan, AdversaryError> {
    if t == 0 && d == 0 {
        return Err(AdversaryError::DegenerateSchedule);
    }
    let extra = u32::from(control);
    let n = 3 * t + 2 * d + extra;
    let ids = |from: u32, len: u32| -> BTreeSet<ProcessId> {
        (from..from + len).map(|i| ProcessId(i as u64)).collect()
    };
    // Q1 absorbs the extra process in the control run.
    let q1 = ids(0, t + extra);
    let q2 = ids(t + extra, t);
    let q3 = ids(2 * t + extra, t);
    let d1 = ids(3 * t + extra, d);
    let d2 = ids(3 * t + extra + d, d);

    let horizon = 4 * u64::from(n.max(2));
    let tau = 2 * u64::from(n.max(2));
    let side_a: BTreeSet<ProcessId> = q1.union(&d1).copied().collect();
    let side_b: BTreeSet<ProcessId> = q2.union(&d2).copied().collect();

    let config = Config::new(n, t, d, n - t).expect("boundary shape is well-formed");
    let mut scenario = Scenario::new(config);
    scenario.master_seed = master_seed;
    scenario.schedule = Schedule::Lockstep;
    scenario.horizon = horizon;

    if t >= 1 {
        for &byz in &q3 {
            scenario.byzantine.insert(
                byz,
                ByzStrategy::PartitionAttacker {
                    leader: *q3.first().expect("q3 nonempty"),
                    payload_a: payload_a.to_vec(),
                    payload_b: payload_b.to_vec(),
                    sn: 1,
                    side_a: side_a.clone(),
                    side_b: side_b.clone(),
                    colleagues: q3.clone(),
                },
            );
        }
        scenario.drop_policy = DropPolicy::TargetedPartition {
            rules: vec![
                PartitionRule {
                    payload: payload_a.to_vec(),
                    victims: d2.clone(),
                },
                PartitionRule {
                    payload: payload_b.to_vec(),
                    victims: d1.clone(),
                },
            ],
        };
        scenario.delay_rules = vec![
            DelayRule {
                payload: payload_a.to_vec(),
                receivers: q2.clone(),
                until_step: tau,
            },
            DelayRule {
                payload: payload_b.to_vec(),
                receivers: q1.clone(),
                until_step: tau,
            },
        ];
    } else {
        // No Byzantine equivocator: the boundary collapses to the pure
        // partition case n = 2d. A correct process broadcasts and the
        // adversary keeps D2 input-disconnected forever.
        scenario.drop_policy = DropPolicy::StaticSet { victims: d2.clone() };
        scenario.broadcasts.push(AppBroadcast {
            sender: ProcessId(0),
            payload: payload_a.to_vec(),
            sn: 1,
            at_step: 0,
        });
    }

    Ok(PartitionAttackPlan {
        partition: PartitionSchedule {
            q1,
            q2,
            q3,
            d1,
            d2,
            payload_a: payload_a.to_vec(),
            payload_b: payload_b.to_vec(),
            tau,
        },
        scenario,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::quorum_threshold;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(3)
    }

    fn all_correct(n: u64) -> BTreeSet<ProcessId> {
        (0..n).map(ProcessId).collect()
    }

    fn dummy_bundle(payload: &[u8]) -> Bundle {
        Bundle::canonical(payload.to_vec(), 1, ProcessId(0), [])
    }

    #[test]
    fn zero_budget_suppresses_nothing() {
        let bundle = dummy_bundle(b"m");
        let event = BroadcastEvent {
            sender: ProcessId(0),
            bundle: &bundle,
            round: 0,
        };
        for policy in [
            DropPolicy::None,
            DropPolicy::PerBroadcastRandom,
            DropPolicy::StaticSet {
                victims: BTreeSet::new(),
            },
        ] {
            let out = select_suppressed(&policy, &event, &all_correct(4), 0, false, &mut rng());
            assert!(out.is_empty(), "{policy:?}");
        }
    }

    #[test]
    fn static_set_hits_its_victims_every_time() {
        let victims: BTreeSet<ProcessId> = [ProcessId(3), ProcessId(4)].into();
        let policy = DropPolicy::StaticSet {
            victims: victims.clone(),
        };
        let bundle = dummy_bundle(b"m");
        for round in 0..5 {
            let event = BroadcastEvent {
                sender: ProcessId(0),
                bundle: &bundle,
                round,
            };
            let out = select_suppressed(&policy, &event, &all_correct(6), 2, false, &mut rng());
            assert_eq!(out, victims);
        }
    }

    #[test]
    fn static_set_never_suppresses_the_sender_self_copy() {
        let victims: BTreeSet<ProcessId> = [ProcessId(0), ProcessId(1)].into();
        let policy = DropPolicy::StaticSet { victims };
        let bundle = dummy_bundle(b"m");
        let event = BroadcastEvent {
            sender: ProcessId(0),
            bundle: &bundle,
            round: 0,
        };
        let out = select_suppressed(&policy, &event, &all_correct(4), 2, false, &mut rng());
        assert_eq!(out, [ProcessId(1)].into());
        let with_flag = select_suppressed(&policy, &event, &all_correct(4), 2, true, &mut rng());
        assert_eq!(with_flag, [ProcessId(0), ProcessId(1)].into());
    }

    #[test]
    fn quiescent_policy_stops_at_tau() {
        let policy = DropPolicy::QuiescentAfterTau {
            victims: [ProcessId(2)].into(),
            tau: 5,
        };
        let bundle = dummy_bundle(b"m");
        let at = |round| {
            let event = BroadcastEvent {
                sender: ProcessId(0),
                bundle: &bundle,
                round,
            };
            select_suppressed(&policy, &event, &all_correct(4), 1, false, &mut rng())
        };
        assert_eq!(at(3), [ProcessId(2)].into());
        assert!(at(3).len() <= 1);
        assert!(at(5).is_empty());
        assert!(at(7).is_empty());
    }

    #[test]
    fn random_policy_is_deterministic_per_rng_stream() {
        let policy = DropPolicy::PerBroadcastRandom;
        let bundle = dummy_bundle(b"m");
        let event = BroadcastEvent {
            sender: ProcessId(0),
            bundle: &bundle,
            round: 0,
        };
        let pick = || {
            let mut r = rng();
            (0..4)
                .map(|_| select_suppressed(&policy, &event, &all_correct(10), 3, false, &mut r))
                .collect::<Vec<_>>()
        };
        let first = pick();
        assert_eq!(first, pick());
        for set in &first {
            assert_eq!(set.len(), 3);
            assert!(!set.contains(&ProcessId(0)));
        }
    }

    #[test]
    fn silent_strategy_never_sends() {
        let scheme = Scheme::PrfTag;
        let keys = scheme.keygen(&[0; 32], ProcessId(3));
        let mut byz = ByzProcess::new(ByzStrategy::Silent, keys, scheme, 4);
        for round in 0..3 {
            assert!(byz.step(round, &[dummy_bundle(b"x")], &mut rng()).is_empty());
        }
    }

    #[test]
    fn equivocate_sends_conflicting_bundles_to_each_group() {
        let scheme = Scheme::PrfTag;
        let keys = scheme.keygen(&[0; 32], ProcessId(3));
        let group_a: BTreeSet<ProcessId> = [ProcessId(0)].into();
        let group_b: BTreeSet<ProcessId> = [ProcessId(1), ProcessId(2)].into();
        let mut byz = ByzProcess::new(
            ByzStrategy::Equivocate {
                payload_a: b"m".to_vec(),
                payload_b: b"m-prime".to_vec(),
                sn: 1,
                group_a: group_a.clone(),
                group_b: group_b.clone(),
            },
            keys,
            scheme,
            4,
        );
        let sends = byz.step(0, &[], &mut rng());
        assert_eq!(sends.len(), 2);
        assert_eq!(sends[0].targets, group_a);
        assert_eq!(sends[0].bundle.payload, b"m");
        assert_eq!(sends[0].bundle.sender, ProcessId(3));
        assert_eq!(sends[0].bundle.signers(), [ProcessId(3)].into());
        assert_eq!(sends[1].targets, group_b);
        assert_eq!(sends[1].bundle.payload, b"m-prime");
        // One shot only.
        assert!(byz.step(1, &[], &mut rng()).is_empty());
    }

    #[test]
    fn crash_mid_broadcast_reaches_a_strict_subset_then_stops() {
        let scheme = Scheme::PrfTag;
        let keys = scheme.keygen(&[0; 32], ProcessId(2));
        let subset: BTreeSet<ProcessId> = [ProcessId(0)].into();
        let mut byz = ByzProcess::new(
            ByzStrategy::CrashMidBroadcast {
                payload: b"m".to_vec(),
                sn: 1,
                recipients: subset.clone(),
            },
            keys,
            scheme,
            3,
        );
        let sends = byz.step(0, &[], &mut rng());
        assert_eq!(sends.len(), 1);
        assert_eq!(sends[0].targets, subset);
        assert!(byz.step(1, &[], &mut rng()).is_empty());
    }

    #[test]
    fn boundary_signer_ceiling_stays_below_quorum() {
        // t=1, d=1: n=5, quorum 4, but only |Q1 ∪ D1 ∪ Q3| = 3 processes
        // can ever sign the m-side triplet.
        let plan = build_boundary_attack(1, 1, b"m", b"m-prime").unwrap();
        let p = &plan.partition;
        let n = 5;
        let reachable = p.q1.len() + p.d1.len() + p.q3.len();
        assert_eq!(reachable, 3);
        assert_eq!(quorum_threshold(n, 1), 4);
        assert!(reachable < quorum_threshold(n, 1) as usize);

        // t=1, d=0: the classic n=3 boundary.
        let plan = build_boundary_attack(1, 0, b"m", b"m-prime").unwrap();
        let p = &plan.partition;
        assert_eq!(p.q1.len() + p.d1.len() + p.q3.len(), 2);
        assert_eq!(quorum_threshold(3, 1), 3);

        // Generic counting: reachable = 2t + d = quorum - 1 at the
        // boundary.
        for (t, d) in [(1u32, 1u32), (2, 1), (1, 0), (3, 2)] {
            let n = 3 * t + 2 * d;
            assert_eq!(quorum_threshold(n, t), 2 * t + d + 1);
        }
    }

    #[test]
    fn boundary_degenerate_inputs() {
        assert_eq!(
            build_boundary_attack(0, 0, b"m", b"x").unwrap_err(),
            AdversaryError::DegenerateSchedule
        );
        // t=0, d=1: no equivocator, pure partition shape with a correct
        // sender and a statically isolated D2.
        let plan = build_boundary_attack(0, 1, b"m", b"x").unwrap();
        assert_eq!(plan.scenario.config.n, 2);
        assert!(plan.scenario.byzantine.is_empty());
        assert_eq!(plan.scenario.broadcasts.len(), 1);
        assert!(matches!(
            plan.scenario.drop_policy,
            DropPolicy::StaticSet { .. }
        ));
    }

    #[test]
    fn boundary_partition_is_a_partition() {
        for (t, d, control) in [(1, 1, false), (2, 1, false), (1, 0, false), (1, 1, true)] {
            let plan = build_partition_attack(t, d, b"m", b"x", control, 0).unwrap();
            let p = &plan.partition;
            let n = 3 * t + 2 * d + u32::from(control);
            let mut seen = BTreeSet::new();
            for set in [&p.q1, &p.q2, &p.q3, &p.d1, &p.d2] {
                for id in set {
                    assert!(seen.insert(*id), "sets overlap at {id}");
                }
            }
            assert_eq!(seen.len(), n as usize);
            assert_eq!(p.q2.len(), t as usize);
            assert_eq!(p.q3.len(), t as usize);
            assert_eq!(p.d1.len(), d as usize);
            assert_eq!(p.d2.len(), d as usize);
        }
    }
}
