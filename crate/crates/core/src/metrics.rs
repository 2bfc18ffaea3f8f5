//! Turns traces into verdicts.
//!
//! [`predict_bounds`] evaluates the closed-form guarantees for a
//! parameter set in exact integer arithmetic — the square-root comparison
//! in the three-step branch is done by squaring, never through floats, so
//! branch boundaries are exact. The checkers then test the five broadcast
//! properties and the measured step/message costs of a concrete trace
//! against those predictions.
//!
//! Failure verdicts always cite the offending event indices; a checker
//! that cannot fail is worthless, so [`counterexamples`] bundles one
//! synthetic violating trace per property.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::protocol::quorum_threshold;
use crate::scenario::Scenario;
use crate::sigcrypt::ProcessId;
use crate::trace::{Event, Trace};

/// Time-cost class of a parameter set: the guaranteed number of
/// communication steps until `c - d` correct processes deliver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaClass {
    Two,
    Three,
    /// No finite step bound is claimed; only eventual delivery holds.
    More,
}

impl fmt::Display for LambdaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaClass::Two => f.write_str("2"),
            LambdaClass::Three => f.write_str("3"),
            LambdaClass::More => f.write_str(">3"),
        }
    }
}

/// Closed-form guarantees for one parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundPrediction {
    /// Signatures needed to deliver: strictly more than `(n+t)/2`.
    pub quorum: u32,
    /// Guaranteed correct deliverers once anyone delivers: `c - d`.
    pub ell: u32,
    pub lambda_class: LambdaClass,
    /// Guaranteed correct deliverers within two steps of a correct
    /// broadcast, clamped at zero (negative means "no guarantee").
    pub ell2_min: u32,
    /// Correct-process message ceiling per broadcast: `2 n^2`.
    pub mu_max: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("quorum unreachable: c - d = {cd} does not exceed floor((n+t)/2) = {floor}")]
    QuorumUnreachable { cd: u32, floor: u32 },
    #[error("fewer than {need} correct processes ever delivered ({got})")]
    NeverReached { need: u32, got: u32 },
    #[error("trace is truncated; liveness measurements are inconclusive")]
    Truncated,
    #[error("scenario has no correct broadcast to measure")]
    NoBroadcast,
}

/// Evaluate every closed-form bound for `(n, t, d, c)`.
pub fn predict_bounds(n: u32, t: u32, d: u32, c: u32) -> Result<BoundPrediction, MetricsError> {
    let q = (n + t) / 2; // the quorum floor
    if c.saturating_sub(d) <= q {
        return Err(MetricsError::QuorumUnreachable {
            cd: c.saturating_sub(d),
            floor: q,
        });
    }
    let (n64, t64, d64, c64, q64) = (
        u64::from(n),
        u64::from(t),
        u64::from(d),
        u64::from(c),
        u64::from(q),
    );

    // Two-step branch: d < (c - q) / (q + 1), cross-multiplied.
    let two = d64 * (q64 + 1) < c64 - q64;
    // Three-step branch: d < c - sqrt(c (n+t) / 2), squared. Both sides
    // are positive here because c - d > q >= (n+t-1)/2 >= 0.
    let three = 2 * (c64 - d64) * (c64 - d64) > c64 * (n64 + t64);
    let lambda_class = if two {
        LambdaClass::Two
    } else if three {
        LambdaClass::Three
    } else {
        LambdaClass::More
    };

    let raw_ell2 = (c64 - d64) as i64 - ((d64 * q64) / (c64 - d64 - q64)) as i64;
    Ok(BoundPrediction {
        quorum: quorum_threshold(n, t),
        ell: c - d,
        lambda_class,
        ell2_min: raw_ell2.max(0) as u32,
        mu_max: 2 * n64 * n64,
    })
}

/// The five broadcast properties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Property {
    Validity,
    NoDuplication,
    NoDuplicity,
    LocalDelivery,
    GlobalDelivery,
}

impl Property {
    pub const ALL: [Property; 5] = [
        Property::Validity,
        Property::NoDuplication,
        Property::NoDuplicity,
        Property::LocalDelivery,
        Property::GlobalDelivery,
    ];

    pub fn is_safety(self) -> bool {
        matches!(
            self,
            Property::Validity | Property::NoDuplication | Property::NoDuplicity
        )
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::Validity => "validity",
            Property::NoDuplication => "no-duplication",
            Property::NoDuplicity => "no-duplicity",
            Property::LocalDelivery => "local-delivery",
            Property::GlobalDelivery => "global-delivery",
        })
    }
}

/// Verdict for one property on one trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Check {
    Pass,
    /// Violated; `events` are indices into `trace.events` witnessing it.
    Fail { details: String, events: Vec<usize> },
    /// The trace cannot answer (e.g. truncated); never counts as a pass.
    Inconclusive(String),
    NotApplicable(String),
}

impl Check {
    pub fn is_fail(&self) -> bool {
        matches!(self, Check::Fail { .. })
    }

    /// Passed or vacuous. Inconclusive does not count.
    pub fn acceptable(&self) -> bool {
        matches!(self, Check::Pass | Check::NotApplicable(_))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::Pass => f.write_str("pass"),
            Check::Fail { details, events } => write!(f, "FAIL: {details} (events {events:?})"),
            Check::Inconclusive(why) => write!(f, "inconclusive: {why}"),
            Check::NotApplicable(why) => write!(f, "n/a: {why}"),
        }
    }
}

/// Per-property verdicts for one trace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PropertyReport {
    pub checks: BTreeMap<Property, Check>,
}

impl PropertyReport {
    pub fn get(&self, p: Property) -> &Check {
        self.checks.get(&p).expect("report covers all properties")
    }

    pub fn all_acceptable(&self) -> bool {
        self.checks.values().all(Check::acceptable)
    }

    pub fn failures(&self) -> impl Iterator<Item = (&Property, &Check)> {
        self.checks.iter().filter(|(_, c)| c.is_fail())
    }

    /// Merge two reports covering disjoint properties.
    pub fn merged(mut self, other: PropertyReport) -> PropertyReport {
        self.checks.extend(other.checks);
        self
    }
}

type Deliveries<'t> = Vec<(usize, ProcessId, &'t [u8], u64, ProcessId, u64)>;

/// Deliver events at correct processes with their event index:
/// `(index, process, payload, sn, sender, step)`.
fn correct_deliveries<'t>(trace: &'t Trace) -> Deliveries<'t> {
    trace
        .events
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match e {
            Event::Deliver {
                step,
                process,
                payload,
                sn,
                sender,
            } if trace.is_correct(*process) => {
                Some((i, *process, payload.as_slice(), *sn, *sender, *step))
            }
            _ => None,
        })
        .collect()
}

/// Check the three safety properties. Valid on any trace, truncated or
/// not: safety violations never become true later.
pub fn check_safety(trace: &Trace, scenario: &Scenario) -> PropertyReport {
    let delivers = correct_deliveries(trace);
    let mut report = PropertyReport::default();

    // Validity: a delivery attributed to a correct sender must match an
    // actual application broadcast by that sender.
    let mut validity = Check::Pass;
    for (i, _, payload, sn, sender, _) in &delivers {
        if !trace.is_correct(*sender) {
            continue;
        }
        let broadcast_exists = scenario
            .broadcasts
            .iter()
            .any(|b| b.sender == *sender && b.sn == *sn && b.payload == *payload);
        if !broadcast_exists {
            validity = Check::Fail {
                details: format!(
                    "delivery of ({:?}, sn {sn}) attributed to correct {sender} which never broadcast it",
                    String::from_utf8_lossy(payload)
                ),
                events: vec![*i],
            };
            break;
        }
    }
    report.checks.insert(Property::Validity, validity);

    // No-duplication: at most one delivery per (process, sender, sn).
    let mut seen: BTreeMap<(ProcessId, ProcessId, u64), usize> = BTreeMap::new();
    let mut no_dup = Check::Pass;
    for (i, process, _, sn, sender, _) in &delivers {
        if let Some(first) = seen.insert((*process, *sender, *sn), *i) {
            no_dup = Check::Fail {
                details: format!("{process} delivered twice for ({sender}, sn {sn})"),
                events: vec![first, *i],
            };
            break;
        }
    }
    report.checks.insert(Property::NoDuplication, no_dup);

    // No-duplicity: all correct deliveries for (sender, sn) agree.
    let mut chosen: BTreeMap<(ProcessId, u64), (usize, &[u8])> = BTreeMap::new();
    let mut no_duplicity = Check::Pass;
    for (i, _, payload, sn, sender, _) in &delivers {
        match chosen.get(&(*sender, *sn)) {
            None => {
                chosen.insert((*sender, *sn), (*i, payload));
            }
            Some((first, other)) if other != payload => {
                no_duplicity = Check::Fail {
                    details: format!(
                        "conflicting deliveries for ({sender}, sn {sn}): {:?} vs {:?}",
                        String::from_utf8_lossy(other),
                        String::from_utf8_lossy(payload)
                    ),
                    events: vec![*first, *i],
                };
                break;
            }
            Some(_) => {}
        }
    }
    report.checks.insert(Property::NoDuplicity, no_duplicity);

    report
}

/// Check the two liveness properties. A truncated trace yields
/// inconclusive verdicts, never passes.
pub fn check_liveness(trace: &Trace, scenario: &Scenario) -> PropertyReport {
    let mut report = PropertyReport::default();
    if trace.truncated {
        let why = "trace truncated at horizon".to_string();
        report
            .checks
            .insert(Property::LocalDelivery, Check::Inconclusive(why.clone()));
        report
            .checks
            .insert(Property::GlobalDelivery, Check::Inconclusive(why));
        return report;
    }

    let delivers = correct_deliveries(trace);

    // Local-delivery: every correct broadcast is delivered somewhere.
    let correct_broadcasts: Vec<_> = scenario
        .broadcasts
        .iter()
        .filter(|b| scenario.is_correct(b.sender))
        .collect();
    let local = if correct_broadcasts.is_empty() {
        Check::NotApplicable("no correct-process broadcast in scenario".into())
    } else {
        let mut verdict = Check::Pass;
        for b in &correct_broadcasts {
            let delivered = delivers
                .iter()
                .any(|(_, _, m, sn, j, _)| *m == b.payload && *sn == b.sn && *j == b.sender);
            if !delivered {
                verdict = Check::Fail {
                    details: format!(
                        "broadcast ({:?}, sn {}) by {} was never delivered by any correct process",
                        String::from_utf8_lossy(&b.payload),
                        b.sn,
                        b.sender
                    ),
                    events: Vec::new(),
                };
                break;
            }
        }
        verdict
    };
    report.checks.insert(Property::LocalDelivery, local);

    // Global-delivery: one correct delivery implies at least ell = c - d.
    type PerMessage<'t> = BTreeMap<(ProcessId, u64, &'t [u8]), (Vec<usize>, BTreeSet<ProcessId>)>;
    let ell = scenario.config.c - scenario.config.d;
    let mut per_message: PerMessage = BTreeMap::new();
    for (i, process, payload, sn, sender, _) in &delivers {
        let entry = per_message.entry((*sender, *sn, payload)).or_default();
        entry.0.push(*i);
        entry.1.insert(*process);
    }
    let mut global = if per_message.is_empty() {
        Check::NotApplicable("no correct process delivered anything".into())
    } else {
        Check::Pass
    };
    for ((sender, sn, payload), (indices, processes)) in &per_message {
        if (processes.len() as u32) < ell {
            global = Check::Fail {
                details: format!(
                    "only {} correct processes delivered ({:?}, sn {sn}, {sender}); ell = {ell}",
                    processes.len(),
                    String::from_utf8_lossy(payload)
                ),
                events: indices.clone(),
            };
            break;
        }
    }
    report.checks.insert(Property::GlobalDelivery, global);

    report
}

/// All five properties in one report.
pub fn check_all(trace: &Trace, scenario: &Scenario) -> PropertyReport {
    check_safety(trace, scenario).merged(check_liveness(trace, scenario))
}

/// Smallest lockstep step by which `ell = c - d` distinct correct
/// processes have delivered `(sender, sn)`. Assumes the broadcast
/// happened at step 0 (as in every bound experiment).
pub fn measure_lambda(trace: &Trace, sender: ProcessId, sn: u64) -> Result<u64, MetricsError> {
    let ell = trace.config.c - trace.config.d;
    let mut by_step: Vec<(u64, ProcessId)> = correct_deliveries(trace)
        .into_iter()
        .filter(|(_, _, _, d_sn, d_sender, _)| *d_sn == sn && *d_sender == sender)
        .map(|(_, process, _, _, _, step)| (step, process))
        .collect();
    by_step.sort();
    let mut seen = BTreeSet::new();
    for (step, process) in by_step {
        seen.insert(process);
        if seen.len() as u32 >= ell {
            return Ok(step);
        }
    }
    Err(MetricsError::NeverReached {
        need: ell,
        got: seen_len(trace, sender, sn),
    })
}

fn seen_len(trace: &Trace, sender: ProcessId, sn: u64) -> u32 {
    correct_deliveries(trace)
        .iter()
        .filter(|(_, _, _, d_sn, d_sender, _)| *d_sn == sn && *d_sender == sender)
        .map(|(_, p, _, _, _, _)| *p)
        .collect::<BTreeSet<_>>()
        .len() as u32
}

/// Implementation messages sent by correct processes, pre-suppression:
/// each broadcast costs `n` point-to-point copies. Byzantine sends are
/// free. Meaningful for single-broadcast scenarios; for runs where
/// Byzantine slots attract traffic, use [`measure_mu_for_slot`].
pub fn measure_mu(trace: &Trace) -> u64 {
    let n = u64::from(trace.config.n);
    trace
        .events
        .iter()
        .filter(|e| matches!(e, Event::Send { sender, .. } if trace.is_correct(*sender)))
        .count() as u64
        * n
}

/// Like [`measure_mu`], but counting only bundles belonging to one
/// `(sender, sn)` slot — the per-app-message cost the `2 n^2` ceiling is
/// stated for.
pub fn measure_mu_for_slot(trace: &Trace, sender: ProcessId, sn: u64) -> u64 {
    let n = u64::from(trace.config.n);
    trace
        .events
        .iter()
        .filter(|e| match e {
            Event::Send {
                sender: from,
                bundle,
                ..
            } => trace.is_correct(*from) && bundle.sender == sender && bundle.sn == sn,
            _ => false,
        })
        .count() as u64
        * n
}

/// Lower-bound check on two-step deliveries: for every correct broadcast
/// in the scenario, at least `ell2_min` distinct correct processes must
/// deliver it within two steps. Vacuously true when the bound clamps to
/// zero.
pub fn check_ell2(trace: &Trace, scenario: &Scenario) -> Result<bool, MetricsError> {
    let cfg = trace.config;
    let prediction = predict_bounds(cfg.n, cfg.t, cfg.d, cfg.c)?;
    let broadcasts: Vec<_> = scenario
        .broadcasts
        .iter()
        .filter(|b| scenario.is_correct(b.sender))
        .collect();
    if broadcasts.is_empty() {
        return Err(MetricsError::NoBroadcast);
    }
    let delivers = correct_deliveries(trace);
    for b in broadcasts {
        let two_step: BTreeSet<ProcessId> = delivers
            .iter()
            .filter(|(_, _, m, sn, j, step)| {
                *m == b.payload && *sn == b.sn && *j == b.sender && *step <= b.at_step + 2
            })
            .map(|(_, p, _, _, _, _)| *p)
            .collect();
        if (two_step.len() as u32) < prediction.ell2_min {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Structural trace audit: network reliability (exactly one reception
/// per non-suppressed copy, none for suppressed ones, nothing invented),
/// the per-broadcast suppression budget, and signature attribution (no
/// bundle carries a valid correct-process signature for a triplet that
/// process never signed). Returns human-readable violations; empty means
/// clean.
pub fn audit_trace(trace: &Trace, scenario: &Scenario) -> Vec<String> {
    let mut issues = Vec::new();
    let d = trace.config.d as usize;

    let mut last_step = 0;
    for (i, event) in trace.events.iter().enumerate() {
        if event.step() < last_step {
            issues.push(format!("event {i} steps backwards to {}", event.step()));
        }
        last_step = event.step();
    }

    // Expected receptions per (receiver, bundle), from send events.
    let mut expected: BTreeMap<(ProcessId, &crate::protocol::Bundle), i64> = BTreeMap::new();
    let mut suppress_counts: BTreeMap<u64, usize> = BTreeMap::new();
    let mut send_info: BTreeMap<u64, (&BTreeSet<ProcessId>, ProcessId)> = BTreeMap::new();

    for event in &trace.events {
        match event {
            Event::Send {
                seq,
                sender,
                bundle,
                receivers,
                ..
            } => {
                send_info.insert(*seq, (receivers, *sender));
                for receiver in receivers {
                    *expected.entry((*receiver, bundle)).or_default() += 1;
                }
            }
            Event::Receive {
                receiver, bundle, ..
            } => {
                *expected.entry((*receiver, bundle)).or_default() -= 1;
            }
            Event::Suppress {
                send_seq,
                sender,
                victim,
                ..
            } => {
                *suppress_counts.entry(*send_seq).or_default() += 1;
                if !trace.is_correct(*victim) {
                    issues.push(format!(
                        "suppression of non-correct victim {victim} (send {send_seq})"
                    ));
                }
                match send_info.get(send_seq) {
                    None => issues.push(format!("suppress references unknown send {send_seq}")),
                    Some((receivers, send_sender)) => {
                        if receivers.contains(victim) {
                            issues.push(format!(
                                "victim {victim} of send {send_seq} also listed as receiver"
                            ));
                        }
                        if send_sender != sender {
                            issues.push(format!("suppress/send sender mismatch at {send_seq}"));
                        }
                    }
                }
            }
            Event::Deliver { .. } => {}
        }
    }

    for ((receiver, bundle), balance) in &expected {
        if *balance < 0 {
            issues.push(format!(
                "{receiver} received {} more copies of {bundle:?} than were sent",
                -balance
            ));
        } else if *balance > 0 && !trace.truncated {
            issues.push(format!(
                "{balance} sent copies to {receiver} of {bundle:?} never arrived in a non-truncated trace"
            ));
        }
    }
    for (seq, count) in suppress_counts {
        if count > d {
            issues.push(format!(
                "send {seq} lost {count} correct copies, over the budget d = {d}"
            ));
        }
    }

    // Attribution. What each correct process signed, from the final
    // states; then every valid correct-process signature seen on the
    // wire must match it.
    let keys = crate::simnet::derive_keys(scenario);
    let mut signed: BTreeMap<(ProcessId, ProcessId, u64), &[u8]> = BTreeMap::new();
    for slot in &trace.final_slots {
        if slot.signed_self {
            signed.insert((slot.process, slot.sender, slot.sn), &slot.payload);
        }
    }
    let mut checked: BTreeSet<(&crate::protocol::Bundle, ProcessId)> = BTreeSet::new();
    for event in &trace.events {
        let Event::Send { bundle, .. } = event else {
            continue;
        };
        let Ok(enc) = crate::sigcrypt::encode_triplet(&bundle.payload, bundle.sn, bundle.sender)
        else {
            continue;
        };
        for sig in &bundle.sigs {
            if !trace.is_correct(sig.signer) || !checked.insert((bundle, sig.signer)) {
                continue;
            }
            let Some(pair) = keys.get(&sig.signer) else {
                continue;
            };
            if !trace.scheme.verify(&pair.public, &enc, sig) {
                continue; // invalid junk is allowed on the wire
            }
            match signed.get(&(sig.signer, bundle.sender, bundle.sn)) {
                Some(payload) if *payload == bundle.payload => {}
                other => {
                    issues.push(format!(
                        "valid signature by correct {} over {bundle:?} which it never signed ({:?})",
                        sig.signer,
                        other.map(|p| String::from_utf8_lossy(p).into_owned())
                    ));
                }
            }
        }
    }

    issues
}

/// Hand-forged violating traces, one per property. Every checker must
/// fail on its own counterexample; that is itself part of the acceptance
/// surface.
pub mod counterexamples {
    use super::*;
    use crate::adversary::ByzStrategy;
    use crate::protocol::Config;
    use crate::scenario::AppBroadcast;
    use crate::trace::ScheduleKind;

    fn base(config: Config, byz: &[u64]) -> (Scenario, Trace) {
        let mut scenario = Scenario::new(config);
        for id in byz {
            scenario
                .byzantine
                .insert(ProcessId(*id), ByzStrategy::Silent);
        }
        let trace = Trace {
            config,
            scheme: scenario.scheme,
            byzantine: byz.iter().copied().map(ProcessId).collect(),
            schedule: ScheduleKind::Lockstep,
            horizon: 8,
            master_seed: 0,
            events: Vec::new(),
            final_slots: Vec::new(),
            truncated: false,
        };
        (scenario, trace)
    }

    fn deliver(process: u64, payload: &[u8], sn: u64, sender: u64, step: u64) -> Event {
        Event::Deliver {
            step,
            process: ProcessId(process),
            payload: payload.to_vec(),
            sn,
            sender: ProcessId(sender),
        }
    }

    /// A correct process delivers a message its correct "sender" never
    /// broadcast.
    pub fn validity_violation() -> (Scenario, Trace) {
        let (scenario, mut trace) = base(Config::new(2, 0, 0, 2).unwrap(), &[]);
        trace.events.push(deliver(0, b"spurious", 1, 1, 2));
        (scenario, trace)
    }

    /// The same process delivers the same slot twice.
    pub fn no_duplication_violation() -> (Scenario, Trace) {
        let (mut scenario, mut trace) = base(Config::new(2, 0, 0, 2).unwrap(), &[]);
        scenario.broadcasts.push(AppBroadcast {
            sender: ProcessId(1),
            payload: b"m".to_vec(),
            sn: 1,
            at_step: 0,
        });
        trace.events.push(deliver(0, b"m", 1, 1, 2));
        trace.events.push(deliver(0, b"m", 1, 1, 3));
        (scenario, trace)
    }

    /// Two correct processes deliver different payloads for one slot of
    /// a Byzantine sender.
    pub fn no_duplicity_violation() -> (Scenario, Trace) {
        let (scenario, mut trace) = base(Config::new(3, 1, 0, 2).unwrap(), &[2]);
        trace.events.push(deliver(0, b"m", 1, 2, 2));
        trace.events.push(deliver(1, b"m-prime", 1, 2, 2));
        (scenario, trace)
    }

    /// A correct broadcast that nobody ever delivers, in a complete
    /// (non-truncated) trace.
    pub fn local_delivery_violation() -> (Scenario, Trace) {
        let (mut scenario, trace) = base(Config::new(2, 0, 0, 2).unwrap(), &[]);
        scenario.broadcasts.push(AppBroadcast {
            sender: ProcessId(0),
            payload: b"lost".to_vec(),
            sn: 1,
            at_step: 0,
        });
        (scenario, trace)
    }

    /// One correct process delivers but fewer than `ell = c - d` follow.
    pub fn global_delivery_violation() -> (Scenario, Trace) {
        let (mut scenario, mut trace) = base(Config::new(3, 0, 1, 3).unwrap(), &[]);
        scenario.broadcasts.push(AppBroadcast {
            sender: ProcessId(0),
            payload: b"m".to_vec(),
            sn: 1,
            at_step: 0,
        });
        trace.events.push(deliver(0, b"m", 1, 0, 2));
        (scenario, trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_bounds_worked_examples() {
        // d = 0 keeps the two-step branch.
        let p = predict_bounds(7, 2, 0, 5).unwrap();
        assert_eq!(
            p,
            BoundPrediction {
                quorum: 5,
                ell: 5,
                lambda_class: LambdaClass::Two,
                ell2_min: 5,
                mu_max: 98,
            }
        );

        // Small d: three steps, ell2 loses one.
        let p = predict_bounds(10, 1, 1, 9).unwrap();
        assert_eq!(
            p,
            BoundPrediction {
                quorum: 6,
                ell: 8,
                lambda_class: LambdaClass::Three,
                ell2_min: 7,
                mu_max: 200,
            }
        );

        // Large d: no step bound, ell2 clamps to zero.
        let p = predict_bounds(10, 1, 3, 9).unwrap();
        assert_eq!(p.ell, 6);
        assert_eq!(p.lambda_class, LambdaClass::More);
        assert_eq!(p.ell2_min, 0);
    }

    #[test]
    fn predict_bounds_rejects_unreachable_quorum() {
        // n = 5, t = 1, d = 1, c = 4: c - d = 3 = floor((n+t)/2).
        assert_eq!(
            predict_bounds(5, 1, 1, 4),
            Err(MetricsError::QuorumUnreachable { cd: 3, floor: 3 })
        );
    }

    #[test]
    fn lambda_branch_predicates_are_stable() {
        // Scanning a parameter grid: the two-step branch must imply the
        // three-step condition (a stronger bound subsumes the weaker),
        // and growing d must never improve the class.
        for n in 1..=20u32 {
            for t in 0..n {
                for c in (n - t)..=n {
                    let mut last = 0;
                    for d in 0..c {
                        let Ok(p) = predict_bounds(n, t, d, c) else {
                            continue;
                        };
                        let rank = match p.lambda_class {
                            LambdaClass::Two => 0,
                            LambdaClass::Three => 1,
                            LambdaClass::More => 2,
                        };
                        assert!(
                            rank >= last,
                            "class improved with larger d at n={n} t={t} d={d} c={c}"
                        );
                        last = rank;
                        if p.lambda_class == LambdaClass::Two {
                            let (n64, t64, d64, c64) =
                                (u64::from(n), u64::from(t), u64::from(d), u64::from(c));
                            assert!(
                                2 * (c64 - d64) * (c64 - d64) > c64 * (n64 + t64),
                                "two-branch without three-branch at n={n} t={t} d={d} c={c}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn checkers_fail_their_counterexamples() {
        let (s, t) = counterexamples::validity_violation();
        assert!(check_safety(&t, &s).get(Property::Validity).is_fail());

        let (s, t) = counterexamples::no_duplication_violation();
        assert!(check_safety(&t, &s).get(Property::NoDuplication).is_fail());

        let (s, t) = counterexamples::no_duplicity_violation();
        assert!(check_safety(&t, &s).get(Property::NoDuplicity).is_fail());

        let (s, t) = counterexamples::local_delivery_violation();
        assert!(check_liveness(&t, &s).get(Property::LocalDelivery).is_fail());

        let (s, t) = counterexamples::global_delivery_violation();
        assert!(check_liveness(&t, &s).get(Property::GlobalDelivery).is_fail());
    }

    #[test]
    fn counterexample_failures_cite_events() {
        let (s, t) = counterexamples::no_duplicity_violation();
        let report = check_safety(&t, &s);
        let Check::Fail { events, .. } = report.get(Property::NoDuplicity) else {
            panic!("expected failure");
        };
        assert_eq!(events.len(), 2);
        for &i in events {
            assert!(matches!(t.events[i], Event::Deliver { .. }));
        }
    }

    #[test]
    fn truncated_traces_are_inconclusive_for_liveness() {
        let (mut s, mut t) = counterexamples::local_delivery_violation();
        t.truncated = true;
        s.horizon = 1;
        let report = check_liveness(&t, &s);
        assert!(matches!(
            report.get(Property::LocalDelivery),
            Check::Inconclusive(_)
        ));
        assert!(!report.all_acceptable());
    }
}
