//! Deterministic execution engine.
//!
//! Wires `n` state machines together under a drop policy, Byzantine
//! strategies, and one of two schedules, and records everything into a
//! [`Trace`]:
//!
//! * **lockstep** — synchronous rounds with unit transfer delay. All
//!   copies sent at round `r` arrive at `r + 1`; local computation is
//!   free. This is the timing model the step bounds are measured in.
//! * **seeded async** — one reception at a time in a pseudorandom order
//!   drawn from the seed, with unbounded reordering. Every sent and
//!   not-suppressed copy is eventually received (the network never
//!   corrupts, duplicates, or creates). Safety is attacked here.
//!
//! A process receives its own broadcast copy synchronously in both modes
//! (local loopback costs nothing), so a single-process run delivers at
//! step 0. The adversary never touches that copy unless the scenario's
//! sensitivity flag says so.
//!
//! `(scenario, master_seed)` fully determines the trace: per-purpose RNG
//! streams are derived by hashing the master seed with a role label.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adversary::{select_suppressed, BroadcastEvent, ByzProcess};
use crate::protocol::{Bundle, ProcessState, ProtocolError};
use crate::scenario::{Scenario, ScenarioError, Schedule};
use crate::sigcrypt::{KeyPair, ProcessId};
use crate::trace::{Event, ScheduleKind, SlotRecord, Trace};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("process {id}: {source}")]
    Protocol {
        id: ProcessId,
        source: ProtocolError,
    },
}

/// Derive every process's key pair for a scenario. Deterministic; seeds
/// come from explicit overrides or from the master seed.
pub fn derive_keys(scenario: &Scenario) -> BTreeMap<ProcessId, KeyPair> {
    (0..u64::from(scenario.config.n))
        .map(ProcessId)
        .map(|pid| {
            let seed = scenario
                .key_seeds
                .get(&pid)
                .copied()
                .unwrap_or_else(|| stream_seed(scenario.master_seed, b"key", pid.0));
            (pid, scenario.scheme.keygen(&seed, pid))
        })
        .collect()
}

fn stream_seed(master_seed: u64, label: &[u8], salt: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"mbrb-stream");
    h.update(master_seed.to_be_bytes());
    h.update(label);
    h.update(salt.to_be_bytes());
    h.finalize().into()
}

/// Run a scenario under its declared schedule.
pub fn run(scenario: &Scenario) -> Result<Trace, SimError> {
    match scenario.schedule {
        Schedule::Lockstep => run_lockstep(scenario),
        Schedule::SeededAsync { .. } => run_async(scenario),
    }
}

/// Synchronous-round execution; the trace's step numbers are
/// communication steps counted from the triggering broadcast at step 0.
pub fn run_lockstep(scenario: &Scenario) -> Result<Trace, SimError> {
    Engine::new(scenario)?.run_lockstep()
}

/// Seeded pseudorandom one-at-a-time execution; step numbers are
/// reception indices.
pub fn run_async(scenario: &Scenario) -> Result<Trace, SimError> {
    Engine::new(scenario)?.run_async()
}

/// An inbound copy waiting to be processed.
#[derive(Clone, Debug)]
struct Pending {
    receiver: ProcessId,
    net_sender: ProcessId,
    order: u64,
    bundle: Bundle,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    correct: BTreeMap<ProcessId, ProcessState>,
    byz: BTreeMap<ProcessId, ByzProcess>,
    correct_ids: BTreeSet<ProcessId>,
    all_ids: BTreeSet<ProcessId>,
    adv_rng: ChaCha8Rng,
    byz_rng: ChaCha8Rng,
    events: Vec<Event>,
    send_seq: u64,
    /// Lockstep: copies keyed by arrival round. Async: single queue.
    buckets: BTreeMap<u64, Vec<Pending>>,
    queue: Vec<Pending>,
    is_async: bool,
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario) -> Result<Self, SimError> {
        scenario.validate()?;
        let keys = derive_keys(scenario);
        let peer_keys: BTreeMap<ProcessId, _> =
            keys.iter().map(|(pid, k)| (*pid, k.public)).collect();

        let mut correct = BTreeMap::new();
        let mut byz = BTreeMap::new();
        for (pid, pair) in keys {
            match scenario.byzantine.get(&pid) {
                Some(strategy) => {
                    byz.insert(
                        pid,
                        ByzProcess::new(
                            strategy.clone(),
                            pair,
                            scenario.scheme,
                            scenario.config.n,
                        ),
                    );
                }
                None => {
                    correct.insert(
                        pid,
                        ProcessState::new(
                            scenario.config,
                            scenario.scheme,
                            pair,
                            peer_keys.clone(),
                        ),
                    );
                }
            }
        }

        Ok(Engine {
            scenario,
            correct_ids: correct.keys().copied().collect(),
            all_ids: (0..u64::from(scenario.config.n)).map(ProcessId).collect(),
            correct,
            byz,
            adv_rng: ChaCha8Rng::from_seed(stream_seed(scenario.master_seed, b"adversary", 0)),
            byz_rng: ChaCha8Rng::from_seed(stream_seed(scenario.master_seed, b"byzantine", 0)),
            events: Vec::new(),
            send_seq: 0,
            buckets: BTreeMap::new(),
            queue: Vec::new(),
            is_async: matches!(scenario.schedule, Schedule::SeededAsync { .. }),
        })
    }

    /// Arrival step for a remote copy sent at `step`, honoring delay
    /// rules (lockstep only; async reordering subsumes them).
    fn arrival(&self, receiver: ProcessId, bundle: &Bundle, step: u64) -> u64 {
        let mut at = step + 1;
        for rule in &self.scenario.delay_rules {
            if rule.payload == bundle.payload && rule.receivers.contains(&receiver) {
                at = at.max(rule.until_step);
            }
        }
        at
    }

    fn schedule_copy(&mut self, receiver: ProcessId, net_sender: ProcessId, bundle: Bundle, step: u64) {
        let order = self.send_seq;
        let pending = Pending {
            receiver,
            net_sender,
            order,
            bundle,
        };
        if self.is_async {
            self.queue.push(pending);
        } else {
            let at = self.arrival(receiver, &pending.bundle, step);
            self.buckets.entry(at).or_default().push(pending);
        }
    }

    /// The unreliable broadcast macro used by correct processes: one
    /// copy per process, minus whatever the message adversary kills.
    /// The sender's own copy is handled synchronously.
    fn broadcast_correct(&mut self, sender: ProcessId, bundle: Bundle, step: u64) {
        let seq = self.send_seq;
        self.send_seq += 1;
        let suppressed = select_suppressed(
            &self.scenario.drop_policy,
            &BroadcastEvent {
                sender,
                bundle: &bundle,
                round: step,
            },
            &self.correct_ids,
            self.scenario.config.d,
            self.scenario.suppress_self_copies,
            &mut self.adv_rng,
        );
        let receivers: BTreeSet<ProcessId> =
            self.all_ids.difference(&suppressed).copied().collect();
        self.events.push(Event::Send {
            seq,
            step,
            sender,
            bundle: bundle.clone(),
            receivers: receivers.clone(),
        });
        for victim in suppressed {
            self.events.push(Event::Suppress {
                send_seq: seq,
                step,
                sender,
                victim,
            });
        }
        for receiver in receivers {
            if receiver == sender {
                self.receive_at_correct(receiver, bundle.clone(), step);
            } else {
                self.schedule_copy(receiver, sender, bundle.clone(), step);
            }
        }
    }

    /// A Byzantine point-to-point transmission: chosen targets, no
    /// adversary involvement.
    fn byz_send(&mut self, sender: ProcessId, targets: BTreeSet<ProcessId>, bundle: Bundle, step: u64) {
        let seq = self.send_seq;
        self.send_seq += 1;
        let receivers: BTreeSet<ProcessId> =
            targets.intersection(&self.all_ids).copied().collect();
        self.events.push(Event::Send {
            seq,
            step,
            sender,
            bundle: bundle.clone(),
            receivers: receivers.clone(),
        });
        for receiver in receivers {
            self.schedule_copy(receiver, sender, bundle.clone(), step);
        }
    }

    /// Feed one copy to a correct process and flush the reaction.
    fn receive_at_correct(&mut self, receiver: ProcessId, bundle: Bundle, step: u64) {
        self.events.push(Event::Receive {
            step,
            receiver,
            bundle: bundle.clone(),
        });
        let state = self.correct.get_mut(&receiver).expect("correct receiver");
        let result = state.handle_bundle(&bundle);
        for delivery in result.delivered {
            self.events.push(Event::Deliver {
                step,
                process: delivery.at,
                payload: delivery.payload,
                sn: delivery.sn,
                sender: delivery.sender,
            });
        }
        for outbound in result.outbound {
            self.broadcast_correct(receiver, outbound, step);
        }
    }

    fn step_byz(&mut self, id: ProcessId, round: u64, inbox: &[Bundle], step: u64) {
        let byz = self.byz.get_mut(&id).expect("byz process");
        let sends = byz.step(round, inbox, &mut self.byz_rng);
        for send in sends {
            self.byz_send(id, send.targets, send.bundle, step);
        }
    }

    fn app_broadcast(&mut self, sender: ProcessId, payload: &[u8], sn: u64, step: u64) -> Result<(), SimError> {
        let state = self.correct.get_mut(&sender).expect("validated sender");
        let outbound = state
            .mbrb_broadcast(payload, sn)
            .map_err(|source| SimError::Protocol { id: sender, source })?;
        for bundle in outbound {
            self.broadcast_correct(sender, bundle, step);
        }
        Ok(())
    }

    fn run_lockstep(mut self) -> Result<Trace, SimError> {
        let broadcasts = self.scenario.broadcasts.clone();
        let byz_ids: Vec<ProcessId> = self.byz.keys().copied().collect();

        // Round 0: application broadcasts and Byzantine bootstrap.
        for b in broadcasts.iter().filter(|b| b.at_step == 0) {
            self.app_broadcast(b.sender, &b.payload, b.sn, 0)?;
        }
        for id in &byz_ids {
            self.step_byz(*id, 0, &[], 0);
        }

        let mut truncated = false;
        let mut round = 0;
        loop {
            let next_arrival = self.buckets.keys().next().copied();
            let next_broadcast = broadcasts
                .iter()
                .map(|b| b.at_step)
                .filter(|&s| s > round)
                .min();
            let Some(next) = [next_arrival, next_broadcast].into_iter().flatten().min()
            else {
                break; // quiescent: nothing in flight, nothing scheduled
            };
            if next > self.scenario.horizon {
                truncated = true;
                break;
            }
            round = next;

            for b in broadcasts.iter().filter(|b| b.at_step == round) {
                self.app_broadcast(b.sender, &b.payload, b.sn, round)?;
            }

            let mut batch = self.buckets.remove(&round).unwrap_or_default();
            // Receivers in id order; within one receiver, copies in
            // network-sender order.
            batch.sort_by_key(|p| (p.receiver, p.net_sender, p.order));
            let mut byz_inboxes: BTreeMap<ProcessId, Vec<Bundle>> = BTreeMap::new();
            for pending in batch {
                if self.correct_ids.contains(&pending.receiver) {
                    self.receive_at_correct(pending.receiver, pending.bundle, round);
                } else {
                    byz_inboxes
                        .entry(pending.receiver)
                        .or_default()
                        .push(pending.bundle);
                }
            }
            for (id, inbox) in byz_inboxes {
                for bundle in &inbox {
                    self.events.push(Event::Receive {
                        step: round,
                        receiver: id,
                        bundle: bundle.clone(),
                    });
                }
                self.step_byz(id, round, &inbox, round);
            }
        }

        Ok(self.finish(ScheduleKind::Lockstep, truncated))
    }

    fn run_async(mut self) -> Result<Trace, SimError> {
        let Schedule::SeededAsync {
            seed,
            ref prefer_payload,
        } = self.scenario.schedule
        else {
            unreachable!("run_async requires an async schedule");
        };
        let prefer = prefer_payload.clone();
        let mut sched_rng = ChaCha8Rng::from_seed(stream_seed(seed, b"scheduler", 0));
        let broadcasts = self.scenario.broadcasts.clone();
        let byz_ids: Vec<ProcessId> = self.byz.keys().copied().collect();

        for b in &broadcasts {
            self.app_broadcast(b.sender, &b.payload, b.sn, 0)?;
        }
        for id in &byz_ids {
            self.step_byz(*id, 0, &[], 0);
        }

        let mut truncated = false;
        let mut step = 1;
        while !self.queue.is_empty() {
            if step > self.scenario.horizon {
                truncated = true;
                break;
            }
            let idx = if let Some(ref payload) = prefer {
                let matching: Vec<usize> = self
                    .queue
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| &p.bundle.payload == payload)
                    .map(|(i, _)| i)
                    .collect();
                if matching.is_empty() {
                    sched_rng.gen_range(0..self.queue.len())
                } else {
                    matching[sched_rng.gen_range(0..matching.len())]
                }
            } else {
                sched_rng.gen_range(0..self.queue.len())
            };
            let pending = self.queue.swap_remove(idx);
            if self.correct_ids.contains(&pending.receiver) {
                self.receive_at_correct(pending.receiver, pending.bundle, step);
            } else {
                self.events.push(Event::Receive {
                    step,
                    receiver: pending.receiver,
                    bundle: pending.bundle.clone(),
                });
                self.step_byz(pending.receiver, step, &[pending.bundle], step);
            }
            step += 1;
        }

        Ok(self.finish(ScheduleKind::SeededAsync, truncated))
    }

    fn finish(self, schedule: ScheduleKind, truncated: bool) -> Trace {
        let mut final_slots = Vec::new();
        for (pid, state) in &self.correct {
            for ((sender, sn), slot) in state.slots() {
                for (payload, signers) in slot.payloads() {
                    final_slots.push(SlotRecord {
                        process: *pid,
                        sender: *sender,
                        sn: *sn,
                        payload: payload.to_vec(),
                        signers: signers.into_iter().collect(),
                        signed_self: slot.signed_by_me() == Some(payload),
                        delivered: slot.delivered() == Some(payload),
                    });
                }
            }
        }
        Trace {
            config: self.scenario.config,
            scheme: self.scenario.scheme,
            byzantine: self.byz.keys().copied().collect(),
            schedule,
            horizon: self.scenario.horizon,
            master_seed: self.scenario.master_seed,
            events: self.events,
            final_slots,
            truncated,
        }
    }
}
