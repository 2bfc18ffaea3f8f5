//! The per-process reliable-broadcast state machine.
//!
//! One wire-message type exists, the [`Bundle`], carrying a triplet and a
//! set of signatures endorsing it. A process accumulates signatures per
//! triplet, countersigns the first payload it sees for each `(sn, sender)`
//! slot, and delivers once it has saved strictly more than `(n+t)/2`
//! distinct signatures for one exact triplet. Any two such quorums
//! intersect in a correct process, which is what rules out duplicity.
//!
//! The state machine is pure: it performs no I/O and no clock reads, and
//! it emits bundles and deliveries only in reaction to
//! [`ProcessState::mbrb_broadcast`] or [`ProcessState::handle_bundle`]
//! (the event-driven property). Identical inputs produce identical
//! outputs, which the simulator relies on for byte-identical traces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sigcrypt::{
    encode_triplet, serde_hex, EncodeError, KeyPair, ProcessId, PublicKey, Scheme, Signature,
};

/// System parameters. `n`, `t`, and `d` are model constants; `c` is the
/// effective number of correct processes in the run. The harness knows
/// `c` and `d`; protocol logic only ever reads `n`, `t`, and
/// `dedup_emit`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    pub n: u32,
    pub t: u32,
    pub d: u32,
    pub c: u32,
    /// Suppress the second of two identical back-to-back broadcasts that
    /// the forward and quorum rules can produce for one incoming bundle.
    #[serde(default)]
    pub dedup_emit: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("n must be at least 1")]
    NoProcesses,
    #[error("t = {t} must be smaller than n = {n}")]
    TooManyByzantine { n: u32, t: u32 },
    #[error("c = {c} outside [n - t, n] = [{}, {n}]", n - t)]
    CorrectCountOutOfRange { n: u32, t: u32, c: u32 },
    #[error("adversary power d = {d} must be smaller than c = {c}")]
    AdversaryPowerTooLarge { d: u32, c: u32 },
}

impl Config {
    pub fn new(n: u32, t: u32, d: u32, c: u32) -> Result<Self, ConfigError> {
        if n == 0 {
            return Err(ConfigError::NoProcesses);
        }
        if t >= n {
            return Err(ConfigError::TooManyByzantine { n, t });
        }
        if c < n - t || c > n {
            return Err(ConfigError::CorrectCountOutOfRange { n, t, c });
        }
        if d >= c {
            return Err(ConfigError::AdversaryPowerTooLarge { d, c });
        }
        Ok(Config {
            n,
            t,
            d,
            c,
            dedup_emit: false,
        })
    }

    /// The resilience condition `n > 3t + 2d`. Sufficient and necessary
    /// for the broadcast abstraction; runs outside it are legal but lose
    /// the liveness guarantees.
    pub fn assumption_ok(&self) -> bool {
        self.n > 3 * self.t + 2 * self.d
    }

    /// `c - d > floor((n+t)/2)`: enough correct processes stay reachable
    /// for some process to assemble a quorum.
    pub fn quorum_reachable(&self) -> bool {
        self.c - self.d > (self.n + self.t) / 2
    }
}

/// Minimum signature count that satisfies "strictly more than `(n+t)/2`"
/// in exact integer arithmetic: `floor((n+t)/2) + 1`.
pub fn quorum_threshold(n: u32, t: u32) -> u32 {
    (n + t) / 2 + 1
}

/// The single wire-message type: a triplet plus the signatures backing
/// it. Correct processes only emit bundles whose signatures all verify
/// against the triplet encoding and which include the original sender's
/// own signature; incoming bundles can be arbitrary bytes from anyone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Bundle {
    #[serde(with = "serde_hex")]
    pub payload: Vec<u8>,
    pub sn: u64,
    pub sender: ProcessId,
    pub sigs: Vec<Signature>,
}

impl Bundle {
    /// Build a bundle in canonical form: signatures sorted by signer id,
    /// one per signer.
    pub fn canonical(
        payload: Vec<u8>,
        sn: u64,
        sender: ProcessId,
        sigs: impl IntoIterator<Item = Signature>,
    ) -> Self {
        let dedup: BTreeMap<ProcessId, Signature> =
            sigs.into_iter().map(|s| (s.signer, s)).collect();
        Bundle {
            payload,
            sn,
            sender,
            sigs: dedup.into_values().collect(),
        }
    }

    pub fn signers(&self) -> BTreeSet<ProcessId> {
        self.sigs.iter().map(|s| s.signer).collect()
    }

    /// Byte serialization for golden files and hashing: the triplet's
    /// canonical encoding followed by a length-prefixed list of
    /// `(signer id, signature bytes)` pairs in stored order (signer
    /// order, for bundles built via [`Bundle::canonical`]).
    pub fn canonical_bytes(&self) -> Result<Vec<u8>, EncodeError> {
        let enc = encode_triplet(&self.payload, self.sn, self.sender)?;
        let mut bytes = enc.as_bytes().to_vec();
        bytes.extend_from_slice(&(self.sigs.len() as u32).to_be_bytes());
        for sig in &self.sigs {
            bytes.extend_from_slice(&sig.signer.0.to_be_bytes());
            bytes.extend_from_slice(&(sig.bytes.len() as u32).to_be_bytes());
            bytes.extend_from_slice(&sig.bytes);
        }
        Ok(bytes)
    }
}

impl fmt::Debug for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Bundle({} sn={} from {} sigs={:?})",
            String::from_utf8_lossy(&self.payload),
            self.sn,
            self.sender,
            self.signers()
        )
    }
}

/// An application-level delivery of `(payload, sn, sender)` at `at`.
/// Emitted at most once per `(at, sender, sn)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    #[serde(with = "serde_hex")]
    pub payload: Vec<u8>,
    pub sn: u64,
    pub sender: ProcessId,
    pub at: ProcessId,
}

/// Everything a process remembers about one `(sender, sn)` slot.
///
/// Signatures are keyed by payload first: a Byzantine sender may push
/// several payloads into the same slot and the quorum rule reasons about
/// each exact triplet separately, so all of them are retained.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SlotState {
    sigs: BTreeMap<Vec<u8>, BTreeMap<ProcessId, Signature>>,
    signed_by_me: Option<Vec<u8>>,
    delivered: Option<Vec<u8>>,
}

impl SlotState {
    pub fn signed_by_me(&self) -> Option<&[u8]> {
        self.signed_by_me.as_deref()
    }

    pub fn delivered(&self) -> Option<&[u8]> {
        self.delivered.as_deref()
    }

    /// Payloads seen for this slot with their signer sets.
    pub fn payloads(&self) -> impl Iterator<Item = (&[u8], BTreeSet<ProcessId>)> {
        self.sigs
            .iter()
            .map(|(m, sigs)| (m.as_slice(), sigs.keys().copied().collect()))
    }
}

/// Outputs of one state-machine transition.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Step {
    /// Bundles to hand to the unreliable `broadcast` macro, in order.
    pub outbound: Vec<Bundle>,
    /// Deliveries raised to the application layer.
    pub delivered: Vec<Delivery>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("sequence number {sn} already used by this process")]
    SequenceNumberReused { sn: u64 },
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// One correct process's complete protocol state.
#[derive(Clone, Debug)]
pub struct ProcessState {
    id: ProcessId,
    config: Config,
    scheme: Scheme,
    keys: KeyPair,
    peer_keys: BTreeMap<ProcessId, PublicKey>,
    store: BTreeMap<(ProcessId, u64), SlotState>,
}

impl ProcessState {
    pub fn new(
        config: Config,
        scheme: Scheme,
        keys: KeyPair,
        peer_keys: BTreeMap<ProcessId, PublicKey>,
    ) -> Self {
        ProcessState {
            id: keys.owner,
            config,
            scheme,
            keys,
            peer_keys,
            store: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> ProcessId {
        self.id
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    /// Broadcast an application payload under a fresh sequence number:
    /// sign the triplet, save the signature, and emit one bundle carrying
    /// it. Reusing a sequence number is a caller bug, not protocol input.
    pub fn mbrb_broadcast(&mut self, payload: &[u8], sn: u64) -> Result<Vec<Bundle>, ProtocolError> {
        let key = (self.id, sn);
        if self
            .store
            .get(&key)
            .is_some_and(|slot| slot.signed_by_me.is_some())
        {
            return Err(ProtocolError::SequenceNumberReused { sn });
        }
        let enc = encode_triplet(payload, sn, self.id)?;
        let sig = self.scheme.sign(&self.keys.secret, self.id, &enc);
        let slot = self.store.entry(key).or_default();
        slot.sigs
            .entry(payload.to_vec())
            .or_default()
            .insert(self.id, sig.clone());
        slot.signed_by_me = Some(payload.to_vec());
        Ok(vec![Bundle::canonical(
            payload.to_vec(),
            sn,
            self.id,
            [sig],
        )])
    }

    /// Process one incoming bundle, which may be arbitrary (this is the
    /// Byzantine-facing surface; malformed input is absorbed silently).
    ///
    /// The transition, in order:
    /// 1. drop the bundle if the slot was already delivered or if it
    ///    lacks a valid signature by the named sender over its triplet;
    /// 2. save every valid not-yet-saved signature it carries, skipping
    ///    invalid ones individually;
    /// 3. if this process has not signed any payload for the slot yet,
    ///    countersign and rebroadcast all saved signatures;
    /// 4. if the saved signatures for this exact triplet now reach the
    ///    quorum, broadcast them all and deliver.
    ///
    /// Steps 3 and 4 can both fire, producing two outbound bundles.
    pub fn handle_bundle(&mut self, bundle: &Bundle) -> Step {
        let mut step = Step::default();
        let slot_key = (bundle.sender, bundle.sn);

        if self
            .store
            .get(&slot_key)
            .is_some_and(|slot| slot.delivered.is_some())
        {
            return step;
        }
        let Ok(enc) = encode_triplet(&bundle.payload, bundle.sn, bundle.sender) else {
            return step;
        };
        let sender_signed = self.peer_keys.get(&bundle.sender).is_some_and(|pk| {
            bundle
                .sigs
                .iter()
                .any(|sig| sig.signer == bundle.sender && self.scheme.verify(pk, &enc, sig))
        });
        if !sender_signed {
            return step;
        }

        // Validate against the already-saved set before mutating, keeping
        // one signature per signer.
        let mut seen: BTreeSet<ProcessId> = self
            .store
            .get(&slot_key)
            .and_then(|slot| slot.sigs.get(&bundle.payload))
            .map(|sigs| sigs.keys().copied().collect())
            .unwrap_or_default();
        let mut fresh = Vec::new();
        for sig in &bundle.sigs {
            if seen.contains(&sig.signer) {
                continue;
            }
            let Some(pk) = self.peer_keys.get(&sig.signer) else {
                continue;
            };
            if self.scheme.verify(pk, &enc, sig) {
                seen.insert(sig.signer);
                fresh.push(sig.clone());
            }
        }

        let quorum = quorum_threshold(self.config.n, self.config.t) as usize;
        let slot = self.store.entry(slot_key).or_default();
        let saved = slot.sigs.entry(bundle.payload.clone()).or_default();
        for sig in fresh {
            saved.insert(sig.signer, sig);
        }

        if slot.signed_by_me.is_none() {
            let own_sig = self.scheme.sign(&self.keys.secret, self.id, &enc);
            saved.insert(self.id, own_sig);
            slot.signed_by_me = Some(bundle.payload.clone());
            step.outbound.push(Bundle::canonical(
                bundle.payload.clone(),
                bundle.sn,
                bundle.sender,
                saved.values().cloned(),
            ));
        }

        if saved.len() >= quorum {
            let quorum_bundle = Bundle::canonical(
                bundle.payload.clone(),
                bundle.sn,
                bundle.sender,
                saved.values().cloned(),
            );
            if !(self.config.dedup_emit && step.outbound.last() == Some(&quorum_bundle)) {
                step.outbound.push(quorum_bundle);
            }
            slot.delivered = Some(bundle.payload.clone());
            step.delivered.push(Delivery {
                payload: bundle.payload.clone(),
                sn: bundle.sn,
                sender: bundle.sender,
                at: self.id,
            });
        }

        step
    }

    /// Number of saved signatures for exactly `(payload, sn, sender)`;
    /// zero for unknown slots.
    pub fn saved_count(&self, payload: &[u8], sn: u64, sender: ProcessId) -> usize {
        self.store
            .get(&(sender, sn))
            .and_then(|slot| slot.sigs.get(payload))
            .map_or(0, |sigs| sigs.len())
    }

    /// Slots this process has touched, for trace finalization and tests.
    pub fn slots(&self) -> impl Iterator<Item = (&(ProcessId, u64), &SlotState)> {
        self.store.iter()
    }

    pub fn slot(&self, sender: ProcessId, sn: u64) -> Option<&SlotState> {
        self.store.get(&(sender, sn))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigcrypt::Scheme;

    fn keyring(n: u32, scheme: Scheme) -> (Vec<KeyPair>, BTreeMap<ProcessId, PublicKey>) {
        let keys: Vec<KeyPair> = (0..n as u64)
            .map(|i| scheme.keygen(&[1u8; 32], ProcessId(i)))
            .collect();
        let publics = keys.iter().map(|k| (k.owner, k.public)).collect();
        (keys, publics)
    }

    fn process(id: u64, n: u32, t: u32) -> ProcessState {
        let scheme = Scheme::PrfTag;
        let (keys, publics) = keyring(n, scheme);
        let config = Config::new(n, t, 0, n - t).unwrap();
        ProcessState::new(config, scheme, keys[id as usize].clone(), publics)
    }

    fn signed_bundle(
        by: &[u64],
        payload: &[u8],
        sn: u64,
        sender: u64,
        n: u32,
    ) -> Bundle {
        let scheme = Scheme::PrfTag;
        let (keys, _) = keyring(n, scheme);
        let enc = encode_triplet(payload, sn, ProcessId(sender)).unwrap();
        Bundle::canonical(
            payload.to_vec(),
            sn,
            ProcessId(sender),
            by.iter()
                .map(|&i| scheme.sign(&keys[i as usize].secret, ProcessId(i), &enc)),
        )
    }

    #[test]
    fn quorum_threshold_examples() {
        assert_eq!(quorum_threshold(4, 1), 3);
        assert_eq!(quorum_threshold(10, 1), 6);
        assert_eq!(quorum_threshold(5, 1), 4);
    }

    #[test]
    fn broadcast_emits_one_self_signed_bundle() {
        let mut p = process(0, 4, 1);
        let out = p.mbrb_broadcast(b"hello", 1).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].sigs.len(), 1);
        assert_eq!(out[0].sigs[0].signer, ProcessId(0));
        assert_eq!(out[0].sender, ProcessId(0));
        assert_eq!(p.saved_count(b"hello", 1, ProcessId(0)), 1);
    }

    #[test]
    fn broadcasts_under_distinct_sns_use_independent_slots() {
        let mut p = process(0, 4, 1);
        p.mbrb_broadcast(b"one", 1).unwrap();
        p.mbrb_broadcast(b"two", 2).unwrap();
        assert_eq!(p.saved_count(b"one", 1, ProcessId(0)), 1);
        assert_eq!(p.saved_count(b"two", 2, ProcessId(0)), 1);
    }

    #[test]
    fn sequence_number_reuse_is_rejected() {
        let mut p = process(0, 4, 1);
        p.mbrb_broadcast(b"one", 1).unwrap();
        assert_eq!(
            p.mbrb_broadcast(b"other", 1),
            Err(ProtocolError::SequenceNumberReused { sn: 1 })
        );
    }

    #[test]
    fn own_echo_does_not_re_sign_or_forward() {
        let mut p = process(0, 4, 1);
        let out = p.mbrb_broadcast(b"hello", 1).unwrap();
        let step = p.handle_bundle(&out[0]);
        assert!(step.outbound.is_empty());
        assert!(step.delivered.is_empty());
        assert_eq!(p.saved_count(b"hello", 1, ProcessId(0)), 1);
    }

    #[test]
    fn third_signature_crosses_quorum_and_delivers() {
        // n = 4, t = 1: quorum is 3. Seed the state with signatures from
        // p1 (the slot sender) and p0 itself, then feed a bundle adding
        // p2's signature.
        let mut p = process(0, 4, 1);
        let seed = signed_bundle(&[1], b"m", 1, 1, 4);
        let step = p.handle_bundle(&seed);
        assert_eq!(step.outbound.len(), 1); // countersigned forward
        assert_eq!(p.saved_count(b"m", 1, ProcessId(1)), 2);

        let more = signed_bundle(&[1, 2], b"m", 1, 1, 4);
        let step = p.handle_bundle(&more);
        assert_eq!(p.saved_count(b"m", 1, ProcessId(1)), 3);
        assert_eq!(step.outbound.len(), 1);
        assert_eq!(step.outbound[0].sigs.len(), 3);
        assert_eq!(
            step.delivered,
            vec![Delivery {
                payload: b"m".to_vec(),
                sn: 1,
                sender: ProcessId(1),
                at: ProcessId(0),
            }]
        );
    }

    #[test]
    fn bundle_without_sender_signature_is_dropped() {
        let mut p = process(0, 4, 1);
        // Signatures by p2 and p3 only; the slot sender p1 never signed.
        let bundle = signed_bundle(&[2, 3], b"m", 1, 1, 4);
        let step = p.handle_bundle(&bundle);
        assert_eq!(step, Step::default());
        assert_eq!(p.saved_count(b"m", 1, ProcessId(1)), 0);
        assert!(p.slot(ProcessId(1), 1).is_none());
    }

    #[test]
    fn equivocating_sender_is_saved_but_not_countersigned() {
        let mut p = process(0, 4, 1);
        p.handle_bundle(&signed_bundle(&[1], b"m", 1, 1, 4));
        assert_eq!(p.slot(ProcessId(1), 1).unwrap().signed_by_me(), Some(&b"m"[..]));

        // Same slot, conflicting payload, valid sender signature.
        let step = p.handle_bundle(&signed_bundle(&[1], b"evil", 1, 1, 4));
        assert!(step.outbound.is_empty());
        assert_eq!(p.saved_count(b"evil", 1, ProcessId(1)), 1);
        assert_eq!(p.slot(ProcessId(1), 1).unwrap().signed_by_me(), Some(&b"m"[..]));

        // The conflicting payload can still reach quorum independently.
        let step = p.handle_bundle(&signed_bundle(&[1, 2, 3], b"evil", 1, 1, 4));
        assert_eq!(step.delivered.len(), 1);
        assert_eq!(step.delivered[0].payload, b"evil");
    }

    #[test]
    fn delivered_slot_ignores_further_bundles() {
        let mut p = process(0, 4, 1);
        p.handle_bundle(&signed_bundle(&[1, 2, 3], b"m", 1, 1, 4));
        assert_eq!(p.slot(ProcessId(1), 1).unwrap().delivered(), Some(&b"m"[..]));

        let step = p.handle_bundle(&signed_bundle(&[1, 2, 3], b"evil", 1, 1, 4));
        assert_eq!(step, Step::default());
        assert_eq!(p.saved_count(b"evil", 1, ProcessId(1)), 0);
    }

    #[test]
    fn saved_count_reports_exact_triplets_only() {
        let mut p = process(0, 4, 1);
        assert_eq!(p.saved_count(b"m", 1, ProcessId(1)), 0);
        p.mbrb_broadcast(b"m", 1).unwrap();
        assert_eq!(p.saved_count(b"m", 1, ProcessId(0)), 1);
        assert_eq!(p.saved_count(b"m", 2, ProcessId(0)), 0);
        assert_eq!(p.saved_count(b"x", 1, ProcessId(0)), 0);
    }

    #[test]
    fn invalid_signatures_inside_valid_bundle_are_skipped() {
        let mut p = process(0, 4, 1);
        let mut bundle = signed_bundle(&[1, 2], b"m", 1, 1, 4);
        // Corrupt p2's signature and add junk from an unknown signer.
        for sig in &mut bundle.sigs {
            if sig.signer == ProcessId(2) {
                sig.bytes[0] ^= 0xff;
            }
        }
        bundle.sigs.push(Signature {
            signer: ProcessId(99),
            bytes: vec![0; 32],
        });
        p.handle_bundle(&bundle);
        // Saved: p1's valid signature plus our own; p2's corrupt one and
        // the unknown signer are gone.
        assert_eq!(p.saved_count(b"m", 1, ProcessId(1)), 2);
        let signers: Vec<_> = p
            .slot(ProcessId(1), 1)
            .unwrap()
            .payloads()
            .next()
            .unwrap()
            .1
            .into_iter()
            .collect();
        assert_eq!(signers, vec![ProcessId(0), ProcessId(1)]);
    }

    #[test]
    fn dedup_emit_drops_identical_double_broadcast() {
        // A single incoming bundle that both triggers the countersign
        // and crosses the quorum produces two identical bundles unless
        // dedup_emit is set.
        let scheme = Scheme::PrfTag;
        let (keys, publics) = keyring(4, scheme);
        let mut config = Config::new(4, 1, 0, 3).unwrap();
        let bundle = signed_bundle(&[1, 2, 3], b"m", 1, 1, 4);

        let mut plain = ProcessState::new(config, scheme, keys[0].clone(), publics.clone());
        let step = plain.handle_bundle(&bundle);
        assert_eq!(step.outbound.len(), 2);
        assert_eq!(step.outbound[0], step.outbound[1]);

        config.dedup_emit = true;
        let mut dedup = ProcessState::new(config, scheme, keys[0].clone(), publics);
        let step = dedup.handle_bundle(&bundle);
        assert_eq!(step.outbound.len(), 1);
        assert_eq!(step.delivered.len(), 1);
    }

    #[test]
    fn canonical_bytes_orders_signatures_by_signer() {
        let a = signed_bundle(&[2, 1, 3], b"m", 1, 1, 4);
        let b = signed_bundle(&[3, 1, 2], b"m", 1, 1, 4);
        assert_eq!(a.canonical_bytes().unwrap(), b.canonical_bytes().unwrap());
        let other = signed_bundle(&[1, 2], b"m", 1, 1, 4);
        assert_ne!(a.canonical_bytes().unwrap(), other.canonical_bytes().unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(Config::new(4, 1, 0, 3).is_ok());
        assert_eq!(Config::new(0, 0, 0, 0), Err(ConfigError::NoProcesses));
        assert!(matches!(
            Config::new(3, 3, 0, 0),
            Err(ConfigError::TooManyByzantine { .. })
        ));
        assert!(matches!(
            Config::new(4, 1, 0, 2),
            Err(ConfigError::CorrectCountOutOfRange { .. })
        ));
        assert!(matches!(
            Config::new(4, 1, 3, 3),
            Err(ConfigError::AdversaryPowerTooLarge { .. })
        ));
        let boundary = Config::new(5, 1, 1, 4).unwrap();
        assert!(!boundary.assumption_ok());
        assert!(Config::new(6, 1, 1, 5).unwrap().assumption_ok());
        // c - d = 3 is not strictly above floor((n+t)/2) = 3.
        assert!(!boundary.quorum_reachable());
    }
}
