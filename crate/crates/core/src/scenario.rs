//! Experiment descriptions and their on-disk schema.
//!
//! A [`Scenario`] is everything a run needs: system parameters, role
//! assignment, the message-adversary policy, the schedule, the initial
//! application broadcasts, and a master seed that makes the whole run
//! reproducible. Scenario files are TOML (`schema = "mbrb-scenario/v1"`);
//! unknown fields are rejected and the master seed is mandatory.

pub mod presets;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AdversaryError, ByzStrategy, DropPolicy, PartitionRule};
use crate::protocol::{Config, ConfigError};
use crate::sigcrypt::{ProcessId, Scheme, MAX_PAYLOAD_LEN};

pub const SCENARIO_SCHEMA: &str = "mbrb-scenario/v1";

/// One application-level broadcast request. Lockstep runs invoke it at
/// `at_step`; async runs require `at_step == 0` and issue everything at
/// bootstrap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppBroadcast {
    pub sender: ProcessId,
    pub payload: Vec<u8>,
    pub sn: u64,
    pub at_step: u64,
}

/// Hold back matching copies until a release step. The boundary partition attack
/// uses this to model the unbounded asynchrony of the impossibility
/// argument inside a finite lockstep run; only lockstep honors it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DelayRule {
    pub payload: Vec<u8>,
    pub receivers: BTreeSet<ProcessId>,
    pub until_step: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Synchronous rounds with unit transfer delay; the timing model the
    /// step bounds are stated in.
    Lockstep,
    /// One reception at a time in a seeded pseudorandom order, with
    /// unbounded reordering. `prefer_payload` biases the scheduler to
    /// deliver matching bundles first (a targeted-attack order).
    SeededAsync {
        seed: u64,
        prefer_payload: Option<Vec<u8>>,
    },
}

/// A complete experiment description.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: Config,
    pub scheme: Scheme,
    pub byzantine: BTreeMap<ProcessId, ByzStrategy>,
    pub drop_policy: DropPolicy,
    /// Let the adversary suppress a sender's own copy too (sensitivity
    /// runs only; default off).
    pub suppress_self_copies: bool,
    pub schedule: Schedule,
    pub delay_rules: Vec<DelayRule>,
    pub broadcasts: Vec<AppBroadcast>,
    /// Lockstep: maximum round. Async: maximum number of receptions.
    pub horizon: u64,
    pub master_seed: u64,
    /// Per-process key-seed overrides; everything else derives from
    /// `master_seed`.
    pub key_seeds: BTreeMap<ProcessId, [u8; 32]>,
}

impl Scenario {
    /// A quiet scenario around `config`: no adversary, lockstep, and a
    /// generous default horizon of `4 n` rounds.
    pub fn new(config: Config) -> Self {
        Scenario {
            config,
            scheme: Scheme::default(),
            byzantine: BTreeMap::new(),
            drop_policy: DropPolicy::None,
            suppress_self_copies: false,
            schedule: Schedule::Lockstep,
            delay_rules: Vec::new(),
            broadcasts: Vec::new(),
            horizon: 4 * u64::from(config.n),
            master_seed: 0,
            key_seeds: BTreeMap::new(),
        }
    }

    /// Default async horizon: `50 n^2` receptions.
    pub fn default_async_horizon(n: u32) -> u64 {
        50 * u64::from(n) * u64::from(n)
    }

    pub fn correct(&self) -> BTreeSet<ProcessId> {
        (0..u64::from(self.config.n))
            .map(ProcessId)
            .filter(|p| !self.byzantine.contains_key(p))
            .collect()
    }

    pub fn is_correct(&self, p: ProcessId) -> bool {
        p.0 < u64::from(self.config.n) && !self.byzantine.contains_key(&p)
    }

    /// Structural validation. Returns advisory warnings (resilience
    /// assumption or quorum reachability violated) that callers may
    /// escalate; hard errors make the scenario unrunnable.
    pub fn validate(&self) -> Result<Vec<Warning>, ScenarioError> {
        let n = u64::from(self.config.n);
        let in_range = |p: ProcessId| p.0 < n;

        if self.byzantine.len() > self.config.t as usize {
            return Err(ScenarioError::TooManyByzantine {
                got: self.byzantine.len(),
                t: self.config.t,
            });
        }
        let expected_c = self.config.n - self.byzantine.len() as u32;
        if self.config.c != expected_c {
            return Err(ScenarioError::WrongCorrectCount {
                c: self.config.c,
                expected: expected_c,
            });
        }
        if self.horizon == 0 {
            return Err(ScenarioError::ZeroHorizon);
        }
        for id in self.byzantine.keys().chain(self.key_seeds.keys()) {
            if !in_range(*id) {
                return Err(ScenarioError::UnknownProcess(*id));
            }
        }
        self.drop_policy.validate(self.config.d)?;
        let policy_ids: Vec<ProcessId> = match &self.drop_policy {
            DropPolicy::StaticSet { victims } => victims.iter().copied().collect(),
            DropPolicy::QuiescentAfterTau { victims, .. } => victims.iter().copied().collect(),
            DropPolicy::TargetedPartition { rules } => {
                rules.iter().flat_map(|r| r.victims.iter().copied()).collect()
            }
            _ => Vec::new(),
        };
        for id in policy_ids {
            if !in_range(id) {
                return Err(ScenarioError::UnknownProcess(id));
            }
        }

        let mut used_sns: BTreeSet<(ProcessId, u64)> = BTreeSet::new();
        for b in &self.broadcasts {
            if !in_range(b.sender) {
                return Err(ScenarioError::UnknownProcess(b.sender));
            }
            if self.byzantine.contains_key(&b.sender) {
                return Err(ScenarioError::ByzantineBroadcaster(b.sender));
            }
            if b.payload.len() > MAX_PAYLOAD_LEN {
                return Err(ScenarioError::PayloadTooLarge);
            }
            if !used_sns.insert((b.sender, b.sn)) {
                return Err(ScenarioError::DuplicateSequenceNumber {
                    sender: b.sender,
                    sn: b.sn,
                });
            }
            if b.at_step >= self.horizon && b.at_step != 0 {
                return Err(ScenarioError::BroadcastBeyondHorizon { at_step: b.at_step });
            }
        }

        let is_async = matches!(self.schedule, Schedule::SeededAsync { .. });
        if is_async {
            if !self.delay_rules.is_empty() {
                return Err(ScenarioError::DelayRulesNeedLockstep);
            }
            if self.broadcasts.iter().any(|b| b.at_step != 0) {
                return Err(ScenarioError::TimedBroadcastNeedsLockstep);
            }
        }
        for rule in &self.delay_rules {
            for id in &rule.receivers {
                if !in_range(*id) {
                    return Err(ScenarioError::UnknownProcess(*id));
                }
            }
        }

        let mut warnings = Vec::new();
        if !self.config.assumption_ok() {
            warnings.push(Warning::AssumptionViolated {
                n: self.config.n,
                t: self.config.t,
                d: self.config.d,
            });
        }
        if !self.config.quorum_reachable() {
            warnings.push(Warning::QuorumUnreachable {
                c: self.config.c,
                d: self.config.d,
            });
        }
        Ok(warnings)
    }
}

/// Advisory findings from validation: the run is legal but outside the
/// proven envelope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Warning {
    AssumptionViolated { n: u32, t: u32, d: u32 },
    QuorumUnreachable { c: u32, d: u32 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::AssumptionViolated { n, t, d } => write!(
                f,
                "resilience assumption violated: n = {n} <= 3t + 2d = {} (liveness not guaranteed)",
                3 * t + 2 * d
            ),
            Warning::QuorumUnreachable { c, d } => write!(
                f,
                "quorum unreachable: c - d = {} does not exceed the quorum floor",
                c - d
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{got} byzantine roles exceed t = {t}")]
    TooManyByzantine { got: usize, t: u32 },
    #[error("config.c = {c} but roles imply c = {expected}")]
    WrongCorrectCount { c: u32, expected: u32 },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("process {0} does not exist in this scenario")]
    UnknownProcess(ProcessId),
    #[error("initial broadcaster {0} is byzantine; byzantine sends come from strategies")]
    ByzantineBroadcaster(ProcessId),
    #[error("broadcast payload exceeds the encodable maximum")]
    PayloadTooLarge,
    #[error("duplicate sequence number {sn} for sender {sender}")]
    DuplicateSequenceNumber { sender: ProcessId, sn: u64 },
    #[error("broadcast at_step {at_step} is beyond the horizon")]
    BroadcastBeyondHorizon { at_step: u64 },
    #[error("delay rules are only honored under the lockstep schedule")]
    DelayRulesNeedLockstep,
    #[error("timed broadcasts (at_step > 0) require the lockstep schedule")]
    TimedBroadcastNeedsLockstep,
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported scenario schema {0:?}")]
    BadSchema(String),
    #[error("invalid key seed for {0}: want 64 hex chars")]
    BadKeySeed(ProcessId),
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------
// File schema. Payloads are UTF-8 strings in files; in-memory types use
// raw bytes. Every table rejects unknown fields.
// ---------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema: String,
    master_seed: u64,
    #[serde(default)]
    scheme: Scheme,
    #[serde(default)]
    horizon: Option<u64>,
    #[serde(default)]
    suppress_self_copies: bool,
    config: ConfigFile,
    #[serde(default)]
    schedule: Option<ScheduleFile>,
    #[serde(default)]
    drop_policy: Option<DropPolicyFile>,
    #[serde(default, rename = "broadcast")]
    broadcasts: Vec<BroadcastFile>,
    #[serde(default, rename = "byzantine")]
    byzantine: Vec<ByzantineFile>,
    #[serde(default, rename = "delay_rule")]
    delay_rules: Vec<DelayRuleFile>,
    #[serde(default)]
    keys: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n: u32,
    t: u32,
    d: u32,
    #[serde(default)]
    dedup_emit: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ScheduleFile {
    Lockstep,
    SeededAsync {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        prefer_payload: Option<String>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DropPolicyFile {
    None,
    StaticSet {
        victims: Vec<u64>,
    },
    PerBroadcastRandom,
    TargetedPartition {
        rules: Vec<PartitionRuleFile>,
    },
    QuiescentAfterTau {
        victims: Vec<u64>,
        tau: u64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionRuleFile {
    payload: String,
    victims: Vec<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BroadcastFile {
    sender: u64,
    payload: String,
    sn: u64,
    #[serde(default)]
    step: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ByzantineFile {
    id: u64,
    strategy: StrategyFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum StrategyFile {
    Silent,
    CrashMidBroadcast {
        payload: String,
        sn: u64,
        recipients: Vec<u64>,
    },
    Equivocate {
        payload_a: String,
        payload_b: String,
        sn: u64,
        group_a: Vec<u64>,
        group_b: Vec<u64>,
    },
    Replayer {
        budget: u32,
    },
    PartitionAttacker {
        leader: u64,
        payload_a: String,
        payload_b: String,
        sn: u64,
        side_a: Vec<u64>,
        side_b: Vec<u64>,
        colleagues: Vec<u64>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DelayRuleFile {
    payload: String,
    receivers: Vec<u64>,
    until_step: u64,
}

fn ids(raw: &[u64]) -> BTreeSet<ProcessId> {
    raw.iter().copied().map(ProcessId).collect()
}

/// Parse and validate a scenario document. Returns the scenario plus any
/// advisory warnings.
pub fn load_scenario_str(text: &str) -> Result<(Scenario, Vec<Warning>), ScenarioError> {
    let file: ScenarioFile = toml::from_str(text)?;
    if file.schema != SCENARIO_SCHEMA {
        return Err(ScenarioError::BadSchema(file.schema));
    }
    let byz_count = file.byzantine.len() as u32;
    if byz_count > file.config.n {
        return Err(ScenarioError::TooManyByzantine {
            got: file.byzantine.len(),
            t: file.config.t,
        });
    }
    let mut config = Config::new(
        file.config.n,
        file.config.t,
        file.config.d,
        file.config.n - byz_count,
    )?;
    config.dedup_emit = file.config.dedup_emit;

    let mut scenario = Scenario::new(config);
    scenario.scheme = file.scheme;
    scenario.master_seed = file.master_seed;
    scenario.suppress_self_copies = file.suppress_self_copies;

    scenario.schedule = match file.schedule {
        None | Some(ScheduleFile::Lockstep) => Schedule::Lockstep,
        Some(ScheduleFile::SeededAsync {
            seed,
            prefer_payload,
        }) => Schedule::SeededAsync {
            seed: seed.unwrap_or(file.master_seed),
            prefer_payload: prefer_payload.map(String::into_bytes),
        },
    };
    scenario.horizon = file.horizon.unwrap_or(match scenario.schedule {
        Schedule::Lockstep => 4 * u64::from(config.n),
        Schedule::SeededAsync { .. } => Scenario::default_async_horizon(config.n),
    });

    scenario.drop_policy = match file.drop_policy {
        None | Some(DropPolicyFile::None) => DropPolicy::None,
        Some(DropPolicyFile::StaticSet { victims }) => DropPolicy::StaticSet {
            victims: ids(&victims),
        },
        Some(DropPolicyFile::PerBroadcastRandom) => DropPolicy::PerBroadcastRandom,
        Some(DropPolicyFile::TargetedPartition { rules }) => DropPolicy::TargetedPartition {
            rules: rules
                .into_iter()
                .map(|r| PartitionRule {
                    payload: r.payload.into_bytes(),
                    victims: ids(&r.victims),
                })
                .collect(),
        },
        Some(DropPolicyFile::QuiescentAfterTau { victims, tau }) => {
            DropPolicy::QuiescentAfterTau {
                victims: ids(&victims),
                tau,
            }
        }
    };

    for b in file.broadcasts {
        scenario.broadcasts.push(AppBroadcast {
            sender: ProcessId(b.sender),
            payload: b.payload.into_bytes(),
            sn: b.sn,
            at_step: b.step,
        });
    }

    for b in file.byzantine {
        let strategy = match b.strategy {
            StrategyFile::Silent => ByzStrategy::Silent,
            StrategyFile::CrashMidBroadcast {
                payload,
                sn,
                recipients,
            } => ByzStrategy::CrashMidBroadcast {
                payload: payload.into_bytes(),
                sn,
                recipients: ids(&recipients),
            },
            StrategyFile::Equivocate {
                payload_a,
                payload_b,
                sn,
                group_a,
                group_b,
            } => ByzStrategy::Equivocate {
                payload_a: payload_a.into_bytes(),
                payload_b: payload_b.into_bytes(),
                sn,
                group_a: ids(&group_a),
                group_b: ids(&group_b),
            },
            StrategyFile::Replayer { budget } => ByzStrategy::Replayer { budget },
            StrategyFile::PartitionAttacker {
                leader,
                payload_a,
                payload_b,
                sn,
                side_a,
                side_b,
                colleagues,
            } => ByzStrategy::PartitionAttacker {
                leader: ProcessId(leader),
                payload_a: payload_a.into_bytes(),
                payload_b: payload_b.into_bytes(),
                sn,
                side_a: ids(&side_a),
                side_b: ids(&side_b),
                colleagues: ids(&colleagues),
            },
        };
        scenario.byzantine.insert(ProcessId(b.id), strategy);
    }

    for rule in file.delay_rules {
        scenario.delay_rules.push(DelayRule {
            payload: rule.payload.into_bytes(),
            receivers: ids(&rule.receivers),
            until_step: rule.until_step,
        });
    }

    for (pid_raw, hex_seed) in file.keys {
        let pid = pid_raw
            .parse::<u64>()
            .map(ProcessId)
            .map_err(|_| ScenarioError::BadKeySeed(ProcessId(u64::MAX)))?;
        let bytes = hex::decode(&hex_seed).map_err(|_| ScenarioError::BadKeySeed(pid))?;
        let seed: [u8; 32] = bytes
            .try_into()
            .map_err(|_| ScenarioError::BadKeySeed(pid))?;
        scenario.key_seeds.insert(pid, seed);
    }

    let warnings = scenario.validate()?;
    Ok((scenario, warnings))
}

/// Load a scenario from a file path.
pub fn load_scenario(path: &std::path::Path) -> Result<(Scenario, Vec<Warning>), ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    load_scenario_str(&text)
}
