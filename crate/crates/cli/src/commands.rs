//! The three experiment drivers behind the binary: single runs from
//! scenario files, parameter sweeps against the predicted bounds, and
//! the resilience-boundary demonstration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use mbrb::adversary::build_partition_attack;
use mbrb::metrics::{
    audit_trace, check_all, check_liveness, check_safety, measure_lambda, measure_mu,
    measure_mu_for_slot, predict_bounds, BoundPrediction, Check, LambdaClass, Property,
};
use mbrb::protocol::quorum_threshold;
use mbrb::scenario::presets::{self, PolicyKind, StrategyKind};
use mbrb::scenario::{load_scenario, Schedule};
use mbrb::sigcrypt::ProcessId;
use mbrb::simnet::{run, run_lockstep};
use mbrb::trace::{Event, Trace};

use crate::report::Format;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub strict: bool,
    pub allow_boundary: bool,
    pub seed: Option<u64>,
    pub horizon: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            strict: false,
            allow_boundary: false,
            seed: None,
            horizon: None,
            out: None,
            format: Format::Table,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report: String,
    pub trace: Option<Trace>,
}

fn usage_failure(message: String) -> RunOutcome {
    RunOutcome {
        exit_code: EXIT_USAGE,
        report: format!("error: {message}\n"),
        trace: None,
    }
}

/// Distinct correct deliverers of `(sender, sn)` and, among them, those
/// within `by_step`.
fn slot_deliverers(trace: &Trace, sender: ProcessId, sn: u64, by_step: u64) -> (BTreeSet<ProcessId>, BTreeSet<ProcessId>) {
    let mut all = BTreeSet::new();
    let mut early = BTreeSet::new();
    for (p, _, d_sn, d_sender, step) in trace.deliveries() {
        if d_sn == sn && d_sender == sender {
            all.insert(p);
            if step <= by_step {
                early.insert(p);
            }
        }
    }
    (all, early)
}

/// Per-slot message-cost ceiling: every `(sender, sn)` slot that correct
/// processes sent bundles for must stay within `2 n^2`.
fn mu_violations(trace: &Trace) -> Vec<String> {
    let mut slots: BTreeSet<(ProcessId, u64)> = BTreeSet::new();
    for event in &trace.events {
        if let Event::Send { sender, bundle, .. } = event {
            if trace.is_correct(*sender) {
                slots.insert((bundle.sender, bundle.sn));
            }
        }
    }
    let bound = 2 * u64::from(trace.config.n) * u64::from(trace.config.n);
    slots
        .into_iter()
        .filter_map(|(sender, sn)| {
            let mu = measure_mu_for_slot(trace, sender, sn);
            (mu > bound).then(|| format!("slot ({sender}, sn {sn}): mu {mu} exceeds {bound}"))
        })
        .collect()
}

/// Execute one scenario file: run, check, report, optionally write the
/// trace and report under `--out`.
pub fn cmd_run(path: &Path, opts: &RunOptions) -> RunOutcome {
    let (mut scenario, warnings) = match load_scenario(path) {
        Ok(loaded) => loaded,
        Err(e) => return usage_failure(e.to_string()),
    };
    if opts.strict && !warnings.is_empty() {
        let lines: Vec<String> = warnings.iter().map(|w| format!("  {w}")).collect();
        return usage_failure(format!(
            "strict mode refuses a scenario with warnings:\n{}",
            lines.join("\n")
        ));
    }
    if let Some(seed) = opts.seed {
        scenario.master_seed = seed;
        if let Schedule::SeededAsync {
            seed: ref mut s, ..
        } = scenario.schedule
        {
            *s = seed;
        }
    }
    if let Some(horizon) = opts.horizon {
        scenario.horizon = horizon;
    }

    let trace = match run(&scenario) {
        Ok(trace) => trace,
        Err(e) => return usage_failure(e.to_string()),
    };

    let file_name = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let mut report = String::new();
    let cfg = scenario.config;
    report.push_str(&format!(
        "scenario: {file_name} (n={} t={} d={} c={}, scheme {:?}, {}, horizon {}, seed {})\n",
        cfg.n,
        cfg.t,
        cfg.d,
        cfg.c,
        scenario.scheme,
        match scenario.schedule {
            Schedule::Lockstep => "lockstep".to_string(),
            Schedule::SeededAsync { seed, .. } => format!("seeded_async({seed})"),
        },
        scenario.horizon,
        scenario.master_seed,
    ));
    if !opts.allow_boundary {
        for warning in &warnings {
            report.push_str(&format!("warning: {warning}\n"));
        }
    }

    let assumption_ok = cfg.assumption_ok();
    let prediction = predict_bounds(cfg.n, cfg.t, cfg.d, cfg.c);
    match &prediction {
        Ok(p) => report.push_str(&format!(
            "prediction: quorum={} ell={} lambda={} ell2_min={} mu_max={}\n",
            p.quorum, p.ell, p.lambda_class, p.ell2_min, p.mu_max
        )),
        Err(e) => report.push_str(&format!("prediction: {e}\n")),
    }

    // Measurements around the first correct broadcast, if any.
    let lockstep = matches!(scenario.schedule, Schedule::Lockstep);
    if let Some(b) = scenario
        .broadcasts
        .iter()
        .find(|b| scenario.is_correct(b.sender))
    {
        let (all, early) = slot_deliverers(&trace, b.sender, b.sn, b.at_step + 2);
        let lambda = if lockstep {
            match measure_lambda(&trace, b.sender, b.sn) {
                Ok(k) => format!("{}", k.saturating_sub(b.at_step)),
                Err(_) => "not-reached".to_string(),
            }
        } else {
            "n/a(async)".to_string()
        };
        report.push_str(&format!(
            "measured: deliverers={} lambda={} ell2_observed={} mu={} mu_slot={} truncated={}\n",
            all.len(),
            lambda,
            if lockstep {
                early.len().to_string()
            } else {
                "n/a(async)".to_string()
            },
            measure_mu(&trace),
            measure_mu_for_slot(&trace, b.sender, b.sn),
            trace.truncated,
        ));
    } else {
        report.push_str(&format!(
            "measured: deliver_events={} mu={} truncated={}\n",
            trace.deliveries().count(),
            measure_mu(&trace),
            trace.truncated,
        ));
    }

    let checks = check_all(&trace, &scenario);
    let audit = audit_trace(&trace, &scenario);
    let mu_bad = mu_violations(&trace);

    let mut failed = false;
    for property in Property::ALL {
        let check = checks.get(property);
        let verdict = match check {
            Check::Fail { .. } | Check::Inconclusive(_) if !property.is_safety() && !assumption_ok => {
                format!("expected-fail outside the resilience assumption ({check})")
            }
            Check::Fail { .. } | Check::Inconclusive(_) => {
                failed = true;
                check.to_string()
            }
            other => other.to_string(),
        };
        report.push_str(&format!("property {property}: {verdict}\n"));
    }
    if audit.is_empty() && mu_bad.is_empty() {
        report.push_str("trace-audit: pass\n");
    } else {
        failed = true;
        for issue in audit.iter().chain(mu_bad.iter()) {
            report.push_str(&format!("trace-audit: FAIL: {issue}\n"));
        }
    }
    report.push_str(&format!(
        "result: {}\n",
        if failed { "FAIL" } else { "pass" }
    ));

    if let Some(dir) = &opts.out {
        if let Err(e) = write_outputs(dir, &[("trace.jsonl", trace.to_jsonl()), ("report.txt", report.clone())]) {
            return usage_failure(e);
        }
    }

    RunOutcome {
        exit_code: if failed { EXIT_VIOLATION } else { EXIT_OK },
        report,
        trace: Some(trace),
    }
}

fn write_outputs(dir: &Path, files: &[(&str, String)]) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    for (name, content) in files {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub n_list: Vec<u32>,
    pub seeds: u64,
    pub allow_boundary: bool,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            n_list: vec![4, 7, 10],
            seeds: 3,
            allow_boundary: false,
            out: None,
            format: Format::Table,
        }
    }
}

/// One `(n, t, d, strategy, policy)` grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub n: u32,
    pub t: u32,
    pub d: u32,
    pub strategy: Option<StrategyKind>,
    pub policy: PolicyKind,
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub key: CellKey,
    pub c: u32,
    pub prediction: Option<BoundPrediction>,
    pub seeds: u64,
    pub ell_observed_min: Option<u32>,
    pub lambda_observed_max: Option<u64>,
    pub ell2_observed_min: Option<u32>,
    pub mu_slot_max: u64,
    pub violations: Vec<String>,
}

/// Aggregated verdicts over `seeds` lockstep + async runs of one cell.
fn run_cell(key: CellKey, seeds: u64) -> CellResult {
    let CellKey {
        n,
        t,
        d,
        strategy,
        policy,
    } = key;
    // Cells without a strategy carry t = 0, so no process is Byzantine.
    let c = n - t.min(n - 1);

    let prediction = match predict_bounds(n, t, d, c) {
        Ok(p) => p,
        Err(_) => {
            return CellResult {
                key,
                c,
                prediction: None,
                seeds: 0,
                ell_observed_min: None,
                lambda_observed_max: None,
                ell2_observed_min: None,
                mu_slot_max: 0,
                violations: Vec::new(),
            };
        }
    };

    let strategy_kind = strategy.unwrap_or(StrategyKind::Silent);
    let mut violations = Vec::new();
    let mut ell_min: Option<u32> = None;
    let mut lambda_max: Option<u64> = None;
    let mut ell2_min_seen: Option<u32> = None;
    let mut mu_slot_max = 0u64;

    for seed in 0..seeds {
        let fail = |violations: &mut Vec<String>, what: String| {
            violations.push(format!("seed {seed}: {what}"));
        };

        // Lockstep leg: liveness, step bounds, message cost.
        let lockstep = presets::cell(n, t, d, strategy_kind, policy, Schedule::Lockstep, seed);
        match run_lockstep(&lockstep) {
            Err(e) => fail(&mut violations, format!("lockstep run failed: {e}")),
            Ok(trace) => {
                let checks = check_all(&trace, &lockstep);
                for (property, check) in checks.failures() {
                    fail(&mut violations, format!("lockstep {property}: {check}"));
                }
                if trace.truncated {
                    fail(&mut violations, "lockstep trace truncated".to_string());
                }
                for issue in audit_trace(&trace, &lockstep) {
                    fail(&mut violations, format!("lockstep audit: {issue}"));
                }

                let (all, early) = slot_deliverers(&trace, ProcessId(0), 1, 2);
                let observed_ell = all.len() as u32;
                ell_min = Some(ell_min.map_or(observed_ell, |m| m.min(observed_ell)));
                if observed_ell < prediction.ell {
                    fail(
                        &mut violations,
                        format!("observed ell {observed_ell} below {}", prediction.ell),
                    );
                }

                let observed_ell2 = early.len() as u32;
                ell2_min_seen = Some(ell2_min_seen.map_or(observed_ell2, |m| m.min(observed_ell2)));
                if observed_ell2 < prediction.ell2_min {
                    fail(
                        &mut violations,
                        format!(
                            "two-step deliverers {observed_ell2} below ell2_min {}",
                            prediction.ell2_min
                        ),
                    );
                }

                match measure_lambda(&trace, ProcessId(0), 1) {
                    Ok(lambda) => {
                        lambda_max = Some(lambda_max.map_or(lambda, |m| m.max(lambda)));
                        let cap = match prediction.lambda_class {
                            LambdaClass::Two => Some(2),
                            LambdaClass::Three => Some(3),
                            LambdaClass::More => None,
                        };
                        if let Some(cap) = cap {
                            if lambda > cap {
                                fail(
                                    &mut violations,
                                    format!(
                                        "lambda {lambda} exceeds class bound {cap} ({})",
                                        prediction.lambda_class
                                    ),
                                );
                            }
                        }
                    }
                    Err(e) => fail(&mut violations, format!("lambda: {e}")),
                }

                for issue in mu_violations(&trace) {
                    fail(&mut violations, issue);
                }
                mu_slot_max = mu_slot_max.max(measure_mu_for_slot(&trace, ProcessId(0), 1));
            }
        }

        // Async leg: safety under reordering.
        let schedule = Schedule::SeededAsync {
            seed,
            prefer_payload: None,
        };
        let asynchronous = presets::cell(n, t, d, strategy_kind, policy, schedule, seed);
        match run(&asynchronous) {
            Err(e) => fail(&mut violations, format!("async run failed: {e}")),
            Ok(trace) => {
                let safety = check_safety(&trace, &asynchronous);
                for (property, check) in safety.failures() {
                    fail(&mut violations, format!("async {property}: {check}"));
                }
                for issue in audit_trace(&trace, &asynchronous) {
                    fail(&mut violations, format!("async audit: {issue}"));
                }
                if !trace.truncated {
                    let liveness = check_liveness(&trace, &asynchronous);
                    for (property, check) in liveness.failures() {
                        fail(&mut violations, format!("async {property}: {check}"));
                    }
                }
            }
        }
    }

    CellResult {
        key,
        c,
        prediction: Some(prediction),
        seeds,
        ell_observed_min: ell_min,
        lambda_observed_max: lambda_max,
        ell2_observed_min: ell2_min_seen,
        mu_slot_max,
        violations,
    }
}

/// Enumerate grid cells for the sweep. With `allow_boundary`, exact
/// boundary pairs (`n = 3t + 2d`) join the grid and are reported as
/// quorum-unreachable.
pub fn sweep_cells(n_list: &[u32], allow_boundary: bool) -> Vec<CellKey> {
    let mut cells = Vec::new();
    for &n in n_list {
        let mut pairs = presets::valid_pairs(n);
        if allow_boundary {
            for t in 0..n {
                for d in 0..n {
                    if 3 * t + 2 * d == n && t < n {
                        pairs.push((t, d));
                    }
                }
            }
        }
        for (t, d) in pairs {
            let strategies: Vec<Option<StrategyKind>> = if t == 0 {
                vec![None]
            } else {
                StrategyKind::ALL.iter().copied().map(Some).collect()
            };
            for strategy in strategies {
                for policy in PolicyKind::SWEEP {
                    cells.push(CellKey {
                        n,
                        t,
                        d,
                        strategy,
                        policy,
                    });
                }
            }
        }
    }
    cells.sort();
    cells
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub exit_code: i32,
    pub report: String,
    pub cells: Vec<CellResult>,
}

pub fn cmd_sweep(opts: &SweepOptions) -> SweepOutcome {
    let keys = sweep_cells(&opts.n_list, opts.allow_boundary);
    let mut cells: Vec<CellResult> = keys
        .par_iter()
        .map(|key| run_cell(*key, opts.seeds))
        .collect();
    cells.sort_by_key(|c| c.key);

    let headers = [
        "n", "t", "d", "c", "strategy", "policy", "seeds", "quorum", "ell", "ell_obs", "lambda",
        "lambda_obs", "ell2", "ell2_obs", "mu_bound", "mu_obs", "result",
    ];
    let fmt_u32 = |v: Option<u32>| v.map_or("-".to_string(), |x| x.to_string());
    let fmt_u64 = |v: Option<u64>| v.map_or("-".to_string(), |x| x.to_string());
    let mut data = Vec::new();
    let mut total_violations = 0usize;
    for cell in &cells {
        let key = cell.key;
        let row_tail = match &cell.prediction {
            None => vec![
                "-".into(),
                "-".into(),
                "-".into(),
                "-".into(),
                "-".into(),
                "-".into(),
                "-".into(),
                "-".into(),
                "-".into(),
                "quorum unreachable".into(),
            ],
            Some(p) => {
                total_violations += cell.violations.len();
                vec![
                    p.quorum.to_string(),
                    p.ell.to_string(),
                    fmt_u32(cell.ell_observed_min),
                    p.lambda_class.to_string(),
                    fmt_u64(cell.lambda_observed_max),
                    p.ell2_min.to_string(),
                    fmt_u32(cell.ell2_observed_min),
                    p.mu_max.to_string(),
                    cell.mu_slot_max.to_string(),
                    if cell.violations.is_empty() {
                        "ok".into()
                    } else {
                        format!("VIOLATIONS({})", cell.violations.len())
                    },
                ]
            }
        };
        let mut row = vec![
            key.n.to_string(),
            key.t.to_string(),
            key.d.to_string(),
            cell.c.to_string(),
            key.strategy.map_or("none", |s| s.name()).to_string(),
            key.policy.name().to_string(),
            cell.seeds.to_string(),
        ];
        row.extend(row_tail);
        data.push(row);
    }

    let mut report = opts.format.render(&headers, &data);
    for cell in &cells {
        for violation in &cell.violations {
            report.push_str(&format!(
                "violation: n={} t={} d={} strategy={} policy={}: {violation}\n",
                cell.key.n,
                cell.key.t,
                cell.key.d,
                cell.key.strategy.map_or("none", |s| s.name()),
                cell.key.policy.name(),
            ));
        }
    }
    report.push_str(&format!(
        "cells: {} runs-per-cell: {} violations: {total_violations}\n",
        cells.len(),
        opts.seeds * 2,
    ));

    let exit_code = if total_violations == 0 { EXIT_OK } else { EXIT_VIOLATION };
    if let Some(dir) = &opts.out {
        if let Err(e) = write_outputs(dir, &[("sweep.txt", report.clone())]) {
            return SweepOutcome {
                exit_code: EXIT_USAGE,
                report: format!("error: {e}\n"),
                cells,
            };
        }
    }
    SweepOutcome {
        exit_code,
        report,
        cells,
    }
}

#[derive(Clone, Debug, Default)]
pub struct BoundaryOptions {
    pub horizon: Option<u64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct BoundaryOutcome {
    pub exit_code: i32,
    pub report: String,
    pub checks: Vec<(String, bool)>,
    pub boundary_trace: Option<Trace>,
    pub control_trace: Option<Trace>,
}

/// Run the partition attack at `n = 3t + 2d` and the same attack with
/// one more correct process, then check both against the tightness
/// predictions: total starvation at the boundary, `>= c - d` deliveries
/// of a single message just above it.
pub fn cmd_boundary(t: u32, d: u32, opts: &BoundaryOptions) -> BoundaryOutcome {
    if t == 0 && d == 0 {
        return BoundaryOutcome {
            exit_code: EXIT_USAGE,
            report: "error: boundary demonstration needs t + d >= 1\n".to_string(),
            checks: Vec::new(),
            boundary_trace: None,
            control_trace: None,
        };
    }

    let payload_a = b"m".as_slice();
    let payload_b = b"m-prime".as_slice();
    let build = |control: bool| {
        let mut plan = build_partition_attack(t, d, payload_a, payload_b, control, opts.seed)
            .expect("t + d >= 1 checked above");
        if let Some(horizon) = opts.horizon {
            // Keep the release point inside the observation window.
            let tau = (horizon / 2).max(1);
            plan.scenario.horizon = horizon;
            for rule in &mut plan.scenario.delay_rules {
                rule.until_step = tau;
            }
            plan.partition.tau = tau;
        }
        plan
    };
    let boundary_plan = build(false);
    let control_plan = build(true);

    let boundary_trace = match run_lockstep(&boundary_plan.scenario) {
        Ok(trace) => trace,
        Err(e) => return BoundaryOutcome {
            exit_code: EXIT_USAGE,
            report: format!("error: boundary run failed: {e}\n"),
            checks: Vec::new(),
            boundary_trace: None,
            control_trace: None,
        },
    };
    let control_trace = match run_lockstep(&control_plan.scenario) {
        Ok(trace) => trace,
        Err(e) => return BoundaryOutcome {
            exit_code: EXIT_USAGE,
            report: format!("error: control run failed: {e}\n"),
            checks: Vec::new(),
            boundary_trace: Some(boundary_trace),
            control_trace: None,
        },
    };

    let attack_sender = |plan: &mbrb::adversary::PartitionAttackPlan| {
        plan.partition
            .q3
            .first()
            .copied()
            .unwrap_or(ProcessId(0))
    };
    let n_boundary = boundary_plan.scenario.config.n;
    let quorum = quorum_threshold(n_boundary, t);
    let reachable = n_boundary - t - d;
    let mut checks: Vec<(String, bool)> = Vec::new();

    // Boundary: total starvation of the attacked slot.
    let sender_b = attack_sender(&boundary_plan);
    let (delivered_b, _) = slot_deliverers(&boundary_trace, sender_b, 1, u64::MAX);
    checks.push((
        format!(
            "boundary n={n_boundary}: zero correct deliveries for the attacked slot (saw {})",
            delivered_b.len()
        ),
        delivered_b.is_empty(),
    ));

    let max_signers = boundary_trace
        .final_slots
        .iter()
        .filter(|s| s.sender == sender_b && s.sn == 1 && boundary_trace.is_correct(s.process))
        .map(|s| s.signers.len() as u32)
        .max()
        .unwrap_or(0);
    checks.push((
        format!(
            "boundary: signature ceiling {max_signers} <= n-t-d = {reachable} < quorum {quorum}"
        ),
        max_signers <= reachable && reachable < quorum,
    ));

    let boundary_safety = check_safety(&boundary_trace, &boundary_plan.scenario);
    checks.push((
        "boundary: safety intact".to_string(),
        boundary_safety.all_acceptable(),
    ));
    checks.push((
        "boundary: trace audit clean".to_string(),
        audit_trace(&boundary_trace, &boundary_plan.scenario).is_empty(),
    ));

    // Control: one extra correct process restores delivery.
    let sender_c = attack_sender(&control_plan);
    let cfg = control_plan.scenario.config;
    let ell = cfg.c - cfg.d;
    let (delivered_a, _) = slot_deliverers(&control_trace, sender_c, 1, u64::MAX);
    let payloads: BTreeSet<&[u8]> = control_trace
        .deliveries()
        .filter(|(_, _, sn, sender, _)| *sn == 1 && *sender == sender_c)
        .map(|(_, payload, _, _, _)| payload)
        .collect();
    checks.push((
        format!(
            "control n={}: at least ell = c-d = {ell} correct deliveries (saw {})",
            cfg.n,
            delivered_a.len()
        ),
        delivered_a.len() as u32 >= ell,
    ));
    checks.push((
        format!("control: a single agreed message (saw {} payloads)", payloads.len()),
        payloads.len() == 1,
    ));
    let control_safety = check_safety(&control_trace, &control_plan.scenario);
    checks.push((
        "control: safety intact".to_string(),
        control_safety.all_acceptable(),
    ));

    let mut report = format!(
        "boundary demonstration: t={t} d={d} (n = 3t+2d = {n_boundary}, control n = {})\n",
        cfg.n
    );
    report.push_str(&format!(
        "partition: |Q1|={} |Q2|={} |Q3|={} |D1|={} |D2|={} tau={}\n",
        boundary_plan.partition.q1.len(),
        boundary_plan.partition.q2.len(),
        boundary_plan.partition.q3.len(),
        boundary_plan.partition.d1.len(),
        boundary_plan.partition.d2.len(),
        boundary_plan.partition.tau,
    ));
    let mut all_ok = true;
    for (description, ok) in &checks {
        all_ok &= ok;
        report.push_str(&format!(
            "check: {description}: {}\n",
            if *ok { "ok" } else { "FAIL" }
        ));
    }
    report.push_str(&format!(
        "result: {}\n",
        if all_ok { "pass" } else { "FAIL" }
    ));

    if let Some(dir) = &opts.out {
        let files = [
            ("boundary_trace.jsonl", boundary_trace.to_jsonl()),
            ("control_trace.jsonl", control_trace.to_jsonl()),
            ("report.txt", report.clone()),
        ];
        if let Err(e) = write_outputs(dir, &files) {
            return BoundaryOutcome {
                exit_code: EXIT_USAGE,
                report: format!("error: {e}\n"),
                checks,
                boundary_trace: Some(boundary_trace),
                control_trace: Some(control_trace),
            };
        }
    }

    BoundaryOutcome {
        exit_code: if all_ok { EXIT_OK } else { EXIT_VIOLATION },
        report,
        checks,
        boundary_trace: Some(boundary_trace),
        control_trace: Some(control_trace),
    }
}
