//! The `akv` command line.
//!
//! Exit codes: 0 when everything passes, 1 on a property or response
//! failure, 2 on usage or configuration errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::checker::model::{build_kripke_capped, state_cap_from_env};
use crate::checker::suite::check_model;
use crate::checker::{
    explain_model, explain_runtime, ModelConfig, ModelError, Outcome, TraceMonitor,
};
use crate::orchestration::{run_task_observed, ResponseStatus};
use crate::scenarios::{builtin, builtin_names, load_scenario, mutate, Mutation, Scenario};
use crate::tlogic::{catalog, lookup, select, PropertyEntry};
use crate::trace::{from_jsonl, to_jsonl};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "akv",
    version,
    about = "Run orchestration scenarios and verify them against the property catalog"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its trace.
    Run {
        /// Builtin scenario name or path to a scenario JSON file.
        scenario: String,
        /// Trace output path [default: <scenario>.trace.jsonl].
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Switch off one kernel guard.
        #[arg(long)]
        mutate: Option<String>,
    },
    /// Model-check catalog properties.
    Check {
        /// Model preset (single, chain2), builtin scenario, or scenario file.
        target: String,
        /// `all`, names such as `HP9,TL5'`, or ranges such as `TL1..TL14`.
        #[arg(long, default_value = "all")]
        props: String,
        #[arg(long, value_enum, default_value = "on")]
        fair: Switch,
        /// State cap [default: AKV_STATE_CAP or 1000000].
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        mutate: Option<String>,
        /// Write counterexample paths here as JSON lines.
        #[arg(long)]
        cex: Option<PathBuf>,
    },
    /// Monitor catalog properties over a trace file.
    Monitor {
        trace: PathBuf,
        #[arg(long, default_value = "all")]
        props: String,
    },
    /// List catalog entries.
    List,
    /// Print one catalog entry.
    Explain { name: String },
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Run {
            scenario,
            trace,
            seed,
            mutate,
        } => cmd_run(&scenario, trace, seed, mutate.as_deref(), out),
        Command::Check {
            target,
            props,
            fair,
            cap,
            mutate,
            cex,
        } => {
            let fair = matches!(fair, Switch::On);
            let cap = cap.unwrap_or_else(state_cap_from_env);
            cmd_check(
                &target,
                &props,
                fair,
                cap,
                mutate.as_deref(),
                cex.as_deref(),
                out,
            )
        }
        Command::Monitor { trace, props } => cmd_monitor(&trace, &props, out),
        Command::List => cmd_list(out),
        Command::Explain { name } => cmd_explain(&name, out),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "akv: {message}");
            EXIT_USAGE
        }
    }
}

type CmdResult = Result<i32, String>;

fn io(e: std::io::Error) -> String {
    e.to_string()
}

fn resolve_scenario(name: &str, mutation: Option<&str>) -> Result<Scenario, String> {
    let scenario = if builtin_names().contains(&name) {
        builtin(name).map_err(|e| e.to_string())?
    } else {
        let text = std::fs::read_to_string(name).map_err(|e| format!("{name}: {e}"))?;
        load_scenario(&text).map_err(|e| format!("{name}: {e}"))?
    };
    match mutation {
        None => Ok(scenario),
        Some(m) => {
            let m = Mutation::from_name(m).ok_or_else(|| format!("unknown mutation `{m}`"))?;
            mutate(&scenario, m).map_err(|e| e.to_string())
        }
    }
}

fn cmd_run(
    name: &str,
    trace: Option<PathBuf>,
    seed: Option<u64>,
    mutation: Option<&str>,
    out: &mut dyn Write,
) -> CmdResult {
    let mut scenario = resolve_scenario(name, mutation)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let path = trace.unwrap_or_else(|| PathBuf::from(format!("{}.trace.jsonl", scenario.name)));
    let outcome = run_task_observed(&scenario.request, &scenario, &mut |_| {});
    std::fs::write(&path, to_jsonl(&outcome.trace))
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let r = &outcome.response;
    writeln!(out, "scenario {} seed {}", scenario.name, scenario.seed).map_err(io)?;
    writeln!(out, "status   {}", r.status).map_err(io)?;
    writeln!(out, "payload  {}", r.payload).map_err(io)?;
    for (node, result) in &r.per_subtask {
        writeln!(out, "  {node}: {result}").map_err(io)?;
    }
    writeln!(
        out,
        "trace    {} records -> {}",
        outcome.trace.len(),
        path.display()
    )
    .map_err(io)?;
    Ok(if r.status == ResponseStatus::Success {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}

fn model_config(target: &str, mutation: Option<&str>) -> Result<ModelConfig, String> {
    if ModelConfig::PRESETS.contains(&target) {
        let mut config = ModelConfig::preset(target).map_err(|e| e.to_string())?;
        if let Some(m) = mutation {
            let m = Mutation::from_name(m).ok_or_else(|| format!("unknown mutation `{m}`"))?;
            let flag = match m {
                Mutation::DisableVmGate => &mut config.enforcement.vm_gate,
                Mutation::DisableDagMembershipGate => &mut config.enforcement.dag_membership_gate,
                Mutation::DisableDependencyGate => &mut config.enforcement.dependency_gate,
                Mutation::SkipReadyGate => &mut config.fsm.skip_ready_gate,
                Mutation::ForgetPreviousState => &mut config.fsm.forget_previous_state,
            };
            *flag = !*flag;
            config.name = format!("{}+{m}", config.name);
        }
        return Ok(config);
    }
    let scenario = resolve_scenario(target, mutation)?;
    ModelConfig::from_scenario(&scenario).map_err(|e| e.to_string())
}

/// Notes for variants standing in for verbatim entries the selection skipped.
fn variant_notes(entries: &[&'static PropertyEntry]) -> Vec<String> {
    entries
        .iter()
        .filter_map(|e| {
            let original = e.variant_of?;
            (!entries.iter().any(|x| x.name == original))
                .then(|| format!("note: {} checked in place of verbatim {original}; name {original} explicitly to check it", e.name))
        })
        .collect()
}

fn cmd_check(
    target: &str,
    props: &str,
    fair: bool,
    cap: usize,
    mutation: Option<&str>,
    cex: Option<&Path>,
    out: &mut dyn Write,
) -> CmdResult {
    let entries = select(props).map_err(|e| e.to_string())?;
    let config = model_config(target, mutation)?;
    let model = match build_kripke_capped(&config, cap) {
        Ok(m) => m,
        Err(e @ ModelError::StateCapExceeded { .. }) => {
            return Err(format!("{}: {e}", config.name))
        }
        Err(e) => return Err(e.to_string()),
    };
    writeln!(
        out,
        "model {}: {} states, {} transitions, fair={}",
        config.name,
        model.kripke.len(),
        model.kripke.transition_count(),
        if fair { "on" } else { "off" }
    )
    .map_err(io)?;
    for note in variant_notes(&entries) {
        writeln!(out, "{note}").map_err(io)?;
    }
    let reports = check_model(&model, &entries, fair).map_err(|e| e.to_string())?;
    let mut failed = 0;
    let mut records = String::new();
    for r in &reports {
        let lifted = if r.lifted { " (as A-formula)" } else { "" };
        writeln!(out, "{:<24} {}{lifted}", r.property.name, r.verdict.outcome).map_err(io)?;
        if r.verdict.outcome == Outcome::Fails {
            failed += 1;
            if let Ok(ex) = explain_model(&model, &r.property.name, &r.verdict) {
                for line in ex.to_string().lines().skip(1) {
                    writeln!(out, "  {line}").map_err(io)?;
                }
                for line in ex.to_jsonl().lines() {
                    records += &format!(
                        "{{\"property\":{},\"record\":{line}}}\n",
                        serde_json::Value::from(r.property.name.as_str())
                    );
                }
            }
        }
    }
    if let Some(path) = cex {
        std::fs::write(path, records).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    writeln!(out, "{} of {} hold", reports.len() - failed, reports.len()).map_err(io)?;
    Ok(if failed == 0 { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_monitor(path: &Path, props: &str, out: &mut dyn Write) -> CmdResult {
    let entries = select(props).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let trace = from_jsonl(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut monitor = TraceMonitor::new(&entries);
    for e in &trace {
        monitor.observe(e);
    }
    let reports = monitor.finish();
    let mut violated = 0;
    for r in &reports {
        let mut line = format!("{:<24} {}", r.name, r.outcome);
        if let Some(reason) = &r.skipped {
            line += &format!(" (not monitored: {reason})");
        }
        if let Some(at) = r.decided_at {
            line += &format!(" at step {at}");
        }
        if r.finalized {
            line += " (finalized)";
        }
        if r.witness {
            line += " (witness)";
        }
        if let Some(via) = r.via {
            line += &format!(" (via {via})");
        }
        writeln!(out, "{line}").map_err(io)?;
        if r.outcome == Outcome::Violated {
            violated += 1;
            if let Ok(text) = explain_runtime(r, &trace) {
                for l in text.lines().skip(1) {
                    writeln!(out, "  {l}").map_err(io)?;
                }
            }
        }
    }
    writeln!(
        out,
        "{} records, {} properties, {violated} violated",
        trace.len(),
        reports.len()
    )
    .map_err(io)?;
    Ok(if violated == 0 { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_list(out: &mut dyn Write) -> CmdResult {
    for e in catalog() {
        let tag = match e.variant_of {
            Some(v) => format!("variant of {v}"),
            None => String::new(),
        };
        writeln!(
            out,
            "{:<6} {:<12} {:<12} {tag}",
            e.name,
            e.category.to_string(),
            format!("{:?}", e.origin)
        )
        .map(|_| ())
        .map_err(io)?;
    }
    Ok(EXIT_PASS)
}

fn cmd_explain(name: &str, out: &mut dyn Write) -> CmdResult {
    let e = lookup(name).map_err(|e| e.to_string())?;
    writeln!(
        out,
        "{}  ({}, {:?} property, bound {:?})",
        e.name, e.category, e.origin, e.binding
    )
    .map_err(io)?;
    writeln!(out, "  formula   {}", e.typeset).map_err(io)?;
    writeln!(out, "  template  {}", e.template).map_err(io)?;
    writeln!(out, "  {}", e.summary).map_err(io)?;
    if !e.notes.is_empty() {
        writeln!(out, "  notes: {}", e.notes).map_err(io)?;
    }
    if let Some(v) = e.variant_of {
        writeln!(out, "  variant of {v}").map_err(io)?;
    }
    if let Some(v) = e.replaced_by {
        writeln!(out, "  ranges and runtime suites use {v}").map_err(io)?;
    }
    for (config, outcome) in e.expected {
        writeln!(out, "  expected on {config}: {outcome}").map_err(io)?;
    }
    Ok(EXIT_PASS)
}
