//! Deterministic discrete-event environment hosting scripted external
//! entities.
//!
//! Messages sit in a queue ordered by `(due_tick, seq)`. Each entity reacts
//! with the first rule whose match label fits the message. Delegation and
//! proxy rules forward the same handle to another entity, which is how
//! delegation cycles and proxy chains arise.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lifecycle::{EeId, SubTaskId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum Action {
    Succeed {
        #[serde(default)]
        payload: String,
    },
    Fail {
        #[serde(default)]
        code: String,
    },
    Silent,
    DelegateTo {
        target: EeId,
    },
    ProxyInvoke {
        tool: EeId,
    },
}

/// `match` labels: `*`, `node:<id>`, `attempt:<n>`, `from:<ee>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionRule {
    #[serde(rename = "match")]
    pub matches: String,
    #[serde(default)]
    pub delay: u64,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EeBehavior {
    pub ee_id: EeId,
    pub rules: Vec<ReactionRule>,
    /// Extra delay drawn uniformly from `0..=jitter` per reaction.
    #[serde(default)]
    pub jitter: u64,
}

impl EeBehavior {
    /// A behavior that always succeeds after `delay` ticks.
    pub fn succeed_after(ee_id: &str, delay: u64) -> Self {
        EeBehavior {
            ee_id: ee_id.into(),
            rules: vec![ReactionRule {
                matches: "*".into(),
                delay,
                action: Action::Succeed {
                    payload: format!("{ee_id}-ok"),
                },
            }],
            jitter: 0,
        }
    }

    /// Has a catch-all rule, so every message gets a reaction.
    pub fn is_total(&self) -> bool {
        self.rules.iter().any(|r| r.matches == "*")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub handle: u64,
    pub target: EeId,
    pub node: SubTaskId,
    /// 1-based dispatch attempt of the node.
    pub attempt: u32,
    /// Entity that forwarded the message, if any.
    pub from: Option<EeId>,
}

impl Message {
    fn matches(&self, label: &str) -> bool {
        match label.split_once(':') {
            None => label == "*",
            Some(("node", n)) => self.node == n,
            Some(("attempt", n)) => n.parse::<u32>().is_ok_and(|n| n == self.attempt),
            Some(("from", e)) => self.from.as_deref() == Some(e),
            Some(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimEvent {
    Result {
        handle: u64,
        node: SubTaskId,
        ee: EeId,
        ok: bool,
        payload: String,
    },
    Delegated {
        handle: u64,
        from: EeId,
        to: EeId,
    },
    Proxied {
        handle: u64,
        node: SubTaskId,
        via: EeId,
        tool: EeId,
    },
}

impl SimEvent {
    pub fn handle(&self) -> u64 {
        match self {
            SimEvent::Result { handle, .. }
            | SimEvent::Delegated { handle, .. }
            | SimEvent::Proxied { handle, .. } => *handle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("no behavior for entity `{0}`")]
    UnknownEntity(EeId),
    #[error("tick budget must be positive")]
    ZeroBudget,
}

#[derive(Debug, Clone)]
struct Queued {
    msg: Message,
    action: Action,
}

#[derive(Debug, Clone)]
pub struct SimEnv {
    clock: u64,
    seq: u64,
    queue: BTreeMap<(u64, u64), Queued>,
    behaviors: BTreeMap<EeId, EeBehavior>,
    outstanding: BTreeSet<u64>,
    rng: ChaCha8Rng,
}

/// What `run_until` observed: events with their tick, and the handles still
/// unresolved at the cutoff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub events: Vec<(u64, SimEvent)>,
    pub pending: Vec<u64>,
}

impl SimEnv {
    pub fn new(behaviors: impl IntoIterator<Item = EeBehavior>, seed: u64) -> Self {
        SimEnv {
            clock: 0,
            seq: 0,
            queue: BTreeMap::new(),
            behaviors: behaviors
                .into_iter()
                .map(|b| (b.ee_id.clone(), b))
                .collect(),
            outstanding: BTreeSet::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn has_behavior(&self, ee: &str) -> bool {
        self.behaviors.contains_key(ee)
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Handles submitted but not yet resolved by a result.
    pub fn outstanding(&self) -> impl Iterator<Item = u64> + '_ {
        self.outstanding.iter().copied()
    }

    /// Stops tracking a handle; a later result for it is still delivered.
    pub fn forget(&mut self, handle: u64) {
        self.outstanding.remove(&handle);
    }

    /// Routes `msg` to its target's first matching rule. Returns the tick the
    /// reaction is due, or `None` for a silent rule.
    pub fn submit(&mut self, msg: Message) -> Result<Option<u64>, SimError> {
        let behavior = self
            .behaviors
            .get(&msg.target)
            .ok_or_else(|| SimError::UnknownEntity(msg.target.clone()))?;
        self.outstanding.insert(msg.handle);
        let Some(rule) = behavior.rules.iter().find(|r| msg.matches(&r.matches)) else {
            return Ok(None);
        };
        if rule.action == Action::Silent {
            return Ok(None);
        }
        let jitter = if behavior.jitter > 0 {
            self.rng.gen_range(0..=behavior.jitter)
        } else {
            0
        };
        let due = self.clock + rule.delay + jitter;
        let action = rule.action.clone();
        self.queue.insert((due, self.seq), Queued { msg, action });
        self.seq += 1;
        Ok(Some(due))
    }

    /// Advances the clock by one and fires every message due by then, in
    /// `(due, seq)` order. Messages enqueued while firing wait for a later
    /// tick.
    pub fn tick(&mut self) -> Vec<SimEvent> {
        self.clock += 1;
        let due: Vec<(u64, u64)> = self
            .queue
            .range(..(self.clock + 1, 0))
            .map(|(k, _)| *k)
            .collect();
        let mut out = Vec::new();
        for key in due {
            let Queued { msg, action } = self.queue.remove(&key).expect("key collected above");
            match action {
                Action::Succeed { payload } => {
                    self.outstanding.remove(&msg.handle);
                    out.push(SimEvent::Result {
                        handle: msg.handle,
                        node: msg.node,
                        ee: msg.target,
                        ok: true,
                        payload,
                    });
                }
                Action::Fail { code } => {
                    self.outstanding.remove(&msg.handle);
                    out.push(SimEvent::Result {
                        handle: msg.handle,
                        node: msg.node,
                        ee: msg.target,
                        ok: false,
                        payload: code,
                    });
                }
                Action::Silent => {}
                Action::DelegateTo { target } => {
                    out.push(SimEvent::Delegated {
                        handle: msg.handle,
                        from: msg.target.clone(),
                        to: target.clone(),
                    });
                    self.forward(msg, target);
                }
                Action::ProxyInvoke { tool } => {
                    out.push(SimEvent::Proxied {
                        handle: msg.handle,
                        node: msg.node.clone(),
                        via: msg.target.clone(),
                        tool: tool.clone(),
                    });
                    self.forward(msg, tool);
                }
            }
        }
        out
    }

    fn forward(&mut self, msg: Message, to: EeId) {
        let next = Message {
            target: to,
            from: Some(msg.target.clone()),
            ..msg
        };
        if self.submit(next).is_err() {
            // Forwarding to an entity without a script: the call is lost and
            // the handle stays outstanding.
            self.outstanding.insert(msg.handle);
        }
    }

    /// Ticks until the queue drains or `budget` ticks have elapsed.
    pub fn run_until(&mut self, budget: u64) -> Result<RunReport, SimError> {
        if budget == 0 {
            return Err(SimError::ZeroBudget);
        }
        let mut events = Vec::new();
        for _ in 0..budget {
            if self.queue.is_empty() {
                break;
            }
            let now = self.clock + 1;
            events.extend(self.tick().into_iter().map(|e| (now, e)));
        }
        Ok(RunReport {
            events,
            pending: self.outstanding.iter().copied().collect(),
        })
    }
}
