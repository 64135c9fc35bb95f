//! Registry of external entities with an audit trail.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::comm::{validate_ee, ValidationPolicy};
use super::CapabilityProfile;
use crate::lifecycle::{EeId, SubTaskRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("entity `{0}` already registered")]
    Duplicate(EeId),
    #[error("bad API metadata: {0}")]
    BadMetadata(String),
    #[error("entity `{0}` not registered")]
    NotFound(EeId),
    #[error("entity `{0}` is assigned to active sub-task `{1}`")]
    InUse(EeId, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditEntry {
    pub tick: u64,
    pub action: String,
}

/// The result of a discovery call. Only [`Registry::discover`] creates one,
/// so holding a `Discovery` proves discovery happened; DAG construction
/// requires it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discovery {
    query: BTreeSet<String>,
    profiles: Vec<CapabilityProfile>,
}

impl Discovery {
    pub fn query(&self) -> &BTreeSet<String> {
        &self.query
    }

    pub fn profiles(&self) -> &[CapabilityProfile] {
        &self.profiles
    }

    /// Keeps only profiles passing validation under `policy`.
    pub fn validated(&self, policy: &ValidationPolicy) -> Discovery {
        Discovery {
            query: self.query.clone(),
            profiles: self
                .profiles
                .iter()
                .filter(|p| validate_ee(p, policy))
                .cloned()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    profiles: BTreeMap<EeId, CapabilityProfile>,
    /// Protocol labels accepted in API metadata; empty accepts any.
    protocols: BTreeSet<String>,
    audit: Vec<AuditEntry>,
    clock: u64,
}

impl Registry {
    pub fn new(protocols: impl IntoIterator<Item = String>) -> Self {
        Registry {
            protocols: protocols.into_iter().collect(),
            ..Default::default()
        }
    }

    /// Sets the tick stamped on subsequent audit entries.
    pub fn set_clock(&mut self, tick: u64) {
        self.clock = tick;
    }

    fn log(&mut self, action: String) {
        self.audit.push(AuditEntry {
            tick: self.clock,
            action,
        });
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn get(&self, ee_id: &str) -> Option<&CapabilityProfile> {
        self.profiles.get(ee_id)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn register(&mut self, profile: CapabilityProfile) -> Result<(), RegistryError> {
        if self.profiles.contains_key(&profile.ee_id) {
            return Err(RegistryError::Duplicate(profile.ee_id));
        }
        let meta = &profile.api_metadata;
        if !self.protocols.is_empty() && !self.protocols.contains(&meta.protocol) {
            return Err(RegistryError::BadMetadata(format!(
                "unknown protocol `{}`",
                meta.protocol
            )));
        }
        if meta.endpoint.is_empty() || meta.schema.is_empty() {
            return Err(RegistryError::BadMetadata(
                "endpoint and schema labels are required".into(),
            ));
        }
        self.log(format!("register {}", profile.ee_id));
        if profile.validated {
            self.log(format!("validated {}", profile.ee_id));
        }
        self.profiles.insert(profile.ee_id.clone(), profile);
        Ok(())
    }

    /// Profiles whose skills include all of `query`, by descending
    /// reliability then ascending id.
    pub fn discover(&mut self, query: &BTreeSet<String>) -> Discovery {
        let mut found: Vec<CapabilityProfile> = self
            .profiles
            .values()
            .filter(|p| query.is_subset(&p.skills))
            .cloned()
            .collect();
        found.sort_by(|a, b| {
            b.reliability
                .cmp(&a.reliability)
                .then_with(|| a.ee_id.cmp(&b.ee_id))
        });
        let q: Vec<&str> = query.iter().map(String::as_str).collect();
        self.log(format!("discover [{}] -> {}", q.join(","), found.len()));
        Discovery {
            query: query.clone(),
            profiles: found,
        }
    }

    /// Removes an entity unless some non-terminal sub-task is assigned to it.
    pub fn deregister<'a>(
        &mut self,
        ee_id: &str,
        active: impl IntoIterator<Item = &'a SubTaskRecord>,
    ) -> Result<CapabilityProfile, RegistryError> {
        if !self.profiles.contains_key(ee_id) {
            return Err(RegistryError::NotFound(ee_id.to_string()));
        }
        if let Some(r) = active
            .into_iter()
            .find(|r| !r.state.is_terminal() && r.assigned_ee.as_deref() == Some(ee_id))
        {
            return Err(RegistryError::InUse(ee_id.to_string(), r.id.clone()));
        }
        self.log(format!("deregister {ee_id}"));
        Ok(self.profiles.remove(ee_id).expect("checked above"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifecycle::{SubTaskConfig, SubTaskState};
    use crate::orchestration::{ApiMetadata, EeKind};

    fn profile(id: &str, skills: &[&str], reliability: u8) -> CapabilityProfile {
        CapabilityProfile {
            ee_id: id.into(),
            kind: EeKind::Tool,
            skills: skills.iter().map(|s| s.to_string()).collect(),
            api_metadata: ApiMetadata {
                protocol: "mcp".into(),
                endpoint: "e".into(),
                schema: "s".into(),
            },
            validated: true,
            reliability,
        }
    }

    fn q(skills: &[&str]) -> BTreeSet<String> {
        skills.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn register_and_duplicates() {
        let mut r = Registry::new(["mcp".to_string(), "a2a".to_string()]);
        assert_eq!(r.register(profile("dataEE", &["fetch"], 80)), Ok(()));
        assert_eq!(
            r.register(profile("dataEE", &["fetch"], 80)),
            Err(RegistryError::Duplicate("dataEE".into()))
        );
        let mut bad = profile("x", &[], 10);
        bad.api_metadata.protocol = "smtp".into();
        assert!(matches!(
            r.register(bad),
            Err(RegistryError::BadMetadata(_))
        ));
        assert!(r.audit().iter().any(|a| a.action == "validated dataEE"));
    }

    #[test]
    fn discover_filters_and_orders() {
        let mut r = Registry::new([]);
        assert!(r.discover(&q(&["x"])).profiles().is_empty());
        r.register(profile("dataEE", &["fetch"], 80)).unwrap();
        r.register(profile("txEE", &["trade"], 70)).unwrap();
        r.register(profile("bEE", &["trade"], 70)).unwrap();
        r.register(profile("topEE", &["trade", "fetch"], 95))
            .unwrap();
        let ids = |d: Discovery| {
            d.profiles()
                .iter()
                .map(|p| p.ee_id.clone())
                .collect::<Vec<_>>()
        };
        assert_eq!(ids(r.discover(&q(&["trade"]))), ["topEE", "bEE", "txEE"]);
        assert_eq!(r.discover(&q(&[])).profiles().len(), 4);
    }

    #[test]
    fn deregister_protects_active_work() {
        let mut r = Registry::new([]);
        r.register(profile("a", &[], 50)).unwrap();
        r.register(profile("b", &[], 50)).unwrap();
        let mut rec = SubTaskRecord::new(
            "t1",
            BTreeSet::new(),
            SubTaskConfig {
                assigned_ee: Some("a".into()),
                needs_external: true,
                ..Default::default()
            },
        );
        rec.state = SubTaskState::InProgress;
        assert_eq!(
            r.deregister("a", [&rec]),
            Err(RegistryError::InUse("a".into(), "t1".into()))
        );
        assert!(r.deregister("b", [&rec]).is_ok());
        assert_eq!(
            r.deregister("zz", [&rec]),
            Err(RegistryError::NotFound("zz".into()))
        );
        rec.state = SubTaskState::Completed;
        assert!(r.deregister("a", [&rec]).is_ok());
    }
}
