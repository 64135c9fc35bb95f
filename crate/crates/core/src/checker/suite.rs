//! Catalog properties checked against a model.

use rayon::prelude::*;

use super::ctl::{check_ctl, CheckError};
use super::model::Model;
use super::Verdict;
use crate::tlogic::{instantiate, GroundProperty, Logic, PropertyEntry};

#[derive(Debug, Clone)]
pub struct ModelReport {
    pub property: GroundProperty,
    /// The formula was linear-time and is checked as its universal CTL
    /// counterpart.
    pub lifted: bool,
    pub verdict: Verdict,
}

/// Grounds every entry over the model's DAG and checks each instance, in
/// parallel. Results keep entry order, then binding order.
pub fn check_model(
    model: &Model,
    entries: &[&'static PropertyEntry],
    fair: bool,
) -> Result<Vec<ModelReport>, CheckError> {
    let bindings = model.config.bindings();
    let ground: Vec<GroundProperty> = entries
        .iter()
        .flat_map(|e| instantiate(e, &bindings))
        .collect();
    ground
        .into_par_iter()
        .map(|property| {
            let (formula, lifted) = match property.formula.logic() {
                Some(Logic::Ltl) => match property.formula.ctl_lifting() {
                    Some(f) => (f, true),
                    None => return Err(CheckError::NotCtl(property.formula.render())),
                },
                _ => (property.formula.clone(), false),
            };
            let verdict = check_ctl(&model.kripke, &formula, fair)?;
            Ok(ModelReport {
                property,
                lifted,
                verdict,
            })
        })
        .collect()
}
