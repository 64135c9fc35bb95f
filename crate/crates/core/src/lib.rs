//! Deterministic agent orchestration kernel with temporal-logic
//! verification.
//!
//! The kernel runs a host agent over a sub-task DAG against scripted
//! external entities ([`orchestration`], [`lifecycle`], [`simnet`]). The
//! [`checker`] verifies the [`tlogic`] property catalog two ways: CTL model
//! checking over a Kripke structure of the models, and LTL monitoring of
//! execution traces.

pub mod checker;
pub mod cli;
pub mod lifecycle;
pub mod orchestration;
pub mod scenarios;
pub mod simnet;
pub mod tlogic;
pub mod trace;
