//! A deterministic simulation of running a startup for one year, built for
//! evaluating long-horizon decision-making agents.
//!
//! The world ([`WorldState`]) is generated from a seed ([`worldgen`]), advanced by
//! the transition function ([`engine`]), and observed and driven through the
//! agent command language ([`command`]). [`session`] persists worlds between CLI
//! calls, [`harness`] runs whole episodes against agents, and [`analytics`] turns
//! run logs into statistics tables.

pub mod analytics;
pub mod clock;
pub mod command;
pub mod config;
pub mod domain;
pub mod engine;
pub mod error;
pub mod harness;
pub mod money;
pub mod rng;
pub mod scratchpad;
pub mod session;
pub mod state;
pub mod worldgen;

pub use config::BenchConfig;
pub use command::{execute, parse, render_status, Command, CommandResult};
pub use domain::{Domain, TaskStatus, Tier};
pub use error::{EngineError, ParseError};
pub use money::Money;
pub use state::{validate, Outcome, WorldState};
