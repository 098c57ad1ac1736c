//! Manifest-driven pipeline driver for softsynth.
//!
//! Four commands cover the full flow: `gen-data` writes dataset families,
//! `train` runs a config grid from a TOML manifest (resumably, optionally in
//! parallel), `extract` hardens a trained dump into a verified netlist, and
//! `report` aggregates result rows into summary tables. The binary in
//! main.rs is a thin clap layer over this crate.

pub mod commands;
pub mod manifest;
