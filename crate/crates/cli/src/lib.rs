//! Command-line front end for the linear cellular automaton toolkit:
//! configuration loading, text formats, tabular output, the subcommands and
//! the acceptance suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod output;
pub mod selftest;
