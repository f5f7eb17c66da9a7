//! Command-line front end for `etpl-core`: config parsing, the `evolve`,
//! `wigner`, `sweep` and `steady` commands, and their CSV outputs.

pub mod commands;
pub mod config;
pub mod output;
