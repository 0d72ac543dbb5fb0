//! Command-line front end and session service for the grid exploration
//! engine.

pub mod commands;
pub mod service;
