//! Command-line front end and HTTP session server for `inkgram`.

pub mod commands;
pub mod server;
