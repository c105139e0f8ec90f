pub mod cascade;
pub mod channel;
pub mod controller;
pub mod error;
pub mod experiment;
pub mod harness;
pub mod matcher;
pub mod media;
pub mod scenario;
pub mod surface;
