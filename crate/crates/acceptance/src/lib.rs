//! Oracles and fixtures for the acceptance suite. Nothing here calls into
//! the code under test except where a fixture has to be built with it.

pub mod durability;
pub mod oracle;
