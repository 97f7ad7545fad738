pub mod error;
pub mod hamiltonians;
pub mod hilbert;
pub mod states;
pub mod observables;
pub mod dynamics;
pub mod engines;
pub mod scenarios;
pub mod analytic;
pub mod validate;
pub mod compare;
pub mod cli;
