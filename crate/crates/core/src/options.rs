//! Run configuration: every policy knob the index pipeline exposes.

use std::collections::BTreeMap;

use crate::linalg::{Divisor, JacobiOptions};
use crate::ranking::TiePolicy;

/// What to do with an indicator whose sample minimum equals its maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstantPolicy {
    #[default]
    Error,
    Drop,
    /// Every entry becomes 5.5, the centre of the 1..10 scale.
    Midpoint,
}

/// How pillar sub-indices are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PillarMode {
    /// Restrict the global weighted sum to the pillar's indicators.
    #[default]
    Global,
    /// Run the whole pipeline on each pillar's indicators alone.
    Local,
}

/// Where the "worst" and "best" values of each indicator come from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum NormalizationBounds {
    #[default]
    Sample,
    /// `(min, max)` per indicator code.
    Explicit(BTreeMap<String, (f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    pub divisor: Divisor,
    pub constant_policy: ConstantPolicy,
    pub pillar_mode: PillarMode,
    pub bounds: NormalizationBounds,
    pub tie_policy: TiePolicy,
    pub jacobi: JacobiOptions,
}
