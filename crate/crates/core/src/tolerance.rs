//! Numeric tolerances shared by every module.

/// Slack for geometric predicates: touching, containment, hypograph membership.
pub const PREDICATE_TOL: f64 = 1e-12;

/// Slack for postcondition checks on computed results.
pub const ASSERT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub predicate: f64,
    pub assertion: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            predicate: PREDICATE_TOL,
            assertion: ASSERT_TOL,
        }
    }
}

impl Tolerance {
    pub fn with_predicate(predicate: f64) -> Self {
        Self {
            predicate,
            ..Self::default()
        }
    }
}
