//! Extended-real objective values.
//!
//! `F(x) = +∞` outside the constraint set is a legitimate state (the very
//! first iterate may have it), so it gets a dedicated variant instead of
//! being conflated with `f64::INFINITY` produced by an overflowing
//! computation. `Finite(v)` with a non-finite `v` therefore always means
//! overflow, never structural infinity.

/// A real number extended with a structural `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    /// An actual computed value. May be non-finite only through overflow.
    Finite(f64),
    /// Structural infinity: the point is infeasible.
    Infinite,
}

impl ExtReal {
    /// The finite payload, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    /// True iff this is a finite, non-overflowed value.
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(v) if v.is_finite())
    }

    /// True iff this is a `Finite` payload that overflowed (NaN or ±inf),
    /// as opposed to the structural [`ExtReal::Infinite`].
    pub fn is_overflow(self) -> bool {
        matches!(self, ExtReal::Finite(v) if !v.is_finite())
    }

    /// Collapse to `f64`, mapping structural infinity to `f64::INFINITY`.
    pub fn value_or_inf(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::Infinite => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for ExtReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinite => write!(f, "inf"),
        }
    }
}
