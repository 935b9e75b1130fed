use std::fmt;

/// A real number extended with the two infinities.
///
/// Generalized inverses return `PosInf` for an empty level set and `NegInf`
/// for a level set with no lower bound; neither case is ever encoded as a
/// floating-point NaN or infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Applies a nondecreasing function, sending the infinities to the
    /// supplied limits.
    pub fn map_monotone<F: Fn(f64) -> f64>(self, f: F, at_neg_inf: f64, at_pos_inf: f64) -> f64 {
        match self {
            ExtReal::NegInf => at_neg_inf,
            ExtReal::Finite(x) => f(x),
            ExtReal::PosInf => at_pos_inf,
        }
    }

    pub fn scale(self, k: f64) -> ExtReal {
        debug_assert!(k > 0.0);
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(k * x),
            other => other,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => f.write_str("inf"),
        }
    }
}
