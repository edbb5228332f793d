//! Exact rational time values and firing intervals.
//!
//! All timing in the library uses exact rational arithmetic; zone
//! canonicalization relies on exact comparisons, so floating point is not
//! used anywhere on the timed path. The unit is abstract (configuration
//! files bind it to milliseconds).

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use std::fmt;

/// Exact rational time value. i128 keeps unit conversions and long
/// zone-closure sums far away from overflow.
pub type Rat = Ratio<i128>;

/// Convenience constructor for rational time values.
pub fn rat(num: i128, den: i128) -> Rat {
    Ratio::new(num, den)
}

/// An upper time bound that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeBound {
    Finite(Rat),
    Infinite,
}

impl TimeBound {
    pub fn is_finite(&self) -> bool {
        matches!(self, TimeBound::Finite(_))
    }

    pub fn finite(&self) -> Option<Rat> {
        match self {
            TimeBound::Finite(r) => Some(*r),
            TimeBound::Infinite => None,
        }
    }
}

impl fmt::Display for TimeBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeBound::Finite(r) => write!(f, "{}", format_rat(*r)),
            TimeBound::Infinite => write!(f, "inf"),
        }
    }
}

/// Static firing interval of a transition, relative to its enabling instant.
///
/// Both endpoints may independently be open or closed; an infinite upper
/// bound is always open. The immediate interval is exactly `[0,0]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimeInterval {
    pub lower: Rat,
    pub upper: TimeBound,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl TimeInterval {
    /// The immediate interval `[0,0]`.
    pub fn immediate() -> Self {
        TimeInterval {
            lower: Rat::zero(),
            upper: TimeBound::Finite(Rat::zero()),
            lower_closed: true,
            upper_closed: true,
        }
    }

    /// Closed interval `[lo, hi]`.
    pub fn closed(lo: Rat, hi: Rat) -> Self {
        TimeInterval {
            lower: lo,
            upper: TimeBound::Finite(hi),
            lower_closed: true,
            upper_closed: true,
        }
    }

    /// Exact-delay interval `[d, d]`.
    pub fn exact(d: Rat) -> Self {
        Self::closed(d, d)
    }

    /// Left-closed unbounded interval `[lo, inf)`.
    pub fn at_least(lo: Rat) -> Self {
        TimeInterval {
            lower: lo,
            upper: TimeBound::Infinite,
            lower_closed: true,
            upper_closed: false,
        }
    }

    pub fn is_immediate(&self) -> bool {
        *self == Self::immediate()
    }

    /// Checks the interval invariants: nonnegative bounds, lower <= upper,
    /// nonempty, and an infinite upper bound is open.
    pub fn check(&self) -> Result<(), String> {
        if self.lower.is_negative() {
            return Err(format!("negative lower bound {}", format_rat(self.lower)));
        }
        match self.upper {
            TimeBound::Infinite => {
                if self.upper_closed {
                    return Err("infinite upper bound must be open".into());
                }
            }
            TimeBound::Finite(hi) => {
                if hi < self.lower {
                    return Err(format!(
                        "empty interval: upper {} below lower {}",
                        format_rat(hi),
                        format_rat(self.lower)
                    ));
                }
                if hi == self.lower && !(self.lower_closed && self.upper_closed) {
                    return Err("point interval must be closed on both ends".into());
                }
            }
        }
        Ok(())
    }

    /// Scales both bounds by a rational factor (used by parameter sweeps).
    pub fn scaled(&self, factor: Rat) -> Self {
        TimeInterval {
            lower: self.lower * factor,
            upper: match self.upper {
                TimeBound::Finite(hi) => TimeBound::Finite(hi * factor),
                TimeBound::Infinite => TimeBound::Infinite,
            },
            lower_closed: self.lower_closed,
            upper_closed: self.upper_closed,
        }
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lower_closed { '[' } else { '(' },
            format_rat(self.lower),
            self.upper,
            if self.upper_closed { ']' } else { ')' },
        )
    }
}

/// Formats a rational as a finite decimal when the denominator is of the
/// form 2^a * 5^b, and as `num/den` otherwise. Exact in both cases.
pub fn format_rat(r: Rat) -> String {
    let num = *r.numer();
    let den = *r.denom();
    if den == 1 {
        return num.to_string();
    }
    let mut d = den;
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return format!("{}/{}", num, den);
    }
    // scale to a power of ten
    let digits = twos.max(fives);
    let mut scaled = num;
    for _ in 0..(digits - twos) {
        scaled *= 2;
    }
    for _ in 0..(digits - fives) {
        scaled *= 5;
    }
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.unsigned_abs();
    let pow = 10u128.pow(digits);
    let whole = abs / pow;
    let frac = abs % pow;
    let frac_str = format!("{:0width$}", frac, width = digits as usize);
    let frac_str = frac_str.trim_end_matches('0');
    if frac_str.is_empty() {
        format!("{}{}", sign, whole)
    } else {
        format!("{}{}.{}", sign, whole, frac_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn immediate_is_zero_point() {
        let i = TimeInterval::immediate();
        assert!(i.check().is_ok());
        assert!(i.is_immediate());
        assert_eq!(i.to_string(), "[0,0]");
    }

    #[test]
    fn invalid_intervals_rejected() {
        assert!(TimeInterval::closed(rat(2, 1), rat(1, 1)).check().is_err());
        let mut i = TimeInterval::at_least(rat(1, 1));
        i.upper_closed = true;
        assert!(i.check().is_err());
        let neg = TimeInterval::closed(rat(-1, 1), rat(1, 1));
        assert!(neg.check().is_err());
    }

    #[test]
    fn rational_formatting() {
        assert_eq!(format_rat(rat(13, 2)), "6.5");
        assert_eq!(format_rat(rat(3, 10)), "0.3");
        assert_eq!(format_rat(rat(1, 3)), "1/3");
        assert_eq!(format_rat(rat(500, 1)), "500");
        assert_eq!(format_rat(rat(-3, 4)), "-0.75");
        assert_eq!(format_rat(rat(10, 4)), "2.5");
    }
}
