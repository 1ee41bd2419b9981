use std::fmt;
use std::str::FromStr;

use crate::error::Error;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exact non-negative rational p/q. Comparisons against integer quantities are
/// done by cross-multiplication in 128-bit arithmetic; no floating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Result<Self, Error> {
        if den == 0 {
            return Err(Error::InvalidRatio("denominator is zero".into()));
        }
        let g = gcd(num, den).max(1);
        Ok(Ratio {
            num: num / g,
            den: den / g,
        })
    }

    pub fn one() -> Self {
        Ratio { num: 1, den: 1 }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_positive(&self) -> bool {
        self.num > 0
    }

    /// self <= 1
    pub fn le_one(&self) -> bool {
        self.num <= self.den
    }

    /// Exact test of `lhs >= self * rhs`.
    pub fn le_scaled(&self, lhs: u64, rhs: u64) -> bool {
        (lhs as u128) * (self.den as u128) >= (self.num as u128) * (rhs as u128)
    }

    /// Smallest non-negative integer c with `base + c * step >= self * target`.
    /// Returns None when step is zero and the target is unreachable.
    pub fn ceil_deficit(&self, base: u64, step: u64, target: u64) -> Option<u128> {
        let need = (self.num as u128) * (target as u128);
        let have = (base as u128) * (self.den as u128);
        if have >= need {
            return Some(0);
        }
        if step == 0 {
            return None;
        }
        let gap = need - have;
        let per = (step as u128) * (self.den as u128);
        Some(gap.div_ceil(per))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Ratio {
    type Err = Error;

    /// Accepts `p/q` or a bare integer `p`. Decimal notation is rejected.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = |_| Error::InvalidRatio(format!("expected `p/q` or integer, got `{s}`"));
        match s.split_once('/') {
            Some((p, q)) => {
                let num = p.trim().parse::<u64>().map_err(bad)?;
                let den = q.trim().parse::<u64>().map_err(bad)?;
                Ratio::new(num, den)
            }
            None => {
                let num = s.trim().parse::<u64>().map_err(bad)?;
                Ratio::new(num, 1)
            }
        }
    }
}
