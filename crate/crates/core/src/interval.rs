use std::fmt;

use serde::{Deserialize, Serialize};

/// A real interval with possibly infinite, possibly open endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

/// Where a value sits relative to an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Inside,
    /// Equal to an excluded finite endpoint.
    Boundary,
    Outside,
}

impl Interval {
    /// Panics unless `lo < hi`.
    pub fn new(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Self {
        assert!(lo < hi, "interval requires lo < hi, got [{lo}, {hi}]");
        Self {
            lo,
            hi,
            lo_open: lo_open || lo.is_infinite(),
            hi_open: hi_open || hi.is_infinite(),
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, true, true)
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, false, false)
    }

    pub fn real_line() -> Self {
        Self::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn positive() -> Self {
        Self::open(0.0, f64::INFINITY)
    }

    pub fn negative() -> Self {
        Self::open(f64::NEG_INFINITY, 0.0)
    }

    pub fn unit_open() -> Self {
        Self::open(0.0, 1.0)
    }

    pub fn place(&self, x: f64) -> Placement {
        if !x.is_finite() {
            return Placement::Outside;
        }
        let above_lo = x > self.lo || (!self.lo_open && x == self.lo);
        let below_hi = x < self.hi || (!self.hi_open && x == self.hi);
        if above_lo && below_hi {
            Placement::Inside
        } else if x == self.lo || x == self.hi {
            Placement::Boundary
        } else {
            Placement::Outside
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.place(x) == Placement::Inside
    }

    /// Intersection, or `None` when empty or degenerate.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lo, lo_open) = if self.lo > other.lo {
            (self.lo, self.lo_open)
        } else if other.lo > self.lo {
            (other.lo, other.lo_open)
        } else {
            (self.lo, self.lo_open || other.lo_open)
        };
        let (hi, hi_open) = if self.hi < other.hi {
            (self.hi, self.hi_open)
        } else if other.hi < self.hi {
            (other.hi, other.hi_open)
        } else {
            (self.hi, self.hi_open || other.hi_open)
        };
        (lo < hi).then(|| Interval::new(lo, hi, lo_open, hi_open))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_open { '(' } else { '[' };
        let close = if self.hi_open { ')' } else { ']' };
        write!(f, "{open}{}, {}{close}", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placement_distinguishes_boundary() {
        let pos = Interval::positive();
        assert_eq!(pos.place(1.0), Placement::Inside);
        assert_eq!(pos.place(0.0), Placement::Boundary);
        assert_eq!(pos.place(-1.0), Placement::Outside);
        assert_eq!(pos.place(f64::NAN), Placement::Outside);
        assert_eq!(pos.place(f64::INFINITY), Placement::Outside);

        let unit = Interval::closed(0.0, 1.0);
        assert!(unit.contains(0.0) && unit.contains(1.0));
    }

    #[test]
    fn infinite_endpoints_are_open() {
        let r = Interval::new(f64::NEG_INFINITY, 2.0, false, false);
        assert!(r.lo_open);
        assert!(r.contains(-1e300));
        assert!(r.contains(2.0));
    }

    #[test]
    fn intersection() {
        let i = Interval::positive()
            .intersect(&Interval::unit_open())
            .unwrap();
        assert_eq!(i, Interval::unit_open());
        assert!(Interval::positive()
            .intersect(&Interval::negative())
            .is_none());
        assert_eq!(
            Interval::real_line().intersect(&Interval::positive()),
            Some(Interval::positive())
        );
    }
}
