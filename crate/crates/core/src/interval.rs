//! Scalar intervals, n-dimensional boxes and interval vectors.
//!
//! [`Hyperbox`] is the domain object (subsets of the decision space) while
//! [`IntervalVector`] lives in the codomain of the privacy mechanism, one
//! entry per agent. They are structurally identical but kept apart so that
//! the decision dimension `n` and the agent count `N` cannot be confused.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed scalar interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::usage(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Builds `[min(a,b), max(a,b)]`.
    pub fn hull_of(a: f64, b: f64) -> Self {
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Largest absolute value attained in the interval.
    pub fn magnitude(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo - other.hi,
            hi: self.hi - other.lo,
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let p = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        Interval {
            lo: p.iter().copied().fold(f64::INFINITY, f64::min),
            hi: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn scale(&self, c: f64) -> Interval {
        Interval::hull_of(c * self.lo, c * self.hi)
    }

    /// Exact range of `x^k` over the interval.
    pub fn powi(&self, k: u32) -> Interval {
        if k == 0 {
            return Interval::point(1.0);
        }
        let a = self.lo.powi(k as i32);
        let b = self.hi.powi(k as i32);
        if k % 2 == 1 || self.lo >= 0.0 {
            Interval { lo: a, hi: b }
        } else if self.hi <= 0.0 {
            Interval { lo: b, hi: a }
        } else {
            Interval { lo: 0.0, hi: a.max(b) }
        }
    }

    /// `[max(0, lo), max(0, hi)]`, the image under `max(0, .)`.
    pub fn positive_part(&self) -> Interval {
        Interval {
            lo: self.lo.max(0.0),
            hi: self.hi.max(0.0),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Axis-aligned box `[lo, hi]` in R^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox")]
pub struct Hyperbox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Deserialize)]
struct RawBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl TryFrom<RawBox> for Hyperbox {
    type Error = Error;

    fn try_from(raw: RawBox) -> Result<Self> {
        Hyperbox::new(raw.lo, raw.hi)
    }
}

impl Hyperbox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::usage("box must have dimension >= 1"));
        }
        if lo.len() != hi.len() {
            return Err(Error::usage(format!(
                "box bounds have lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if let Some(j) = (0..lo.len()).find(|&j| lo[j].is_nan() || hi[j].is_nan() || lo[j] > hi[j]) {
            return Err(Error::usage(format!(
                "box coordinate {j} has lo {} > hi {}",
                lo[j], hi[j]
            )));
        }
        Ok(Hyperbox { lo, hi })
    }

    /// One-dimensional box `[lo, hi]`.
    pub fn scalar(lo: f64, hi: f64) -> Result<Self> {
        Hyperbox::new(vec![lo], vec![hi])
    }

    /// The same interval repeated in every coordinate.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Hyperbox::new(vec![lo; n], vec![hi; n])
    }

    pub fn singleton(x: &[f64]) -> Result<Self> {
        Hyperbox::new(x.to_vec(), x.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn component(&self, j: usize) -> Interval {
        Interval {
            lo: self.lo[j],
            hi: self.hi[j],
        }
    }

    /// Componentwise width vector `hi - lo`.
    pub fn widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).collect()
    }

    /// Infinity-norm width `max_j (hi_j - lo_j)`.
    pub fn diameter(&self) -> f64 {
        self.widths().into_iter().fold(0.0, f64::max)
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// `true` iff `inner` lies inside `self`.
    pub fn contains(&self, inner: &Hyperbox) -> Result<bool> {
        self.check_dim(inner.dim())?;
        Ok((0..self.dim()).all(|j| self.lo[j] <= inner.lo[j] && inner.hi[j] <= self.hi[j]))
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && (0..self.dim()).all(|j| self.lo[j] <= x[j] && x[j] <= self.hi[j])
    }

    /// Componentwise clamp onto the box (Euclidean projection for boxes).
    pub fn project(&self, x: &mut [f64]) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lo[j], self.hi[j]);
        }
    }

    /// Infinity-norm distance from `x` to the box.
    pub fn excess(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(j, &v)| (self.lo[j] - v).max(v - self.hi[j]).max(0.0))
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::usage(format!(
                "dimension mismatch: box has {} coordinates, got {n}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Uniform point of the box.
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim())
            .map(|j| {
                if self.lo[j] == self.hi[j] {
                    self.lo[j]
                } else {
                    rng.gen_range(self.lo[j]..=self.hi[j])
                }
            })
            .collect()
    }

    /// Random sub-box: per coordinate, two uniform points sorted.
    pub fn sample_subbox<R: Rng>(&self, rng: &mut R) -> Hyperbox {
        let a = self.sample_point(rng);
        let b = self.sample_point(rng);
        let lo = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
        let hi = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        Hyperbox { lo, hi }
    }

    /// `count` sub-boxes of `self`, deterministic in `seed`.
    ///
    /// The first entry is `self`, the second (when `count >= 2`) a singleton.
    pub fn sample_subintervals(&self, count: usize, seed: u64) -> Vec<Hyperbox> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.clone());
        if count >= 2 {
            let p = self.sample_point(&mut rng);
            out.push(Hyperbox { lo: p.clone(), hi: p });
        }
        while out.len() < count {
            out.push(self.sample_subbox(&mut rng));
        }
        out
    }

    /// All `2^n` vertices, coordinate `j` taking `hi` when bit `j` is set.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|j| if mask >> j & 1 == 1 { self.hi[j] } else { self.lo[j] })
                    .collect()
            })
            .collect()
    }
}

impl fmt::Display for Hyperbox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..self.dim())
            .map(|j| format!("[{}, {}]", self.lo[j], self.hi[j]))
            .collect();
        write!(f, "{}", parts.join(" x "))
    }
}

/// Ordered list of scalar intervals, one per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalVector {
    entries: Vec<Interval>,
}

/// Result of intersecting two interval vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Meet {
    Empty,
    NonEmpty(IntervalVector),
}

impl Meet {
    /// Diameter, taking `diam(empty) = 0`.
    pub fn diameter(&self) -> f64 {
        match self {
            Meet::Empty => 0.0,
            Meet::NonEmpty(v) => v.diameter(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Meet::Empty)
    }
}

impl IntervalVector {
    pub fn new(entries: Vec<Interval>) -> Self {
        IntervalVector { entries }
    }

    pub fn entries(&self) -> &[Interval] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest entry width.
    pub fn diameter(&self) -> f64 {
        self.entries.iter().map(Interval::width).fold(0.0, f64::max)
    }

    pub fn intersect(&self, other: &IntervalVector) -> Result<Meet> {
        if self.len() != other.len() {
            return Err(Error::usage(format!(
                "interval vectors have lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        let mut entries = Vec::with_capacity(self.len());
        for (a, b) in self.entries.iter().zip(&other.entries) {
            match a.intersect(b) {
                Some(i) => entries.push(i),
                None => return Ok(Meet::Empty),
            }
        }
        Ok(Meet::NonEmpty(IntervalVector { entries }))
    }

    pub fn is_subset_of(&self, other: &IntervalVector) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::usage(format!(
                "interval vectors have lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self.entries.iter().zip(&other.entries).all(|(a, b)| a.is_subset_of(b)))
    }

    /// Widens every entry by the given nonnegative margins (below, above).
    pub fn inflate(&self, below: &[f64], above: &[f64]) -> Result<IntervalVector> {
        if below.len() != self.len() || above.len() != self.len() {
            return Err(Error::usage("margin vectors must match interval vector length"));
        }
        if below.iter().chain(above).any(|m| *m < 0.0) {
            return Err(Error::usage("margins must be nonnegative"));
        }
        Ok(IntervalVector {
            entries: self
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| Interval {
                    lo: e.lo - below[i],
                    hi: e.hi + above[i],
                })
                .collect(),
        })
    }
}
