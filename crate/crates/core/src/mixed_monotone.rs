//! Jacobian sign-stable (JSS) decompositions and mixed-monotone inclusion
//! functions.
//!
//! Given bounds `jac_lo <= grad f <= jac_hi`, any slope vertex `m` with
//! `m_j in {jac_lo_j, jac_hi_j}` splits `f(x) = h(x) + m x` where every
//! partial of the remainder `h` has a fixed sign over the domain. The box
//! extrema of `h` then sit at vertices picked by a binary selector, which
//! makes the remainder bounds tight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Hyperbox, Interval};
use crate::objective::{dot, ObjectiveSpec};

pub const DEFAULT_VERTEX_CAP: usize = 16;

/// Relative outward widening of [`JssDecomposition::inclusion`], so that a
/// rounded evaluation of `f(x) + slope . x` stays inside even on
/// degenerate boxes.
pub const OUTWARD_ROUNDING: f64 = 64.0 * f64::EPSILON;

/// One element of the slope-vertex set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeVertex {
    pub slope: Vec<f64>,
    /// `true` where the upper Jacobian bound was taken.
    pub choice_mask: Vec<bool>,
}

impl SlopeVertex {
    /// `m^+ = max(m, 0)`.
    pub fn positive_part(&self) -> Vec<f64> {
        self.slope.iter().map(|m| m.max(0.0)).collect()
    }

    /// `m^- = max(-m, 0)`.
    pub fn negative_part(&self) -> Vec<f64> {
        self.slope.iter().map(|m| (-m).max(0.0)).collect()
    }
}

pub fn enumerate_vertices(spec: &ObjectiveSpec) -> Result<Vec<SlopeVertex>> {
    enumerate_vertices_capped(spec, DEFAULT_VERTEX_CAP)
}

/// All slope vertices; coordinates with `jac_lo == jac_hi` contribute one
/// choice (mask bit `false`).
pub fn enumerate_vertices_capped(spec: &ObjectiveSpec, cap: usize) -> Result<Vec<SlopeVertex>> {
    let n = spec.dim();
    if n > cap {
        return Err(Error::Capacity {
            what: "vertex enumeration dimension",
            got: n,
            cap,
        });
    }
    let (lo, hi) = (spec.jac_lo(), spec.jac_hi());
    let free: Vec<usize> = (0..n).filter(|&j| lo[j] != hi[j]).collect();
    let mut out = Vec::with_capacity(1 << free.len());
    for bits in 0..1usize << free.len() {
        let mut choice_mask = vec![false; n];
        for (k, &j) in free.iter().enumerate() {
            choice_mask[j] = bits >> k & 1 == 1;
        }
        let slope = (0..n).map(|j| if choice_mask[j] { hi[j] } else { lo[j] }).collect();
        out.push(SlopeVertex { slope, choice_mask });
    }
    Ok(out)
}

/// `f = h + m x` with selector `B`.
#[derive(Debug, Clone)]
pub struct JssDecomposition {
    base: ObjectiveSpec,
    vertex: SlopeVertex,
    selector: Vec<bool>,
}

/// Tight extrema of the remainder over a box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderExtrema {
    pub h_min: f64,
    pub h_max: f64,
    pub width: f64,
}

/// Builds `h = f - m x` and the selector.
///
/// `B_jj = 1` exactly when `m_j` is the lower Jacobian bound: then
/// `dh/dx_j = df/dx_j - jac_lo_j >= 0`, so `h` is nondecreasing in `x_j`
/// and its minimum over a box sits at the lower face.
pub fn decompose(spec: &ObjectiveSpec, vertex: &SlopeVertex) -> Result<JssDecomposition> {
    let n = spec.dim();
    if vertex.slope.len() != n || vertex.choice_mask.len() != n {
        return Err(Error::usage(format!(
            "vertex has dimension {}, objective has {n}",
            vertex.slope.len()
        )));
    }
    for j in 0..n {
        let expected = if vertex.choice_mask[j] {
            spec.jac_hi()[j]
        } else {
            spec.jac_lo()[j]
        };
        if vertex.slope[j] != expected {
            return Err(Error::usage(format!(
                "vertex coordinate {j} ({}) is not the selected Jacobian bound ({expected})",
                vertex.slope[j]
            )));
        }
    }
    let selector = vertex.choice_mask.iter().map(|&upper| !upper).collect();
    Ok(JssDecomposition {
        base: spec.clone(),
        vertex: vertex.clone(),
        selector,
    })
}

impl JssDecomposition {
    pub fn base(&self) -> &ObjectiveSpec {
        &self.base
    }

    pub fn vertex(&self) -> &SlopeVertex {
        &self.vertex
    }

    /// Diagonal of `B`.
    pub fn selector(&self) -> &[bool] {
        &self.selector
    }

    pub fn remainder(&self, x: &[f64]) -> f64 {
        self.base.value(x) - dot(&self.vertex.slope, x)
    }

    pub fn remainder_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.base.gradient(x);
        g.iter_mut().zip(&self.vertex.slope).for_each(|(g, m)| *g -= m);
        g
    }

    /// `h(B x1 + (I - B) x2)` for an ordered pair.
    pub fn h_d(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        let n = self.base.dim();
        if x1.len() != n || x2.len() != n {
            return Err(Error::usage("h_d arguments must match the objective dimension"));
        }
        let up = x1.iter().zip(x2).all(|(a, b)| a <= b);
        let down = x1.iter().zip(x2).all(|(a, b)| a >= b);
        if !(up || down) {
            return Err(Error::usage(format!(
                "h_d needs an ordered pair, got {x1:?} and {x2:?}"
            )));
        }
        let point: Vec<f64> = (0..n).map(|j| if self.selector[j] { x1[j] } else { x2[j] }).collect();
        Ok(self.remainder(&point))
    }

    fn check_inside(&self, b: &Hyperbox) -> Result<()> {
        if !self.base.domain().contains(b)? {
            return Err(Error::usage(format!(
                "box {b} is not inside the domain {}",
                self.base.domain()
            )));
        }
        Ok(())
    }

    pub fn remainder_extrema(&self, b: &Hyperbox) -> Result<RemainderExtrema> {
        self.check_inside(b)?;
        let h_min = self.h_d(b.lo(), b.hi())?;
        let h_max = self.h_d(b.hi(), b.lo())?;
        Ok(RemainderExtrema {
            h_min,
            h_max,
            width: (h_max - h_min).max(0.0),
        })
    }

    /// Mixed-monotone enclosure of `f(x) + extra_slope . x` over `b`.
    ///
    /// With `mh = m + extra_slope` the interval is
    /// `[h_min + mh+ lo - mh- hi, h_max + mh+ hi - mh- lo]`, widened on both
    /// sides by [`OUTWARD_ROUNDING`] times the magnitudes summed.
    pub fn inclusion(&self, b: &Hyperbox, extra_slope: &[f64]) -> Result<Interval> {
        let e = self.remainder_extrema(b)?;
        let (pos, neg) = self.effective_slope_parts(extra_slope)?;
        let lo = e.h_min + dot(&pos, b.lo()) - dot(&neg, b.hi());
        let hi = e.h_max + dot(&pos, b.hi()) - dot(&neg, b.lo());
        let reach: f64 = (0..pos.len())
            .map(|j| (pos[j] + neg[j]) * b.lo()[j].abs().max(b.hi()[j].abs()))
            .sum();
        let pad = OUTWARD_ROUNDING * (e.h_min.abs().max(e.h_max.abs()) + reach);
        Ok(Interval::hull_of(lo - pad, hi + pad))
    }

    /// `width(h) + |m + extra_slope| . (hi - lo)`.
    pub fn range_width(&self, b: &Hyperbox, extra_slope: &[f64]) -> Result<f64> {
        let e = self.remainder_extrema(b)?;
        let (pos, neg) = self.effective_slope_parts(extra_slope)?;
        let widths = b.widths();
        let affine: f64 = (0..widths.len()).map(|j| (pos[j] + neg[j]) * widths[j]).sum();
        Ok(e.width + affine)
    }

    fn effective_slope_parts(&self, extra_slope: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.base.dim();
        if extra_slope.len() != n {
            return Err(Error::usage(format!(
                "extra slope has length {}, objective dimension is {n}",
                extra_slope.len()
            )));
        }
        Ok(self
            .vertex
            .slope
            .iter()
            .zip(extra_slope)
            .map(|(m, t)| {
                let s = m + t;
                (s.max(0.0), (-s).max(0.0))
            })
            .unzip())
    }
}
