//! Radial mapping between incidence angle and normalized image radius.
//!
//! All radii here are normalized (pixel radius divided by the x focal length),
//! so an equidistant lens maps `θ` to `θ`. Three mappings are supported:
//!
//! * equidistant: `r = θ`
//! * odd polynomial (Kannala-Brandt): `r = θ (1 + k1 θ² + k2 θ⁴ + ...)`
//! * sampled table with piecewise-linear interpolation
//!
//! A table may carry the polynomial it was sampled from; the two must agree at
//! every knot within the declared tolerance.

use thiserror::Error;

/// Bisection stops once the bracket is narrower than this (radians).
const BISECTION_TOL: f64 = 1e-12;
/// Samples used when checking a polynomial for monotonicity.
const MONOTONE_SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistortionError {
    #[error("radial mapping is not strictly increasing: {0}")]
    NonMonotone(String),
    #[error("table disagrees with its polynomial by {deviation:.3e} at {angle:.6} rad (tolerance {tolerance:.3e})")]
    TableMismatch { angle: f64, deviation: f64, tolerance: f64 },
    #[error("invalid radial mapping: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RadialModel {
    Equidistant,
    Polynomial(Vec<f64>),
    Table(RadialTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    angles: Vec<f64>,
    radii: Vec<f64>,
}

impl RadialTable {
    /// Builds a table from knots. The first knot must be `(0, 0)` and both
    /// columns must be strictly increasing.
    pub fn new(angles: Vec<f64>, radii: Vec<f64>) -> Result<Self, DistortionError> {
        if angles.len() != radii.len() {
            return Err(DistortionError::Invalid(format!(
                "table has {} angles but {} radii",
                angles.len(),
                radii.len()
            )));
        }
        if angles.len() < 2 {
            return Err(DistortionError::Invalid("table needs at least two knots".into()));
        }
        if angles.iter().chain(&radii).any(|v| !v.is_finite()) {
            return Err(DistortionError::Invalid("table contains non-finite values".into()));
        }
        if angles[0] != 0.0 || radii[0] != 0.0 {
            return Err(DistortionError::Invalid("table must start at (0, 0)".into()));
        }
        for i in 1..angles.len() {
            if angles[i] <= angles[i - 1] {
                return Err(DistortionError::NonMonotone(format!(
                    "table angles not increasing at knot {i}"
                )));
            }
            if radii[i] <= radii[i - 1] {
                return Err(DistortionError::NonMonotone(format!(
                    "table radii not increasing at knot {i}"
                )));
            }
        }
        Ok(Self { angles, radii })
    }

    /// Samples `model` at the given angles.
    pub fn sample(model: &RadialModel, angles: &[f64]) -> Result<Self, DistortionError> {
        let radii = angles.iter().map(|&a| model.eval(a)).collect();
        Self::new(angles.to_vec(), radii)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    fn max_angle(&self) -> f64 {
        *self.angles.last().unwrap()
    }

    fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
        // partition_point returns the first knot strictly greater than x
        let hi = xs.partition_point(|&k| k <= x).clamp(1, xs.len() - 1);
        let lo = hi - 1;
        let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
        ys[lo] + t * (ys[hi] - ys[lo])
    }
}

impl RadialModel {
    /// Evaluates the forward mapping without range checks.
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            RadialModel::Equidistant => theta,
            RadialModel::Polynomial(k) => {
                let t2 = theta * theta;
                let mut acc = 0.0;
                for c in k.iter().rev() {
                    acc = acc * t2 + c;
                }
                theta * (1.0 + acc * t2)
            }
            RadialModel::Table(t) => RadialTable::interpolate(&t.angles, &t.radii, theta),
        }
    }

    fn derivative(&self, theta: f64) -> Option<f64> {
        match self {
            RadialModel::Polynomial(k) => {
                // d/dθ [θ + Σ k_i θ^(2i+1)] = 1 + Σ (2i+1) k_i θ^(2i)
                let t2 = theta * theta;
                let mut pow = t2;
                let mut d = 1.0;
                for (i, c) in k.iter().enumerate() {
                    d += (2 * i + 3) as f64 * c * pow;
                    pow *= t2;
                }
                Some(d)
            }
            _ => None,
        }
    }
}

/// A validated radial mapping on `[0, max_angle]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDistortion {
    model: RadialModel,
    max_angle: f64,
    max_radius: f64,
}

impl RadialDistortion {
    pub fn new(model: RadialModel, max_angle: f64) -> Result<Self, DistortionError> {
        if !(max_angle.is_finite() && max_angle > 0.0) {
            return Err(DistortionError::Invalid(format!("bad field-of-view half angle {max_angle}")));
        }
        match &model {
            RadialModel::Equidistant => {}
            RadialModel::Polynomial(k) => {
                if k.iter().any(|c| !c.is_finite()) {
                    return Err(DistortionError::Invalid("non-finite polynomial coefficient".into()));
                }
                check_polynomial_monotone(&model, max_angle)?;
            }
            RadialModel::Table(t) => {
                if t.max_angle() < max_angle {
                    return Err(DistortionError::Invalid(format!(
                        "table ends at {:.6} rad, short of the {:.6} rad field of view",
                        t.max_angle(),
                        max_angle
                    )));
                }
            }
        }
        let max_radius = model.eval(max_angle);
        Ok(Self { model, max_angle, max_radius })
    }

    /// Checks that a table agrees with the polynomial it claims to sample.
    pub fn check_table_against(
        table: &RadialTable,
        reference: &RadialModel,
        tolerance: f64,
    ) -> Result<(), DistortionError> {
        for (&a, &r) in table.angles.iter().zip(&table.radii) {
            let deviation = (reference.eval(a) - r).abs();
            if deviation > tolerance {
                return Err(DistortionError::TableMismatch { angle: a, deviation, tolerance });
            }
        }
        Ok(())
    }

    pub fn model(&self) -> &RadialModel {
        &self.model
    }

    pub fn max_angle(&self) -> f64 {
        self.max_angle
    }

    /// Normalized radius at the field-of-view boundary.
    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    /// Normalized radius for an incidence angle in `[0, max_angle]`.
    pub fn radius(&self, theta: f64) -> Option<f64> {
        if !(0.0..=self.max_angle).contains(&theta) {
            return None;
        }
        Some(self.model.eval(theta))
    }

    /// Incidence angle for a normalized radius in `[0, max_radius]`.
    pub fn angle(&self, radius: f64) -> Option<f64> {
        if !(0.0..=self.max_radius).contains(&radius) {
            return None;
        }
        if radius == 0.0 {
            return Some(0.0);
        }
        Some(match &self.model {
            RadialModel::Equidistant => radius,
            RadialModel::Table(t) => RadialTable::interpolate(&t.radii, &t.angles, radius),
            RadialModel::Polynomial(_) => {
                let (mut lo, mut hi) = (0.0, self.max_angle);
                while hi - lo > BISECTION_TOL {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.model.eval(mid) < radius {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        })
    }
}

fn check_polynomial_monotone(model: &RadialModel, max_angle: f64) -> Result<(), DistortionError> {
    let mut prev = model.eval(0.0);
    for i in 1..=MONOTONE_SAMPLES {
        let theta = max_angle * i as f64 / MONOTONE_SAMPLES as f64;
        let r = model.eval(theta);
        let slope = model.derivative(theta).unwrap_or(1.0);
        if r <= prev || slope <= 0.0 {
            return Err(DistortionError::NonMonotone(format!(
                "polynomial turns over near {theta:.4} rad"
            )));
        }
        prev = r;
    }
    Ok(())
}
