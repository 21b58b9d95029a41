//! Finitely supported probability measures on the positive half-line.
//!
//! Finite support makes log-integrability structural, which is all the
//! mean-field experiments in this crate need: empirical measures of
//! simulated ensembles and small hand-built test measures.

use crate::error::{Error, Result};
use crate::numeric::neumaier_sum;

/// Tolerance on the total mass of a probability measure.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A measure `sum_k w_k delta_{q_k}` with `q_k > 0` and weights summing to
/// one (within [`MASS_TOLERANCE`]).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    /// Build from `(support, weight)` atoms; validates positivity and mass.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let measure = Self::unnormalized(atoms)?;
        let mass = measure.mass();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure("total mass must be 1"));
        }
        Ok(measure)
    }

    /// Build from raw atoms without the unit-mass check. Exists so tests can
    /// probe the mass-cancellation mechanics of monotonicity forms with
    /// deliberately unnormalized inputs; everything else should use
    /// [`DiscreteMeasure::new`] or [`DiscreteMeasure::normalized`].
    pub fn unnormalized(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("measure needs at least one atom"));
        }
        for &(q, w) in &atoms {
            if !(q.is_finite() && q > 0.0) {
                return Err(Error::InvalidMeasure("support points must be positive"));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidMeasure("weights must be non-negative"));
            }
        }
        Ok(Self { atoms })
    }

    /// Build from raw non-negative weights, normalizing them to mass one.
    pub fn normalized(points: &[f64], raw_weights: &[f64]) -> Result<Self> {
        if points.len() != raw_weights.len() {
            return Err(Error::InvalidMeasure("points/weights length mismatch"));
        }
        let total = neumaier_sum(raw_weights.iter().copied());
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidMeasure("weights must have positive total"));
        }
        let atoms = points
            .iter()
            .zip(raw_weights)
            .map(|(&q, &w)| (q, w / total))
            .collect();
        Self::unnormalized(atoms)
    }

    /// Equal-weight atoms at the given points.
    pub fn equal_weights(points: &[f64]) -> Result<Self> {
        let w = vec![1.0; points.len()];
        Self::normalized(points, &w)
    }

    /// Point mass at `q`.
    pub fn dirac(q: f64) -> Result<Self> {
        Self::new(vec![(q, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Total mass (compensated summation).
    pub fn mass(&self) -> f64 {
        neumaier_sum(self.atoms.iter().map(|&(_, w)| w))
    }

    /// `< ln q, m > = sum_k w_k ln q_k`.
    pub fn log_moment(&self) -> f64 {
        neumaier_sum(self.atoms.iter().map(|&(q, w)| w * q.ln()))
    }

    /// Integral of an arbitrary function against the measure.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        neumaier_sum(self.atoms.iter().map(|&(q, w)| w * f(q)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirac_has_unit_mass_and_zero_log_moment_at_one() {
        let m = DiscreteMeasure::dirac(1.0).unwrap();
        assert_eq!(m.mass(), 1.0);
        assert_eq!(m.log_moment(), 0.0);
    }

    #[test]
    fn equal_weights_log_moment() {
        // Atoms (1, e, e^2) with weight 1/3: mean log is 1.
        let e = std::f64::consts::E;
        let m = DiscreteMeasure::equal_weights(&[1.0, e, e * e]).unwrap();
        assert!((m.log_moment() - 1.0).abs() < 1e-14);
        assert!((m.mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_support_rejected() {
        assert!(DiscreteMeasure::new(vec![(0.0, 1.0)]).is_err());
        assert!(DiscreteMeasure::new(vec![(-1.0, 1.0)]).is_err());
    }

    #[test]
    fn wrong_mass_rejected_but_unnormalized_constructor_permits() {
        assert!(DiscreteMeasure::new(vec![(1.0, 0.5)]).is_err());
        let m = DiscreteMeasure::unnormalized(vec![(1.0, 0.5)]).unwrap();
        assert!((m.mass() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_measure_rejected() {
        assert!(matches!(
            DiscreteMeasure::new(vec![]),
            Err(Error::InvalidMeasure(_))
        ));
    }

    #[test]
    fn normalization_divides_by_total() {
        let m = DiscreteMeasure::normalized(&[2.0, 3.0], &[1.0, 3.0]).unwrap();
        assert!((m.atoms()[0].1 - 0.25).abs() < 1e-16);
        assert!((m.atoms()[1].1 - 0.75).abs() < 1e-16);
    }
}
