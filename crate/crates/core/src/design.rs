//! Design spaces and finite designs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A box `[lower, upper] ⊂ ℝᵈ`, optionally discretised by a regular grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
    grid: Option<Vec<usize>>,
}

impl DesignSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (&lo, &hi) in lower.iter().zip(&upper) {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::NonFinite);
            }
            if lo >= hi {
                return Err(Error::InvalidParameter {
                    name: "upper",
                    value: hi,
                    reason: "upper bound must exceed lower bound",
                });
            }
        }
        Ok(Self {
            lower,
            upper,
            grid: None,
        })
    }

    /// The cube `[lo, hi]ᵈ`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// Attaches a regular grid with `m` levels per coordinate.
    pub fn with_grid(self, m: usize) -> Result<Self> {
        let d = self.dim();
        self.with_grid_levels(vec![m; d])
    }

    pub fn with_grid_levels(mut self, levels: Vec<usize>) -> Result<Self> {
        if levels.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: levels.len(),
            });
        }
        if let Some(&bad) = levels.iter().find(|&&m| m < 2) {
            return Err(Error::InvalidParameter {
                name: "grid",
                value: bad as f64,
                reason: "grid resolution must be at least 2",
            });
        }
        self.grid = Some(levels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn grid_levels(&self) -> Option<&[usize]> {
        self.grid.as_deref()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    /// Projects `x` onto the box.
    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (&lo, &hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(lo, hi);
        }
    }

    /// Diagonal of one grid cell, or of the whole box when no grid is set.
    pub fn cell_diagonal(&self) -> f64 {
        let levels = self.grid.clone().unwrap_or_else(|| vec![2; self.dim()]);
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(&levels)
            .map(|((lo, hi), &m)| ((hi - lo) / (m - 1) as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// All grid nodes, the first coordinate varying slowest.
    pub fn grid_design(&self) -> Result<Design> {
        let levels = self.grid.as_ref().ok_or(Error::EmptyCandidates)?;
        let d = self.dim();
        let total: usize = levels.iter().product();
        let mut coords = Vec::with_capacity(total * d);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            for k in 0..d {
                let t = idx[k] as f64 / (levels[k] - 1) as f64;
                coords.push(self.lower[k] + t * (self.upper[k] - self.lower[k]));
            }
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < levels[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Design::new(d, coords)
    }

    /// Checks that every point of `design` lies in the box.
    pub fn validate(&self, design: &Design) -> Result<()> {
        if design.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: design.dim(),
            });
        }
        match design.points().find(|p| !self.contains(p)) {
            Some(p) => Err(Error::InvalidParameter {
                name: "design point",
                value: p[0],
                reason: "outside the design space",
            }),
            None => Ok(()),
        }
    }
}

/// An ordered set of points in `ℝᵈ` with optional observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Design {
    dim: usize,
    coords: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    observations: Option<Vec<f64>>,
}

impl Design {
    /// Builds a design from flat, row-major coordinates.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: coords.len() % dim,
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            dim,
            coords,
            observations: None,
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
            observations: None,
        }
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or(Error::EmptyDesign)?;
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        Self::new(dim, points.concat())
    }

    /// One-dimensional design.
    pub fn from_1d(xs: &[f64]) -> Result<Self> {
        Self::new(1, xs.to_vec())
    }

    pub fn with_observations(mut self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        self.observations = Some(y);
        Ok(self)
    }

    pub fn without_observations(mut self) -> Self {
        self.observations = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn observations(&self) -> Option<&[f64]> {
        self.observations.as_deref()
    }

    /// Appends a point; `y` must be given exactly when the design carries
    /// observations.
    pub fn push(&mut self, x: &[f64], y: Option<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        let empty = self.is_empty();
        match (&mut self.observations, y) {
            (Some(obs), Some(v)) => obs.push(v),
            (None, None) => {}
            (None, Some(v)) if empty => self.observations = Some(vec![v]),
            _ => return Err(Error::MissingObservations),
        }
        self.coords.extend_from_slice(x);
        Ok(())
    }

    /// The points (and observations) at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Design {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            coords.extend_from_slice(self.point(i));
        }
        Design {
            dim: self.dim,
            coords,
            observations: self
                .observations
                .as_ref()
                .map(|y| idx.iter().map(|&i| y[i]).collect()),
        }
    }

    /// Smallest distance from `x` to a design point (`+inf` when empty).
    pub fn min_distance_to(&self, x: &[f64]) -> f64 {
        self.points()
            .map(|p| distance(p, x))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_enumerates_nodes() {
        let s = DesignSpace::cube(2, 0.0, 10.0).unwrap().with_grid(25).unwrap();
        let g = s.grid_design().unwrap();
        assert_eq!(g.len(), 625);
        assert_eq!(g.point(0), &[0.0, 0.0]);
        assert!((g.point(1)[1] - 10.0 / 24.0).abs() < 1e-15);
        assert_eq!(g.point(624), &[10.0, 10.0]);
        assert!((s.cell_diagonal() - (2.0f64).sqrt() * 10.0 / 24.0).abs() < 1e-12);
        s.validate(&g).unwrap();
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(DesignSpace::new(vec![1.0], vec![0.0]).is_err());
        assert!(DesignSpace::cube(2, 0.0, 1.0).unwrap().with_grid(1).is_err());
        assert!(DesignSpace::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn observations_follow_points() {
        let mut d = Design::from_1d(&[0.0, 1.0]).unwrap().with_observations(vec![1.0, 2.0]).unwrap();
        d.push(&[2.0], Some(3.0)).unwrap();
        assert!(d.push(&[3.0], None).is_err());
        let s = d.subset(&[2, 0]);
        assert_eq!(s.coords(), &[2.0, 0.0]);
        assert_eq!(s.observations().unwrap(), &[3.0, 1.0]);
        assert!(Design::from_1d(&[0.0]).unwrap().with_observations(vec![]).is_err());
    }
}
