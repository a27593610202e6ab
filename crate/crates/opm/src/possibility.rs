//! Possibility functions on finite discrete domains.
//!
//! A possibility function assigns each point of a finite domain a credibility
//! in [0, 1] with supremum exactly 1. All operations here are sup-based: the
//! marginal takes a maximum instead of a sum, conditioning divides by the
//! marginal value, and every returned grid is renormalized by dividing by its
//! maximum so the largest value is bit-exactly 1.

use crate::error::{OpmError, Result};

/// A point usable as a grid-domain element.
///
/// `coordinate` reports a position on the real line when the point has one;
/// label-like domains keep the default `None`, which disables the
/// second-derivative variance.
pub trait GridPoint: Clone + PartialEq {
    fn coordinate(&self) -> Option<f64> {
        None
    }
}

impl GridPoint for f64 {
    fn coordinate(&self) -> Option<f64> {
        Some(*self)
    }
}

impl GridPoint for i64 {
    fn coordinate(&self) -> Option<f64> {
        Some(*self as f64)
    }
}

impl GridPoint for usize {
    fn coordinate(&self) -> Option<f64> {
        Some(*self as f64)
    }
}

impl GridPoint for String {}
impl GridPoint for &'static str {}
impl GridPoint for char {}

/// Checks that every raw value is finite and nonnegative and returns the
/// maximum, rejecting all-zero input.
fn checked_max(raw: &[f64]) -> Result<f64> {
    let mut max = 0.0_f64;
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(OpmError::InvalidValue { index, value });
        }
        max = max.max(value);
    }
    if max <= 0.0 {
        return Err(OpmError::Degenerate);
    }
    Ok(max)
}

/// A possibility function on a finite ordered set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct PossibilityGrid<P> {
    points: Vec<P>,
    values: Vec<f64>,
}

impl<P: GridPoint> PossibilityGrid<P> {
    /// Builds a grid from raw nonnegative credibilities, dividing by the
    /// maximum so the supremum is exactly 1.
    pub fn normalized(points: Vec<P>, raw: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(OpmError::InvalidArgument("empty domain".into()));
        }
        if points.len() != raw.len() {
            return Err(OpmError::DimensionMismatch(format!(
                "{} points vs {} values",
                points.len(),
                raw.len()
            )));
        }
        let max = checked_max(&raw)?;
        let values = raw.into_iter().map(|v| v / max).collect();
        Ok(Self { points, values })
    }

    /// The vacuous possibility function, equal to 1 everywhere.
    pub fn uniform(points: Vec<P>) -> Result<Self> {
        let n = points.len();
        Self::normalized(points, vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at a domain point, if the point belongs to the domain.
    pub fn value_at(&self, point: &P) -> Option<f64> {
        self.points
            .iter()
            .position(|p| p == point)
            .map(|i| self.values[i])
    }

    /// Multiplies by a pointwise likelihood and sup-renormalizes.
    ///
    /// Fails when the product is identically zero (incompatible evidence).
    pub fn bayes_update(&self, likelihood: &[f64]) -> Result<Self> {
        if likelihood.len() != self.len() {
            return Err(OpmError::DimensionMismatch(format!(
                "likelihood length {} vs domain size {}",
                likelihood.len(),
                self.len()
            )));
        }
        let raw: Vec<f64> = self
            .values
            .iter()
            .zip(likelihood)
            .map(|(f, l)| f * l)
            .collect();
        for (index, &value) in raw.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(OpmError::InvalidValue { index, value });
            }
        }
        if raw.iter().fold(0.0_f64, |a, &v| a.max(v)) <= 0.0 {
            return Err(OpmError::IncompatibleEvidence);
        }
        Self::normalized(self.points.clone(), raw)
    }

    /// Pushforward through a map into an explicit codomain.
    ///
    /// `output(q) = max { f(p) : map(p) = q }`, with the empty maximum equal
    /// to 0 for codomain points outside the image. Every image point must be
    /// listed in `codomain`; the supremum is then preserved and no rescale is
    /// applied.
    pub fn pushforward_onto<Q, F>(&self, map: F, codomain: Vec<Q>) -> Result<PossibilityGrid<Q>>
    where
        Q: GridPoint,
        F: Fn(&P) -> Q,
    {
        if codomain.is_empty() {
            return Err(OpmError::InvalidArgument("empty codomain".into()));
        }
        let mut values = vec![0.0_f64; codomain.len()];
        for (p, &v) in self.points.iter().zip(&self.values) {
            let image = map(p);
            let slot = codomain
                .iter()
                .position(|q| *q == image)
                .ok_or(OpmError::PointNotInDomain)?;
            values[slot] = values[slot].max(v);
        }
        Ok(PossibilityGrid {
            points: codomain,
            values,
        })
    }

    /// Pushforward whose codomain is the image of the map, ordered by first
    /// occurrence.
    pub fn pushforward<Q, F>(&self, map: F) -> PossibilityGrid<Q>
    where
        Q: GridPoint,
        F: Fn(&P) -> Q,
    {
        let mut codomain: Vec<Q> = Vec::new();
        for p in &self.points {
            let image = map(p);
            if !codomain.contains(&image) {
                codomain.push(image);
            }
        }
        self.pushforward_onto(map, codomain)
            .expect("image codomain always covers the map")
    }

    /// Pullback onto a new domain through a map into this grid's domain.
    ///
    /// Composes the possibility function with the map and renormalizes over
    /// the image, so constant maps yield the vacuous function. Fails when the
    /// whole image is incredible.
    pub fn pullback<T, F>(&self, domain: Vec<T>, map: F) -> Result<PossibilityGrid<T>>
    where
        T: GridPoint,
        F: Fn(&T) -> P,
    {
        if domain.is_empty() {
            return Err(OpmError::InvalidArgument("empty domain".into()));
        }
        let mut raw = Vec::with_capacity(domain.len());
        for t in &domain {
            let image = map(t);
            let v = self.value_at(&image).ok_or(OpmError::PointNotInDomain)?;
            raw.push(v);
        }
        if raw.iter().fold(0.0_f64, |a, &v| a.max(v)) <= 0.0 {
            return Err(OpmError::IncredibleImage);
        }
        PossibilityGrid::normalized(domain, raw)
    }

    /// Possibilistic expected value: the set of points attaining credibility
    /// 1, plus the second-difference variance when that set is a singleton on
    /// a uniform 1-D real grid (infinity otherwise).
    pub fn expect_star(&self) -> ExpectationResult<P> {
        let argmax_ix: Vec<usize> = (0..self.len()).filter(|&i| self.values[i] == 1.0).collect();
        let is_singleton = argmax_ix.len() == 1;
        let variance = if is_singleton {
            self.variance_star().unwrap_or(f64::INFINITY)
        } else {
            f64::INFINITY
        };
        ExpectationResult {
            argmax_set: argmax_ix.iter().map(|&i| self.points[i].clone()).collect(),
            is_singleton,
            variance,
        }
    }

    /// Possibilistic variance: minus the inverse of the central
    /// finite-difference second derivative at the mode.
    ///
    /// Requires a uniform 1-D real grid. Returns infinity when the argmax is
    /// not a singleton and an error when the mode sits on the grid boundary.
    pub fn variance_star(&self) -> Result<f64> {
        let spacing = self.uniform_spacing()?;
        let argmax_ix: Vec<usize> = (0..self.len()).filter(|&i| self.values[i] == 1.0).collect();
        if argmax_ix.len() != 1 {
            return Ok(f64::INFINITY);
        }
        let mode = argmax_ix[0];
        if mode == 0 || mode + 1 == self.len() {
            return Err(OpmError::BoundaryMode);
        }
        let second_diff = (self.values[mode + 1] - 2.0 * self.values[mode] + self.values[mode - 1])
            / (spacing * spacing);
        // A singleton interior mode forces both neighbours strictly below 1,
        // so the second difference is strictly negative.
        Ok(-1.0 / second_diff)
    }

    /// Spacing of the underlying real grid, when the domain is a uniform 1-D
    /// real grid with at least two points.
    fn uniform_spacing(&self) -> Result<f64> {
        let coords: Option<Vec<f64>> = self.points.iter().map(|p| p.coordinate()).collect();
        let coords = coords.ok_or_else(|| {
            OpmError::NotRealGrid("domain points carry no real coordinate".into())
        })?;
        if coords.len() < 2 {
            return Err(OpmError::NotRealGrid("fewer than two grid points".into()));
        }
        let h = coords[1] - coords[0];
        if h <= 0.0 {
            return Err(OpmError::NotRealGrid("grid not strictly increasing".into()));
        }
        let scale = h.abs().max(1e-300);
        for w in coords.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * scale {
                return Err(OpmError::NotRealGrid("non-uniform spacing".into()));
            }
        }
        Ok(h)
    }
}

/// Result of `expect_star`: the argmax set and the associated variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationResult<P> {
    /// Points attaining credibility exactly 1; never empty.
    pub argmax_set: Vec<P>,
    /// Whether the argmax set has exactly one element.
    pub is_singleton: bool,
    /// Second-difference variance at the mode; infinity whenever the argmax
    /// is not a singleton interior point of a uniform real grid.
    pub variance: f64,
}

/// Which factor of a two-factor product domain to keep when marginalizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    /// The first factor (rows).
    First,
    /// The second factor (columns).
    Second,
}

/// A joint possibility function on a two-factor product domain, stored
/// row-major with rows indexing the first factor.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPossibilityGrid<A, B> {
    rows: Vec<A>,
    cols: Vec<B>,
    values: Vec<f64>,
}

impl<A: GridPoint, B: GridPoint> JointPossibilityGrid<A, B> {
    /// Builds a joint grid from raw row-major values, sup-normalizing.
    pub fn normalized(rows: Vec<A>, cols: Vec<B>, raw: Vec<f64>) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(OpmError::InvalidArgument("empty factor domain".into()));
        }
        if raw.len() != rows.len() * cols.len() {
            return Err(OpmError::DimensionMismatch(format!(
                "{} values vs {}x{} domain",
                raw.len(),
                rows.len(),
                cols.len()
            )));
        }
        let max = checked_max(&raw)?;
        let values = raw.into_iter().map(|v| v / max).collect();
        Ok(Self { rows, cols, values })
    }

    /// Product of two marginal possibility functions.
    pub fn from_product(first: &PossibilityGrid<A>, second: &PossibilityGrid<B>) -> Self {
        let mut values = Vec::with_capacity(first.len() * second.len());
        for &a in first.values() {
            for &b in second.values() {
                values.push(a * b);
            }
        }
        Self {
            rows: first.points().to_vec(),
            cols: second.points().to_vec(),
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn rows(&self) -> &[A] {
        &self.rows
    }

    pub fn cols(&self) -> &[B] {
        &self.cols
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols.len() + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Marginal possibility function over the kept factor: the maximum over
    /// the discarded factor. The supremum 1 is inherited, no rescale needed.
    pub fn marginal_first(&self) -> PossibilityGrid<A> {
        let values = (0..self.n_rows())
            .map(|i| (0..self.n_cols()).fold(0.0_f64, |a, j| a.max(self.value(i, j))))
            .collect();
        PossibilityGrid {
            points: self.rows.clone(),
            values,
        }
    }

    /// See [`JointPossibilityGrid::marginal_first`].
    pub fn marginal_second(&self) -> PossibilityGrid<B> {
        let values = (0..self.n_cols())
            .map(|j| (0..self.n_rows()).fold(0.0_f64, |a, i| a.max(self.value(i, j))))
            .collect();
        PossibilityGrid {
            points: self.cols.clone(),
            values,
        }
    }

    /// Conditional possibility function over the first factor given a point
    /// of the second factor: the column divided by its maximum. Fails on an
    /// incredible (zero-marginal) point.
    pub fn condition_on_second(&self, col: usize) -> Result<PossibilityGrid<A>> {
        if col >= self.n_cols() {
            return Err(OpmError::PointNotInDomain);
        }
        let col_max = (0..self.n_rows()).fold(0.0_f64, |a, i| a.max(self.value(i, col)));
        if col_max <= 0.0 {
            return Err(OpmError::IncrediblePoint);
        }
        let values = (0..self.n_rows())
            .map(|i| self.value(i, col) / col_max)
            .collect();
        Ok(PossibilityGrid {
            points: self.rows.clone(),
            values,
        })
    }

    /// See [`JointPossibilityGrid::condition_on_second`].
    pub fn condition_on_first(&self, row: usize) -> Result<PossibilityGrid<B>> {
        if row >= self.n_rows() {
            return Err(OpmError::PointNotInDomain);
        }
        let row_max = (0..self.n_cols()).fold(0.0_f64, |a, j| a.max(self.value(row, j)));
        if row_max <= 0.0 {
            return Err(OpmError::IncrediblePoint);
        }
        let values = (0..self.n_cols())
            .map(|j| self.value(row, j) / row_max)
            .collect();
        Ok(PossibilityGrid {
            points: self.cols.clone(),
            values,
        })
    }

    /// Least informative independent description dominating this joint:
    /// cellwise square root of the product of the two marginals.
    pub fn independence_envelope(&self) -> Self {
        let m_first = self.marginal_first();
        let m_second = self.marginal_second();
        let mut values = Vec::with_capacity(self.values.len());
        for &a in m_first.values() {
            for &b in m_second.values() {
                values.push((a * b).sqrt());
            }
        }
        Self {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            values,
        }
    }

    /// True when the joint equals the product of its marginals within `tol`
    /// in the max norm.
    pub fn is_independent(&self, tol: f64) -> bool {
        let m_first = self.marginal_first();
        let m_second = self.marginal_second();
        for (i, &a) in m_first.values().iter().enumerate() {
            for (j, &b) in m_second.values().iter().enumerate() {
                if (self.value(i, j) - a * b).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}
