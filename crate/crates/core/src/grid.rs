//! Uniform grid specification and collocated scalar/vector fields.
//!
//! Cells are squares of side `dx`; values live at cell centers. Storage is
//! row-major with the row index `j` running along the vertical axis, so the
//! flat index of cell `(i, j)` is `j * width + i`. The horizontal axis wraps
//! periodically everywhere in this crate.

use crate::error::{CoreError, Result};

/// Dimensions of the uniform grid plus the physical width it spans.
///
/// Cells are square, so the physical height is implied:
/// `domain_height = height_cells * dx` with `dx = domain_width / width_cells`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    width_cells: usize,
    height_cells: usize,
    domain_width: f64,
}

impl GridSpec {
    pub fn new(width_cells: usize, height_cells: usize, domain_width: f64) -> Result<Self> {
        if width_cells < 8 || height_cells < 8 {
            return Err(CoreError::Config(format!(
                "grid must be at least 8x8 cells, got {width_cells}x{height_cells}"
            )));
        }
        if !(domain_width.is_finite() && domain_width > 0.0) {
            return Err(CoreError::Config(format!(
                "domain width must be positive, got {domain_width}"
            )));
        }
        Ok(Self {
            width_cells,
            height_cells,
            domain_width,
        })
    }

    /// Grid over the standard tube domain of width 3.
    pub fn standard(width_cells: usize, height_cells: usize) -> Result<Self> {
        Self::new(width_cells, height_cells, 3.0)
    }

    /// Validates that an explicitly given domain height is consistent with
    /// square cells.
    pub fn with_domain_height(
        width_cells: usize,
        height_cells: usize,
        domain_width: f64,
        domain_height: f64,
    ) -> Result<Self> {
        let grid = Self::new(width_cells, height_cells, domain_width)?;
        if (grid.domain_height() - domain_height).abs() > 1e-12 * domain_height.abs().max(1.0) {
            return Err(CoreError::Config(format!(
                "cells are not square: {width_cells}x{height_cells} over \
                 {domain_width}x{domain_height}"
            )));
        }
        Ok(grid)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width_cells
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height_cells
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width_cells * self.height_cells
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.domain_width / self.width_cells as f64
    }

    #[inline]
    pub fn domain_width(&self) -> f64 {
        self.domain_width
    }

    #[inline]
    pub fn domain_height(&self) -> f64 {
        self.height_cells as f64 * self.dx()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.width_cells && j < self.height_cells);
        j * self.width_cells + i
    }

    /// Horizontal neighbor index with periodic wrap.
    #[inline]
    pub fn wrap_i(&self, i: isize) -> usize {
        let w = self.width_cells as isize;
        (((i % w) + w) % w) as usize
    }

    /// Physical x-coordinate of the center of column `i`.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    /// Physical y-coordinate of the center of row `j`.
    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dx()
    }

    /// Shortest horizontal separation under the periodic wrap.
    #[inline]
    pub fn periodic_dx(&self, x0: f64, x1: f64) -> f64 {
        let d = (x0 - x1).abs() % self.domain_width;
        d.min(self.domain_width - d)
    }
}

/// One real value per grid cell, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CoreError::Config(format!(
                "field length {} does not match grid {}x{}",
                values.len(),
                grid.width(),
                grid.height()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Evaluate `f(x, y)` at every cell center.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.height() {
            for i in 0..grid.width() {
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.grid.idx(i, j);
        self.values[idx] = v;
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Collocated velocity field: u and v components on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    u: ScalarField,
    v: ScalarField,
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            u: ScalarField::zeros(grid),
            v: ScalarField::zeros(grid),
        }
    }

    pub fn from_components(u: ScalarField, v: ScalarField) -> Result<Self> {
        if u.grid() != v.grid() {
            return Err(CoreError::Config(
                "vector components must share one grid".into(),
            ));
        }
        Ok(Self { u, v })
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.u.grid()
    }

    #[inline]
    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    #[inline]
    pub fn v(&self) -> &ScalarField {
        &self.v
    }

    #[inline]
    pub fn u_mut(&mut self) -> &mut ScalarField {
        &mut self.u
    }

    #[inline]
    pub fn v_mut(&mut self) -> &mut ScalarField {
        &mut self.v
    }

    pub fn max_speed(&self) -> f64 {
        self.u
            .values()
            .iter()
            .zip(self.v.values())
            .fold(0.0f64, |m, (u, v)| m.max((u * u + v * v).sqrt()))
    }
}

/// Cyclic column shift: column `i` of the output is column `(i - s) mod W`
/// of the input, i.e. content moves `s` columns to the right.
pub fn shift_horizontal(field: &ScalarField, s: i64) -> ScalarField {
    let grid = field.grid();
    let mut out = ScalarField::zeros(grid);
    let w = grid.width() as i64;
    let shift = ((s % w) + w) % w;
    for j in 0..grid.height() {
        for i in 0..grid.width() {
            let src = ((i as i64 - shift + w) % w) as usize;
            out.set(i, j, field.at(src, j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> ScalarField {
        let grid = GridSpec::new(12, 8, 3.0).unwrap();
        ScalarField::from_fn(grid, |x, y| (x * 7.3).sin() + y * 0.1)
    }

    #[test]
    fn grid_rejects_small_dims() {
        assert!(GridSpec::new(4, 64, 3.0).is_err());
        assert!(GridSpec::new(96, 7, 3.0).is_err());
    }

    #[test]
    fn standard_grid_has_square_cells() {
        let g = GridSpec::standard(96, 64).unwrap();
        assert!((g.dx() - 3.0 / 96.0).abs() < 1e-15);
        assert!((g.domain_height() - 2.0).abs() < 1e-15);
        assert!(GridSpec::with_domain_height(96, 64, 3.0, 2.0).is_ok());
        assert!(GridSpec::with_domain_height(96, 64, 3.0, 1.0).is_err());
    }

    #[test]
    fn shift_zero_is_identity() {
        let f = sample_field();
        assert_eq!(shift_horizontal(&f, 0), f);
    }

    #[test]
    fn shift_full_width_is_identity() {
        let f = sample_field();
        assert_eq!(shift_horizontal(&f, f.grid().width() as i64), f);
        assert_eq!(shift_horizontal(&f, -(f.grid().width() as i64)), f);
    }

    #[test]
    fn shift_roundtrip_matches_direct_indexing() {
        let f = sample_field();
        let back = shift_horizontal(&shift_horizontal(&f, 3), -3);
        assert_eq!(back, f);
        // direct check: shifting by 3 moves column 0 to column 3
        let shifted = shift_horizontal(&f, 3);
        for j in 0..f.grid().height() {
            assert_eq!(shifted.at(3, j), f.at(0, j));
        }
    }

    #[test]
    fn shift_composition_is_exact() {
        let f = sample_field();
        let mut rng = crate::rng::SplitMix64::new(3);
        for _ in 0..50 {
            let a = rng.next_u64() as i64 % 40 - 20;
            let b = rng.next_u64() as i64 % 40 - 20;
            let two = shift_horizontal(&shift_horizontal(&f, a), b);
            let one = shift_horizontal(&f, a + b);
            assert_eq!(two, one);
        }
    }
}
