//! Sampled vectors of `L²(R^n)` (or of a half-space for the exotic orbit).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum;

/// One axis of a uniform sampling grid: nodes `offset + j·spacing`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateAxis {
    pub offset: f64,
    pub spacing: f64,
    pub count: usize,
}

impl StateAxis {
    /// `count` nodes on `[-half_width, half_width)` including 0 when `count` is even.
    pub fn centered(half_width: f64, count: usize) -> Self {
        let spacing = 2.0 * half_width / count as f64;
        StateAxis { offset: -half_width, spacing, count }
    }

    /// `count` nodes on `(0, length)` at half-cell offset from 0.
    pub fn half_line(length: f64, count: usize) -> Self {
        let spacing = length / count as f64;
        StateAxis { offset: 0.5 * spacing, spacing, count }
    }

    pub fn node(&self, j: usize) -> f64 {
        self.offset + j as f64 * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.node(j)).collect()
    }

    /// Centre of the sampled interval.
    pub fn center(&self) -> f64 {
        self.offset + 0.5 * (self.count as f64 - 1.0) * self.spacing
    }

    /// Half of the sampled extent (count·spacing / 2).
    pub fn half_extent(&self) -> f64 {
        0.5 * self.count as f64 * self.spacing
    }

    /// Angular Nyquist frequency `π / spacing`.
    /// One period `count·spacing` of the axis about its centre, widened by
    /// half a cell on each side.
    pub fn period_box(&self) -> (f64, f64) {
        let h = 0.5 * (self.count as f64 + 1.0) * self.spacing;
        (self.center() - h, self.center() + h)
    }

    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.spacing
    }

    /// DFT angular frequencies in FFT order.
    pub fn fft_frequencies(&self) -> Vec<f64> {
        let n = self.count as i64;
        let dw = 2.0 * std::f64::consts::PI / (self.count as f64 * self.spacing);
        (0..n).map(|k| if k < (n + 1) / 2 { k as f64 * dw } else { (k - n) as f64 * dw }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateGrid {
    pub axes: Vec<StateAxis>,
}

impl StateGrid {
    pub fn new(axes: Vec<StateAxis>) -> Self {
        StateGrid { axes }
    }

    /// Cube `[-half_width, half_width)^n` with `count` nodes per axis.
    pub fn centered(n: usize, half_width: f64, count: usize) -> Self {
        StateGrid { axes: vec![StateAxis::centered(half_width, count); n] }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    /// Coordinates of flat index `i` (row-major, last axis fastest).
    pub fn point(&self, mut i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for k in (0..self.dim()).rev() {
            let c = self.axes[k].count;
            x[k] = self.axes[k].node(i % c);
            i /= c;
        }
        x
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Complex samples on a [`StateGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedState {
    grid: StateGrid,
    data: Vec<Complex64>,
}

impl DiscretizedState {
    pub fn new(grid: StateGrid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} samples for a grid of {}", data.len(), grid.len())));
        }
        Ok(DiscretizedState { grid, data })
    }

    pub fn zeros(grid: StateGrid) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); grid.len()];
        DiscretizedState { grid, data }
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(grid: StateGrid, f: F) -> Self {
        let data = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        DiscretizedState { grid, data }
    }

    pub fn grid(&self) -> &StateGrid {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn with_data(&self, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        DiscretizedState { grid: self.grid.clone(), data }
    }

    pub fn compatible(&self, other: &DiscretizedState) -> bool {
        self.grid == other.grid
    }

    fn require_compatible(&self, other: &DiscretizedState) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch("states live on different grids".into()))
        }
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &DiscretizedState) -> Result<Complex64> {
        self.require_compatible(other)?;
        Ok(sum::sum_c(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b)) * self.grid.cell_volume())
    }

    pub fn norm_sq(&self) -> f64 {
        sum::sum(self.data.iter().map(|z| z.norm_sqr())) * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        self.with_data(self.data.iter().map(|z| z * c).collect())
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scaled(Complex64::new(1.0 / n, 0.0))
    }

    pub fn add(&self, other: &DiscretizedState) -> Result<Self> {
        self.require_compatible(other)?;
        Ok(self.with_data(self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &DiscretizedState) -> Result<Self> {
        self.require_compatible(other)?;
        Ok(self.with_data(self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect()))
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &DiscretizedState) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Smallest half-width around the grid centre, per axis, outside of which
    /// the fraction of `‖f‖²` is below `eps`.
    pub fn support_radius(&self, eps: f64) -> Vec<f64> {
        let shape = self.grid.shape();
        let total = self.norm_sq() / self.grid.cell_volume();
        (0..self.grid.dim())
            .map(|k| {
                let ax = self.grid.axes[k];
                let marginal = marginal(&self.data, &shape, k);
                let c = ax.center();
                let mut order: Vec<usize> = (0..ax.count).collect();
                order.sort_by(|&i, &j| (ax.node(j) - c).abs().total_cmp(&(ax.node(i) - c).abs()));
                let mut tail = 0.0;
                let mut radius = 0.0;
                for i in order {
                    tail += marginal[i];
                    if tail > eps * total {
                        radius = (ax.node(i) - c).abs();
                        break;
                    }
                }
                radius
            })
            .collect()
    }
}

fn marginal(data: &[Complex64], shape: &[usize], axis: usize) -> Vec<f64> {
    let inner: usize = shape[axis + 1..].iter().product();
    let n = shape[axis];
    let mut out = vec![0.0; n];
    for (i, z) in data.iter().enumerate() {
        out[(i / inner) % n] += z.norm_sqr();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(grid: &StateGrid) -> DiscretizedState {
        DiscretizedState::from_fn(grid.clone(), |x| Complex64::new(PI.powf(-0.25) * (-0.5 * x[0] * x[0]).exp(), 0.0))
    }

    #[test]
    fn unit_gaussian_normalized() {
        let g = gaussian(&StateGrid::centered(1, 8.0, 256));
        let v = g.inner(&g).unwrap();
        assert!((v.re - 1.0).abs() < 1e-10 && v.im == 0.0);
    }

    #[test]
    fn linear_in_second_slot() {
        let grid = StateGrid::centered(1, 8.0, 64);
        let f = gaussian(&grid);
        let g = DiscretizedState::from_fn(grid, |x| Complex64::new(x[0].cos(), x[0].sin()) * (-x[0] * x[0]).exp());
        let i = Complex64::i();
        let lhs = f.inner(&g.scaled(i)).unwrap();
        let rhs = i * f.inner(&g).unwrap();
        assert!((lhs - rhs).norm() < 1e-15);
        let swap = g.inner(&f).unwrap().conj();
        assert!((swap - f.inner(&g).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = DiscretizedState::zeros(StateGrid::centered(1, 8.0, 64));
        let b = DiscretizedState::zeros(StateGrid::centered(1, 8.0, 128));
        assert!(matches!(a.inner(&b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn half_line_avoids_origin() {
        let ax = StateAxis::half_line(8.0, 64);
        assert!((ax.node(0) - 0.0625).abs() < 1e-15);
        assert_eq!(StateAxis::centered(8.0, 256).node(128), 0.0);
    }

    #[test]
    fn support_radius_of_gaussian() {
        let g = gaussian(&StateGrid::centered(1, 16.0, 512));
        let r = g.support_radius(1e-12)[0];
        assert!(r > 4.5 && r < 6.5, "{r}");
    }
}
