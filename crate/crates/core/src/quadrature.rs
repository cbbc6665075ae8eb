//! Midpoint-rule quadrature grids on group charts.
//!
//! Nodes sit at cell centres, so no node ever lands on the boundary of a
//! chart (`a = 0`, `b̌ = 0`). A scale axis may be laid out uniformly in `ln a`;
//! the rule is then the midpoint rule in the logarithmic coordinate and the
//! cell width becomes `a·Δ(ln a)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{AxisKind, GroupDescriptor};
use crate::sum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Uniform,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridAxis {
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Self {
        GridAxis { lo, hi, count, spacing: Spacing::Uniform }
    }

    pub fn log(lo: f64, hi: f64, count: usize) -> Self {
        GridAxis { lo, hi, count, spacing: Spacing::Log }
    }

    /// Coordinate in which the nodes are equispaced.
    pub fn to_internal(&self, x: f64) -> f64 {
        match self.spacing {
            Spacing::Uniform => x,
            Spacing::Log => x.ln(),
        }
    }

    pub fn from_internal(&self, u: f64) -> f64 {
        match self.spacing {
            Spacing::Uniform => u,
            Spacing::Log => u.exp(),
        }
    }

    /// Node spacing in the internal coordinate.
    pub fn step(&self) -> f64 {
        (self.to_internal(self.hi) - self.to_internal(self.lo)) / self.count as f64
    }

    /// First node in the internal coordinate.
    pub fn first(&self) -> f64 {
        self.to_internal(self.lo) + 0.5 * self.step()
    }

    fn nodes_and_widths(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.step();
        let u0 = self.first();
        (0..self.count)
            .map(|i| {
                let x = self.from_internal(u0 + i as f64 * h);
                let w = match self.spacing {
                    Spacing::Uniform => h,
                    Spacing::Log => x * h,
                };
                (x, w)
            })
            .unzip()
    }
}

/// `axes` grown along the flagged axes by up to half their cell count at
/// each end, in whole cells and without leaving `bounds`. Returns the grown
/// axes and, per axis, the index of the first original cell.
pub fn extend_axes(axes: &[GridAxis], grow: &[bool], bounds: &[(f64, f64)]) -> (Vec<GridAxis>, Vec<usize>) {
    let mut out = Vec::with_capacity(axes.len());
    let mut offsets = Vec::with_capacity(axes.len());
    for ((ax, &g), &(blo, bhi)) in axes.iter().zip(grow).zip(bounds) {
        if !g {
            out.push(*ax);
            offsets.push(0);
            continue;
        }
        let h = ax.step();
        let internal =
            |x: f64| if ax.spacing == Spacing::Log && x <= 0.0 { f64::NEG_INFINITY } else { ax.to_internal(x) };
        let (u0, u1) = (ax.to_internal(ax.lo), ax.to_internal(ax.hi));
        let half = (ax.count / 2) as f64;
        let room = |gap: f64| (gap / h + 1e-9).floor().clamp(0.0, half);
        let k_lo = room(u0 - internal(blo));
        let k_hi = room(internal(bhi) - u1);
        out.push(GridAxis {
            lo: ax.from_internal(u0 - k_lo * h),
            hi: ax.from_internal(u1 + k_hi * h),
            count: ax.count + k_lo as usize + k_hi as usize,
            spacing: ax.spacing,
        });
        offsets.push(k_lo as usize);
    }
    (out, offsets)
}

/// Tensor-product midpoint grid with Haar weights.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    group: GroupDescriptor,
    axes: Vec<GridAxis>,
    axis_nodes: Vec<Vec<f64>>,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

/// Uniform midpoint grid over `bounds` with `resolution` cells per axis.
pub fn haar_grid(group: &GroupDescriptor, bounds: &[(f64, f64)], resolution: &[usize]) -> Result<QuadratureGrid> {
    if bounds.len() != group.dim() || resolution.len() != group.dim() {
        return Err(Error::InvalidDimension(format!("{} needs {} bounds and resolutions", group.name(), group.dim())));
    }
    let axes = bounds.iter().zip(resolution).map(|(&(lo, hi), &n)| GridAxis::uniform(lo, hi, n)).collect();
    haar_grid_axes(group, axes)
}

/// Midpoint grid with explicit per-axis layouts.
pub fn haar_grid_axes(group: &GroupDescriptor, axes: Vec<GridAxis>) -> Result<QuadratureGrid> {
    if axes.len() != group.dim() {
        return Err(Error::InvalidDimension(format!("{} needs {} axes", group.name(), group.dim())));
    }
    let mut clipped = Vec::with_capacity(axes.len());
    for (ax, info) in axes.into_iter().zip(group.axes()) {
        if ax.count < 2 {
            return Err(Error::InvalidParameter(format!("axis {} needs at least 2 cells", info.label)));
        }
        let (mut lo, mut hi) = (ax.lo.min(ax.hi), ax.lo.max(ax.hi));
        match info.kind {
            AxisKind::Real => {}
            AxisKind::Positive => lo = lo.max(0.0),
            AxisKind::Circle => {
                lo = lo.max(0.0);
                hi = hi.min(2.0 * PI);
            }
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::EmptyBox(format!("axis {} has empty range [{}, {}]", info.label, ax.lo, ax.hi)));
        }
        if ax.spacing == Spacing::Log && lo <= 0.0 {
            return Err(Error::InvalidParameter(format!("log axis {} must start above 0", info.label)));
        }
        clipped.push(GridAxis { lo, hi, count: ax.count, spacing: ax.spacing });
    }
    let (axis_nodes, axis_widths): (Vec<_>, Vec<_>) = clipped.iter().map(|a| a.nodes_and_widths()).unzip();
    let d = clipped.len();
    let total: usize = clipped.iter().map(|a| a.count).product();
    let mut coords = Vec::with_capacity(total * d);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0; d];
    for _ in 0..total {
        let mut vol = 1.0;
        for k in 0..d {
            point[k] = axis_nodes[k][idx[k]];
            vol *= axis_widths[k][idx[k]];
        }
        let w = vol * group.haar_density(&point);
        if !(w > 0.0) {
            return Err(Error::Domain(format!("non-positive Haar weight at {:?}", point)));
        }
        coords.extend_from_slice(&point);
        weights.push(w);
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < clipped[k].count {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(QuadratureGrid { group: group.clone(), axes: clipped, axis_nodes, coords, weights })
}

impl QuadratureGrid {
    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn axis_nodes(&self, axis: usize) -> &[f64] {
        &self.axis_nodes[axis]
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.axes.iter().map(|a| (a.lo, a.hi)).collect()
    }

    /// Row-major multi-index of node `i` (last axis fastest).
    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = i % self.axes[k].count;
            i /= self.axes[k].count;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.count + i)
    }

    /// Index of the node at `x`, if `x` is a node up to `tol` in internal coordinates.
    pub fn locate(&self, x: &[f64], tol: f64) -> Option<usize> {
        let mut idx = Vec::with_capacity(self.dim());
        for (k, ax) in self.axes.iter().enumerate() {
            if ax.spacing == Spacing::Log && x[k] <= 0.0 {
                return None;
            }
            let u = (ax.to_internal(x[k]) - ax.first()) / ax.step();
            let j = u.round();
            if (u - j).abs() > tol || j < 0.0 || j >= ax.count as f64 {
                return None;
            }
            idx.push(j as usize);
        }
        Some(self.flat_index(&idx))
    }

    pub fn total_weight(&self) -> f64 {
        sum::sum(self.weights.iter().copied())
    }

    /// `Σ f(node) w(node)`, evaluated in parallel and reduced in node order.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let terms: Vec<f64> = (0..self.len()).into_par_iter().map(|i| f(self.node(i)) * self.weights[i]).collect();
        sum::sum(terms)
    }

    pub fn integrate_c<F>(&self, f: F) -> Complex64
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let terms: Vec<Complex64> =
            (0..self.len()).into_par_iter().map(|i| f(self.node(i)) * self.weights[i]).collect();
        sum::sum_c(terms)
    }

    /// Nodes whose multi-index lies in `offset[k] .. offset[k] + count[k]`
    /// on every axis.
    pub fn sub_box_mask(&self, offset: &[usize], count: &[usize]) -> Vec<bool> {
        (0..self.len())
            .map(|i| self.multi_index(i).iter().zip(offset).zip(count).all(|((&j, &o), &c)| j >= o && j < o + c))
            .collect()
    }

    /// Nodes lying inside the closed box `bounds`.
    pub fn box_mask(&self, bounds: &[(f64, f64)]) -> Vec<bool> {
        (0..self.len()).map(|i| self.node(i).iter().zip(bounds).all(|(&x, &(lo, hi))| x >= lo && x <= hi)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_affine, make_polarized_wh};

    #[test]
    fn affine_grid_shape_and_weights() {
        let g = make_affine(1).unwrap();
        let q = haar_grid(&g, &[(-1.0, 1.0), (0.5, 2.0)], &[8, 8]).unwrap();
        assert_eq!(q.len(), 64);
        assert!(q.weights().iter().all(|&w| w > 0.0));
        assert!((0..q.len()).all(|i| g.contains(q.node(i))));
    }

    #[test]
    fn extended_axes_keep_the_original_nodes() {
        let g = make_affine(1).unwrap();
        let axes = vec![GridAxis::uniform(-8.0, 8.0, 64), GridAxis::log(0.25, 4.0, 16)];
        let (ext, off) = extend_axes(&axes, &[true, true], &[(-15.0, 15.0), (0.0, f64::INFINITY)]);
        assert_eq!(off, vec![28, 8]);
        assert_eq!((ext[0].count, ext[1].count), (120, 32));
        assert!((ext[0].lo + 15.0).abs() < 1e-12 && (ext[1].hi - 16.0).abs() < 1e-12);
        let small = haar_grid_axes(&g, axes).unwrap();
        let big = haar_grid_axes(&g, ext).unwrap();
        let mask = big.sub_box_mask(&off, &[64, 16]);
        let inner: Vec<usize> = (0..big.len()).filter(|&i| mask[i]).collect();
        assert_eq!(inner.len(), small.len());
        for (k, &i) in inner.iter().enumerate() {
            assert!(small.node(k).iter().zip(big.node(i)).all(|(a, b)| (a - b).abs() < 1e-12));
            assert!((small.weight(k) / big.weight(i) - 1.0).abs() < 1e-12);
        }
        let (same, off) = extend_axes(&small.axes, &[false, true], &[(-8.0, 8.0), (0.25, 4.0)]);
        assert_eq!(same, small.axes);
        assert_eq!(off, vec![0, 0]);
    }

    #[test]
    fn wh_total_weight() {
        let g = make_polarized_wh(1).unwrap();
        let q = haar_grid(&g, &[(-1.0, 1.0); 3], &[4, 4, 4]).unwrap();
        assert!((q.total_weight() - 8.0 / (2.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn empty_intersection_rejected() {
        let g = make_affine(1).unwrap();
        assert!(matches!(haar_grid(&g, &[(-1.0, 1.0), (-2.0, -1.0)], &[4, 4]), Err(Error::EmptyBox(_))));
        assert!(haar_grid(&g, &[(-1.0, 1.0), (0.5, 2.0)], &[4, 1]).is_err());
    }

    #[test]
    fn positive_axis_clipped_away_from_zero() {
        let g = make_affine(1).unwrap();
        let q = haar_grid(&g, &[(-1.0, 1.0), (-1.0, 1.0)], &[2, 4]).unwrap();
        assert_eq!(q.axes()[1].lo, 0.0);
        assert!(q.axis_nodes(1)[0] > 0.0);
    }

    // Midpoint rule on a Gaussian that does not vanish at the box edge:
    // error ratio under doubling should approach 4.
    #[test]
    fn midpoint_order_is_two() {
        let g = make_polarized_wh(1).unwrap();
        let f = |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp();
        let one_d = 0.746_824_132_812_427_0_f64; // ∫_0^1 e^{-x²} dx
        let exact = one_d.powi(3) / (2.0 * PI);
        let err = |n: usize| {
            let q = haar_grid(&g, &[(0.0, 1.0); 3], &[n, n, n]).unwrap();
            (q.integrate(f) - exact).abs()
        };
        let (e1, e2) = (err(8), err(16));
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn log_axis_integrates_power() {
        let g = make_affine(1).unwrap();
        let q = haar_grid_axes(&g, vec![GridAxis::uniform(0.0, 1.0, 2), GridAxis::log(0.25, 4.0, 64)]).unwrap();
        // ∫ a^{-2} da over [1/4, 4] = 4 - 1/4
        let v = q.integrate(|_| 1.0);
        assert!((v - 3.75).abs() < 2e-3, "{v}");
        assert!(q.locate(q.node(37), 1e-9) == Some(37));
    }
}
