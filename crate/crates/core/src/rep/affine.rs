use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dsp;
use crate::error::{Error, Result};
use crate::group::{make_affine, GroupDescriptor};
use crate::quadrature::QuadratureGrid;
use crate::state::DiscretizedState;

use super::{bandwidth, phase, Representation};

const ALIAS_EPS: f64 = 1e-12;

/// `(U(b,a)f)(x) = a^{-n/2} f((x − b)/a)`.
///
/// Dilations resample the band-limited interpolant, so they are exact only
/// while the dilated spectrum stays below Nyquist and the dilated support stays
/// inside the box; [`Representation::act`] refuses anything else.
pub struct AffineRep {
    n: usize,
    group: GroupDescriptor,
}

pub fn affine_rep(n: usize) -> Result<AffineRep> {
    Ok(AffineRep { n, group: make_affine(n)? })
}

impl AffineRep {
    fn check_safe(&self, b: &[f64], a: f64, f: &DiscretizedState) -> Result<()> {
        let band = bandwidth(f, ALIAS_EPS);
        let radius = f.support_radius(ALIAS_EPS);
        for (k, ax) in f.grid().axes.iter().enumerate() {
            if band[k] / a > ax.nyquist() {
                return Err(Error::Unsafe(format!(
                    "a = {a} compresses the spectrum on axis {k} past Nyquist ({} > {})",
                    band[k] / a,
                    ax.nyquist()
                )));
            }
            if (b[k] - ax.center()).abs() + a * radius[k] > ax.half_extent() {
                return Err(Error::Unsafe(format!("(b, a) = ({}, {a}) pushes the support off axis {k}", b[k])));
            }
        }
        Ok(())
    }

    /// Angular frequencies of the dual lattice, one vector per axis.
    fn omegas(f: &DiscretizedState) -> Vec<Vec<f64>> {
        f.grid().axes.iter().map(|ax| dsp::dual_axis(ax).nodes()).collect()
    }

    /// `ψ̂(a·ω)` on the dual lattice, `ψ̂(ξ) = ∫ ψ(x) e^{-iξ·x} dx`.
    fn dilated_spectrum(psi: &DiscretizedState, omegas: &[Vec<f64>], a: f64) -> Vec<Complex64> {
        let mut data = psi.data().to_vec();
        let shape = psi.grid().shape();
        for (k, ax) in psi.grid().axes.iter().enumerate() {
            let dw = if omegas[k].len() > 1 { omegas[k][1] - omegas[k][0] } else { 0.0 };
            dsp::dtft_axis(&mut data, &shape, k, ax, a * omegas[k][0], a * dw, true);
        }
        data
    }

    fn is_own_grid(&self, grid: &QuadratureGrid) -> bool {
        grid.group().name() == self.group.name()
    }
}

impl Representation for AffineRep {
    fn label(&self) -> String {
        format!("affine[n={}]", self.n)
    }

    fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    fn check_state(&self, f: &DiscretizedState) -> Result<()> {
        if f.grid().dim() != self.n {
            return Err(Error::InvalidDimension(format!(
                "state has dimension {}, expected {}",
                f.grid().dim(),
                self.n
            )));
        }
        Ok(())
    }

    fn act(&self, g: &[f64], f: &DiscretizedState) -> Result<DiscretizedState> {
        self.check_state(f)?;
        let n = self.n;
        let (b, a) = (&g[..n], g[n]);
        if !(a > 0.0) {
            return Err(Error::Domain(format!("dilation a = {a} must be positive")));
        }
        if a == 1.0 && b.iter().all(|v| *v == 0.0) {
            return Ok(f.clone());
        }
        self.check_safe(b, a, f)?;
        let grid = f.grid().clone();
        let shape = grid.shape();
        let mut data = f.data().to_vec();
        for k in 0..n {
            let ax = grid.axes[k];
            let targets: Vec<f64> = ax.nodes().iter().map(|x| (x - b[k]) / a).collect();
            data = dsp::resample_axis(&data, &shape, k, &ax, &targets, false);
        }
        let scale = a.powf(-0.5 * n as f64);
        for z in data.iter_mut() {
            *z *= scale;
        }
        DiscretizedState::new(grid, data)
    }

    /// `a` between the smallest dilation that keeps the spectrum below Nyquist
    /// and the largest that keeps the support inside the box; `b` within the box.
    fn safe_bounds(&self, f: &DiscretizedState) -> Vec<(f64, f64)> {
        let band = bandwidth(f, ALIAS_EPS);
        let radius = f.support_radius(ALIAS_EPS);
        let axes = &f.grid().axes;
        let mut out: Vec<(f64, f64)> =
            axes.iter().map(|ax| (ax.center() - ax.half_extent(), ax.center() + ax.half_extent())).collect();
        let a_min = axes.iter().zip(&band).map(|(ax, w)| w / ax.nyquist()).fold(0.0, f64::max);
        let a_max =
            axes.iter().zip(&radius).map(|(ax, r)| ax.half_extent() / r.max(1e-300)).fold(f64::INFINITY, f64::min);
        out.push((a_min, a_max));
        out
    }

    /// The frequency-domain path samples `ψ̂(aω)` directly, so every `a > 0`
    /// is allowed; `b` is periodic over the box.
    fn coefficient_bounds(&self, f: &DiscretizedState) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = f.grid().axes.iter().map(|ax| ax.period_box()).collect();
        out.push((0.0, f64::INFINITY));
        out
    }

    /// `b` is periodic with the box length; `a` is not periodic.
    fn coefficient_periods(&self, f: &DiscretizedState) -> Vec<Option<f64>> {
        let mut out: Vec<Option<f64>> = f.grid().axes.iter().map(|ax| Some(ax.count as f64 * ax.spacing)).collect();
        out.push(None);
        out
    }

    /// Frequency-domain evaluation:
    /// `c(b,a) = (2π)^{-n} a^{n/2} Σ_ω e^{iω·b} conj(ψ̂(aω)) φ̂(ω) Δω^n`.
    fn coefficients_on(
        &self,
        psi: &DiscretizedState,
        phi: &DiscretizedState,
        grid: &QuadratureGrid,
    ) -> Result<Vec<Complex64>> {
        if !psi.compatible(phi) {
            return Err(Error::GridMismatch("ψ and φ live on different grids".into()));
        }
        self.check_state(psi)?;
        if !self.is_own_grid(grid) {
            return super::generic_coefficients(self, psi, phi, grid);
        }
        let n = self.n;
        let omegas = Self::omegas(phi);
        let dw: f64 = phi.grid().axes.iter().map(|ax| dsp::dual_axis(ax).spacing).product();
        let phi_hat = Self::dilated_spectrum(phi, &omegas, 1.0);
        let shape = phi.grid().shape();
        let b_nodes: Vec<&[f64]> = (0..n).map(|k| grid.axis_nodes(k)).collect();
        let expo: Vec<Vec<Complex64>> = (0..n)
            .map(|k| b_nodes[k].iter().flat_map(|&b| omegas[k].iter().map(move |&w| phase(w * b))).collect())
            .collect();
        let levels: Vec<Vec<Complex64>> = grid
            .axis_nodes(n)
            .par_iter()
            .map(|&a| {
                let psi_hat = Self::dilated_spectrum(psi, &omegas, a);
                let scale = a.powf(0.5 * n as f64) * dw * (2.0 * PI).powi(-(n as i32));
                let mut data: Vec<Complex64> =
                    psi_hat.iter().zip(&phi_hat).map(|(u, v)| u.conj() * v * scale).collect();
                let mut s = shape.clone();
                for k in 0..n {
                    let (d, ns) = dsp::contract_axis(&data, &s, k, &expo[k], b_nodes[k].len());
                    data = d;
                    s = ns;
                }
                data
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (i, c) in out.iter_mut().enumerate() {
            let idx = grid.multi_index(i);
            let level = &levels[idx[n]];
            let flat = idx[..n].iter().zip(&b_nodes).fold(0, |acc, (&j, nodes)| acc * nodes.len() + j);
            *c = level[flat];
        }
        Ok(out)
    }

    /// Frequency-domain synthesis, one dilation level at a time.
    fn synthesize_on(
        &self,
        coeffs: &[Complex64],
        grid: &QuadratureGrid,
        psi: &DiscretizedState,
    ) -> Result<DiscretizedState> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} coefficients for {} nodes", coeffs.len(), grid.len())));
        }
        self.check_state(psi)?;
        if !self.is_own_grid(grid) {
            return super::generic_synthesis(self, coeffs, grid, psi);
        }
        let n = self.n;
        let omegas = Self::omegas(psi);
        let dw: f64 = psi.grid().axes.iter().map(|ax| dsp::dual_axis(ax).spacing).product();
        let b_nodes: Vec<&[f64]> = (0..n).map(|k| grid.axis_nodes(k)).collect();
        let b_shape: Vec<usize> = b_nodes.iter().map(|v| v.len()).collect();
        let expo: Vec<Vec<Complex64>> = (0..n)
            .map(|k| omegas[k].iter().flat_map(|&w| b_nodes[k].iter().map(move |&b| phase(-w * b))).collect())
            .collect();
        let a_nodes = grid.axis_nodes(n);
        let per_level = b_shape.iter().product::<usize>();
        let mut slabs = vec![vec![Complex64::new(0.0, 0.0); per_level]; a_nodes.len()];
        for i in 0..grid.len() {
            let idx = grid.multi_index(i);
            let flat = idx[..n].iter().zip(&b_shape).fold(0, |acc, (&j, &m)| acc * m + j);
            slabs[idx[n]][flat] = coeffs[i] * grid.weight(i);
        }
        let spectra: Vec<Vec<Complex64>> = a_nodes
            .par_iter()
            .zip(slabs.par_iter())
            .map(|(&a, slab)| {
                let mut data = slab.clone();
                let mut s = b_shape.clone();
                for k in 0..n {
                    let (d, ns) = dsp::contract_axis(&data, &s, k, &expo[k], omegas[k].len());
                    data = d;
                    s = ns;
                }
                let psi_hat = Self::dilated_spectrum(psi, &omegas, a);
                let scale = a.powf(0.5 * n as f64);
                data.iter_mut().zip(&psi_hat).for_each(|(z, p)| *z *= p * scale);
                data
            })
            .collect();
        let mut total = vec![Complex64::new(0.0, 0.0); spectra.first().map_or(0, |s| s.len())];
        for s in &spectra {
            total.iter_mut().zip(s).for_each(|(t, z)| *t += z);
        }
        let mut shape = psi.grid().shape();
        for (k, ax) in psi.grid().axes.iter().enumerate() {
            let nodes = ax.nodes();
            let mat: Vec<Complex64> =
                nodes.iter().flat_map(|&x| omegas[k].iter().map(move |&w| phase(w * x))).collect();
            let (d, s) = dsp::contract_axis(&total, &shape, k, &mat, nodes.len());
            total = d;
            shape = s;
        }
        let scale = dw * (2.0 * PI).powi(-(n as i32));
        total.iter_mut().for_each(|z| *z *= scale);
        DiscretizedState::new(psi.grid().clone(), total)
    }
}
