use num_complex::Complex64;
use rayon::prelude::*;

use crate::dsp;
use crate::error::{Error, Result};
use crate::group::{make_exotic, ExoticLayout, GroupDescriptor};
use crate::multiplier::Section;
use crate::quadrature::QuadratureGrid;
use crate::state::DiscretizedState;

use super::{bandwidth, phase, Representation};

const ALIAS_EPS: f64 = 1e-12;

/// Representation of the exotic group on `L²(R^+ x R^n, db̌ dp̌)`:
/// `(U(t,s,b,p,q,r,a)F)(b̌,p̌) = a^{1/2} e^{it} e^{i(b b̌ + p·p̌)} F(a b̌, p̌ + q)`.
///
/// States live on a grid whose first axis is a half-line sampled at half-cell
/// offset from `b̌ = 0`; the remaining `n` axes carry `p̌`. Dilations in `b̌`
/// use the odd reflection through 0. That extension is smooth for the
/// unmodulated test states, but a state already carrying `e^{ib b̌}` has a kink
/// in its second derivative at 0, and dilating it is accurate to about 1e-4.
pub struct ExoticRep {
    n: usize,
    group: GroupDescriptor,
}

/// Only the orbit with `k = 0` gives a representation. For `k ≠ 0` the factor
/// `e^{ik·r}` composes to `e^{ik·r'}` where the group law needs `e^{ik·a r'}`.
pub fn exotic_rep(kvec: &[f64]) -> Result<ExoticRep> {
    let n = kvec.len();
    if kvec.iter().any(|k| *k != 0.0) {
        return Err(Error::InvalidParameter(
            "the exotic action is multiplicative only for k = 0 (e^{ik·r} is not invariant under r -> a r)".into(),
        ));
    }
    Ok(ExoticRep { n, group: make_exotic(n)? })
}

impl ExoticRep {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Dilate the half-line axis and shift the `p̌` axes: `F(a b̌, p̌ + q)`.
    fn pull(&self, f: &DiscretizedState, q: &[f64], a: f64) -> Vec<Complex64> {
        let grid = f.grid();
        let shape = grid.shape();
        let mut data = f.data().to_vec();
        for i in 0..self.n {
            dsp::translate_axis(&mut data, &shape, 1 + i, &grid.axes[1 + i], -q[i]);
        }
        if a != 1.0 {
            let ax = grid.axes[0];
            let targets: Vec<f64> = ax.nodes().iter().map(|x| a * x).collect();
            data = dsp::resample_axis(&data, &shape, 0, &ax, &targets, true);
        }
        data
    }

    /// Whether `section` is `s(p,q,b,a) = (0,0,b,p,q,0,a)` into this group.
    fn is_standard_section(&self, section: &Section) -> bool {
        if section.subgroup().ambient().name() != self.group.name() {
            return false;
        }
        let l = ExoticLayout { n: self.n };
        let probe: Vec<f64> = (0..2 * self.n + 2).map(|i| 0.3 + 0.17 * i as f64).collect();
        let g = section.map(&probe);
        let mut want = vec![0.0; l.dim()];
        want[ExoticLayout::B] = probe[2 * self.n];
        want[l.p()].copy_from_slice(&probe[..self.n]);
        want[l.q()].copy_from_slice(&probe[self.n..2 * self.n]);
        want[l.a()] = probe[2 * self.n + 1];
        g.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-14)
    }
}

impl Representation for ExoticRep {
    fn label(&self) -> String {
        format!("exotic[n={}, k=0]", self.n)
    }

    fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    fn check_state(&self, f: &DiscretizedState) -> Result<()> {
        let grid = f.grid();
        if grid.dim() != self.n + 1 {
            return Err(Error::InvalidDimension(format!(
                "exotic states need {} axes (b̌, p̌), got {}",
                self.n + 1,
                grid.dim()
            )));
        }
        let ax = grid.axes[0];
        if !(ax.offset > 0.0) || (ax.offset - 0.5 * ax.spacing).abs() > 1e-9 * ax.spacing {
            return Err(Error::Domain(format!(
                "the b̌ axis must start half a cell above 0 (offset {}, spacing {})",
                ax.offset, ax.spacing
            )));
        }
        Ok(())
    }

    fn act(&self, g: &[f64], f: &DiscretizedState) -> Result<DiscretizedState> {
        self.check_state(f)?;
        let l = ExoticLayout { n: self.n };
        let a = g[l.a()];
        if !(a > 0.0) {
            return Err(Error::Domain(format!("dilation a = {a} must be positive")));
        }
        let (t, b) = (g[ExoticLayout::T], g[ExoticLayout::B]);
        let p = &g[l.p()];
        let mut data = self.pull(f, &g[l.q()], a);
        let grid = f.grid();
        let amp = a.sqrt();
        for (idx, z) in data.iter_mut().enumerate() {
            let x = grid.point(idx);
            let pp: f64 = p.iter().zip(&x[1..]).map(|(u, v)| u * v).sum();
            *z *= phase(t + b * x[0] + pp) * amp;
        }
        DiscretizedState::new(grid.clone(), data)
    }

    fn safe_bounds(&self, f: &DiscretizedState) -> Vec<(f64, f64)> {
        let l = ExoticLayout { n: self.n };
        let band = bandwidth(f, ALIAS_EPS);
        let radius = f.support_radius(ALIAS_EPS);
        let axes = &f.grid().axes;
        let free = (f64::NEG_INFINITY, f64::INFINITY);
        let mut out = vec![free; l.dim()];
        let bmax = (axes[0].nyquist() - band[0]).max(0.0);
        out[ExoticLayout::B] = (-bmax, bmax);
        for i in 0..self.n {
            let ax = axes[1 + i];
            let pm = (ax.nyquist() - band[1 + i]).max(0.0);
            let qm = (ax.half_extent() - radius[1 + i]).max(0.0);
            out[l.p().start + i] = (-pm, pm);
            out[l.q().start + i] = (-qm, qm);
        }
        let reach = axes[0].center() + radius[0];
        let length = 2.0 * axes[0].half_extent();
        out[l.a()] = (reach / length, axes[0].nyquist() / band[0].max(1e-300));
        out
    }

    /// The batched coefficients sample `ψ(a b̌, p̌ + q)` directly, so any
    /// `a > 0` and `(b, p)` are allowed; `q` is periodic over the `p̌` box.
    fn coefficient_bounds(&self, f: &DiscretizedState) -> Vec<(f64, f64)> {
        let l = ExoticLayout { n: self.n };
        let mut out = vec![(f64::NEG_INFINITY, f64::INFINITY); l.dim()];
        for i in 0..self.n {
            out[l.q().start + i] = f.grid().axes[1 + i].period_box();
        }
        out[l.a()] = (0.0, f64::INFINITY);
        out
    }

    /// `b` and `p` enter the batched sums as discrete Fourier sums over `b̌`
    /// and `p̌`; `q` shifts `p̌` periodically over its box.
    fn section_periods(&self, f: &DiscretizedState) -> Vec<Option<f64>> {
        let l = ExoticLayout { n: self.n };
        let axes = &f.grid().axes;
        let mut out = vec![None; l.dim()];
        out[ExoticLayout::B] = Some(2.0 * axes[0].nyquist());
        for i in 0..self.n {
            out[l.p().start + i] = Some(2.0 * axes[1 + i].nyquist());
            out[l.q().start + i] = Some(axes[1 + i].count as f64 * axes[1 + i].spacing);
        }
        out
    }

    fn batches_section(&self, section: &Section) -> bool {
        self.is_standard_section(section)
    }

    /// Coefficients of `x ↦ U(s(x))` for `s(p,q,b,a) = (0,0,b,p,q,0,a)`: for
    /// each `(q, a)` the `(b, p)` dependence is a Fourier sum of
    /// `a^{1/2} conj(ψ(a b̌, p̌ + q)) φ(b̌, p̌)`.
    fn section_coefficients(
        &self,
        section: &Section,
        psi: &DiscretizedState,
        phi: &DiscretizedState,
        grid: &QuadratureGrid,
    ) -> Option<Result<Vec<Complex64>>> {
        if !self.is_standard_section(section) || grid.group().name() != section.subgroup().quotient().name() {
            return None;
        }
        Some(self.section_coefficients_inner(psi, phi, grid))
    }
}

impl ExoticRep {
    fn section_coefficients_inner(
        &self,
        psi: &DiscretizedState,
        phi: &DiscretizedState,
        grid: &QuadratureGrid,
    ) -> Result<Vec<Complex64>> {
        if !psi.compatible(phi) {
            return Err(Error::GridMismatch("ψ and φ live on different grids".into()));
        }
        self.check_state(psi)?;
        let n = self.n;
        let sg = psi.grid();
        let shape = sg.shape();
        // X chart (p.., q.., b, a)
        let p_nodes: Vec<&[f64]> = (0..n).map(|k| grid.axis_nodes(k)).collect();
        let q_nodes: Vec<&[f64]> = (0..n).map(|k| grid.axis_nodes(n + k)).collect();
        let b_nodes = grid.axis_nodes(2 * n);
        let a_nodes = grid.axis_nodes(2 * n + 1);
        let fourier = |nodes: &[f64], ax: &crate::state::StateAxis| -> Vec<Complex64> {
            nodes
                .iter()
                .flat_map(|&w| ax.nodes().into_iter().map(move |x| Complex64::from_polar(ax.spacing, -w * x)))
                .collect()
        };
        let eb = fourier(b_nodes, &sg.axes[0]);
        let ep: Vec<Vec<Complex64>> = (0..n).map(|k| fourier(p_nodes[k], &sg.axes[1 + k])).collect();
        let q_shape: Vec<usize> = q_nodes.iter().map(|v| v.len()).collect();
        let q_count: usize = q_shape.iter().product();
        let jobs: Vec<(usize, usize)> =
            (0..q_count).flat_map(|qi| (0..a_nodes.len()).map(move |ai| (qi, ai))).collect();
        let blocks: Vec<Vec<Complex64>> = jobs
            .par_iter()
            .map(|&(qi, ai)| {
                let mut rem = qi;
                let mut q = vec![0.0; n];
                for k in (0..n).rev() {
                    q[k] = q_nodes[k][rem % q_shape[k]];
                    rem /= q_shape[k];
                }
                let a = a_nodes[ai];
                let pulled = self.pull(psi, &q, a);
                let amp = a.sqrt();
                let mut data: Vec<Complex64> = pulled.iter().zip(phi.data()).map(|(u, v)| u.conj() * v * amp).collect();
                let mut s = shape.clone();
                let (d, ns) = dsp::contract_axis(&data, &s, 0, &eb, b_nodes.len());
                data = d;
                s = ns;
                for k in 0..n {
                    let (d, ns) = dsp::contract_axis(&data, &s, 1 + k, &ep[k], p_nodes[k].len());
                    data = d;
                    s = ns;
                }
                data
            })
            .collect();
        let p_shape: Vec<usize> = p_nodes.iter().map(|v| v.len()).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (i, c) in out.iter_mut().enumerate() {
            let idx = grid.multi_index(i);
            let qi = idx[n..2 * n].iter().zip(&q_shape).fold(0, |acc, (&j, &m)| acc * m + j);
            let block = &blocks[qi * a_nodes.len() + idx[2 * n + 1]];
            let flat = idx[..n].iter().zip(&p_shape).fold(idx[2 * n], |acc, (&j, &m)| acc * m + j);
            *c = block[flat];
        }
        Ok(out)
    }
}
