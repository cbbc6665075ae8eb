//! Sampled unitary and projective representations.
//!
//! A [`Representation`] acts on [`DiscretizedState`]s by chart points of its
//! group. Projective representations report their multiplier. Translations and
//! dilations are band-limited (FFT phase ramps, sinc resampling), which keeps
//! them unitary to near machine precision on well-resolved states.

mod affine;
mod exotic;
mod wh;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

pub use affine::{affine_rep, AffineRep};
pub use exotic::{exotic_rep, ExoticRep};
pub use wh::{wh_rep, WhRep};

use crate::dsp;
use crate::error::{Error, Result};
use crate::group::GroupDescriptor;
use crate::multiplier::{central_extension, multiplier_from_section, wh_center, wh_section_prime, Multiplier, Section};
use crate::quadrature::QuadratureGrid;
use crate::state::DiscretizedState;
use crate::sum::NeumaierC;

pub trait Representation: Send + Sync {
    fn label(&self) -> String;

    fn group(&self) -> &GroupDescriptor;

    /// `Some(m)` for a projective representation with multiplier `m`.
    fn multiplier(&self) -> Option<&Multiplier> {
        None
    }

    /// Reject states on grids the representation cannot act on.
    fn check_state(&self, _f: &DiscretizedState) -> Result<()> {
        Ok(())
    }

    fn act(&self, g: &[f64], f: &DiscretizedState) -> Result<DiscretizedState>;

    /// Parameter box (per chart axis) on which the action of this
    /// representation stays resolved for the state `f`.
    fn safe_bounds(&self, _f: &DiscretizedState) -> Vec<(f64, f64)> {
        vec![(f64::NEG_INFINITY, f64::INFINITY); self.group().dim()]
    }

    /// Parameter box on which [`Representation::coefficients_on`] stays
    /// resolved. Fast paths that never call `act` may allow more than
    /// [`Representation::safe_bounds`].
    fn coefficient_bounds(&self, f: &DiscretizedState) -> Vec<(f64, f64)> {
        self.safe_bounds(f)
    }

    /// Period of `g ↦ ⟨U(g)ψ, φ⟩` along each chart axis, for the axes on
    /// which [`Representation::coefficients_on`] is a periodic sum. A grid
    /// covering a full period there carries no truncation error.
    fn coefficient_periods(&self, _f: &DiscretizedState) -> Vec<Option<f64>> {
        vec![None; self.group().dim()]
    }

    /// `⟨U(g)ψ, φ⟩` at every node of `grid`.
    fn coefficients_on(
        &self,
        psi: &DiscretizedState,
        phi: &DiscretizedState,
        grid: &QuadratureGrid,
    ) -> Result<Vec<Complex64>> {
        generic_coefficients(self, psi, phi, grid)
    }

    /// `Σ c(g) w(g) U(g)ψ` over the nodes of `grid`.
    fn synthesize_on(
        &self,
        coeffs: &[Complex64],
        grid: &QuadratureGrid,
        psi: &DiscretizedState,
    ) -> Result<DiscretizedState> {
        generic_synthesis(self, coeffs, grid, psi)
    }

    /// [`Representation::coefficient_periods`] of the batched section
    /// coefficients, in ambient chart order.
    fn section_periods(&self, _f: &DiscretizedState) -> Vec<Option<f64>> {
        vec![None; self.group().dim()]
    }

    /// Whether [`Representation::section_coefficients`] handles `section`.
    fn batches_section(&self, _section: &Section) -> bool {
        false
    }

    /// Batched coefficients of `x ↦ U(s(x))` on a quotient grid, when the
    /// representation has a faster route than acting node by node.
    fn section_coefficients(
        &self,
        _section: &Section,
        _psi: &DiscretizedState,
        _phi: &DiscretizedState,
        _grid: &QuadratureGrid,
    ) -> Option<Result<Vec<Complex64>>> {
        None
    }
}

/// `c_{ψ,φ}(g) = ⟨U(g)ψ, φ⟩`.
pub fn coefficient<R: Representation + ?Sized>(
    rep: &R,
    psi: &DiscretizedState,
    phi: &DiscretizedState,
    g: &[f64],
) -> Result<Complex64> {
    rep.act(g, psi)?.inner(phi)
}

pub fn generic_coefficients<R: Representation + ?Sized>(
    rep: &R,
    psi: &DiscretizedState,
    phi: &DiscretizedState,
    grid: &QuadratureGrid,
) -> Result<Vec<Complex64>> {
    if !psi.compatible(phi) {
        return Err(Error::GridMismatch("ψ and φ live on different grids".into()));
    }
    (0..grid.len()).into_par_iter().map(|i| coefficient(rep, psi, phi, grid.node(i))).collect()
}

const SYNTH_CHUNK: usize = 64;

/// Deterministic parallel synthesis: fixed-size node chunks summed in order.
pub fn generic_synthesis<R: Representation + ?Sized>(
    rep: &R,
    coeffs: &[Complex64],
    grid: &QuadratureGrid,
    psi: &DiscretizedState,
) -> Result<DiscretizedState> {
    if coeffs.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} coefficients for {} nodes", coeffs.len(), grid.len())));
    }
    let len = psi.data().len();
    let chunks: Vec<Vec<NeumaierC>> = (0..grid.len())
        .collect::<Vec<_>>()
        .par_chunks(SYNTH_CHUNK)
        .map(|idx| {
            let mut acc = vec![NeumaierC::new(); len];
            for &i in idx {
                let c = coeffs[i] * grid.weight(i);
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let u = rep.act(grid.node(i), psi)?;
                for (a, z) in acc.iter_mut().zip(u.data()) {
                    a.add(c * z);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![NeumaierC::new(); len];
    for chunk in chunks {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.add(c.value());
        }
    }
    Ok(psi.with_data(total.iter().map(|a| a.value()).collect()))
}

/// `P_s(x) = U(s(x))`, a projective representation of the quotient.
pub struct ProjectiveRep {
    base: Arc<dyn Representation>,
    section: Section,
    multiplier: Multiplier,
}

pub fn projective_from_section(base: Arc<dyn Representation>, section: Section) -> Result<ProjectiveRep> {
    if base.group().name() != section.subgroup().ambient().name() {
        return Err(Error::InvalidParameter(format!(
            "representation of {} cannot be pulled back along a section into {}",
            base.group().name(),
            section.subgroup().ambient().name()
        )));
    }
    let multiplier = multiplier_from_section(&section);
    Ok(ProjectiveRep { base, section, multiplier })
}

impl ProjectiveRep {
    pub fn section(&self) -> &Section {
        &self.section
    }

    pub fn base(&self) -> &Arc<dyn Representation> {
        &self.base
    }

    /// Per quotient axis, the entry of `ambient` at the coordinate the section
    /// copies it to, or `fill`.
    fn map_axes<T: Clone>(&self, ambient: Vec<T>, fill: T) -> Vec<T> {
        let probe: Vec<f64> = (0..self.group().dim()).map(|i| 0.31 + 0.173 * i as f64).collect();
        let g = self.section.map(&probe);
        probe
            .iter()
            .map(|v| match g.iter().position(|w| (w - v).abs() < 1e-14) {
                Some(j) => ambient[j].clone(),
                None => fill.clone(),
            })
            .collect()
    }

    fn map_bounds(&self, ambient: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
        self.map_axes(ambient, (f64::NEG_INFINITY, f64::INFINITY))
    }
}

impl Representation for ProjectiveRep {
    fn label(&self) -> String {
        format!("P[{}; {}]", self.base.label(), self.section.label())
    }

    fn group(&self) -> &GroupDescriptor {
        self.section.subgroup().quotient()
    }

    fn multiplier(&self) -> Option<&Multiplier> {
        Some(&self.multiplier)
    }

    fn check_state(&self, f: &DiscretizedState) -> Result<()> {
        self.base.check_state(f)
    }

    fn act(&self, x: &[f64], f: &DiscretizedState) -> Result<DiscretizedState> {
        self.base.act(&self.section.map(x), f)
    }

    /// The base bounds of the ambient coordinate each quotient coordinate is
    /// copied to by the section.
    fn safe_bounds(&self, f: &DiscretizedState) -> Vec<(f64, f64)> {
        self.map_bounds(self.base.safe_bounds(f))
    }

    fn coefficient_bounds(&self, f: &DiscretizedState) -> Vec<(f64, f64)> {
        if self.base.batches_section(&self.section) {
            self.map_bounds(self.base.coefficient_bounds(f))
        } else {
            self.safe_bounds(f)
        }
    }

    fn coefficient_periods(&self, f: &DiscretizedState) -> Vec<Option<f64>> {
        if self.base.batches_section(&self.section) {
            self.map_axes(self.base.section_periods(f), None)
        } else {
            vec![None; self.group().dim()]
        }
    }

    fn coefficients_on(
        &self,
        psi: &DiscretizedState,
        phi: &DiscretizedState,
        grid: &QuadratureGrid,
    ) -> Result<Vec<Complex64>> {
        match self.base.section_coefficients(&self.section, psi, phi, grid) {
            Some(r) => r,
            None => generic_coefficients(self, psi, phi, grid),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftVariant {
    /// `U_P(τ,x) = τ⁻¹ P(x)` on `X_m`.
    Standard,
    /// `U_{*P}(τ,x) = τ P(x)` on `X_{m*}`.
    Starred,
}

/// A genuine representation of a central extension built from a projective one.
pub struct ExtensionRep {
    proj: Arc<dyn Representation>,
    variant: LiftVariant,
    group: GroupDescriptor,
}

pub fn lift_to_extension(proj: Arc<dyn Representation>, variant: LiftVariant) -> Result<ExtensionRep> {
    let m =
        proj.multiplier().ok_or_else(|| Error::InvalidParameter("lift needs a projective representation".into()))?;
    let group = match variant {
        LiftVariant::Standard => central_extension(m),
        LiftVariant::Starred => central_extension(&m.conjugate()),
    };
    Ok(ExtensionRep { proj, variant, group })
}

impl Representation for ExtensionRep {
    fn label(&self) -> String {
        match self.variant {
            LiftVariant::Standard => format!("U_P[{}]", self.proj.label()),
            LiftVariant::Starred => format!("U_*P[{}]", self.proj.label()),
        }
    }

    fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    fn check_state(&self, f: &DiscretizedState) -> Result<()> {
        self.proj.check_state(f)
    }

    fn act(&self, g: &[f64], f: &DiscretizedState) -> Result<DiscretizedState> {
        let sign = match self.variant {
            LiftVariant::Standard => -1.0,
            LiftVariant::Starred => 1.0,
        };
        Ok(self.proj.act(&g[1..], f)?.scaled(Complex64::from_polar(1.0, sign * g[0])))
    }
}

/// Displacement operators `D(q,p) = e^{-ip·q/2} e^{ip·x̂} e^{-iq·p̂}` realized
/// as `P_{-1,s'}` on the Weyl–Heisenberg quotient (chart order `(p, q)`).
pub fn displacement_rep(n: usize) -> Result<ProjectiveRep> {
    let k = wh_center(n, -1.0)?;
    projective_from_section(Arc::new(wh_rep(n, -1.0)?), wh_section_prime(&k))
}

/// `D(q,p) f`.
pub fn displacement(q: &[f64], p: &[f64], f: &DiscretizedState) -> Result<DiscretizedState> {
    let rep = displacement_rep(q.len())?;
    let mut x = p.to_vec();
    x.extend_from_slice(q);
    rep.act(&x, f)
}

pub use dsp::{fourier_plancherel, fourier_plancherel_inverse};

/// Effective spectral radius per axis: the angular frequency beyond which
/// less than `eps` of `‖f‖²` remains.
pub fn bandwidth(f: &DiscretizedState, eps: f64) -> Vec<f64> {
    let spectrum = dsp::fourier_plancherel(f);
    spectrum.support_radius(eps).into_iter().zip(&spectrum.grid().axes).map(|(r, ax)| r + ax.spacing).collect()
}

pub(crate) fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}
