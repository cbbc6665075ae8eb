//! Generalized wavelet and coherent-state transforms
//! `W_ψ φ = ‖Dψ‖⁻¹ ⟨U(·)ψ, φ⟩`, their Duflo–Moore operators `D`, and the
//! checks built on them: orthogonality relations, reproducing kernels,
//! semi-invariance of `D` and the mod-`K` energy identity.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};
use crate::measures::{energy, RhoDensity};
use crate::multiplier::Section;
use crate::quadrature::{extend_axes, haar_grid_axes, GridAxis, QuadratureGrid};
use crate::rep::{affine_rep, coefficient, Representation};
use crate::state::{DiscretizedState, StateGrid};
use crate::sum;
use crate::vectors;

/// Box bookkeeping carried by every transform.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransformMeta {
    pub requested: Vec<(f64, f64)>,
    pub used: Vec<(f64, f64)>,
    pub clipped: bool,
    /// Relative change of the energy over the last box doubling, when known.
    pub tail_estimate: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct TransformResult {
    /// `c(g) = ⟨U(g)ψ, φ⟩`, not yet divided by `‖Dψ‖`.
    pub coefficients: Vec<Complex64>,
    pub grid: QuadratureGrid,
    pub analyzing_vector_id: String,
    pub rep_id: String,
    pub dm_norm: Option<f64>,
    pub meta: TransformMeta,
}

impl TransformResult {
    /// `Σ |c|² w`.
    pub fn energy(&self) -> f64 {
        energy(&self.coefficients, &self.grid)
    }

    pub fn with_dm_norm(mut self, dm_norm: f64) -> Self {
        self.dm_norm = Some(dm_norm);
        self
    }

    fn require_dm_norm(&self) -> Result<f64> {
        match self.dm_norm {
            Some(v) if v > 0.0 && v.is_finite() => Ok(v),
            _ => Err(Error::MissingMetadata("dm_norm is unset".into())),
        }
    }

    /// `W_ψ φ = c / ‖Dψ‖`.
    pub fn normalized(&self) -> Result<Vec<Complex64>> {
        let d = self.require_dm_norm()?;
        Ok(self.coefficients.iter().map(|c| c / d).collect())
    }
}

fn within(grid: &[(f64, f64)], allowed: &[(f64, f64)]) -> Option<usize> {
    grid.iter().zip(allowed).position(|(&(lo, hi), &(a, b))| {
        let tol = |v: f64| 1e-9 * (1.0 + v.abs());
        lo < a - tol(a) || hi > b + tol(b)
    })
}

/// `c_{ψ,φ}` at every node of `grid`, which must lie inside the
/// representation's coefficient-safe box for `ψ`.
pub fn analyze(
    rep: &dyn Representation,
    psi: &DiscretizedState,
    phi: &DiscretizedState,
    grid: &QuadratureGrid,
) -> Result<TransformResult> {
    if psi.norm() == 0.0 {
        return Err(Error::InvalidParameter("the analyzing vector is zero".into()));
    }
    let bounds = grid.bounds();
    if let Some(k) = within(&bounds, &rep.coefficient_bounds(psi)) {
        return Err(Error::Unsafe(format!(
            "grid axis {k} spans {:?}, beyond the resolved range {:?}",
            bounds[k],
            rep.coefficient_bounds(psi)[k]
        )));
    }
    let coefficients = rep.coefficients_on(psi, phi, grid)?;
    Ok(TransformResult {
        coefficients,
        grid: grid.clone(),
        analyzing_vector_id: "custom".into(),
        rep_id: rep.label(),
        dm_norm: None,
        meta: TransformMeta { requested: bounds.clone(), used: bounds, ..Default::default() },
    })
}

/// `grid` grown along its truncated axes (see [`extend_axes`]) inside the
/// coefficient-safe range, and the mask of the original nodes.
pub fn extended_grid(
    rep: &dyn Representation,
    psi: &DiscretizedState,
    grid: &QuadratureGrid,
) -> Result<(QuadratureGrid, Vec<bool>)> {
    let grow = truncated_axes(rep, psi, grid);
    let (axes, offset) = extend_axes(grid.axes(), &grow, &rep.coefficient_bounds(psi));
    let big = haar_grid_axes(grid.group(), axes)?;
    let mask = big.sub_box_mask(&offset, &grid.shape());
    Ok((big, mask))
}

/// `(Σ_inner v w, Σ_all v w)`.
pub fn split_sum(values: &[Complex64], grid: &QuadratureGrid, mask: &[bool]) -> (Complex64, Complex64) {
    let terms = || values.iter().zip(grid.weights()).zip(mask);
    let inner = sum::sum_c(terms().filter(|(_, m)| **m).map(|((v, w), _)| v * *w));
    let full = sum::sum_c(terms().map(|((v, w), _)| v * *w));
    (inner, full)
}

/// [`analyze`], with `meta.tail_estimate` set to the relative energy gained
/// when the truncated axes are grown by one doubling.
pub fn analyze_with_tail(
    rep: &dyn Representation,
    psi: &DiscretizedState,
    phi: &DiscretizedState,
    grid: &QuadratureGrid,
) -> Result<TransformResult> {
    let mut res = analyze(rep, psi, phi, grid)?;
    let (big, mask) = extended_grid(rep, psi, grid)?;
    let wide = analyze(rep, psi, phi, &big)?;
    let dens: Vec<Complex64> = wide.coefficients.iter().map(|z| Complex64::new(z.norm_sqr(), 0.0)).collect();
    let (inner, full) = split_sum(&dens, &big, &mask);
    res.meta.tail_estimate = Some(if inner.re == 0.0 { 0.0 } else { (full.re - inner.re).abs() / inner.re });
    if big.len() == grid.len() {
        res.meta.notes.push("no room to grow the box; tail estimate is zero by construction".into());
    }
    Ok(res)
}

/// Axes along which `grid` truncates the coefficient integral: all of them
/// except those covering a full period of the coefficients.
pub fn truncated_axes(rep: &dyn Representation, psi: &DiscretizedState, grid: &QuadratureGrid) -> Vec<bool> {
    rep.coefficient_periods(psi)
        .iter()
        .zip(grid.axes())
        .map(|(p, ax)| match p {
            Some(period) => ax.hi - ax.lo < period * (1.0 - 1e-9),
            None => true,
        })
        .collect()
}

/// Intersect each axis with the coefficient-safe box, keeping the node
/// spacing. Returns the clipped axes and whether anything changed.
pub fn clip_axes(rep: &dyn Representation, psi: &DiscretizedState, axes: &[GridAxis]) -> (Vec<GridAxis>, bool) {
    let allowed = rep.coefficient_bounds(psi);
    let mut clipped = false;
    let out = axes
        .iter()
        .zip(&allowed)
        .map(|(ax, &(a, b))| {
            let (lo, hi) = (ax.lo.max(a), ax.hi.min(b));
            if lo == ax.lo && hi == ax.hi {
                return *ax;
            }
            clipped = true;
            let old = ax.to_internal(ax.hi) - ax.to_internal(ax.lo);
            let new = ax.to_internal(hi) - ax.to_internal(lo);
            let count = ((ax.count as f64 * new / old).round() as usize).max(2);
            GridAxis { lo, hi, count, spacing: ax.spacing }
        })
        .collect();
    (out, clipped)
}

/// [`analyze`] on the requested box clipped to the safe range, with the clip
/// recorded in the metadata.
pub fn analyze_clipped(
    rep: &dyn Representation,
    psi: &DiscretizedState,
    phi: &DiscretizedState,
    axes: &[GridAxis],
) -> Result<TransformResult> {
    let (used, clipped) = clip_axes(rep, psi, axes);
    let grid = haar_grid_axes(rep.group(), used)?;
    let mut res = analyze(rep, psi, phi, &grid)?;
    res.meta.requested = axes.iter().map(|a| (a.lo, a.hi)).collect();
    res.meta.clipped = clipped;
    if clipped {
        res.meta.notes.push("box clipped to the grid-safe range".into());
    }
    Ok(res)
}

/// `φ̂ = ‖Dψ‖⁻² Σ c(g) w(g) U(g)ψ`.
pub fn synthesize(
    result: &TransformResult,
    rep: &dyn Representation,
    psi: &DiscretizedState,
) -> Result<DiscretizedState> {
    let d = result.require_dm_norm()?;
    if result.rep_id != rep.label() {
        return Err(Error::GridMismatch(format!("coefficients of {} synthesized with {}", result.rep_id, rep.label())));
    }
    let out = rep.synthesize_on(&result.coefficients, &result.grid, psi)?;
    Ok(out.scaled(Complex64::new(1.0 / (d * d), 0.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmKind {
    IdentityScalar,
    FourierMultiplier,
    CoordinateMultiplier,
}

pub type Symbol = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A Duflo–Moore operator: `scalar · σ`, where `σ` is read in frequency
/// (Fourier multipliers) or in state coordinates (coordinate multipliers).
#[derive(Clone)]
pub struct DMOperator {
    pub kind: DmKind,
    pub scalar: f64,
    raw: Symbol,
    pub label: String,
}

impl fmt::Debug for DMOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DMOperator({:?}, {}, scalar={})", self.kind, self.label, self.scalar)
    }
}

impl DMOperator {
    pub fn identity(scalar: f64) -> Self {
        DMOperator { kind: DmKind::IdentityScalar, scalar, raw: Arc::new(|_| 1.0), label: "Id".into() }
    }

    pub fn fourier(label: impl Into<String>, scalar: f64, raw: Symbol) -> Self {
        DMOperator { kind: DmKind::FourierMultiplier, scalar, raw, label: label.into() }
    }

    pub fn coordinate(label: impl Into<String>, scalar: f64, raw: Symbol) -> Self {
        DMOperator { kind: DmKind::CoordinateMultiplier, scalar, raw, label: label.into() }
    }

    /// `scalar · σ(w)`.
    pub fn symbol(&self, w: &[f64]) -> f64 {
        self.scalar * (self.raw)(w)
    }

    pub fn with_scalar(&self, scalar: f64) -> Self {
        DMOperator { scalar, ..self.clone() }
    }

    pub fn apply(&self, f: &DiscretizedState) -> DiscretizedState {
        let s = self.scalar;
        match self.kind {
            DmKind::IdentityScalar => f.scaled(Complex64::new(s, 0.0)),
            DmKind::FourierMultiplier => dsp::fourier_multiplier(f, |w| s * (self.raw)(w)),
            DmKind::CoordinateMultiplier => {
                let g = f.grid();
                f.with_data(f.data().iter().enumerate().map(|(i, z)| z * (s * (self.raw)(&g.point(i)))).collect())
            }
        }
    }

    /// `‖Dψ‖`, or [`Error::Divergent`] when `ψ` is not in the domain.
    pub fn norm_of(&self, psi: &DiscretizedState) -> Result<f64> {
        let v = self.apply(psi).norm();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Divergent(format!("{} ψ has infinite norm", self.label)))
        }
    }

    /// Whether the symbol is positive and finite at every node it is read at
    /// for states on `grid`.
    pub fn positive_on(&self, grid: &StateGrid) -> bool {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        match self.kind {
            DmKind::IdentityScalar => ok(self.scalar),
            DmKind::CoordinateMultiplier => grid.points().iter().all(|x| ok(self.symbol(x))),
            DmKind::FourierMultiplier => {
                // half-bin shifted lattice, as in dsp::fourier_multiplier
                let freqs: Vec<Vec<f64>> = grid
                    .axes
                    .iter()
                    .map(|a| {
                        let dl = std::f64::consts::PI / (a.count as f64 * a.spacing);
                        a.fft_frequencies().iter().map(|w| w + dl).collect()
                    })
                    .collect();
                let shape = grid.shape();
                (0..grid.len()).all(|mut i| {
                    let mut w = vec![0.0; shape.len()];
                    for k in (0..shape.len()).rev() {
                        w[k] = freqs[k][i % shape[k]];
                        i /= shape[k];
                    }
                    ok(self.symbol(&w))
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmConfig {
    Gabor,
    Affine,
    Exotic,
}

impl std::str::FromStr for DmConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gabor" | "wh" => Ok(DmConfig::Gabor),
            "affine" => Ok(DmConfig::Affine),
            "exotic" => Ok(DmConfig::Exotic),
            _ => Err(Error::InvalidParameter(format!("unknown Duflo–Moore configuration `{s}`"))),
        }
    }
}

/// `|ω|^{-1/2}` (radial in several dimensions: `|ω|^{-n/2}`).
pub fn affine_symbol() -> Symbol {
    Arc::new(|w| {
        let r2: f64 = w.iter().map(|v| v * v).sum();
        r2.powf(-0.25 * w.len() as f64)
    })
}

/// `b̌^{-1/2}` on the exotic orbit, read at the state point `(b̌, p̌)`.
pub fn exotic_symbol() -> Symbol {
    Arc::new(|x| x[0].powf(-0.5))
}

/// The Duflo–Moore operator of a shipped configuration. The affine scalar
/// is the square root of [`AffineCalibration::kappa_sq`] from the default
/// calibration, computed once per process.
pub fn duflo_moore(config: DmConfig) -> Result<DMOperator> {
    match config {
        DmConfig::Gabor => Ok(DMOperator::identity(1.0)),
        DmConfig::Exotic => Ok(DMOperator::coordinate("b̌^{-1/2}", 1.0, exotic_symbol())),
        DmConfig::Affine => {
            static KAPPA: OnceLock<std::result::Result<f64, String>> = OnceLock::new();
            let k = KAPPA.get_or_init(|| {
                calibrate_affine(&AffineSetup::default()).map(|c| c.kappa_sq.sqrt()).map_err(|e| e.to_string())
            });
            match k {
                Ok(k) => Ok(DMOperator::fourier("|ω|^{-1/2}", *k, affine_symbol())),
                Err(e) => Err(Error::Divergent(e.clone())),
            }
        }
    }
}

/// Four vectors entering one orthogonality relation.
#[derive(Clone, Debug)]
pub struct VectorPair {
    pub psi1: DiscretizedState,
    pub psi2: DiscretizedState,
    pub phi1: DiscretizedState,
    pub phi2: DiscretizedState,
}

/// State grid, group grid and calibration pairs of the affine fit.
#[derive(Clone, Debug)]
pub struct AffineSetup {
    pub state: StateGrid,
    pub axes: Vec<GridAxis>,
    pub pairs: Vec<VectorPair>,
}

impl Default for AffineSetup {
    /// Morlet and Mexican-hat pairs against odd Hermite functions on a
    /// 1024-point grid over `[-32, 32)`; `b` covers the box and `a` spans
    /// `[2^-7, 2^7]` on a log axis.
    fn default() -> Self {
        let state = StateGrid::centered(1, 32.0, 1024);
        let pairs = vec![
            VectorPair {
                psi1: vectors::morlet(&state, 5.0),
                psi2: vectors::morlet(&state, 5.0),
                phi1: vectors::hermite(&state, 1),
                phi2: vectors::hermite(&state, 1),
            },
            VectorPair {
                psi1: vectors::mexican_hat(&state, 1.0),
                psi2: vectors::mexican_hat(&state, 1.0),
                phi1: vectors::hermite(&state, 3),
                phi2: vectors::hermite(&state, 3).add(&vectors::hermite(&state, 1)).unwrap(),
            },
        ];
        AffineSetup { state, axes: default_affine_axes(), pairs }
    }
}

/// `b ∈ [-32, 32]` with 256 nodes, `a ∈ [2^-7, 2^7]` with 112 log nodes.
pub fn default_affine_axes() -> Vec<GridAxis> {
    vec![GridAxis::uniform(-32.0, 32.0, 256), GridAxis::log(1.0 / 128.0, 128.0, 112)]
}

#[derive(Clone, Debug, Serialize)]
pub struct AffineCalibration {
    /// Least-squares `κ²` in `∫ conj(c₁)c₂ dμ = κ² ⟨φ₁,φ₂⟩⟨D₀ψ₂,D₀ψ₁⟩`, `D₀ = |ω|^{-1/2}`.
    pub kappa_sq: f64,
    /// `lhs / (⟨φ₁,φ₂⟩⟨D₀ψ₂,D₀ψ₁⟩)` for each pair on its own.
    pub per_pair: Vec<f64>,
}

pub fn calibrate_affine(setup: &AffineSetup) -> Result<AffineCalibration> {
    let rep = affine_rep(setup.state.dim())?;
    let grid = haar_grid_axes(rep.group(), setup.axes.clone())?;
    let d0 = DMOperator::fourier("|ω|^{-1/2}", 1.0, affine_symbol());
    let (mut num, mut den) = (sum::Neumaier::new(), sum::Neumaier::new());
    let mut per_pair = Vec::new();
    for p in &setup.pairs {
        let (lhs, _) = ortho_lhs(&rep, p, &grid, false)?;
        let r = p.phi1.inner(&p.phi2)? * d0.apply(&p.psi2).inner(&d0.apply(&p.psi1))?;
        num.add((r.conj() * lhs).re);
        den.add(r.norm_sqr());
        per_pair.push((lhs / r).re);
    }
    if den.value() == 0.0 {
        return Err(Error::InvalidParameter("calibration pairs have vanishing right-hand sides".into()));
    }
    Ok(AffineCalibration { kappa_sq: num.value() / den.value(), per_pair })
}

/// `∫ conj(c₁)c₂ dμ` over `grid` and, when `tail` is set, the same integral
/// over `grid` grown by one doubling along its truncated axes.
fn ortho_lhs(
    rep: &dyn Representation,
    p: &VectorPair,
    grid: &QuadratureGrid,
    tail: bool,
) -> Result<(Complex64, Complex64)> {
    let (big, mask) = if tail {
        let grow: Vec<bool> = truncated_axes(rep, &p.psi1, grid)
            .iter()
            .zip(truncated_axes(rep, &p.psi2, grid))
            .map(|(a, b)| *a || b)
            .collect();
        let bounds: Vec<(f64, f64)> = rep
            .coefficient_bounds(&p.psi1)
            .iter()
            .zip(rep.coefficient_bounds(&p.psi2))
            .map(|(a, b)| (a.0.max(b.0), a.1.min(b.1)))
            .collect();
        let (axes, offset) = extend_axes(grid.axes(), &grow, &bounds);
        let big = haar_grid_axes(grid.group(), axes)?;
        let mask = big.sub_box_mask(&offset, &grid.shape());
        (big, mask)
    } else {
        (grid.clone(), vec![true; grid.len()])
    };
    let c1 = analyze(rep, &p.psi1, &p.phi1, &big)?;
    let c2 = analyze(rep, &p.psi2, &p.phi2, &big)?;
    let prod: Vec<Complex64> = c1.coefficients.iter().zip(&c2.coefficients).map(|(a, b)| a.conj() * b).collect();
    Ok(split_sum(&prod, &big, &mask))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OrthoCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub relerr: f64,
    /// `|lhs(2·box) − lhs(box)|`, relative like `relerr`.
    pub tail: f64,
}

/// `∫ conj(c_{ψ₁,φ₁}) c_{ψ₂,φ₂} dμ` against `⟨φ₁,φ₂⟩⟨Dψ₂,Dψ₁⟩`. When the
/// right side vanishes the error is taken relative to the product of norms.
pub fn orthogonality_check(
    rep: &dyn Representation,
    pair: &VectorPair,
    d: &DMOperator,
    grid: &QuadratureGrid,
) -> Result<OrthoCheck> {
    let (dpsi1, dpsi2) = (d.apply(&pair.psi1), d.apply(&pair.psi2));
    for v in [&dpsi1, &dpsi2] {
        if !v.norm().is_finite() {
            return Err(Error::Divergent("analyzing vector outside the domain of D".into()));
        }
    }
    let (lhs, wider) = ortho_lhs(rep, pair, grid, true)?;
    let rhs = pair.phi1.inner(&pair.phi2)? * dpsi2.inner(&dpsi1)?;
    let scale = if rhs.norm() > 1e-12 * pair.phi1.norm() * pair.phi2.norm() * dpsi1.norm() * dpsi2.norm() {
        rhs.norm()
    } else {
        pair.phi1.norm() * pair.phi2.norm() * dpsi1.norm() * dpsi2.norm()
    };
    Ok(OrthoCheck { lhs, rhs, relerr: (lhs - rhs).norm() / scale, tail: (wider - lhs).norm() / scale })
}

/// `ϰ_ψ(g, g') = ‖Dψ‖⁻² ⟨U(g)ψ, U(g')ψ⟩`.
pub fn kernel(
    rep: &dyn Representation,
    psi: &DiscretizedState,
    g: &[f64],
    g2: &[f64],
    dm_norm: Option<f64>,
) -> Result<Complex64> {
    let d = match dm_norm {
        Some(v) if v > 0.0 => v,
        _ => return Err(Error::MissingMetadata("dm_norm is unset".into())),
    };
    let u2 = rep.act(g2, psi)?;
    Ok(coefficient(rep, psi, &u2, g)? / (d * d))
}

#[derive(Clone, Debug, Serialize)]
pub struct ReproduceCheck {
    pub nodes: Vec<usize>,
    /// `|∫ϰ(g,·)f − f(g)| / |f(g)|` at each sampled node.
    pub relerrs: Vec<f64>,
    /// Maximum of `relerrs`.
    pub max_relerr: f64,
    /// `max |ϰ(g,g') − conj ϰ(g',g)|` over pairs of sampled nodes.
    pub hermitian_defect: f64,
    /// `ϰ(g,g)` at the first sampled node.
    pub diagonal: Complex64,
}

/// Reproduce the coefficients at `samples` nodes drawn (seeded) from those
/// where `|f| ≥ 10⁻² max|f|`.
pub fn reproduce_check(
    result: &TransformResult,
    rep: &dyn Representation,
    psi: &DiscretizedState,
    samples: usize,
    seed: u64,
) -> Result<ReproduceCheck> {
    let d = result.require_dm_norm()?;
    let grid = &result.grid;
    let f = &result.coefficients;
    let fmax = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let strong: Vec<usize> = (0..f.len()).filter(|&i| f[i].norm() >= 1e-2 * fmax).collect();
    if strong.is_empty() {
        return Err(Error::InvalidParameter("the coefficients vanish".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<usize> =
        sample(&mut rng, strong.len(), samples.min(strong.len())).into_iter().map(|j| strong[j]).collect();
    nodes.sort_unstable();
    let mut relerrs = Vec::with_capacity(nodes.len());
    let mut rows = Vec::with_capacity(nodes.len());
    for &i in &nodes {
        // ϰ(g_i, g') = conj⟨U(g')ψ, U(g_i)ψ⟩ / d²
        let ui = rep.act(grid.node(i), psi)?;
        let row: Vec<Complex64> =
            rep.coefficients_on(psi, &ui, grid)?.into_iter().map(|z| z.conj() / (d * d)).collect();
        let rec = sum::sum_c(row.iter().zip(f).zip(grid.weights()).map(|((k, v), w)| k * v * *w));
        relerrs.push((rec - f[i]).norm() / f[i].norm());
        rows.push(row);
    }
    let mut hermitian_defect: f64 = 0.0;
    for (a, &i) in nodes.iter().enumerate() {
        for (b, &j) in nodes.iter().enumerate() {
            hermitian_defect = hermitian_defect.max((rows[a][j] - rows[b][i].conj()).norm());
        }
    }
    let diagonal = rows[0][nodes[0]];
    let max_relerr = relerrs.iter().copied().fold(0.0, f64::max);
    Ok(ReproduceCheck { nodes, relerrs, max_relerr, hermitian_defect, diagonal })
}

/// `max_v ‖U(g) D U(g)⁻¹ v − Δ(g)^{1/2} D v‖ / ‖Dv‖`. For a projective
/// representation `U(g)⁻¹ = conj(m(g,g⁻¹)) U(g⁻¹)`.
pub fn semi_invariance_check(
    rep: &dyn Representation,
    d: &DMOperator,
    g: &[f64],
    tests: &[DiscretizedState],
) -> Result<f64> {
    let group = rep.group();
    let ginv = group.inverse(g);
    let fix = rep.multiplier().map_or(Complex64::new(1.0, 0.0), |m| m.value(g, &ginv).conj());
    let root = group.modular(g).sqrt();
    let mut worst: f64 = 0.0;
    for v in tests {
        let inner = rep.act(&ginv, v)?.scaled(fix);
        let lhs = rep.act(g, &d.apply(&inner))?;
        let dv = d.apply(v);
        let rhs = dv.scaled(Complex64::new(root, 0.0));
        worst = worst.max(lhs.distance(&rhs)? / dv.norm());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissibilityStatus {
    Admissible,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GrowthProbe {
    pub doublings: usize,
    /// Relative increment below which the last doubling counts as converged.
    pub rtol: f64,
}

impl Default for GrowthProbe {
    fn default() -> Self {
        GrowthProbe { doublings: 3, rtol: 1e-3 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Admissibility {
    pub status: AdmissibilityStatus,
    /// `∫|c_{ψ,ψ}|² dμ / ‖ψ‖²`, reported only when the estimates converged.
    pub dm_norm_sq: Option<f64>,
    pub estimates: Vec<f64>,
    pub boxes: Vec<Vec<(f64, f64)>>,
    pub tail_estimate: f64,
    pub clipped: bool,
}

/// Double a box about its centre (in the internal coordinate of each axis),
/// keeping the node spacing.
pub fn grow_axes(axes: &[GridAxis]) -> Vec<GridAxis> {
    axes.iter()
        .map(|ax| {
            let (u0, u1) = (ax.to_internal(ax.lo), ax.to_internal(ax.hi));
            let (c, h) = (0.5 * (u0 + u1), 0.5 * (u1 - u0));
            GridAxis {
                lo: ax.from_internal(c - 2.0 * h),
                hi: ax.from_internal(c + 2.0 * h),
                count: 2 * ax.count,
                spacing: ax.spacing,
            }
        })
        .collect()
}

/// Estimate `∫|c_{ψ,ψ}|² dμ` on nested boxes starting from `axes`. The
/// vector is admissible when the last doubling changes the estimate by less
/// than `probe.rtol`; divergent when the increments stop shrinking (each at
/// least half the previous one); inconclusive otherwise.
pub fn admissibility(
    rep: &dyn Representation,
    psi: &DiscretizedState,
    axes: &[GridAxis],
    probe: GrowthProbe,
) -> Result<Admissibility> {
    let norm_sq = psi.norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::InvalidParameter("the analyzing vector is zero".into()));
    }
    let mut current = axes.to_vec();
    let (mut estimates, mut boxes) = (Vec::new(), Vec::new());
    let mut clipped_any = false;
    for step in 0..=probe.doublings {
        let (used, clipped) = clip_axes(rep, psi, &current);
        clipped_any |= clipped;
        let grid = haar_grid_axes(rep.group(), used.clone())?;
        let res = analyze(rep, psi, psi, &grid)?;
        estimates.push(res.energy() / norm_sq);
        boxes.push(used.iter().map(|a| (a.lo, a.hi)).collect());
        if step < probe.doublings {
            current = grow_axes(&used);
        }
    }
    let n = estimates.len();
    let last = estimates[n - 1];
    let incs: Vec<f64> = estimates.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let tail = incs.last().copied().unwrap_or(f64::INFINITY) / last.abs().max(f64::MIN_POSITIVE);
    let status = if tail < probe.rtol {
        AdmissibilityStatus::Admissible
    } else if incs.len() >= 2 && incs.windows(2).all(|w| w[1] >= 0.5 * w[0]) {
        AdmissibilityStatus::Divergent
    } else {
        AdmissibilityStatus::Inconclusive
    };
    let dm_norm_sq = (status == AdmissibilityStatus::Admissible).then_some(last);
    Ok(Admissibility { status, dm_norm_sq, estimates, boxes, tail_estimate: tail, clipped: clipped_any })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ModKCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub relerr: f64,
    /// `|lhs(2·K-box) − lhs(K-box)| / rhs`.
    pub tail: f64,
}

/// `∫_G |c^U|² ρ dμ_G` (on the product grid `γ_s(grid_x x grid_k)`, using
/// `μ_G = μ_X ⊗ μ_K`) against `∫_X |c^{P_s}|² dμ_X`.
pub fn mod_k_equiv_check(
    u: &dyn Representation,
    s: &Section,
    rho: &RhoDensity,
    psi: &DiscretizedState,
    phi: &DiscretizedState,
    grid_x: &QuadratureGrid,
    grid_k: &QuadratureGrid,
) -> Result<ModKCheck> {
    let sub = s.subgroup();
    if u.group().name() != sub.ambient().name() {
        return Err(Error::InvalidParameter(format!("{} does not act on {}", u.label(), sub.ambient().name())));
    }
    let amb = sub.ambient();
    let d = grid_k.dim();
    let (axes, offset) = extend_axes(grid_k.axes(), &vec![true; d], &vec![(f64::NEG_INFINITY, f64::INFINITY); d]);
    let wide = haar_grid_axes(grid_k.group(), axes)?;
    let inner = wide.sub_box_mask(&offset, &grid_k.shape());
    let per_x: Vec<(f64, f64, f64)> = (0..grid_x.len())
        .into_par_iter()
        .map(|i| {
            let sx = s.map(grid_x.node(i));
            let cx = coefficient(u, psi, phi, &sx)?;
            let (mut acc, mut all) = (sum::Neumaier::new(), sum::Neumaier::new());
            for j in 0..wide.len() {
                let g = amb.product(&sx, &sub.embed(wide.node(j)));
                let c = coefficient(u, psi, phi, &g)?;
                if c != Complex64::new(0.0, 0.0) {
                    let v = c.norm_sqr() * rho.eval(&g) * wide.weight(j);
                    all.add(v);
                    if inner[j] {
                        acc.add(v);
                    }
                }
            }
            let w = grid_x.weight(i);
            Ok((acc.value() * w, all.value() * w, cx.norm_sqr() * w))
        })
        .collect::<Result<_>>()?;
    let lhs = sum::sum(per_x.iter().map(|v| v.0));
    let wider = sum::sum(per_x.iter().map(|v| v.1));
    let rhs = sum::sum(per_x.iter().map(|v| v.2));
    let (relerr, tail) =
        if rhs == 0.0 { (lhs.abs(), wider.abs()) } else { ((lhs - rhs).abs() / rhs, (wider - lhs).abs() / rhs) };
    Ok(ModKCheck { lhs, rhs, relerr, tail })
}
