//! The coordinate isomorphism `γ_s : X x K → G`, the decomposition
//! `μ_G = μ_X ⊗ μ_K` and the measure class `M_{G,K}` through densities
//! `ρ` with `∫_K ρ(gk) dk = 1` for every `g`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Point, ScalarMap};
use crate::multiplier::{kappa_from_section, RelCentralSubgroup, Section};
use crate::quadrature::{haar_grid, QuadratureGrid};
use crate::rep::Representation;
use crate::state::DiscretizedState;
use crate::sum;

/// `γ_s(x, k) = s(x) k`.
pub fn gamma_s(s: &Section, x: &[f64], k: &[f64]) -> Point {
    let sub = s.subgroup();
    sub.ambient().product(&s.map(x), &sub.embed(k))
}

/// `γ_s⁻¹(g) = (p(g), s(p(g))⁻¹ g)`.
pub fn gamma_s_inv(s: &Section, g: &[f64]) -> Result<(Point, Point)> {
    let sub = s.subgroup();
    let x = sub.project(g);
    let k = sub.k_project(&sub.ambient().left_divide(&s.map(&x), g))?;
    Ok((x, k))
}

/// The product of `γ_s(x,k)` and `γ_s(x',k')` in `X x K` coordinates:
/// `(x x', κ_s(x,x')⁻¹ k_{s(x')} k')` with `k_{s(x')} = s(x')⁻¹ k s(x')`.
pub fn coord_product(s: &Section, x: &[f64], k: &[f64], x2: &[f64], k2: &[f64]) -> Result<(Point, Point)> {
    let sub = s.subgroup();
    let (g, kg) = (sub.ambient(), sub.k_group());
    let xx = sub.quotient().product(x, x2);
    let kappa = kappa_from_section(s, x, x2)?;
    let sx2 = s.map(x2);
    let conj = sub.k_project(&g.left_divide(&sx2, &g.product(&sub.embed(k), &sx2)))?;
    Ok((xx, kg.product(&kg.product(&kg.inverse(&kappa), &conj), k2)))
}

/// Both sides of `∫_G f dμ_G = ∫_{X x K} f(s(x)k) dμ_X dμ_K`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecompositionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub relerr: f64,
}

pub fn decompose_check<F>(
    f: F,
    s: &Section,
    grid_g: &QuadratureGrid,
    grid_x: &QuadratureGrid,
    grid_k: &QuadratureGrid,
) -> DecompositionCheck
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let lhs = grid_g.integrate(&f);
    let rows: Vec<f64> = (0..grid_x.len())
        .into_par_iter()
        .map(|i| {
            let x = grid_x.node(i);
            let sx = s.map(x);
            let inner = sum::sum((0..grid_k.len()).map(|j| {
                let g = s.subgroup().ambient().product(&sx, &s.subgroup().embed(grid_k.node(j)));
                f(&g) * grid_k.weight(j)
            }));
            inner * grid_x.weight(i)
        })
        .collect();
    let rhs = sum::sum(rows);
    let scale = lhs.abs().max(rhs.abs());
    let relerr = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    DecompositionCheck { lhs, rhs, relerr }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoKind {
    Gaussian,
    Bump,
    /// `w ≡ 1`, kept only so that it can be rejected explicitly.
    Constant,
}

impl FromStr for RhoKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(RhoKind::Gaussian),
            "bump" | "compact_bump" => Ok(RhoKind::Bump),
            "constant" => Ok(RhoKind::Constant),
            other => Err(Error::InvalidParameter(format!("unknown density kind {other:?}"))),
        }
    }
}

impl fmt::Display for RhoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RhoKind::Gaussian => "gaussian",
            RhoKind::Bump => "bump",
            RhoKind::Constant => "constant",
        })
    }
}

/// A continuous density `ρ` on `G` of a measure in `M_{G,K}`.
#[derive(Clone)]
pub struct RhoDensity {
    subgroup: Arc<RelCentralSubgroup>,
    eval: ScalarMap,
    label: String,
}

impl fmt::Debug for RhoDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RhoDensity({})", self.label)
    }
}

impl RhoDensity {
    pub fn new(subgroup: Arc<RelCentralSubgroup>, label: impl Into<String>, eval: ScalarMap) -> Self {
        RhoDensity { subgroup, eval, label: label.into() }
    }

    pub fn eval(&self, g: &[f64]) -> f64 {
        (self.eval)(g)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn subgroup(&self) -> &Arc<RelCentralSubgroup> {
        &self.subgroup
    }
}

fn bump_profile(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// `∫_{-1}^{1} e^{-1/(1-u²)} du`; the midpoint rule converges faster than
/// any power for this profile.
fn bump_mass() -> f64 {
    let n = 20_000;
    let h = 2.0 / n as f64;
    sum::sum((0..n).map(|i| bump_profile(-1.0 + (i as f64 + 0.5) * h))) * h
}

/// One-dimensional normalized profile of the given kind and width.
pub fn profile(kind: RhoKind, width: f64) -> Result<Arc<dyn Fn(f64) -> f64 + Send + Sync>> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter(format!("density width must be positive, got {width}")));
    }
    match kind {
        RhoKind::Gaussian => {
            let c = 1.0 / (width * (2.0 * std::f64::consts::PI).sqrt());
            Ok(Arc::new(move |k| c * (-0.5 * (k / width).powi(2)).exp()))
        }
        RhoKind::Bump => {
            let c = 1.0 / (width * bump_mass());
            Ok(Arc::new(move |k| c * bump_profile(k / width)))
        }
        RhoKind::Constant => Err(Error::Divergent("a constant density has infinite mass on every K-coset".into())),
    }
}

/// `ρ(g) = Π_i w(k_i)` where `(x, k) = γ_s⁻¹(g)`. Because the K-part of
/// `γ_s⁻¹(gk')` is the K-part of `γ_s⁻¹(g)` times `k'`, the coset integrals
/// are exactly those of `w`.
pub fn make_rho(kind: RhoKind, width: f64, s: &Section) -> Result<RhoDensity> {
    let w = profile(kind, width)?;
    let sec = s.clone();
    Ok(RhoDensity::new(
        Arc::clone(s.subgroup()),
        format!("{kind}(width={width})"),
        Arc::new(move |g| match gamma_s_inv(&sec, g) {
            Ok((_, k)) => k.iter().map(|v| w(*v)).product(),
            Err(_) => f64::NAN,
        }),
    ))
}

/// `ρ^g(g') = ρ(g g')`.
pub fn translate_rho(rho: &RhoDensity, g: &[f64]) -> RhoDensity {
    let (r, g0) = (rho.clone(), g.to_vec());
    let amb = rho.subgroup.ambient().clone();
    RhoDensity::new(
        Arc::clone(&rho.subgroup),
        format!("{}^g", rho.label),
        Arc::new(move |h| r.eval(&amb.product(&g0, h))),
    )
}

/// `α ρ₁ + (1 − α) ρ₂`.
pub fn mix_rho(rho1: &RhoDensity, rho2: &RhoDensity, alpha: f64) -> Result<RhoDensity> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("mixing weight {alpha} outside [0, 1]")));
    }
    let (a, b) = (rho1.clone(), rho2.clone());
    Ok(RhoDensity::new(
        Arc::clone(&rho1.subgroup),
        format!("{alpha}·{} + {}·{}", rho1.label, 1.0 - alpha, rho2.label),
        Arc::new(move |g| alpha * a.eval(g) + (1.0 - alpha) * b.eval(g)),
    ))
}

/// K-box `[-half_width, half_width]^d` with `count` midpoint cells per axis.
pub fn k_box(sub: &RelCentralSubgroup, half_width: f64, count: usize) -> Result<QuadratureGrid> {
    let d = sub.k_group().dim();
    haar_grid(sub.k_group(), &vec![(-half_width, half_width); d], &vec![count; d])
}

/// `max_x |∫_K ρ(s(x)k) dk − 1|` over the given quotient points.
pub fn rho_validate(rho: &RhoDensity, s: &Section, xs: &[Point], grid_k: &QuadratureGrid) -> f64 {
    xs.par_iter()
        .map(|x| {
            let sx = s.map(x);
            let amb = s.subgroup().ambient();
            let mass = grid_k.integrate(|k| rho.eval(&amb.product(&sx, &s.subgroup().embed(k))));
            (mass - 1.0).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// `∫_G f ρ dμ_G`.
pub fn integrate_mod_k<F>(f: F, rho: &RhoDensity, grid: &QuadratureGrid) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    grid.integrate(|g| {
        let v = f(g);
        if v == 0.0 {
            0.0
        } else {
            v * rho.eval(g)
        }
    })
}

/// [`integrate_mod_k`] on grids whose K-extent doubles from `r0`; reports
/// [`Error::Divergent`] when the last doubling still changes the value by
/// more than `rtol`.
pub fn integrate_mod_k_checked<F, B>(f: F, rho: &RhoDensity, build: B, r0: f64, rtol: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
    B: Fn(f64) -> Result<QuadratureGrid>,
{
    let mut last = integrate_mod_k(&f, rho, &build(r0)?);
    let mut r = r0;
    for _ in 0..2 {
        r *= 2.0;
        let next = integrate_mod_k(&f, rho, &build(r)?);
        let change = (next - last).abs();
        if change <= rtol * next.abs().max(f64::MIN_POSITIVE) || (next == 0.0 && last == 0.0) {
            return Ok(next);
        }
        last = next;
    }
    Err(Error::Divergent(format!("∫ f ρ dμ_G still changing after the K-box reached {r}")))
}

/// Partial integrals `I(R) = ∫_{|k| ≤ R} ∫_X |c(k,x)|² dμ_X dk` of a
/// Weyl–Heisenberg coefficient, together with the least-squares slope of
/// `I` against the K-volume `2R`.
#[derive(Clone, Debug, Serialize)]
pub struct DivergenceProbe {
    pub radii: Vec<f64>,
    pub partial: Vec<f64>,
    pub slope: f64,
}

/// `rep` acts on a group whose axis 0 is the central `k` and whose remaining
/// axes are the quotient chart; `x_bounds`/`x_res` describe the quotient box.
pub fn center_divergence_probe(
    rep: &dyn Representation,
    psi: &DiscretizedState,
    phi: &DiscretizedState,
    x_bounds: &[(f64, f64)],
    x_res: &[usize],
    radii: &[f64],
    k_cells_per_unit: f64,
) -> Result<DivergenceProbe> {
    let mut partial = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut bounds = vec![(-r, r)];
        bounds.extend_from_slice(x_bounds);
        let mut res = vec![((2.0 * r * k_cells_per_unit).ceil() as usize).max(2)];
        res.extend_from_slice(x_res);
        let grid = haar_grid(rep.group(), &bounds, &res)?;
        let c = rep.coefficients_on(psi, phi, &grid)?;
        partial.push(sum::sum(c.iter().zip(grid.weights()).map(|(z, w)| z.norm_sqr() * w)));
    }
    // μ_G = (2π)^-n dk dp dq and μ_X = (2π)^-n dp dq, so I(R) = 2R ∫_X |c|² dμ_X.
    let vols: Vec<f64> = radii.iter().map(|r| 2.0 * r).collect();
    let slope = least_squares_slope(&vols, &partial);
    Ok(DivergenceProbe { radii: radii.to_vec(), partial, slope })
}

/// Slope of the least-squares line through the origin.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let xy = sum::sum(x.iter().zip(y).map(|(a, b)| a * b));
    let xx = sum::sum(x.iter().map(|a| a * a));
    if xx == 0.0 {
        0.0
    } else {
        xy / xx
    }
}

/// `∫_X |c|² dμ_X` from coefficients on a quotient grid.
pub fn energy(coeffs: &[Complex64], grid: &QuadratureGrid) -> f64 {
    sum::sum(coeffs.iter().zip(grid.weights()).map(|(z, w)| z.norm_sqr() * w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::ExoticLayout;
    use crate::multiplier::{exotic_section, exotic_tsr, wh_center, wh_section, wh_section_prime};
    use crate::quadrature::haar_grid;
    use crate::rep::{projective_from_section, wh_rep};
    use crate::state::StateGrid;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    #[test]
    fn gamma_identity_and_wh_form() {
        let k = wh_center(1, 1.0).unwrap();
        let s = wh_section(&k);
        assert_eq!(gamma_s(&s, &[0.0, 0.0], &[0.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(gamma_s(&s, &[0.4, -1.2], &[2.5]), vec![2.5, 0.4, -1.2]);
    }

    #[test]
    fn gamma_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let wk = wh_center(2, 0.7).unwrap();
        let ek = exotic_tsr(2).unwrap();
        for s in [wh_section(&wk), wh_section_prime(&wk), exotic_section(&ek)] {
            let g = s.subgroup().ambient().clone();
            for _ in 0..1000 {
                let h = g.sample(&mut rng, 2.0);
                let (x, k) = gamma_s_inv(&s, &h).unwrap();
                assert!(close(&gamma_s(&s, &x, &k), &h, 1e-12));
            }
        }
    }

    #[test]
    fn coordinate_product_matches_group_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let wk = wh_center(1, 1.3).unwrap();
        let ek = exotic_tsr(1).unwrap();
        for s in [wh_section(&wk), wh_section_prime(&wk), exotic_section(&ek)] {
            let sub = s.subgroup().clone();
            for _ in 0..200 {
                let x = sub.quotient().sample(&mut rng, 2.0);
                let x2 = sub.quotient().sample(&mut rng, 2.0);
                let k = sub.k_group().sample(&mut rng, 2.0);
                let k2 = sub.k_group().sample(&mut rng, 2.0);
                let direct = sub.ambient().product(&gamma_s(&s, &x, &k), &gamma_s(&s, &x2, &k2));
                let (dx, dk) = gamma_s_inv(&s, &direct).unwrap();
                let (cx, ck) = coord_product(&s, &x, &k, &x2, &k2).unwrap();
                assert!(close(&cx, &dx, 1e-12) && close(&ck, &dk, 1e-12));
            }
        }
        let s = wh_section(&wk);
        assert_eq!(coord_product(&s, &[0.0, 0.0], &[0.0], &[0.0, 0.0], &[0.0]).unwrap(), (vec![0.0, 0.0], vec![0.0]));
    }

    fn wh_grids(kres: usize) -> (QuadratureGrid, QuadratureGrid, QuadratureGrid) {
        let k = wh_center(1, 1.0).unwrap();
        let gg = haar_grid(k.ambient(), &[(-8.0, 8.0); 3], &[32; 3]).unwrap();
        let gx = haar_grid(k.quotient(), &[(-8.0, 8.0); 2], &[32; 2]).unwrap();
        let gk = k_box(&k, 16.0, kres).unwrap();
        (gg, gx, gk)
    }

    #[test]
    fn decomposition_and_section_swap() {
        let k = wh_center(1, 1.0).unwrap();
        let f = |g: &[f64]| (-0.5 * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2])).exp();
        let (gg, gx, _) = wh_grids(32);
        let gk = k_box(&k, 8.0, 32).unwrap();
        let d = decompose_check(f, &wh_section(&k), &gg, &gx, &gk);
        assert!(d.relerr < 1e-6, "{d:?}");
        let (_, _, gk) = wh_grids(64);
        let a = decompose_check(f, &wh_section(&k), &gg, &gx, &gk);
        let b = decompose_check(f, &wh_section_prime(&k), &gg, &gx, &gk);
        assert!((a.rhs - b.rhs).abs() / a.rhs < 1e-10, "{a:?} {b:?}");
        let zero = decompose_check(|_| 0.0, &wh_section(&k), &gg, &gx, &gk);
        assert_eq!((zero.lhs, zero.rhs, zero.relerr), (0.0, 0.0, 0.0));
    }

    #[test]
    fn wh_gaussian_density_values() {
        let k = wh_center(1, 1.0).unwrap();
        let rho = make_rho(RhoKind::Gaussian, 1.0, &wh_section(&k)).unwrap();
        let want = (-0.5f64 * 0.49).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((rho.eval(&[0.7, 3.0, -2.0]) - want).abs() < 1e-15);
        let shifted = translate_rho(&rho, &[1.0, 0.0, 0.0]);
        let want = (-0.5f64 * 1.7 * 1.7).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((shifted.eval(&[0.7, 3.0, -2.0]) - want).abs() < 1e-15);
    }

    #[test]
    fn densities_are_normalized_on_cosets() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let wk = wh_center(1, 1.0).unwrap();
        let ek = exotic_tsr(1).unwrap();
        for s in [wh_section(&wk), wh_section_prime(&wk)] {
            let xs: Vec<Point> = (0..4).map(|_| s.subgroup().quotient().sample(&mut rng, 1.0)).collect();
            let g = s.subgroup().ambient().sample(&mut rng, 1.0);
            let gk = k_box(&wk, 16.0, 2048).unwrap();
            for kind in [RhoKind::Gaussian, RhoKind::Bump] {
                let rho = make_rho(kind, 2.0, &s).unwrap();
                assert!(rho_validate(&rho, &s, &xs, &gk) < 1e-8, "{kind}");
                assert!(rho_validate(&translate_rho(&rho, &g), &s, &xs, &gk) < 1e-8, "{kind} translated");
            }
            let mix = mix_rho(
                &make_rho(RhoKind::Gaussian, 0.5, &s).unwrap(),
                &make_rho(RhoKind::Bump, 2.0, &s).unwrap(),
                0.3,
            )
            .unwrap();
            assert!(rho_validate(&mix, &s, &xs, &gk) < 1e-8);
        }
        let s = exotic_section(&ek);
        let xs: Vec<Point> = (0..2).map(|_| ek.quotient().sample(&mut rng, 1.0)).collect();
        let g = ek.ambient().sample(&mut rng, 0.3);
        let rho = make_rho(RhoKind::Gaussian, 2.0, &s).unwrap();
        let gk = k_box(&ek, 12.0, 48).unwrap();
        assert!(rho_validate(&rho, &s, &xs, &gk) < 1e-8);
        assert!(rho_validate(&translate_rho(&rho, &g), &s, &xs, &gk) < 1e-8);
        // the bump needs ~120 midpoint nodes across its support per axis
        let rho = make_rho(RhoKind::Bump, 1.0, &s).unwrap();
        let gk = k_box(&ek, 1.5, 180).unwrap();
        let e = rho_validate(&translate_rho(&rho, &g), &s, &xs[..1], &gk);
        assert!(e < 1e-8, "{e}");
    }

    #[test]
    fn exotic_density_scales_with_a() {
        let ek = exotic_tsr(1).unwrap();
        let s = exotic_section(&ek);
        let rho = make_rho(RhoKind::Gaussian, 1.0, &s).unwrap();
        let l = ExoticLayout { n: 1 };
        let mut g = vec![0.0; l.dim()];
        g[ExoticLayout::T] = 0.5;
        g[ExoticLayout::S] = 1.0;
        g[l.r().start] = -2.0;
        g[l.a()] = 2.0;
        let w = |v: f64| (-0.5 * v * v).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((rho.eval(&g) - w(0.5) * w(0.5) * w(-1.0)).abs() < 1e-15);
    }

    #[test]
    fn constant_density_rejected() {
        let k = wh_center(1, 1.0).unwrap();
        assert!(matches!(make_rho(RhoKind::Constant, 1.0, &wh_section(&k)), Err(Error::Divergent(_))));
        let flat = RhoDensity::new(Arc::clone(&k), "one", Arc::new(|_| 1.0));
        let build = |r: f64| haar_grid(k.ambient(), &[(-r, r), (-1.0, 1.0), (-1.0, 1.0)], &[(4.0 * r) as usize, 4, 4]);
        assert!(matches!(integrate_mod_k_checked(|_| 1.0, &flat, build, 4.0, 1e-6), Err(Error::Divergent(_))));
        let rho = make_rho(RhoKind::Gaussian, 1.0, &wh_section(&k)).unwrap();
        let v = integrate_mod_k_checked(|_| 1.0, &rho, build, 4.0, 1e-6).unwrap();
        // unit box in (p,q) has μ_X-volume 4/(2π)
        assert!((v - 4.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-6, "{v}");
    }

    #[test]
    fn left_invariance_of_the_class() {
        let k = wh_center(1, 1.0).unwrap();
        let s = wh_section(&k);
        let rho = make_rho(RhoKind::Gaussian, 1.0, &s).unwrap();
        let amb = k.ambient().clone();
        let g0 = vec![0.3, -0.2, 0.4];
        let f = |g: &[f64]| (-0.5 * (g[1] * g[1] + g[2] * g[2])).exp() * (1.0 + 0.1 * g[0].tanh());
        // ∫ f(g0 g) ρ(g) dμ_G = ∫ f(g) ρ^{g0⁻¹}(g) dμ_G by left invariance of μ_G
        let grid = haar_grid(&amb, &[(-14.0, 14.0), (-9.0, 9.0), (-9.0, 9.0)], &[112, 72, 72]).unwrap();
        let lhs = integrate_mod_k(|g| f(&amb.product(&g0, g)), &rho, &grid);
        let rhs = integrate_mod_k(f, &translate_rho(&rho, &amb.inverse(&g0)), &grid);
        assert!((lhs - rhs).abs() / rhs < 1e-10, "{lhs} {rhs}");
    }

    #[test]
    fn divergence_probe_grows_linearly() {
        let rep = wh_rep(1, 1.0).unwrap();
        let grid = StateGrid::centered(1, 16.0, 128);
        let psi =
            DiscretizedState::from_fn(grid.clone(), |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0)).normalized();
        let phi = psi.clone();
        let probe =
            center_divergence_probe(&rep, &psi, &phi, &[(-8.0, 8.0); 2], &[32, 32], &[1.0, 2.0, 4.0], 2.0).unwrap();
        assert!((probe.partial[1] / probe.partial[0] - 2.0).abs() < 0.05);
        let kc = wh_center(1, 1.0).unwrap();
        let p = projective_from_section(Arc::new(wh_rep(1, 1.0).unwrap()), wh_section(&kc)).unwrap();
        let gx = haar_grid(kc.quotient(), &[(-8.0, 8.0); 2], &[32, 32]).unwrap();
        let xint = energy(&p.coefficients_on(&psi, &phi, &gx).unwrap(), &gx);
        assert!((probe.slope / xint - 1.0).abs() < 0.05);
        let zero = DiscretizedState::zeros(grid);
        let z = center_divergence_probe(&rep, &psi, &zero, &[(-8.0, 8.0); 2], &[8, 8], &[1.0, 2.0], 1.0).unwrap();
        assert!(z.partial.iter().all(|v| *v == 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn gamma_inverse_is_left_inverse(t in -3.0..3.0f64, s in -3.0..3.0f64, b in -3.0..3.0f64,
                                         p in -3.0..3.0f64, q in -3.0..3.0f64, r in -3.0..3.0f64, la in -2.0..2.0f64) {
            let ek = exotic_tsr(1).unwrap();
            let sec = exotic_section(&ek);
            let g = vec![t, s, b, p, q, r, la.exp()];
            let (x, k) = gamma_s_inv(&sec, &g).unwrap();
            prop_assert!(close(&gamma_s(&sec, &x, &k), &g, 1e-12));
        }

        #[test]
        fn coset_mass_is_one(p in -4.0..4.0f64, q in -4.0..4.0f64, width in 0.5..3.0f64) {
            let k = wh_center(1, 1.0).unwrap();
            let s = wh_section_prime(&k);
            let rho = make_rho(RhoKind::Gaussian, width, &s).unwrap();
            let gk = k_box(&k, 12.0 * width + 10.0, 512).unwrap();
            prop_assert!(rho_validate(&rho, &s, &[vec![p, q]], &gk) < 1e-8);
        }
    }
}
