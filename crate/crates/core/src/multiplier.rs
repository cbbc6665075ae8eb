//! 𝕋-valued multipliers, relatively central subgroups with their sections,
//! the cocycles κ_s and c_s, and central extensions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::{
    make_exotic, make_exotic_quotient, make_polarized_wh, make_vector_group, make_wh_quotient, wrap_phase, Axis,
    ExoticLayout, GroupDescriptor, GroupParts, Point,
};

pub type PhaseMap = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// `m(x₁,x₂) = e^{i·phase(x₁,x₂)}` on the chart of `base`.
#[derive(Clone)]
pub struct Multiplier {
    base: GroupDescriptor,
    phase: PhaseMap,
    label: String,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Multiplier({} on {})", self.label, self.base.name())
    }
}

impl Multiplier {
    pub fn new(base: GroupDescriptor, label: impl Into<String>, phase: PhaseMap) -> Self {
        Multiplier { base, phase, label: label.into() }
    }

    pub fn trivial(base: GroupDescriptor) -> Self {
        Multiplier::new(base, "trivial", Arc::new(|_, _| 0.0))
    }

    pub fn base(&self) -> &GroupDescriptor {
        &self.base
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn phase(&self, x1: &[f64], x2: &[f64]) -> f64 {
        (self.phase)(x1, x2)
    }

    pub fn value(&self, x1: &[f64], x2: &[f64]) -> Complex64 {
        Complex64::from_polar(1.0, self.phase(x1, x2))
    }

    /// `m*(x₁,x₂) = m(x₁,x₂)⁻¹`.
    pub fn conjugate(&self) -> Multiplier {
        let phase = Arc::clone(&self.phase);
        Multiplier::new(self.base.clone(), format!("conj({})", self.label), Arc::new(move |a, b| -phase(a, b)))
    }
}

/// Max wrap-aware defect of normalization and of the cocycle identity
/// `m(g₁,g₂g₃) m(g₂,g₃) = m(g₁g₂,g₃) m(g₁,g₂)` over random triples.
pub fn check_cocycle(m: &Multiplier, trials: usize, seed: u64) -> f64 {
    let g = m.base();
    let e = g.identity();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let x = g.sample(&mut rng, 1.0);
        let y = g.sample(&mut rng, 1.0);
        let z = g.sample(&mut rng, 1.0);
        worst = worst.max(wrap_phase(m.phase(&x, &e)).abs()).max(wrap_phase(m.phase(&e, &x)).abs());
        let lhs = m.phase(&x, &g.product(&y, &z)) + m.phase(&y, &z);
        let rhs = m.phase(&g.product(&x, &y), &z) + m.phase(&x, &y);
        worst = worst.max(wrap_phase(lhs - rhs).abs());
    }
    worst
}

/// Max defect of `m(g₁,g₂) = β(g₁g₂) β(g₁)⁻¹ β(g₂)⁻¹ m'(g₁,g₂)` with β given as a phase.
pub fn similar<B: Fn(&[f64]) -> f64>(m: &Multiplier, m2: &Multiplier, beta: B, trials: usize, seed: u64) -> f64 {
    let g = m.base();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = wrap_phase(beta(&g.identity())).abs();
    for _ in 0..trials {
        let x = g.sample(&mut rng, 1.0);
        let y = g.sample(&mut rng, 1.0);
        let rhs = beta(&g.product(&x, &y)) - beta(&x) - beta(&y) + m2.phase(&x, &y);
        worst = worst.max(wrap_phase(m.phase(&x, &y) - rhs).abs());
    }
    worst
}

/// Central extension `X_m` with chart `(θ, x)`, `θ ∈ [0, 2π)` standing for
/// `τ = e^{iθ}`: `(τ,x)(τ',x') = (m(x,x') τ τ', x x')`.
pub fn central_extension(m: &Multiplier) -> GroupDescriptor {
    let x = m.base().clone();
    let mut axes = vec![Axis::circle("theta")];
    axes.extend(x.axes().iter().cloned());
    let mut identity = vec![0.0];
    identity.extend(x.identity());
    let conv = x.conventions().clone();
    let (xp, xi, xh, xm) = (x.clone(), x.clone(), x.clone(), x.clone());
    let (mp, mi) = (m.clone(), m.clone());
    GroupDescriptor::from_parts(GroupParts {
        name: format!("{}-ext[{}]", x.name(), m.label()),
        axes,
        identity,
        product: Arc::new(move |g, h| {
            let mut out = vec![g[0] + h[0] + mp.phase(&g[1..], &h[1..])];
            out.extend(xp.product(&g[1..], &h[1..]));
            out
        }),
        inverse: Arc::new(move |g| {
            // (τ,x)⁻¹ = (τ⁻¹ m(x,x⁻¹)⁻¹, x⁻¹)
            let xinv = xi.inverse(&g[1..]);
            let mut out = vec![-g[0] - mi.phase(&g[1..], &xinv)];
            out.extend(xinv);
            out
        }),
        haar_density: Arc::new(move |g| xh.haar_density(&g[1..]) / (2.0 * PI)),
        modular: Arc::new(move |g| xm.modular(&g[1..])),
        product_text: format!("(θ,x)(θ',x') = (θ + θ' + phase_m(x,x') mod 2π, x·x') with x·x' from: {}", conv.product),
        inverse_text: "(θ,x)^-1 = (-θ - phase_m(x,x^-1), x^-1)".into(),
        haar_text: format!("dθ/(2π) ⊗ [{}]", conv.haar_density),
        modular_text: format!("Δ_X(x) = {}", conv.modular),
        notes: vec![],
    })
}

/// `(θ,x) ↦ (θ − β(x), x)`, an isomorphism `X_m → X_{m'}` when
/// `m = β(x₁x₂) β(x₁)⁻¹ β(x₂)⁻¹ m'`.
pub fn extension_isomorphism<B: Fn(&[f64]) -> f64>(beta: &B, g: &[f64]) -> Point {
    let mut out = g.to_vec();
    out[0] = (g[0] - beta(&g[1..])).rem_euclid(2.0 * PI);
    out
}

/// A closed normal subgroup `K` realized as a coordinate subspace of the
/// ambient chart, the quotient `X = G/K`, and a character `χ` of `K` (as a phase).
pub struct RelCentralSubgroup {
    ambient: GroupDescriptor,
    quotient: GroupDescriptor,
    k_group: GroupDescriptor,
    k_axes: Vec<usize>,
    projection: Arc<dyn Fn(&[f64]) -> Point + Send + Sync>,
    character: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    central: bool,
}

impl fmt::Debug for RelCentralSubgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RelCentralSubgroup(K ⊂ {}, X = {})", self.ambient.name(), self.quotient.name())
    }
}

impl RelCentralSubgroup {
    pub fn ambient(&self) -> &GroupDescriptor {
        &self.ambient
    }

    pub fn quotient(&self) -> &GroupDescriptor {
        &self.quotient
    }

    /// `K` as a vector group on its own chart (Lebesgue measure μ_K = dk).
    pub fn k_group(&self) -> &GroupDescriptor {
        &self.k_group
    }

    pub fn k_axes(&self) -> &[usize] {
        &self.k_axes
    }

    /// Whether `K` is central in the ambient group.
    pub fn is_central(&self) -> bool {
        self.central
    }

    /// `p : G → X`.
    pub fn project(&self, g: &[f64]) -> Point {
        (self.projection)(g)
    }

    /// K chart → G chart.
    pub fn embed(&self, k: &[f64]) -> Point {
        let mut g = self.ambient.identity();
        for (&ax, &v) in self.k_axes.iter().zip(k) {
            g[ax] = v;
        }
        g
    }

    /// G chart (a point of K) → K chart.
    pub fn k_coords(&self, g: &[f64]) -> Point {
        self.k_axes.iter().map(|&i| g[i]).collect()
    }

    /// Distance of the non-K coordinates of `g` from their identity values.
    pub fn membership_defect(&self, g: &[f64]) -> f64 {
        let e = self.ambient.identity();
        (0..g.len()).filter(|i| !self.k_axes.contains(i)).map(|i| (g[i] - e[i]).abs()).fold(0.0, f64::max)
    }

    pub fn k_project(&self, g: &[f64]) -> Result<Point> {
        let d = self.membership_defect(g);
        if d > 1e-10 {
            return Err(Error::InconsistentSection(format!("{:?} is not in K (defect {:e})", g, d)));
        }
        Ok(self.k_coords(g))
    }

    /// Phase of `χ(k)` for `k` in K-chart coordinates.
    pub fn character(&self, k: &[f64]) -> f64 {
        (self.character)(k)
    }
}

/// Weyl–Heisenberg center `K = {(k,0,0)}` in `Hₙ'` with `χ_ǩ(k) = e^{ikǩ}`.
pub fn wh_center(n: usize, kcheck: f64) -> Result<Arc<RelCentralSubgroup>> {
    if kcheck == 0.0 {
        return Err(Error::InvalidParameter("ǩ must be nonzero".into()));
    }
    Ok(Arc::new(RelCentralSubgroup {
        ambient: make_polarized_wh(n)?,
        quotient: make_wh_quotient(n)?,
        k_group: make_vector_group("wh-center", vec![Axis::real("k")]),
        k_axes: vec![0],
        projection: Arc::new(|g| g[1..].to_vec()),
        character: Arc::new(move |k| kcheck * k[0]),
        central: true,
    }))
}

/// `K = T x S x R` in the exotic group. The character is `e^{it}`: the
/// r-dependence `e^{ik·r}` is only conjugation-invariant for `k = 0`.
pub fn exotic_tsr(n: usize) -> Result<Arc<RelCentralSubgroup>> {
    let l = ExoticLayout { n };
    let mut k_axes = vec![ExoticLayout::T, ExoticLayout::S];
    k_axes.extend(l.r());
    let mut kax = vec![Axis::real("t"), Axis::real("s")];
    kax.extend(if n == 1 { vec![Axis::real("r")] } else { (1..=n).map(|i| Axis::real(format!("r{i}"))).collect() });
    Ok(Arc::new(RelCentralSubgroup {
        ambient: make_exotic(n)?,
        quotient: make_exotic_quotient(n)?,
        k_group: make_vector_group("exotic-tsr", kax),
        k_axes,
        projection: Arc::new(move |g| {
            let mut x: Point = g[l.p()].to_vec();
            x.extend_from_slice(&g[l.q()]);
            x.push(g[ExoticLayout::B]);
            x.push(g[l.a()]);
            x
        }),
        character: Arc::new(|k| k[0]),
        central: false,
    }))
}

/// A section `s : X → G` of the quotient map of a [`RelCentralSubgroup`].
#[derive(Clone)]
pub struct Section {
    subgroup: Arc<RelCentralSubgroup>,
    map: Arc<dyn Fn(&[f64]) -> Point + Send + Sync>,
    label: String,
}

impl fmt::Debug for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Section({})", self.label)
    }
}

impl Section {
    pub fn new(
        subgroup: Arc<RelCentralSubgroup>,
        label: impl Into<String>,
        map: Arc<dyn Fn(&[f64]) -> Point + Send + Sync>,
    ) -> Self {
        Section { subgroup, map, label: label.into() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn subgroup(&self) -> &Arc<RelCentralSubgroup> {
        &self.subgroup
    }

    pub fn map(&self, x: &[f64]) -> Point {
        (self.map)(x)
    }

    pub fn projection(&self, g: &[f64]) -> Point {
        self.subgroup.project(g)
    }

    pub fn subgroup_embed(&self, k: &[f64]) -> Point {
        self.subgroup.embed(k)
    }

    pub fn character(&self, k: &[f64]) -> f64 {
        self.subgroup.character(k)
    }
}

/// `s(p,q) = (0,p,q)`.
pub fn wh_section(k: &Arc<RelCentralSubgroup>) -> Section {
    Section::new(
        Arc::clone(k),
        "s",
        Arc::new(|x| {
            let mut g = vec![0.0];
            g.extend_from_slice(x);
            g
        }),
    )
}

/// `s'(p,q) = (p·q/2, p, q)`.
pub fn wh_section_prime(k: &Arc<RelCentralSubgroup>) -> Section {
    Section::new(
        Arc::clone(k),
        "s'",
        Arc::new(|x| {
            let n = x.len() / 2;
            let pq: f64 = (0..n).map(|i| x[i] * x[n + i]).sum();
            let mut g = vec![0.5 * pq];
            g.extend_from_slice(x);
            g
        }),
    )
}

/// `s(p,q,b,a) = (0,0,b,p,q,0,a)`.
pub fn exotic_section(k: &Arc<RelCentralSubgroup>) -> Section {
    let n = (k.quotient().dim() - 2) / 2;
    let l = ExoticLayout { n };
    Section::new(
        Arc::clone(k),
        "s",
        Arc::new(move |x| {
            let mut g = vec![0.0; l.dim()];
            g[ExoticLayout::B] = x[2 * n];
            g[l.p()].copy_from_slice(&x[..n]);
            g[l.q()].copy_from_slice(&x[n..2 * n]);
            g[l.a()] = x[2 * n + 1];
            g
        }),
    )
}

/// `κ_s(x₁,x₂) = (s(x₁)s(x₂))⁻¹ s(x₁x₂)` in K-chart coordinates.
pub fn kappa_from_section(s: &Section, x1: &[f64], x2: &[f64]) -> Result<Point> {
    let k = s.subgroup();
    let (g, x) = (k.ambient(), k.quotient());
    let lhs = g.product(&s.map(x1), &s.map(x2));
    let kappa = g.left_divide(&lhs, &s.map(&x.product(x1, x2)));
    k.k_project(&kappa)
}

/// `m_s(x₁,x₂) = χ(κ_s(x₁,x₂))`.
pub fn multiplier_from_section(s: &Section) -> Multiplier {
    let sec = s.clone();
    let base = s.subgroup().quotient().clone();
    Multiplier::new(
        base,
        format!("m[{}]", s.label()),
        Arc::new(move |a, b| {
            let kappa = kappa_from_section(&sec, a, b).expect("section consistent");
            sec.character(&kappa)
        }),
    )
}

/// `g[x] = p(g)·x`.
pub fn act_on_quotient(k: &RelCentralSubgroup, g: &[f64], x: &[f64]) -> Point {
    k.quotient().product(&k.project(g), x)
}

/// `c_s(g, x) = s(x)⁻¹ g⁻¹ s(g[x])` in K-chart coordinates.
pub fn section_cocycle(s: &Section, g: &[f64], x: &[f64]) -> Result<Point> {
    let k = s.subgroup();
    let amb = k.ambient();
    let gx = act_on_quotient(k, g, x);
    let c = amb.product(&amb.product(&amb.inverse(&s.map(x)), &amb.inverse(g)), &s.map(&gx));
    k.k_project(&c)
}
