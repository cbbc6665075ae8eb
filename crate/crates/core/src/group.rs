//! Concrete locally compact groups realized as charts on ℝ^d.
//!
//! A [`GroupDescriptor`] bundles the product, inverse, identity, the density of
//! left Haar measure with respect to Lebesgue measure on the chart, and the
//! modular function. Points are plain coordinate vectors; circle coordinates
//! (phases of central extensions) are kept in `[0, 2π)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Point = Vec<f64>;
pub type BinaryMap = Arc<dyn Fn(&[f64], &[f64]) -> Point + Send + Sync>;
pub type UnaryMap = Arc<dyn Fn(&[f64]) -> Point + Send + Sync>;
pub type ScalarMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

const TAU: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    Real,
    /// Strictly positive coordinate (scale parameters).
    Positive,
    /// Phase in `[0, 2π)`.
    Circle,
}

#[derive(Clone, Debug, Serialize)]
pub struct Axis {
    pub label: String,
    pub kind: AxisKind,
}

impl Axis {
    pub fn real(label: impl Into<String>) -> Self {
        Axis { label: label.into(), kind: AxisKind::Real }
    }
    pub fn positive(label: impl Into<String>) -> Self {
        Axis { label: label.into(), kind: AxisKind::Positive }
    }
    pub fn circle(label: impl Into<String>) -> Self {
        Axis { label: label.into(), kind: AxisKind::Circle }
    }
}

/// Human-readable convention sheet emitted by `sqint conventions`.
#[derive(Clone, Debug, Serialize)]
pub struct Conventions {
    pub group: String,
    pub chart: Vec<Axis>,
    pub identity: Vec<f64>,
    pub product: String,
    pub inverse: String,
    pub haar_density: String,
    pub modular: String,
    pub notes: Vec<String>,
}

/// Everything needed to assemble a [`GroupDescriptor`].
pub struct GroupParts {
    pub name: String,
    pub axes: Vec<Axis>,
    pub identity: Point,
    pub product: BinaryMap,
    pub inverse: UnaryMap,
    pub haar_density: ScalarMap,
    pub modular: ScalarMap,
    pub product_text: String,
    pub inverse_text: String,
    pub haar_text: String,
    pub modular_text: String,
    pub notes: Vec<String>,
}

#[derive(Clone)]
pub struct GroupDescriptor {
    name: String,
    axes: Vec<Axis>,
    identity: Point,
    product: BinaryMap,
    inverse: UnaryMap,
    haar_density: ScalarMap,
    modular: ScalarMap,
    conventions: Conventions,
}

impl fmt::Debug for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupDescriptor").field("name", &self.name).field("dim", &self.dim()).finish()
    }
}

impl GroupDescriptor {
    pub fn from_parts(parts: GroupParts) -> Self {
        let conventions = Conventions {
            group: parts.name.clone(),
            chart: parts.axes.clone(),
            identity: parts.identity.clone(),
            product: parts.product_text,
            inverse: parts.inverse_text,
            haar_density: parts.haar_text,
            modular: parts.modular_text,
            notes: parts.notes,
        };
        GroupDescriptor {
            name: parts.name,
            axes: parts.axes,
            identity: parts.identity,
            product: parts.product,
            inverse: parts.inverse,
            haar_density: parts.haar_density,
            modular: parts.modular,
            conventions,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn identity(&self) -> Point {
        self.identity.clone()
    }

    pub fn conventions(&self) -> &Conventions {
        &self.conventions
    }

    pub fn product(&self, g: &[f64], h: &[f64]) -> Point {
        let mut out = (self.product)(g, h);
        self.normalize(&mut out);
        out
    }

    pub fn inverse(&self, g: &[f64]) -> Point {
        let mut out = (self.inverse)(g);
        self.normalize(&mut out);
        out
    }

    /// `g⁻¹ h`.
    pub fn left_divide(&self, g: &[f64], h: &[f64]) -> Point {
        self.product(&self.inverse(g), h)
    }

    pub fn haar_density(&self, g: &[f64]) -> f64 {
        (self.haar_density)(g)
    }

    pub fn modular(&self, g: &[f64]) -> f64 {
        (self.modular)(g)
    }

    /// The domain constraint: right length, finite, positive scale axes.
    pub fn contains(&self, g: &[f64]) -> bool {
        g.len() == self.dim()
            && g.iter().zip(&self.axes).all(|(&v, ax)| {
                v.is_finite()
                    && match ax.kind {
                        AxisKind::Real => true,
                        AxisKind::Positive => v > 0.0,
                        AxisKind::Circle => true,
                    }
            })
    }

    pub fn element(self: &Arc<Self>, coords: Point) -> Result<GroupElement> {
        if !self.contains(&coords) {
            return Err(Error::Domain(format!("{:?} is not a point of {}", coords, self.name)));
        }
        let mut coords = coords;
        self.normalize(&mut coords);
        Ok(GroupElement { coords, group: Arc::clone(self) })
    }

    /// Max-norm chart distance, wrap-aware on circle axes.
    pub fn distance(&self, g: &[f64], h: &[f64]) -> f64 {
        g.iter()
            .zip(h)
            .zip(&self.axes)
            .map(|((a, b), ax)| match ax.kind {
                AxisKind::Circle => wrap_phase(a - b).abs(),
                _ => (a - b).abs(),
            })
            .fold(0.0, f64::max)
    }

    /// Random chart point. Real axes are uniform in `[-scale, scale]`, scale
    /// axes log-uniform in `[e^-scale, e^scale]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> Point {
        self.axes
            .iter()
            .map(|ax| match ax.kind {
                AxisKind::Real => rng.gen_range(-scale..scale),
                AxisKind::Positive => rng.gen_range(-scale..scale).exp(),
                AxisKind::Circle => rng.gen_range(0.0..TAU),
            })
            .collect()
    }

    fn normalize(&self, g: &mut [f64]) {
        for (v, ax) in g.iter_mut().zip(&self.axes) {
            if ax.kind == AxisKind::Circle {
                *v = v.rem_euclid(TAU);
                if *v >= TAU {
                    *v = 0.0;
                }
            }
        }
    }
}

/// A chart point bound to its group.
#[derive(Clone, Debug)]
pub struct GroupElement {
    coords: Point,
    group: Arc<GroupDescriptor>,
}

impl GroupElement {
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn group(&self) -> &Arc<GroupDescriptor> {
        &self.group
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement { coords: self.group.product(&self.coords, &other.coords), group: Arc::clone(&self.group) }
    }

    pub fn inv(&self) -> GroupElement {
        GroupElement { coords: self.group.inverse(&self.coords), group: Arc::clone(&self.group) }
    }
}

/// Phase difference reduced to `(-π, π]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let r = (theta + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    Ok(())
}

fn labels(prefix: &str, n: usize) -> Vec<Axis> {
    if n == 1 {
        vec![Axis::real(prefix)]
    } else {
        (1..=n).map(|i| Axis::real(format!("{prefix}{i}"))).collect()
    }
}

/// Polarized Weyl–Heisenberg group, chart `(k, p, q)`:
/// `(k,p,q)(k',p',q') = (k + k' + q·p', p + p', q + q')`.
pub fn make_polarized_wh(n: usize) -> Result<GroupDescriptor> {
    check_n(n)?;
    let mut axes = vec![Axis::real("k")];
    axes.extend(labels("p", n));
    axes.extend(labels("q", n));
    let norm = (TAU).powi(-(n as i32));
    Ok(GroupDescriptor::from_parts(GroupParts {
        name: format!("wh-polarized-{n}"),
        axes,
        identity: vec![0.0; 2 * n + 1],
        product: Arc::new(move |g, h| {
            let (p, q) = (&g[1..1 + n], &g[1 + n..]);
            let (p2, q2) = (&h[1..1 + n], &h[1 + n..]);
            let mut out = Vec::with_capacity(2 * n + 1);
            out.push(g[0] + h[0] + dot(q, p2));
            out.extend(p.iter().zip(p2).map(|(a, b)| a + b));
            out.extend(q.iter().zip(q2).map(|(a, b)| a + b));
            out
        }),
        inverse: Arc::new(move |g| {
            let (p, q) = (&g[1..1 + n], &g[1 + n..]);
            let mut out = Vec::with_capacity(2 * n + 1);
            out.push(-g[0] + dot(q, p));
            out.extend(p.iter().map(|v| -v));
            out.extend(q.iter().map(|v| -v));
            out
        }),
        haar_density: Arc::new(move |_| norm),
        modular: Arc::new(|_| 1.0),
        product_text: "(k,p,q)(k',p',q') = (k + k' + q·p', p + p', q + q')".into(),
        inverse_text: "(k,p,q)^-1 = (-k + q·p, -p, -q)".into(),
        haar_text: format!("(2π)^-{n} dk dp dq  (μ_K = dk on the center, μ_X = dp dq/(2π)^{n})"),
        modular_text: "1".into(),
        notes: vec!["center K = {(k,0,0)}; quotient X = R^n x R^n with chart (p,q)".into()],
    }))
}

/// Standard Weyl–Heisenberg group:
/// `(k,p,q)(k',p',q') = (k + k' + (q·p' - p·q')/2, p + p', q + q')`.
pub fn make_standard_wh(n: usize) -> Result<GroupDescriptor> {
    check_n(n)?;
    let mut axes = vec![Axis::real("k")];
    axes.extend(labels("p", n));
    axes.extend(labels("q", n));
    let norm = (TAU).powi(-(n as i32));
    Ok(GroupDescriptor::from_parts(GroupParts {
        name: format!("wh-standard-{n}"),
        axes,
        identity: vec![0.0; 2 * n + 1],
        product: Arc::new(move |g, h| {
            let (p, q) = (&g[1..1 + n], &g[1 + n..]);
            let (p2, q2) = (&h[1..1 + n], &h[1 + n..]);
            let mut out = Vec::with_capacity(2 * n + 1);
            out.push(g[0] + h[0] + 0.5 * (dot(q, p2) - dot(p, q2)));
            out.extend(p.iter().zip(p2).map(|(a, b)| a + b));
            out.extend(q.iter().zip(q2).map(|(a, b)| a + b));
            out
        }),
        inverse: Arc::new(move |g| g.iter().map(|v| -v).collect()),
        haar_density: Arc::new(move |_| norm),
        modular: Arc::new(|_| 1.0),
        product_text: "(k,p,q)(k',p',q') = (k + k' + (q·p' - p·q')/2, p + p', q + q')".into(),
        inverse_text: "(k,p,q)^-1 = (-k, -p, -q)".into(),
        haar_text: format!("(2π)^-{n} dk dp dq"),
        modular_text: "1".into(),
        notes: vec!["isomorphic to the polarized form via (k,p,q) -> (k + p·q/2, p, q)".into()],
    }))
}

/// The isomorphism from the standard onto the polarized Weyl–Heisenberg chart.
pub fn delta_iso(g: &[f64]) -> Point {
    let n = (g.len() - 1) / 2;
    let mut out = g.to_vec();
    out[0] = g[0] + 0.5 * dot(&g[1..1 + n], &g[1 + n..]);
    out
}

/// Affine group `R^n ⋊ R^+`, chart `(b, a)`: `(b,a)(b',a') = (b + a b', a a')`.
pub fn make_affine(n: usize) -> Result<GroupDescriptor> {
    check_n(n)?;
    let mut axes = labels("b", n);
    axes.push(Axis::positive("a"));
    let nf = n as f64;
    Ok(GroupDescriptor::from_parts(GroupParts {
        name: format!("affine-{n}"),
        axes,
        identity: {
            let mut e = vec![0.0; n];
            e.push(1.0);
            e
        },
        product: Arc::new(move |g, h| {
            let a = g[n];
            let mut out: Point = (0..n).map(|i| g[i] + a * h[i]).collect();
            out.push(a * h[n]);
            out
        }),
        inverse: Arc::new(move |g| {
            let a = g[n];
            let mut out: Point = (0..n).map(|i| -g[i] / a).collect();
            out.push(1.0 / a);
            out
        }),
        haar_density: Arc::new(move |g| g[n].powf(-(nf + 1.0))),
        modular: Arc::new(move |g| g[n].powf(-nf)),
        product_text: "(b,a)(b',a') = (b + a b', a a')".into(),
        inverse_text: "(b,a)^-1 = (-b/a, 1/a)".into(),
        haar_text: format!("a^-{} db da", n + 1),
        modular_text: format!("a^-{n}"),
        notes: vec!["representation (U(b,a)f)(x) = a^(-n/2) f((x-b)/a)".into()],
    }))
}

/// Index layout of the exotic chart `(t, s, b, p, q, r, a)`.
#[derive(Clone, Copy, Debug)]
pub struct ExoticLayout {
    pub n: usize,
}

impl ExoticLayout {
    pub const T: usize = 0;
    pub const S: usize = 1;
    pub const B: usize = 2;
    pub fn p(&self) -> std::ops::Range<usize> {
        3..3 + self.n
    }
    pub fn q(&self) -> std::ops::Range<usize> {
        3 + self.n..3 + 2 * self.n
    }
    pub fn r(&self) -> std::ops::Range<usize> {
        3 + 2 * self.n..3 + 3 * self.n
    }
    pub fn a(&self) -> usize {
        3 + 3 * self.n
    }
    pub fn dim(&self) -> usize {
        3 * self.n + 4
    }
}

/// The exotic `(3n+4)`-dimensional group with
/// `t'' = t + t' + q·p'`, `s'' = s + a s' + r·p'`, `b'' = b + a b'`,
/// `p'' = p + p'`, `q'' = q + q'`, `r'' = r + a r'`, `a'' = a a'`.
///
/// Left translation by `g0` has a block-triangular Jacobian with diagonal
/// `(1, a0, a0, 1.., 1.., a0.., a0)`, so its determinant is `a0^(n+3)` and the
/// left Haar density is `a^-(n+3)`. Right translation has determinant `a0`,
/// giving `Δ_G(g) = a^-(n+2)`. The constant `(2π)^-(n+1)` makes
/// `μ_G = μ_X ⊗ dt ds dr` with the quotient normalization of
/// [`make_exotic_quotient`].
pub fn make_exotic(n: usize) -> Result<GroupDescriptor> {
    check_n(n)?;
    let l = ExoticLayout { n };
    let mut axes = vec![Axis::real("t"), Axis::real("s"), Axis::real("b")];
    axes.extend(labels("p", n));
    axes.extend(labels("q", n));
    axes.extend(labels("r", n));
    axes.push(Axis::positive("a"));
    let mut identity = vec![0.0; l.dim()];
    identity[l.a()] = 1.0;
    let nf = n as f64;
    let norm = TAU.powi(-(n as i32 + 1));
    Ok(GroupDescriptor::from_parts(GroupParts {
        name: format!("exotic-{n}"),
        axes,
        identity,
        product: Arc::new(move |g, h| {
            let a = g[l.a()];
            let mut out = vec![0.0; l.dim()];
            out[ExoticLayout::T] = g[0] + h[0] + dot(&g[l.q()], &h[l.p()]);
            out[ExoticLayout::S] = g[1] + a * h[1] + dot(&g[l.r()], &h[l.p()]);
            out[ExoticLayout::B] = g[2] + a * h[2];
            for i in 0..n {
                out[l.p().start + i] = g[l.p().start + i] + h[l.p().start + i];
                out[l.q().start + i] = g[l.q().start + i] + h[l.q().start + i];
                out[l.r().start + i] = g[l.r().start + i] + a * h[l.r().start + i];
            }
            out[l.a()] = a * h[l.a()];
            out
        }),
        inverse: Arc::new(move |g| {
            let a = g[l.a()];
            let mut out = vec![0.0; l.dim()];
            out[ExoticLayout::T] = -g[0] + dot(&g[l.q()], &g[l.p()]);
            out[ExoticLayout::S] = (-g[1] + dot(&g[l.r()], &g[l.p()])) / a;
            out[ExoticLayout::B] = -g[2] / a;
            for i in 0..n {
                out[l.p().start + i] = -g[l.p().start + i];
                out[l.q().start + i] = -g[l.q().start + i];
                out[l.r().start + i] = -g[l.r().start + i] / a;
            }
            out[l.a()] = 1.0 / a;
            out
        }),
        haar_density: Arc::new(move |g| norm * g[l.a()].powf(-(nf + 3.0))),
        modular: Arc::new(move |g| g[l.a()].powf(-(nf + 2.0))),
        product_text: "t''=t+t'+q·p', s''=s+a s'+r·p', b''=b+a b', p''=p+p', q''=q+q', r''=r+a r', a''=a a'".into(),
        inverse_text: "(t,s,b,p,q,r,a)^-1 = (-t+q·p, (-s+r·p)/a, -b/a, -p, -q, -r/a, 1/a)".into(),
        haar_text: format!(
            "(2π)^-{} a^-{} dt ds db dp dq dr da  (det of left translation by g0 is a0^{})",
            n + 1,
            n + 3,
            n + 3
        ),
        modular_text: format!("a^-{}  (det of right translation by g0 is a0)", n + 2),
        notes: vec![
            "K = T x S x R is normal, not central; X = G/K has chart (p,q,b,a) and Δ_X = a^-1".into(),
            "section s(p,q,b,a) = (0,0,b,p,q,0,a), multiplier m_s = exp(-i q·p')".into(),
        ],
    }))
}

/// Weyl–Heisenberg quotient `X = R^n x R^n`, chart `(p, q)`, `μ_X = dp dq/(2π)^n`.
pub fn make_wh_quotient(n: usize) -> Result<GroupDescriptor> {
    check_n(n)?;
    let mut axes = labels("p", n);
    axes.extend(labels("q", n));
    let norm = TAU.powi(-(n as i32));
    Ok(GroupDescriptor::from_parts(GroupParts {
        name: format!("wh-quotient-{n}"),
        axes,
        identity: vec![0.0; 2 * n],
        product: Arc::new(|g, h| g.iter().zip(h).map(|(a, b)| a + b).collect()),
        inverse: Arc::new(|g| g.iter().map(|v| -v).collect()),
        haar_density: Arc::new(move |_| norm),
        modular: Arc::new(|_| 1.0),
        product_text: "(p,q)(p',q') = (p + p', q + q')".into(),
        inverse_text: "(p,q)^-1 = (-p, -q)".into(),
        haar_text: format!("(2π)^-{n} dp dq"),
        modular_text: "1".into(),
        notes: vec![],
    }))
}

/// Exotic quotient `X = G/(T x S x R)`, chart `(p, q, b, a)`:
/// `(p,q,b,a)(p',q',b',a') = (p + p', q + q', b + a b', a a')`,
/// `μ_X = (2π)^-(n+1) a^-2 dp dq db da`, `Δ_X = a^-1`.
pub fn make_exotic_quotient(n: usize) -> Result<GroupDescriptor> {
    check_n(n)?;
    let mut axes = labels("p", n);
    axes.extend(labels("q", n));
    axes.push(Axis::real("b"));
    axes.push(Axis::positive("a"));
    let norm = TAU.powi(-(n as i32 + 1));
    let d = 2 * n + 2;
    let mut identity = vec![0.0; d];
    identity[d - 1] = 1.0;
    Ok(GroupDescriptor::from_parts(GroupParts {
        name: format!("exotic-quotient-{n}"),
        axes,
        identity,
        product: Arc::new(move |g, h| {
            let mut out: Point = (0..2 * n).map(|i| g[i] + h[i]).collect();
            out.push(g[d - 2] + g[d - 1] * h[d - 2]);
            out.push(g[d - 1] * h[d - 1]);
            out
        }),
        inverse: Arc::new(move |g| {
            let mut out: Point = (0..2 * n).map(|i| -g[i]).collect();
            out.push(-g[d - 2] / g[d - 1]);
            out.push(1.0 / g[d - 1]);
            out
        }),
        haar_density: Arc::new(move |g| norm * g[d - 1].powi(-2)),
        modular: Arc::new(move |g| 1.0 / g[d - 1]),
        product_text: "(p,q,b,a)(p',q',b',a') = (p + p', q + q', b + a b', a a')".into(),
        inverse_text: "(p,q,b,a)^-1 = (-p, -q, -b/a, 1/a)".into(),
        haar_text: format!("(2π)^-{} a^-2 dp dq db da", n + 1),
        modular_text: "a^-1".into(),
        notes: vec!["normalization fixed so that the Duflo–Moore operator is exactly b^(-1/2)".into()],
    }))
}

/// Additive vector group `R^d` with Lebesgue measure (the K factors).
pub fn make_vector_group(name: &str, axes: Vec<Axis>) -> GroupDescriptor {
    let d = axes.len();
    GroupDescriptor::from_parts(GroupParts {
        name: name.to_string(),
        axes,
        identity: vec![0.0; d],
        product: Arc::new(|g, h| g.iter().zip(h).map(|(a, b)| a + b).collect()),
        inverse: Arc::new(|g| g.iter().map(|v| -v).collect()),
        haar_density: Arc::new(|_| 1.0),
        modular: Arc::new(|_| 1.0),
        product_text: "vector addition".into(),
        inverse_text: "negation".into(),
        haar_text: "Lebesgue".into(),
        modular_text: "1".into(),
        notes: vec![],
    })
}

/// Maximal defects of the group axioms over random samples.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct AxiomDefects {
    pub identity: f64,
    pub inverse: f64,
    pub associativity: f64,
    pub modular_homomorphism: f64,
    pub modular_identity: f64,
}

impl AxiomDefects {
    pub fn max(&self) -> f64 {
        [self.identity, self.inverse, self.associativity, self.modular_homomorphism, self.modular_identity]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn check_axioms<R: Rng + ?Sized>(g: &GroupDescriptor, samples: usize, rng: &mut R) -> AxiomDefects {
    let e = g.identity();
    let mut d = AxiomDefects { modular_identity: (g.modular(&e) - 1.0).abs(), ..Default::default() };
    for _ in 0..samples {
        let x = g.sample(rng, 1.0);
        let y = g.sample(rng, 1.0);
        let z = g.sample(rng, 1.0);
        d.identity = d.identity.max(g.distance(&g.product(&e, &x), &x)).max(g.distance(&g.product(&x, &e), &x));
        d.inverse = d
            .inverse
            .max(g.distance(&g.product(&x, &g.inverse(&x)), &e))
            .max(g.distance(&g.product(&g.inverse(&x), &x), &e));
        let lhs = g.product(&g.product(&x, &y), &z);
        let rhs = g.product(&x, &g.product(&y, &z));
        d.associativity = d.associativity.max(g.distance(&lhs, &rhs));
        let dm = g.modular(&x) * g.modular(&y);
        d.modular_homomorphism = d.modular_homomorphism.max((g.modular(&g.product(&x, &y)) - dm).abs() / dm);
    }
    d
}

/// Numerical `|det|` of the Jacobian of `g ↦ g0 g` (left) or `g ↦ g g0`
/// (right) at `g`, by central differences.
pub fn translation_jacobian(group: &GroupDescriptor, g0: &[f64], g: &[f64], left: bool) -> f64 {
    let d = group.dim();
    let h = 1e-5;
    let apply = |x: &[f64]| if left { (group.product)(g0, x) } else { (group.product)(x, g0) };
    let mut m = vec![0.0; d * d];
    for j in 0..d {
        let mut xp = g.to_vec();
        let mut xm = g.to_vec();
        let step = h * g[j].abs().max(1.0);
        xp[j] += step;
        xm[j] -= step;
        let fp = apply(&xp);
        let fm = apply(&xm);
        for i in 0..d {
            m[i * d + j] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    determinant(&mut m, d).abs()
}

fn determinant(m: &mut [f64], d: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..d {
        let piv = (c..d).max_by(|&a, &b| m[a * d + c].abs().total_cmp(&m[b * d + c].abs())).unwrap();
        if m[piv * d + c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            for k in 0..d {
                m.swap(c * d + k, piv * d + k);
            }
            det = -det;
        }
        let p = m[c * d + c];
        det *= p;
        for r in c + 1..d {
            let f = m[r * d + c] / p;
            for k in c..d {
                m[r * d + k] -= f * m[c * d + k];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn polarized_examples() {
        let g = make_polarized_wh(1).unwrap();
        assert_eq!(g.product(&[0.0, 1.0, 2.0], &[0.0, 3.0, 0.0]), vec![6.0, 4.0, 2.0]);
        assert_eq!(g.product(&g.identity(), &[5.0, 1.0, 1.0]), vec![5.0, 1.0, 1.0]);
        let x = [0.3, -1.2, 0.7];
        assert!(close(&g.inverse(&x), &[-0.3 + 0.7 * -1.2, 1.2, -0.7], 1e-15));
        assert!(matches!(make_polarized_wh(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn polarized_inverse_on_random_points() {
        let g = make_polarized_wh(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = g.sample(&mut rng, 3.0);
            assert!(g.distance(&g.product(&x, &g.inverse(&x)), &g.identity()) < 1e-13);
        }
    }

    #[test]
    fn delta_examples_and_homomorphism() {
        assert_eq!(delta_iso(&[0.0, 2.0, 3.0]), vec![3.0, 2.0, 3.0]);
        assert_eq!(delta_iso(&[0.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
        let hs = make_standard_wh(1).unwrap();
        let hp = make_polarized_wh(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let x = hs.sample(&mut rng, 1.0);
            let y = hs.sample(&mut rng, 1.0);
            let lhs = delta_iso(&hs.product(&x, &y));
            let rhs = hp.product(&delta_iso(&x), &delta_iso(&y));
            worst = worst.max(hp.distance(&lhs, &rhs));
        }
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn affine_examples() {
        let g = make_affine(1).unwrap();
        assert_eq!(g.product(&[1.0, 2.0], &[3.0, 4.0]), vec![7.0, 8.0]);
        assert_eq!(g.modular(&g.identity()), 1.0);
        assert!(!g.contains(&[0.0, 0.0]));
        assert!(!g.contains(&[0.0, -1.0]));
        let arc = Arc::new(g);
        assert!(matches!(arc.element(vec![0.0, -2.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn exotic_example() {
        let g = make_exotic(1).unwrap();
        let x = [0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let y = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0];
        assert_eq!(g.product(&x, &y), vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 2.0]);
        let z = [0.4, -0.2, 1.1, 0.3, -0.9, 0.6, 1.7];
        assert_eq!(g.product(&g.identity(), &z), z.to_vec());
    }

    #[test]
    fn axioms_hold_on_every_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for g in [
            make_polarized_wh(1).unwrap(),
            make_polarized_wh(3).unwrap(),
            make_standard_wh(2).unwrap(),
            make_affine(1).unwrap(),
            make_affine(2).unwrap(),
            make_exotic(1).unwrap(),
            make_exotic(2).unwrap(),
            make_wh_quotient(1).unwrap(),
            make_exotic_quotient(1).unwrap(),
        ] {
            let d = check_axioms(&g, 1000, &mut rng);
            assert!(d.max() <= 1e-12, "{}: {:?}", g.name(), d);
        }
    }

    // Haar densities checked against the numerical Jacobian of translations:
    // h(g0 g) |det L_g0'(g)| = h(g) and Δ(g0) = h(g g0) |det R_g0'(g)| / h(g).
    #[test]
    fn haar_and_modular_match_jacobians() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for g in [
            make_affine(1).unwrap(),
            make_affine(2).unwrap(),
            make_exotic(1).unwrap(),
            make_exotic(2).unwrap(),
            make_exotic_quotient(1).unwrap(),
            make_polarized_wh(2).unwrap(),
        ] {
            for _ in 0..20 {
                let x = g.sample(&mut rng, 0.8);
                let g0 = g.sample(&mut rng, 0.8);
                let jl = translation_jacobian(&g, &g0, &x, true);
                let left = g.haar_density(&g.product(&g0, &x)) * jl / g.haar_density(&x);
                assert!((left - 1.0).abs() < 1e-7, "{} left {}", g.name(), left);
                let jr = translation_jacobian(&g, &g0, &x, false);
                let delta = g.haar_density(&g.product(&x, &g0)) * jr / g.haar_density(&x);
                assert!((delta / g.modular(&g0) - 1.0).abs() < 1e-7, "{} modular", g.name());
            }
        }
    }

    #[test]
    fn wrap_phase_range() {
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!(wrap_phase(TAU).abs() < 1e-15);
        assert!((wrap_phase(0.1 - TAU) - 0.1).abs() < 1e-14);
    }
}
