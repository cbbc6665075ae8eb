//! Functions on the quotient `X`, the χ-covariant space `G^χ`, the induced
//! representation `R^{χ,s}` and the left regular `m`-representation.
//!
//! Functions on `X` are stored as samples on a [`QuadratureGrid`]. Evaluating
//! them at `g⁻¹[x]` uses separable band-limited interpolation in the grid's
//! internal (equispaced) coordinates, which is exact for left translations of
//! the implemented quotients because each acts axis by axis.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dsp;
use crate::error::{Error, Result};
use crate::group::Point;
use crate::measures::gamma_s_inv;
use crate::multiplier::{section_cocycle, Multiplier, RelCentralSubgroup, Section};
use crate::quadrature::QuadratureGrid;
use crate::state::{DiscretizedState, StateAxis};
use crate::sum;

/// Samples of a function on the nodes of a quotient grid.
#[derive(Clone, Debug)]
pub struct XFunction {
    pub grid: QuadratureGrid,
    pub values: Vec<Complex64>,
}

impl XFunction {
    pub fn new(grid: QuadratureGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        Ok(XFunction { grid, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64 + Sync>(grid: QuadratureGrid, f: F) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.node(i))).collect();
        XFunction { grid, values }
    }

    /// `∫_X |f|² dμ_X`.
    pub fn norm_sq(&self) -> f64 {
        sum::sum(self.values.iter().zip(self.grid.weights()).map(|(z, w)| z.norm_sqr() * w))
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `⟨self, other⟩` in `L²(X, μ_X)`.
    pub fn inner(&self, other: &XFunction) -> Result<Complex64> {
        self.check_same(other)?;
        Ok(sum::sum_c(
            self.values.iter().zip(&other.values).zip(self.grid.weights()).map(|((a, b), w)| a.conj() * b * *w),
        ))
    }

    pub fn distance(&self, other: &XFunction) -> Result<f64> {
        self.check_same(other)?;
        Ok(sum::sum(
            self.values.iter().zip(&other.values).zip(self.grid.weights()).map(|((a, b), w)| (a - b).norm_sqr() * w),
        )
        .sqrt())
    }

    fn check_same(&self, other: &XFunction) -> Result<()> {
        if self.grid.axes() != other.grid.axes() || self.grid.group().name() != other.grid.group().name() {
            return Err(Error::GridMismatch("functions live on different quotient grids".into()));
        }
        Ok(())
    }

    /// `f(target(x))` at every node, by separable band-limited interpolation.
    /// `target` must act on each chart axis independently.
    pub fn pull_back<T: Fn(&[f64]) -> Point>(&self, target: T) -> Result<XFunction> {
        let grid = &self.grid;
        let d = grid.dim();
        let shape = grid.shape();
        let base: Vec<f64> = (0..d).map(|k| grid.axis_nodes(k)[0]).collect();
        let mut maps = Vec::with_capacity(d);
        for k in 0..d {
            let ax = grid.axes()[k];
            let t: Vec<f64> = grid
                .axis_nodes(k)
                .iter()
                .map(|&v| {
                    let mut x = base.clone();
                    x[k] = v;
                    target(&x)[k]
                })
                .collect();
            if ax.spacing == crate::quadrature::Spacing::Log && t.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Domain(format!("axis {k} mapped off the positive half-line")));
            }
            let lo = ax.to_internal(ax.lo);
            let hi = ax.to_internal(ax.hi);
            let span = hi - lo;
            let internal: Vec<f64> = t.iter().map(|v| ax.to_internal(*v)).collect();
            let (tmin, tmax) =
                internal.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            let overlap = tmax.min(hi) - tmin.max(lo);
            if overlap < 0.5 * span {
                return Err(Error::Unsafe(format!("the action moves axis {k} more than half way off the grid")));
            }
            maps.push(internal);
        }
        // spot-check separability on a few nodes
        let probes = [grid.len() / 3, grid.len() / 2, (2 * grid.len()) / 3, grid.len() - 1];
        for &i in &probes {
            let x = grid.node(i);
            let t = target(x);
            let idx = grid.multi_index(i);
            for k in 0..d {
                let want = maps[k][idx[k]];
                let got = grid.axes()[k].to_internal(t[k]);
                if (want - got).abs() > 1e-9 * (1.0 + want.abs()) {
                    return Err(Error::InvalidParameter(format!("action is not separable along axis {k}")));
                }
            }
        }
        let mut data = self.values.clone();
        let mut s = shape.clone();
        for k in 0..d {
            let ax = grid.axes()[k];
            let sa = StateAxis { offset: ax.first(), spacing: ax.step(), count: ax.count };
            let mat = dsp::sinc_matrix(&sa, &maps[k], false);
            let (out, ns) = dsp::contract_axis(&data, &s, k, &mat, maps[k].len());
            data = out;
            s = ns;
        }
        XFunction::new(grid.clone(), data)
    }
}

/// An element of `G^χ` represented by its trace `f∘s` on a quotient grid;
/// `f(s(x)k) = χ(k)⁻¹ f(s(x))`.
#[derive(Clone, Debug)]
pub struct CovariantFunction {
    pub section: Section,
    pub trace: XFunction,
}

impl CovariantFunction {
    pub fn subgroup(&self) -> &Arc<RelCentralSubgroup> {
        self.section.subgroup()
    }

    /// `f(g)` when `p(g)` is a grid node.
    pub fn eval(&self, g: &[f64]) -> Result<Complex64> {
        let (x, k) = gamma_s_inv(&self.section, g)?;
        let i = self
            .trace
            .grid
            .locate(&x, 1e-9)
            .ok_or_else(|| Error::Domain(format!("p(g) = {x:?} is not a grid node")))?;
        Ok(self.trace.values[i] * Complex64::from_polar(1.0, -self.section.character(&k)))
    }

    /// `‖f‖² = ∫_X |f(s(x))|² dμ_X`.
    pub fn norm_sq(&self) -> f64 {
        self.trace.norm_sq()
    }

    /// The trace along another section `s'`:
    /// `f(s'(x)) = χ(υ(x))⁻¹ f(s(x))` with `s'(x) = s(x) υ(x)`.
    pub fn trace_along(&self, other: &Section) -> Result<XFunction> {
        let grid = &self.trace.grid;
        let vals = (0..grid.len()).map(|i| self.eval(&other.map(grid.node(i)))).collect::<Result<Vec<_>>>()?;
        XFunction::new(grid.clone(), vals)
    }
}

/// `(F_s φ)(g) = χ(s(p(g))⁻¹ g)⁻¹ φ(p(g))`. On the grid this is a relabeling.
pub fn f_s(section: &Section, phi: &XFunction) -> CovariantFunction {
    CovariantFunction { section: section.clone(), trace: phi.clone() }
}

/// `(R^{χ,s}(g) f)(x) = χ(c_s(g⁻¹, x)) f(g⁻¹[x])`.
pub fn r_chi_s(section: &Section, g: &[f64], f: &XFunction) -> Result<XFunction> {
    let sub = section.subgroup();
    let ginv = sub.ambient().inverse(g);
    let px = sub.project(&ginv);
    let x_group = sub.quotient().clone();
    let moved = f.pull_back(|x| x_group.product(&px, x))?;
    let grid = &f.grid;
    let phases = (0..grid.len())
        .into_par_iter()
        .map(|i| section_cocycle(section, &ginv, grid.node(i)).map(|c| section.character(&c)))
        .collect::<Result<Vec<_>>>()?;
    let vals = moved.values.iter().zip(&phases).map(|(v, ph)| v * Complex64::from_polar(1.0, *ph)).collect();
    XFunction::new(grid.clone(), vals)
}

/// `(R^m_{x₀} f)(x) = m(x₀, x₀⁻¹x)⁻¹ f(x₀⁻¹x)`.
pub fn left_reg_m(m: &Multiplier, x0: &[f64], f: &XFunction) -> Result<XFunction> {
    let x = m.base().clone();
    let x0inv = x.inverse(x0);
    let moved = f.pull_back(|y| x.product(&x0inv, y))?;
    let grid = &f.grid;
    let vals = (0..grid.len())
        .map(|i| {
            let y = x.product(&x0inv, grid.node(i));
            moved.values[i] * Complex64::from_polar(1.0, -m.phase(x0, &y))
        })
        .collect();
    XFunction::new(grid.clone(), vals)
}

/// `max_v ‖A U(g) v − R(g) A v‖ / ‖v‖` over the test states.
pub fn intertwine_defect<A, L, R>(a: A, left: L, right: R, tests: &[DiscretizedState]) -> Result<f64>
where
    A: Fn(&DiscretizedState) -> Result<XFunction>,
    L: Fn(&DiscretizedState) -> Result<DiscretizedState>,
    R: Fn(&XFunction) -> Result<XFunction>,
{
    let mut worst: f64 = 0.0;
    for v in tests {
        let lhs = a(&left(v)?)?;
        let rhs = right(&a(v)?)?;
        worst = worst.max(lhs.distance(&rhs)? / v.norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::ExoticLayout;
    use crate::multiplier::{
        exotic_section, exotic_tsr, multiplier_from_section, wh_center, wh_section, wh_section_prime,
    };
    use crate::quadrature::{haar_grid, haar_grid_axes, GridAxis};
    use crate::rep::{projective_from_section, wh_rep, Representation};
    use crate::state::StateGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wh_x_grid() -> QuadratureGrid {
        let k = wh_center(1, 1.0).unwrap();
        haar_grid(k.quotient(), &[(-10.0, 10.0); 2], &[80, 80]).unwrap()
    }

    fn smooth(grid: QuadratureGrid, c: (f64, f64)) -> XFunction {
        XFunction::from_fn(grid, move |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::from_polar((-0.25 * r2).exp(), c.0 * x[0] + c.1 * x[1])
        })
    }

    #[test]
    fn f_s_is_isometric_and_covariant() {
        let k = wh_center(1, 1.3).unwrap();
        let s = wh_section(&k);
        let phi = smooth(wh_x_grid(), (0.3, -0.2));
        let f = f_s(&s, &phi);
        assert!((f.norm_sq() - phi.norm_sq()).abs() <= 1e-12 * phi.norm_sq());
        let x = phi.grid.node(1234).to_vec();
        let base = f.eval(&s.map(&x)).unwrap();
        for kk in [-2.0, 0.5, 3.0] {
            let g = crate::measures::gamma_s(&s, &x, &[kk]);
            let got = f.eval(&g).unwrap();
            assert_eq!(got, base * Complex64::from_polar(1.0, -1.3 * kk));
        }
        let zero = f_s(&s, &XFunction::from_fn(wh_x_grid(), |_| Complex64::new(0.0, 0.0)));
        assert_eq!(zero.norm_sq(), 0.0);
    }

    #[test]
    fn trace_along_other_section() {
        let k = wh_center(1, 0.8).unwrap();
        let (s, s2) = (wh_section(&k), wh_section_prime(&k));
        let phi = smooth(wh_x_grid(), (0.1, 0.4));
        let t = f_s(&s, &phi).trace_along(&s2).unwrap();
        for i in [0, 77, 3000] {
            let x = phi.grid.node(i);
            // s'(x) = s(x) υ(x) with υ = p·q/2
            let want = phi.values[i] * Complex64::from_polar(1.0, -0.8 * 0.5 * x[0] * x[1]);
            assert!((t.values[i] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn induced_rep_identity_center_unitarity_composition() {
        let k = wh_center(1, 1.1).unwrap();
        let s = wh_section(&k);
        let f = smooth(wh_x_grid(), (0.2, 0.3));
        let e = k.ambient().identity();
        assert!(r_chi_s(&s, &e, &f).unwrap().distance(&f).unwrap() < 1e-14);
        let c = r_chi_s(&s, &[0.7, 0.0, 0.0], &f).unwrap();
        let want = XFunction::new(
            f.grid.clone(),
            f.values.iter().map(|v| v * Complex64::from_polar(1.0, 1.1 * 0.7)).collect(),
        )
        .unwrap();
        assert!(c.distance(&want).unwrap() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g0 = k.ambient().clone();
        for _ in 0..10 {
            let g = g0.sample(&mut rng, 1.5);
            let h = g0.sample(&mut rng, 1.5);
            let rh = r_chi_s(&s, &h, &f).unwrap();
            assert!((rh.norm() - f.norm()).abs() < 1e-8 * f.norm());
            let lhs = r_chi_s(&s, &g, &rh).unwrap();
            let rhs = r_chi_s(&s, &g0.product(&g, &h), &f).unwrap();
            assert!(lhs.distance(&rhs).unwrap() < 1e-8 * f.norm());
        }
    }

    #[test]
    fn induced_rep_on_exotic_center_is_scalar() {
        let k = exotic_tsr(1).unwrap();
        let s = exotic_section(&k);
        let grid = haar_grid_axes(
            k.quotient(),
            vec![
                GridAxis::uniform(-6.0, 6.0, 24),
                GridAxis::uniform(-6.0, 6.0, 24),
                GridAxis::uniform(-6.0, 6.0, 24),
                GridAxis::log(1.0 / 16.0, 16.0, 24),
            ],
        )
        .unwrap();
        let f = XFunction::from_fn(grid, |x| {
            Complex64::new((-0.3 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) - x[3].ln().powi(2)).exp(), 0.0)
        });
        let l = ExoticLayout { n: 1 };
        let mut g = k.ambient().identity();
        g[ExoticLayout::T] = 0.9;
        g[ExoticLayout::S] = -1.2;
        g[l.r().start] = 2.0;
        let got = r_chi_s(&s, &g, &f).unwrap();
        let want =
            XFunction::new(f.grid.clone(), f.values.iter().map(|v| v * Complex64::from_polar(1.0, 0.9)).collect())
                .unwrap();
        assert!(got.distance(&want).unwrap() < 1e-10 * f.norm());
    }

    #[test]
    fn left_regular_m_rep() {
        let k = wh_center(1, 1.0).unwrap();
        let m = multiplier_from_section(&wh_section(&k));
        let f = smooth(wh_x_grid(), (0.0, 0.25));
        assert!(left_reg_m(&m, &[0.0, 0.0], &f).unwrap().distance(&f).unwrap() < 1e-14);
        let trivial = Multiplier::trivial(k.quotient().clone());
        let plain = left_reg_m(&trivial, &[0.5, -0.25], &f).unwrap();
        let direct = smooth(wh_x_grid(), (0.0, 0.25));
        let direct = XFunction::from_fn(direct.grid.clone(), |x| {
            let y = [x[0] - 0.5, x[1] + 0.25];
            Complex64::from_polar((-0.25 * (y[0] * y[0] + y[1] * y[1])).exp(), 0.25 * y[1])
        });
        assert!(plain.distance(&direct).unwrap() < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..10 {
            let a: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let b: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let lhs = left_reg_m(&m, &k.quotient().product(&a, &b), &f).unwrap();
            let rhs = left_reg_m(&m, &a, &left_reg_m(&m, &b, &f).unwrap()).unwrap();
            let rhs =
                XFunction::new(rhs.grid.clone(), rhs.values.iter().map(|v| v * m.value(&a, &b)).collect()).unwrap();
            assert!(lhs.distance(&rhs).unwrap() < 1e-8);
        }
    }

    #[test]
    fn gabor_intertwining() {
        let k = wh_center(1, -1.0).unwrap();
        let s = wh_section_prime(&k);
        let u = Arc::new(wh_rep(1, -1.0).unwrap());
        let p = projective_from_section(u.clone(), s.clone()).unwrap();
        let m = p.multiplier().unwrap().clone();
        let sg = StateGrid::centered(1, 16.0, 128);
        let psi =
            DiscretizedState::from_fn(sg.clone(), |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0)).normalized();
        let v = DiscretizedState::from_fn(sg, |x| {
            Complex64::new((-0.5 * (x[0] - 0.5).powi(2)).exp(), 0.3 * x[0] * (-0.5 * x[0] * x[0]).exp())
        })
        .normalized();
        let grid = haar_grid(k.quotient(), &[(-10.0, 10.0); 2], &[64, 64]).unwrap();
        let analyze = |f: &DiscretizedState| XFunction::new(grid.clone(), p.coefficients_on(&psi, f, &grid)?);
        let g = vec![0.4, 0.6, -0.9];
        let d = intertwine_defect(&analyze, |f| u.act(&g, f), |c| r_chi_s(&s, &g, c), &[v.clone()]).unwrap();
        assert!(d < 1e-6, "{d}");
        let x0 = vec![0.6, -0.9];
        let d = intertwine_defect(&analyze, |f| p.act(&x0, f), |c| left_reg_m(&m, &x0, c), &[v.clone()]).unwrap();
        assert!(d < 1e-6, "{d}");
        let wrong = m.conjugate();
        let d = intertwine_defect(&analyze, |f| p.act(&x0, f), |c| left_reg_m(&wrong, &x0, c), &[v.clone()]).unwrap();
        assert!(d > 0.1, "{d}");
        assert_eq!(intertwine_defect(&analyze, |f| Ok(f.clone()), |c| Ok(c.clone()), &[v]).unwrap(), 0.0);
    }
}
