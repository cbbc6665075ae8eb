use crate::dsp;
use crate::error::{Error, Result};
use crate::group::{make_polarized_wh, GroupDescriptor};
use crate::state::DiscretizedState;

use super::{bandwidth, phase, Representation};

/// Schrödinger-type representation of the polarized Weyl–Heisenberg group,
/// `(U(k,p,q)f)(x) = e^{i(kǩ + p·x)} f(x + ǩq)`.
pub struct WhRep {
    n: usize,
    kcheck: f64,
    group: GroupDescriptor,
}

pub fn wh_rep(n: usize, kcheck: f64) -> Result<WhRep> {
    if kcheck == 0.0 || !kcheck.is_finite() {
        return Err(Error::InvalidParameter("ǩ must be a nonzero real".into()));
    }
    Ok(WhRep { n, kcheck, group: make_polarized_wh(n)? })
}

impl WhRep {
    pub fn kcheck(&self) -> f64 {
        self.kcheck
    }
}

impl Representation for WhRep {
    fn label(&self) -> String {
        format!("wh[kcheck={}]", self.kcheck)
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
        let (k, p, q) = (g[0], &g[1..1 + n], &g[1 + n..1 + 2 * n]);
        let grid = f.grid().clone();
        let shape = grid.shape();
        let mut data = f.data().to_vec();
        for i in 0..n {
            dsp::translate_axis(&mut data, &shape, i, &grid.axes[i], -self.kcheck * q[i]);
        }
        let c = phase(k * self.kcheck);
        for (idx, z) in data.iter_mut().enumerate() {
            let x = grid.point(idx);
            let px: f64 = p.iter().zip(&x).map(|(a, b)| a * b).sum();
            *z *= c * phase(px);
        }
        DiscretizedState::new(grid, data)
    }

    /// Translations keep the support inside the box, modulations keep the
    /// spectrum below Nyquist.
    fn safe_bounds(&self, f: &DiscretizedState) -> Vec<(f64, f64)> {
        let n = self.n;
        let radius = f.support_radius(1e-12);
        let band = bandwidth(f, 1e-12);
        let mut out = vec![(f64::NEG_INFINITY, f64::INFINITY)];
        for (ax, b) in f.grid().axes.iter().zip(&band) {
            let m = (ax.nyquist() - b).max(0.0);
            out.push((-m, m));
        }
        for (ax, r) in f.grid().axes.iter().zip(&radius).take(n) {
            let m = (ax.half_extent() - r).max(0.0) / self.kcheck.abs();
            out.push((-m, m));
        }
        out
    }
}
