//! Named analyzing and test vectors, all normalized to unit norm.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::state::{DiscretizedState, StateGrid};

/// `e^{-|x-c|²/(2σ²)}`.
pub fn gaussian(grid: &StateGrid, center: &[f64], width: f64) -> DiscretizedState {
    DiscretizedState::from_fn(grid.clone(), |x| {
        let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        Complex64::new((-0.5 * r2 / (width * width)).exp(), 0.0)
    })
    .normalized()
}

/// Hermite function `h_k` along the first axis, a unit Gaussian along the others.
pub fn hermite(grid: &StateGrid, k: usize) -> DiscretizedState {
    DiscretizedState::from_fn(grid.clone(), |x| {
        // physicists' recurrence H_{j+1} = 2x H_j - 2j H_{j-1}
        let t = x[0];
        let (mut h0, mut h1) = (1.0, 2.0 * t);
        let hk = match k {
            0 => h0,
            _ => {
                for j in 1..k {
                    let h2 = 2.0 * t * h1 - 2.0 * j as f64 * h0;
                    h0 = h1;
                    h1 = h2;
                }
                h1
            }
        };
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Complex64::new(hk * (-0.5 * r2).exp(), 0.0)
    })
    .normalized()
}

/// Real Morlet wavelet `(cos(ω₀x) − e^{-ω₀²/2}) e^{-x²/2}` per axis; the
/// correction term makes its integral vanish.
pub fn morlet(grid: &StateGrid, omega0: f64) -> DiscretizedState {
    let corr = (-0.5 * omega0 * omega0).exp();
    DiscretizedState::from_fn(grid.clone(), |x| {
        Complex64::new(x.iter().map(|t| ((omega0 * t).cos() - corr) * (-0.5 * t * t).exp()).product(), 0.0)
    })
    .normalized()
}

/// `(1 − x²/σ²) e^{-x²/(2σ²)}` per axis.
pub fn mexican_hat(grid: &StateGrid, width: f64) -> DiscretizedState {
    DiscretizedState::from_fn(grid.clone(), |x| {
        Complex64::new(
            x.iter().map(|t| (1.0 - (t / width).powi(2)) * (-0.5 * (t / width).powi(2)).exp()).product(),
            0.0,
        )
    })
    .normalized()
}

/// States on the exotic orbit `(b̌, p̌)`, all vanishing at least linearly at
/// `b̌ = 0` so that `b̌^{-1/2}` maps them to finite-norm vectors.
pub fn exotic(grid: &StateGrid, variant: usize) -> DiscretizedState {
    DiscretizedState::from_fn(grid.clone(), |x| {
        let b = x[0];
        let p2: f64 = x[1..].iter().map(|v| v * v).sum();
        let p1 = x.get(1).copied().unwrap_or(0.0);
        match variant % 4 {
            0 => Complex64::new(b * (-0.5 * b * b - 0.5 * p2).exp(), 0.0),
            1 => {
                Complex64::new(b * b, 0.5 * b * p1)
                    * (-0.6 * b * b - 0.5 * (p2 - p1 * p1) - 0.5 * (p1 - 0.5).powi(2)).exp()
            }
            2 => Complex64::from_polar(b * (-0.8 * (b - 1.0).powi(2) - 0.4 * p2).exp(), 0.7 * p1),
            _ => Complex64::new(b * (1.0 - 0.5 * b), 0.2 * p1) * (-0.5 * b * b - 0.5 * p2).exp(),
        }
    })
    .normalized()
}

/// A random superposition of eight Gaussian wave packets (width 1) with
/// centres in `[-3, 3]^n` and carrier frequencies in `[-band/2, band/2]^n`.
pub fn random_band_limited(grid: &StateGrid, band: f64, seed: u64) -> DiscretizedState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = grid.dim();
    let packets: Vec<(Complex64, Vec<f64>, Vec<f64>)> = (0..8)
        .map(|_| {
            let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let c = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let w = (0..d).map(|_| rng.gen_range(-0.5 * band..0.5 * band)).collect();
            (amp, c, w)
        })
        .collect();
    DiscretizedState::from_fn(grid.clone(), move |x| {
        packets
            .iter()
            .map(|(amp, c, w)| {
                let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                let ph: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
                amp * Complex64::from_polar((-0.5 * r2).exp(), ph)
            })
            .sum()
    })
    .normalized()
}

/// Look a vector up by name: `gaussian`, `hermite<k>`, `morlet`,
/// `mexican_hat`, `exotic<k>`, `random<seed>`.
pub fn by_name(name: &str, grid: &StateGrid) -> Result<DiscretizedState> {
    let origin = vec![0.0; grid.dim()];
    let tail = |prefix: &str| name.strip_prefix(prefix).map(|t| if t.is_empty() { Ok(0) } else { t.parse::<u64>() });
    match name {
        "gaussian" => Ok(gaussian(grid, &origin, 1.0)),
        "morlet" => Ok(morlet(grid, 5.0)),
        "mexican_hat" => Ok(mexican_hat(grid, 1.0)),
        _ => {
            let bad = || Error::InvalidParameter(format!("unknown vector `{name}`"));
            if let Some(k) = tail("hermite") {
                Ok(hermite(grid, k.map_err(|_| bad())? as usize))
            } else if let Some(k) = tail("exotic") {
                Ok(exotic(grid, k.map_err(|_| bad())? as usize))
            } else if let Some(s) = tail("random") {
                Ok(random_band_limited(grid, 2.0 * PI / 3.0, s.map_err(|_| bad())?))
            } else {
                Err(bad())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::StateAxis;

    #[test]
    fn hermite_functions_are_orthonormal() {
        let g = StateGrid::centered(1, 16.0, 256);
        let h: Vec<_> = (0..5).map(|k| hermite(&g, k)).collect();
        for i in 0..5 {
            for j in 0..5 {
                let v = h[i].inner(&h[j]).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).norm() < 1e-12, "{i} {j} {v}");
            }
        }
    }

    #[test]
    fn morlet_has_zero_mean() {
        let g = StateGrid::centered(1, 16.0, 256);
        let m = morlet(&g, 5.0);
        let mean: Complex64 = m.data().iter().sum::<Complex64>() * g.cell_volume();
        assert!(mean.norm() < 1e-14);
        let mh = mexican_hat(&g, 1.0);
        let mean: Complex64 = mh.data().iter().sum::<Complex64>() * g.cell_volume();
        assert!(mean.norm() < 1e-14);
    }

    #[test]
    fn names_resolve() {
        let g = StateGrid::centered(1, 8.0, 64);
        for name in ["gaussian", "morlet", "mexican_hat", "hermite3", "random7"] {
            assert!((by_name(name, &g).unwrap().norm() - 1.0).abs() < 1e-12, "{name}");
        }
        let e = StateGrid::new(vec![StateAxis::half_line(8.0, 32), StateAxis::centered(8.0, 32)]);
        assert!((by_name("exotic2", &e).unwrap().norm() - 1.0).abs() < 1e-12);
        assert!(by_name("sawtooth", &g).is_err());
        assert!(by_name("hermiteX", &g).is_err());
        assert_eq!(random_band_limited(&g, 2.0, 3).data(), random_band_limited(&g, 2.0, 3).data());
    }
}
