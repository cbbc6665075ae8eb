//! Band-limited signal operations on row-major sampled arrays: FFT phase-ramp
//! translation, sinc resampling, discrete-time Fourier sums and the unitary
//! Fourier–Plancherel transform.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::state::{DiscretizedState, StateAxis, StateGrid};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

/// Apply `f` to every 1-D line of `data` running along `axis`.
pub fn map_lines<F: FnMut(&mut [Complex64])>(data: &mut [Complex64], shape: &[usize], axis: usize, mut f: F) {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            for j in 0..n {
                line[j] = data[base + j * inner];
            }
            f(&mut line);
            for j in 0..n {
                data[base + j * inner] = line[j];
            }
        }
    }
}

/// `f(x) ↦ f(x − t)` along `axis` using the trigonometric interpolant.
pub fn translate_axis(data: &mut [Complex64], shape: &[usize], axis: usize, ax: &StateAxis, t: f64) {
    if t == 0.0 {
        return;
    }
    let n = shape[axis];
    let fwd = plan(n, true);
    let inv = plan(n, false);
    let ramp: Vec<Complex64> =
        ax.fft_frequencies().iter().map(|&w| Complex64::from_polar(1.0 / n as f64, -w * t)).collect();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
    map_lines(data, shape, axis, |line| {
        fwd.process_with_scratch(line, &mut scratch);
        for (z, r) in line.iter_mut().zip(&ramp) {
            *z *= r;
        }
        inv.process_with_scratch(line, &mut scratch);
    });
}

/// Coefficient types usable in [`contract_axis`].
pub trait Coef: Copy + Send + Sync {
    fn times(self, z: Complex64) -> Complex64;
}

impl Coef for f64 {
    fn times(self, z: Complex64) -> Complex64 {
        z * self
    }
}

impl Coef for Complex64 {
    fn times(self, z: Complex64) -> Complex64 {
        self * z
    }
}

/// Replace `axis` (length N) by `m` entries: `out[.., r, ..] = Σ_j mat[r·N + j] data[.., j, ..]`.
pub fn contract_axis<C: Coef>(
    data: &[Complex64],
    shape: &[usize],
    axis: usize,
    mat: &[C],
    m: usize,
) -> (Vec<Complex64>, Vec<usize>) {
    let n = shape[axis];
    debug_assert_eq!(mat.len(), m * n);
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * m * inner];
    let body = |(row, chunk): (usize, &mut [Complex64])| {
        let o = row / m;
        let r = row % m;
        let coefs = &mat[r * n..(r + 1) * n];
        let src = &data[o * n * inner..(o + 1) * n * inner];
        for (j, c) in coefs.iter().enumerate() {
            let line = &src[j * inner..(j + 1) * inner];
            for (acc, z) in chunk.iter_mut().zip(line) {
                *acc += c.times(*z);
            }
        }
    };
    if outer * m * inner * n > 1 << 16 {
        out.par_chunks_mut(inner).enumerate().for_each(body);
    } else {
        out.chunks_mut(inner).enumerate().for_each(body);
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = m;
    (out, new_shape)
}

fn sinc_term(frac: f64, sin_frac: f64, offset: i64) -> f64 {
    if offset == 0 {
        if frac.abs() < 1e-8 {
            1.0 - (PI * frac).powi(2) / 6.0
        } else {
            sin_frac / (PI * frac)
        }
    } else {
        let sign = if offset % 2 == 0 { 1.0 } else { -1.0 };
        sign * sin_frac / (PI * (frac + offset as f64))
    }
}

/// Whittaker–Shannon interpolation weights evaluating the samples on `ax` at
/// `targets`. With `odd` the samples are treated as the restriction of an odd
/// function (reflection through 0), which keeps half-line states smooth.
pub fn sinc_matrix(ax: &StateAxis, targets: &[f64], odd: bool) -> Vec<f64> {
    let n = ax.count;
    let mut mat = vec![0.0; targets.len() * n];
    for (r, &y) in targets.iter().enumerate() {
        let row = &mut mat[r * n..(r + 1) * n];
        let u = (y - ax.offset) / ax.spacing;
        let m0 = u.round();
        let frac = u - m0;
        let s = (PI * frac).sin();
        for (j, w) in row.iter_mut().enumerate() {
            *w = sinc_term(frac, s, m0 as i64 - j as i64);
        }
        if odd {
            // samples at -x_j: (y + x_j)/Δ = v + j
            let v = (y + ax.offset) / ax.spacing;
            let m1 = v.round();
            let frac1 = v - m1;
            let s1 = (PI * frac1).sin();
            for (j, w) in row.iter_mut().enumerate() {
                *w -= sinc_term(frac1, s1, m1 as i64 + j as i64);
            }
        }
    }
    mat
}

/// Evaluate the band-limited interpolant along `axis` at `targets`.
pub fn resample_axis(
    data: &[Complex64],
    shape: &[usize],
    axis: usize,
    ax: &StateAxis,
    targets: &[f64],
    odd: bool,
) -> Vec<Complex64> {
    let mat = sinc_matrix(ax, targets, odd);
    contract_axis(data, shape, axis, &mat, targets.len()).0
}

/// `Σ_j f(x_j) e^{-iξ x_j} Δ` for each `ξ` in `freqs` (the continuous Fourier
/// transform of the band-limited interpolant). Rows with `|ξ|` beyond Nyquist
/// are zero when `band_limit` is set.
pub fn dtft_matrix(ax: &StateAxis, freqs: &[f64], band_limit: bool) -> Vec<Complex64> {
    let n = ax.count;
    let nyq = ax.nyquist();
    let mut mat = vec![Complex64::new(0.0, 0.0); freqs.len() * n];
    for (r, &xi) in freqs.iter().enumerate() {
        if band_limit && xi.abs() > nyq {
            continue;
        }
        // phase recurrence, re-anchored every 64 entries to bound the drift
        let step = Complex64::from_polar(1.0, -xi * ax.spacing);
        let row = &mut mat[r * n..(r + 1) * n];
        let mut z = Complex64::new(0.0, 0.0);
        for (j, m) in row.iter_mut().enumerate() {
            z = if j % 64 == 0 { Complex64::from_polar(ax.spacing, -xi * ax.node(j)) } else { z * step };
            *m = z;
        }
    }
    mat
}

/// `Σ_j f(x_j) e^{-iξ_m x_j} Δ` along `axis` at the `N` equispaced
/// frequencies `ξ_m = w0 + m·dw` (chirp-z, `O(N log N)` per line). Outputs
/// with `|ξ_m|` beyond Nyquist are zeroed when `band_limit` is set.
pub fn dtft_axis(
    data: &mut [Complex64],
    shape: &[usize],
    axis: usize,
    ax: &StateAxis,
    w0: f64,
    dw: f64,
    band_limit: bool,
) {
    let n = shape[axis];
    let len = (2 * n - 1).next_power_of_two();
    let theta = dw * ax.spacing;
    // W^{k²/2} with W = e^{-iθ}
    let chirp: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(1.0, -0.5 * theta * (k * k) as f64)).collect();
    let pre: Vec<Complex64> = (0..n).map(|j| chirp[j] * Complex64::from_polar(ax.spacing, -w0 * ax.node(j))).collect();
    let post: Vec<Complex64> = (0..n)
        .map(|m| {
            let xi = w0 + m as f64 * dw;
            if band_limit && xi.abs() > ax.nyquist() {
                Complex64::new(0.0, 0.0)
            } else {
                chirp[m] * Complex64::from_polar(1.0, -(m as f64) * dw * ax.offset)
            }
        })
        .collect();
    let mut kernel = vec![Complex64::new(0.0, 0.0); len];
    for k in 0..n {
        kernel[k] = chirp[k].conj();
        if k > 0 {
            kernel[len - k] = chirp[k].conj();
        }
    }
    let (fwd, inv) = (plan(len, true), plan(len, false));
    let mut scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
    fwd.process_with_scratch(&mut kernel, &mut scratch);
    let norm = 1.0 / len as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    map_lines(data, shape, axis, |line| {
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (b, (z, p)) in buf.iter_mut().zip(line.iter().zip(&pre)) {
            *b = z * p;
        }
        fwd.process_with_scratch(&mut buf, &mut scratch);
        for (b, k) in buf.iter_mut().zip(&kernel) {
            *b *= k * norm;
        }
        inv.process_with_scratch(&mut buf, &mut scratch);
        for (z, (b, p)) in line.iter_mut().zip(buf.iter().zip(&post)) {
            *z = b * p;
        }
    });
}

/// Dual axis of the unitary Fourier transform: `N` frequencies with spacing
/// `2π/(NΔ)` centred on zero.
pub fn dual_axis(ax: &StateAxis) -> StateAxis {
    let dw = 2.0 * PI / (ax.count as f64 * ax.spacing);
    StateAxis { offset: -((ax.count / 2) as f64) * dw, spacing: dw, count: ax.count }
}

fn fourier_axis(data: &mut [Complex64], shape: &[usize], axis: usize, from: &StateAxis, to: &StateAxis, sign: f64) {
    let n = shape[axis];
    let (x0, dx, w0, dw) = (from.offset, from.spacing, to.offset, to.spacing);
    // e^{iσ ω_m x_j} = e^{iσ w0 x0} e^{iσ w0 jΔ} e^{iσ mΔω x0} e^{iσ 2π mj/N}
    let pre: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, sign * w0 * j as f64 * dx)).collect();
    let scale = dx / (2.0 * PI).sqrt();
    let post: Vec<Complex64> =
        (0..n).map(|m| Complex64::from_polar(scale, sign * (w0 * x0 + m as f64 * dw * x0))).collect();
    let fft = plan(n, sign < 0.0);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    map_lines(data, shape, axis, |line| {
        for (z, p) in line.iter_mut().zip(&pre) {
            *z *= p;
        }
        fft.process_with_scratch(line, &mut scratch);
        for (z, p) in line.iter_mut().zip(&post) {
            *z *= p;
        }
    });
}

/// Unitary Fourier–Plancherel transform
/// `(F̂f)(ω) = (2π)^{-n/2} ∫ e^{iω·x} f(x) dx`, sampled on the dual grid.
/// With this sign `F̂ D(q,p) F̂⁻¹ = e^{(i/2)q·p} e^{iq·q̂} e^{ip·p̂}`.
pub fn fourier_plancherel(f: &DiscretizedState) -> DiscretizedState {
    let grid = f.grid();
    let shape = grid.shape();
    let dual = StateGrid::new(grid.axes.iter().map(dual_axis).collect());
    let mut data = f.data().to_vec();
    for k in 0..grid.dim() {
        fourier_axis(&mut data, &shape, k, &grid.axes[k], &dual.axes[k], 1.0);
    }
    DiscretizedState::new(dual, data).expect("shape preserved")
}

/// Inverse of [`fourier_plancherel`], sampled on `target` (whose spacings must
/// be dual to those of `f`).
pub fn fourier_plancherel_inverse(f: &DiscretizedState, target: &StateGrid) -> DiscretizedState {
    let grid = f.grid();
    let shape = grid.shape();
    let mut data = f.data().to_vec();
    for k in 0..grid.dim() {
        fourier_axis(&mut data, &shape, k, &grid.axes[k], &target.axes[k], -1.0);
    }
    DiscretizedState::new(target.clone(), data).expect("shape preserved")
}

/// Apply the Fourier multiplier `σ(ω)` on the frequency lattice shifted by
/// half a bin, so that no frequency node sits at `ω = 0`.
pub fn fourier_multiplier<S: Fn(&[f64]) -> f64>(f: &DiscretizedState, symbol: S) -> DiscretizedState {
    let grid = f.grid().clone();
    let shape = grid.shape();
    let d = grid.dim();
    let deltas: Vec<f64> = grid.axes.iter().map(|a| PI / (a.count as f64 * a.spacing)).collect();
    let mut data = f.data().to_vec();
    for (i, z) in data.iter_mut().enumerate() {
        let x = grid.point(i);
        let phase: f64 = (0..d).map(|k| -deltas[k] * x[k]).sum();
        *z *= Complex64::from_polar(1.0, phase);
    }
    for k in 0..d {
        let fwd = plan(shape[k], true);
        let mut scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len()];
        map_lines(&mut data, &shape, k, |line| fwd.process_with_scratch(line, &mut scratch));
    }
    let freqs: Vec<Vec<f64>> =
        grid.axes.iter().zip(&deltas).map(|(a, dl)| a.fft_frequencies().iter().map(|w| w + dl).collect()).collect();
    let mut w = vec![0.0; d];
    for (i, z) in data.iter_mut().enumerate() {
        let mut rem = i;
        for k in (0..d).rev() {
            w[k] = freqs[k][rem % shape[k]];
            rem /= shape[k];
        }
        *z *= symbol(&w);
    }
    for k in 0..d {
        let inv = plan(shape[k], false);
        let mut scratch = vec![Complex64::new(0.0, 0.0); inv.get_inplace_scratch_len()];
        let norm = 1.0 / shape[k] as f64;
        map_lines(&mut data, &shape, k, |line| {
            inv.process_with_scratch(line, &mut scratch);
            for z in line.iter_mut() {
                *z *= norm;
            }
        });
    }
    for (i, z) in data.iter_mut().enumerate() {
        let x = grid.point(i);
        let phase: f64 = (0..d).map(|k| deltas[k] * x[k]).sum();
        *z *= Complex64::from_polar(1.0, phase);
    }
    DiscretizedState::new(grid, data).expect("shape preserved")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn gauss(x: f64) -> f64 {
        PI.powf(-0.25) * (-0.5 * x * x).exp()
    }

    #[test]
    fn translation_matches_analytic_shift() {
        let ax = StateAxis::centered(12.0, 256);
        let mut data: Vec<Complex64> = ax.nodes().iter().map(|&x| c(gauss(x))).collect();
        translate_axis(&mut data, &[256], 0, &ax, 0.7317);
        let err = ax.nodes().iter().zip(&data).map(|(&x, z)| (z - c(gauss(x - 0.7317))).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn sinc_resampling_reproduces_band_limited_function() {
        let ax = StateAxis::centered(12.0, 256);
        let data: Vec<Complex64> = ax.nodes().iter().map(|&x| c(gauss(x))).collect();
        let targets = [0.0, 0.013, -1.77, 3.3333, 11.0 * 0.5];
        let out = resample_axis(&data, &[256], 0, &ax, &targets, false);
        for (y, z) in targets.iter().zip(&out) {
            assert!((z - c(gauss(*y))).norm() < 1e-12, "{y}: {z}");
        }
    }

    #[test]
    fn odd_reflection_on_half_line() {
        let ax = StateAxis::half_line(10.0, 80);
        let f = |b: f64| b * (-0.5 * b * b).exp();
        let data: Vec<Complex64> = ax.nodes().iter().map(|&b| c(f(b))).collect();
        let targets = [0.01, 0.2, 1.234, 3.9];
        let out = resample_axis(&data, &[80], 0, &ax, &targets, true);
        for (y, z) in targets.iter().zip(&out) {
            assert!((z - c(f(*y))).norm() < 1e-10, "{y}: {z}");
        }
    }

    #[test]
    fn plancherel_fixes_unit_gaussian() {
        let grid = StateGrid::centered(1, 8.0, 256);
        let g = DiscretizedState::from_fn(grid, |x| c(gauss(x[0])));
        let fg = fourier_plancherel(&g);
        let err = (0..256).map(|i| (fg.data()[i] - c(gauss(fg.grid().point(i)[0]))).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!((fg.norm() - g.norm()).abs() < 1e-12);
        let back = fourier_plancherel_inverse(&fg, g.grid());
        assert!(back.distance(&g).unwrap() < 1e-12);
    }

    #[test]
    fn plancherel_sign_convention() {
        // f(x) = gauss(x - 1) has F̂f(ω) = e^{iω} gauss(ω) under the e^{+iωx} kernel.
        let grid = StateGrid::new(vec![StateAxis::centered(10.0, 256)]);
        let f = DiscretizedState::from_fn(grid, |x| c(gauss(x[0] - 1.0)));
        let ff = fourier_plancherel(&f);
        let err = (0..256)
            .map(|i| {
                let w = ff.grid().point(i)[0];
                (ff.data()[i] - Complex64::from_polar(gauss(w), w)).norm()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn half_shifted_multiplier_of_one_is_identity() {
        let grid = StateGrid::centered(1, 8.0, 128);
        let g = DiscretizedState::from_fn(grid, |x| Complex64::new(gauss(x[0]), x[0] * gauss(x[0])));
        let h = fourier_multiplier(&g, |_| 1.0);
        assert!(h.distance(&g).unwrap() < 1e-13);
    }

    #[test]
    fn chirp_z_matches_direct_sum() {
        let ax = StateAxis::centered(8.0, 100);
        let data: Vec<Complex64> = ax.nodes().iter().map(|x| Complex64::new(gauss(*x), 0.3 * x * gauss(*x))).collect();
        let (w0, dw) = (-7.3, 0.161);
        let freqs: Vec<f64> = (0..100).map(|m| w0 + m as f64 * dw).collect();
        let (want, _) = contract_axis(&data, &[100], 0, &dtft_matrix(&ax, &freqs, true), 100);
        let mut got = data.clone();
        dtft_axis(&mut got, &[100], 0, &ax, w0, dw, true);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn dtft_approximates_continuous_transform() {
        let ax = StateAxis::centered(10.0, 200);
        let data: Vec<Complex64> = ax.nodes().iter().map(|&x| c(gauss(x))).collect();
        let freqs = [0.0, 0.5, 2.25];
        let mat = dtft_matrix(&ax, &freqs, true);
        let (out, _) = contract_axis(&data, &[200], 0, &mat, 3);
        for (w, z) in freqs.iter().zip(&out) {
            let exact = (2.0 * PI).sqrt() * gauss(*w);
            assert!((z - c(exact)).norm() < 1e-12);
        }
    }
}
