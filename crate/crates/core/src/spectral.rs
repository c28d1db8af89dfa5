//! Real trigonometric series on uniform periodic grids.
//!
//! A series is stored as cosine and sine coefficient vectors of equal length
//! `n`, representing `f(x) = sum_k a_k cos(k x) + b_k sin(k x)` for
//! `k = 0..n`. `b_0` is ignored.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized in-place FFT; `inverse` uses the `e^{+i}` sign.
pub fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let fft = if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        };
        fft.process(buf);
    });
}

/// Uniform nodes `2 pi j / m`.
pub fn nodes(m: usize) -> Vec<f64> {
    (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect()
}

fn to_complex_spectrum(cos: &[f64], sin: &[f64], m: usize) -> Vec<Complex64> {
    assert_eq!(cos.len(), sin.len());
    assert!(2 * cos.len() <= m + 1, "grid too small for series");
    let mut spec = vec![Complex64::new(0.0, 0.0); m];
    spec[0] = Complex64::new(cos[0], 0.0);
    for k in 1..cos.len() {
        let c = Complex64::new(0.5 * cos[k], -0.5 * sin[k]);
        spec[k] += c;
        spec[m - k] += c.conj();
    }
    spec
}

/// Values of the series at `m` uniform nodes.
pub fn synthesize(cos: &[f64], sin: &[f64], m: usize) -> Vec<f64> {
    let mut spec = to_complex_spectrum(cos, sin, m);
    fft_in_place(&mut spec, true);
    spec.iter().map(|c| c.re).collect()
}

/// Complex coefficients `c_k = (1/m) sum_j f_j e^{-i k x_j}`.
pub fn complex_coefficients(values: &[f64]) -> Vec<Complex64> {
    let m = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf, false);
    let scale = 1.0 / m as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Cosine/sine coefficients for modes `0..n_modes` from node values.
/// Requires `n_modes <= m / 2`; the Nyquist mode is never returned.
pub fn analyze(values: &[f64], n_modes: usize) -> (Vec<f64>, Vec<f64>) {
    let m = values.len();
    assert!(2 * n_modes <= m, "too many modes requested");
    let c = complex_coefficients(values);
    let mut a = vec![0.0; n_modes];
    let mut b = vec![0.0; n_modes];
    a[0] = c[0].re;
    for k in 1..n_modes {
        a[k] = 2.0 * c[k].re;
        b[k] = -2.0 * c[k].im;
    }
    (a, b)
}

/// Signed wavenumber of FFT slot `j` on an `m`-point grid; the Nyquist slot
/// maps to zero so that odd derivatives stay real.
pub fn wavenumber(j: usize, m: usize) -> f64 {
    if 2 * j < m {
        j as f64
    } else if 2 * j == m {
        0.0
    } else {
        j as f64 - m as f64
    }
}

/// `order`-th derivative of a periodic function given by node values.
pub fn derivative(values: &[f64], order: u32) -> Vec<f64> {
    let m = values.len();
    let mut c = complex_coefficients(values);
    let i = Complex64::new(0.0, 1.0);
    for (j, cj) in c.iter_mut().enumerate() {
        let k = wavenumber(j, m);
        *cj *= (i * k).powu(order);
    }
    fft_in_place(&mut c, true);
    c.iter().map(|z| z.re).collect()
}

/// Trigonometric interpolation of node values onto a finer uniform grid.
pub fn upsample(values: &[f64], m_fine: usize) -> Vec<f64> {
    let m = values.len();
    assert!(m_fine >= m);
    let c = complex_coefficients(values);
    let mut fine = vec![Complex64::new(0.0, 0.0); m_fine];
    for (j, cj) in c.iter().enumerate() {
        if 2 * j < m {
            fine[j] += cj;
        } else if 2 * j == m {
            // split the Nyquist coefficient symmetrically
            fine[j] += 0.5 * cj;
            fine[m_fine - (m - j)] += 0.5 * cj;
        } else {
            fine[m_fine - (m - j)] += cj;
        }
    }
    fft_in_place(&mut fine, true);
    fine.iter().map(|z| z.re).collect()
}

/// Direct evaluation of the series and its first two derivatives at `x`.
pub fn eval(cos: &[f64], sin: &[f64], x: f64) -> (f64, f64, f64) {
    let mut f = cos[0];
    let (mut d1, mut d2) = (0.0, 0.0);
    // rotate e^{ikx} incrementally
    let (s1, c1) = x.sin_cos();
    let (mut sk, mut ck) = (0.0_f64, 1.0_f64);
    for k in 1..cos.len() {
        let (sn, cn) = (sk * c1 + ck * s1, ck * c1 - sk * s1);
        sk = sn;
        ck = cn;
        let kf = k as f64;
        let (a, b) = (cos[k], sin[k]);
        f += a * ck + b * sk;
        d1 += kf * (-a * sk + b * ck);
        d2 -= kf * kf * (a * ck + b * sk);
    }
    (f, d1, d2)
}

/// Evaluation of a series given by node values at an arbitrary point.
pub fn eval_nodes(values: &[f64], x: f64) -> f64 {
    let (a, b) = analyze_full(values);
    eval(&a, &b, x).0
}

/// Like [`analyze`] but keeps the Nyquist mode (as a half-weight cosine),
/// so that [`eval`] reproduces the trigonometric interpolant exactly at nodes.
pub fn analyze_full(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = values.len();
    let c = complex_coefficients(values);
    let half = m / 2;
    let n = half + 1;
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    a[0] = c[0].re;
    for k in 1..n {
        if 2 * k == m {
            a[k] = c[k].re;
        } else {
            a[k] = 2.0 * c[k].re;
            b[k] = -2.0 * c[k].im;
        }
    }
    (a, b)
}

/// Trapezoidal mean of node values, i.e. `(1/2pi) int f`.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Trapezoidal integral over one period `[0, 2pi]`.
pub fn integral(values: &[f64]) -> f64 {
    2.0 * PI * mean(values)
}
