//! Homogeneous fractional Sobolev norms of periodic signals.
//!
//! On an interval of length `2P` the coefficients are
//! `f^(k) = (2P)^{-1/2} int f(x) e^{-i pi k x / P} dx`, and
//! `|f|_{H^s}^2 = sum_{k != 0} |pi k / P|^{2s} |f^(k)|^2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{perimeter, GeometryCache};
use crate::spectral;

/// Mean coefficient tolerance for negative-order norms.
pub const MEAN_TOL: f64 = 1e-12;

/// Real periodic signal stored by its Fourier coefficients `k = -K..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSignal {
    half_period: f64,
    coeffs: Vec<Complex64>,
}

impl PeriodicSignal {
    /// Coefficients from `m` uniform samples over one period `2P`. The
    /// Nyquist coefficient (even `m`) is split between `+-m/2`.
    pub fn from_samples(values: &[f64], half_period: f64) -> Self {
        let m = values.len();
        let c = spectral::complex_coefficients(values);
        let kmax = m / 2;
        let scale = (2.0 * half_period).sqrt();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * kmax + 1];
        for k in 0..=kmax {
            let (pos, neg) = if 2 * k == m {
                (0.5 * c[k], 0.5 * c[k])
            } else if k == 0 {
                (c[0], c[0])
            } else {
                (c[k], c[m - k])
            };
            coeffs[kmax + k] = scale * pos;
            coeffs[kmax - k] = scale * neg;
        }
        PeriodicSignal { half_period, coeffs }
    }

    /// `sum a_k cos(pi k x / P) + b_k sin(pi k x / P)`.
    pub fn from_cos_sin(cos: &[f64], sin: &[f64], half_period: f64) -> Self {
        let kmax = cos.len() - 1;
        let scale = (2.0 * half_period).sqrt();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * kmax + 1];
        coeffs[kmax] = Complex64::new(scale * cos[0], 0.0);
        for k in 1..=kmax {
            let c = 0.5 * scale * Complex64::new(cos[k], -sin[k]);
            coeffs[kmax + k] = c;
            coeffs[kmax - k] = c.conj();
        }
        PeriodicSignal { half_period, coeffs }
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn max_mode(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        let kmax = self.max_mode() as i64;
        if k.abs() > kmax {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + kmax) as usize]
        }
    }

    /// Angular frequency `pi k / P` of mode `k`.
    pub fn frequency(&self, k: i64) -> f64 {
        PI * k as f64 / self.half_period
    }

    /// Average of the signal over one period.
    pub fn mean(&self) -> f64 {
        self.coeff(0).re / (2.0 * self.half_period).sqrt()
    }

    /// `int |f|^2` over one period.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Values at `m` uniform samples.
    pub fn to_samples(&self, m: usize) -> Vec<f64> {
        let kmax = self.max_mode();
        assert!(m >= 2 * kmax, "too few samples for signal");
        let scale = 1.0 / (2.0 * self.half_period).sqrt();
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for k in -(kmax as i64)..=kmax as i64 {
            let slot = k.rem_euclid(m as i64) as usize;
            buf[slot] += scale * self.coeff(k);
        }
        spectral::fft_in_place(&mut buf, true);
        buf.iter().map(|z| z.re).collect()
    }

    fn map_coeffs(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Self {
        let kmax = self.max_mode() as i64;
        let coeffs = self.coeffs.iter().enumerate().map(|(i, &c)| f(i as i64 - kmax, c)).collect();
        PeriodicSignal { half_period: self.half_period, coeffs }
    }
}

fn check_mean(signal: &PeriodicSignal) -> Result<()> {
    let scale = signal.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mean = signal.coeff(0).norm();
    if mean > MEAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NonZeroMean { mean });
    }
    Ok(())
}

/// Homogeneous `H^sigma` semi-norm. Negative orders need zero mean.
pub fn h_norm(signal: &PeriodicSignal, sigma: f64) -> Result<f64> {
    if sigma < 0.0 {
        check_mean(signal)?;
    }
    let kmax = signal.max_mode() as i64;
    let sum: f64 = (1..=kmax)
        .map(|k| {
            let w = signal.frequency(k).powf(2.0 * sigma);
            w * (signal.coeff(k).norm_sqr() + signal.coeff(-k).norm_sqr())
        })
        .sum();
    Ok(sum.sqrt())
}

/// `|d|^sigma`: multiplies mode `k` by `|pi k / P|^sigma` and drops the mean.
pub fn fractional_derivative(signal: &PeriodicSignal, sigma: f64) -> PeriodicSignal {
    signal.map_coeffs(|k, c| if k == 0 { Complex64::new(0.0, 0.0) } else { c * signal.frequency(k).abs().powf(sigma) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterpolationReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Holder interpolation `|f|_sigma <= |f|_alpha^{1/p} |f|_beta^{1/q}` with
/// `1/p = (beta - sigma)/(beta - alpha)` and `1/q = (sigma - alpha)/(beta - alpha)`.
pub fn interpolation_check(signal: &PeriodicSignal, alpha: f64, sigma: f64, beta: f64) -> Result<InterpolationReport> {
    if !(alpha < sigma && sigma < beta) {
        return Err(Error::OrderViolation { alpha, sigma, beta });
    }
    let lhs = h_norm(signal, sigma)?;
    let inv_p = (beta - sigma) / (beta - alpha);
    let inv_q = (sigma - alpha) / (beta - alpha);
    let rhs = h_norm(signal, alpha)?.powf(inv_p) * h_norm(signal, beta)?.powf(inv_q);
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(InterpolationReport { lhs, rhs, ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareReport {
    pub lhs: f64,
    pub rhs: f64,
}

impl PoincareReport {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12)
    }
}

/// `|f - mean|_{L^2}^2 <= (P/pi)^{2 sigma} |f|_{H^sigma}^2` for `sigma >= 0`.
pub fn poincare_check(signal: &PeriodicSignal, sigma: f64) -> Result<PoincareReport> {
    if sigma < 0.0 {
        return Err(Error::UnsupportedOrder(sigma));
    }
    let lhs = signal.l2_norm_sq() - signal.coeff(0).norm_sqr();
    let rhs = (signal.half_period / PI).powf(2.0 * sigma) * h_norm(signal, sigma)?.powi(2);
    Ok(PoincareReport { lhs, rhs })
}

/// Newton tolerance of the arc-length inversion.
pub const RESAMPLE_TOL: f64 = 1e-13;

/// Arc length `s(phi) = int_0^phi ell` of a cached curve.
struct ArcLength {
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    offset: f64,
}

impl ArcLength {
    fn new(ell: &[f64]) -> Self {
        let (a, b) = spectral::analyze_full(ell);
        // antiderivative of a_k cos + b_k sin is (a_k sin - b_k cos)/k
        let n = a.len();
        let mut cos = vec![0.0; n];
        let mut sin = vec![0.0; n];
        for k in 1..n {
            cos[k] = -b[k] / k as f64;
            sin[k] = a[k] / k as f64;
        }
        let offset = -cos.iter().sum::<f64>();
        ArcLength { mean: a[0], cos, sin, offset }
    }

    /// `(s(phi), s'(phi))`.
    fn eval(&self, phi: f64) -> (f64, f64) {
        let (f, d, _) = spectral::eval(&self.cos, &self.sin, phi);
        (self.mean * phi + f + self.offset, self.mean + d)
    }
}

/// Samples `f` (given at the `phi` nodes of `cache`) at `m` uniform
/// arc-length positions.
pub fn resample_arclength(cache: &GeometryCache, f_nodes: &[f64], m: usize) -> Result<Vec<f64>> {
    if f_nodes.len() != cache.n_nodes() {
        return Err(Error::ResampleFail("node count mismatch".into()));
    }
    let arc = ArcLength::new(&cache.ell);
    let total = 2.0 * PI * arc.mean;
    let (fa, fb) = spectral::analyze_full(f_nodes);
    let mut out = Vec::with_capacity(m);
    let mut phi = 0.0;
    for j in 0..m {
        let target = total * j as f64 / m as f64;
        if j > 0 {
            phi += (total / m as f64) / arc.eval(phi).1;
        }
        let mut converged = false;
        for _ in 0..50 {
            let (s, ds) = arc.eval(phi);
            if !(ds > 0.0) {
                return Err(Error::ResampleFail(format!("non-monotone arc length at phi = {phi}")));
            }
            let step = (s - target) / ds;
            phi -= step;
            if step.abs() <= RESAMPLE_TOL * (1.0 + phi.abs()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ResampleFail(format!("Newton did not converge for sample {j}")));
        }
        out.push(spectral::eval(&fa, &fb, phi).0);
    }
    Ok(out)
}

/// Signal in arc length with `P = L(Gamma)/2`.
pub fn curve_signal(cache: &GeometryCache, f_nodes: &[f64]) -> Result<PeriodicSignal> {
    let m = 2 * cache.n_nodes();
    let samples = resample_arclength(cache, f_nodes, m)?;
    Ok(PeriodicSignal::from_samples(&samples, perimeter(cache) / 2.0))
}

/// `|f|_{H^sigma(Gamma)}` in arc length. Supports `|sigma| < 1` and `sigma = +-1`.
pub fn curve_norm(cache: &GeometryCache, f_nodes: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma.abs() <= 1.0) {
        return Err(Error::UnsupportedOrder(sigma));
    }
    let signal = curve_signal(cache, f_nodes)?;
    if sigma < 0.0 {
        // the mean in arc length is the ds-average; remove only round-off
        let rel = signal.mean().abs() / signal.coeffs.iter().map(|c| c.norm()).fold(f64::MIN_POSITIVE, f64::max);
        if rel < 1e-9 {
            let cleaned = signal.map_coeffs(|k, c| if k == 0 { Complex64::new(0.0, 0.0) } else { c });
            return h_norm(&cleaned, sigma);
        }
    }
    h_norm(&signal, sigma)
}

/// `|f|_{H^sigma(Gamma)} / (R^{1/2 - sigma} |f o gamma|_{H^sigma(S^1)})`.
pub fn conversion_ratio(cache: &GeometryCache, f_nodes: &[f64], sigma: f64) -> Result<f64> {
    let on_curve = curve_norm(cache, f_nodes, sigma)?;
    let mut flat = PeriodicSignal::from_samples(f_nodes, PI);
    if sigma < 0.0 {
        flat = flat.map_coeffs(|k, c| if k == 0 { Complex64::new(0.0, 0.0) } else { c });
    }
    let r = cache.curve.radius();
    Ok(on_curve / (r.powf(0.5 - sigma) * h_norm(&flat, sigma)?))
}
