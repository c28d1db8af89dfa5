//! Weierstrass sigma on the square lattice `2L(Z + iZ)` and the periodic
//! fundamental solution `Lambda = log|sigma| - beta |z|^2`.
//!
//! `Lambda` is evaluated through Jacobi theta functions with nome
//! `q = e^{-pi}`; the lattice product series is kept as an independent route.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Lemniscate constant.
pub const LEMNISCATE: f64 = 2.622_057_554_292_119_810_46;

/// `sum' (m + i n)^-4` over the Gaussian integers, `varpi^4 / 15`.
pub const GAUSSIAN_G4: f64 = 3.151_212_002_153_897_538_217_689_942_25;

const NOME: f64 = 0.043_213_918_263_772_250; // e^{-pi}

/// Relative distance to a lattice point below which evaluation is refused.
pub const POLE_TOL: f64 = 1e-8;

/// Largest `|z| / 2L` accepted by the small-argument series.
pub const SERIES_RADIUS: f64 = 0.9;

/// Highest power of `z` kept in the small-argument series.
const SERIES_MAX_POWER: usize = 1600;

#[derive(Debug, Clone)]
pub struct LatticeKernel {
    half_edge: f64,
    trunc: usize,
    eta1: Complex64,
    eta3: Complex64,
    /// `G_{4i} (2L)^{4i}` for `i = 1..`
    scaled_g: Vec<f64>,
    theta1_prime: f64,
}

impl LatticeKernel {
    pub fn new(half_edge: f64) -> Self {
        Self::with_trunc(half_edge, 64)
    }

    pub fn with_trunc(half_edge: f64, trunc: usize) -> Self {
        assert!(half_edge > 0.0 && trunc >= 1);
        LatticeKernel {
            half_edge,
            trunc,
            eta1: Complex64::new(PI / (4.0 * half_edge), 0.0),
            eta3: Complex64::new(0.0, -PI / (4.0 * half_edge)),
            scaled_g: scaled_eisenstein(SERIES_MAX_POWER / 4),
            theta1_prime: theta1_derivative(1),
        }
    }

    /// Same kernel with `eta1` overridden (for residual checks).
    pub fn with_eta1(mut self, eta1: Complex64) -> Self {
        self.eta1 = eta1;
        self
    }

    pub fn half_edge(&self) -> f64 {
        self.half_edge
    }
    pub fn trunc(&self) -> usize {
        self.trunc
    }
    pub fn eta1(&self) -> Complex64 {
        self.eta1
    }
    pub fn eta3(&self) -> Complex64 {
        self.eta3
    }

    /// Half periods `(omega_1, omega_3) = (L, iL)`.
    pub fn half_periods(&self) -> (Complex64, Complex64) {
        (Complex64::new(self.half_edge, 0.0), Complex64::new(0.0, self.half_edge))
    }

    /// Background coefficient `pi / (8 L^2)` that makes `Lambda` periodic.
    pub fn background(&self) -> f64 {
        PI / (8.0 * self.half_edge * self.half_edge)
    }

    /// `G_4 = sum' w^-4`.
    pub fn g4(&self) -> f64 {
        GAUSSIAN_G4 / (2.0 * self.half_edge).powi(4)
    }

    /// `G_8 = 3 G_4^2 / 7`.
    pub fn g8(&self) -> f64 {
        3.0 * self.g4().powi(2) / 7.0
    }

    fn check_pole(&self, z: Complex64) -> Result<()> {
        let p = 2.0 * self.half_edge;
        let dx = z.re - p * (z.re / p).round();
        let dy = z.im - p * (z.im / p).round();
        if dx.hypot(dy) <= POLE_TOL * self.half_edge {
            return Err(Error::NearPole { z: (z.re, z.im) });
        }
        Ok(())
    }

    /// Wraps `z` into the cell `[-L, L)^2`.
    pub fn reduce(&self, z: Complex64) -> Complex64 {
        let l = self.half_edge;
        let wrap = |x: f64| x - 2.0 * l * ((x + l) / (2.0 * l)).floor();
        Complex64::new(wrap(z.re), wrap(z.im))
    }
}

/// Scaled Eisenstein sums `G_{4i} (2L)^{4i}`, `i = 1..=count`, from the
/// Weierstrass recurrence with `g_3 = 0`:
/// `c_n = 3/((2n+1)(n-3)) sum_{m=2}^{n-2} c_m c_{n-m}`, `c_n = (2n-1) G_{2n}`.
fn scaled_eisenstein(count: usize) -> Vec<f64> {
    let n_max = 2 * count;
    let mut c = vec![0.0; n_max + 1];
    c[2] = 3.0 * GAUSSIAN_G4;
    for n in 4..=n_max {
        if n % 2 == 1 {
            continue;
        }
        let s: f64 = (2..=n - 2).map(|m| c[m] * c[n - m]).sum();
        c[n] = 3.0 * s / (((2 * n + 1) * (n - 3)) as f64);
    }
    (1..=count).map(|i| c[2 * i] / (4 * i - 1) as f64).collect()
}

/// `theta_1^{(order)}(0)` for odd `order`, nome `e^{-pi}`.
fn theta1_derivative(order: u32) -> f64 {
    let mut s = 0.0;
    for n in 0..12 {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let k = (2 * n + 1) as f64;
        let deriv_sign = if (order / 2) % 2 == 0 { 1.0 } else { -1.0 };
        s += 2.0 * sign * NOME.powf((n as f64 + 0.5).powi(2)) * deriv_sign * k.powi(order as i32);
    }
    s
}

/// `theta_1(v) = 2 sum_n (-1)^n q^{(n+1/2)^2} sin((2n+1) v)`, summed until
/// the terms are negligible.
fn theta1(v: Complex64) -> Complex64 {
    let w = Complex64::new(-v.im, v.re).exp(); // e^{iv}
    let w_inv = 1.0 / w;
    let (w2, w2_inv) = (w * w, w_inv * w_inv);
    let (mut ep, mut em) = (w, w_inv);
    let mut s = Complex64::new(0.0, 0.0);
    for n in 0..64 {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let weight = (-PI * (n as f64 + 0.5).powi(2)).exp();
        let sine = (ep - em) / Complex64::new(0.0, 2.0);
        let term = 2.0 * sign * weight * sine;
        s += term;
        if n >= 2 && term.norm() <= 1e-18 * s.norm() {
            break;
        }
        ep *= w2;
        em *= w2_inv;
    }
    s
}

/// `eta_1 = -(pi^2 / (12 omega_1)) theta_1'''(0) / theta_1'(0)`.
pub fn eta1_from_theta(half_edge: f64) -> f64 {
    -(PI * PI / (12.0 * half_edge)) * theta1_derivative(3) / theta1_derivative(1)
}

/// `Re log sigma(z)` via theta functions, with no reduction of `z`.
fn log_abs_sigma_theta(kernel: &LatticeKernel, z: Complex64) -> f64 {
    let l = kernel.half_edge;
    let v = z * (PI / (2.0 * l));
    let quad = (kernel.eta1 * z * z / (2.0 * l)).re;
    (2.0 * l / PI).ln() + quad + theta1(v).norm().ln() - kernel.theta1_prime.ln()
}

/// `log(1 - u) + u + u^2/2`, accurate for small `u`.
fn product_term(u: Complex64) -> Complex64 {
    if u.norm() < 0.1 {
        let mut s = Complex64::new(0.0, 0.0);
        let mut p = u * u * u;
        for j in 3..40 {
            let t = p / j as f64;
            s -= t;
            if t.norm() < 1e-19 {
                break;
            }
            p *= u;
        }
        s
    } else {
        (1.0 - u).ln() + u + 0.5 * u * u
    }
}

#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: Complex64,
    comp: Complex64,
}

impl Kahan {
    fn add(&mut self, x: Complex64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Lattice points `2L(m + i n)` with `max(|m|, |n|) = s`.
fn shell(s: i64, l: f64) -> impl Iterator<Item = Complex64> {
    let side = (-s..=s).flat_map(move |k| {
        let edges = [(s, k), (-s, k), (k, s), (k, -s)];
        edges.into_iter().enumerate().filter_map(move |(e, (m, n))| {
            // corners appear on two edges; keep them on the vertical ones
            if e >= 2 && k.abs() == s {
                None
            } else {
                Some(Complex64::new(2.0 * l * m as f64, 2.0 * l * n as f64))
            }
        })
    });
    side
}

/// Principal branch of the lattice product series
/// `log z + sum' [log(1 - z/w) + z/w + (z/w)^2/2]` over square shells up to
/// `trunc`, plus the exact `z^4` and `z^8` tail corrections.
pub fn log_sigma(kernel: &LatticeKernel, z: Complex64) -> Result<Complex64> {
    kernel.check_pole(z)?;
    let l = kernel.half_edge;
    let mut acc = Kahan::default();
    let mut g4 = Kahan::default();
    let mut g8 = Kahan::default();
    for s in 1..=kernel.trunc as i64 {
        for w in shell(s, l) {
            let wi = 1.0 / w;
            acc.add(product_term(z * wi));
            let w4 = wi * wi * wi * wi;
            g4.add(w4);
            g8.add(w4 * w4);
        }
    }
    let z4 = z * z * z * z;
    let tail = -(z4 / 4.0) * (kernel.g4() - g4.sum) - (z4 * z4 / 8.0) * (kernel.g8() - g8.sum);
    Ok(z.ln() + acc.sum + tail)
}

/// Radius (relative to `L`) below which `Lambda` uses the power series.
const SERIES_SWITCH: f64 = 0.25;

/// Periodic fundamental solution `Lambda(z) = log|sigma(z)| - beta |z|^2`,
/// with `Lambda(z) - log|z| -> 0` as `z -> 0`.
pub fn lambda(kernel: &LatticeKernel, z: Complex64) -> Result<f64> {
    kernel.check_pole(z)?;
    let zr = kernel.reduce(z);
    if zr.norm() < SERIES_SWITCH * kernel.half_edge {
        return Ok(zr.norm().ln() + regular_series(kernel, zr, SERIES_MAX_POWER));
    }
    Ok(lambda_unreduced(kernel, zr))
}

/// Theta-route `Lambda` without wrapping into the fundamental cell.
pub fn lambda_unreduced(kernel: &LatticeKernel, z: Complex64) -> f64 {
    log_abs_sigma_theta(kernel, z) - kernel.background() * z.norm_sqr()
}

/// `Lambda(z) - log|z|`, finite at the origin.
pub fn lambda_regular(kernel: &LatticeKernel, z: Complex64) -> f64 {
    let zr = kernel.reduce(z);
    if zr.norm() < SERIES_SWITCH * kernel.half_edge {
        return regular_series(kernel, zr, SERIES_MAX_POWER);
    }
    lambda_unreduced(kernel, zr) - zr.norm().ln()
}

/// `-sum_{4i <= max_power} Re(G_{4i} z^{4i})/(4i) - beta |z|^2`.
fn regular_series(kernel: &LatticeKernel, z: Complex64, max_power: usize) -> f64 {
    let u = z / (2.0 * kernel.half_edge);
    let u4 = u * u * u * u;
    let mut p = u4;
    let mut s = 0.0;
    for (i, g) in kernel.scaled_g.iter().enumerate() {
        let power = 4 * (i + 1);
        if power > max_power {
            break;
        }
        let t = g * p.re / power as f64;
        s += t;
        if p.norm() < 1e-20 {
            break;
        }
        p *= u4;
    }
    -s - kernel.background() * z.norm_sqr()
}

/// Small-argument expansion
/// `log|z| - sum_i Re(G_{4i} z^{4i})/(4i) - beta |z|^2` for `|z| < 0.9 * 2L`.
pub fn lambda_series_small(kernel: &LatticeKernel, z: Complex64) -> Result<f64> {
    lambda_series_truncated(kernel, z, SERIES_MAX_POWER)
}

/// As [`lambda_series_small`], keeping powers `z^j` with `j <= max_power`.
pub fn lambda_series_truncated(kernel: &LatticeKernel, z: Complex64, max_power: usize) -> Result<f64> {
    let radius = SERIES_RADIUS * 2.0 * kernel.half_edge;
    if z.norm() >= radius {
        return Err(Error::OutOfRadius { modulus: z.norm(), radius });
    }
    kernel.check_pole(z)?;
    Ok(z.norm().ln() + regular_series(kernel, z, max_power))
}

/// `|eta_1 omega_3 - eta_3 omega_1 - i pi / 2|`.
pub fn legendre_residual(kernel: &LatticeKernel) -> f64 {
    let (w1, w3) = kernel.half_periods();
    (kernel.eta1 * w3 - kernel.eta3 * w1 - Complex64::new(0.0, PI / 2.0)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn quasi_periods() {
        for l in [1.0, 8.0, 0.37] {
            let k = LatticeKernel::new(l);
            assert!(legendre_residual(&k) <= 1e-12);
            let (w1, w3) = k.half_periods();
            assert!((k.eta1() * w1 - PI / 4.0).norm() < 1e-15);
            assert!((k.eta3() * w3 - PI / 4.0).norm() < 1e-15);
            assert!((eta1_from_theta(l) - k.eta1().re).abs() < 1e-14 / l);
        }
        let k = LatticeKernel::new(2.0);
        let perturbed = k.clone().with_eta1(k.eta1() + 1e-6);
        assert!((legendre_residual(&perturbed) - 2e-6).abs() < 1e-12);
    }

    #[test]
    fn gaussian_g4_against_direct_sum() {
        // sum over |m|,|n| <= 400 with the shell tail of order s^-2
        let mut s = 0.0;
        for m in -400i64..=400 {
            for n in -400i64..=400 {
                if m == 0 && n == 0 {
                    continue;
                }
                s += (1.0 / c(m as f64, n as f64).powi(4)).re;
            }
        }
        assert!((s - GAUSSIAN_G4).abs() < 1e-5, "{s}");
        assert!((LEMNISCATE.powi(4) / 15.0 - GAUSSIAN_G4).abs() < 1e-14);
    }

    #[test]
    fn recurrence_coefficients_against_direct_sums() {
        let g = scaled_eisenstein(3);
        for (i, gi) in g.iter().enumerate() {
            let p = 4 * (i as i32 + 1);
            let mut s = 0.0;
            for m in -60i64..=60 {
                for n in -60i64..=60 {
                    if m == 0 && n == 0 {
                        continue;
                    }
                    s += (1.0 / c(m as f64, n as f64).powi(p)).re;
                }
            }
            // G_8, G_12, G_16 converge fast
            if i >= 1 {
                assert!((g[i] - s).abs() < 1e-12 * s, "i={i}: {} vs {s}", g[i]);
            }
            let _ = gi;
        }
        assert!((g[1] - 3.0 * GAUSSIAN_G4.powi(2) / 7.0).abs() < 1e-14);
    }

    #[test]
    fn log_sigma_basic_properties() {
        let k = LatticeKernel::new(1.0);
        let z = c(1e-4, 2e-4);
        assert!((log_sigma(&k, z).unwrap() - z.ln()).norm() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let a = log_sigma(&k, z).unwrap();
            let b = log_sigma(&k, -z).unwrap();
            assert!((a.re - b.re).abs() < 1e-11);
            // imaginary parts differ by an odd multiple of pi
            let d = (a.im - b.im) / PI;
            assert!((d - d.round()).abs() < 1e-11 && d.round() as i64 % 2 != 0);
        }
        assert!(matches!(log_sigma(&k, c(2.0, 1e-12)), Err(Error::NearPole { .. })));
    }

    #[test]
    fn log_sigma_truncation_converged() {
        let k = LatticeKernel::new(1.0);
        let hi = LatticeKernel::with_trunc(1.0, 256);
        let z = c(0.5, 0.0);
        let (a, b) = (log_sigma(&k, z).unwrap(), log_sigma(&hi, z).unwrap());
        assert!((a - b).norm() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn theta_route_matches_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for l in [1.0, 3.0] {
            let k = LatticeKernel::new(l);
            for _ in 0..20 {
                let z = c(rng.gen_range(-l..l), rng.gen_range(-l..l));
                let series = log_sigma(&k, z).unwrap().re - k.background() * z.norm_sqr();
                assert!((lambda(&k, z).unwrap() - series).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lambda_is_periodic_and_even() {
        let k = LatticeKernel::new(1.5);
        let l = k.half_edge();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let z = c(rng.gen_range(-l..l), rng.gen_range(-l..l));
            let base = lambda_unreduced(&k, z);
            assert!((lambda_unreduced(&k, z + 2.0 * l) - base).abs() <= 1e-10);
            assert!((lambda_unreduced(&k, z + c(0.0, 2.0 * l)) - base).abs() <= 1e-10);
            assert!((lambda(&k, -z).unwrap() - base).abs() <= 1e-11);
        }
    }

    #[test]
    fn lambda_regular_at_origin() {
        let k = LatticeKernel::new(1.0);
        for r in [1e-2, 1e-4, 1e-6] {
            let z = c(r, 0.3 * r);
            let d = lambda(&k, z).unwrap() - z.norm().ln();
            assert!(d.abs() < 2.0 * r * r, "r={r}: {d}");
            assert!(lambda_regular(&k, z).abs() < 2.0 * r * r);
        }
        assert_eq!(lambda_regular(&k, c(0.0, 0.0)), 0.0);
        let z = c(0.0011, -0.0004);
        let direct = lambda(&k, z).unwrap() - z.norm().ln();
        let below = lambda_regular(&k, c(0.00099, -0.00036));
        assert!((direct - lambda_regular(&k, z)).abs() < 1e-14);
        assert!((direct - below).abs() < 1e-6);
    }

    #[test]
    fn lambda_scale_invariance() {
        let k1 = LatticeKernel::new(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for lam in [2.0, 8.0] {
            let k2 = LatticeKernel::new(lam);
            for _ in 0..20 {
                let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let d = lambda(&k2, lam * z).unwrap() - lambda(&k1, z).unwrap();
                assert!((d - f64::ln(lam)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn discrete_laplacian_is_background() {
        let k = LatticeKernel::new(1.0);
        let h = 1e-3;
        let expect = -PI / (2.0 * k.half_edge().powi(2));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let z = c(rng.gen_range(0.2..0.9), rng.gen_range(-0.9..0.9));
            let f = |w: Complex64| lambda(&k, w).unwrap();
            let lap = (f(z + h) + f(z - h) + f(z + c(0.0, h)) + f(z - c(0.0, h)) - 4.0 * f(z)) / (h * h);
            assert!((lap - expect).abs() < 1e-3, "{lap} vs {expect}");
        }
        // total charge: 2 pi from the singularity balances the background over the cell
        assert!((2.0 * PI + expect * 4.0 * k.half_edge().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn series_small_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = LatticeKernel::new(1.0);
        for _ in 0..100 {
            let r = rng.gen_range(0.01..1.75);
            let t: f64 = rng.gen_range(0.0..2.0 * PI);
            let z = Complex64::from_polar(r, t);
            let a = lambda_series_small(&k, z).unwrap();
            let b = lambda_unreduced(&k, k.reduce(z));
            assert!((a - b).abs() < 1e-11, "r={r}: {a} vs {b}");
        }
        assert!(matches!(lambda_series_small(&k, c(1.85, 0.0)), Err(Error::OutOfRadius { .. })));
        for _ in 0..20 {
            let z = Complex64::from_polar(rng.gen_range(0.01..0.5), rng.gen_range(0.0..2.0 * PI));
            let a = lambda_series_truncated(&k, z, 25).unwrap();
            let b = lambda_series_truncated(&k, z, 50).unwrap();
            assert!((a - b).abs() <= 1e-13);
        }
    }
}
