//! The weight Z(x) of the approximate functional equation for |L(1/2, χ)|²,
//!
//!   Z(x) = (1/2πi) ∫_(c₀) Γ²(s/2 + 1/4)/Γ²(1/4) · G(s)/s · π^{−s} x^{−s} ds,
//!
//! evaluated by the trapezoid rule on the vertical line s = c₀ + it.
//! For this analytic integrand the rule converges geometrically in the
//! step: the aliasing error at step h is about e^{−2πc₀/h}.

use super::gamma::ln_gamma;
use crate::error::{Error, Result};
use crate::sum::ComplexNeumaier;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Samples with |integrand| below this are treated as the end of the tail.
const TAIL_CUTOFF: f64 = 1e-32;
const MAX_HEIGHT: f64 = 400.0;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    /// Coefficients of G in the monomial basis, constant term first.
    pub g: Vec<f64>,
    /// Abscissa of the integration line.
    pub c0: f64,
    /// Truncation height; `None` picks it from the decay of the integrand.
    pub height: Option<f64>,
    /// Initial trapezoid step.
    pub step: f64,
    pub tol: f64,
    pub max_halvings: u32,
    /// Interpolate Z from a geometric grid instead of exact evaluation.
    pub interpolate: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            // (1 − 4s²)²
            g: vec![1.0, 0.0, -8.0, 0.0, 16.0],
            c0: 1.0,
            height: None,
            step: 0.25,
            tol: 1e-13,
            max_halvings: 8,
            interpolate: false,
        }
    }
}

impl KernelConfig {
    pub fn g_at(&self, s: Complex64) -> Complex64 {
        self.g
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    fn g_real(&self, s: f64) -> f64 {
        self.g.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    fn g_prime_real(&self, s: f64) -> f64 {
        self.g
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * s + k as f64 * c)
    }

    /// G(0) = 1, G even, and G(1/2) = G′(1/2) = 0.
    pub fn validate(&self) -> Result<()> {
        let scale = self.g.iter().map(|c| c.abs()).fold(1.0, f64::max);
        if self.g.first().copied() != Some(1.0) {
            return Err(Error::InvalidArgument("G(0) must equal 1".into()));
        }
        if self.g.iter().skip(1).step_by(2).any(|&c| c != 0.0) {
            return Err(Error::InvalidArgument("G must be even".into()));
        }
        if self.g_real(0.5).abs() > 1e-12 * scale || self.g_prime_real(0.5).abs() > 1e-12 * scale {
            return Err(Error::InvalidArgument("G must vanish to second order at 1/2".into()));
        }
        if !(self.c0 > 0.0) || !(self.step > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(
                "c0, step and tol must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The integrand without x^{−s}.
    fn integrand(&self, s: Complex64, ln_gamma_quarter: f64) -> Result<Complex64> {
        let lg = ln_gamma(s * 0.5 + 0.25)?;
        let log_part = 2.0 * lg - 2.0 * ln_gamma_quarter - s * PI.ln();
        Ok(log_part.exp() * self.g_at(s) / s)
    }
}

/// Trapezoid samples of the integrand on s = c₀ + i n h, |n h| ≤ H.
#[derive(Debug, Clone)]
struct Samples {
    c0: f64,
    step: f64,
    /// (t, F(c₀ + it)), t ascending from −H to H.
    points: Vec<(f64, Complex64)>,
}

impl Samples {
    fn build(cfg: &KernelConfig, step: f64) -> Result<Samples> {
        let lgq = ln_gamma(Complex64::new(0.25, 0.0))?.re;
        let max_n = match cfg.height {
            Some(h) => (h / step).ceil() as i64,
            None => {
                // Walk up until the integrand is negligible on both sides.
                let mut n = 1i64;
                loop {
                    let t = n as f64 * step;
                    let up = cfg.integrand(Complex64::new(cfg.c0, t), lgq)?.norm();
                    let down = cfg.integrand(Complex64::new(cfg.c0, -t), lgq)?.norm();
                    if (up < TAIL_CUTOFF && down < TAIL_CUTOFF) || t > MAX_HEIGHT {
                        break n;
                    }
                    n += 1;
                }
            }
        };
        let mut points = Vec::with_capacity(2 * max_n as usize + 1);
        for n in -max_n..=max_n {
            let t = n as f64 * step;
            points.push((t, cfg.integrand(Complex64::new(cfg.c0, t), lgq)?));
        }
        Ok(Samples {
            c0: cfg.c0,
            step,
            points,
        })
    }

    /// Trapezoid value and the magnitude of the summed terms (for a
    /// rounding floor).
    fn eval(&self, x: f64) -> (Complex64, f64) {
        let lx = x.ln();
        let scale = (-self.c0 * lx).exp();
        let mut acc = ComplexNeumaier::new();
        let mut mass = 0.0;
        for &(t, f) in &self.points {
            let (s, c) = (-t * lx).sin_cos();
            let term = f * Complex64::new(c, s);
            mass += term.norm();
            acc.add(term);
        }
        let w = self.step / (2.0 * PI) * scale;
        (acc.value() * w, mass * w)
    }
}

fn rounding_floor(mass: f64) -> f64 {
    64.0 * f64::EPSILON * mass
}

/// Z(x) for a single x by step halving until successive values agree to
/// `tol` (or to the rounding floor of the sum, when that is larger).
pub fn z_kernel(x: f64, cfg: &KernelConfig) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidArgument(format!("Z(x) needs x > 0, got {x}")));
    }
    cfg.validate()?;
    let mut step = cfg.step;
    let (mut prev, _) = Samples::build(cfg, step)?.eval(x);
    for _ in 0..cfg.max_halvings {
        step *= 0.5;
        let (cur, mass) = Samples::build(cfg, step)?.eval(x);
        let floor = rounding_floor(mass);
        if (cur - prev).norm() < cfg.tol.max(floor) {
            return finish(cur, cfg.tol.max(floor), x);
        }
        prev = cur;
    }
    Err(Error::NoConvergence(format!(
        "Z({x}) after {} halvings",
        cfg.max_halvings
    )))
}

fn finish(v: Complex64, tol: f64, x: f64) -> Result<f64> {
    if v.im.abs() >= tol.max(1e-300) * 10.0 {
        return Err(Error::NoConvergence(format!(
            "Z({x}) has imaginary part {:e}",
            v.im
        )));
    }
    Ok(v.re)
}

/// Probe points used to settle the step of a reusable kernel.
const PROBES: [f64; 6] = [1e-3, 0.05, 0.3, 1.0, 3.0, 8.0];

/// A kernel with its trapezoid step fixed once, for many evaluations.
#[derive(Debug, Clone)]
pub struct ZKernel {
    cfg: KernelConfig,
    samples: Samples,
    table: Option<ZTable>,
}

impl ZKernel {
    pub fn new(cfg: &KernelConfig) -> Result<ZKernel> {
        cfg.validate()?;
        let mut step = cfg.step;
        let mut prev = Samples::build(cfg, step)?;
        let mut converged = None;
        for _ in 0..cfg.max_halvings {
            step *= 0.5;
            let cur = Samples::build(cfg, step)?;
            let ok = PROBES.iter().all(|&x| {
                let (a, _) = prev.eval(x);
                let (b, mass) = cur.eval(x);
                (a - b).norm() < cfg.tol.max(rounding_floor(mass))
            });
            if ok {
                converged = Some(cur);
                break;
            }
            prev = cur;
        }
        let samples = converged.ok_or_else(|| {
            Error::NoConvergence(format!("kernel step after {} halvings", cfg.max_halvings))
        })?;
        let mut kernel = ZKernel {
            cfg: cfg.clone(),
            samples,
            table: None,
        };
        if cfg.interpolate {
            kernel.table = Some(ZTable::build(&kernel)?);
        }
        Ok(kernel)
    }

    pub fn config(&self) -> &KernelConfig {
        &self.cfg
    }

    pub fn step(&self) -> f64 {
        self.samples.step
    }

    /// Exact (quadrature) evaluation, ignoring any interpolation table.
    pub fn eval_exact(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::InvalidArgument(format!("Z(x) needs x > 0, got {x}")));
        }
        let (v, mass) = self.samples.eval(x);
        finish(v, self.cfg.tol.max(rounding_floor(mass)), x)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match &self.table {
            Some(t) => match t.interpolate(x) {
                Some(v) => Ok(v),
                None => self.eval_exact(x),
            },
            None => self.eval_exact(x),
        }
    }

    /// Smallest probe x* on the grid 1, 1.5, 2, … with |Z| < `threshold`
    /// at every probe in [x*, 2x*].
    pub fn truncation_point(&self, threshold: f64) -> Result<f64> {
        let mut j = 2u32;
        loop {
            let x0 = j as f64 * 0.5;
            if x0 > 200.0 {
                return Err(Error::NoConvergence(format!(
                    "|Z| never dropped below {threshold:e}"
                )));
            }
            let mut ok = true;
            let mut k = j;
            while k <= 2 * j {
                if self.eval_exact(k as f64 * 0.5)?.abs() >= threshold {
                    ok = false;
                    break;
                }
                k += 1;
            }
            if ok {
                return Ok(x0);
            }
            j += 1;
        }
    }
}

/// Z on a geometric grid x₀ρ^j with four-point Lagrange interpolation in
/// log x. Outside the grid callers fall back to exact evaluation.
#[derive(Debug, Clone)]
pub struct ZTable {
    log_min: f64,
    log_step: f64,
    values: Vec<f64>,
}

impl ZTable {
    pub const X_MIN: f64 = 1e-4;
    pub const X_MAX: f64 = 16.0;
    pub const LOG_STEP: f64 = 0.005;

    fn build(kernel: &ZKernel) -> Result<ZTable> {
        let log_min = Self::X_MIN.ln();
        let n = ((Self::X_MAX.ln() - log_min) / Self::LOG_STEP).ceil() as usize + 1;
        let values = (0..n)
            .map(|j| kernel.eval_exact((log_min + j as f64 * Self::LOG_STEP).exp()))
            .collect::<Result<Vec<_>>>()?;
        Ok(ZTable {
            log_min,
            log_step: Self::LOG_STEP,
            values,
        })
    }

    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let u = (x.ln() - self.log_min) / self.log_step;
        let n = self.values.len();
        if !(u >= 1.0) || u > (n - 3) as f64 {
            return None;
        }
        let i = u.floor() as usize;
        let f = u - i as f64;
        let (y0, y1, y2, y3) = (
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        );
        // Lagrange through nodes −1, 0, 1, 2.
        let l0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
        let l1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        let l2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
        let l3 = (f + 1.0) * f * (f - 1.0) / 6.0;
        Some(y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3)
    }
}
