//! Averaging weights over moduli: the bump Ψ, the periodic tent H_T, its
//! Fourier coefficients and the split Φ = Φ₁ + Φ₂, plus parameter checks.

use crate::arith::{e, gcd};
use crate::mollifier::MollifierSpec;
use crate::optimizer::theta_max;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;

pub const DEFAULT_EPS_SPLIT: f64 = 0.05;

/// Ψ(t) = exp(−1/(1 − 4(t−1)²)) on |t − 1| < 1/2, zero elsewhere.
pub fn psi_bump(t: f64) -> f64 {
    let u = t - 1.0;
    if u.abs() >= 0.5 {
        return 0.0;
    }
    (-1.0 / (1.0 - 4.0 * u * u)).exp()
}

/// max Ψ = Ψ(1).
pub const PSI_MAX: f64 = 0.36787944117144233;

/// Period-1 tent: T(1 − T|t|) for |t| ≤ 1/T, zero up to |t| = 1/2.
pub fn h_tent(big_t: f64, t: f64) -> f64 {
    let u = (t - t.round()).abs();
    if u <= 1.0 / big_t {
        big_t * (1.0 - big_t * u)
    } else {
        0.0
    }
}

/// b(0) = 1, b(k) = T² sin²(πk/T)/(π²k²), evaluated as sin²(πx)/(πx)² with
/// x = k/T so that b(T/2) rounds to the same double as 4/π².
pub fn fourier_b(big_t: f64, k: i64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let x = k as f64 / big_t;
    let s = (PI * x).sin();
    s * s / (PI * PI * x * x)
}

/// Σ_{|k|>K} |b(k)| ≤ 2T²/(π²K).
pub fn tail_bound(big_t: f64, big_k: u64) -> f64 {
    2.0 * big_t * big_t / (PI * PI * big_k as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightConfig {
    pub q_scale: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eps_split: f64,
    /// Progression residue a mod D.
    pub a: u64,
    pub d: u64,
}

impl WeightConfig {
    pub fn new(q_scale: f64, eta1: f64, eta2: f64, a: u64, d: u64) -> WeightConfig {
        WeightConfig {
            q_scale,
            eta1,
            eta2,
            eps_split: DEFAULT_EPS_SPLIT,
            a,
            d,
        }
    }

    /// T = Q^{η₁}.
    pub fn t(&self) -> f64 {
        self.q_scale.powf(self.eta1)
    }

    /// K = ⌈Q^{η₁+ε}⌉.
    pub fn k(&self) -> u64 {
        self.q_scale.powf(self.eta1 + self.eps_split).ceil() as u64
    }

    /// Φ(q/Q), with the tent evaluated as T(Q − T|q − nQ|)/Q so that
    /// boundary moduli with integral Q and T get exactly zero weight.
    pub fn phi_at_modulus(&self, q: u64) -> f64 {
        let t = q as f64 / self.q_scale;
        let psi = psi_bump(t);
        if psi == 0.0 {
            return 0.0;
        }
        let big_t = self.t();
        let delta = (q as f64 - t.round() * self.q_scale).abs();
        let slack = self.q_scale - big_t * delta;
        if slack > 0.0 {
            psi * big_t * slack / self.q_scale
        } else {
            0.0
        }
    }

    /// Φ(t) = Ψ(t)·H_T(t).
    pub fn phi(&self, t: f64) -> f64 {
        let psi = psi_bump(t);
        if psi == 0.0 {
            0.0
        } else {
            psi * h_tent(self.t(), t)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSplit {
    pub phi1: Complex64,
    pub phi2: Complex64,
    pub phi: f64,
}

/// Φ₁(t) = Σ_{|k|≤K} b(k)Ψ(t)e(kt) and Φ₂ = Φ − Φ₁.
pub fn phi_split(cfg: &WeightConfig, t: f64) -> PhiSplit {
    phi_split_tk(cfg.t(), cfg.k(), t)
}

/// [`phi_split`] with T and K given directly.
pub fn phi_split_tk(big_t: f64, big_k: u64, t: f64) -> PhiSplit {
    let psi = psi_bump(t);
    if psi == 0.0 {
        let zero = Complex64::new(0.0, 0.0);
        return PhiSplit {
            phi1: zero,
            phi2: zero,
            phi: 0.0,
        };
    }
    let phi = psi * h_tent(big_t, t);
    // b is even in k, so the ±k terms pair up into cosines.
    let mut series = 1.0;
    for k in 1..=big_k as i64 {
        let b = fourier_b(big_t, k);
        if b != 0.0 {
            series += 2.0 * b * e(k as f64 * t).re;
        }
    }
    let phi1 = Complex64::new(psi * series, 0.0);
    PhiSplit {
        phi1,
        phi2: Complex64::new(phi, 0.0) - phi1,
        phi,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// 7η₁ + η₂ < 1/12 fails.
    EtaSum { value: f64 },
    /// θ_i < 1/2 − 41η₁ − 5η₂ fails.
    ThetaTooLong { which: u8, theta: f64, bound: f64 },
    /// D ≤ Q^{η₂} fails.
    ModulusTooLarge { d: u64, bound: f64 },
    /// gcd(a, D) = 1 fails.
    NotCoprime { a: u64, d: u64 },
    /// Malformed values (negative η, a outside [1, D], ...).
    Range(String),
}

impl Violation {
    pub fn constraint(&self) -> &'static str {
        match self {
            Violation::EtaSum { .. } => "7*eta1+eta2<1/12",
            Violation::ThetaTooLong { .. } => "theta<1/2-41*eta1-5*eta2",
            Violation::ModulusTooLarge { .. } => "D<=Q^eta2",
            Violation::NotCoprime { .. } => "gcd(a,D)=1",
            Violation::Range(_) => "range",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EtaSum { value } => {
                write!(f, "7η₁+η₂<1/12 fails: 7η₁+η₂ = {value}")
            }
            Violation::ThetaTooLong { which, theta, bound } => {
                write!(f, "θ{which} < 1/2−41η₁−5η₂ fails: θ{which} = {theta}, bound {bound}")
            }
            Violation::ModulusTooLarge { d, bound } => {
                write!(f, "D ≤ Q^η₂ fails: D = {d}, Q^η₂ = {bound}")
            }
            Violation::NotCoprime { a, d } => write!(f, "gcd(a,D)=1 fails: a = {a}, D = {d}"),
            Violation::Range(msg) => write!(f, "{msg}"),
        }
    }
}

/// Every violated constraint; empty when the configuration is admissible.
pub fn validate_config(cfg: &WeightConfig, spec: &MollifierSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(cfg.q_scale >= 1.0) {
        out.push(Violation::Range(format!("Q = {} must be at least 1", cfg.q_scale)));
    }
    if !(cfg.eta1 >= 0.0 && cfg.eta2 >= 0.0) {
        out.push(Violation::Range(format!(
            "η₁ = {}, η₂ = {} must be nonnegative",
            cfg.eta1, cfg.eta2
        )));
    }
    if !(cfg.eps_split > 0.0) {
        out.push(Violation::Range(format!("ε_split = {} must be positive", cfg.eps_split)));
    }
    if cfg.d == 0 || cfg.a == 0 || cfg.a > cfg.d {
        out.push(Violation::Range(format!("need 1 ≤ a ≤ D, got a = {}, D = {}", cfg.a, cfg.d)));
    }
    let eta_sum = 7.0 * cfg.eta1 + cfg.eta2;
    if !(eta_sum < 1.0 / 12.0) {
        out.push(Violation::EtaSum { value: eta_sum });
    }
    let bound = theta_max(cfg.eta1, cfg.eta2);
    for (which, theta) in [(1u8, spec.theta1), (2, spec.theta2)] {
        if !(theta < bound) {
            out.push(Violation::ThetaTooLong { which, theta, bound });
        }
    }
    let dmax = cfg.q_scale.powf(cfg.eta2);
    if cfg.d as f64 > dmax * (1.0 + 1e-12) {
        out.push(Violation::ModulusTooLarge { d: cfg.d, bound: dmax });
    }
    if cfg.d > 0 && gcd(cfg.a, cfg.d) != 1 {
        out.push(Violation::NotCoprime { a: cfg.a, d: cfg.d });
    }
    out
}
