//! The two-piece mollifier M = M_IS + M_MV and the coefficients of the
//! main term of its mollified second moment.

use crate::arith::mobius_table;
use crate::characters::{epsilon_chi, Character};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt;

/// Exact rational from a double (every finite f64 is a dyadic rational).
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("{x} is not finite")))
}

/// Parse "3", "-0.25", "1e-3" or "2/7" exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("cannot parse {s:?} as a rational"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse::<BigInt>().map_err(|_| bad())? / 10;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(all);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A polynomial with P(0) = 0 and P(1) = 1, stored with exact rational
/// coefficients (constant term first).
#[derive(Debug, Clone, PartialEq)]
pub struct PolySpec {
    coeffs: Vec<BigRational>,
    approx: Vec<f64>,
}

impl PolySpec {
    pub fn new(mut coeffs: Vec<BigRational>) -> Result<PolySpec> {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() || !coeffs[0].is_zero() {
            return Err(Error::InvalidArgument("P(0) must be 0".into()));
        }
        let sum: BigRational = coeffs.iter().cloned().sum();
        if !sum.is_one() {
            return Err(Error::InvalidArgument(format!(
                "P(1) must be 1, coefficients sum to {sum}"
            )));
        }
        let approx = coeffs.iter().map(to_f64).collect();
        Ok(PolySpec { coeffs, approx })
    }

    pub fn from_f64(coeffs: &[f64]) -> Result<PolySpec> {
        Self::new(coeffs.iter().map(|&c| rational_from_f64(c)).collect::<Result<_>>()?)
    }

    /// Comma-separated coefficient list, constant term first: "0,1" is P(x) = x.
    pub fn parse(list: &str) -> Result<PolySpec> {
        Self::new(list.split(',').map(parse_rational).collect::<Result<_>>()?)
    }

    /// P(x) = x.
    pub fn linear() -> PolySpec {
        Self::new(vec![BigRational::zero(), BigRational::one()]).expect("x is admissible")
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeffs_f64(&self) -> &[f64] {
        &self.approx
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.approx.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// P(1), always 1 for an admissible polynomial.
    pub fn at_one(&self) -> BigRational {
        self.coeffs.iter().cloned().sum()
    }

    /// ∫₀¹ P′(x)² dx = Σ_{i,j≥1} a_i a_j ij/(i+j−1), exactly.
    pub fn derivative_energy(&self) -> BigRational {
        let mut acc = BigRational::zero();
        for (i, a) in self.coeffs.iter().enumerate().skip(1) {
            for (j, b) in self.coeffs.iter().enumerate().skip(1) {
                let w = BigRational::new(BigInt::from(i * j), BigInt::from(i + j - 1));
                acc += a * b * w;
            }
        }
        acc
    }
}

impl fmt::Display for PolySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MollifierSpec {
    pub theta1: f64,
    pub theta2: f64,
    pub p1: PolySpec,
    pub p2: PolySpec,
    /// Reference scale Q; the lengths are y_i = Q^{θ_i}.
    pub q_scale: f64,
}

impl MollifierSpec {
    pub fn new(theta1: f64, theta2: f64, p1: PolySpec, p2: PolySpec, q_scale: f64) -> Result<Self> {
        for (name, t) in [("theta1", theta1), ("theta2", theta2)] {
            if !(t > 0.0 && t < 0.5) {
                return Err(Error::InvalidArgument(format!("{name} = {t} outside (0, 1/2)")));
            }
        }
        if !(q_scale >= 1.0) {
            return Err(Error::InvalidArgument(format!("Q = {q_scale} < 1")));
        }
        Ok(MollifierSpec {
            theta1,
            theta2,
            p1,
            p2,
            q_scale,
        })
    }

    /// Both pieces with P = x and the same θ.
    pub fn linear(theta: f64, q_scale: f64) -> Result<Self> {
        Self::new(theta, theta, PolySpec::linear(), PolySpec::linear(), q_scale)
    }

    pub fn y1(&self) -> f64 {
        self.q_scale.powf(self.theta1)
    }

    pub fn y2(&self) -> f64 {
        self.q_scale.powf(self.theta2)
    }
}

/// P(log(y/ℓ)/log y) for 1 ≤ ℓ ≤ y.
pub fn p_bracket(p: &PolySpec, y: f64, ell: u64) -> Result<f64> {
    if !(y > 1.0) {
        return Err(Error::InvalidArgument(format!("mollifier length y = {y} must exceed 1")));
    }
    if ell == 0 || ell as f64 > y * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("ℓ = {ell} outside [1, {y}]")));
    }
    let x = ((y / ell as f64).ln() / y.ln()).clamp(0.0, 1.0);
    Ok(p.eval(x))
}

/// Largest ℓ with ℓ ≤ y; ties count.
fn length_floor(y: f64) -> u64 {
    (y * (1.0 + 1e-12)).floor().max(0.0) as u64
}

/// Weights μ(ℓ) ℓ^{−1/2} P[ℓ] for ℓ = 1..=⌊y⌋ (index 0 unused).
fn piece_weights(p: &PolySpec, y: f64) -> Vec<f64> {
    let top = length_floor(y);
    if top < 2 {
        // Only ℓ = 1, where P[1] = P(1) = 1 for every y.
        return if top == 1 { vec![0.0, 1.0] } else { vec![0.0] };
    }
    let mu = mobius_table(top as usize);
    let mut w = vec![0.0; top as usize + 1];
    for ell in 1..=top {
        let m = mu[ell as usize];
        if m != 0 {
            w[ell as usize] = m as f64 / (ell as f64).sqrt() * p_bracket(p, y, ell).expect("ℓ ≤ y");
        }
    }
    w
}

/// Precomputed coefficient vectors of both pieces.
#[derive(Debug, Clone)]
pub struct Mollifier {
    is_weights: Vec<f64>,
    mv_weights: Vec<f64>,
}

impl Mollifier {
    pub fn new(spec: &MollifierSpec) -> Mollifier {
        Mollifier {
            is_weights: piece_weights(&spec.p1, spec.y1()),
            mv_weights: piece_weights(&spec.p2, spec.y2()),
        }
    }

    /// M_IS(χ) = Σ_{ℓ ≤ y₁} μ(ℓ)χ(ℓ)ℓ^{−1/2} P₁[ℓ].
    pub fn is_part(&self, chi: &Character) -> Complex64 {
        self.is_weights
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &w)| w != 0.0)
            .map(|(ell, &w)| chi.value(ell as u64) * w)
            .sum()
    }

    /// Σ_{ℓ ≤ y₂} μ(ℓ)χ̄(ℓ)ℓ^{−1/2} P₂[ℓ], before the ε(χ̄) factor.
    pub fn mv_sum(&self, chi: &Character) -> Complex64 {
        self.mv_weights
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &w)| w != 0.0)
            .map(|(ell, &w)| chi.value(ell as u64).conj() * w)
            .sum()
    }

    /// M_MV(χ) given ε(χ̄).
    pub fn mv_part(&self, chi: &Character, eps_conj: Complex64) -> Complex64 {
        eps_conj * self.mv_sum(chi)
    }
}

/// ε(χ̄) = χ(−1)·conj(ε(χ)).
pub fn epsilon_conj(chi: &Character) -> Complex64 {
    let sign = if chi.is_even() { 1.0 } else { -1.0 };
    epsilon_chi(chi).conj() * sign
}

pub fn m_is(chi: &Character, spec: &MollifierSpec) -> Complex64 {
    Mollifier::new(spec).is_part(chi)
}

pub fn m_mv(chi: &Character, spec: &MollifierSpec) -> Result<Complex64> {
    if !chi.is_primitive() {
        return Err(Error::CharacterRejected(format!(
            "M_MV needs a primitive character; conductor {} < modulus {}",
            chi.conductor(),
            chi.modulus()
        )));
    }
    Ok(Mollifier::new(spec).mv_part(chi, epsilon_conj(chi)))
}

/// λ = P(1)² + (1/θ)∫₀¹ P′², exactly.
pub fn lambda_coeff_exact(p: &PolySpec, theta: &BigRational) -> Result<BigRational> {
    if *theta <= BigRational::zero() {
        return Err(Error::InvalidArgument(format!("theta = {theta} must be positive")));
    }
    let one = p.at_one();
    Ok(&one * &one + p.derivative_energy() / theta)
}

pub fn lambda_coeff(p: &PolySpec, theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::InvalidArgument(format!("theta = {theta} must be positive")));
    }
    Ok(to_f64(&lambda_coeff_exact(p, &rational_from_f64(theta)?)?))
}
