//! Maximization of the non-vanishing ratio over mollifier polynomials and
//! the closed-form constants attached to it.

use crate::error::{Error, Result};
use crate::mollifier::{lambda_coeff_exact, rational_from_f64, to_f64, PolySpec};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub const MAX_DEGREE: usize = 8;
pub const DESCENT_TOL: f64 = 1e-12;

/// 1/2 − 41η₁ − 5η₂, the exclusive upper bound for θ.
pub fn theta_max(eta1: f64, eta2: f64) -> f64 {
    0.5 - 41.0 * eta1 - 5.0 * eta2
}

/// (θ₁+θ₂)/(1+θ₁+θ₂).
pub fn sandwich_value(theta1: f64, theta2: f64) -> f64 {
    (theta1 + theta2) / (1.0 + theta1 + theta2)
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("theta = {theta} outside (0, 1/2)")))
    }
}

/// c = 1/2 − (1−2ξ)/(2−2ξ) with ξ = 41η₁ + 5η₂, exactly.
pub fn c_eta_exact(eta1: &BigRational, eta2: &BigRational) -> Result<BigRational> {
    let xi = eta1 * BigRational::from_integer(41.into()) + eta2 * BigRational::from_integer(5.into());
    let half = BigRational::new(1.into(), 2.into());
    if xi >= half {
        return Err(Error::InvalidArgument(format!("41η₁+5η₂ = {xi} must be below 1/2")));
    }
    let one = BigRational::one();
    let two = BigRational::from_integer(2.into());
    Ok(&half - (&one - &two * &xi) / (&two - &two * &xi))
}

pub fn c_eta(eta1: f64, eta2: f64) -> Result<f64> {
    if !(eta1 >= 0.0 && eta2 >= 0.0) {
        return Err(Error::InvalidArgument(format!("η₁ = {eta1}, η₂ = {eta2} must be nonnegative")));
    }
    Ok(to_f64(&c_eta_exact(&rational_from_f64(eta1)?, &rational_from_f64(eta2)?)?))
}

/// (P₁(1)+P₂(1))² / (λ₁ + λ₂ + 2P₁(1)P₂(1)), exactly.
pub fn nv_ratio_exact(p1: &PolySpec, p2: &PolySpec, theta1: &BigRational, theta2: &BigRational) -> Result<BigRational> {
    let (a, b) = (p1.at_one(), p2.at_one());
    let num = (&a + &b) * (&a + &b);
    let two = BigRational::from_integer(2.into());
    let den = lambda_coeff_exact(p1, theta1)? + lambda_coeff_exact(p2, theta2)? + two * a * b;
    Ok(num / den)
}

pub fn nv_ratio(p1: &PolySpec, p2: &PolySpec, theta1: f64, theta2: f64) -> Result<f64> {
    check_theta(theta1)?;
    check_theta(theta2)?;
    Ok(to_f64(&nv_ratio_exact(p1, p2, &rational_from_f64(theta1)?, &rational_from_f64(theta2)?)?))
}

/// H_ij = ij/(i+j−1), the Gram matrix of ∫P′² in the basis x, x², ..., x^d.
fn energy_matrix(d: usize) -> Vec<Vec<BigRational>> {
    (1..=d)
        .map(|i| {
            (1..=d)
                .map(|j| BigRational::new(BigInt::from(i * j), BigInt::from(i + j - 1)))
                .collect()
        })
        .collect()
}

/// Gaussian elimination over the rationals.
fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Result<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::InvalidArgument("singular system".into()))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            let (upper, lower) = a.split_at_mut(r);
            for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= &f * p;
            }
            let delta = &f * &b[col];
            b[r] -= delta;
        }
    }
    let mut x = vec![BigRational::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc -= &a[r][c] * &x[c];
        }
        x[r] = acc / &a[r][r];
    }
    Ok(x)
}

/// Minimizer of ∫P′² over P(0)=0, P(1)=1, deg P ≤ d: solve H u = 1 and
/// rescale so the coefficients sum to 1.
pub fn minimize_energy(d: usize) -> Result<PolySpec> {
    check_degree(d)?;
    let u = solve_exact(energy_matrix(d), vec![BigRational::one(); d])?;
    let total: BigRational = u.iter().cloned().sum();
    let mut coeffs = vec![BigRational::zero()];
    coeffs.extend(u.into_iter().map(|c| c / &total));
    PolySpec::new(coeffs)
}

fn check_degree(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!("degree {d} outside 1..={MAX_DEGREE}")));
    }
    Ok(())
}

/// Coordinate descent on the same problem in floating point, moving mass
/// between the linear coefficient and one other at a time until no step
/// in a sweep exceeds `tol`. The valley is flat along ill-conditioned
/// directions, so only the energy is comparable with the exact solve, not
/// the coefficients. Returns the coefficients a₁..a_d and the achieved ∫P′².
pub fn minimize_energy_descent(d: usize, tol: f64) -> Result<(Vec<f64>, f64)> {
    check_degree(d)?;
    let h: Vec<Vec<f64>> = (1..=d)
        .map(|i| (1..=d).map(|j| (i * j) as f64 / (i + j - 1) as f64).collect())
        .collect();
    let energy = |a: &[f64]| -> f64 {
        (0..d).map(|i| (0..d).map(|j| a[i] * h[i][j] * a[j]).sum::<f64>()).sum()
    };
    let mut a = vec![1.0 / d as f64; d];
    for _ in 0..1_000_000 {
        let mut largest = 0.0f64;
        for j in 1..d {
            // direction e_j − e_1
            let grad: f64 = (0..d).map(|k| (h[j][k] - h[0][k]) * a[k]).sum();
            let curv = h[j][j] - 2.0 * h[0][j] + h[0][0];
            let step = -grad / curv;
            a[j] += step;
            a[0] -= step;
            largest = largest.max(step.abs());
        }
        if largest <= tol {
            break;
        }
    }
    let value = energy(&a);
    Ok((a, value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub degree: usize,
    pub p1: PolySpec,
    pub p2: PolySpec,
    /// ∫P_i′² at the optimum.
    pub energy1: f64,
    pub energy2: f64,
    pub ratio: f64,
    pub sandwich: f64,
    /// sandwich − ratio; positive when θ₁ ≠ θ₂.
    pub sandwich_gap: f64,
    /// ∫P′² reached by coordinate descent, for comparison.
    pub descent_energy: f64,
}

/// Maximize the ratio over polynomials of degree ≤ d. Both pieces share
/// the same minimizer since the functional separates.
pub fn optimize(d: usize, theta1: f64, theta2: f64) -> Result<OptimizeResult> {
    check_theta(theta1)?;
    check_theta(theta2)?;
    let p = minimize_energy(d)?;
    let energy = to_f64(&p.derivative_energy());
    let ratio = nv_ratio(&p, &p, theta1, theta2)?;
    let sandwich = sandwich_value(theta1, theta2);
    let (_, descent_energy) = minimize_energy_descent(d, DESCENT_TOL)?;
    Ok(OptimizeResult {
        degree: d,
        p1: p.clone(),
        p2: p,
        energy1: energy,
        energy2: energy,
        ratio,
        sandwich,
        sandwich_gap: sandwich - ratio,
        descent_energy,
    })
}

/// Checks 2θ*/(1+2θ*) + c(η₁,η₂) = 1/2 at θ* = 1/2 − 41η₁ − 5η₂ in exact
/// arithmetic and returns |difference| (zero when the identity holds).
pub fn theorem_identity_defect(eta1: f64, eta2: f64) -> Result<BigRational> {
    let (e1, e2) = (rational_from_f64(eta1)?, rational_from_f64(eta2)?);
    let c = c_eta_exact(&e1, &e2)?;
    let half = BigRational::new(1.into(), 2.into());
    let two = BigRational::from_integer(2.into());
    let theta = &half - e1 * BigRational::from_integer(41.into()) - e2 * BigRational::from_integer(5.into());
    let s = &two * &theta / (BigRational::one() + &two * &theta);
    Ok((s + c - half).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_examples() {
        let x = PolySpec::linear();
        assert!((nv_ratio(&x, &x, 0.25, 0.25).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((nv_ratio(&x, &x, 0.3, 0.3).unwrap() - 0.375).abs() < 1e-15);
        assert!((nv_ratio(&x, &x, 0.4999999, 0.4999999).unwrap() - 0.5).abs() < 1e-6);
        assert!(nv_ratio(&x, &x, 0.5, 0.25).is_err());
    }

    #[test]
    fn optimum_is_linear() {
        for d in 1..=MAX_DEGREE {
            let p = minimize_energy(d).unwrap();
            assert_eq!(p, PolySpec::linear(), "degree {d}");
            let (a, e) = minimize_energy_descent(d, DESCENT_TOL).unwrap();
            assert!((e - 1.0).abs() < 1e-9, "degree {d}: {e}");
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(minimize_energy(0).is_err());
        assert!(minimize_energy(9).is_err());
    }

    #[test]
    fn optimize_examples() {
        let r = optimize(6, 0.25, 0.25).unwrap();
        assert!((r.ratio - 1.0 / 3.0).abs() < 1e-9);
        assert!((r.sandwich - 1.0 / 3.0).abs() < 1e-15);
        let r = optimize(3, 0.1, 0.4).unwrap();
        assert!((r.ratio - 4.0 / 16.5).abs() < 1e-12);
        assert!(r.sandwich_gap > 0.0);
    }

    #[test]
    fn sandwich_exceeds_ratio_off_diagonal() {
        for i in 1..10 {
            for j in 1..10 {
                let (t1, t2) = (0.05 * i as f64, 0.05 * j as f64);
                let r = optimize(2, t1, t2).unwrap();
                if i == j {
                    assert!(r.sandwich_gap.abs() < 1e-14);
                } else {
                    assert!(r.sandwich_gap > 0.0);
                }
            }
        }
        assert_eq!(sandwich_value(0.0, 0.0), 0.0);
    }

    #[test]
    fn c_eta_examples() {
        assert_eq!(c_eta(0.0, 0.0).unwrap(), 0.0);
        assert!((c_eta(0.001, 0.001).unwrap() - (0.5 - 0.908 / 1.908)).abs() < 1e-12);
        assert!(c_eta(0.01, 0.03).is_err());
        let mut prev = -1.0;
        for i in 0..20 {
            let c = c_eta(0.0005 * i as f64, 0.001).unwrap();
            assert!(c > prev);
            prev = c;
        }
        assert!((theta_max(0.001, 0.001) - 0.454).abs() < 1e-15);
        assert_eq!(theta_max(0.0, 0.0), 0.5);
    }

    #[test]
    fn theorem_identity_is_exact() {
        for (e1, e2) in [(0.0, 0.0), (0.001, 0.001), (0.005, 0.03), (0.01, 0.0)] {
            assert!(theorem_identity_defect(e1, e2).unwrap().is_zero());
        }
    }
}
