//! Complete exponential sums (Kloosterman, Ramanujan), the reciprocity
//! identity for modular inverses, and direct evaluation of the quintuple
//! Kloosterman-type sums with coefficients in residue classes together with
//! their bound quantity K(C, D, N, R, S).

use crate::arith::{e_frac, gcd, mod_inverse};
use crate::error::{Error, Result};
use crate::sum::{sum_c64, ComplexNeumaier, Neumaier};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// S(m, n; c) = Σ_{x mod c, (x,c)=1} e((mx + n x̄)/c).
pub fn kloosterman(m: i64, n: i64, c: u64) -> Complex64 {
    assert!(c >= 1, "modulus must be positive");
    sum_c64((0..c).filter(|&x| gcd(x, c) == 1).map(|x| {
        let xbar = mod_inverse(x, c).expect("unit") as i128;
        e_frac(m as i128 * x as i128 + n as i128 * xbar, c)
    }))
}

/// c_w(k) = Σ_{b mod w, (b,w)=1} e(bk/w); real because b ↦ −b permutes the units.
pub fn ramanujan(w: u64, k: i64) -> f64 {
    assert!(w >= 1, "modulus must be positive");
    sum_c64(
        (0..w)
            .filter(|&b| gcd(b, w) == 1)
            .map(|b| e_frac(b as i128 * k as i128, w)),
    )
    .re
}

/// (x̄·x + ȳ·y − 1)/(xy) with x̄ = x^{−1} mod y in [1, y] and ȳ = y^{−1} mod x
/// in [1, x], in exact integer arithmetic.
pub fn reciprocity_defect(x: u64, y: u64) -> Result<i64> {
    if x == 0 || y == 0 {
        return Err(Error::InvalidArgument("x and y must be positive".into()));
    }
    if gcd(x, y) != 1 {
        return Err(Error::NotCoprime(format!("gcd({x}, {y}) > 1")));
    }
    let lift = |a: u64, m: u64| -> i128 {
        let inv = mod_inverse(a, m).expect("coprime") as i128;
        if inv == 0 {
            m as i128
        } else {
            inv
        }
    };
    let xbar = lift(x, y);
    let ybar = lift(y, x);
    let num = xbar * x as i128 + ybar * y as i128 - 1;
    let den = x as i128 * y as i128;
    if num % den != 0 {
        return Err(Error::InvalidArgument(format!(
            "reciprocity numerator {num} not divisible by {den}"
        )));
    }
    Ok((num / den) as i64)
}

/// Block sizes and congruence data of a quintuple sum. `q = 1` is the
/// unconditioned case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiParams {
    pub c: f64,
    pub d: f64,
    pub n: f64,
    pub r: f64,
    pub s: f64,
    pub q: u64,
    pub c0: u64,
    pub d0: u64,
}

impl DiParams {
    pub fn new(c: f64, d: f64, n: f64, r: f64, s: f64) -> Self {
        DiParams {
            c,
            d,
            n,
            r,
            s,
            q: 1,
            c0: 0,
            d0: 0,
        }
    }

    pub fn with_progression(mut self, q: u64, c0: u64, d0: u64) -> Self {
        self.q = q;
        self.c0 = c0;
        self.d0 = d0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [self.c, self.d, self.n, self.r, self.s];
        if sizes.iter().any(|&v| !(v >= 1.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "block sizes must be finite and ≥ 1: {sizes:?}"
            )));
        }
        if self.q == 0 {
            return Err(Error::InvalidArgument("q must be positive".into()));
        }
        if gcd(self.c0 * self.d0, self.q) != 1 {
            return Err(Error::NotCoprime(format!(
                "gcd(c0·d0 = {}, q = {}) > 1",
                self.c0 * self.d0,
                self.q
            )));
        }
        Ok(())
    }
}

/// K(C, D, N, R, S) = sqrt(qCS(RS+N)(C+RD) + C²DS·sqrt((RS+N)R) + D²NR).
///
/// The last addend is D²NR; the older form D²NR/S of the same estimate is
/// smaller by a factor S and is not used here.
pub fn di_bound(p: &DiParams) -> f64 {
    let rs_n = p.r * p.s + p.n;
    let first = p.q as f64 * p.c * p.s * rs_n * (p.c + p.r * p.d);
    let second = p.c * p.c * p.d * p.s * (rs_n * p.r).sqrt();
    let third = p.d * p.d * p.n * p.r;
    (first + second + third).sqrt()
}

/// Sparse coefficients b_{n,r,s}.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiCoefficients {
    entries: BTreeMap<(u64, u64, u64), f64>,
}

impl DiCoefficients {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, n: u64, r: u64, s: u64, b: f64) {
        self.entries.insert((n, r, s), b);
    }

    pub fn get(&self, n: u64, r: u64, s: u64) -> f64 {
        self.entries.get(&(n, r, s)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u64, u64, u64), &f64)> {
        self.entries.iter()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries
            .values()
            .map(|b| b * b)
            .collect::<Neumaier>()
            .value()
            .sqrt()
    }

    /// Support must lie in (0, N] × (R, 2R] × (S, 2S].
    pub fn check_support(&self, p: &DiParams) -> Result<()> {
        for &(n, r, s) in self.entries.keys() {
            let (n, r, s) = (n as f64, r as f64, s as f64);
            if !(n > 0.0 && n <= p.n && r > p.r && r <= 2.0 * p.r && s > p.s && s <= 2.0 * p.s) {
                return Err(Error::Support(format!(
                    "b at (n, r, s) = ({n}, {r}, {s}) outside (0, {}] × ({}, {}] × ({}, {}]",
                    p.n,
                    p.r,
                    2.0 * p.r,
                    p.s,
                    2.0 * p.s
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuintupleReport {
    pub sum: Complex64,
    pub coeff_norm: f64,
    pub bound: f64,
    /// |sum| / (K · ‖b‖₂); a diagnostic, never compared to a constant.
    pub ratio: f64,
}

/// Integers in [lo, hi] congruent to `residue` mod `q`.
fn progression(lo: f64, hi: f64, q: u64, residue: u64) -> Vec<u64> {
    let start = lo.ceil().max(1.0) as u64;
    let end = hi.floor() as u64;
    (start..=end).filter(|&v| v % q == residue % q).collect()
}

/// Σ b_{n,r,s} g(c,d,n,r,s) e(n·\overline{rd}/(sc)) over c ≡ c₀, d ≡ d₀ mod q
/// with (qrd, sc) = 1, where c and d run over the integers of [C, 2C] and
/// [D, 2D] (the support of g in those variables).
pub fn di_quintuple_sum<G>(coeffs: &DiCoefficients, weight: G, p: &DiParams) -> Result<QuintupleReport>
where
    G: Fn(f64, f64, f64, f64, f64) -> Complex64 + Sync,
{
    p.validate()?;
    coeffs.check_support(p)?;
    let norm = coeffs.l2_norm();
    let bound = di_bound(p);
    if coeffs.is_empty() {
        return Ok(QuintupleReport {
            sum: Complex64::new(0.0, 0.0),
            coeff_norm: 0.0,
            bound,
            ratio: 0.0,
        });
    }
    // Group by (r, s); n is innermost and shares the inverse.
    let mut by_rs: BTreeMap<(u64, u64), Vec<(u64, f64)>> = BTreeMap::new();
    for (&(n, r, s), &b) in coeffs.iter() {
        by_rs.entry((r, s)).or_default().push((n, b));
    }
    let cs = progression(p.c, 2.0 * p.c, p.q, p.c0);
    let ds = progression(p.d, 2.0 * p.d, p.q, p.d0);
    let partials: Vec<Complex64> = cs
        .par_iter()
        .map(|&c| {
            let mut acc = ComplexNeumaier::new();
            for &d in &ds {
                for (&(r, s), ns) in &by_rs {
                    let sc = s * c;
                    if gcd(p.q * r * d, sc) != 1 {
                        continue;
                    }
                    let inv = mod_inverse((r * d) % sc, sc).expect("coprime") as i128;
                    for &(n, b) in ns {
                        let g = weight(c as f64, d as f64, n as f64, r as f64, s as f64);
                        acc.add(g * b * e_frac(n as i128 * inv, sc));
                    }
                }
            }
            acc.value()
        })
        .collect();
    let sum = sum_c64(partials);
    Ok(QuintupleReport {
        sum,
        coeff_norm: norm,
        bound,
        ratio: sum.norm() / (bound * norm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kloosterman_examples() {
        for c in 1..30u64 {
            let phi = crate::arith::euler_phi(c) as f64;
            assert!((kloosterman(0, 0, c) - phi).norm() < 1e-10);
        }
        assert!((kloosterman(1, 1, 2) - 1.0).norm() < 1e-12);
        let expected = 2.0 + 2.0 * (4.0 * PI / 5.0).cos();
        assert!((kloosterman(1, 1, 5).re - expected).abs() < 1e-12);
        assert!((expected - 0.381_966).abs() < 1e-6);
    }

    #[test]
    fn kloosterman_is_real_and_symmetric() {
        for c in 1..60u64 {
            for m in -5..6i64 {
                for n in -5..6i64 {
                    let a = kloosterman(m, n, c);
                    let b = kloosterman(n, m, c);
                    assert!(a.im.abs() < 1e-9);
                    assert!((a - b).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn ramanujan_examples() {
        assert!((ramanujan(6, 2) + 1.0).abs() < 1e-12);
        assert!((ramanujan(5, 1) + 1.0).abs() < 1e-12);
        for w in 1..50u64 {
            assert!((ramanujan(w, 0) - crate::arith::euler_phi(w) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn reciprocity_examples() {
        assert_eq!(reciprocity_defect(1, 1).unwrap(), 1);
        assert_eq!(reciprocity_defect(3, 5).unwrap(), 1);
        assert_eq!(reciprocity_defect(2, 7).unwrap(), 1);
        assert!(matches!(reciprocity_defect(4, 6), Err(Error::NotCoprime(_))));
    }

    #[test]
    fn bound_examples() {
        let unit = DiParams::new(1.0, 1.0, 1.0, 1.0, 1.0);
        assert!((di_bound(&unit) - (5.0 + 2f64.sqrt()).sqrt()).abs() < 1e-12);

        let p = DiParams::new(2.0, 3.0, 4.0, 5.0, 1.0);
        let expected = (2.0 * 9.0 * 17.0 + 4.0 * 3.0 * 45f64.sqrt() + 9.0 * 20.0).sqrt();
        assert!((di_bound(&p) - expected).abs() < 1e-12);

        let q4 = p.with_progression(4, 1, 1);
        let first = |q: f64| q * 2.0 * 1.0 * (5.0 + 4.0) * (2.0 + 15.0);
        let delta = di_bound(&q4).powi(2) - di_bound(&p).powi(2);
        assert!((delta - (first(4.0) - first(1.0))).abs() < 1e-9);
    }

    #[test]
    fn empty_coefficients_give_zero() {
        let p = DiParams::new(4.0, 4.0, 4.0, 2.0, 2.0);
        let r = di_quintuple_sum(&DiCoefficients::new(), |_, _, _, _, _| Complex64::new(1.0, 0.0), &p)
            .unwrap();
        assert_eq!(r.sum, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn support_violation_is_rejected() {
        let p = DiParams::new(4.0, 4.0, 4.0, 2.0, 2.0);
        let mut b = DiCoefficients::new();
        b.insert(1, 2, 3, 1.0); // r = 2 is not in (2, 4]
        let err = di_quintuple_sum(&b, |_, _, _, _, _| Complex64::new(1.0, 0.0), &p).unwrap_err();
        assert!(matches!(err, Error::Support(_)));
    }

    #[test]
    fn progression_restricts_moduli() {
        // With q = 2 and c₀ = d₀ = 1 only odd c, d contribute; an indicator
        // weight on even c would give zero.
        let p = DiParams::new(3.0, 3.0, 3.0, 1.0, 1.0).with_progression(2, 1, 1);
        let mut b = DiCoefficients::new();
        b.insert(1, 2, 2, 1.0);
        let even_only = |c: f64, _: f64, _: f64, _: f64, _: f64| {
            Complex64::new(if (c as u64).is_multiple_of(2) { 1.0 } else { 0.0 }, 0.0)
        };
        let r = di_quintuple_sum(&b, even_only, &p).unwrap();
        assert_eq!(r.sum, Complex64::new(0.0, 0.0));
    }
}
