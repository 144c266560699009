//! Central values L(1/2, χ).
//!
//! Two independent routes: the approximate functional equation for
//! |L(1/2, χ)|² with even primitive χ (the kernel Z from [`kernel`]), and the
//! exact finite formula L(1/2, χ) = q^{−1/2} Σ_a χ(a) ζ(1/2, a/q) through
//! Hurwitz zeta values. Moments always use the second; the first exists to
//! cross-check it.

pub mod gamma;
pub mod hurwitz;
pub mod kernel;

pub use gamma::{complex_gamma, ln_gamma};
pub use hurwitz::hurwitz_zeta_half;
pub use kernel::{z_kernel, KernelConfig, ZKernel, ZTable};

use crate::characters::{Character, CharacterSet};
use crate::error::{Error, Result};
use crate::sum::{sum_c64, ComplexNeumaier};
use num_complex::Complex64;

/// |Z| below this counts as the end of the AFE double sum.
pub const AFE_TRUNCATION: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Afe,
    Direct,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Afe => "afe",
            Method::Direct => "direct",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LValueRecord {
    pub modulus: u64,
    pub index: usize,
    /// |L(1/2, χ)|².
    pub value: f64,
    pub method: Method,
    pub config_hash: String,
}

fn check_afe_input(chi: &Character) -> Result<()> {
    let q = chi.modulus();
    if q < 3 {
        return Err(Error::CharacterRejected(format!("modulus {q} < 3")));
    }
    if !chi.is_primitive() {
        return Err(Error::CharacterRejected(format!(
            "imprimitive character mod {q} (conductor {})",
            chi.conductor()
        )));
    }
    if !chi.is_even() {
        return Err(Error::CharacterRejected(format!("odd character mod {q}")));
    }
    Ok(())
}

/// Evaluator for the approximate functional equation with a fixed kernel.
#[derive(Debug, Clone)]
pub struct Afe {
    kernel: ZKernel,
    /// Z(x*) is negligible past this abscissa.
    x_star: f64,
}

impl Afe {
    pub fn new(cfg: &KernelConfig) -> Result<Afe> {
        let kernel = ZKernel::new(cfg)?;
        let x_star = kernel.truncation_point(AFE_TRUNCATION)?;
        Ok(Afe { kernel, x_star })
    }

    pub fn kernel(&self) -> &ZKernel {
        &self.kernel
    }

    pub fn x_star(&self) -> f64 {
        self.x_star
    }

    /// Z(k/q) for k = 1..=⌊q·x⌋.
    pub fn z_table(&self, q: u64, x: f64) -> Result<Vec<f64>> {
        let kmax = (q as f64 * x).floor() as u64;
        (1..=kmax)
            .map(|k| self.kernel.eval(k as f64 / q as f64))
            .collect()
    }

    /// |L(1/2, χ)|² = 2 ΣΣ χ(m)χ̄(n) (mn)^{−1/2} Z(mn/q), summed over mn ≤ q·x*.
    pub fn lvalue_sq(&self, chi: &Character) -> Result<f64> {
        check_afe_input(chi)?;
        let z = self.z_table(chi.modulus(), self.x_star)?;
        self.lvalue_sq_with(chi, &z)
    }

    /// As [`Afe::lvalue_sq`] with the Z values supplied; `z[k−1] = Z(k/q)`
    /// and the sum runs over mn ≤ z.len().
    pub fn lvalue_sq_with(&self, chi: &Character, z: &[f64]) -> Result<f64> {
        check_afe_input(chi)?;
        let kmax = z.len();
        let vals: Vec<Complex64> = (0..=kmax as u64).map(|n| chi.value(n)).collect();
        // a_k = Σ_{mn=k} χ(m)χ̄(n)
        let mut coeff = vec![Complex64::new(0.0, 0.0); kmax + 1];
        for m in 1..=kmax {
            let cm = vals[m];
            if cm.norm_sqr() == 0.0 {
                continue;
            }
            for n in 1..=kmax / m {
                coeff[m * n] += cm * vals[n].conj();
            }
        }
        let mut acc = ComplexNeumaier::new();
        for k in 1..=kmax {
            acc.add(coeff[k] * (z[k - 1] / (k as f64).sqrt()));
        }
        let total = acc.value() * 2.0;
        if total.im.abs() > 1e-8 * total.re.abs().max(1.0) {
            return Err(Error::Context {
                q: chi.modulus(),
                index: chi.index(),
                source: Box::new(Error::NoConvergence(format!(
                    "AFE sum not real: imaginary part {:e}",
                    total.im
                ))),
            });
        }
        Ok(total.re)
    }

    /// |L(1/2, χ)|² for every even primitive character of `set`, sharing the
    /// Z table. Entries for other characters are `None`.
    pub fn lvalue_sq_all(&self, set: &CharacterSet) -> Result<Vec<Option<f64>>> {
        let q = set.modulus();
        if q < 3 {
            return Ok(vec![None; set.len()]);
        }
        let z = self.z_table(q, self.x_star)?;
        set.iter()
            .map(|chi| {
                if chi.is_primitive() && chi.is_even() {
                    self.lvalue_sq_with(chi, &z).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect()
    }
}

/// |L(1/2, χ)|² by the approximate functional equation.
pub fn lvalue_sq_afe(chi: &Character, cfg: &KernelConfig) -> Result<f64> {
    check_afe_input(chi)?;
    Afe::new(cfg)?.lvalue_sq(chi)
}

fn hurwitz_at_residue(a: u64, q: u64) -> Result<f64> {
    let a = if a == 0 { q } else { a };
    hurwitz_zeta_half(a as f64 / q as f64)
}

/// L(1/2, χ) = q^{−1/2} Σ_{a=1}^{q} χ(a) ζ(1/2, a/q) for non-principal χ.
pub fn lvalue_direct(chi: &Character) -> Result<Complex64> {
    if chi.is_principal() {
        return Err(Error::CharacterRejected(format!(
            "principal character mod {}",
            chi.modulus()
        )));
    }
    let q = chi.modulus();
    let terms = (1..=q)
        .filter(|&a| crate::arith::gcd(a, q) == 1)
        .map(|a| Ok(chi.value(a) * hurwitz_at_residue(a, q)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(sum_c64(terms) / (q as f64).sqrt())
}

/// L(1/2, χ) for every character of the set at once, through a DFT over the
/// unit group. The principal entry is `None`.
pub fn lvalues_direct_all(set: &CharacterSet) -> Result<Vec<Option<Complex64>>> {
    let q = set.modulus();
    let mut zeta = std::collections::HashMap::new();
    let residues: Vec<u64> = (0..q).filter(|&a| crate::arith::gcd(a, q) == 1).collect();
    for &a in &residues {
        zeta.insert(a, hurwitz_at_residue(a, q)?);
    }
    let scale = 1.0 / (q as f64).sqrt();
    let values = set.transform(|a| Complex64::new(zeta[&a] * scale, 0.0));
    Ok(set
        .iter()
        .map(|chi| (!chi.is_principal()).then(|| values[chi.index()]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::enumerate_characters;

    fn quadratic_mod5() -> Character {
        enumerate_characters(5)
            .iter()
            .find(|c| c.is_real() && !c.is_principal())
            .unwrap()
            .clone()
    }

    #[test]
    fn afe_agrees_with_direct_mod5() {
        let chi = quadratic_mod5();
        let afe = lvalue_sq_afe(&chi, &KernelConfig::default()).unwrap();
        let direct = lvalue_direct(&chi).unwrap().norm_sqr();
        assert!((afe - direct).abs() <= 1e-6 * direct, "{afe} vs {direct}");
    }

    #[test]
    fn afe_rejects_bad_characters() {
        let s4 = enumerate_characters(4);
        let principal = s4.iter().find(|c| c.is_principal()).unwrap();
        assert!(matches!(
            lvalue_sq_afe(principal, &KernelConfig::default()),
            Err(Error::CharacterRejected(_))
        ));
        let s3 = enumerate_characters(3);
        let odd = s3.iter().find(|c| !c.is_even()).unwrap();
        assert!(matches!(
            lvalue_sq_afe(odd, &KernelConfig::default()),
            Err(Error::CharacterRejected(_))
        ));
    }

    #[test]
    fn direct_rejects_principal() {
        let s7 = enumerate_characters(7);
        let principal = s7.iter().find(|c| c.is_principal()).unwrap();
        assert!(lvalue_direct(principal).is_err());
    }

    #[test]
    fn conjugate_symmetry() {
        let s = enumerate_characters(13);
        for chi in s.iter().filter(|c| !c.is_principal()) {
            let bar = s.get(s.conjugate_index(chi.index())).unwrap();
            let l = lvalue_direct(chi).unwrap();
            let lbar = lvalue_direct(bar).unwrap();
            assert!((lbar - l.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn batch_matches_single() {
        for q in [7u64, 12, 35, 64] {
            let s = enumerate_characters(q);
            let batch = lvalues_direct_all(&s).unwrap();
            for chi in s.iter().filter(|c| !c.is_principal()) {
                let single = lvalue_direct(chi).unwrap();
                assert!((batch[chi.index()].unwrap() - single).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn imprimitive_value_carries_euler_factor() {
        // χ mod 15 induced from the quadratic character mod 5 (p = 3 ∤ 5).
        let quad5 = quadratic_mod5();
        let s15 = enumerate_characters(15);
        let induced = s15
            .iter()
            .find(|c| {
                c.conductor() == 5 && (1..15).all(|n| {
                    crate::arith::gcd(n, 15) != 1 || (c.value(n) - quad5.value(n)).norm() < 1e-12
                })
            })
            .unwrap();
        let lhs = lvalue_direct(induced).unwrap();
        let factor = Complex64::new(1.0, 0.0) - quad5.value(3) / 3f64.sqrt();
        let rhs = lvalue_direct(&quad5).unwrap() * factor;
        assert!((lhs - rhs).norm() < 1e-10);
    }
}
