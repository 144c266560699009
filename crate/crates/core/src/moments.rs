//! Mollified first and second moments over moduli in a window and an
//! arithmetic progression, their predicted main terms, the Cauchy–Schwarz
//! lower bound and the direct non-vanishing census.
//!
//! Work is parallel over moduli; every per-modulus quantity is computed in
//! character order on one thread and the totals are reduced in ascending q
//! with compensated summation, so results do not depend on the pool size.

use crate::arith::euler_phi;
use crate::characters::{CharacterSet, Parity};
use crate::error::{Error, Result};
use crate::lvalue::lvalues_direct_all;
use crate::mollifier::{lambda_coeff, to_f64, Mollifier, MollifierSpec};
use crate::sum::{ComplexNeumaier, Neumaier};
use crate::weights::WeightConfig;
use num_complex::Complex64;
use rayon::prelude::*;

pub const DEFAULT_TAU_NV: f64 = 1e-8;

/// Provider of L(1/2, χ) for all characters of one modulus, indexed like
/// the set; the principal entry may be `None`.
pub trait LValueSource: Sync {
    fn lvalues(&self, set: &CharacterSet) -> Result<Vec<Option<Complex64>>>;
}

/// Computes every value afresh with the Hurwitz formula.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectLValues;

impl LValueSource for DirectLValues {
    fn lvalues(&self, set: &CharacterSet) -> Result<Vec<Option<Complex64>>> {
        lvalues_direct_all(set)
    }
}

/// The moduli q ≡ a mod D with Φ(q/Q) > 0, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusSet {
    moduli: Vec<u64>,
}

impl ModulusSet {
    /// An explicit list (sorted and deduplicated).
    pub fn from_moduli(mut moduli: Vec<u64>) -> ModulusSet {
        moduli.sort_unstable();
        moduli.dedup();
        ModulusSet { moduli }
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }
}

pub fn build_modulus_set(cfg: &WeightConfig) -> ModulusSet {
    let lo = (cfg.q_scale * 0.5).floor().max(1.0) as u64;
    let hi = (cfg.q_scale * 1.5).ceil() as u64;
    let d = cfg.d.max(1);
    let moduli = (lo..=hi)
        .filter(|&q| q % d == cfg.a % d)
        .filter(|&q| cfg.phi_at_modulus(q) > 0.0)
        .collect();
    ModulusSet { moduli }
}

/// Φ(q/Q)·q/φ(q).
pub fn modulus_weight(cfg: &WeightConfig, q: u64) -> f64 {
    cfg.phi_at_modulus(q) * q as f64 / euler_phi(q) as f64
}

/// Unweighted per-modulus data.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusRow {
    pub q: u64,
    pub weight: f64,
    pub even_primitive: usize,
    pub odd_primitive: usize,
    pub even_nonvanishing: usize,
    pub odd_nonvanishing: usize,
    /// Σ⁺ L(1/2,χ)M(χ) over even primitive χ.
    pub s1: Complex64,
    /// Σ⁺ |L(1/2,χ)M(χ)|² over even primitive χ.
    pub s2: f64,
}

impl ModulusRow {
    pub fn primitive(&self, parity: Parity) -> usize {
        match parity {
            Parity::Even => self.even_primitive,
            Parity::Odd => self.odd_primitive,
        }
    }

    pub fn nonvanishing(&self, parity: Parity) -> usize {
        match parity {
            Parity::Even => self.even_nonvanishing,
            Parity::Odd => self.odd_nonvanishing,
        }
    }
}

fn modulus_row(
    q: u64,
    cfg: &WeightConfig,
    mollifier: &Mollifier,
    source: &dyn LValueSource,
    tau_nv: f64,
) -> Result<ModulusRow> {
    let set = CharacterSet::new(q);
    let lvals = source.lvalues(&set)?;
    let gauss = set.gauss_sums();
    let sqrt_q = (q as f64).sqrt();
    let mut row = ModulusRow {
        q,
        weight: modulus_weight(cfg, q),
        even_primitive: 0,
        odd_primitive: 0,
        even_nonvanishing: 0,
        odd_nonvanishing: 0,
        s1: Complex64::new(0.0, 0.0),
        s2: 0.0,
    };
    let mut s1 = ComplexNeumaier::new();
    let mut s2 = Neumaier::new();
    for chi in set.primitive() {
        let l = lvals[chi.index()].ok_or_else(|| Error::Context {
            q,
            index: chi.index(),
            source: Box::new(Error::CharacterRejected("no L-value supplied".into())),
        })?;
        if !(l.re.is_finite() && l.im.is_finite()) {
            return Err(Error::Context {
                q,
                index: chi.index(),
                source: Box::new(Error::NoConvergence(format!("non-finite L-value {l}"))),
            });
        }
        let nonzero = l.norm() > tau_nv;
        if chi.is_even() {
            row.even_primitive += 1;
            row.even_nonvanishing += nonzero as usize;
            let eps_conj = gauss[set.conjugate_index(chi.index())] / sqrt_q;
            let m = mollifier.is_part(chi) + mollifier.mv_part(chi, eps_conj);
            let lm = l * m;
            s1.add(lm);
            s2.add(lm.norm_sqr());
        } else {
            row.odd_primitive += 1;
            row.odd_nonvanishing += nonzero as usize;
        }
    }
    row.s1 = s1.value();
    row.s2 = s2.value();
    Ok(row)
}

/// Per-modulus rows in ascending q, computed in parallel on the current
/// rayon pool.
pub fn sweep(
    ms: &ModulusSet,
    cfg: &WeightConfig,
    spec: &MollifierSpec,
    source: &dyn LValueSource,
    tau_nv: f64,
) -> Result<Vec<ModulusRow>> {
    if !(tau_nv > 0.0) {
        return Err(Error::InvalidArgument(format!("tau_nv = {tau_nv} must be positive")));
    }
    let mollifier = Mollifier::new(spec);
    ms.moduli
        .par_iter()
        .map(|&q| modulus_row(q, cfg, &mollifier, source, tau_nv))
        .collect()
}

fn weighted_c64(rows: &[ModulusRow], f: impl Fn(&ModulusRow) -> Complex64) -> Complex64 {
    rows.iter().map(|r| f(r) * r.weight).collect::<ComplexNeumaier>().value()
}

fn weighted_f64(rows: &[ModulusRow], f: impl Fn(&ModulusRow) -> f64) -> f64 {
    rows.iter().map(|r| f(r) * r.weight).collect::<Neumaier>().value()
}

/// S₁ = Σ_q Φ(q/Q)(q/φ(q)) Σ⁺ L(1/2,χ)M(χ).
pub fn s1_moment(ms: &ModulusSet, spec: &MollifierSpec, cfg: &WeightConfig) -> Result<Complex64> {
    let rows = sweep(ms, cfg, spec, &DirectLValues, DEFAULT_TAU_NV)?;
    Ok(weighted_c64(&rows, |r| r.s1))
}

/// S₂ = Σ_q Φ(q/Q)(q/φ(q)) Σ⁺ |L(1/2,χ)M(χ)|².
pub fn s2_moment(ms: &ModulusSet, spec: &MollifierSpec, cfg: &WeightConfig) -> Result<f64> {
    let rows = sweep(ms, cfg, spec, &DirectLValues, DEFAULT_TAU_NV)?;
    Ok(weighted_f64(&rows, |r| r.s2))
}

/// Exact count of even primitive characters mod q.
pub fn even_primitive_count(q: u64) -> usize {
    CharacterSet::new(q).even_primitive().count()
}

/// Σ_q Φ(q/Q)(q/φ(q))·N⁺(q).
pub fn weighted_mass(ms: &ModulusSet, cfg: &WeightConfig) -> f64 {
    ms.moduli
        .iter()
        .map(|&q| modulus_weight(cfg, q) * even_primitive_count(q) as f64)
        .collect::<Neumaier>()
        .value()
}

/// (P₁(1) + P₂(1)) × mass.
pub fn predict_s1(ms: &ModulusSet, spec: &MollifierSpec, cfg: &WeightConfig) -> f64 {
    predict_s1_from_mass(spec, weighted_mass(ms, cfg))
}

pub fn predict_s1_from_mass(spec: &MollifierSpec, mass: f64) -> f64 {
    (to_f64(&spec.p1.at_one()) + to_f64(&spec.p2.at_one())) * mass
}

/// (λ₁ + λ₂ + 2P₁(1)P₂(1)) × mass; the coefficient attached to P₂ is λ(P₂, θ₂).
pub fn predict_s2(ms: &ModulusSet, spec: &MollifierSpec, cfg: &WeightConfig) -> Result<f64> {
    predict_s2_from_mass(spec, weighted_mass(ms, cfg))
}

pub fn predict_s2_from_mass(spec: &MollifierSpec, mass: f64) -> Result<f64> {
    let l1 = lambda_coeff(&spec.p1, spec.theta1)?;
    let l2 = lambda_coeff(&spec.p2, spec.theta2)?;
    let cross = 2.0 * to_f64(&spec.p1.at_one()) * to_f64(&spec.p2.at_one());
    Ok((l1 + l2 + cross) * mass)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsBound {
    pub value: f64,
    /// Set when S₂ = 0 and the bound was defined as 0.
    pub degenerate: bool,
}

/// |S₁|²/S₂, or 0 with the degenerate flag when S₂ = 0.
pub fn cs_lower_bound(s1: Complex64, s2: f64) -> CsBound {
    if s2 == 0.0 {
        CsBound {
            value: 0.0,
            degenerate: true,
        }
    } else {
        CsBound {
            value: s1.norm_sqr() / s2,
            degenerate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusReport {
    pub tau_nv: f64,
    pub rows: Vec<ModulusRow>,
    pub even_total: f64,
    pub even_nonvanishing: f64,
    pub odd_total: f64,
    pub odd_nonvanishing: f64,
}

impl CensusReport {
    fn from_rows(rows: Vec<ModulusRow>, tau_nv: f64) -> CensusReport {
        CensusReport {
            tau_nv,
            even_total: weighted_f64(&rows, |r| r.even_primitive as f64),
            even_nonvanishing: weighted_f64(&rows, |r| r.even_nonvanishing as f64),
            odd_total: weighted_f64(&rows, |r| r.odd_primitive as f64),
            odd_nonvanishing: weighted_f64(&rows, |r| r.odd_nonvanishing as f64),
            rows,
        }
    }

    fn ratio(num: f64, den: f64) -> Option<f64> {
        (den > 0.0).then(|| num / den)
    }

    pub fn even_proportion(&self) -> Option<f64> {
        Self::ratio(self.even_nonvanishing, self.even_total)
    }

    pub fn odd_proportion(&self) -> Option<f64> {
        Self::ratio(self.odd_nonvanishing, self.odd_total)
    }

    pub fn total_proportion(&self) -> Option<f64> {
        Self::ratio(
            self.even_nonvanishing + self.odd_nonvanishing,
            self.even_total + self.odd_total,
        )
    }
}

/// Weighted count of primitive characters with |L(1/2,χ)| > τ, by parity.
pub fn census(ms: &ModulusSet, cfg: &WeightConfig, tau_nv: f64) -> Result<CensusReport> {
    census_with(ms, cfg, tau_nv, &DirectLValues)
}

pub fn census_with(
    ms: &ModulusSet,
    cfg: &WeightConfig,
    tau_nv: f64,
    source: &dyn LValueSource,
) -> Result<CensusReport> {
    // The mollifier is irrelevant here; y < 2 keeps it trivial.
    let spec = MollifierSpec::linear(0.25, 1.0)?;
    Ok(CensusReport::from_rows(sweep(ms, cfg, &spec, source, tau_nv)?, tau_nv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub s1: Complex64,
    pub s2: f64,
    /// Σ Φ(q/Q)(q/φ(q))·N⁺(q).
    pub mass: f64,
    pub predicted_s1: f64,
    pub predicted_s2: f64,
    pub cs_bound: CsBound,
    pub census: CensusReport,
}

impl MomentReport {
    pub fn s1_ratio(&self) -> Option<f64> {
        (self.predicted_s1 != 0.0).then(|| self.s1.re / self.predicted_s1)
    }

    pub fn s2_ratio(&self) -> Option<f64> {
        (self.predicted_s2 != 0.0).then(|| self.s2 / self.predicted_s2)
    }

    /// |S₁|²/S₂ ≤ weighted even census, with slack `tol`.
    pub fn cs_holds(&self, tol: f64) -> bool {
        self.cs_bound.value <= self.census.even_nonvanishing + tol
    }
}

/// Moments, predictions, bound and census in one sweep.
pub fn moment_report(
    ms: &ModulusSet,
    cfg: &WeightConfig,
    spec: &MollifierSpec,
    tau_nv: f64,
    source: &dyn LValueSource,
) -> Result<MomentReport> {
    let rows = sweep(ms, cfg, spec, source, tau_nv)?;
    let s1 = weighted_c64(&rows, |r| r.s1);
    let s2 = weighted_f64(&rows, |r| r.s2);
    let census = CensusReport::from_rows(rows, tau_nv);
    let mass = census.even_total;
    Ok(MomentReport {
        s1,
        s2,
        mass,
        predicted_s1: predict_s1_from_mass(spec, mass),
        predicted_s2: predict_s2_from_mass(spec, mass)?,
        cs_bound: cs_lower_bound(s1, s2),
        census,
    })
}
