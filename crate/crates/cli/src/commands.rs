//! Subcommand bodies. Each returns the process exit code or an error whose
//! kind determines it.

use crate::cache::{LValueCache, VERSION};
use crate::config::{ConfigError, Format, RunConfig};
use crate::output::{num, write_json, Table};
use log::{info, warn};
use nvlab_core::expsums::{di_quintuple_sum, DiCoefficients, DiParams};
use nvlab_core::lvalue::Afe;
use nvlab_core::mollifier::{lambda_coeff, MollifierSpec};
use nvlab_core::moments::{build_modulus_set, moment_report, MomentReport};
use nvlab_core::optimizer::{c_eta, optimize, theta_max};
use nvlab_core::sum::{ComplexNeumaier, Neumaier};
use nvlab_core::weights::{psi_bump, validate_config, Violation};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::io;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Slack allowed in |S₁|²/S₂ ≤ weighted census.
pub const CS_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] nvlab_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) => EXIT_CONFIG,
            CliError::Core(_) | CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

pub type CliResult = Result<i32, CliError>;

/// The mollifier and any constraint violations; violations refuse the run
/// unless forced.
fn checked_spec(cfg: &RunConfig) -> Result<(MollifierSpec, Vec<Violation>), CliError> {
    let spec = cfg.mollifier().map_err(|e| CliError::Invalid(e.to_string()))?;
    let violations = validate_config(&cfg.weights, &spec);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        if !cfg.force {
            return Err(CliError::Invalid(list.join("; ")));
        }
        for v in &list {
            warn!("constraint ignored under --force: {v}");
        }
    }
    Ok((spec, violations))
}

fn open_cache(cfg: &RunConfig) -> Result<LValueCache, CliError> {
    Ok(match &cfg.cache {
        Some(p) => LValueCache::open(p)?,
        None => LValueCache::in_memory(),
    })
}

struct Computed {
    report: MomentReport,
    spec: MollifierSpec,
    violations: Vec<Violation>,
    cache_hits: u64,
    cache_misses: u64,
}

fn compute(cfg: &RunConfig) -> Result<Computed, CliError> {
    let (spec, violations) = checked_spec(cfg)?;
    let ms = build_modulus_set(&cfg.weights);
    info!("{} moduli in the window", ms.len());
    let cache = open_cache(cfg)?;
    let report = moment_report(&ms, &cfg.weights, &spec, cfg.tau_nv, &cache)?;
    cache.save()?;
    Ok(Computed {
        report,
        spec,
        violations,
        cache_hits: cache.hits(),
        cache_misses: cache.misses(),
    })
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn config_json(cfg: &RunConfig, spec: &MollifierSpec, violations: &[Violation]) -> Value {
    json!({
        "Q": num(cfg.weights.q_scale),
        "eta1": num(cfg.weights.eta1),
        "eta2": num(cfg.weights.eta2),
        "eps_split": num(cfg.weights.eps_split),
        "T": num(cfg.weights.t()),
        "K": cfg.weights.k(),
        "a": cfg.weights.a,
        "D": cfg.weights.d,
        "theta1": num(spec.theta1),
        "theta2": num(spec.theta2),
        "poly1": spec.p1.to_string(),
        "poly2": spec.p2.to_string(),
        "y1": num(spec.y1()),
        "y2": num(spec.y2()),
        "tau_nv": num(cfg.tau_nv),
        "psi": "exp(-1/(1-4(t-1)^2)) on |t-1|<1/2",
        "forced": cfg.force && !violations.is_empty(),
        "violations": violations.iter().map(|v| json!({"constraint": v.constraint(), "message": v.to_string()})).collect::<Vec<_>>(),
        "version": VERSION,
    })
}

fn moments_json(c: &Computed) -> Value {
    let r = &c.report;
    json!({
        "S1": {"re": num(r.s1.re), "im": num(r.s1.im)},
        "S2": num(r.s2),
        "mass": num(r.mass),
        "predicted_S1": num(r.predicted_s1),
        "predicted_S2": num(r.predicted_s2),
        "ratio_S1": opt(r.s1_ratio()),
        "ratio_S2": opt(r.s2_ratio()),
        "lambda1": num(lambda_coeff(&c.spec.p1, c.spec.theta1).unwrap_or(f64::NAN)),
        "lambda2": num(lambda_coeff(&c.spec.p2, c.spec.theta2).unwrap_or(f64::NAN)),
        "second_coefficient_reading": "lambda(P2, theta2) for the coefficient attached to P2",
        "cs_bound": num(r.cs_bound.value),
        "cs_degenerate": r.cs_bound.degenerate,
    })
}

/// Files: census table and summary.json. Exit 1 if the Cauchy–Schwarz
/// inequality fails.
pub fn cmd_census(cfg: &RunConfig) -> CliResult {
    let c = compute(cfg)?;
    let r = &c.report;
    let mut t = Table::new(&["q", "parity", "primitive_count", "nonvanishing_count", "weight"]);
    for row in &r.census.rows {
        for (parity, prim, nv) in [
            ("even", row.even_primitive, row.even_nonvanishing),
            ("odd", row.odd_primitive, row.odd_nonvanishing),
        ] {
            t.push(vec![row.q.into(), parity.into(), prim.into(), nv.into(), row.weight.into()]);
        }
    }
    let table = t.write(&cfg.out, "census", cfg.format)?;

    let cs_holds = r.cs_holds(CS_SLACK);
    let c_value = c_eta(cfg.weights.eta1, cfg.weights.eta2).ok();
    let census = &r.census;
    let summary = json!({
        "config": config_json(cfg, &c.spec, &c.violations),
        "moduli": census.rows.len(),
        "empty": census.rows.is_empty(),
        "weighted_even_total": num(census.even_total),
        "weighted_even_nonvanishing": num(census.even_nonvanishing),
        "weighted_odd_total": num(census.odd_total),
        "weighted_odd_nonvanishing": num(census.odd_nonvanishing),
        "weighted_nonvanishing": num(census.even_nonvanishing),
        "even_proportion": opt(census.even_proportion()),
        "odd_proportion": opt(census.odd_proportion()),
        "total_proportion": opt(census.total_proportion()),
        "moments": moments_json(&c),
        "cs_holds": cs_holds,
        "c_eta": opt(c_value),
        "theorem_main_term": opt(c_value.map(|c| (0.5 - c) * census.even_total)),
        "cache": {"hits": c.cache_hits, "misses": c.cache_misses},
    });
    write_json(&cfg.out.join("summary.json"), &summary)?;
    println!(
        "census: {} moduli, even proportion {}, cs bound {:.6e} vs census {:.6e} -> {}",
        census.rows.len(),
        census.even_proportion().map_or("n/a".into(), |p| format!("{p:.6}")),
        r.cs_bound.value,
        census.even_nonvanishing,
        if cs_holds { "ok" } else { "VIOLATED" }
    );
    info!("wrote {}", table.display());
    Ok(if cs_holds { EXIT_OK } else { EXIT_FAILURE })
}

/// Files: moments.csv with per-modulus partial sums, and moments.json.
pub fn cmd_moments(cfg: &RunConfig) -> CliResult {
    let c = compute(cfg)?;
    let r = &c.report;
    let mut t = Table::new(&[
        "q", "weight", "even_primitive", "s1_re", "s1_im", "s2", "cum_s1_re", "cum_s1_im", "cum_s2",
    ]);
    let mut cum1 = ComplexNeumaier::new();
    let mut cum2 = Neumaier::new();
    for row in &r.census.rows {
        cum1.add(row.s1 * row.weight);
        cum2.add(row.s2 * row.weight);
        let (c1, c2): (Complex64, f64) = (cum1.value(), cum2.value());
        t.push(vec![
            row.q.into(),
            row.weight.into(),
            row.even_primitive.into(),
            row.s1.re.into(),
            row.s1.im.into(),
            row.s2.into(),
            c1.re.into(),
            c1.im.into(),
            c2.into(),
        ]);
    }
    let mut doc = moments_json(&c);
    // In JSON mode the rows live inside moments.json rather than beside it.
    match cfg.format {
        Format::Csv => {
            t.write(&cfg.out, "moments", cfg.format)?;
        }
        Format::Json => doc["rows"] = t.to_json(),
    }
    doc["config"] = config_json(cfg, &c.spec, &c.violations);
    doc["moduli"] = json!(r.census.rows.len());
    doc["empty"] = json!(r.census.rows.is_empty());
    doc["cache"] = json!({"hits": c.cache_hits, "misses": c.cache_misses});
    write_json(&cfg.out.join("moments.json"), &doc)?;
    let sane = r.s2 >= 0.0 && r.s2.is_finite() && r.s1.re.is_finite() && r.cs_holds(CS_SLACK);
    println!(
        "moments: S1 = {:.10e}{:+.3e}i, S2 = {:.10e}, S1/pred = {}, S2/pred = {}",
        r.s1.re,
        r.s1.im,
        r.s2,
        r.s1_ratio().map_or("n/a".into(), |x| format!("{x:.6}")),
        r.s2_ratio().map_or("n/a".into(), |x| format!("{x:.6}")),
    );
    Ok(if sane { EXIT_OK } else { EXIT_FAILURE })
}

/// File: optimize.json.
pub fn cmd_optimize(cfg: &RunConfig) -> CliResult {
    let res = optimize(cfg.degree, cfg.theta1, cfg.theta2).map_err(|e| CliError::Invalid(e.to_string()))?;
    let (eta1, eta2) = (cfg.weights.eta1, cfg.weights.eta2);
    let c_value = c_eta(eta1, eta2).map_err(|e| CliError::Invalid(e.to_string()))?;
    let bound = theta_max(eta1, eta2);
    let mut warnings = Vec::new();
    for (i, theta) in [(1, cfg.theta1), (2, cfg.theta2)] {
        if theta >= bound {
            let w = format!("theta{i} = {theta} is not below 1/2-41*eta1-5*eta2 = {bound}");
            warn!("{w}");
            warnings.push(w);
        }
    }
    let coeffs = |p: &nvlab_core::mollifier::PolySpec| -> Value {
        json!({
            "exact": p.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "float": p.coeffs_f64().iter().map(|&c| num(c)).collect::<Vec<_>>(),
        })
    };
    let doc = json!({
        "degree": res.degree,
        "theta1": num(cfg.theta1),
        "theta2": num(cfg.theta2),
        "p1": coeffs(&res.p1),
        "p2": coeffs(&res.p2),
        "energy1": num(res.energy1),
        "energy2": num(res.energy2),
        "descent_energy": num(res.descent_energy),
        "ratio": num(res.ratio),
        "sandwich": num(res.sandwich),
        "sandwich_gap": num(res.sandwich_gap),
        "sandwich_exceeds_ratio": res.sandwich_gap > 0.0,
        "eta1": num(eta1),
        "eta2": num(eta2),
        "c_eta": num(c_value),
        "theta_max": num(bound),
        "slack1": num(bound - cfg.theta1),
        "slack2": num(bound - cfg.theta2),
        "warnings": warnings,
        "version": VERSION,
    });
    write_json(&cfg.out.join("optimize.json"), &doc)?;
    println!(
        "optimize: degree {}, ratio {:.12}, sandwich {:.12}, c_eta {:.12}, theta_max {:.6}",
        res.degree, res.ratio, res.sandwich, c_value, bound
    );
    Ok(EXIT_OK)
}

/// Writes kernel_table: Z(x) on a geometric grid.
pub fn cmd_kernel_table(cfg: &RunConfig) -> CliResult {
    let afe = Afe::new(&cfg.kernel).map_err(|e| CliError::Invalid(e.to_string()))?;
    let kernel = afe.kernel();
    let mut t = Table::new(&["x", "z"]);
    let ratio = (cfg.x_max / cfg.x_min).ln() / (cfg.points - 1) as f64;
    for i in 0..cfg.points {
        let x = cfg.x_min * (ratio * i as f64).exp();
        t.push(vec![x.into(), kernel.eval(x)?.into()]);
    }
    let path = t.write(&cfg.out, "kernel_table", cfg.format)?;
    println!(
        "kernel-table: {} points, step {}, x* = {}, wrote {}",
        cfg.points,
        kernel.step(),
        afe.x_star(),
        path.display()
    );
    Ok(EXIT_OK)
}

/// Smooth weight on the dyadic boxes [X, 2X].
fn box_weight(c: f64, d: f64, n: f64, r: f64, s: f64, p: &DiParams) -> Complex64 {
    let bump = |v: f64, x: f64| psi_bump(v / x - 0.5);
    Complex64::new(bump(c, p.c) * bump(d, p.d) * bump(r, p.r) * bump(s, p.s) * (n / p.n).sqrt(), 0.0)
}

/// Random coefficients on the full box for sizes all equal to `size`.
pub fn bench_instance(size: u64, rng: &mut ChaCha8Rng) -> (DiCoefficients, DiParams) {
    let x = size as f64;
    let p = DiParams::new(x, x, x, x, x);
    let mut b = DiCoefficients::new();
    for n in 1..=size {
        for r in size + 1..=2 * size {
            for s in size + 1..=2 * size {
                b.insert(n, r, s, rng.random_range(-1.0..1.0));
            }
        }
    }
    (b, p)
}

/// Writes expsum_bench: |quintuple sum| relative to K·‖b‖ by size.
pub fn cmd_expsum_bench(cfg: &RunConfig) -> CliResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = Table::new(&["size", "trial", "sum_re", "sum_im", "coeff_norm", "bound", "ratio"]);
    for &size in &cfg.bench_sizes {
        for trial in 0..cfg.bench_trials {
            let (b, p) = bench_instance(size, &mut rng);
            let start = std::time::Instant::now();
            let rep = di_quintuple_sum(&b, |c, d, n, r, s| box_weight(c, d, n, r, s, &p), &p)?;
            info!("size {size} trial {trial}: {:?}", start.elapsed());
            t.push(vec![
                size.into(),
                trial.into(),
                rep.sum.re.into(),
                rep.sum.im.into(),
                rep.coeff_norm.into(),
                rep.bound.into(),
                rep.ratio.into(),
            ]);
            println!("expsum-bench: size {size} trial {trial} ratio {:.6e}", rep.ratio);
        }
    }
    t.write(&cfg.out, "expsum_bench", cfg.format)?;
    Ok(EXIT_OK)
}
