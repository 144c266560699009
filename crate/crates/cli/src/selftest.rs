//! Fast internal checks, one line per suite.

use crate::cache::{verify, LValueCache};
use crate::config::RunConfig;
use nvlab_core::characters::{even_orthogonality, gauss_sum, phi_star, CharacterSet};
use nvlab_core::expsums::{kloosterman, reciprocity_defect};
use nvlab_core::lvalue::{lvalue_direct, lvalue_sq_afe, KernelConfig};
use nvlab_core::moments::LValueSource;
use nvlab_core::optimizer::{minimize_energy, minimize_energy_descent, optimize, theorem_identity_defect};
use nvlab_core::mollifier::to_f64;
use nvlab_core::weights::{fourier_b, h_tent, phi_split_tk, tail_bound, PSI_MAX};
use num_complex::Complex64;
use num_traits::Zero;

pub const SUITES: &[&str] = &["characters", "lvalue", "expsums", "weights", "optimizer", "cache"];

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn characters() -> Check {
    for q in [5u64, 12, 16, 27, 60, 97] {
        let set = CharacterSet::new(q);
        let prim = set.iter().filter(|c| c.is_primitive()).count() as i64;
        ensure(prim == phi_star(q), || format!("q={q}: {prim} primitive, φ* = {}", phi_star(q)))?;
        for chi in set.primitive() {
            let g = gauss_sum(chi).norm();
            ensure((g * g - q as f64).abs() < 1e-9 * q as f64, || {
                format!("q={q}: |τ|² = {}", g * g)
            })?;
        }
        let (lhs, rhs) = even_orthogonality(q, 1, 1).map_err(|e| e.to_string())?;
        ensure((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()), || {
            format!("q={q}: even orthogonality {lhs} vs {rhs}")
        })?;
    }
    Ok("φ*, |τ(χ)|² = q and even orthogonality for 6 moduli".into())
}

fn lvalue() -> Check {
    let cfg = KernelConfig::default();
    let mut worst = 0.0f64;
    for q in [5u64, 13, 24] {
        let set = CharacterSet::new(q);
        for chi in set.iter().filter(|c| c.is_primitive() && c.is_even()) {
            let direct = lvalue_direct(chi).map_err(|e| e.to_string())?.norm_sqr();
            let afe = lvalue_sq_afe(chi, &cfg).map_err(|e| e.to_string())?;
            worst = worst.max((direct - afe).abs() / direct.max(1e-300).max(1.0));
        }
    }
    ensure(worst < 1e-8, || format!("direct vs AFE relative gap {worst:e}"))?;
    Ok(format!("direct vs AFE agree to {worst:.1e}"))
}

fn expsums() -> Check {
    for (x, y) in [(3u64, 7u64), (10, 21), (97, 101)] {
        let d = reciprocity_defect(x, y).map_err(|e| e.to_string())?;
        ensure(d == 1, || format!("reciprocity quotient {d} at ({x}, {y})"))?;
    }
    for (m, n, c) in [(1i64, 1i64, 7u64), (2, 5, 13), (3, -4, 31), (6, 10, 48)] {
        let k = kloosterman(m, n, c);
        let naive = naive_kloosterman(m, n, c);
        ensure((k - naive).norm() < 1e-9, || format!("S({m},{n};{c}) = {k} vs brute force {naive}"))?;
    }
    for c in [7u64, 13, 31] {
        let k = kloosterman(1, 1, c);
        let bound = 2.0 * (c as f64).sqrt();
        ensure(k.im.abs() < 1e-9 && k.re.abs() <= bound + 1e-9, || {
            format!("Kloosterman S(1,1;{c}) = {k}")
        })?;
    }
    Ok("reciprocity, Kloosterman brute force and Weil bound".into())
}

/// Inverses found by search, phases summed in order.
fn naive_kloosterman(m: i64, n: i64, c: u64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for x in 0..c {
        if let Some(xbar) = (1..=c).find(|&y| (x * y) % c == 1 % c) {
            let phase = (m as f64 * x as f64 + n as f64 * xbar as f64) / c as f64;
            total += Complex64::from_polar(1.0, std::f64::consts::TAU * phase);
        }
    }
    total
}

fn weights() -> Check {
    let t = 7.0;
    let k = 4000;
    for x in [0.0, 0.03, 0.11, 0.4] {
        let series: f64 = (-k..=k).map(|j| fourier_b(t, j) * (std::f64::consts::TAU * j as f64 * x).cos()).sum();
        let exact = h_tent(t, x);
        ensure((series - exact).abs() < 1e-2, || format!("tent series {series} vs {exact} at {x}"))?;
    }
    let (big_t, big_k) = (10.0, 100);
    let bound = tail_bound(big_t, big_k) * PSI_MAX;
    let sup = (0..=400)
        .map(|i| phi_split_tk(big_t, big_k, 0.5 + i as f64 / 400.0).phi2.norm())
        .fold(0.0f64, f64::max);
    ensure(sup <= bound, || format!("sup |Φ₂| = {sup} exceeds {bound}"))?;
    Ok(format!("tent series converges, sup |Φ₂| = {sup:.3e} ≤ {bound:.3e}"))
}

fn optimizer() -> Check {
    let p = minimize_energy(4).map_err(|e| e.to_string())?;
    let (_, descent) = minimize_energy_descent(4, 1e-12).map_err(|e| e.to_string())?;
    let exact = to_f64(&p.derivative_energy());
    ensure((descent - exact).abs() < 1e-9, || format!("descent {descent} vs exact {exact}"))?;
    for (e1, e2) in [(0.0, 0.0), (0.001, 0.002)] {
        let d = theorem_identity_defect(e1, e2).map_err(|e| e.to_string())?;
        ensure(d.is_zero(), || format!("identity defect {d} at η = ({e1}, {e2})"))?;
    }
    for theta in [0.1, 0.25, 0.4] {
        let r = optimize(4, theta, theta).map_err(|e| e.to_string())?.ratio;
        let want = 2.0 * theta / (1.0 + 2.0 * theta);
        ensure((r - want).abs() < 1e-9, || format!("θ = {theta}: ratio {r}, expected {want}"))?;
    }
    Ok(format!("degree-4 energy {exact:.12}"))
}

fn cache(cfg: &RunConfig) -> Check {
    if let Some(path) = &cfg.cache {
        match verify(path).map_err(|e| e.to_string())? {
            Ok(n) => return Ok(format!("{} holds {n} valid entries", path.display())),
            Err(c) => return Err(format!("{} line {}: {}", path.display(), c.line, c.reason)),
        }
    }
    let dir = tempfile_dir()?;
    let path = dir.join("selftest.jsonl");
    let set = CharacterSet::new(11);
    let first = LValueCache::open(&path).map_err(|e| e.to_string())?;
    let a = first.lvalues(&set).map_err(|e| e.to_string())?;
    first.save().map_err(|e| e.to_string())?;
    let second = LValueCache::open(&path).map_err(|e| e.to_string())?;
    let b = second.lvalues(&set).map_err(|e| e.to_string())?;
    let _ = std::fs::remove_dir_all(&dir);
    let same = a.iter().zip(&b).all(|(x, y)| match (x, y) {
        (Some(x), Some(y)) => x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits(),
        (None, None) => true,
        _ => false,
    });
    ensure(same && second.misses() == 0, || "round trip changed values".into())?;
    Ok("round trip is bit-exact".into())
}

fn tempfile_dir() -> Result<std::path::PathBuf, String> {
    let dir = std::env::temp_dir().join(format!("nvlab-selftest-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    Ok(dir)
}

/// Runs the chosen suites (`all` or a comma list) and returns the exit code.
pub fn run(cfg: &RunConfig) -> Result<i32, String> {
    let chosen: Vec<&str> = if cfg.suite.eq_ignore_ascii_case("all") {
        SUITES.to_vec()
    } else {
        cfg.suite.split(',').map(str::trim).collect()
    };
    for name in &chosen {
        if !SUITES.contains(name) {
            return Err(format!("unknown suite {name:?}; choose from {}", SUITES.join(", ")));
        }
    }
    let mut failed = 0;
    for name in chosen {
        let outcome = match name {
            "characters" => characters(),
            "lvalue" => lvalue(),
            "expsums" => expsums(),
            "weights" => weights(),
            "optimizer" => optimizer(),
            _ => cache(cfg),
        };
        match outcome {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    Ok(if failed == 0 { 0 } else { 1 })
}
