//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use nvlab_core::characters::{epsilon_chi, even_orthogonality_with, phi_star, CharacterSet};
use nvlab_core::expsums::{di_quintuple_sum, kloosterman, ramanujan, reciprocity_defect, DiCoefficients, DiParams};
use nvlab_core::lvalue::{lvalue_direct, Afe, KernelConfig};
use nvlab_core::mollifier::{MollifierSpec, PolySpec};
use nvlab_core::moments::{build_modulus_set, moment_report, DirectLValues, DEFAULT_TAU_NV};
use nvlab_core::optimizer::{c_eta, optimize, sandwich_value, theorem_identity_defect};
use nvlab_core::weights::{fourier_b, phi_split_tk, WeightConfig, PSI_MAX};
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::process::Command;
use std::time::Instant;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of a mod m by the extended Euclidean algorithm, in [0, m).
fn inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (t0, t1) = (t1, t0 - k * t1);
    }
    (r0 == 1).then(|| t0.rem_euclid(m as i128) as u64)
}

fn e(num: i128, den: u64) -> Complex64 {
    let r = num.rem_euclid(den as i128) as f64 / den as f64;
    Complex64::from_polar(1.0, TAU * r)
}

fn c1_oracle_equivalence() -> Outcome {
    let afe = Afe::new(&KernelConfig::default()).map_err(|e| e.to_string())?;
    let (mut count, mut worst) = (0usize, 0.0f64);
    for q in 3..=100u64 {
        let set = CharacterSet::new(q);
        let z = afe.z_table(q, afe.x_star()).map_err(|e| e.to_string())?;
        for chi in set.iter().filter(|c| c.is_primitive() && c.is_even()) {
            let direct = lvalue_direct(chi).map_err(|e| e.to_string())?.norm_sqr();
            let sq = afe.lvalue_sq_with(chi, &z).map_err(|e| e.to_string())?;
            let scaled = (sq - direct).abs() / direct.max(1e-3);
            worst = worst.max(scaled);
            if scaled > 1e-6 {
                return Err(format!("q = {q}, index {}: AFE {sq} vs direct {direct}", chi.index()));
            }
            count += 1;
        }
    }
    Ok(format!("{count} characters, worst scaled gap {worst:.2e} ≤ 1e-6"))
}

fn c2_orthogonality() -> Outcome {
    let (mut cases, mut worst) = (0usize, 0.0f64);
    for q in 1..=60u64 {
        let set = CharacterSet::new(q);
        for m in 1..=30u64 {
            for n in 1..=30u64 {
                if gcd(m * n, q) != 1 {
                    continue;
                }
                let (lhs, rhs) = even_orthogonality_with(&set, m, n).map_err(|e| e.to_string())?;
                let gap = (lhs - rhs).abs();
                worst = worst.max(gap);
                if gap > 1e-9 {
                    return Err(format!("q = {q}, m = {m}, n = {n}: {lhs} vs {rhs}"));
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases, worst gap {worst:.2e} ≤ 1e-9"))
}

/// χ is primitive iff it is not induced from q/p for any prime p | q.
fn c3_phi_star() -> Outcome {
    for q in 1..=1000u64 {
        let set = CharacterSet::new(q);
        let primes: Vec<u64> = (2..=q).filter(|&p| q % p == 0 && (2..p).all(|d| p % d != 0)).collect();
        let brute = set
            .iter()
            .filter(|chi| primes.iter().all(|&p| !chi.is_induced_from(q / p)))
            .count() as i64;
        if brute != phi_star(q) {
            return Err(format!("q = {q}: brute force {brute}, φ* = {}", phi_star(q)));
        }
    }
    Ok("φ*(q) equals the brute-force count for q ≤ 1000".into())
}

fn c4_epsilon_modulus() -> Outcome {
    let (mut count, mut worst) = (0usize, 0.0f64);
    for q in 1..=300u64 {
        for chi in CharacterSet::new(q).primitive() {
            let gap = (epsilon_chi(chi).norm() - 1.0).abs();
            worst = worst.max(gap);
            if gap > 1e-10 {
                return Err(format!("q = {q}, index {}: |ε| − 1 = {gap:e}", chi.index()));
            }
            count += 1;
        }
    }
    Ok(format!("{count} primitive characters, worst ||ε|−1| {worst:.2e}"))
}

fn c5_cauchy_schwarz() -> Outcome {
    let mut lines = Vec::new();
    for q_scale in [200.0f64, 400.0, 800.0] {
        // D = 3 needs D ≤ Q^η₂; the smallest such η₂ breaks the η constraint,
        // which this inequality does not depend on, so no validation here.
        let eta_d3 = 3f64.ln() / q_scale.ln();
        for (a, d, eta2) in [(1u64, 1u64, 0.0), (2, 3, eta_d3)] {
            let cfg = WeightConfig::new(q_scale, 0.0, eta2, a, d);
            let spec = MollifierSpec::linear(0.15, q_scale).map_err(|e| e.to_string())?;
            let ms = build_modulus_set(&cfg);
            let r = moment_report(&ms, &cfg, &spec, DEFAULT_TAU_NV, &DirectLValues).map_err(|e| e.to_string())?;
            let census = r.census.even_nonvanishing;
            if census.is_nan() || census < r.cs_bound.value - 1e-9 {
                return Err(format!("Q = {q_scale}, D = {d}: census {census} < bound {}", r.cs_bound.value));
            }
            lines.push(format!("Q={q_scale},D={d}: {:.4e}≤{:.4e}", r.cs_bound.value, census));
        }
    }
    Ok(lines.join("; "))
}

fn c6_optimizer() -> Outcome {
    let mut worst_ratio = 0.0f64;
    let mut worst_coeff = 0.0f64;
    for d in 1..=8 {
        for k in 1..=9 {
            let theta = 0.05 * k as f64;
            let r = optimize(d, theta, theta).map_err(|e| e.to_string())?;
            let want = 2.0 * theta / (1.0 + 2.0 * theta);
            worst_ratio = worst_ratio.max((r.ratio - want).abs());
            for p in [&r.p1, &r.p2] {
                let c = p.coeffs_f64();
                let off = c.iter().enumerate().filter(|&(i, _)| i != 1).map(|(_, v)| v.abs()).fold(0.0, f64::max);
                worst_coeff = worst_coeff.max(off).max((c[1] - 1.0).abs());
            }
            if (r.ratio - want).abs() > 1e-9 || worst_coeff > 1e-7 {
                return Err(format!("d = {d}, θ = {theta}: ratio {} vs {want}, coefficients {}", r.ratio, r.p1));
            }
        }
    }
    let quarter = optimize(8, 0.25, 0.25).map_err(|e| e.to_string())?.ratio;
    if (quarter - 1.0 / 3.0).abs() > 1e-9 {
        return Err(format!("θ = 1/4 gives {quarter}, not 1/3"));
    }
    Ok(format!("ratio gap {worst_ratio:.1e}, non-linear coefficients ≤ {worst_coeff:.1e}, θ=1/4 → {quarter:.12}"))
}

fn c7_c_eta() -> Outcome {
    let zero = c_eta(0.0, 0.0).map_err(|e| e.to_string())?;
    if zero != 0.0 {
        return Err(format!("c(0,0) = {zero}"));
    }
    let mut worst = 0.0f64;
    let mut points = 0;
    for eta1 in [0.0, 0.002, 0.004, 0.006, 0.008] {
        for eta2 in [0.0, 0.005, 0.01, 0.02] {
            assert!(7.0 * eta1 + eta2 < 1.0 / 12.0);
            let theta = 0.5 - (41.0 * eta1 + 5.0 * eta2);
            let lhs = sandwich_value(theta, theta);
            let rhs = 0.5 - c_eta(eta1, eta2).map_err(|e| e.to_string())?;
            worst = worst.max((lhs - rhs).abs());
            let defect = theorem_identity_defect(eta1, eta2).map_err(|e| e.to_string())?;
            if (lhs - rhs).abs() > 1e-12 || !defect.is_zero() {
                return Err(format!("η = ({eta1}, {eta2}): {lhs} vs {rhs}, exact defect {defect}"));
            }
            points += 1;
        }
    }
    Ok(format!("c(0,0) = 0; identity on {points} points, worst {worst:.1e}, exact defect 0"))
}

fn c8_weights() -> Outcome {
    if fourier_b(10.0, 0) != 1.0 {
        return Err("b(0) ≠ 1".into());
    }
    let floor = 4.0 / (PI * PI);
    let mut least = f64::INFINITY;
    for t in [4.0f64, 10.0, 50.0] {
        let kmax = (t / 2.0).floor() as i64;
        for k in (-kmax..=kmax).filter(|&k| k != 0) {
            let b = fourier_b(t, k);
            least = least.min(b);
            if b < floor {
                return Err(format!("T = {t}, k = {k}: b = {b} < 4/π²"));
            }
        }
    }
    let (t, k) = (10.0, 100u64);
    let bound = 2.0 * t * t * PSI_MAX / (PI * PI * k as f64);
    let sup = (0..1000)
        .map(|i| phi_split_tk(t, k, 0.5 + i as f64 / 999.0).phi2.norm())
        .fold(0.0f64, f64::max);
    if sup > bound {
        return Err(format!("sup |Φ₂| = {sup} > {bound}"));
    }
    Ok(format!("b(0)=1, min b(k) {least:.4} ≥ {floor:.4}, sup |Φ₂| {sup:.4e} ≤ {bound:.4e}"))
}

fn naive_kloosterman(m: i64, n: i64, c: u64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for x in 0..c {
        if let Some(xbar) = (0..c).find(|&y| (x * y) % c == 1 % c) {
            total += e(m as i128 * x as i128 + n as i128 * xbar as i128, c);
        }
    }
    total
}

fn naive_quintuple<G: Fn(f64, f64, f64, f64, f64) -> Complex64>(b: &DiCoefficients, g: G, p: &DiParams) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for c in 1..=(2.0 * p.c).floor() as u64 {
        for d in 1..=(2.0 * p.d).floor() as u64 {
            if (c as f64) < p.c || (d as f64) < p.d || c % p.q != p.c0 % p.q || d % p.q != p.d0 % p.q {
                continue;
            }
            for (&(n, r, s), &bv) in b.iter() {
                if gcd(p.q * r * d, s * c) != 1 {
                    continue;
                }
                let inv = inverse(r * d, s * c).expect("coprime");
                total += g(c as f64, d as f64, n as f64, r as f64, s as f64) * bv * e(n as i128 * inv as i128, s * c);
            }
        }
    }
    total
}

fn c9_expsums() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let c = rng.random_range(1..=200u64);
        let m = rng.random_range(-1000..=1000i64);
        let n = rng.random_range(-1000..=1000i64);
        let gap = (kloosterman(m, n, c) - naive_kloosterman(m, n, c)).norm();
        worst = worst.max(gap);
        if gap > 1e-9 {
            return Err(format!("S({m},{n};{c}) off by {gap:e}"));
        }
    }
    for w in 1..=200u64 {
        for k in -200..=200i64 {
            let v = ramanujan(w, k);
            let g = gcd(k.unsigned_abs(), w) as f64;
            if v.abs() > g + 1e-9 {
                return Err(format!("|c_{w}({k})| = {} > {g}", v.abs()));
            }
        }
    }
    let mut pairs = 0usize;
    for x in 1..=1000u64 {
        for y in 1..=1000u64 {
            if gcd(x, y) == 1 {
                reciprocity_defect(x, y).map_err(|e| format!("({x}, {y}): {e}"))?;
                pairs += 1;
            }
        }
    }
    let mut worst_rel = 0.0f64;
    for inst in 0..50 {
        let mut size = || rng.random_range(1..=32u64) as f64;
        let mut p = DiParams::new(size(), size(), size(), size(), size());
        if inst % 2 == 1 {
            let q = [2u64, 3, 4, 5][inst % 4];
            let units: Vec<u64> = (1..q).filter(|&u| gcd(u, q) == 1).collect();
            let c0 = units[rng.random_range(0..units.len())];
            let d0 = units[rng.random_range(0..units.len())];
            p = p.with_progression(q, c0, d0);
        }
        let mut b = DiCoefficients::new();
        for _ in 0..40 {
            let n = rng.random_range(1..=p.n as u64);
            let r = rng.random_range(p.r as u64 + 1..=2 * p.r as u64);
            let s = rng.random_range(p.s as u64 + 1..=2 * p.s as u64);
            b.insert(n, r, s, rng.random_range(-1.0..1.0));
        }
        let g = |c: f64, d: f64, n: f64, r: f64, s: f64| Complex64::new((c / 7.0).cos() + d / 64.0, (n + r) / (1.0 + s));
        let fast = di_quintuple_sum(&b, g, &p).map_err(|e| e.to_string())?.sum;
        let slow = naive_quintuple(&b, g, &p);
        let rel = (fast - slow).norm() / slow.norm().max(1e-12);
        worst_rel = worst_rel.max(rel);
        if rel > 1e-9 {
            return Err(format!("instance {inst}: {fast} vs {slow}"));
        }
    }
    Ok(format!(
        "Kloosterman worst {worst:.1e}; Ramanujan bound; {pairs} reciprocity pairs; quintuple worst rel {worst_rel:.1e}"
    ))
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |threads: usize, cmd: &str| -> Result<(), String> {
        let out = dir.path().join(threads.to_string());
        let status = Command::new(env!("CARGO_BIN_EXE_nvlab"))
            .args([cmd, "--Q", "300", "--threads", &threads.to_string(), "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("{cmd} at {threads} threads: {}", String::from_utf8_lossy(&status.stderr)));
        }
        Ok(())
    };
    for threads in [1, 4, 8] {
        run(threads, "moments")?;
        run(threads, "census")?;
    }
    let files = ["moments.csv", "moments.json", "census.csv", "summary.json"];
    let read = |t: &str, f: &str| std::fs::read(dir.path().join(t).join(f)).map_err(|e| format!("{t}/{f}: {e}"));
    for f in files {
        let base = read("1", f)?;
        for t in ["4", "8"] {
            if read(t, f)? != base {
                return Err(format!("{f} differs between 1 and {t} threads"));
            }
        }
    }
    Ok(format!("{} identical at 1, 4, 8 threads", files.join(", ")))
}

fn c11_soft_diagnostic() -> Outcome {
    let cfg = WeightConfig::new(2000.0, 0.0, 0.0, 1, 1);
    let spec = MollifierSpec::new(0.15, 0.15, PolySpec::linear(), PolySpec::linear(), 2000.0).map_err(|e| e.to_string())?;
    let ms = build_modulus_set(&cfg);
    let r = moment_report(&ms, &cfg, &spec, DEFAULT_TAU_NV, &DirectLValues).map_err(|e| e.to_string())?;
    let (r1, r2) = (r.s1_ratio(), r.s2_ratio());
    let ok = r.s2 > 0.0
        && r.s2.is_finite()
        && r.s1.re.is_finite()
        && r1.is_some_and(f64::is_finite)
        && r2.is_some_and(f64::is_finite);
    let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    let inside = |x: Option<f64>| x.is_some_and(|v| (0.5..=2.0).contains(&v));
    let msg = format!(
        "S2 = {:.6e}, S1/pred = {}, S2/pred = {} (expected range [0.5, 2]: {})",
        r.s2,
        fmt(r1),
        fmt(r2),
        if inside(r1) && inside(r2) { "met" } else { "not met, reported only" }
    );
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("oracle equivalence (AFE vs direct)", c1_oracle_equivalence),
        ("even orthogonality identity", c2_orthogonality),
        ("primitive count φ*", c3_phi_star),
        ("|ε(χ)| = 1", c4_epsilon_modulus),
        ("Cauchy–Schwarz census inequality", c5_cauchy_schwarz),
        ("optimizer identities", c6_optimizer),
        ("c(η₁,η₂) checks", c7_c_eta),
        ("weights", c8_weights),
        ("exponential sums", c9_expsums),
        ("determinism across thread counts", c10_determinism),
        ("soft asymptotic diagnostic", c11_soft_diagnostic),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
