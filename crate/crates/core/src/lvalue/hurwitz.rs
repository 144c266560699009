//! ζ(1/2, α) by Euler–Maclaurin summation.

use crate::error::{Error, Result};

/// B_2, B_4, …, B_12.
const BERNOULLI: [f64; 6] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
];

/// |B_{2k}/(2k)! · (s)_{2k−1}| at s = 1/2, for k = 1..=6.
fn correction_coefficients() -> [f64; 6] {
    let mut out = [0.0; 6];
    let mut rising = 0.5; // (1/2)_1
    let mut fact = 2.0; // 2!
    for k in 1..=6 {
        out[k - 1] = BERNOULLI[k - 1] * rising / fact;
        // advance (s)_{2k-1} → (s)_{2k+1} and (2k)! → (2k+2)!
        let m = 2.0 * k as f64;
        rising *= (0.5 + m - 1.0) * (0.5 + m);
        fact *= (m + 1.0) * (m + 2.0);
    }
    out
}

/// ζ(1/2, α) for 0 < α ≤ 1, accurate to about 1e−14 relative.
pub fn hurwitz_zeta_half(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0, 1]")));
    }
    let coef = correction_coefficients();
    // First omitted term is the B_12 correction, ~ (N+α)^{-11.5}.
    let mut n = 1usize;
    while (coef[5] * (n as f64 + alpha).powf(-11.5)).abs() >= 1e-16 {
        n += 1;
    }
    let mut acc = crate::sum::Neumaier::new();
    for k in 0..n {
        acc.add(1.0 / (k as f64 + alpha).sqrt());
    }
    let x = n as f64 + alpha;
    acc.add(-2.0 * x.sqrt());
    acc.add(0.5 / x.sqrt());
    let mut pow = x.powf(-1.5);
    let x2 = x * x;
    for &c in &coef[..5] {
        acc.add(c * pow);
        pow /= x2;
    }
    Ok(acc.value())
}
