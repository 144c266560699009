//! Dirichlet characters: unit-group structure, enumeration, conductors,
//! Gauss sums and the orthogonality relations for even primitive characters.
//!
//! A character mod q is stored as an exponent vector against a fixed
//! decomposition of (Z/qZ)^× into cyclic factors. Values are read from a
//! discrete-log table and a single table of e(j/L), L the group exponent,
//! both shared by every character of the modulus.

use crate::arith::{self, divisors, euler_phi, factorize, gcd, mobius, mod_inverse, pow_mod};
use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// Which local factor of (Z/qZ)^× a component comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LocalKind {
    /// Cyclic group mod p^a, p odd.
    OddPrimePower { p: u64, a: u32 },
    /// The {±1} factor mod 2^a, a ≥ 2.
    MinusOne,
    /// The subgroup generated by 5 mod 2^a, a ≥ 3.
    Five { a: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Generator as a residue mod q (lifted by CRT, ≡ 1 on the other prime powers).
    pub generator: u64,
    pub order: u64,
    kind: LocalKind,
}

/// (Z/qZ)^× as a product of cyclic groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitGroup {
    pub modulus: u64,
    pub components: Vec<Component>,
}

impl UnitGroup {
    pub fn order(&self) -> u64 {
        self.components.iter().map(|c| c.order).product()
    }

    /// Least common multiple of the component orders.
    pub fn exponent(&self) -> u64 {
        self.components
            .iter()
            .fold(1, |acc, c| acc / gcd(acc, c.order) * c.order)
    }
}

fn primitive_root_prime(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let factors: Vec<u64> = factorize(p - 1).into_iter().map(|(r, _)| r).collect();
    (2..p)
        .find(|&g| factors.iter().all(|&r| pow_mod(g, (p - 1) / r, p) != 1))
        .expect("every prime has a primitive root")
}

/// A generator of (Z/p^aZ)^× for odd p.
fn primitive_root_prime_power(p: u64, a: u32) -> u64 {
    let g = primitive_root_prime(p);
    if a == 1 {
        return g;
    }
    let p2 = p * p;
    if pow_mod(g, p - 1, p2) == 1 {
        g + p
    } else {
        g
    }
}

/// x ≡ g mod m, x ≡ 1 mod q/m.
fn crt_lift(g: u64, m: u64, q: u64) -> u64 {
    let rest = q / m;
    if rest == 1 {
        return g % q;
    }
    let a = arith::mul_mod(g % m, arith::mul_mod(rest, mod_inverse(rest % m, m).unwrap(), q), q);
    let b = arith::mul_mod(m, mod_inverse(m % rest, rest).unwrap(), q);
    (a + b) % q
}

pub fn unit_group(q: u64) -> UnitGroup {
    assert!(q >= 1, "modulus must be positive");
    let mut components = Vec::new();
    for (p, a) in factorize(q) {
        let m = p.pow(a);
        if p == 2 {
            if a >= 2 {
                components.push(Component {
                    generator: crt_lift(m - 1, m, q),
                    order: 2,
                    kind: LocalKind::MinusOne,
                });
            }
            if a >= 3 {
                components.push(Component {
                    generator: crt_lift(5, m, q),
                    order: 1 << (a - 2),
                    kind: LocalKind::Five { a },
                });
            }
        } else {
            components.push(Component {
                generator: crt_lift(primitive_root_prime_power(p, a), m, q),
                order: m / p * (p - 1),
                kind: LocalKind::OddPrimePower { p, a },
            });
        }
    }
    UnitGroup {
        modulus: q,
        components,
    }
}

/// Tables shared by all characters of one modulus.
#[derive(Debug)]
struct GroupTables {
    group: UnitGroup,
    exponent: u64,
    /// Mixed-radix strides; the last component varies fastest.
    strides: Vec<usize>,
    /// `coords[n * r + i]` is the discrete log of n on component i.
    coords: Vec<u32>,
    is_unit: Vec<bool>,
    /// Residue of each flat index (inverse of the discrete-log map).
    units: Vec<u64>,
    roots: Vec<Complex64>,
}

impl GroupTables {
    fn new(q: u64) -> Self {
        let group = unit_group(q);
        let r = group.components.len();
        let exponent = group.exponent();
        let mut strides = vec![1usize; r];
        for i in (0..r.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * group.components[i + 1].order as usize;
        }
        // Enumerate ∏ g_i^{k_i} with the last exponent fastest.
        let mut units: Vec<u64> = vec![1 % q];
        for c in &group.components {
            let mut next = Vec::with_capacity(units.len() * c.order as usize);
            for &v in &units {
                let mut x = v;
                for _ in 0..c.order {
                    next.push(x);
                    x = arith::mul_mod(x, c.generator, q);
                }
            }
            units = next;
        }
        let mut coords = vec![0u32; q as usize * r];
        let mut is_unit = vec![false; q as usize];
        for (flat, &u) in units.iter().enumerate() {
            let n = u as usize;
            debug_assert!(!is_unit[n], "discrete-log map must be injective");
            is_unit[n] = true;
            for i in 0..r {
                let k = (flat / strides[i]) % group.components[i].order as usize;
                coords[n * r + i] = k as u32;
            }
        }
        let roots = (0..exponent)
            .map(|j| arith::e(j as f64 / exponent as f64))
            .collect();
        GroupTables {
            group,
            exponent,
            strides,
            coords,
            is_unit,
            units,
            roots,
        }
    }

    fn rank(&self) -> usize {
        self.group.components.len()
    }
}

#[derive(Debug, Clone)]
pub struct Character {
    tables: Arc<GroupTables>,
    exponents: Vec<u64>,
    /// e_i · L / n_i, so that χ(n) = e(Σ weights_i · log_i(n) / L).
    weights: Vec<u64>,
    index: usize,
    conductor: u64,
    parity: Parity,
}

impl Character {
    fn new(tables: Arc<GroupTables>, exponents: Vec<u64>, index: usize) -> Self {
        let weights = exponents
            .iter()
            .zip(&tables.group.components)
            .map(|(&e, c)| e * (tables.exponent / c.order))
            .collect();
        let mut chi = Character {
            tables,
            exponents,
            weights,
            index,
            conductor: 1,
            parity: Parity::Even,
        };
        chi.conductor = chi.local_conductor();
        let q = chi.modulus();
        chi.parity = if chi.value(q - 1).re > 0.0 {
            Parity::Even
        } else {
            Parity::Odd
        };
        chi
    }

    pub fn modulus(&self) -> u64 {
        self.tables.group.modulus
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    /// Position in the owning [`CharacterSet`].
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn is_even(&self) -> bool {
        self.parity == Parity::Even
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor == self.modulus()
    }

    pub fn is_principal(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    /// Real characters take values in {0, ±1}.
    pub fn is_real(&self) -> bool {
        self.weights
            .iter()
            .all(|&w| (2 * w) % self.tables.exponent == 0)
    }

    /// Phase index j with χ(n) = e(j/L), or `None` off the units.
    fn phase(&self, n: u64) -> Option<u64> {
        let t = &self.tables;
        let q = t.group.modulus;
        let n = (n % q) as usize;
        if !t.is_unit[n] {
            return None;
        }
        let r = t.rank();
        let base = n * r;
        let mut acc = 0u64;
        for i in 0..r {
            acc += self.weights[i] * t.coords[base + i] as u64;
        }
        Some(acc % t.exponent)
    }

    pub fn value(&self, n: u64) -> Complex64 {
        match self.phase(n) {
            Some(j) => self.tables.roots[j as usize],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn value_signed(&self, n: i64) -> Complex64 {
        let q = self.modulus() as i64;
        self.value(n.rem_euclid(q) as u64)
    }

    /// Full value table χ(0), …, χ(q−1).
    pub fn values(&self) -> Vec<Complex64> {
        (0..self.modulus()).map(|n| self.value(n)).collect()
    }

    /// Whether χ(n) = 1 for every unit n ≡ 1 mod f, i.e. χ factors through
    /// (Z/fZ)^×. Brute force over the q/f lifts of 1.
    pub fn is_induced_from(&self, f: u64) -> bool {
        let q = self.modulus();
        if f == 0 || !q.is_multiple_of(f) {
            return false;
        }
        let mut n = 1 % f;
        while n < q.max(1) {
            if gcd(n, q) == 1 && self.phase(n) != Some(0) {
                return false;
            }
            n += f;
        }
        true
    }

    /// Conductor from the local exponents: on p^a the conductor is p^b for
    /// the least b whose reduction kernel the local character kills.
    fn local_conductor(&self) -> u64 {
        let mut cond = 1u64;
        let mut minus_one_nontrivial = false;
        let mut two_power_seen = false;
        let mut five: Option<(u32, u64)> = None;
        for (c, &e) in self.tables.group.components.iter().zip(&self.exponents) {
            match c.kind {
                LocalKind::OddPrimePower { p, a } => {
                    if e != 0 {
                        let mut b = 1;
                        while e % p.pow(a - b) != 0 {
                            b += 1;
                        }
                        cond *= p.pow(b);
                    }
                }
                LocalKind::MinusOne => {
                    two_power_seen = true;
                    minus_one_nontrivial = e != 0;
                }
                LocalKind::Five { a } => five = Some((a, e)),
            }
        }
        if two_power_seen {
            match five {
                Some((a, e)) if e != 0 => {
                    let mut b = 3;
                    while e % (1u64 << (a - b)) != 0 {
                        b += 1;
                    }
                    cond *= 1u64 << b;
                }
                _ => {
                    if minus_one_nontrivial {
                        cond *= 4;
                    }
                }
            }
        }
        cond
    }
}

pub fn conductor(chi: &Character) -> u64 {
    chi.conductor()
}

/// All φ(q) characters mod q, indexed by their flattened exponent vector.
#[derive(Debug, Clone)]
pub struct CharacterSet {
    tables: Arc<GroupTables>,
    characters: Vec<Character>,
}

pub fn enumerate_characters(q: u64) -> CharacterSet {
    CharacterSet::new(q)
}

impl CharacterSet {
    pub fn new(q: u64) -> Self {
        assert!(q >= 1, "modulus must be positive");
        let tables = Arc::new(GroupTables::new(q));
        let orders: Vec<u64> = tables.group.components.iter().map(|c| c.order).collect();
        let total: usize = orders.iter().product::<u64>() as usize;
        let characters = (0..total)
            .map(|idx| {
                let exps = orders
                    .iter()
                    .zip(&tables.strides)
                    .map(|(&n, &s)| ((idx / s) as u64) % n)
                    .collect();
                Character::new(tables.clone(), exps, idx)
            })
            .collect();
        CharacterSet { tables, characters }
    }

    pub fn modulus(&self) -> u64 {
        self.tables.group.modulus
    }

    pub fn group(&self) -> &UnitGroup {
        &self.tables.group
    }

    pub fn len(&self) -> usize {
        self.characters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Character> {
        self.characters.iter()
    }

    pub fn get(&self, index: usize) -> Option<&Character> {
        self.characters.get(index)
    }

    pub fn index_of(&self, exponents: &[u64]) -> Option<usize> {
        let comps = &self.tables.group.components;
        if exponents.len() != comps.len() {
            return None;
        }
        let mut idx = 0usize;
        for ((&e, c), &s) in exponents.iter().zip(comps).zip(&self.tables.strides) {
            if e >= c.order {
                return None;
            }
            idx += e as usize * s;
        }
        Some(idx)
    }

    /// Index of χ̄.
    pub fn conjugate_index(&self, index: usize) -> usize {
        let chi = &self.characters[index];
        let exps: Vec<u64> = chi
            .exponents
            .iter()
            .zip(&self.tables.group.components)
            .map(|(&e, c)| (c.order - e) % c.order)
            .collect();
        self.index_of(&exps).expect("conjugate exponents are in range")
    }

    pub fn primitive(&self) -> impl Iterator<Item = &Character> {
        self.characters.iter().filter(|c| c.is_primitive())
    }

    pub fn even_primitive(&self) -> impl Iterator<Item = &Character> {
        self.primitive().filter(|c| c.is_even())
    }

    /// Σ_{a unit} χ(a) f(a) for every character at once, as a multidimensional
    /// DFT over the cyclic factors. Output is indexed like the set.
    pub fn transform<F: Fn(u64) -> Complex64>(&self, f: F) -> Vec<Complex64> {
        let t = &self.tables;
        let mut data: Vec<Complex64> = t.units.iter().map(|&u| f(u)).collect();
        let comps = &t.group.components;
        let mut planner = FftPlanner::<f64>::new();
        let total = data.len();
        for (i, c) in comps.iter().enumerate() {
            let n = c.order as usize;
            if n == 1 {
                continue;
            }
            let stride = t.strides[i];
            let block = n * stride;
            let fft = planner.plan_fft_inverse(n);
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[outer + j * stride + inner];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[outer + j * stride + inner] = *v;
                    }
                }
            }
        }
        data
    }

    /// Gauss sums of every character via [`CharacterSet::transform`].
    pub fn gauss_sums(&self) -> Vec<Complex64> {
        let q = self.modulus();
        self.transform(|a| arith::e_frac(a as i128, q))
    }
}

impl<'a> IntoIterator for &'a CharacterSet {
    type Item = &'a Character;
    type IntoIter = std::slice::Iter<'a, Character>;
    fn into_iter(self) -> Self::IntoIter {
        self.characters.iter()
    }
}

/// φ*(q) = Σ_{k|q} φ(k) μ(q/k), the number of primitive characters mod q.
pub fn phi_star(q: u64) -> i64 {
    divisors(q)
        .into_iter()
        .map(|k| euler_phi(k) as i64 * mobius(q / k))
        .sum()
}

/// τ(χ) = Σ_{h mod q} χ(h) e(h/q), by direct summation.
pub fn gauss_sum(chi: &Character) -> Complex64 {
    let q = chi.modulus();
    crate::sum::sum_c64((0..q).map(|h| chi.value(h) * arith::e_frac(h as i128, q)))
}

/// ε(χ) = τ(χ)/√q.
pub fn epsilon_chi(chi: &Character) -> Complex64 {
    gauss_sum(chi) / (chi.modulus() as f64).sqrt()
}

fn divides_difference(w: u64, x: i64) -> bool {
    // w | 0 for every w.
    x.rem_euclid(w as i64) == 0
}

/// Both sides of Σ⁺_{χ mod q} χ(m)χ̄(n) = ½ Σ_{vw=q, w|m−n} μ(v)φ(w) + ½ Σ_{vw=q, w|m+n} μ(v)φ(w),
/// the left side by brute force over even primitive characters.
pub fn even_orthogonality(q: u64, m: u64, n: u64) -> Result<(f64, f64)> {
    let set = CharacterSet::new(q);
    even_orthogonality_with(&set, m, n)
}

/// [`even_orthogonality`] against a prebuilt character set.
pub fn even_orthogonality_with(set: &CharacterSet, m: u64, n: u64) -> Result<(f64, f64)> {
    let q = set.modulus();
    if gcd(m * n, q) != 1 {
        return Err(Error::NotCoprime(format!("gcd({}, {q}) > 1", m * n)));
    }
    let lhs = crate::sum::sum_c64(set.even_primitive().map(|c| c.value(m) * c.value(n).conj())).re;
    let (mi, ni) = (m as i64, n as i64);
    let mut rhs = 0i64;
    for w in divisors(q) {
        let term = mobius(q / w) * euler_phi(w) as i64;
        if divides_difference(w, mi - ni) {
            rhs += term;
        }
        if divides_difference(w, mi + ni) {
            rhs += term;
        }
    }
    Ok((lhs, rhs as f64 / 2.0))
}

/// Both sides of the ε-expansion
/// Σ⁺ ε(χ)χ(m)χ̄(n) = q^{−1/2} Σ_{vw=q, (v,w)=1} μ²(v) φ(w) cos(2π n·\overline{mv}/w).
pub fn epsilon_expansion(q: u64, m: u64, n: u64) -> Result<(f64, f64)> {
    let set = CharacterSet::new(q);
    epsilon_expansion_with(&set, m, n)
}

pub fn epsilon_expansion_with(set: &CharacterSet, m: u64, n: u64) -> Result<(f64, f64)> {
    let q = set.modulus();
    if gcd(m * n, q) != 1 {
        return Err(Error::NotCoprime(format!("gcd({}, {q}) > 1", m * n)));
    }
    let lhs = crate::sum::sum_c64(
        set.even_primitive()
            .map(|c| epsilon_chi(c) * c.value(m) * c.value(n).conj()),
    )
    .re;
    let mut rhs = crate::sum::Neumaier::new();
    for w in divisors(q) {
        let v = q / w;
        if gcd(v, w) != 1 || mobius(v) == 0 {
            continue;
        }
        let inv = mod_inverse(arith::mul_mod(m, v, w), w).unwrap_or(0);
        let phase = arith::mul_mod(n % w, inv, w) as f64 / w as f64;
        rhs.add(euler_phi(w) as f64 * (2.0 * std::f64::consts::PI * phase).cos());
    }
    Ok((lhs, rhs.value() / (q as f64).sqrt()))
}
