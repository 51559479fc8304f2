//! Exact residue arithmetic modulo prime powers and composite moduli.
//!
//! All values are `u64` with `u128` intermediates, wide enough for products
//! of moduli up to the sweep ceiling `p^n ≤ 10^6` with no silent wraparound;
//! anything larger is rejected at construction time.

use crate::{Error, Result};

/// Largest prime-power modulus the library accepts.
pub const MODULUS_CEILING: u64 = 1_000_000;

/// (a + b) mod m
#[inline(always)]
pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + b as u128) % m as u128) as u64
}

/// (a - b) mod m, always in [0, m)
#[inline(always)]
pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    let (a, b) = (a % m, b % m);
    if a >= b {
        a - b
    } else {
        a + m - b
    }
}

/// (a * b) mod m
#[inline(always)]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// a^e mod m by binary exponentiation.
pub fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    a %= m;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    acc
}

/// Canonical representative of a signed integer mod m.
#[inline]
pub fn normalize(x: i128, m: u64) -> u64 {
    debug_assert!(m > 0);
    x.rem_euclid(m as i128) as u64
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Multiplicative inverse of x mod m via extended Euclid.
///
/// Errors with [`Error::NonInvertible`] when gcd(x, m) > 1.
pub fn inv(x: u64, m: u64) -> Result<u64> {
    if m == 1 {
        return Ok(0);
    }
    let x = x % m;
    let (g, s, _) = egcd(x as i128, m as i128);
    if g != 1 {
        return Err(Error::NonInvertible {
            value: x,
            modulus: m,
            gcd: g as u64,
        });
    }
    Ok(normalize(s, m))
}

/// Table of inverses mod m; entry is 0 for non-units.
///
/// Shared by brute-force sum loops that walk every unit of a modulus.
pub fn inverse_table(m: u64) -> Vec<u64> {
    let mut t = vec![0u64; m as usize];
    for x in 1..m {
        if gcd(x, m) == 1 {
            t[x as usize] = inv(x, m).expect("unit");
        }
    }
    t
}

/// ord_p(x): the largest k with p^k | x, or `None` (= ∞) for x = 0.
pub fn ord_p(x: i64, p: u64) -> Option<u32> {
    assert!(p >= 2, "ord_p needs a prime p >= 2");
    if x == 0 {
        return None;
    }
    let mut v = x.unsigned_abs();
    let mut k = 0u32;
    while v % p == 0 {
        v /= p;
        k += 1;
    }
    Some(k)
}

/// Deterministic primality check by trial division; fine for the value
/// range this library accepts.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Legendre symbol (a/p) ∈ {-1, 0, 1} by Euler's criterion a^((p-1)/2) mod p.
pub fn legendre(a: i64, p: u64) -> i32 {
    debug_assert!(p > 2 && is_prime(p), "legendre needs an odd prime");
    let a = normalize(a as i128, p);
    if a == 0 {
        return 0;
    }
    let e = pow_mod(a, (p - 1) / 2, p);
    if e == 1 {
        1
    } else {
        debug_assert_eq!(e, p - 1);
        -1
    }
}

/// Prime factorization (p, multiplicity) by trial division.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Möbius function μ(n).
pub fn moebius(n: u64) -> i64 {
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        return 0;
    }
    if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Euler totient φ(n).
pub fn euler_phi(n: u64) -> u64 {
    let mut out = n;
    for (p, _) in factorize(n) {
        out = out / p * (p - 1);
    }
    out
}

/// Divisors of n in ascending order.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factorize(n) {
        let prev = out.clone();
        let mut pe = 1u64;
        for _ in 0..e {
            pe *= p;
            out.extend(prev.iter().map(|d| d * pe));
        }
    }
    out.sort_unstable();
    out
}

/// The ambient modulus q = p^n for an odd prime p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimePowerModulus {
    p: u64,
    n: u32,
    value: u64,
}

impl PrimePowerModulus {
    /// Build p^n, checking that p is an odd prime, n ≥ 1, and the value is
    /// within the exact-integer range of the library.
    pub fn new(p: u64, n: u32) -> Result<Self> {
        if p < 3 || p % 2 == 0 || !is_prime(p) {
            return Err(Error::InvalidArgument(format!("p = {p} is not an odd prime")));
        }
        if n < 1 {
            return Err(Error::InvalidArgument("exponent n must be >= 1".into()));
        }
        let mut value: u64 = 1;
        for _ in 0..n {
            value = value
                .checked_mul(p)
                .filter(|&v| v <= MODULUS_CEILING)
                .ok_or_else(|| {
                    Error::PrecisionLoss(format!("p^n = {p}^{n} exceeds the ceiling {MODULUS_CEILING}"))
                })?;
        }
        Ok(Self { p, n, value })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    /// p^n as an exact integer.
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    /// p^k for k ≤ n.
    #[inline]
    pub fn pow(&self, k: u32) -> u64 {
        debug_assert!(k <= self.n);
        self.p.pow(k)
    }

    /// φ(p^n) = p^(n-1)(p - 1).
    #[inline]
    pub fn phi(&self) -> u64 {
        self.value / self.p * (self.p - 1)
    }

    /// The same prime with a different exponent.
    pub fn with_exponent(&self, k: u32) -> Result<Self> {
        Self::new(self.p, k)
    }
}

/// An integer class in [0, modulus), the canonical representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Residue {
    value: u64,
    modulus: u64,
}

impl Residue {
    /// Canonicalize any signed integer into [0, m).
    pub fn new(value: i128, modulus: u64) -> Self {
        assert!(modulus > 0, "modulus must be positive");
        Self {
            value: normalize(value, modulus),
            modulus,
        }
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn add(&self, other: &Residue) -> Residue {
        assert_eq!(self.modulus, other.modulus);
        Residue {
            value: add_mod(self.value, other.value, self.modulus),
            modulus: self.modulus,
        }
    }

    pub fn sub(&self, other: &Residue) -> Residue {
        assert_eq!(self.modulus, other.modulus);
        Residue {
            value: sub_mod(self.value, other.value, self.modulus),
            modulus: self.modulus,
        }
    }

    pub fn mul(&self, other: &Residue) -> Residue {
        assert_eq!(self.modulus, other.modulus);
        Residue {
            value: mul_mod(self.value, other.value, self.modulus),
            modulus: self.modulus,
        }
    }

    pub fn inv(&self) -> Result<Residue> {
        Ok(Residue {
            value: inv(self.value, self.modulus)?,
            modulus: self.modulus,
        })
    }

    pub fn pow(&self, e: u64) -> Residue {
        Residue {
            value: pow_mod(self.value, e, self.modulus),
            modulus: self.modulus,
        }
    }

    pub fn is_unit_mod(&self, p: u64) -> bool {
        self.value % p != 0
    }
}

/// A fourth root of unity i^k, the value of ε(A, p^s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EpsilonFactor {
    quarter_turns: u8,
}

impl EpsilonFactor {
    pub const ONE: Self = Self { quarter_turns: 0 };
    pub const I: Self = Self { quarter_turns: 1 };
    pub const MINUS_ONE: Self = Self { quarter_turns: 2 };
    pub const MINUS_I: Self = Self { quarter_turns: 3 };

    /// i^k
    pub fn from_quarter_turns(k: u8) -> Self {
        Self { quarter_turns: k % 4 }
    }

    /// Exponent k with self = i^k, in 0..4.
    #[inline]
    pub fn quarter_turns(&self) -> u8 {
        self.quarter_turns
    }

    pub fn mul(&self, other: Self) -> Self {
        Self::from_quarter_turns(self.quarter_turns + other.quarter_turns)
    }

    pub fn conj(&self) -> Self {
        Self::from_quarter_turns(4 - self.quarter_turns)
    }

    pub fn to_complex(&self) -> num_complex::Complex64 {
        match self.quarter_turns {
            0 => num_complex::Complex64::new(1.0, 0.0),
            1 => num_complex::Complex64::new(0.0, 1.0),
            2 => num_complex::Complex64::new(-1.0, 0.0),
            _ => num_complex::Complex64::new(0.0, -1.0),
        }
    }
}

impl std::fmt::Display for EpsilonFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self.quarter_turns {
            0 => "1",
            1 => "i",
            2 => "-1",
            _ => "-i",
        })
    }
}

/// ε(A, p^s) for s ∈ {0, 1} and (A, p) = 1:
/// 1 when s = 0; (A/p) when s = 1, p ≡ 1 mod 4; (A/p)·i when s = 1, p ≡ 3 mod 4.
pub fn epsilon(a: i64, p: u64, s: u8) -> Result<EpsilonFactor> {
    if s > 1 {
        return Err(Error::InvalidArgument(format!("epsilon exponent s = {s} not in {{0, 1}}")));
    }
    let sym = legendre(a, p);
    if sym == 0 {
        return Err(Error::InvalidArgument(format!("epsilon requires (A, p) = 1, got A = {a}, p = {p}")));
    }
    if s == 0 {
        return Ok(EpsilonFactor::ONE);
    }
    let sign = if sym == 1 { EpsilonFactor::ONE } else { EpsilonFactor::MINUS_ONE };
    Ok(if p % 4 == 1 { sign } else { sign.mul(EpsilonFactor::I) })
}

/// Split u mod d·p^n into (u mod p^n, u mod d) for (d, p) = 1.
pub fn crt_split(u: &Residue, d: u64, q: &PrimePowerModulus) -> Result<(Residue, Residue)> {
    if d == 0 || gcd(d, q.p()) != 1 {
        return Err(Error::InvalidArgument(format!(
            "crt_split needs gcd(d, p) = 1, got d = {d}, p = {}",
            q.p()
        )));
    }
    let m = d
        .checked_mul(q.value())
        .ok_or_else(|| Error::PrecisionLoss("d * p^n overflows".into()))?;
    if u.modulus() != m {
        return Err(Error::InvalidArgument(format!(
            "residue modulus {} is not d * p^n = {m}",
            u.modulus()
        )));
    }
    Ok((
        Residue::new(u.value() as i128, q.value()),
        Residue::new(u.value() as i128, d),
    ))
}

/// Inverse of [`crt_split`]: u ≡ d·d̄·u₁ + p^n·(p^n)̄·u₂ mod d·p^n.
pub fn crt_recombine(u1: &Residue, u2: &Residue, d: u64, q: &PrimePowerModulus) -> Result<Residue> {
    if d == 0 || gcd(d, q.p()) != 1 {
        return Err(Error::InvalidArgument(format!(
            "crt_recombine needs gcd(d, p) = 1, got d = {d}, p = {}",
            q.p()
        )));
    }
    if u1.modulus() != q.value() || u2.modulus() != d {
        return Err(Error::InvalidArgument("component moduli do not match (p^n, d)".into()));
    }
    let m = d
        .checked_mul(q.value())
        .ok_or_else(|| Error::PrecisionLoss("d * p^n overflows".into()))?;
    if d == 1 {
        return Ok(Residue::new(u1.value() as i128, m));
    }
    let d_bar = inv(d % q.value(), q.value())?; // d̄ mod p^n
    let q_bar = inv(q.value() % d, d)?; // (p^n)̄ mod d
    let t1 = mul_mod(mul_mod(d % m, d_bar, m), u1.value(), m);
    let t2 = mul_mod(mul_mod(q.value() % m, q_bar, m), u2.value(), m);
    Ok(Residue::new(add_mod(t1, t2, m) as i128, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inv_small_cases() {
        assert_eq!(inv(1, 9).unwrap(), 1);
        assert_eq!(inv(2, 9).unwrap(), 5); // 2 * 5 = 10 ≡ 1 mod 9
        assert_eq!(
            inv(3, 9),
            Err(Error::NonInvertible { value: 3, modulus: 9, gcd: 3 })
        );
    }

    #[test]
    fn inv_is_an_inverse_up_to_big_moduli() {
        for m in [2u64, 9, 45, 343, 1000, 59049, 999_983] {
            for x in (1..m).step_by((m / 97 + 1) as usize) {
                if gcd(x, m) == 1 {
                    assert_eq!(mul_mod(x, inv(x, m).unwrap(), m), 1, "x={x} m={m}");
                }
            }
        }
    }

    #[test]
    fn ord_p_values() {
        assert_eq!(ord_p(9, 3), Some(2));
        assert_eq!(ord_p(10, 5), Some(1));
        assert_eq!(ord_p(0, 7), None);
        assert_eq!(ord_p(-18, 3), Some(2));
    }

    #[test]
    fn ord_p_additive_over_products() {
        for &(x, y) in &[(6i64, 15), (9, 27), (7, 14), (125, 10)] {
            for p in [3u64, 5] {
                let lhs = ord_p(x * y, p).unwrap();
                assert_eq!(lhs, ord_p(x, p).unwrap() + ord_p(y, p).unwrap());
            }
        }
    }

    #[test]
    fn legendre_small_cases() {
        assert_eq!(legendre(1, 7), 1);
        assert_eq!(legendre(2, 7), 1); // squares mod 7 are {1, 2, 4}
        assert_eq!(legendre(3, 7), -1);
        assert_eq!(legendre(14, 7), 0);
        assert_eq!(legendre(-1, 5), 1);
        assert_eq!(legendre(-1, 7), -1);
    }

    #[test]
    fn legendre_matches_square_enumeration() {
        for p in [3u64, 5, 7, 11, 13] {
            let squares: std::collections::HashSet<u64> =
                (1..p).map(|x| mul_mod(x, x, p)).collect();
            for a in 1..p {
                let expect = if squares.contains(&a) { 1 } else { -1 };
                assert_eq!(legendre(a as i64, p), expect, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn epsilon_table() {
        assert_eq!(epsilon(5, 7, 0).unwrap(), EpsilonFactor::ONE);
        assert_eq!(epsilon(2, 5, 1).unwrap(), EpsilonFactor::MINUS_ONE); // 5 ≡ 1 mod 4, (2/5) = -1
        assert_eq!(epsilon(2, 7, 1).unwrap(), EpsilonFactor::I); // 7 ≡ 3 mod 4, (2/7) = 1
        assert!(epsilon(7, 7, 1).is_err());
    }

    #[test]
    fn epsilon_squared_is_legendre_of_minus_one() {
        // ε(A, p)² = (-1/p) as phases, on a grid of units.
        for p in [3u64, 5, 7, 11, 13, 17] {
            for a in 1..p {
                let e = epsilon(a as i64, p, 1).unwrap();
                let sq = e.mul(e);
                let expect = if legendre(-1, p) == 1 {
                    EpsilonFactor::ONE
                } else {
                    EpsilonFactor::MINUS_ONE
                };
                assert_eq!(sq, expect, "p={p} a={a}");
            }
        }
    }

    #[test]
    fn prime_power_modulus_validation() {
        assert!(PrimePowerModulus::new(2, 3).is_err());
        assert!(PrimePowerModulus::new(9, 1).is_err());
        assert!(PrimePowerModulus::new(3, 0).is_err());
        assert!(PrimePowerModulus::new(3, 20).is_err()); // over the ceiling
        let q = PrimePowerModulus::new(3, 4).unwrap();
        assert_eq!(q.value(), 81);
        assert_eq!(q.phi(), 54);
    }

    #[test]
    fn crt_split_examples() {
        let q = PrimePowerModulus::new(3, 2).unwrap();
        // d = 1: trivial split
        let u = Residue::new(7, 9);
        let (u1, u2) = crt_split(&u, 1, &q).unwrap();
        assert_eq!((u1.value(), u2.value()), (7, 0));
        // 10 mod 18 -> (1 mod 9, 0 mod 2)
        let u = Residue::new(10, 18);
        let (u1, u2) = crt_split(&u, 2, &q).unwrap();
        assert_eq!((u1.value(), u2.value()), (1, 0));
        // coprimality failure
        assert!(crt_split(&Residue::new(1, 27), 3, &q).is_err());
    }

    #[test]
    fn crt_round_trips_mod_45() {
        let q = PrimePowerModulus::new(3, 2).unwrap();
        for u in 0..45u64 {
            let r = Residue::new(u as i128, 45);
            let (u1, u2) = crt_split(&r, 5, &q).unwrap();
            let back = crt_recombine(&u1, &u2, 5, &q).unwrap();
            assert_eq!(back.value(), u);
        }
    }

    #[test]
    fn residue_normalizes_negatives() {
        assert_eq!(Residue::new(-5, 9).value(), 4);
        assert_eq!(Residue::new(-9, 9).value(), 0);
    }

    #[test]
    fn divisor_and_multiplicative_helpers() {
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(moebius(6), 1);
        assert_eq!(moebius(9), 0);
        assert_eq!(moebius(30), -1);
        assert_eq!(euler_phi(9), 6);
        assert_eq!(euler_phi(45), 24);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn inv_round_trips(x in 1u64..10_000, m in 2u64..10_000) {
                prop_assume!(gcd(x, m) == 1);
                let i = inv(x, m).unwrap();
                prop_assert_eq!(mul_mod(x, i, m), 1);
            }

            #[test]
            fn crt_split_recombine_identity(u in 0u64..2205, d in prop::sample::select(vec![1u64, 2, 4, 5, 7, 35])) {
                let q = PrimePowerModulus::new(3, 2).unwrap();
                let m = d * q.value();
                let r = Residue::new((u % m) as i128, m);
                let (u1, u2) = crt_split(&r, d, &q).unwrap();
                let back = crt_recombine(&u1, &u2, d, &q).unwrap();
                prop_assert_eq!(back.value(), u % m);
            }
        }
    }
}
