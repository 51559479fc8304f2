//! Primitive multiplicative characters mod p^n with exact rational-phase
//! values, the Postnikov unit α, and Gauss sums.
//!
//! Character values are kept as [`UnitPhase`] (exact angles num/den) and only
//! converted to complex doubles at summation boundaries, so identities like
//! the Postnikov formula χ(m) = θ(α log_p m / p^n) are tested as exact
//! equalities of reduced fractions, with no tolerances anywhere.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::modarith::{self, gcd, inv, mul_mod, pow_mod, EpsilonFactor, PrimePowerModulus, Residue};
use crate::padic::plog;
use crate::{Error, Result};

/// Discrete logs are tabulated up to this modulus; beyond it they fall back
/// to baby-step/giant-step.
pub const DLOG_TABLE_CEILING: u64 = 1_000_000;

/// An exact root of unity e(num/den), stored reduced with num in [0, den).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitPhase {
    num: u64,
    den: u64,
}

impl UnitPhase {
    pub fn new(num: i128, den: u64) -> Self {
        assert!(den > 0, "phase denominator must be positive");
        let n = num.rem_euclid(den as i128) as u64;
        let g = gcd(n, den);
        Self { num: n / g, den: den / g }
    }

    pub const ONE: Self = Self { num: 0, den: 1 };

    #[inline]
    pub fn num(&self) -> u64 {
        self.num
    }

    #[inline]
    pub fn den(&self) -> u64 {
        self.den
    }

    /// Multiplication of phases adds the angles mod 1.
    pub fn mul(&self, other: &UnitPhase) -> UnitPhase {
        let den = self.den as u128 * other.den as u128;
        let num = self.num as u128 * other.den as u128 + other.num as u128 * self.den as u128;
        let g = gcd_u128(num % den, den);
        let (num, den) = ((num % den) / g, den / g);
        debug_assert!(den <= u64::MAX as u128);
        UnitPhase { num: num as u64, den: den as u64 }
    }

    /// The k-th power of the phase.
    pub fn pow(&self, k: i64) -> UnitPhase {
        UnitPhase::new(self.num as i128 * k as i128, self.den)
    }

    /// Complex conjugate (angle negation).
    pub fn conj(&self) -> UnitPhase {
        UnitPhase::new(-(self.num as i128), self.den)
    }

    /// Multiplicative order as a root of unity (the reduced denominator).
    pub fn order(&self) -> u64 {
        self.den
    }

    pub fn is_one(&self) -> bool {
        self.num == 0
    }

    pub fn to_complex(&self) -> Complex64 {
        let angle = 2.0 * std::f64::consts::PI * (self.num as f64) / (self.den as f64);
        Complex64::new(angle.cos(), angle.sin())
    }

    /// Strict angle comparison by cross multiplication.
    pub fn cmp_angle(&self, other: &UnitPhase) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl std::fmt::Display for UnitPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "e({}/{})", self.num, self.den)
    }
}

impl From<EpsilonFactor> for UnitPhase {
    fn from(e: EpsilonFactor) -> Self {
        UnitPhase::new(e.quarter_turns() as i128, 4)
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Accumulates exact phases with integer multiplicities and converts to a
/// complex double in one pass, in sorted-angle order, so brute-force sums are
/// reproducible bit for bit regardless of summation order.
#[derive(Debug, Default, Clone)]
pub struct PhaseAccumulator {
    counts: HashMap<UnitPhase, i64>,
    terms: u64,
}

impl PhaseAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, phase: UnitPhase) {
        self.add_signed(phase, 1);
    }

    pub fn add_signed(&mut self, phase: UnitPhase, count: i64) {
        *self.counts.entry(phase).or_insert(0) += count;
        self.terms += count.unsigned_abs();
    }

    /// Number of accumulated terms (with multiplicity).
    pub fn term_count(&self) -> u64 {
        self.terms
    }

    pub fn to_complex(&self) -> Complex64 {
        let mut entries: Vec<(&UnitPhase, &i64)> = self.counts.iter().collect();
        entries.sort_by(|a, b| a.0.cmp_angle(b.0));
        let mut acc = Complex64::new(0.0, 0.0);
        for (phase, &count) in entries {
            if count != 0 {
                acc += phase.to_complex() * count as f64;
            }
        }
        acc
    }
}

/// θ(x/p^j): the standard additive character of Q_p, trivial on Z_p;
/// on Z[1/p] it coincides with e(·).
pub fn theta(num: i128, p: u64, pow: u32) -> UnitPhase {
    let den = p.checked_pow(pow).expect("p^pow fits u64");
    UnitPhase::new(num, den)
}

enum DlogTable {
    Dense(Vec<u32>),
    /// Baby-step giant-step data: baby[g^j] = j for j < m, giant = g^(-m).
    Bsgs { baby: HashMap<u64, u64>, giant: u64, m: u64 },
}

/// A primitive multiplicative character mod p^n, presented through a fixed
/// primitive root g and index k: χ(g^j) = e(k·j/φ(p^n)).
pub struct MultChar {
    q: PrimePowerModulus,
    g: u64,
    k: u64,
    phi: u64,
    dlog: DlogTable,
    /// Postnikov unit mod p^(n-1).
    alpha: u64,
}

/// Least primitive root mod p² (which generates (Z/p^n)^× for every n).
pub fn least_primitive_root(p: u64) -> u64 {
    let factors = modarith::factorize(p - 1);
    let p2 = p * p;
    'outer: for g in 2..p {
        for &(f, _) in &factors {
            if pow_mod(g, (p - 1) / f, p) == 1 {
                continue 'outer;
            }
        }
        if pow_mod(g, p - 1, p2) != 1 {
            return g;
        }
        // g is primitive mod p but not mod p²; g + p always is.
        return g + p;
    }
    unreachable!("every odd prime has a primitive root")
}

/// Construct the primitive character mod p^n with χ(g) = e(k/φ(p^n)).
pub fn make_char(p: u64, n: u32, k: u64) -> Result<MultChar> {
    MultChar::new(p, n, k, DLOG_TABLE_CEILING)
}

impl MultChar {
    /// As [`make_char`], with an explicit ceiling for the dense dlog table
    /// (smaller ceilings force the baby-step/giant-step path).
    pub fn new(p: u64, n: u32, k: u64, table_ceiling: u64) -> Result<Self> {
        let q = PrimePowerModulus::new(p, n)?;
        if n < 2 {
            return Err(Error::InvalidArgument("primitive characters here need n ≥ 2".into()));
        }
        let phi = q.phi();
        if k >= phi {
            return Err(Error::InvalidArgument(format!("index k = {k} not below φ(p^n) = {phi}")));
        }
        if k % p == 0 {
            return Err(Error::NotPrimitive { index: k, modulus: q.value() });
        }
        let g = least_primitive_root(p);
        let pn = q.value();
        let dlog = if pn <= table_ceiling {
            let mut table = vec![u32::MAX; pn as usize];
            let mut acc = 1u64;
            for j in 0..phi {
                table[acc as usize] = j as u32;
                acc = mul_mod(acc, g, pn);
            }
            DlogTable::Dense(table)
        } else {
            let m = (phi as f64).sqrt().ceil() as u64;
            let mut baby = HashMap::with_capacity(m as usize);
            let mut acc = 1u64;
            for j in 0..m {
                baby.entry(acc).or_insert(j);
                acc = mul_mod(acc, g, pn);
            }
            let giant = inv(pow_mod(g, m, pn), pn)?;
            DlogTable::Bsgs { baby, giant, m }
        };
        let mut chi = Self { q, g, k, phi, dlog, alpha: 0 };
        chi.alpha = chi.compute_postnikov_alpha()?;
        Ok(chi)
    }

    pub fn q(&self) -> &PrimePowerModulus {
        &self.q
    }

    pub fn p(&self) -> u64 {
        self.q.p()
    }

    pub fn n(&self) -> u32 {
        self.q.n()
    }

    pub fn modulus(&self) -> u64 {
        self.q.value()
    }

    pub fn index(&self) -> u64 {
        self.k
    }

    pub fn generator(&self) -> u64 {
        self.g
    }

    pub fn phi(&self) -> u64 {
        self.phi
    }

    /// Discrete log ind_g(u) for a unit u.
    pub fn ind(&self, u: u64) -> Option<u64> {
        let pn = self.q.value();
        let u = u % pn;
        if u % self.q.p() == 0 {
            return None;
        }
        match &self.dlog {
            DlogTable::Dense(t) => {
                let j = t[u as usize];
                (j != u32::MAX).then_some(j as u64)
            }
            DlogTable::Bsgs { baby, giant, m } => {
                let mut x = u;
                for i in 0..=(self.phi / m + 1) {
                    if let Some(&j) = baby.get(&x) {
                        return Some((i * m + j) % self.phi);
                    }
                    x = mul_mod(x, *giant, pn);
                }
                None
            }
        }
    }

    /// χ(u) as an exact phase; `None` encodes the value 0 (p | u).
    pub fn eval(&self, u: i64) -> Option<UnitPhase> {
        let u = modarith::normalize(u as i128, self.q.value());
        let j = self.ind(u)?;
        Some(UnitPhase::new(
            (self.k as i128) * (j as i128),
            self.phi,
        ))
    }

    /// χ(u) for u already known to be a unit.
    pub fn eval_unit(&self, u: u64) -> UnitPhase {
        self.eval(u as i64).expect("unit argument")
    }

    /// χ(-1) = ±1 as a phase.
    pub fn eval_minus_one(&self) -> UnitPhase {
        self.eval(-1).expect("-1 is a unit")
    }

    /// The conjugate character (index φ - k).
    pub fn conj_char(&self) -> Result<MultChar> {
        let k = (self.phi - self.k) % self.phi;
        let ceiling = match self.dlog {
            DlogTable::Dense(_) => DLOG_TABLE_CEILING,
            DlogTable::Bsgs { .. } => 0,
        };
        MultChar::new(self.q.p(), self.q.n(), k, ceiling)
    }

    /// The Postnikov unit α mod p^(n-1): the unique residue with
    /// χ(m) = θ(α log_p m / p^n) for every m ≡ 1 mod p.
    pub fn alpha(&self) -> Residue {
        Residue::new(self.alpha as i128, self.q.value() / self.q.p())
    }

    /// Least nonnegative lift of α mod p^n (the default lift convention).
    pub fn alpha_lift(&self) -> u64 {
        self.alpha
    }

    /// Solve for α at m = 1 + p and verify the Postnikov identity on 1 + pZ
    /// (exhaustively below a size ceiling, sampled above).
    fn compute_postnikov_alpha(&self) -> Result<u64> {
        let (p, pn) = (self.q.p(), self.q.value());
        let pn1 = pn / p; // p^(n-1)
        let ind_1p = self
            .ind(1 + p)
            .ok_or_else(|| Error::InternalInconsistency("1 + p has no discrete log".into()))?;
        // 1+p generates the Sylow p-subgroup, so (p-1) | ind(1+p).
        if ind_1p % (p - 1) != 0 {
            return Err(Error::InternalInconsistency("ind(1+p) not divisible by p-1".into()));
        }
        let j = ind_1p / (p - 1);
        let log_1p = plog(&Residue::new((1 + p) as i128, pn), &self.q)?.value();
        if log_1p % p != 0 || (log_1p / p) % p == 0 {
            return Err(Error::InternalInconsistency("log_p(1+p) should have ord exactly 1".into()));
        }
        let w = log_1p / p; // unit mod p^(n-1)
        let alpha = mul_mod(mul_mod(self.k % pn1, j % pn1, pn1), inv(w % pn1, pn1)?, pn1);
        // verification pass
        let count = pn1;
        let step = if count <= 20_000 { 1 } else { (count / 997) | 1 };
        let mut m = 1u64;
        loop {
            let chi = self.eval(m as i64).expect("1 + pZ is a unit class");
            let lg = plog(&Residue::new(m as i128, pn), &self.q)?.value();
            let rhs = theta(mul_mod(alpha, lg, pn) as i128, p, self.q.n());
            if chi != rhs {
                return Err(Error::InternalInconsistency(format!(
                    "Postnikov identity failed at m = {m}: χ(m) = {chi}, θ(α log m / p^n) = {rhs}"
                )));
            }
            m += p * step;
            if m >= pn {
                break;
            }
        }
        Ok(alpha)
    }

    /// Gauss sum τ(χ) = Σ_b χ(b) e(b/p^n) as a complex double.
    pub fn gauss_sum(&self) -> Complex64 {
        let pn = self.q.value();
        let mut acc = PhaseAccumulator::new();
        for b in 1..pn {
            if let Some(chi) = self.eval(b as i64) {
                acc.add(chi.mul(&theta(b as i128, self.q.p(), self.q.n())));
            }
        }
        acc.to_complex()
    }
}

impl std::fmt::Debug for MultChar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "MultChar(mod {}^{}, g = {}, k = {}, α ≡ {} mod {})",
            self.q.p(),
            self.q.n(),
            self.g,
            self.k,
            self.alpha,
            self.q.value() / self.q.p()
        )
    }
}
