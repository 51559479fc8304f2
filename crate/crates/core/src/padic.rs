//! p-adic analytic primitives at finite precision: the truncated p-adic
//! logarithm, branch-consistent square roots via Hensel lifting, and
//! fixed-precision p-adic rationals for phase derivatives.

use crate::modarith::{self, add_mod, inv, legendre, mul_mod, pow_mod, sub_mod, PrimePowerModulus, Residue};
use crate::{Error, Result};

/// A valuation measured inside a finite-precision residue ring.
///
/// An exact zero residue mod p^n cannot be distinguished from a value of
/// valuation ≥ n, so it is reported as the sentinel `AtLeast(n)` rather
/// than infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Exact(u32),
    AtLeast(u32),
}

impl Valuation {
    /// The valuation is known to be ≥ k.
    pub fn at_least(&self, k: u32) -> bool {
        match *self {
            Valuation::Exact(v) => v >= k,
            Valuation::AtLeast(v) => v >= k,
        }
    }

    pub fn exact(&self) -> Option<u32> {
        match *self {
            Valuation::Exact(v) => Some(v),
            Valuation::AtLeast(_) => None,
        }
    }
}

/// ord_p of a residue known mod p^n.
pub fn residue_ord(value: u64, q: &PrimePowerModulus) -> Valuation {
    let v = value % q.value();
    if v == 0 {
        return Valuation::AtLeast(q.n());
    }
    let mut x = v;
    let mut k = 0;
    while x % q.p() == 0 {
        x /= q.p();
        k += 1;
    }
    Valuation::Exact(k)
}

/// One of the 2^((p-1)/2) branches of the p-adic square root: a choice of
/// root in {1, …, p-1} for each quadratic-residue class mod p, propagated
/// to every p^n by Hensel lifting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqrtBranch {
    p: u64,
    /// Indexed by residue mod p; 0 marks non-residues and 0 itself.
    root_of: Vec<u64>,
}

impl SqrtBranch {
    /// The canonical branch: for each residue class the least root, i.e. the
    /// unique root in {1, …, (p-1)/2}.
    pub fn canonical(p: u64) -> Self {
        let mut root_of = vec![0u64; p as usize];
        for w in 1..=(p - 1) / 2 {
            root_of[mul_mod(w, w, p) as usize] = w;
        }
        Self { p, root_of }
    }

    /// Every branch, enumerated by flipping each class root independently.
    /// Only sensible for small p.
    pub fn all_branches(p: u64) -> Vec<Self> {
        let canonical = Self::canonical(p);
        let classes: Vec<u64> = (1..p).filter(|&y| legendre(y as i64, p) == 1).collect();
        let k = classes.len();
        (0..1u32 << k)
            .map(|mask| {
                let mut b = canonical.clone();
                for (i, &y) in classes.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        b.root_of[y as usize] = p - b.root_of[y as usize];
                    }
                }
                b
            })
            .collect()
    }

    /// The branch with every class root negated.
    pub fn negated(&self) -> Self {
        let mut root_of = self.root_of.clone();
        for r in root_of.iter_mut() {
            if *r != 0 {
                *r = self.p - *r;
            }
        }
        Self { p: self.p, root_of }
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    /// The chosen root of a quadratic-residue class y mod p.
    pub fn root_of(&self, y: u64) -> Option<u64> {
        let r = self.root_of[(y % self.p) as usize];
        (r != 0).then_some(r)
    }

    /// Number of classes with a root; always (p-1)/2.
    pub fn class_count(&self) -> usize {
        self.root_of.iter().filter(|&&r| r != 0).count()
    }
}

/// Truncation length for the logarithm series: with J = n + ⌊log_p n⌋ + 2
/// every dropped term x^j/j has ord_p ≥ n.
fn plog_terms(p: u64, n: u32) -> u32 {
    let mut log = 0u32;
    let mut v = n as u64;
    while v >= p {
        v /= p;
        log += 1;
    }
    n + log + 2
}

/// log_p(x) = Σ_{j≥1} (-1)^(j-1) (x-1)^j / j mod p^n, for x ≡ 1 mod p.
///
/// Working precision is raised to p^(n+Δ) with Δ = ⌊log_p J⌋ + 1 so every
/// division by j is exact.
pub fn plog(x: &Residue, q: &PrimePowerModulus) -> Result<Residue> {
    let (p, n, pn) = (q.p(), q.n(), q.value());
    if x.modulus() != pn {
        return Err(Error::InvalidArgument(format!(
            "plog argument has modulus {}, expected p^n = {pn}",
            x.modulus()
        )));
    }
    if x.value() % p != 1 % p {
        return Err(Error::InvalidArgument(format!(
            "plog requires x ≡ 1 mod p, got x = {} mod {pn}",
            x.value()
        )));
    }
    let terms = plog_terms(p, n);
    let mut delta = 0u32;
    let mut v = terms as u64;
    while v > 0 {
        v /= p;
        delta += 1;
    }
    // working modulus p^(n+Δ); fits u64 because p^n ≤ 10^6 and p^Δ ≤ p·J
    let big: u64 = pn
        .checked_mul(p.checked_pow(delta).ok_or_else(|| Error::PrecisionLoss("plog working modulus overflow".into()))?)
        .ok_or_else(|| Error::PrecisionLoss("plog working modulus overflow".into()))?;
    let y = x.value() - 1; // ord_p(y) ≥ 1
    let mut acc = 0u64;
    let mut y_pow = 1u64;
    for j in 1..=terms as u64 {
        y_pow = mul_mod(y_pow, y, big);
        // exact division of y^j by j = p^v · j'
        let v = modarith::ord_p(j as i64, p).unwrap();
        let pv = p.pow(v);
        debug_assert_eq!(y_pow % pv, 0, "series term not divisible by p^v");
        let reduced = (y_pow / pv) % (big / pv);
        let term = mul_mod(reduced, inv(j / pv, big / pv)?, big / pv) % pn;
        acc = if j % 2 == 1 {
            add_mod(acc, term, pn)
        } else {
            sub_mod(acc, term, pn)
        };
    }
    Ok(Residue::new(acc as i128, pn))
}

/// Square root of a unit square x mod p^e on a raw prime-power modulus
/// (no ceiling; used internally at extended working precision). The result w
/// satisfies w² ≡ x mod p^e and w ≡ branch root of x mod p.
pub fn sqrt_mod_prime_power(x: u64, p: u64, e: u32, branch: &SqrtBranch) -> Result<u64> {
    let pe = checked_pow(p, e)?;
    let x = x % pe;
    let x0 = x % p;
    if x0 == 0 {
        return Err(Error::InvalidArgument(format!("square root requires a unit, got {x} ≡ 0 mod {p}")));
    }
    if legendre(x0 as i64, p) != 1 {
        return Err(Error::NotASquare { value: x, prime: p });
    }
    let mut w = branch.root_of(x0).expect("residue class has a root");
    // Newton iteration w ← w - (w² - x)/(2w); quadratic convergence and the
    // class of w mod p never moves.
    let mut prec = 1u32;
    while prec < e {
        let two_w_inv = inv(mul_mod(2, w, pe), pe)?;
        let diff = sub_mod(mul_mod(w, w, pe), x, pe);
        w = sub_mod(w, mul_mod(diff, two_w_inv, pe), pe);
        prec *= 2;
    }
    debug_assert_eq!(mul_mod(w, w, pe), x);
    Ok(w)
}

/// Square root of a unit square mod p^n, in the given branch: the result w
/// satisfies w² ≡ x mod p^n and w ≡ branch root of x mod p.
pub fn psqrt(x: &Residue, q: &PrimePowerModulus, branch: &SqrtBranch) -> Result<u64> {
    if x.modulus() != q.value() {
        return Err(Error::InvalidArgument(format!(
            "psqrt argument has modulus {}, expected p^n = {}",
            x.modulus(),
            q.value()
        )));
    }
    sqrt_mod_prime_power(x.value(), q.p(), q.n(), branch)
}

/// The quadratic expansion of the square root along u + p^κ t:
/// u_{1/2} + p^κ t/(2 u_{1/2}) - p^(2κ) t²/(8 u_{1/2}³) mod p^n.
///
/// Agrees with `psqrt(u + p^κ t)` modulo p^min(3κ, n).
pub fn psqrt_shift(u: &Residue, kappa: u32, t: &Residue, q: &PrimePowerModulus, branch: &SqrtBranch) -> Result<u64> {
    if kappa < 1 {
        return Err(Error::InvalidArgument("psqrt_shift requires κ ≥ 1".into()));
    }
    let pn = q.value();
    let w = psqrt(u, q, branch)?;
    if kappa >= q.n() {
        return Ok(w);
    }
    let pk = q.pow(kappa);
    let t = t.value() % pn;
    let w_inv = inv(w, pn)?;
    let linear = mul_mod(mul_mod(pk, t, pn), mul_mod(inv(2, pn)?, w_inv, pn), pn);
    let mut out = add_mod(w, linear, pn);
    if 2 * kappa < q.n() {
        let p2k = q.pow(2 * kappa);
        let w3_inv = pow_mod(w_inv, 3, pn);
        let quad = mul_mod(
            mul_mod(p2k, mul_mod(t, t, pn), pn),
            mul_mod(inv(8, pn)?, w3_inv, pn),
            pn,
        );
        out = sub_mod(out, quad, pn);
    }
    Ok(out)
}

/// ord_p of the difference of branch-consistent square roots;
/// equals ord_p(u₁ - u₂) whenever that is < n.
pub fn ord_sqrt_diff(u1: &Residue, u2: &Residue, q: &PrimePowerModulus, branch: &SqrtBranch) -> Result<Valuation> {
    let w1 = psqrt(u1, q, branch)?;
    let w2 = psqrt(u2, q, branch)?;
    Ok(residue_ord(sub_mod(w1, w2, q.value()), q))
}

/// A p-adic rational at fixed finite precision: digits / p^shift with the
/// digits known mod p^prec (so the number is known mod p^(prec-shift)).
///
/// The invariant prec ≥ shift keeps the fractional part fully determined,
/// which is what [`PadicApprox::theta`] needs.
#[derive(Debug, Clone, Copy)]
pub struct PadicApprox {
    p: u64,
    digits: u64,
    shift: u32,
    prec: u32,
}

impl PadicApprox {
    /// digits·p^(-shift), digits reduced mod p^prec.
    pub fn new(p: u64, digits: i128, shift: u32, prec: u32) -> Result<Self> {
        if prec < shift {
            return Err(Error::PrecisionLoss(format!(
                "p-adic value needs prec ≥ shift, got prec = {prec}, shift = {shift}"
            )));
        }
        let modulus = checked_pow(p, prec)?;
        Ok(Self {
            p,
            digits: modarith::normalize(digits, modulus),
            shift,
            prec,
        })
    }

    /// A p-adic integer known mod p^prec.
    pub fn integer(p: u64, value: i128, prec: u32) -> Result<Self> {
        Self::new(p, value, 0, prec)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Absolute precision: the value is known mod p^abs_prec.
    pub fn abs_prec(&self) -> u32 {
        self.prec - self.shift
    }

    /// Signed ord_p as an integer, None when the value is 0 at this precision.
    pub fn ord_signed(&self) -> Option<i64> {
        if self.digits == 0 {
            return None;
        }
        let mut x = self.digits;
        let mut k = 0i64;
        while x % self.p == 0 {
            x /= self.p;
            k += 1;
        }
        Some(k - self.shift as i64)
    }

    /// Certify ord_p(x) ≥ k; errors when the precision cannot decide.
    pub fn ord_at_least(&self, k: i64) -> Result<bool> {
        match self.ord_signed() {
            Some(v) => Ok(v >= k),
            None => {
                if self.abs_prec() as i64 >= k {
                    Ok(true)
                } else {
                    Err(Error::PrecisionLoss(format!(
                        "cannot certify ord ≥ {k} at absolute precision {}",
                        self.abs_prec()
                    )))
                }
            }
        }
    }

    /// Multiply by p^k (k may be negative, lowering the shift).
    pub fn scale_pow(&self, k: i32) -> Result<Self> {
        if k >= 0 {
            let f = checked_pow(self.p, k as u32)?;
            let modulus = checked_pow(self.p, self.prec)?;
            Ok(Self {
                digits: mul_mod(self.digits, f % modulus, modulus),
                ..*self
            })
        } else {
            let k = (-k) as u32;
            let new_shift = self.shift + k;
            if new_shift > self.prec {
                return Err(Error::PrecisionLoss("scale_pow drove shift past precision".into()));
            }
            Ok(Self { shift: new_shift, ..*self })
        }
    }

    fn aligned(&self, other: &Self) -> Result<(u64, u64, u32, u32)> {
        assert_eq!(self.p, other.p, "mixed primes");
        let shift = self.shift.max(other.shift);
        let lift = |x: &Self| -> Result<(u64, u32)> {
            let extra = shift - x.shift;
            let prec = x.prec + extra;
            let modulus = checked_pow(x.p, prec)?;
            Ok((mul_mod(x.digits, checked_pow(x.p, extra)? % modulus, modulus), prec))
        };
        let (d1, p1) = lift(self)?;
        let (d2, p2) = lift(other)?;
        let prec = p1.min(p2);
        let modulus = checked_pow(self.p, prec)?;
        Ok((d1 % modulus, d2 % modulus, shift, prec))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let (d1, d2, shift, prec) = self.aligned(other)?;
        let modulus = checked_pow(self.p, prec)?;
        Self::new(self.p, add_mod(d1, d2, modulus) as i128, shift, prec)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let (d1, d2, shift, prec) = self.aligned(other)?;
        let modulus = checked_pow(self.p, prec)?;
        Self::new(self.p, sub_mod(d1, d2, modulus) as i128, shift, prec)
    }

    pub fn neg(&self) -> Self {
        let modulus = checked_pow(self.p, self.prec).expect("existing precision");
        Self {
            digits: sub_mod(0, self.digits, modulus),
            ..*self
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        assert_eq!(self.p, other.p, "mixed primes");
        // x = d1/p^s1 (+ err mod p^(prec1-s1)), y likewise; error of the product
        // is bounded by min(prec1 + v2, prec2 + v1) - s1 - s2 where vi = v_p(di).
        let v1 = vp_or(self.digits, self.p, self.prec);
        let v2 = vp_or(other.digits, other.p, other.prec);
        let prec = (self.prec + v2).min(other.prec + v1);
        let shift = self.shift + other.shift;
        if prec < shift {
            return Err(Error::PrecisionLoss("product lost the fractional part".into()));
        }
        let prec = prec.min(max_prec(self.p));
        let modulus = checked_pow(self.p, prec)?;
        Self::new(
            self.p,
            mul_mod(self.digits % modulus, other.digits % modulus, modulus) as i128,
            shift,
            prec,
        )
    }

    /// Multiply by a plain integer.
    pub fn mul_int(&self, k: i128) -> Result<Self> {
        let modulus = checked_pow(self.p, self.prec)?;
        Self::new(
            self.p,
            mul_mod(self.digits, modarith::normalize(k, modulus), modulus) as i128,
            self.shift,
            self.prec,
        )
    }

    /// Divide by a value of known valuation; errors when `other` is zero at
    /// its precision.
    pub fn div(&self, other: &Self) -> Result<Self> {
        let v = other
            .ord_signed()
            .ok_or_else(|| Error::PrecisionLoss("division by a p-adic zero".into()))?;
        // other = p^(v+shift) · unit as digits; pull the power out and invert the unit.
        let pv = checked_pow(other.p, (v + other.shift as i64) as u32)?;
        let unit = other.digits / pv;
        let unit_prec = other.prec - (v + other.shift as i64) as u32;
        let modulus = checked_pow(other.p, unit_prec)?;
        let inv_unit = Self::new(other.p, inv(unit % modulus, modulus)? as i128, 0, unit_prec)?;
        // self / other = self · unit^{-1} · p^(-v)
        self.mul(&inv_unit)?.scale_pow(-(v as i32))
    }

    /// θ of the value: e(fractional part), an exact rational phase with
    /// denominator dividing p^shift.
    pub fn theta(&self) -> crate::characters::UnitPhase {
        let ps = checked_pow(self.p, self.shift).expect("shift ≤ prec");
        crate::characters::UnitPhase::new((self.digits % ps) as i128, ps)
    }

    /// The unit part (x·p^(-ord)) mod p; errors on a zero value.
    pub fn unit_part(&self) -> Result<u64> {
        if self.digits == 0 {
            return Err(Error::PrecisionLoss("unit part of a p-adic zero".into()));
        }
        let mut x = self.digits;
        while x % self.p == 0 {
            x /= self.p;
        }
        Ok(x % self.p)
    }
}

fn vp_or(x: u64, p: u64, cap: u32) -> u32 {
    if x == 0 {
        return cap;
    }
    let mut x = x;
    let mut k = 0;
    while x % p == 0 {
        x /= p;
        k += 1;
    }
    k.min(cap)
}

/// Largest e with p^e ≤ 2^62, the precision cap for u64 digit storage.
pub fn max_prec(p: u64) -> u32 {
    let mut e = 0u32;
    let mut v: u128 = 1;
    while v * p as u128 <= 1u128 << 62 {
        v *= p as u128;
        e += 1;
    }
    e
}

fn checked_pow(p: u64, e: u32) -> Result<u64> {
    let mut v: u64 = 1;
    for _ in 0..e {
        v = v
            .checked_mul(p)
            .filter(|&v| v <= 1u64 << 62)
            .ok_or_else(|| Error::PrecisionLoss(format!("p^{e} exceeds the 64-bit working range")))?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modarith::PrimePowerModulus;

    fn q(p: u64, n: u32) -> PrimePowerModulus {
        PrimePowerModulus::new(p, n).unwrap()
    }

    #[test]
    fn plog_of_one_is_zero() {
        for (p, n) in [(3u64, 4u32), (5, 3), (7, 2)] {
            let qq = q(p, n);
            let r = plog(&Residue::new(1, qq.value()), &qq).unwrap();
            assert_eq!(r.value(), 0);
        }
    }

    #[test]
    fn plog_small_value() {
        // log_3(4) mod 9: 3 - 9/2 + 27/3 - ... = 3 mod 9
        let qq = q(3, 2);
        assert_eq!(plog(&Residue::new(4, 9), &qq).unwrap().value(), 3);
    }

    #[test]
    fn plog_square_doubles() {
        // 16 = 4², so log(16) = 2 log(4) mod 81
        let qq = q(3, 4);
        let l4 = plog(&Residue::new(4, 81), &qq).unwrap().value();
        let l16 = plog(&Residue::new(16, 81), &qq).unwrap().value();
        assert_eq!(l16, (2 * l4) % 81);
    }

    #[test]
    fn plog_rejects_bad_argument() {
        let qq = q(3, 2);
        assert!(plog(&Residue::new(2, 9), &qq).is_err());
    }

    #[test]
    fn plog_is_a_homomorphism() {
        // Exhaustive over all pairs in 1 + pZ up to 3^7; sampled second
        // factor for the larger 5- and 7-power moduli.
        for (p, n, step) in [(3u64, 7u32, 1usize), (5, 4, 7), (7, 3, 7)] {
            let qq = q(p, n);
            let pn = qq.value();
            let elems: Vec<u64> = (0..pn / p).map(|t| 1 + p * t).collect();
            let logs: Vec<u64> = elems
                .iter()
                .map(|&x| plog(&Residue::new(x as i128, pn), &qq).unwrap().value())
                .collect();
            let log_of = |v: u64| logs[((v - 1) / p) as usize];
            for &x in &elems {
                for &y in elems.iter().step_by(step) {
                    let xy = mul_mod(x, y, pn);
                    assert_eq!(
                        log_of(xy),
                        add_mod(log_of(x), log_of(y), pn),
                        "p={p} n={n} x={x} y={y}"
                    );
                }
            }
        }
    }

    #[test]
    fn psqrt_twisted_by_squares() {
        // psqrt(x·y²) = ±psqrt(x)·y, with the sign fixed by the branch class
        // of x·y² mod p.
        let qq = q(5, 4);
        let pn = qq.value();
        let branch = SqrtBranch::canonical(5);
        for x in (1..pn).filter(|&x| x % 5 != 0 && legendre((x % 5) as i64, 5) == 1).step_by(7) {
            for y in (1..pn).filter(|&y| y % 5 != 0).step_by(11) {
                let xy2 = mul_mod(x, mul_mod(y, y, pn), pn);
                let lhs = psqrt(&Residue::new(xy2 as i128, pn), &qq, &branch).unwrap();
                let root_x = psqrt(&Residue::new(x as i128, pn), &qq, &branch).unwrap();
                let prod = mul_mod(root_x, y, pn);
                assert!(
                    lhs == prod || lhs == pn - prod,
                    "x={x} y={y}: {lhs} vs ±{prod}"
                );
                let expect_sign = branch.root_of(xy2 % 5) == Some(prod % 5);
                assert_eq!(lhs == prod, expect_sign);
            }
        }
    }

    #[test]
    fn canonical_branch_has_least_roots() {
        let b = SqrtBranch::canonical(7);
        assert_eq!(b.class_count(), 3);
        assert_eq!(b.root_of(1), Some(1));
        assert_eq!(b.root_of(2), Some(3)); // 3² = 9 ≡ 2 mod 7, and 3 ≤ (7-1)/2
        assert_eq!(b.root_of(4), Some(2));
        assert_eq!(b.root_of(3), None);
    }

    #[test]
    fn psqrt_exact_square() {
        let qq = q(5, 3);
        let mut branch = SqrtBranch::canonical(5);
        branch.root_of[4] = 2;
        let w = psqrt(&Residue::new(4, 125), &qq, &branch).unwrap();
        assert_eq!(w, 2);
    }

    #[test]
    fn psqrt_hensel_lift_example() {
        // sqrt(2) mod 343 in the branch picking 3 mod 7: 3 → 10 → 108
        let qq = q(7, 3);
        let mut branch = SqrtBranch::canonical(7);
        branch.root_of[2] = 3;
        let w = psqrt(&Residue::new(2, 343), &qq, &branch).unwrap();
        assert_eq!(w, 108);
        assert_eq!(mul_mod(w, w, 343), 2);
    }

    #[test]
    fn psqrt_rejects_nonsquares_and_nonunits() {
        let qq = q(7, 2);
        let branch = SqrtBranch::canonical(7);
        assert_eq!(
            psqrt(&Residue::new(3, 49), &qq, &branch),
            Err(Error::NotASquare { value: 3, prime: 7 })
        );
        assert!(psqrt(&Residue::new(7, 49), &qq, &branch).is_err());
    }

    #[test]
    fn psqrt_squares_back_everywhere() {
        for (p, n) in [(3u64, 6u32), (5, 4), (7, 3)] {
            let qq = q(p, n);
            let branch = SqrtBranch::canonical(p);
            for x in 1..qq.value() {
                if x % p != 0 && legendre((x % p) as i64, p) == 1 {
                    let w = psqrt(&Residue::new(x as i128, qq.value()), &qq, &branch).unwrap();
                    assert_eq!(mul_mod(w, w, qq.value()), x);
                    assert_eq!(branch.root_of(x % p), Some(w % p));
                }
            }
        }
    }

    #[test]
    fn psqrt_shift_zero_t_is_psqrt() {
        let qq = q(3, 4);
        let branch = SqrtBranch::canonical(3);
        let u = Residue::new(4, 81);
        let w = psqrt(&u, &qq, &branch).unwrap();
        let s = psqrt_shift(&u, 1, &Residue::new(0, 81), &qq, &branch).unwrap();
        assert_eq!(w, s);
    }

    #[test]
    fn psqrt_shift_matches_mod_p_3kappa() {
        // sqrt(4 + 3) mod 81 vs the expansion; they agree mod 27 = p^(3κ)
        let qq = q(3, 4);
        let branch = SqrtBranch::canonical(3);
        let shifted = psqrt_shift(&Residue::new(4, 81), 1, &Residue::new(1, 81), &qq, &branch).unwrap();
        let direct = psqrt(&Residue::new(7, 81), &qq, &branch).unwrap();
        assert_eq!(shifted % 27, direct % 27);
    }

    #[test]
    fn psqrt_shift_error_order_on_grid() {
        // ord_p(psqrt(u+p^κ t) - psqrt_shift(u, κ, t)) ≥ min(3κ, n), full grid p^n ≤ 5^5
        for (p, n) in [(3u64, 5u32), (5, 5)] {
            let qq = q(p, n);
            let pn = qq.value();
            let branch = SqrtBranch::canonical(p);
            for kappa in 1..=2u32 {
                let want = (3 * kappa).min(n);
                for u in (1..pn).step_by(3) {
                    if u % p == 0 || legendre((u % p) as i64, p) != 1 {
                        continue;
                    }
                    for t in (0..qq.pow(n - kappa)).step_by(5) {
                        let shifted_arg = add_mod(u, mul_mod(qq.pow(kappa), t, pn), pn);
                        if shifted_arg % p == 0 || legendre((shifted_arg % p) as i64, p) != 1 {
                            continue;
                        }
                        let ur = Residue::new(u as i128, pn);
                        let expand = psqrt_shift(&ur, kappa, &Residue::new(t as i128, pn), &qq, &branch).unwrap();
                        let direct = psqrt(&Residue::new(shifted_arg as i128, pn), &qq, &branch).unwrap();
                        let diff = sub_mod(expand, direct, pn);
                        assert!(
                            residue_ord(diff, &qq).at_least(want),
                            "p={p} n={n} κ={kappa} u={u} t={t}: ord(diff) < {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ord_sqrt_diff_matches_ord_of_difference() {
        // Exhaustive for p^n = 3^6 over branch-consistent unit square pairs.
        let qq = q(3, 6);
        let pn = qq.value();
        let branch = SqrtBranch::canonical(3);
        let squares: Vec<u64> = (1..pn)
            .filter(|&x| x % 3 != 0 && legendre((x % 3) as i64, 3) == 1)
            .collect();
        for &u1 in &squares {
            for &u2 in squares.iter().step_by(5) {
                let d = ord_sqrt_diff(
                    &Residue::new(u1 as i128, pn),
                    &Residue::new(u2 as i128, pn),
                    &qq,
                    &branch,
                )
                .unwrap();
                let direct = residue_ord(sub_mod(u1, u2, pn), &qq);
                match direct {
                    Valuation::Exact(v) if v < qq.n() => {
                        assert_eq!(d, Valuation::Exact(v), "u1={u1} u2={u2}")
                    }
                    _ => assert!(d.at_least(qq.n()) || matches!(d, Valuation::Exact(v) if v >= 3)),
                }
            }
        }
    }

    #[test]
    fn ord_sqrt_diff_same_input_reports_at_least_n() {
        let qq = q(3, 4);
        let branch = SqrtBranch::canonical(3);
        let d = ord_sqrt_diff(&Residue::new(4, 81), &Residue::new(4, 81), &qq, &branch).unwrap();
        assert_eq!(d, Valuation::AtLeast(4));
    }

    #[test]
    fn ord_sqrt_diff_one_plus_ps() {
        // ord(sqrt(1) - sqrt(1+p·s)) = 1 for unit s
        let qq = q(5, 4);
        let branch = SqrtBranch::canonical(5);
        for s in [1u64, 2, 3, 4, 6, 7] {
            let u2 = 1 + 5 * s;
            if u2 % 5 == 0 || legendre((u2 % 5) as i64, 5) != 1 {
                continue;
            }
            let d = ord_sqrt_diff(
                &Residue::new(1, 625),
                &Residue::new(u2 as i128, 625),
                &qq,
                &branch,
            )
            .unwrap();
            assert_eq!(d, Valuation::Exact(1), "s={s}");
        }
    }

    #[test]
    fn ord_sqrt_diff_concrete() {
        // ord_3(sqrt(4) - sqrt(16)) = ord_3(4 - 16) = 1 in 3^5
        let qq = q(3, 5);
        let branch = SqrtBranch::canonical(3);
        let d = ord_sqrt_diff(&Residue::new(4, 243), &Residue::new(16, 243), &qq, &branch).unwrap();
        assert_eq!(d, Valuation::Exact(1));
    }

    #[test]
    fn padic_approx_arithmetic() {
        let p = 5u64;
        let x = PadicApprox::new(p, 7, 2, 6).unwrap(); // 7/25
        let y = PadicApprox::new(p, 3, 1, 6).unwrap(); // 3/5
        let s = x.add(&y).unwrap(); // 22/25
        assert_eq!(s.theta(), crate::characters::UnitPhase::new(22, 25));
        let m = x.mul(&y).unwrap(); // 21/125
        assert_eq!(m.theta(), crate::characters::UnitPhase::new(21, 125));
        let d = m.div(&y).unwrap(); // back to 7/25
        assert_eq!(d.theta(), crate::characters::UnitPhase::new(7, 25));
        assert_eq!(x.ord_signed(), Some(-2));
        assert_eq!(PadicApprox::new(p, 50, 2, 6).unwrap().ord_signed(), Some(0));
    }

    #[test]
    fn padic_approx_unit_part() {
        let x = PadicApprox::new(3, 18, 0, 6).unwrap(); // 18 = 2·3²
        assert_eq!(x.ord_signed(), Some(2));
        assert_eq!(x.unit_part().unwrap(), 2);
    }
}
