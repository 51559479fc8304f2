//! Classical complete exponential sums: Ramanujan sums (brute force and the
//! divisor-sum closed form), Kloosterman sums (brute force for any modulus,
//! closed form for prime powers p^n with n ≥ 2), and the reciprocity identity
//! used to split composite moduli into prime-power pieces.

use num_complex::Complex64;

use crate::characters::{theta, PhaseAccumulator, UnitPhase};
use crate::modarith::{
    self, epsilon, gcd, inv, inverse_table, legendre, moebius, mul_mod, sub_mod, EpsilonFactor,
    PrimePowerModulus, Residue,
};
use crate::padic::{psqrt, SqrtBranch};
use crate::{Error, Result};

/// A complete exponential sum evaluated in complex doubles, with the term
/// count and the absolute error budget 10^-12 per term it was summed under.
#[derive(Debug, Clone, Copy)]
pub struct ExpSumValue {
    pub value: Complex64,
    pub term_count: u64,
    pub tolerance: f64,
}

impl ExpSumValue {
    fn from_accumulator(acc: &PhaseAccumulator) -> Self {
        Self {
            value: acc.to_complex(),
            term_count: acc.term_count(),
            tolerance: 1e-12 * acc.term_count() as f64,
        }
    }
}

/// Ramanujan sum S(0, u; c) = Σ*_{a mod c} e(au/c) by direct summation.
pub fn ramanujan_brute(u: i64, c: u64) -> ExpSumValue {
    assert!(c >= 1);
    let mut acc = PhaseAccumulator::new();
    let un = modarith::normalize(u as i128, c);
    for a in 0..c {
        if gcd(a, c) == 1 || c == 1 {
            acc.add(UnitPhase::new(a as i128 * un as i128, c));
        }
    }
    ExpSumValue::from_accumulator(&acc)
}

/// Ramanujan sum by the divisor-sum identity S(0, u; c) = Σ_{d | (u, c)} d·μ(c/d).
pub fn ramanujan_closed(u: i64, c: u64) -> i64 {
    assert!(c >= 1);
    let un = modarith::normalize(u as i128, c);
    let g = if un == 0 { c } else { gcd(un, c) };
    modarith::divisors(g)
        .into_iter()
        .map(|d| d as i64 * moebius(c / d))
        .sum()
}

/// Kloosterman sum S(a, b; m) = Σ*_{u mod m} e((au + b·ū)/m), brute force
/// with exact phases bucketed before a single conversion pass.
pub fn kloosterman_brute(a: i64, b: i64, m: u64) -> ExpSumValue {
    assert!(m >= 1);
    let an = modarith::normalize(a as i128, m);
    let bn = modarith::normalize(b as i128, m);
    let inv_t = inverse_table(m);
    let mut acc = PhaseAccumulator::new();
    if m == 1 {
        acc.add(UnitPhase::ONE);
        return ExpSumValue::from_accumulator(&acc);
    }
    for u in 1..m {
        let ubar = inv_t[u as usize];
        if ubar == 0 {
            continue;
        }
        let num = modarith::add_mod(mul_mod(an, u, m), mul_mod(bn, ubar, m), m);
        acc.add(UnitPhase::new(num as i128, m));
    }
    ExpSumValue::from_accumulator(&acc)
}

/// The exact closed-form decomposition of S(a, b; p^n) for units a, b and
/// n ≥ 2: either 0 (when ab is a non-residue) or
/// p^(n/2) Σ_± ε(±w, p^ρ) θ(±2w/p^n) with w² = ab and ρ = n mod 2.
#[derive(Debug, Clone)]
pub enum KloostermanClosedForm {
    Zero,
    Terms {
        /// Exponent n; the scale is p^(n/2).
        n: u32,
        p: u64,
        /// The two (ε, θ) pairs for w and -w.
        terms: [(EpsilonFactor, UnitPhase); 2],
    },
}

impl KloostermanClosedForm {
    pub fn to_complex(&self) -> Complex64 {
        match self {
            KloostermanClosedForm::Zero => Complex64::new(0.0, 0.0),
            KloostermanClosedForm::Terms { n, p, terms } => {
                let scale = (*p as f64).powf(*n as f64 / 2.0);
                let z: Complex64 = terms
                    .iter()
                    .map(|(e, th)| UnitPhase::from(*e).mul(th).to_complex())
                    .sum();
                scale * z
            }
        }
    }
}

/// Kloosterman closed form per the stationary-phase evaluation: vanishes
/// unless ab is a square unit; otherwise two stationary terms at ±(ab)^(1/2).
///
/// The value does not depend on the branch: negating the root swaps the two
/// ± terms.
pub fn kloosterman_closed_parts(
    a: i64,
    b: i64,
    q: &PrimePowerModulus,
    branch: &SqrtBranch,
) -> Result<KloostermanClosedForm> {
    let (p, n, pn) = (q.p(), q.n(), q.value());
    if n < 2 {
        return Err(Error::InvalidArgument("the closed form requires n ≥ 2".into()));
    }
    let an = modarith::normalize(a as i128, pn);
    let bn = modarith::normalize(b as i128, pn);
    if an % p == 0 || bn % p == 0 {
        return Err(Error::InvalidArgument(format!(
            "kloosterman_closed requires units: a = {a}, b = {b} mod p = {p}"
        )));
    }
    let ab = mul_mod(an, bn, pn);
    if legendre((ab % p) as i64, p) != 1 {
        return Ok(KloostermanClosedForm::Zero);
    }
    let w = psqrt(&Residue::new(ab as i128, pn), q, branch)?;
    let rho = (n % 2) as u8;
    let plus = (
        epsilon(w as i64, p, rho)?,
        theta(2 * w as i128, p, n),
    );
    let minus = (
        epsilon(-(w as i64), p, rho)?,
        theta(-2 * (w as i128), p, n),
    );
    Ok(KloostermanClosedForm::Terms { n, p, terms: [plus, minus] })
}

/// Complex value of the closed form; see [`kloosterman_closed_parts`].
pub fn kloosterman_closed(
    a: i64,
    b: i64,
    q: &PrimePowerModulus,
    branch: &SqrtBranch,
) -> Result<Complex64> {
    Ok(kloosterman_closed_parts(a, b, q, branch)?.to_complex())
}

/// Fast per-modulus evaluation context: inverse, square-root, phase and
/// closed-term tables shared by grid sweeps over one p^n.
pub struct KloostermanTables {
    q: PrimePowerModulus,
    inv: Vec<u64>,
    phases: Vec<Complex64>,
    /// Branch root of each square unit mod p^n, 0 otherwise.
    sqrt: Vec<u64>,
    /// Closed value of the ± pair for each root w (indexed by w), scaled by p^(n/2).
    closed_by_root: Vec<Complex64>,
}

impl KloostermanTables {
    pub fn new(q: &PrimePowerModulus, branch: &SqrtBranch) -> Self {
        let (p, n, pn) = (q.p(), q.n(), q.value());
        let inv = inverse_table(pn);
        let phases: Vec<Complex64> = (0..pn)
            .map(|x| {
                let angle = 2.0 * std::f64::consts::PI * x as f64 / pn as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        let mut sqrt = vec![0u64; pn as usize];
        for w in 1..pn {
            if w % p == 0 {
                continue;
            }
            let y = mul_mod(w, w, pn);
            if branch.root_of(y % p) == Some(w % p) {
                sqrt[y as usize] = w;
            }
        }
        let rho = (n % 2) as u8;
        let mut closed_by_root = vec![Complex64::new(0.0, 0.0); pn as usize];
        for w in 1..pn {
            if w % p == 0 {
                continue;
            }
            let e_plus = epsilon(w as i64, p, rho).expect("unit").to_complex();
            let e_minus = epsilon(-(w as i64), p, rho).expect("unit").to_complex();
            closed_by_root[w as usize] = e_plus * phases[mul_mod(2, w, pn) as usize]
                + e_minus * phases[sub_mod(0, mul_mod(2, w, pn), pn) as usize];
        }
        Self {
            q: *q,
            inv,
            phases,
            sqrt,
            closed_by_root,
        }
    }

    pub fn q(&self) -> &PrimePowerModulus {
        &self.q
    }

    #[inline]
    pub fn inv_of(&self, u: u64) -> u64 {
        self.inv[u as usize]
    }

    #[inline]
    pub fn phase(&self, x: u64) -> Complex64 {
        self.phases[x as usize]
    }

    /// Branch square root of a residue, if it is a square unit.
    #[inline]
    pub fn sqrt_of(&self, x: u64) -> Option<u64> {
        let w = self.sqrt[(x % self.q.value()) as usize];
        (w != 0).then_some(w)
    }

    /// Brute-force S(a, b; p^n) in doubles (phase-table route, no sqrt data).
    pub fn brute(&self, a: u64, b: u64) -> Complex64 {
        let pn = self.q.value();
        let mut counts = vec![0u32; pn as usize];
        for u in 1..pn {
            let ubar = self.inv[u as usize];
            if ubar == 0 {
                continue;
            }
            let num = modarith::add_mod(mul_mod(a, u, pn), mul_mod(b, ubar, pn), pn);
            counts[num as usize] += 1;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, &cnt) in counts.iter().enumerate() {
            if cnt > 0 {
                acc += self.phases[x] * cnt as f64;
            }
        }
        acc
    }

    /// Closed-form S(a, b; p^n) for units a, b, divided by p^(n/2);
    /// i.e. the unimodular pair Σ_± ε θ, or 0.
    #[inline]
    pub fn closed_normalized(&self, a: u64, b: u64) -> Complex64 {
        let pn = self.q.value();
        let ab = mul_mod(a % pn, b % pn, pn);
        match self.sqrt_of(ab) {
            Some(w) => self.closed_by_root[w as usize],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Closed-form S(a, b; p^n) including the p^(n/2) scale.
    pub fn closed(&self, a: u64, b: u64) -> Complex64 {
        let scale = (self.q.p() as f64).powf(self.q.n() as f64 / 2.0);
        scale * self.closed_normalized(a, b)
    }
}

/// The reciprocity identity that splits composite-modulus phases into
/// prime-power pieces:
/// for gcd(x, c·p^j) = 1,
/// e(m·x̄ / (c p^j)) = e(m c̄ x̄ / p^j) · e(m (p^j)̄ x̄ / c),
/// with each bar the inverse to the modulus of its own factor.
///
/// Returns the exact-phase comparison (both sides as reduced fractions).
pub fn verify_reciprocity(m: i64, x: u64, c: u64, q_pow: u64) -> Result<bool> {
    if c == 0 || q_pow == 0 {
        return Err(Error::InvalidArgument("moduli must be positive".into()));
    }
    let big = c
        .checked_mul(q_pow)
        .ok_or_else(|| Error::PrecisionLoss("c · p^j overflows".into()))?;
    if gcd(x % big, big) != 1 {
        return Err(Error::InvalidArgument(format!("gcd({x}, {big}) > 1")));
    }
    if gcd(c, q_pow) != 1 {
        return Err(Error::InvalidArgument(format!("gcd(c, p^j) = gcd({c}, {q_pow}) > 1")));
    }
    let lhs = UnitPhase::new(m as i128 * inv(x % big, big)? as i128, big);
    let rhs_p = UnitPhase::new(
        m as i128 * mul_mod(inv(c % q_pow, q_pow)?, inv(x % q_pow, q_pow)?, q_pow) as i128,
        q_pow,
    );
    let rhs_c = if c == 1 {
        UnitPhase::ONE
    } else {
        UnitPhase::new(
            m as i128 * mul_mod(inv(q_pow % c, c)?, inv(x % c, c)?, c) as i128,
            c,
        )
    };
    Ok(lhs == rhs_p.mul(&rhs_c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modarith::euler_phi;

    fn q(p: u64, n: u32) -> PrimePowerModulus {
        PrimePowerModulus::new(p, n).unwrap()
    }

    #[test]
    fn ramanujan_brute_examples() {
        // S(0, 1; 6) = μ(6) = 1 from the 2-term sum over {1, 5}
        let s = ramanujan_brute(1, 6);
        assert!((s.value.re - 1.0).abs() < s.tolerance && s.value.im.abs() < s.tolerance);
        // S(0, 9; 9) = φ(9) = 6
        let s = ramanujan_brute(9, 9);
        assert!((s.value.re - 6.0).abs() < s.tolerance);
        // S(0, 3; 9) = -3
        let s = ramanujan_brute(3, 9);
        assert!((s.value.re + 3.0).abs() < s.tolerance);
    }

    #[test]
    fn ramanujan_closed_examples() {
        assert_eq!(ramanujan_closed(3, 9), -3);
        assert_eq!(ramanujan_closed(0, 9), 6);
        for c in [2u64, 6, 30, 210] {
            assert_eq!(ramanujan_closed(1, c), moebius(c), "c={c}");
        }
    }

    #[test]
    fn ramanujan_brute_matches_closed() {
        // all (u, c) for c ≤ 60, then a sparse sweep up to 10^4
        for c in 1..=60u64 {
            for u in 0..c.min(40) {
                let b = ramanujan_brute(u as i64, c);
                let cl = ramanujan_closed(u as i64, c) as f64;
                assert!(
                    (b.value.re - cl).abs() <= b.tolerance.max(1e-7) && b.value.im.abs() <= b.tolerance.max(1e-7),
                    "u={u} c={c}: brute {} vs closed {cl}",
                    b.value.re
                );
            }
        }
        for c in (61..10_000u64).step_by(997) {
            for u in [0i64, 1, 17, c as i64 / 2] {
                let b = ramanujan_brute(u, c);
                let cl = ramanujan_closed(u, c) as f64;
                assert!((b.value.re - cl).abs() <= b.tolerance.max(1e-6), "u={u} c={c}");
            }
        }
    }

    #[test]
    fn kloosterman_brute_examples() {
        // S(0, 0; m) = φ(m)
        for m in [6u64, 9, 25, 49] {
            let s = kloosterman_brute(0, 0, m);
            assert!((s.value.re - euler_phi(m) as f64).abs() < s.tolerance);
        }
        // S(1, 1; 9) = 6 cos(4π/9)
        let s = kloosterman_brute(1, 1, 9);
        let expect = 6.0 * (4.0 * std::f64::consts::PI / 9.0).cos();
        assert!((s.value.re - expect).abs() < 1e-9 && s.value.im.abs() < 1e-9);
        assert!((s.value.re - 1.04189).abs() < 1e-5);
        // S(1, 2; 25) = 0: 2 is a non-residue mod 5
        let s = kloosterman_brute(1, 2, 25);
        assert!(s.value.norm() < 1e-9);
    }

    #[test]
    fn kloosterman_closed_examples() {
        let branch = SqrtBranch::canonical(3);
        let v = kloosterman_closed(1, 1, &q(3, 2), &branch).unwrap();
        let expect = 6.0 * (4.0 * std::f64::consts::PI / 9.0).cos();
        assert!((v.re - expect).abs() < 1e-9 && v.im.abs() < 1e-12);

        let branch5 = SqrtBranch::canonical(5);
        let v = kloosterman_closed(1, 2, &q(5, 2), &branch5).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));

        // odd exponent: S(1, 1; 27) against brute force
        let v = kloosterman_closed(1, 1, &q(3, 3), &branch).unwrap();
        let b = kloosterman_brute(1, 1, 27);
        assert!((v - b.value).norm() < 1e-9, "closed {v} brute {}", b.value);

        assert!(kloosterman_closed(3, 1, &q(3, 2), &branch).is_err());
        assert!(kloosterman_closed(1, 1, &q(3, 1), &branch).is_err());
    }

    #[test]
    fn kloosterman_closed_matches_brute_on_grids() {
        for (p, n) in [(3u64, 2u32), (3, 4), (5, 2), (5, 3), (7, 2)] {
            let qq = q(p, n);
            let branch = SqrtBranch::canonical(p);
            let tables = KloostermanTables::new(&qq, &branch);
            let tol = 1e-6 * (p as f64).powf(n as f64 / 2.0);
            for a in (1..qq.value()).filter(|a| a % p != 0).step_by(2) {
                for b in (1..qq.value()).filter(|b| b % p != 0).step_by(3) {
                    let brute = tables.brute(a, b);
                    let closed = tables.closed(a, b);
                    assert!(
                        (brute - closed).norm() <= tol,
                        "p={p} n={n} a={a} b={b}: {brute} vs {closed}"
                    );
                }
            }
        }
    }

    #[test]
    fn kloosterman_closed_branch_invariant() {
        // all 2 branches at p = 3 and all 4 at p = 5, full unit grid at n = 3
        for p in [3u64, 5] {
            let qq = q(p, 3);
            let branches = SqrtBranch::all_branches(p);
            assert_eq!(branches.len(), 1 << ((p - 1) / 2));
            let reference = KloostermanTables::new(&qq, &branches[0]);
            for branch in &branches[1..] {
                let tables = KloostermanTables::new(&qq, branch);
                for a in (1..qq.value()).filter(|a| a % p != 0) {
                    for b in (1..qq.value()).filter(|b| b % p != 0).step_by(2) {
                        let d = (reference.closed(a, b) - tables.closed(a, b)).norm();
                        assert!(d < 1e-9, "p={p} a={a} b={b} differs across branches by {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn kloosterman_weil_magnitude() {
        for (p, n) in [(3u64, 2u32), (3, 5), (5, 3), (7, 2)] {
            let qq = q(p, n);
            let branch = SqrtBranch::canonical(p);
            let bound = 2.0 * (p as f64).powf(n as f64 / 2.0);
            for a in (1..qq.value()).filter(|a| a % p != 0).step_by(5) {
                for b in (1..qq.value()).filter(|b| b % p != 0).step_by(7) {
                    let v = kloosterman_closed(a as i64, b as i64, &qq, &branch).unwrap();
                    assert!(v.norm() <= bound + 1e-9);
                }
            }
        }
    }

    #[test]
    fn kloosterman_twisted_multiplicativity() {
        // S(a, b; c·p^n) = S(a·(p^n)̄, b·(p^n)̄; c) · S(a·c̄, b·c̄; p^n) for (c, p) = 1
        for (c, p, n) in [(2u64, 3u64, 2u32), (5, 3, 2), (4, 5, 2), (7, 3, 3)] {
            let pn = p.pow(n);
            let m = c * pn;
            let pn_bar_c = inv(pn % c, c).unwrap();
            let c_bar_pn = inv(c % pn, pn).unwrap();
            for a in 1..=6i64 {
                for b in 1..=6i64 {
                    let whole = kloosterman_brute(a, b, m).value;
                    let part_c = kloosterman_brute(
                        a * pn_bar_c as i64,
                        b * pn_bar_c as i64,
                        c,
                    )
                    .value;
                    let part_p = kloosterman_brute(
                        a * c_bar_pn as i64,
                        b * c_bar_pn as i64,
                        pn,
                    )
                    .value;
                    assert!(
                        (whole - part_c * part_p).norm() < 1e-6,
                        "c={c} p^n={pn} a={a} b={b}: {whole} vs {}",
                        part_c * part_p
                    );
                }
            }
        }
    }

    #[test]
    fn reciprocity_examples() {
        // c = 1: trivial
        assert!(verify_reciprocity(5, 7, 1, 27).unwrap());
        // (m, x, c, p^n) = (1, 1, 2, 9): 1/18 = 5/9 + 1/2 - 1 mod 1
        assert!(verify_reciprocity(1, 1, 2, 9).unwrap());
        // coprimality failure
        assert!(verify_reciprocity(1, 3, 2, 9).is_err());
        assert!(verify_reciprocity(1, 1, 3, 9).is_err());
    }

    #[test]
    fn reciprocity_grid() {
        let mut checked = 0u32;
        for c in [1u64, 2, 4, 5, 7, 8, 11] {
            for q_pow in [9u64, 27, 25, 125, 49] {
                if gcd(c, q_pow) != 1 {
                    continue;
                }
                for x in 1..(c * q_pow) {
                    if gcd(x, c * q_pow) != 1 {
                        continue;
                    }
                    for m in [1i64, 2, 7, -3] {
                        assert!(verify_reciprocity(m, x, c, q_pow).unwrap(), "m={m} x={x} c={c} q={q_pow}");
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 10_000, "grid too small: {checked}");
    }
}
