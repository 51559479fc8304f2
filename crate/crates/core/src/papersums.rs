//! Composite character sums built from χ-twisted Kloosterman products:
//!
//! - `G(m, ℓ, c) = (1/q) Σ_u χ(u) S(uc̄, mc̄; p^n) S(uc̄, ℓc̄; p^r)` in four
//!   independently computable forms (Fourier-expanded triple sum, τ-normalized
//!   double sum, closed-form Kloosterman product, and full closed form via
//!   stationary phase);
//! - `𝒞(m̃, ℓ₁, ℓ₂) = Σ_u G(u, ℓ₁, c) conj(G(u, ℓ₂, c)) e(m̃ d̄ u / p^n)`
//!   with its exact m̃ = 0 evaluation and its support/bound law;
//! - `𝒦(m̃)`, the d·p^n-modulus sum that factors as a unit phase times 𝒞.
//!
//! The closed form of G involves two bookkeeping conventions (the lift of α
//! mod p^n and the square-root branch); a calibration routine selects a
//! convention empirically at the smallest grid cell, and the value turns out
//! to be invariant under both, which the tests assert.

use num_complex::Complex64;

use crate::characters::{theta, MultChar, PhaseAccumulator, UnitPhase};
use crate::expsums::ramanujan_closed;
use crate::modarith::{
    self, add_mod, epsilon, gcd, inv, inverse_table, legendre, mul_mod, sub_mod,
};
use crate::padic::{max_prec, sqrt_mod_prime_power, PadicApprox, SqrtBranch};
use crate::statphase::{direct_sum, reduce_quadratic, PhaseData, SdtParams};
use crate::{Error, Result};

/// Parameters of G(m, ℓ, c) for a fixed primitive χ mod p^n.
#[derive(Clone, Copy)]
pub struct GSumParams<'a> {
    pub chi: &'a MultChar,
    /// Modulus exponent of the ℓ-Kloosterman factor, 2 ≤ r ≤ n.
    pub r: u32,
    /// Auxiliary modulus coprime to p.
    pub c: u64,
    pub m: i64,
    pub ell: i64,
}

impl<'a> GSumParams<'a> {
    pub fn new(chi: &'a MultChar, r: u32, c: u64, m: i64, ell: i64) -> Result<Self> {
        if c == 0 || gcd(c, chi.p()) != 1 {
            return Err(Error::InvalidArgument(format!(
                "c = {c} must be positive and coprime to p = {}",
                chi.p()
            )));
        }
        if r < 2 || r > chi.n() {
            return Err(Error::InvalidArgument(format!(
                "need 2 ≤ r ≤ n, got r = {r}, n = {}",
                chi.n()
            )));
        }
        Ok(Self { chi, r, c, m, ell })
    }

    /// Whether (n, r) sit in the working regime n/2 ≤ r < n of the main
    /// estimate (not required for evaluation).
    pub fn in_main_regime(&self) -> bool {
        let (n, r) = (self.chi.n(), self.r);
        n <= 2 * r && r < n
    }
}

/// Parameters of 𝒞(m̃, ℓ₁, ℓ₂) (and 𝒦) on top of a G configuration.
#[derive(Clone, Copy)]
pub struct CSumParams<'a> {
    pub chi: &'a MultChar,
    pub r: u32,
    pub c: u64,
    /// Divisor of c entering through the m̃-phase.
    pub d: u64,
    pub m_tilde: i64,
    pub ell1: i64,
    pub ell2: i64,
}

impl<'a> CSumParams<'a> {
    pub fn new(chi: &'a MultChar, r: u32, c: u64, d: u64, m_tilde: i64, ell1: i64, ell2: i64) -> Result<Self> {
        GSumParams::new(chi, r, c, ell1, ell2)?;
        if d == 0 || c % d != 0 {
            return Err(Error::InvalidArgument(format!("d = {d} must divide c = {c}")));
        }
        Ok(Self { chi, r, c, d, m_tilde, ell1, ell2 })
    }
}

/// Cost estimates (summand evaluations) for budget enforcement.
pub mod cost {
    pub fn g_def(pn: u64, pr: u64) -> u64 {
        pn.saturating_mul(pn).saturating_mul(pr)
    }
    pub fn g_kloosterman(pn: u64) -> u64 {
        4 * pn
    }
    pub fn g_vector(pn: u64) -> u64 {
        pn.saturating_mul(pn)
    }
    pub fn c_def(pn: u64) -> u64 {
        2 * g_vector(pn) + pn
    }
}

/// The pre-transformation Fourier-expanded form of G: the literal triple sum
/// (1/q) Σ_u Σ*_b Σ*_a χ(u) e(bu/p^n + m c̄ h̄/p^n) e(-c̄ ℓ ā/p^r)
/// with h = a p^(n-r) + b c, evaluated with exact phases.
///
/// Pairs where h is not a unit (possible only at r = n) contribute nothing
/// after u-summation, by character orthogonality, and are skipped.
pub fn g_def(params: &GSumParams) -> Result<Complex64> {
    let chi = params.chi;
    let (p, n, pn) = (chi.p(), chi.n(), chi.modulus());
    let (r, c) = (params.r, params.c);
    let pr = p.pow(r);
    let pnr = p.pow(n - r);
    let cbar_n = inv(c % pn, pn)?;
    let cbar_r = inv(c % pr, pr)?;
    let inv_n = inverse_table(pn);
    let inv_r = inverse_table(pr);
    let m = modarith::normalize(params.m as i128, pn);
    let ell = modarith::normalize(params.ell as i128, pr);
    let mut acc = PhaseAccumulator::new();
    for b in (1..pn).filter(|&b| b % p != 0) {
        for a in (1..pr).filter(|&a| a % p != 0) {
            let h = add_mod(mul_mod(a, pnr, pn), mul_mod(b, c % pn, pn), pn);
            if h % p == 0 {
                continue;
            }
            let hbar = inv_n[h as usize];
            let abar = inv_r[a as usize];
            // e(m c̄ h̄ / p^n) e(-ℓ c̄ ā / p^r)
            let fixed = theta(mul_mod(mul_mod(m, cbar_n, pn), hbar, pn) as i128, p, n).mul(
                &theta(-(mul_mod(mul_mod(ell, cbar_r, pr), abar, pr) as i128), p, r),
            );
            for u in (1..pn).filter(|&u| u % p != 0) {
                let term = chi
                    .eval_unit(u)
                    .mul(&theta(mul_mod(b, u, pn) as i128, p, n))
                    .mul(&fixed);
                acc.add(term);
            }
        }
    }
    Ok(acc.to_complex() / pn as f64)
}

/// The τ-normalized double sum of the splitting step:
/// (1/τ(χ̄)) Σ*_b χ̄(b) Σ*_a e(m c̄ h̄/p^n) e(-c̄ ℓ ā/p^r).
///
/// Differs from [`g_def`] by exactly χ(-1) (the Fourier step the derivation
/// performs swaps τ(χ)/q for 1/τ(χ̄), and τ(χ)τ(χ̄) = χ(-1)·q).
pub fn g_tau_oracle(params: &GSumParams) -> Result<Complex64> {
    let chi = params.chi;
    let (p, n, pn) = (chi.p(), chi.n(), chi.modulus());
    let (r, c) = (params.r, params.c);
    let pr = p.pow(r);
    let pnr = p.pow(n - r);
    let cbar_n = inv(c % pn, pn)?;
    let cbar_r = inv(c % pr, pr)?;
    let inv_n = inverse_table(pn);
    let inv_r = inverse_table(pr);
    let m = modarith::normalize(params.m as i128, pn);
    let ell = modarith::normalize(params.ell as i128, pr);
    let conj_chi = chi.conj_char()?;
    let mut acc = PhaseAccumulator::new();
    for b in (1..pn).filter(|&b| b % p != 0) {
        let chib = conj_chi.eval_unit(b);
        for a in (1..pr).filter(|&a| a % p != 0) {
            let h = add_mod(mul_mod(a, pnr, pn), mul_mod(b, c % pn, pn), pn);
            if h % p == 0 {
                continue;
            }
            let term = chib
                .mul(&theta(mul_mod(mul_mod(m, cbar_n, pn), inv_n[h as usize], pn) as i128, p, n))
                .mul(&theta(-(mul_mod(mul_mod(ell, cbar_r, pr), inv_r[a as usize], pr) as i128), p, r));
            acc.add(term);
        }
    }
    Ok(acc.to_complex() / conj_chi.gauss_sum())
}

/// G via closed-form Kloosterman values, O(p^n) terms with exact phases:
/// (1/q) Σ_v χ(v) S(vc̄, mc̄; p^n) S(vc̄, ℓc̄; p^r).
pub fn g_kloosterman(params: &GSumParams) -> Result<Complex64> {
    let chi = params.chi;
    let (p, n, pn) = (chi.p(), chi.n(), chi.modulus());
    let (r, c) = (params.r, params.c);
    let pr = p.pow(r);
    let m = modarith::normalize(params.m as i128, pn);
    let ell = modarith::normalize(params.ell as i128, pr);
    if m % p == 0 || ell % p == 0 {
        // either Kloosterman factor vanishes identically (n, r ≥ 2)
        return Ok(Complex64::new(0.0, 0.0));
    }
    let branch = SqrtBranch::canonical(p);
    let rho1 = (n % 2) as u8;
    let rho2 = (r % 2) as u8;
    let cbar2_n = {
        let cb = inv(c % pn, pn)?;
        mul_mod(cb, cb, pn)
    };
    let cbar2_r = {
        let cb = inv(c % pr, pr)?;
        mul_mod(cb, cb, pr)
    };
    let lm = legendre(m as i64, p);
    let ll = legendre(ell as i64, p);
    let mut acc = PhaseAccumulator::new();
    for v in (1..pn).filter(|&v| v % p != 0) {
        let lv = legendre(v as i64, p);
        if lv != lm || lv != ll {
            continue;
        }
        let w1 = sqrt_mod_prime_power(mul_mod(mul_mod(v, m, pn), cbar2_n, pn), p, n, &branch)?;
        let w2 = sqrt_mod_prime_power(mul_mod(mul_mod(v % pr, ell, pr), cbar2_r, pr), p, r, &branch)?;
        let chiv = chi.eval_unit(v);
        for s1 in [1i64, -1] {
            let e1 = UnitPhase::from(epsilon(s1 * w1 as i64, p, rho1)?)
                .mul(&theta(s1 as i128 * 2 * w1 as i128, p, n));
            for s2 in [1i64, -1] {
                let e2 = UnitPhase::from(epsilon(s2 * w2 as i64, p, rho2)?)
                    .mul(&theta(s2 as i128 * 2 * w2 as i128, p, r));
                acc.add(chiv.mul(&e1).mul(&e2));
            }
        }
    }
    let scale = (p as f64).powf((n + r) as f64 / 2.0) / pn as f64;
    Ok(scale * acc.to_complex())
}

/// Bulk evaluator for G(·, ℓ, c) over a whole residue ring, sharing phase,
/// square-root and ε tables per (χ, r, c). Used by the 𝒞 and 𝒦 sums, which
/// need all p^n values of the first argument.
pub struct GEvaluator<'a> {
    pub chi: &'a MultChar,
    pub r: u32,
    pub c: u64,
    pn: u64,
    pr: u64,
    p: u64,
    cbar2_n: u64,
    cbar2_r: u64,
    sqrt_n: Vec<u64>,
    sqrt_r: Vec<u64>,
    pair_n: Vec<Complex64>,
    pair_r: Vec<Complex64>,
    chi_c: Vec<Complex64>,
    scale: f64,
}

impl<'a> GEvaluator<'a> {
    pub fn new(chi: &'a MultChar, r: u32, c: u64) -> Result<Self> {
        GSumParams::new(chi, r, c, 1, 1)?;
        let (p, n, pn) = (chi.p(), chi.n(), chi.modulus());
        let pr = p.pow(r);
        let branch = SqrtBranch::canonical(p);
        let build_sqrt = |modulus: u64| -> Vec<u64> {
            let mut t = vec![0u64; modulus as usize];
            for w in 1..modulus {
                let y = mul_mod(w, w, modulus);
                if w % p != 0 && branch.root_of(y % p) == Some(w % p) {
                    t[y as usize] = w;
                }
            }
            t
        };
        let build_pair = |modulus: u64, e: u32| -> Vec<Complex64> {
            let rho = (e % 2) as u8;
            let mut t = vec![Complex64::new(0.0, 0.0); modulus as usize];
            for w in 1..modulus {
                if w % p == 0 {
                    continue;
                }
                let plus = epsilon(w as i64, p, rho).expect("unit").to_complex()
                    * theta(2 * w as i128, p, e).to_complex();
                let minus = epsilon(-(w as i64), p, rho).expect("unit").to_complex()
                    * theta(-2 * (w as i128), p, e).to_complex();
                t[w as usize] = plus + minus;
            }
            t
        };
        let cbar_n = inv(c % pn, pn)?;
        let cbar_r = inv(c % pr, pr)?;
        let chi_c: Vec<Complex64> = (0..pn)
            .map(|v| match chi.eval(v as i64) {
                Some(ph) => ph.to_complex(),
                None => Complex64::new(0.0, 0.0),
            })
            .collect();
        Ok(Self {
            chi,
            r,
            c,
            pn,
            pr,
            p,
            cbar2_n: mul_mod(cbar_n, cbar_n, pn),
            cbar2_r: mul_mod(cbar_r, cbar_r, pr),
            sqrt_n: build_sqrt(pn),
            sqrt_r: build_sqrt(pr),
            pair_n: build_pair(pn, n),
            pair_r: build_pair(pr, r),
            chi_c,
            scale: (p as f64).powf((n + r) as f64 / 2.0) / pn as f64,
        })
    }

    /// The ℓ-dependent inner weights B(v) = χ(v) · (ℓ-Kloosterman pair at v).
    fn weights(&self, ell: i64) -> Vec<Complex64> {
        let ell = modarith::normalize(ell as i128, self.pr);
        let mut b = vec![Complex64::new(0.0, 0.0); self.pn as usize];
        if ell % self.p == 0 {
            return b;
        }
        let k = mul_mod(ell, self.cbar2_r, self.pr);
        let mut vr = 0u64; // v·k mod p^r, advanced additively
        for v in 0..self.pn {
            if v > 0 {
                vr += k;
                if vr >= self.pr {
                    vr -= self.pr;
                }
            }
            if v % self.p == 0 {
                continue;
            }
            let w = self.sqrt_r[vr as usize];
            if w != 0 {
                b[v as usize] = self.chi_c[v as usize] * self.pair_r[w as usize];
            }
        }
        b
    }

    /// G(m, ℓ, c) at a single point.
    pub fn g(&self, m: i64, ell: i64) -> Complex64 {
        let m = modarith::normalize(m as i128, self.pn);
        if m % self.p == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let b = self.weights(ell);
        self.g_with_weights(&b, m)
    }

    fn g_with_weights(&self, b: &[Complex64], m: u64) -> Complex64 {
        let k = mul_mod(m, self.cbar2_n, self.pn);
        let mut vm = 0u64;
        let mut acc = Complex64::new(0.0, 0.0);
        for v in 0..self.pn {
            if v > 0 {
                vm += k;
                if vm >= self.pn {
                    vm -= self.pn;
                }
            }
            let bv = b[v as usize];
            if bv.re == 0.0 && bv.im == 0.0 {
                continue;
            }
            let w = self.sqrt_n[vm as usize];
            if w != 0 {
                acc += bv * self.pair_n[w as usize];
            }
        }
        self.scale * acc
    }

    /// G(u, ℓ, c) for every u mod p^n (index = u; zero at p | u).
    pub fn g_vector(&self, ell: i64) -> Vec<Complex64> {
        let b = self.weights(ell);
        (0..self.pn)
            .map(|u| {
                if u % self.p == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    self.g_with_weights(&b, u)
                }
            })
            .collect()
    }
}

/// Convention knobs the closed form of G needs pinned: the lift of α from
/// mod p^(n-1) to mod p^n, and the global square-root branch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClosedConvention {
    /// α_lift = α + shift · p^(n-1).
    pub alpha_shift: u64,
    /// Use the all-classes-negated branch instead of the canonical one.
    pub negate_branch: bool,
}

impl ClosedConvention {
    pub fn branch(&self, p: u64) -> SqrtBranch {
        let b = SqrtBranch::canonical(p);
        if self.negate_branch {
            b.negated()
        } else {
            b
        }
    }

    pub fn alpha_lift(&self, chi: &MultChar) -> u64 {
        let pn1 = chi.modulus() / chi.p();
        (chi.alpha_lift() + self.alpha_shift * pn1) % chi.modulus()
    }
}

/// Closed-form evaluation of G(m, ℓ, c) for m, ℓ square units, by the
/// quadratic stationary-phase reduction carried out symbolically.
///
/// After opening both Kloosterman factors, each sign pair (σ₁, σ₂) runs over
/// the square-unit classes u with the phase derivative
/// F(u) = α + σ₁ w₁(u) + σ₂ w₂(u) p^(n-r), where w₁ = (umc̄²)_{1/2} and
/// w₂ = (uℓc̄²)_{1/2} in the chosen branch. Classes with F ≢ 0 mod p
/// contribute nothing (the nondegenerate ones have no stationary point, the
/// degenerate ones die under the linear reduction). Each class with
/// F ≡ 0 mod p Hensel-refines to the unique root u* of F mod p^n, where the
/// quadratic Gauss weight trivializes and the contribution collapse to
///
///   p^(r/2) χ(u*) ε(σ₁w₁(u*), p^ρ₁) ε(2̄(φ₂(u*))₀, p^ρ₁) ε(σ₂w₂(u*), p^ρ₂)
///          θ(2σ₁w₁(u*)/p^n + 2σ₂w₂(u*)/p^r).
///
/// Since only one σ₁ admits stationary classes and σ₁w₁(u*) ≡ -α, the ε-pair
/// at p^ρ₁ always multiplies out to (-1/p)^ρ₁; the α-lift and the branch can
/// change the bookkeeping but never the value.
///
/// Classes where F and the φ₂ unit part vanish together (possible only at
/// r = n) fall back to literal summation over that class.
pub fn g_closed(params: &GSumParams, branch: &SqrtBranch, alpha_lift: u64) -> Result<Complex64> {
    let chi = params.chi;
    let (p, n, pn) = (chi.p(), chi.n(), chi.modulus());
    let (r, c) = (params.r, params.c);
    let m = modarith::normalize(params.m as i128, pn);
    let ell = modarith::normalize(params.ell as i128, pn);
    if m % p == 0 || legendre(m as i64, p) != 1 {
        return Err(Error::NotASquare { value: m, prime: p });
    }
    if ell % p == 0 || legendre(ell as i64, p) != 1 {
        return Err(Error::NotASquare { value: ell, prime: p });
    }
    let iota: u32 = if p == 3 { 1 } else { 0 };
    if (n + iota).div_ceil(3) > n / 2 {
        // the quadratic expansion is exact at no admissible step (only p = 3,
        // n = 3 in range), and the reduction demonstrably fails there
        return Err(Error::RegimeViolation(format!(
            "closed form needs a step κ with 3κ ≥ n + ι and 2κ ≤ n; none exists at p = {p}, n = {n}"
        )));
    }
    let rho1 = (n % 2) as u8;
    let rho2 = (r % 2) as u8;
    let pnr = p.pow(n - r) % pn;
    let cbar = inv(c % pn, pn)?;
    let cbar2 = mul_mod(cbar, cbar, pn);
    let mc2 = mul_mod(m, cbar2, pn);
    let lc2 = mul_mod(ell, cbar2, pn);
    let alpha = alpha_lift % pn;

    // F(u) and F'(u) at full precision, given the branch roots at u.
    let roots = |u: u64| -> Result<(u64, u64)> {
        Ok((
            sqrt_mod_prime_power(mul_mod(u, mc2, pn), p, n, branch)?,
            sqrt_mod_prime_power(mul_mod(u, lc2, pn), p, n, branch)?,
        ))
    };
    let f_of = |u: u64, w1: u64, w2: u64, s1: u64, s2: u64| -> u64 {
        let _ = u;
        let mut f = alpha;
        f = add_mod(f, mul_mod(s1, w1, pn), pn);
        f = add_mod(f, mul_mod(s2, mul_mod(w2, pnr, pn), pn), pn);
        f
    };
    // unit part of -φ₂ mod p: α/u² + σ₁(mc̄²)²/(2w₁³) + σ₂(ℓc̄²)²p^(n-r)/(2w₂³)
    let bracket = |u: u64, w1: u64, w2: u64, s1: u64, s2: u64| -> Result<u64> {
        let ub = inv(u % p, p)?;
        let mut acc = mul_mod(alpha % p, mul_mod(ub, ub, p), p);
        let w1_3 = mul_mod(mul_mod(w1 % p, w1 % p, p), w1 % p, p);
        let t1 = mul_mod(
            mul_mod(mul_mod(mc2 % p, mc2 % p, p), inv(mul_mod(2, w1_3, p), p)?, p),
            s1 % p,
            p,
        );
        acc = add_mod(acc, t1, p);
        if r == n {
            let w2_3 = mul_mod(mul_mod(w2 % p, w2 % p, p), w2 % p, p);
            let t2 = mul_mod(
                mul_mod(mul_mod(lc2 % p, lc2 % p, p), inv(mul_mod(2, w2_3, p), p)?, p),
                s2 % p,
                p,
            );
            acc = add_mod(acc, t2, p);
        }
        Ok(acc)
    };

    let lm = legendre(m as i64, p);
    let mut acc = PhaseAccumulator::new();
    let mut fallback = Complex64::new(0.0, 0.0);
    for s1_sign in [1i64, -1] {
        for s2_sign in [1i64, -1] {
            let s1 = modarith::normalize(s1_sign as i128, pn);
            let s2 = modarith::normalize(s2_sign as i128, pn);
            for u0 in (1..p).filter(|&u0| legendre(u0 as i64, p) == lm) {
                let (w1_0, w2_0) = roots(u0)?;
                if f_of(u0, w1_0, w2_0, s1, s2) % p != 0 {
                    continue; // no stationary point in this class
                }
                let b0 = bracket(u0, w1_0, w2_0, s1, s2)?;
                // F'(u) = σ₁mc̄²/(2w₁) + σ₂ℓc̄²p^(n-r)/(2w₂) mod p
                let fp0 = {
                    let t1 = mul_mod(mul_mod(mc2 % p, inv(mul_mod(2, w1_0 % p, p), p)?, p), s1 % p, p);
                    let t2 = if r == n {
                        mul_mod(mul_mod(lc2 % p, inv(mul_mod(2, w2_0 % p, p), p)?, p), s2 % p, p)
                    } else {
                        0
                    };
                    add_mod(t1, t2, p)
                };
                if b0 == 0 || fp0 == 0 {
                    // no reduction applies on this class: sum it literally
                    for u in (u0..pn).step_by(p as usize) {
                        let (w1, w2) = roots(u)?;
                        fallback += psi_value(chi, p, n, r, s1_sign, s2_sign, u, w1, w2, rho1, rho2)?.to_complex();
                    }
                    continue;
                }
                // Hensel-refine to the root of F mod p^n
                let mut u = u0;
                for _ in 0..=n.ilog2() + 2 {
                    let (w1, w2) = roots(u)?;
                    let f = f_of(u, w1, w2, s1, s2);
                    if f == 0 {
                        break;
                    }
                    let fp = {
                        let t1 = mul_mod(mul_mod(mc2, inv(mul_mod(2, w1, pn), pn)?, pn), s1, pn);
                        let t2 = mul_mod(
                            mul_mod(mul_mod(lc2, pnr, pn), inv(mul_mod(2, w2, pn), pn)?, pn),
                            s2,
                            pn,
                        );
                        add_mod(t1, t2, pn)
                    };
                    u = sub_mod(u, mul_mod(f, inv(fp, pn)?, pn), pn);
                }
                let (w1, w2) = roots(u)?;
                debug_assert_eq!(f_of(u, w1, w2, s1, s2), 0, "Newton failed to clear F mod p^n");
                // ε(2̄(φ₂)₀, p^ρ₁) with (φ₂)₀ = -bracket mod p
                let phi2_unit = sub_mod(0, bracket(u, w1, w2, s1, s2)?, p);
                let eps_gauss = epsilon(mul_mod(inv(2, p)?, phi2_unit, p) as i64, p, rho1)?;
                let weight = psi_value(chi, p, n, r, s1_sign, s2_sign, u, w1, w2, rho1, rho2)?
                    .mul(&UnitPhase::from(eps_gauss));
                acc.add(weight);
            }
        }
    }
    Ok((p as f64).powf(r as f64 / 2.0) * acc.to_complex()
        + (p as f64).powf((r as f64 - n as f64) / 2.0) * fallback)
}

/// ψ at a point, shared by the closed form and its fallback path:
/// χ(u) ε(σ₁w₁, p^ρ₁) ε(σ₂w₂, p^ρ₂) θ(2σ₁w₁/p^n) θ(2σ₂w₂/p^r).
#[allow(clippy::too_many_arguments)]
fn psi_value(
    chi: &MultChar,
    p: u64,
    n: u32,
    r: u32,
    s1: i64,
    s2: i64,
    u: u64,
    w1: u64,
    w2: u64,
    rho1: u8,
    rho2: u8,
) -> Result<UnitPhase> {
    Ok(chi
        .eval_unit(u)
        .mul(&UnitPhase::from(epsilon(s1 * (w1 % p) as i64, p, rho1)?))
        .mul(&UnitPhase::from(epsilon(s2 * (w2 % p) as i64, p, rho2)?))
        .mul(&theta(s1 as i128 * 2 * w1 as i128, p, n))
        .mul(&theta(s2 as i128 * 2 * (w2 % p.pow(r)) as i128, p, r)))
}

/// Search α-lifts and the global branch for the convention making the closed
/// form match the Kloosterman-product form on the full unit-square grid of
/// the given cell. The calibration cell is the smallest grid point,
/// p = 3, n = 2, r = 2.
pub fn calibrate_closed_convention(chi: &MultChar, r: u32, c: u64) -> Result<ClosedConvention> {
    let (p, pn) = (chi.p(), chi.modulus());
    let tol = 1e-6 * 4.0 * (p as f64).powf(r as f64 / 2.0);
    let mut best: Option<(ClosedConvention, f64)> = None;
    for negate_branch in [false, true] {
        for alpha_shift in 0..p {
            let conv = ClosedConvention { alpha_shift, negate_branch };
            let branch = conv.branch(p);
            let alpha_lift = conv.alpha_lift(chi);
            let mut max_diff = 0.0f64;
            'grid: for m in (1..pn).filter(|&m| legendre(m as i64, p) == 1) {
                for ell in (1..pn).filter(|&l| legendre(l as i64, p) == 1) {
                    let params = GSumParams::new(chi, r, c, m as i64, ell as i64)?;
                    let closed = g_closed(&params, &branch, alpha_lift)?;
                    let reference = g_kloosterman(&params)?;
                    let d = (closed - reference).norm();
                    max_diff = max_diff.max(d);
                    if max_diff > tol {
                        break 'grid;
                    }
                }
            }
            if max_diff <= tol {
                match best {
                    Some((_, prev)) if prev <= max_diff => {}
                    _ => best = Some((conv, max_diff)),
                }
            }
        }
    }
    best.map(|(conv, _)| conv).ok_or_else(|| {
        Error::InternalInconsistency(format!(
            "no (α-lift, branch) convention matches the closed form at p = {p}, r = {r}, c = {c}"
        ))
    })
}

/// Which part of the summation domain a G phase function covers: the classes
/// where ord φ₂ = -n exactly (where the quadratic reduction applies), the
/// degenerate classes, or everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainPart {
    NondegenerateOnly,
    DegenerateOnly,
    All,
}

/// The summand ψ of G after the Kloosterman factors are opened:
/// ψ(u) = χ(u) ε(σ₁w₁, p^ρ₁) ε(σ₂w₂, p^ρ₂) θ(2σ₁w₁/p^n + 2σ₂w₂/p^r)
/// with w₁ = (u m c̄²)_{1/2} mod p^n, w₂ = (u ℓ c̄²)_{1/2},
/// as [`PhaseData`] with exact derivative evaluators.
pub fn g_phase_data<'a>(
    params: &GSumParams<'a>,
    sigma1: i64,
    sigma2: i64,
    branch: &SqrtBranch,
    part: DomainPart,
) -> Result<PhaseData<'a>> {
    let chi = params.chi;
    let (p, n, pn) = (chi.p(), chi.n(), chi.modulus());
    let (r, c) = (params.r, params.c);
    let iota: u32 = if p == 3 { 1 } else { 0 };
    let kappa_min = (n + iota).div_ceil(3).max(1);
    let kappa = n / 2;
    if kappa < kappa_min {
        return Err(Error::RegimeViolation(format!(
            "no step κ with 3κ ≥ n + ι and 2κ ≤ n at p = {p}, n = {n}"
        )));
    }
    let m = modarith::normalize(params.m as i128, pn);
    let ell = modarith::normalize(params.ell as i128, pn);
    if m % p == 0 || ell % p == 0 {
        return Err(Error::InvalidArgument("g_phase_data needs unit m, ℓ".into()));
    }
    let prec = max_prec(p).min(2 * n + 8);
    let pbig = p.pow(prec);
    let cinv = inv(c % pbig, pbig)?;
    let cinv2 = mul_mod(cinv, cinv, pbig);
    let mc2 = mul_mod(m % pbig, cinv2, pbig);
    let lc2 = mul_mod(ell % pbig, cinv2, pbig);
    let alpha = chi.alpha_lift() % pbig;
    let pr = p.pow(r);
    let pnr_big = p.pow(n - r) % pbig;
    let lm = legendre(m as i64, p);
    let ll = legendre(ell as i64, p);
    let rho1 = (n % 2) as u8;
    let rho2 = (r % 2) as u8;
    let two_bar_p = inv(2, p)?;
    let branch = branch.clone();
    let branch_psi = branch.clone();
    let branch_phi1 = branch.clone();
    let branch_phi2 = branch.clone();

    // unit part of the φ₂ bracket mod p, which decides degeneracy of a class
    let bracket_mod_p = {
        let branch = branch.clone();
        move |u: u64| -> u64 {
            let u0 = u % p;
            let w1 = branch.root_of(mul_mod(mul_mod(u0, m % p, p), cinv2 % p, p)).expect("square class");
            let mut acc = mul_mod(alpha % p, mul_mod(inv(u0, p).unwrap(), inv(u0, p).unwrap(), p), p);
            let w1_3 = mul_mod(mul_mod(w1, w1, p), w1, p);
            let t1 = mul_mod(
                mul_mod(mul_mod(mc2 % p, mc2 % p, p), inv(w1_3, p).unwrap(), p),
                two_bar_p,
                p,
            );
            acc = if sigma1 > 0 { add_mod(acc, t1, p) } else { sub_mod(acc, t1, p) };
            if r == n {
                let w2 = branch.root_of(mul_mod(mul_mod(u0, ell % p, p), cinv2 % p, p)).expect("square class");
                let w2_3 = mul_mod(mul_mod(w2, w2, p), w2, p);
                let t2 = mul_mod(
                    mul_mod(mul_mod(lc2 % p, lc2 % p, p), inv(w2_3, p).unwrap(), p),
                    two_bar_p,
                    p,
                );
                acc = if sigma2 > 0 { add_mod(acc, t2, p) } else { sub_mod(acc, t2, p) };
            }
            acc
        }
    };

    let domain = {
        let bracket = bracket_mod_p.clone();
        move |u: u64| -> bool {
            let u0 = u % p;
            if u0 == 0 || legendre(u0 as i64, p) != lm || legendre(u0 as i64, p) != ll {
                return false;
            }
            match part {
                DomainPart::All => true,
                DomainPart::NondegenerateOnly => bracket(u) != 0,
                DomainPart::DegenerateOnly => bracket(u) == 0,
            }
        }
    };

    let psi = move |u: u64| -> UnitPhase {
        let w1 = sqrt_mod_prime_power(mul_mod(mul_mod(u % pn, m, pn), cinv2 % pn, pn), p, n, &branch_psi)
            .expect("domain guarantees squares");
        let w2 = sqrt_mod_prime_power(
            mul_mod(mul_mod(u % pr, ell % pr, pr), cinv2 % pr, pr),
            p,
            r,
            &branch_psi,
        )
        .expect("domain guarantees squares");
        chi.eval_unit(u % pn)
            .mul(&UnitPhase::from(epsilon(sigma1 * w1 as i64, p, rho1).expect("unit")))
            .mul(&UnitPhase::from(epsilon(sigma2 * w2 as i64, p, rho2).expect("unit")))
            .mul(&theta(sigma1 as i128 * 2 * w1 as i128, p, n))
            .mul(&theta(sigma2 as i128 * 2 * w2 as i128, p, r))
    };

    let phi1 = move |u: u64| -> Result<PadicApprox> {
        let ub = u % pbig;
        let w1 = sqrt_mod_prime_power(mul_mod(mul_mod(ub, mc2, pbig), 1, pbig), p, prec, &branch_phi1)?;
        let w2 = sqrt_mod_prime_power(mul_mod(ub, lc2, pbig), p, prec, &branch_phi1)?;
        let mut x = mul_mod(alpha, inv(ub, pbig)?, pbig);
        let t1 = mul_mod(mc2, inv(w1, pbig)?, pbig);
        x = if sigma1 > 0 { add_mod(x, t1, pbig) } else { sub_mod(x, t1, pbig) };
        let t2 = mul_mod(mul_mod(lc2, pnr_big, pbig), inv(w2, pbig)?, pbig);
        x = if sigma2 > 0 { add_mod(x, t2, pbig) } else { sub_mod(x, t2, pbig) };
        PadicApprox::new(p, x as i128, n, prec)
    };

    let phi2 = move |u: u64| -> Result<PadicApprox> {
        let ub = u % pbig;
        let w1 = sqrt_mod_prime_power(mul_mod(ub, mc2, pbig), p, prec, &branch_phi2)?;
        let w2 = sqrt_mod_prime_power(mul_mod(ub, lc2, pbig), p, prec, &branch_phi2)?;
        let two_bar = inv(2, pbig)?;
        let ubar = inv(ub, pbig)?;
        let mut y = mul_mod(alpha, mul_mod(ubar, ubar, pbig), pbig);
        let w1_3 = inv(mul_mod(mul_mod(w1, w1, pbig), w1, pbig), pbig)?;
        let t1 = mul_mod(mul_mod(mul_mod(mc2, mc2, pbig), w1_3, pbig), two_bar, pbig);
        y = if sigma1 > 0 { add_mod(y, t1, pbig) } else { sub_mod(y, t1, pbig) };
        let w2_3 = inv(mul_mod(mul_mod(w2, w2, pbig), w2, pbig), pbig)?;
        let t2 = mul_mod(
            mul_mod(mul_mod(mul_mod(lc2, lc2, pbig), pnr_big, pbig), w2_3, pbig),
            two_bar,
            pbig,
        );
        y = if sigma2 > 0 { add_mod(y, t2, pbig) } else { sub_mod(y, t2, pbig) };
        PadicApprox::new(p, -(y as i128), n, prec)
    };

    let mu = match part {
        DomainPart::NondegenerateOnly => Some(-(n as i64)),
        _ => None,
    };
    Ok(PhaseData {
        q: *chi.q(),
        domain: Box::new(domain),
        psi: Box::new(psi),
        phi1: Box::new(phi1),
        phi2: Some(Box::new(phi2)),
        kappa,
        mu,
        omega_order: Some(Box::new(move |k| {
            let exact = 3 * k as i64 - n as i64 - iota as i64;
            if exact >= 0 {
                i64::MAX
            } else {
                exact
            }
        })),
        label: format!("G-summand σ=({sigma1},{sigma2}) m={m} ℓ={ell} c={c} mod {pn} (r={r})"),
    })
}

/// G evaluated through the stationary-phase engine: quadratic reduction on
/// the nondegenerate classes plus literal summation over the degenerate ones,
/// scaled by p^((r-n)/2). Independent of both `g_kloosterman`'s pairing and
/// `g_closed`'s final display.
pub fn g_stationary(params: &GSumParams, branch: &SqrtBranch) -> Result<Complex64> {
    let chi = params.chi;
    let (p, n) = (chi.p(), chi.n());
    let mut total = Complex64::new(0.0, 0.0);
    for s1 in [1i64, -1] {
        for s2 in [1i64, -1] {
            let good = g_phase_data(params, s1, s2, branch, DomainPart::NondegenerateOnly)?;
            total += reduce_quadratic(&good)?.value;
            let degenerate = g_phase_data(params, s1, s2, branch, DomainPart::DegenerateOnly)?;
            total += direct_sum(&degenerate);
        }
    }
    Ok((p as f64).powf((params.r as f64 - n as f64) / 2.0) * total)
}

/// 𝒞(m̃, ℓ₁, ℓ₂) by the literal u-sum with G supplied by the
/// Kloosterman-product evaluator; O(p^(2n)) after table setup.
pub fn c_def(params: &CSumParams) -> Result<Complex64> {
    let eval = GEvaluator::new(params.chi, params.r, params.c)?;
    let g1 = eval.g_vector(params.ell1);
    let g2 = eval.g_vector(params.ell2);
    c_def_with_vectors(params, &g1, &g2)
}

/// As [`c_def`] with precomputed G-vectors (for sweeps sharing (ℓ₁, ℓ₂, c)).
pub fn c_def_with_vectors(params: &CSumParams, g1: &[Complex64], g2: &[Complex64]) -> Result<Complex64> {
    let chi = params.chi;
    let (p, n, pn) = (chi.p(), chi.n(), chi.modulus());
    assert_eq!(g1.len() as u64, pn);
    assert_eq!(g2.len() as u64, pn);
    let dbar = inv(params.d % pn, pn)?;
    let mt = modarith::normalize(params.m_tilde as i128, pn);
    let k = mul_mod(mt, dbar, pn);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut phase_idx = 0u64;
    for u in 0..pn {
        if u > 0 {
            phase_idx += k;
            if phase_idx >= pn {
                phase_idx -= pn;
            }
        }
        let a = g1[u as usize];
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        let b = g2[u as usize];
        acc += a * b.conj() * theta(phase_idx as i128, p, n).to_complex();
    }
    Ok(acc)
}

/// Exact evaluation at m̃ = 0:
/// 𝒞(0, ℓ₁, ℓ₂) = p^(n+r) δ(ℓ₁ ≡ ℓ₂ mod p^r) - p^(n+r-1) δ(ℓ₁ ≡ ℓ₂ mod p^(r-1))
///              = p^n S(0, ℓ₁ - ℓ₂; p^r).
pub fn c_zero_closed(params: &CSumParams) -> Result<i64> {
    if params.m_tilde != 0 {
        return Err(Error::InvalidArgument("c_zero_closed requires m̃ = 0".into()));
    }
    let chi = params.chi;
    let (p, n, r) = (chi.p(), chi.n(), params.r);
    let diff = params.ell1 - params.ell2;
    let pr = p.pow(r) as i64;
    let pr1 = p.pow(r - 1) as i64;
    let pn = p.pow(n) as i64;
    let mut out = 0i64;
    if diff.rem_euclid(pr) == 0 {
        out += pn * pr;
    }
    if diff.rem_euclid(pr1) == 0 {
        out -= pn * pr1;
    }
    debug_assert_eq!(out, pn * ramanujan_closed(diff, p.pow(r)));
    Ok(out)
}

/// Prediction record of the support/bound law for 𝒞 at m̃ ≠ 0: the vanishing
/// predicate, the bound p^(n+(r+Ω)/2) with Ω = min(ord_p(ℓ₁-ℓ₂), r), and
/// whether the stationary-point congruence
/// m̃ u_{1/2}⁵ + σ₁σ₂ α d p^(n-r) ((ℓ₁)_{1/2} - (ℓ₂)_{1/2}) ≡ 0 mod p^(n-κ)
/// admits a solution.
#[derive(Debug, Clone, Copy)]
pub struct SupportBound {
    pub vanishes_predicted: bool,
    pub bound: f64,
    pub omega: u32,
    pub has_stationary_point: bool,
}

/// Support and bound law in the working regime n/2 ≤ r < n.
pub fn c_support_bound(params: &CSumParams) -> Result<SupportBound> {
    let chi = params.chi;
    let (p, n, r) = (chi.p(), chi.n(), params.r);
    if !(n <= 2 * r && r < n) {
        return Err(Error::RegimeViolation(format!(
            "support/bound law needs n/2 ≤ r < n, got n = {n}, r = {r}"
        )));
    }
    let pn = chi.modulus();
    let omega = match modarith::ord_p(params.ell1 - params.ell2, p) {
        Some(v) => v.min(r),
        None => r, // ℓ₁ = ℓ₂: ℓ enters mod p^r only, cap at r
    };
    let bound = (p as f64).powf(n as f64 + (r + omega) as f64 / 2.0);

    let ell_square = legendre(params.ell1, p) == 1 && legendre(params.ell2, p) == 1;
    let pnr = p.pow(n - r);
    let divisible = modarith::normalize(params.m_tilde as i128, pnr) == 0;
    let vanishes_predicted = if params.m_tilde == 0 {
        false // the m̃ = 0 case is governed by the exact diagonal evaluation
    } else {
        !ell_square || !divisible
    };

    // stationary congruence from the linear reduction at step κ
    let iota: u32 = if p == 3 { 1 } else { 0 };
    let kappa = ((n + iota).div_ceil(3)).max((r - omega.min(r)).div_ceil(2)).max(1).min(n);
    let modulus = p.pow(n - kappa);
    let has_stationary_point = if !ell_square {
        false
    } else {
        let branch = SqrtBranch::canonical(p);
        let l1 = modarith::normalize(params.ell1 as i128, pn);
        let l2 = modarith::normalize(params.ell2 as i128, pn);
        let wl1 = sqrt_mod_prime_power(l1, p, n, &branch)?;
        let wl2 = sqrt_mod_prime_power(l2, p, n, &branch)?;
        let root_diff = sub_mod(wl1, wl2, pn);
        let mt = modarith::normalize(params.m_tilde as i128, pn);
        let fixed = mul_mod(
            mul_mod(chi.alpha_lift() % pn, params.d % pn, pn),
            mul_mod(pnr % pn, root_diff, pn),
            pn,
        ) % modulus;
        let mut found = false;
        'scan: for w in 1..modulus.max(2) {
            if modulus > 1 && w % p == 0 {
                continue;
            }
            let w5 = mul_mod(
                mul_mod(mul_mod(w, w, modulus.max(2)), mul_mod(w, w, modulus.max(2)), modulus.max(2)),
                w,
                modulus.max(2),
            );
            let lead = mul_mod(mt % modulus.max(2), w5, modulus.max(2));
            for sign in [1u64, modulus.max(2) - 1] {
                if modulus <= 1 || add_mod(lead, mul_mod(sign, fixed, modulus), modulus) % modulus == 0 {
                    found = true;
                    break 'scan;
                }
            }
        }
        found
    };
    Ok(SupportBound { vanishes_predicted, bound, omega, has_stationary_point })
}

/// Both routes to 𝒦(m̃): the defining sum over u mod d·p^n restricted to the
/// congruence class u ≡ ℓ₁ p^(2n-r) (p^r)̄ mod d, and the factored form
/// e(m̃ ℓ₁ p^(n-r) (p^r)̄ / d) · 𝒞(m̃, ℓ₁, ℓ₂).
#[derive(Debug, Clone, Copy)]
pub struct KFull {
    pub defining: Complex64,
    pub factored: Complex64,
}

pub fn k_full(params: &CSumParams) -> Result<KFull> {
    let chi = params.chi;
    let (p, n, pn) = (chi.p(), chi.n(), chi.modulus());
    let (r, d) = (params.r, params.d);
    let eval = GEvaluator::new(chi, r, params.c)?;
    let g1 = eval.g_vector(params.ell1);
    let g2 = eval.g_vector(params.ell2);

    let big = d * pn;
    // u₀ = ℓ₁ p^(2n-r) (p^r)̄ mod d
    let u0 = if d == 1 {
        0
    } else {
        let p2nr = modarith::pow_mod(p, (2 * n - r) as u64, d);
        let prbar = inv(modarith::pow_mod(p, r as u64, d), d)?;
        mul_mod(modarith::normalize(params.ell1 as i128, d), mul_mod(p2nr, prbar, d), d)
    };
    let mt_big = modarith::normalize(params.m_tilde as i128, big);
    let mut defining = Complex64::new(0.0, 0.0);
    for j in 0..pn {
        let u = (u0 + d * j) % big;
        let a = g1[(u % pn) as usize];
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        let phase = UnitPhase::new(mt_big as i128 * u as i128, big);
        defining += a * g2[(u % pn) as usize].conj() * phase.to_complex();
    }

    let c_val = c_def_with_vectors(params, &g1, &g2)?;
    let factored = if d == 1 {
        c_val
    } else {
        let pnrd = modarith::pow_mod(p, (n - r) as u64, d);
        let prbar = inv(modarith::pow_mod(p, r as u64, d), d)?;
        let pref = UnitPhase::new(
            params.m_tilde as i128 * mul_mod(modarith::normalize(params.ell1 as i128, d), mul_mod(pnrd, prbar, d), d) as i128,
            d,
        );
        pref.to_complex() * c_val
    };
    Ok(KFull { defining, factored })
}

/// The summand of the 𝒞-analysis after both G factors are opened in closed
/// form: Φ(u) = 𝛆(u) χ̄(η₁²) χ(η₂²) θ(m̃ d̄ u / p^n) on square units, with
/// ηᵢ = σ₁ u_{1/2} + σ₂ (ℓᵢ)_{1/2} p^(n-r) and the locally constant ε-pair
/// 𝛆(u) = ε(σ₂α(ū ℓ₁)_{1/2}, p^ρ₂) conj(ε(σ₂α(ū ℓ₂)_{1/2}, p^ρ₂)).
///
/// Its derivatives carry ord φ₁ = ord (φ₂/2) = Ω - r with
/// Ω = ord_p(ℓ₁ - ℓ₂), the inputs to the second-derivative test.
pub fn phi_phase_data<'a>(
    params: &CSumParams<'a>,
    sigma1: i64,
    sigma2: i64,
    branch: &SqrtBranch,
    kappa: u32,
) -> Result<PhaseData<'a>> {
    let chi = params.chi;
    let (p, n, pn) = (chi.p(), chi.n(), chi.modulus());
    let r = params.r;
    if r >= n {
        return Err(Error::InvalidArgument("phi_phase_data needs r < n".into()));
    }
    let l1 = modarith::normalize(params.ell1 as i128, pn);
    let l2 = modarith::normalize(params.ell2 as i128, pn);
    if legendre(l1 as i64, p) != 1 || legendre(l2 as i64, p) != 1 {
        return Err(Error::NotASquare { value: if legendre(l1 as i64, p) != 1 { l1 } else { l2 }, prime: p });
    }
    let prec = max_prec(p).min(2 * n + 8);
    let pbig = p.pow(prec);
    let alpha = chi.alpha_lift() % pbig;
    let pnr_big = p.pow(n - r) % pbig;
    let mt_dbar = mul_mod(
        modarith::normalize(params.m_tilde as i128, pn),
        inv(params.d % pn, pn)?,
        pn,
    );
    let rho2 = (r % 2) as u8;
    let iota: u32 = if p == 3 { 1 } else { 0 };

    let branch_psi = branch.clone();
    let branch_phi = branch.clone();
    let eta = move |wu: u64, wl: u64, modulus: u64| -> u64 {
        let t = mul_mod(wl % modulus, p.pow(n - r) % modulus, modulus);
        let s1 = modarith::normalize(sigma1 as i128, modulus);
        let s2 = modarith::normalize(sigma2 as i128, modulus);
        add_mod(mul_mod(s1, wu % modulus, modulus), mul_mod(s2, t, modulus), modulus)
    };

    let psi = move |u: u64| -> UnitPhase {
        let wu = sqrt_mod_prime_power(u % pn, p, n, &branch_psi).expect("square domain");
        let wl1 = sqrt_mod_prime_power(l1, p, n, &branch_psi).expect("square ℓ₁");
        let wl2 = sqrt_mod_prime_power(l2, p, n, &branch_psi).expect("square ℓ₂");
        let eta1 = eta(wu, wl1, pn);
        let eta2 = eta(wu, wl2, pn);
        let ubar = inv(u % p, p).expect("unit");
        let root1 = branch_psi.root_of(mul_mod(ubar, l1 % p, p)).expect("square class");
        let root2 = branch_psi.root_of(mul_mod(ubar, l2 % p, p)).expect("square class");
        let eps = epsilon(sigma2 * mul_mod(alpha % p, root1, p) as i64, p, rho2)
            .expect("unit")
            .mul(epsilon(sigma2 * mul_mod(alpha % p, root2, p) as i64, p, rho2).expect("unit").conj());
        chi.eval_unit(mul_mod(eta1, eta1, pn))
            .conj()
            .mul(&chi.eval_unit(mul_mod(eta2, eta2, pn)))
            .mul(&UnitPhase::from(eps))
            .mul(&theta(mul_mod(mt_dbar, u % pn, pn) as i128, p, n))
    };

    // φ₁ = p^(-n) [m̃ d^{-1} - σ₁ α (η₁^{-1} - η₂^{-1}) u_{1/2}^{-1}]
    let phi1 = {
        let branch = branch_phi.clone();
        move |u: u64| -> Result<PadicApprox> {
            let wu = sqrt_mod_prime_power(u % pbig, p, prec, &branch)?;
            let wl1 = sqrt_mod_prime_power(l1 % pbig, p, prec, &branch)?;
            let wl2 = sqrt_mod_prime_power(l2 % pbig, p, prec, &branch)?;
            let s1 = modarith::normalize(sigma1 as i128, pbig);
            let s2 = modarith::normalize(sigma2 as i128, pbig);
            let eta1 = add_mod(mul_mod(s1, wu, pbig), mul_mod(s2, mul_mod(wl1, pnr_big, pbig), pbig), pbig);
            let eta2 = add_mod(mul_mod(s1, wu, pbig), mul_mod(s2, mul_mod(wl2, pnr_big, pbig), pbig), pbig);
            let diff = sub_mod(inv(eta1, pbig)?, inv(eta2, pbig)?, pbig);
            let t = mul_mod(mul_mod(mul_mod(s1, alpha, pbig), diff, pbig), inv(wu, pbig)?, pbig);
            let x = sub_mod(mt_dbar % pbig, t, pbig);
            PadicApprox::new(p, x as i128, n, prec)
        }
    };

    // φ₂ = p^(-n) α [(σ₁η₁ + u_{1/2}) η₁^{-2} - (σ₁η₂ + u_{1/2}) η₂^{-2}] / (2 u_{1/2}³)
    let phi2 = move |u: u64| -> Result<PadicApprox> {
        let wu = sqrt_mod_prime_power(u % pbig, p, prec, &branch_phi)?;
        let wl1 = sqrt_mod_prime_power(l1 % pbig, p, prec, &branch_phi)?;
        let wl2 = sqrt_mod_prime_power(l2 % pbig, p, prec, &branch_phi)?;
        let s1 = modarith::normalize(sigma1 as i128, pbig);
        let s2 = modarith::normalize(sigma2 as i128, pbig);
        let term = |wl: u64| -> Result<u64> {
            let eta = add_mod(mul_mod(s1, wu, pbig), mul_mod(s2, mul_mod(wl, pnr_big, pbig), pbig), pbig);
            let eta_inv2 = {
                let i = inv(eta, pbig)?;
                mul_mod(i, i, pbig)
            };
            Ok(mul_mod(add_mod(mul_mod(s1, eta, pbig), wu, pbig), eta_inv2, pbig))
        };
        let diff = sub_mod(term(wl1)?, term(wl2)?, pbig);
        let wu3 = mul_mod(mul_mod(wu, wu, pbig), wu, pbig);
        let y = mul_mod(
            mul_mod(alpha, diff, pbig),
            inv(mul_mod(2, wu3, pbig), pbig)?,
            pbig,
        );
        PadicApprox::new(p, y as i128, n, prec)
    };

    Ok(PhaseData {
        q: *chi.q(),
        domain: Box::new(move |u| u % p != 0 && legendre((u % p) as i64, p) == 1),
        psi: Box::new(psi),
        phi1: Box::new(phi1),
        phi2: Some(Box::new(phi2)),
        kappa,
        mu: None,
        omega_order: Some(Box::new(move |k| {
            let exact = 3 * k as i64 - n as i64 - iota as i64;
            if exact >= 0 {
                i64::MAX
            } else {
                exact
            }
        })),
        label: format!(
            "C-summand σ=({sigma1},{sigma2}) ℓ₁={l1} ℓ₂={l2} m̃={} d={} mod {pn} (r={r})",
            params.m_tilde, params.d
        ),
    })
}

/// How a battery member is meant to be reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Linear,
    Quadratic,
}

/// One member of the built-in verification battery: phase data plus the
/// reduction it exercises and optional second-derivative-test parameters.
pub struct BatteryMember<'a> {
    pub label: String,
    pub data: PhaseData<'a>,
    pub reduction: Reduction,
    pub sdt: Option<SdtParams>,
}

/// The built-in battery at modulus p^n: geometric and Gauss sums, Kloosterman
/// sums, the G-summands and (where r < n admits it) the 𝒞-summands Φ.
pub fn standard_battery<'a>(chi: &'a MultChar) -> Result<Vec<BatteryMember<'a>>> {
    let q = *chi.q();
    let (p, n, pn) = (q.p(), q.n(), q.value());
    let iota: u32 = if p == 3 { 1 } else { 0 };
    let mut out: Vec<BatteryMember<'a>> = Vec::new();

    for a in [0u64, 1, p.pow(n - 1)] {
        out.push(BatteryMember {
            label: format!("geometric a={a} mod {pn}"),
            data: crate::statphase::geometric_member(&q, a),
            reduction: Reduction::Linear,
            sdt: Some(SdtParams { upsilon: if a == 0 { 0 } else { n }, lambda: 0, kappa0: 1, psi0: 1.0 }),
        });
    }
    for a in [1u64, 2] {
        out.push(BatteryMember {
            label: format!("gauss a={a} mod {pn}"),
            data: crate::statphase::gauss_member(&q, a),
            reduction: Reduction::Quadratic,
            sdt: Some(SdtParams { upsilon: n, lambda: n, kappa0: 1, psi0: 1.0 }),
        });
    }
    for (a, b) in [(1u64, 1u64), (1, 2), (2, 3 % pn)] {
        if a % p == 0 || b % p == 0 || b == 0 {
            continue;
        }
        out.push(BatteryMember {
            label: format!("kloosterman a={a} b={b} mod {pn}"),
            data: crate::statphase::kloosterman_member(&q, a, b),
            reduction: Reduction::Quadratic,
            sdt: Some(SdtParams { upsilon: n, lambda: n, kappa0: 1, psi0: 1.0 }),
        });
    }

    // G-summands, where the quadratic window 3κ ≥ n + ι, 2κ ≤ n is nonempty
    if (n + iota).div_ceil(3) <= n / 2 {
        let branch = SqrtBranch::canonical(p);
        let squares: Vec<u64> = (1..pn).filter(|&x| legendre(x as i64, p) == 1).take(2).collect();
        let r = if n > 2 { n - 1 } else { 2 };
        if let (Some(&m), Some(&ell)) = (squares.first(), squares.last()) {
            for (s1, s2) in [(1i64, 1i64), (1, -1)] {
                let params = GSumParams { chi, r, c: 1, m: m as i64, ell: ell as i64 };
                out.push(BatteryMember {
                    label: format!("G-summand σ=({s1},{s2}) mod {pn}"),
                    data: g_phase_data(&params, s1, s2, &branch, DomainPart::NondegenerateOnly)?,
                    reduction: Reduction::Quadratic,
                    sdt: Some(SdtParams { upsilon: n, lambda: n, kappa0: 1 + iota, psi0: 1.0 }),
                });
            }
        }
    }

    // Φ-summands: r = n - 1 except at p = 3, where the cubic coefficient of
    // the square-root expansion eats one power of 3 and ord φ₂ varies with u
    // when n - r = 1; r = n - 2 restores a constant order.
    if n >= 3 {
        let r = if p == 3 { n.saturating_sub(2) } else { n - 1 };
        if r >= 2 {
            let pr = p.pow(r);
            let squares: Vec<u64> = (1..pr).filter(|&x| legendre(x as i64, p) == 1).collect();
            if squares.len() >= 2 {
                let (l1, l2) = (squares[0] as i64, squares[1] as i64);
                let omega = modarith::ord_p(l1 - l2, p).unwrap_or(r).min(r);
                let branch = SqrtBranch::canonical(p);
                for mt in [0i64, p.pow(n - r) as i64] {
                    let params = CSumParams { chi, r, c: 1, d: 1, m_tilde: mt, ell1: l1, ell2: l2 };
                    let probe = phi_phase_data(&params, 1, 1, &branch, 1)?;
                    let phi2_ord = probe_constant_phi2_ord(&probe);
                    let min_phi2_ord = phi2_ord.unwrap_or(omega as i64 - r as i64 - iota as i64);
                    let kappa_lin = (n + iota)
                        .div_ceil(3)
                        .max((((-min_phi2_ord).max(0)) as u32).div_ceil(2))
                        .max(1);
                    if kappa_lin > n {
                        continue;
                    }
                    let mut data = phi_phase_data(&params, 1, 1, &branch, kappa_lin)?;
                    data.phi2 = None; // the quadratic term is integral at this step
                    out.push(BatteryMember {
                        label: format!("C-summand linear m̃={mt} mod {pn}"),
                        data,
                        reduction: Reduction::Linear,
                        sdt: None,
                    });
                    // the second-derivative test needs ord φ₂ constant on T;
                    // attach its parameters only when the probe confirms that
                    if let Some(mu) = phi2_ord {
                        let lambda = (-mu).max(0) as u32;
                        out.push(BatteryMember {
                            label: format!("C-summand sdt m̃={mt} mod {pn}"),
                            data: phi_phase_data(&params, 1, 1, &branch, kappa_lin)?,
                            reduction: Reduction::Linear,
                            // ord φ₁ = Ω - r exactly when m̃ = 0 (the leading
                            // coefficient carries no extra p-power), ≥ -r else
                            sdt: Some(SdtParams {
                                upsilon: if mt == 0 { r - omega } else { r },
                                lambda,
                                kappa0: (n + iota).div_ceil(3).max(1),
                                psi0: 1.0,
                            }),
                        });
                        // quadratic reduction where a common step exists
                        let kappa_quad_lo = (n + iota).div_ceil(3);
                        let kappa_quad_hi = ((-mu).max(0) / 2) as u32;
                        if mt == 0 && kappa_quad_lo <= kappa_quad_hi && mu <= -2 {
                            let mut data = phi_phase_data(&params, 1, 1, &branch, kappa_quad_lo)?;
                            data.mu = Some(mu);
                            out.push(BatteryMember {
                                label: format!("C-summand quadratic mod {pn}"),
                                data,
                                reduction: Reduction::Quadratic,
                                sdt: None,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Sample ord φ₂ over the domain; `Some(v)` when it is constant.
fn probe_constant_phi2_ord(data: &PhaseData<'_>) -> Option<i64> {
    let phi2 = data.phi2.as_ref()?;
    let mut seen: Option<i64> = None;
    let mut checked = 0;
    for u in 0..data.q.value() {
        if !(data.domain)(u) {
            continue;
        }
        let v = phi2(u).ok()?.ord_signed()?;
        match seen {
            None => seen = Some(v),
            Some(w) if w != v => return None,
            _ => {}
        }
        checked += 1;
        if checked >= 24 {
            break;
        }
    }
    seen
}

/// One grid cell of the cancellation sweep.
#[derive(Debug, Clone, Copy)]
pub struct CancellationCell {
    pub p: u64,
    pub n: u32,
    pub r: u32,
    /// Character index.
    pub k: u64,
    pub c: u64,
    pub d: u64,
}

/// Grid specification: cells plus per-cell sampling counts, a seed for the
/// counter-based point sampler, and a summand-evaluation budget.
#[derive(Debug, Clone)]
pub struct CancellationSpec {
    pub cells: Vec<CancellationCell>,
    pub pairs_per_cell: usize,
    /// Sampled m̃ with p^(n-r) ∤ m̃ per pair (support-law checks).
    pub mtildes_per_pair: usize,
    /// Scan every supported class m̃ = k·p^(n-r), k < min(p^r, 1000), instead
    /// of sampling; makes per-cell maxima comparable across n.
    pub exhaust_supported: bool,
    pub seed: u64,
    pub budget: u64,
}

/// One row of the cancellation table: the parameters, |𝒞|, the bound
/// p^(n+(r+Ω)/2), their ratio, and the support-law verdict.
#[derive(Debug, Clone, Copy)]
pub struct CancellationRow {
    pub cell: CancellationCell,
    pub ell1: i64,
    pub ell2: i64,
    pub m_tilde: i64,
    pub value: Complex64,
    pub bound: f64,
    pub ratio: f64,
    pub omega: u32,
    pub vanish_predicted: bool,
    pub vanished: bool,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic counter-based sampler keyed by (seed, stream, index).
pub fn point_sample(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_mul(0x2545f4914f6cdd1d) ^ index))
}

/// Quantifies square-root cancellation: for each sampled (ℓ₁, ℓ₂, m̃) in each
/// cell, evaluates 𝒞 literally and reports |𝒞| against p^(n+(r+Ω)/2).
/// Deterministic given the spec; rows come out in lexicographic grid order.
pub fn cancellation_sweep(spec: &CancellationSpec) -> Result<Vec<CancellationRow>> {
    const SUPPORTED_SCAN_CAP: u64 = 1000;
    // cost check first
    let mut estimated: u64 = 0;
    for cell in &spec.cells {
        let pn = cell.p.pow(cell.n);
        let supported = if spec.exhaust_supported {
            (cell.p.pow(cell.r) - 1).min(SUPPORTED_SCAN_CAP)
        } else {
            spec.mtildes_per_pair as u64 / 2 + 1
        };
        estimated = estimated.saturating_add(
            (spec.pairs_per_cell as u64).saturating_mul(2 * cost::g_vector(pn))
                + (spec.pairs_per_cell as u64)
                    .saturating_mul(supported + spec.mtildes_per_pair as u64)
                    .saturating_mul(pn),
        );
    }
    if estimated > spec.budget {
        return Err(Error::BudgetExceeded { estimated, budget: spec.budget });
    }

    let mut rows = Vec::new();
    for (cell_idx, cell) in spec.cells.iter().enumerate() {
        let chi = crate::characters::make_char(cell.p, cell.n, cell.k)?;
        let eval = GEvaluator::new(&chi, cell.r, cell.c)?;
        let (p, n, r) = (cell.p, cell.n, cell.r);
        let pr = p.pow(r);
        let pnr = p.pow(n - r);
        let squares: Vec<u64> = (1..pr).filter(|&x| legendre(x as i64, p) == 1).collect();
        for pair_idx in 0..spec.pairs_per_cell {
            let stream = (cell_idx as u64) << 16 | pair_idx as u64;
            let l1 = squares[(point_sample(spec.seed, stream, 0) % squares.len() as u64) as usize] as i64;
            // pair 0 is the diagonal, pair 1 the minimal-Ω partner of ℓ₁
            // (the structured extremes), the rest generic square pairs
            let l2 = match pair_idx {
                0 => l1,
                1 => squares
                    .iter()
                    .map(|&x| x as i64)
                    .filter(|&x| x != l1)
                    .min_by_key(|&x| modarith::ord_p(x - l1, p).unwrap_or(r))
                    .unwrap_or(l1),
                _ => squares[(point_sample(spec.seed, stream, 1) % squares.len() as u64) as usize] as i64,
            };
            let g1 = eval.g_vector(l1);
            let g2 = eval.g_vector(l2);
            let mut points: Vec<i64> = Vec::new();
            if spec.exhaust_supported {
                points.extend((1..pr.min(SUPPORTED_SCAN_CAP)).map(|k| k as i64 * pnr as i64));
            } else {
                points.extend((0..spec.mtildes_per_pair as u64 / 2 + 1).map(|j| {
                    (pnr as i64) * (1 + (point_sample(spec.seed, stream, 2 + j) % pr.max(2)) as i64)
                }));
            }
            for j in 0..spec.mtildes_per_pair as u64 {
                let raw = 1 + (point_sample(spec.seed, stream, 1000 + j) % (p.pow(n) - 1)) as i64;
                points.push(if raw % pnr as i64 == 0 { raw + 1 } else { raw });
            }
            for m_tilde in points {
                let params = CSumParams::new(&chi, r, cell.c, cell.d, m_tilde, l1, l2)?;
                let sb = c_support_bound(&params)?;
                let value = c_def_with_vectors(&params, &g1, &g2)?;
                let vanished = value.norm() <= 1e-3;
                rows.push(CancellationRow {
                    cell: *cell,
                    ell1: l1,
                    ell2: l2,
                    m_tilde,
                    value,
                    bound: sb.bound,
                    ratio: value.norm() / sb.bound,
                    omega: sb.omega,
                    vanish_predicted: sb.vanishes_predicted,
                    vanished,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::make_char;

    #[test]
    fn g_def_matches_g_kloosterman_small() {
        let chi = make_char(3, 2, 1).unwrap();
        for c in [1u64, 2] {
            for m in 1..9i64 {
                for ell in 1..9i64 {
                    if m % 3 == 0 || ell % 3 == 0 {
                        continue;
                    }
                    let params = GSumParams::new(&chi, 2, c, m, ell).unwrap();
                    let def = g_def(&params).unwrap();
                    let kl = g_kloosterman(&params).unwrap();
                    assert!(
                        (def - kl).norm() < 1e-8,
                        "c={c} m={m} ℓ={ell}: def {def} vs kloosterman {kl}"
                    );
                }
            }
        }
    }

    #[test]
    fn g_tau_oracle_differs_by_chi_minus_one() {
        for k in [1u64, 2, 4, 5] {
            let chi = make_char(3, 2, k).unwrap();
            let params = GSumParams::new(&chi, 2, 1, 1, 1).unwrap();
            let def = g_def(&params).unwrap();
            let tau = g_tau_oracle(&params).unwrap();
            let sign = chi.eval_minus_one().to_complex();
            assert!(
                (def - sign * tau).norm() < 1e-7,
                "k={k}: def {def}, χ(-1)·tau {}",
                sign * tau
            );
        }
    }

    #[test]
    fn g_vanishes_when_quadratic_classes_mismatch() {
        let chi = make_char(5, 3, 1).unwrap();
        // legendre(2, 5) = -1, legendre(1, 5) = 1: supports of the two
        // Kloosterman factors are disjoint
        let params = GSumParams::new(&chi, 2, 1, 2, 1).unwrap();
        assert!(g_kloosterman(&params).unwrap().norm() < 1e-9);
        let params = GSumParams::new(&chi, 2, 1, 1, 2).unwrap();
        assert!(g_kloosterman(&params).unwrap().norm() < 1e-9);
    }

    #[test]
    fn g_ell_periodic_mod_pr() {
        let chi = make_char(3, 3, 1).unwrap();
        let a = GSumParams::new(&chi, 2, 2, 4, 1).unwrap();
        let b = GSumParams::new(&chi, 2, 2, 4, 1 + 9).unwrap();
        let (ga, gb) = (g_kloosterman(&a).unwrap(), g_kloosterman(&b).unwrap());
        assert!((ga - gb).norm() < 1e-12);
        // m enters mod p^n
        let c1 = GSumParams::new(&chi, 2, 2, 4 + 27, 1).unwrap();
        assert!((g_kloosterman(&c1).unwrap() - ga).norm() < 1e-12);
    }

    #[test]
    fn g_evaluator_agrees_with_exact_route() {
        for (p, n, r, k, c) in [(3u64, 3u32, 2u32, 1u64, 1u64), (5, 2, 2, 3, 2), (5, 3, 2, 1, 1), (7, 2, 2, 2, 3)] {
            let chi = make_char(p, n, k).unwrap();
            let eval = GEvaluator::new(&chi, r, c).unwrap();
            for m in 1..(chi.modulus() as i64).min(40) {
                for ell in 1..(p.pow(r) as i64).min(30) {
                    if m % p as i64 == 0 || ell % p as i64 == 0 {
                        continue;
                    }
                    let params = GSumParams::new(&chi, r, c, m, ell).unwrap();
                    let exact = g_kloosterman(&params).unwrap();
                    let fast = eval.g(m, ell);
                    assert!(
                        (exact - fast).norm() < 1e-8 * (1.0 + exact.norm()),
                        "p={p} n={n} r={r} m={m} ℓ={ell}: {exact} vs {fast}"
                    );
                }
            }
        }
    }

    #[test]
    fn c_zero_matches_closed_form() {
        let chi = make_char(3, 3, 1).unwrap();
        // 𝒞(0, ℓ, ℓ) = p^(n+r) - p^(n+r-1) = 243 - 81 = 162 at p=3, n=3, r=2
        let params = CSumParams::new(&chi, 2, 1, 1, 0, 1, 1).unwrap();
        assert_eq!(c_zero_closed(&params).unwrap(), 162);
        let direct = c_def(&params).unwrap();
        assert!((direct.re - 162.0).abs() < 1e-6 && direct.im.abs() < 1e-6, "direct = {direct}");

        // unit difference: both indicators fail for r ≥ 2
        let params = CSumParams::new(&chi, 2, 1, 1, 0, 1, 2).unwrap();
        assert_eq!(c_zero_closed(&params).unwrap(), 0);
        // ℓ₁ - ℓ₂ = p^(r-1)·unit: second indicator only
        let params = CSumParams::new(&chi, 2, 1, 1, 0, 4, 1).unwrap();
        assert_eq!(c_zero_closed(&params).unwrap(), -81);
        let direct = c_def(&params).unwrap();
        assert!((direct.re + 81.0).abs() < 1e-6, "direct = {direct}");
    }

    #[test]
    fn c_zero_closed_needs_r_below_n() {
        // at r = n the ν-fiber u₂ ≡ u₁ mod p^(n-1) no longer fixes the
        // ℓ-Kloosterman factor, the second Ramanujan term survives, and the
        // diagonal evaluation genuinely fails; the identity is only claimed
        // (and only used) for r < n.
        let chi = make_char(5, 2, 1).unwrap();
        let params = CSumParams::new(&chi, 2, 1, 1, 0, 6, 6).unwrap();
        let direct = c_def(&params).unwrap();
        let closed = c_zero_closed(&params).unwrap() as f64;
        assert!(
            (direct.re - closed).abs() > 1.0,
            "r = n unexpectedly satisfies the diagonal evaluation: {direct} vs {closed}"
        );
        // while at r < n it holds on the nose
        let chi = make_char(5, 3, 1).unwrap();
        let params = CSumParams::new(&chi, 2, 1, 1, 0, 6, 6).unwrap();
        let direct = c_def(&params).unwrap();
        let closed = c_zero_closed(&params).unwrap() as f64;
        assert!((direct.re - closed).abs() < 1e-6 && direct.im.abs() < 1e-6);
    }

    #[test]
    fn c_conjugate_swap_symmetry() {
        let chi = make_char(3, 4, 1).unwrap();
        for (mt, l1, l2) in [(9i64, 1i64, 4i64), (9, 4, 7), (18, 1, 1), (27, 4, 13)] {
            let a = CSumParams::new(&chi, 2, 1, 1, mt, l1, l2).unwrap();
            let b = CSumParams::new(&chi, 2, 1, 1, -mt, l2, l1).unwrap();
            let va = c_def(&a).unwrap();
            let vb = c_def(&b).unwrap();
            assert!(
                (va - vb.conj()).norm() < 1e-6 * (1.0 + va.norm()),
                "m̃={mt} ℓ₁={l1} ℓ₂={l2}: {va} vs conj {vb}"
            );
        }
    }

    #[test]
    fn support_bound_prediction_fields() {
        let chi = make_char(3, 4, 1).unwrap();
        // p^(n-r) = 9 does not divide 1: predicted to vanish
        let params = CSumParams::new(&chi, 2, 1, 1, 1, 1, 1).unwrap();
        let sb = c_support_bound(&params).unwrap();
        assert!(sb.vanishes_predicted);
        assert_eq!(sb.omega, 2); // ℓ₁ = ℓ₂ capped at r
        // bound = p^(n + (r+Ω)/2) = 3^(4+2) = 729
        assert!((sb.bound - 729.0).abs() < 1e-9);
        // regime violation outside n/2 ≤ r < n
        let bad = CSumParams::new(&chi, 4, 1, 1, 1, 1, 1).unwrap();
        assert!(matches!(c_support_bound(&bad), Err(Error::RegimeViolation(_))));
    }

    #[test]
    fn g_closed_matches_g_kloosterman() {
        let conv = ClosedConvention::default();
        for (p, n, r) in [(3u64, 2u32, 2u32), (3, 4, 3), (5, 3, 2), (5, 3, 3), (7, 2, 2), (7, 3, 2)] {
            let chi = make_char(p, n, 1).unwrap();
            let branch = conv.branch(p);
            let lift = conv.alpha_lift(&chi);
            let pn = chi.modulus();
            let tol = 1e-6 * 4.0 * (p as f64).powf(r as f64 / 2.0);
            let squares: Vec<u64> = (1..pn).filter(|&x| legendre(x as i64, p) == 1).collect();
            for &m in squares.iter().step_by(3) {
                for &ell in squares.iter().step_by(5) {
                    let params = GSumParams::new(&chi, r, 1, m as i64, ell as i64).unwrap();
                    let closed = g_closed(&params, &branch, lift).unwrap();
                    let reference = g_kloosterman(&params).unwrap();
                    assert!(
                        (closed - reference).norm() < tol,
                        "p={p} n={n} r={r} m={m} ℓ={ell}: {closed} vs {reference}"
                    );
                }
            }
        }
    }

    #[test]
    fn g_closed_magnitude_is_at_most_4_sqrt_pr() {
        let chi = make_char(5, 4, 3).unwrap();
        let branch = SqrtBranch::canonical(5);
        for (m, ell) in [(1i64, 1i64), (4, 6), (11, 19), (6, 9)] {
            for r in [2u32, 3] {
                let params = GSumParams::new(&chi, r, 1, m, ell).unwrap();
                if let Ok(v) = g_closed(&params, &branch, chi.alpha_lift()) {
                    assert!(v.norm() <= 4.0 * (5.0f64).powf(r as f64 / 2.0) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn g_closed_rejects_nonsquares_and_small_p3() {
        let chi = make_char(5, 3, 1).unwrap();
        let branch = SqrtBranch::canonical(5);
        let params = GSumParams::new(&chi, 2, 1, 2, 1).unwrap(); // legendre(2,5) = -1
        assert!(matches!(
            g_closed(&params, &branch, chi.alpha_lift()),
            Err(Error::NotASquare { .. })
        ));
        // p = 3, n = 3: the quadratic expansion is exact at no admissible step
        let chi3 = make_char(3, 3, 1).unwrap();
        let branch3 = SqrtBranch::canonical(3);
        let params = GSumParams::new(&chi3, 2, 1, 1, 1).unwrap();
        assert!(matches!(
            g_closed(&params, &branch3, chi3.alpha_lift()),
            Err(Error::RegimeViolation(_))
        ));
    }

    #[test]
    fn g_closed_invariant_under_lift_and_branch() {
        // the α-lift mod p^n and the global branch are bookkeeping only
        let chi = make_char(5, 3, 2).unwrap();
        let params = GSumParams::new(&chi, 2, 2, 4, 9).unwrap();
        let reference = g_closed(&params, &SqrtBranch::canonical(5), chi.alpha_lift()).unwrap();
        for shift in 0..5u64 {
            for negate in [false, true] {
                let conv = ClosedConvention { alpha_shift: shift, negate_branch: negate };
                let v = g_closed(&params, &conv.branch(5), conv.alpha_lift(&chi)).unwrap();
                assert!(
                    (v - reference).norm() < 1e-9,
                    "shift={shift} negate={negate}: {v} vs {reference}"
                );
            }
        }
        // and across every individual branch
        for branch in SqrtBranch::all_branches(5) {
            let v = g_closed(&params, &branch, chi.alpha_lift()).unwrap();
            assert!((v - reference).norm() < 1e-9);
        }
    }

    #[test]
    fn calibration_selects_a_convention_at_smallest_cell() {
        let chi = make_char(3, 2, 1).unwrap();
        let conv = calibrate_closed_convention(&chi, 2, 1).unwrap();
        // lift/branch invariance means the canonical convention passes
        assert_eq!(conv, ClosedConvention::default());
        let conv2 = calibrate_closed_convention(&chi, 2, 2).unwrap();
        assert_eq!(conv2, ClosedConvention::default());
    }

    #[test]
    fn sigma_decomposition_of_g() {
        // opening both Kloosterman factors: p^((r-n)/2) Σ_σ Σ_u ψ_σ(u) = G(m, ℓ, c)
        for (p, n, r, c) in [(5u64, 3u32, 2u32, 1u64), (3, 4, 3, 2), (7, 2, 2, 1)] {
            let chi = make_char(p, n, 1).unwrap();
            let branch = SqrtBranch::canonical(p);
            let pn = chi.modulus();
            let squares: Vec<u64> = (1..pn).filter(|&x| legendre(x as i64, p) == 1).take(2).collect();
            for &m in &squares {
                for &ell in &squares {
                    let params = GSumParams::new(&chi, r, c, m as i64, ell as i64).unwrap();
                    let mut total = Complex64::new(0.0, 0.0);
                    for s1 in [1i64, -1] {
                        for s2 in [1i64, -1] {
                            let data = g_phase_data(&params, s1, s2, &branch, DomainPart::All).unwrap();
                            total += crate::statphase::direct_sum(&data);
                        }
                    }
                    let scaled = (p as f64).powf((r as f64 - n as f64) / 2.0) * total;
                    let reference = g_kloosterman(&params).unwrap();
                    assert!(
                        (scaled - reference).norm() < 1e-8 * (1.0 + reference.norm()),
                        "p={p} n={n} r={r} m={m} ℓ={ell}: {scaled} vs {reference}"
                    );
                }
            }
        }
    }

    #[test]
    fn g_stationary_matches_g_kloosterman() {
        for (p, n, r) in [(3u64, 4u32, 3u32), (5, 3, 2), (7, 2, 2)] {
            let chi = make_char(p, n, 1).unwrap();
            let branch = SqrtBranch::canonical(p);
            let pn = chi.modulus();
            let squares: Vec<u64> = (1..pn).filter(|&x| legendre(x as i64, p) == 1).take(3).collect();
            for &m in &squares {
                for &ell in &squares {
                    let params = GSumParams::new(&chi, r, 1, m as i64, ell as i64).unwrap();
                    let engine = g_stationary(&params, &branch).unwrap();
                    let reference = g_kloosterman(&params).unwrap();
                    assert!(
                        (engine - reference).norm() < 1e-8 * (1.0 + reference.norm()),
                        "p={p} n={n} r={r} m={m} ℓ={ell}"
                    );
                }
            }
        }
    }

    #[test]
    fn battery_reduces_to_direct_sums() {
        for (p, n) in [(3u64, 4u32), (5, 3)] {
            let chi = make_char(p, n, 1).unwrap();
            let battery = standard_battery(&chi).unwrap();
            assert!(battery.len() >= 8, "battery too small at p={p} n={n}");
            for member in &battery {
                let direct = crate::statphase::direct_sum(&member.data);
                let reduced = match member.reduction {
                    Reduction::Linear => crate::statphase::reduce_linear(&member.data).unwrap(),
                    Reduction::Quadratic => crate::statphase::reduce_quadratic(&member.data).unwrap(),
                };
                let tol = 1e-6 * chi.modulus() as f64;
                assert!(
                    (reduced.value - direct).norm() < tol,
                    "{}: {} vs {direct}",
                    member.label,
                    reduced.value
                );
                if let Some(sdt) = &member.sdt {
                    let bound = crate::statphase::second_derivative_bound(&member.data, sdt).unwrap();
                    assert!(direct.norm() <= bound * (1.0 + 1e-9), "{}: SDT bound violated", member.label);
                }
            }
        }
    }

    #[test]
    fn support_law_small_cell() {
        // in the regime n/2 ≤ r < n, 𝒞 vanishes whenever p^(n-r) ∤ m̃
        let chi = make_char(3, 4, 1).unwrap();
        let eval = GEvaluator::new(&chi, 3, 1).unwrap();
        for (l1, l2) in [(1i64, 1i64), (1, 4), (4, 13)] {
            let g1 = eval.g_vector(l1);
            let g2 = eval.g_vector(l2);
            for mt in 1..27i64 {
                if mt % 3 == 0 {
                    continue;
                }
                let params = CSumParams::new(&chi, 3, 1, 1, mt, l1, l2).unwrap();
                let sb = c_support_bound(&params).unwrap();
                assert!(sb.vanishes_predicted);
                let v = c_def_with_vectors(&params, &g1, &g2).unwrap();
                assert!(v.norm() <= 1e-3, "m̃={mt} ℓ=({l1},{l2}): |𝒞| = {}", v.norm());
            }
        }
    }

    #[test]
    fn cancellation_sweep_runs_and_respects_budget() {
        let cells = vec![CancellationCell { p: 3, n: 4, r: 3, k: 1, c: 1, d: 1 }];
        let spec = CancellationSpec {
            cells: cells.clone(),
            pairs_per_cell: 3,
            mtildes_per_pair: 4,
            exhaust_supported: false,
            seed: 7,
            budget: 100_000_000,
        };
        let rows = cancellation_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 3 * (3 + 4));
        for row in &rows {
            assert!(row.ratio.is_finite());
            if row.vanish_predicted {
                assert!(row.vanished, "predicted vanishing failed at m̃={}", row.m_tilde);
            }
        }
        // deterministic: same spec, same rows
        let rows2 = cancellation_sweep(&spec).unwrap();
        for (a, b) in rows.iter().zip(rows2.iter()) {
            assert_eq!(a.value, b.value);
            assert_eq!((a.ell1, a.ell2, a.m_tilde), (b.ell1, b.ell2, b.m_tilde));
        }
        // degenerate budget
        let starved = CancellationSpec { budget: 1, ..spec };
        assert!(matches!(cancellation_sweep(&starved), Err(Error::BudgetExceeded { .. })));
        // empty grid → empty table
        let empty = CancellationSpec {
            cells: vec![],
            pairs_per_cell: 3,
            mtildes_per_pair: 4,
            exhaust_supported: false,
            seed: 7,
            budget: 100,
        };
        assert!(cancellation_sweep(&empty).unwrap().is_empty());
    }

    #[test]
    fn k_full_agrees_with_factored_form() {
        let chi = make_char(3, 2, 1).unwrap();
        for (c, d) in [(1u64, 1u64), (2, 2), (4, 2), (2, 1)] {
            for mt in [0i64, 1, 3, 7] {
                let params = CSumParams::new(&chi, 2, c, d, mt, 1, 4).unwrap();
                let kf = k_full(&params).unwrap();
                assert!(
                    (kf.defining - kf.factored).norm() < 1e-6 * (1.0 + kf.defining.norm()),
                    "c={c} d={d} m̃={mt}: defining {} vs factored {}",
                    kf.defining,
                    kf.factored
                );
                assert!(
                    (kf.defining.norm() - kf.factored.norm()).abs() < 1e-6 * (1.0 + kf.defining.norm())
                );
            }
        }
    }
}
