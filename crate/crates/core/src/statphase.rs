//! Generic p-adic stationary-phase engine.
//!
//! A [`PhaseData`] bundles a summand ψ on a p^κ-stable domain T ⊆ Z_p with
//! evaluators for its phase derivatives φ₁ (and optionally φ₂), declared so
//! that
//!
//! ψ(u + p^κ t) = ψ(u) · θ(φ₁(u) p^κ t + ½ φ₂(u) p^(2κ) t²)
//!
//! holds exactly for t ∈ Z_p (or up to a θ-defect of order p^Ω(κ) for the
//! second-derivative test). [`reduce_linear`] and [`reduce_quadratic`]
//! collapse the complete sum Σ_{u mod p^n, u ∈ T} ψ(u) to its stationary
//! classes; both spot-check the declared contract on random (u, t) pairs
//! before trusting it.

use num_complex::Complex64;

use crate::characters::{PhaseAccumulator, UnitPhase};
use crate::modarith::{self, epsilon, inv, mul_mod, PrimePowerModulus};
use crate::padic::PadicApprox;
use crate::{Error, Result};

type DomainFn<'a> = dyn Fn(u64) -> bool + Send + Sync + 'a;
type PsiFn<'a> = dyn Fn(u64) -> UnitPhase + Send + Sync + 'a;
type PhiFn<'a> = dyn Fn(u64) -> Result<PadicApprox> + Send + Sync + 'a;
type OmegaFn = dyn Fn(u32) -> i64 + Send + Sync;

/// A summand with derivative data for stationary-phase reduction.
///
/// Evaluators must be pure; `domain` must depend only on u mod p^kappa, and
/// ψ only on u mod p^n.
pub struct PhaseData<'a> {
    pub q: PrimePowerModulus,
    pub domain: Box<DomainFn<'a>>,
    pub psi: Box<PsiFn<'a>>,
    pub phi1: Box<PhiFn<'a>>,
    pub phi2: Option<Box<PhiFn<'a>>>,
    /// Step exponent κ ≥ 1 at which the differentiability contract is declared.
    pub kappa: u32,
    /// Declared constant ord_p of φ₂ on T (required by the quadratic reduction).
    pub mu: Option<i64>,
    /// Error order Ω(κ) of the contract for κ ≥ κ₀ (second-derivative test);
    /// values ≥ 0 mean the relation is exact at that step.
    pub omega_order: Option<Box<OmegaFn>>,
    pub label: String,
}

/// Result of a stationary-phase reduction: the surviving residue classes with
/// their unimodular weights, and value = prefactor · Σ weights.
#[derive(Debug, Clone)]
pub struct ReducedSum {
    pub prefactor: Complex64,
    pub stationary_points: Vec<(u64, UnitPhase)>,
    pub value: Complex64,
}

impl PhaseData<'_> {
    fn p(&self) -> u64 {
        self.q.p()
    }

    /// ψ(u + p^κ t) computed literally, reducing the argument mod p^n.
    fn psi_shifted(&self, u: u64, kappa: u32, t: u64) -> UnitPhase {
        let pn = self.q.value();
        let arg = modarith::add_mod(u, mul_mod(self.q.pow(kappa), t % pn, pn), pn);
        (self.psi)(arg)
    }

    /// The declared phase increment θ(φ₁(u)·p^κ t [+ ½ φ₂(u)·p^(2κ) t²]).
    fn predicted_increment(&self, u: u64, kappa: u32, t: u64) -> Result<UnitPhase> {
        let linear = (self.phi1)(u)?.scale_pow(kappa as i32)?.mul_int(t as i128)?;
        let mut total = linear;
        if let Some(phi2) = &self.phi2 {
            let p = self.p();
            let prec = linear.abs_prec().max(4);
            let half = PadicApprox::integer(p, inv(2, p.pow(prec.min(crate::padic::max_prec(p))))? as i128, prec.min(crate::padic::max_prec(p)))?;
            let quad = phi2(u)?
                .scale_pow(2 * kappa as i32)?
                .mul_int((t as i128) * (t as i128))?
                .mul(&half)?;
            total = total.add(&quad)?;
        }
        Ok(total.theta())
    }

    /// Sample members of T mod p^n, deterministically.
    fn domain_samples(&self, want: usize) -> Vec<u64> {
        let pn = self.q.value();
        let mut out = Vec::with_capacity(want);
        let mut state = 0x9e3779b97f4a7c15u64 ^ pn;
        for _ in 0..want * 64 {
            state = splitmix64(state);
            let u = state % pn;
            if (self.domain)(u) {
                out.push(u);
                if out.len() == want {
                    break;
                }
            }
        }
        out
    }

    /// Spot-check the differentiability contract at random (u, t) pairs;
    /// exact equality of phases is required.
    pub fn check_contract(&self, samples: usize) -> Result<()> {
        let kappa = self.kappa;
        if kappa < 1 || kappa > self.q.n() {
            return Err(Error::InvalidArgument(format!(
                "step κ = {kappa} outside 1..=n = {}",
                self.q.n()
            )));
        }
        let mut state = 0xd1b54a32d192ed03u64 ^ self.q.value();
        for u in self.domain_samples(samples) {
            state = splitmix64(state);
            let t = state % self.q.pow(self.q.n() - kappa).max(2);
            let lhs = self.psi_shifted(u, kappa, t);
            let rhs = (self.psi)(u).mul(&self.predicted_increment(u, kappa, t)?);
            if lhs != rhs {
                return Err(Error::ContractViolation(format!(
                    "{}: ψ(u+p^κt) ≠ ψ(u)·θ(φ₁p^κt + ½φ₂p^(2κ)t²) at u = {u}, t = {t} (κ = {kappa}): {lhs} vs {rhs}",
                    self.label
                )));
            }
        }
        Ok(())
    }

    /// Spot-check the contract allowing a θ-defect whose order divides
    /// p^(-Ω(κ)); used by the second-derivative test.
    fn check_contract_with_slack(&self, samples: usize, kappa: u32, omega: i64) -> Result<()> {
        let mut state = 0xaef17502108ef2d9u64 ^ self.q.value() ^ kappa as u64;
        for u in self.domain_samples(samples) {
            state = splitmix64(state);
            let t = state % self.q.pow(self.q.n() - kappa.min(self.q.n())).max(2);
            let lhs = self.psi_shifted(u, kappa, t);
            let rhs = (self.psi)(u).mul(&self.predicted_increment(u, kappa, t)?);
            let defect = lhs.mul(&rhs.conj());
            let allowed = if omega >= 0 {
                1
            } else {
                self.p().pow(((-omega) as u32).min(62))
            };
            if allowed % defect.order() != 0 {
                return Err(Error::ContractViolation(format!(
                    "{}: contract defect {defect} has order not dividing p^{} at u = {u}, t = {t}, κ = {kappa}",
                    self.label,
                    -omega.min(0)
                )));
            }
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Literal summation Σ_{u mod p^n, u ∈ T} ψ(u) with exact phases.
pub fn direct_sum(data: &PhaseData<'_>) -> Complex64 {
    let mut acc = PhaseAccumulator::new();
    for u in 0..data.q.value() {
        if (data.domain)(u) {
            acc.add((data.psi)(u));
        }
    }
    acc.to_complex()
}

/// Linear stationary phase: under the exact first-order contract,
/// Σ_{u mod p^n, T} ψ(u) = p^(n-κ) Σ_{u mod p^κ, T, φ₁(u) ∈ p^(-κ)Z_p} ψ(u).
pub fn reduce_linear(data: &PhaseData<'_>) -> Result<ReducedSum> {
    data.check_contract(16)?;
    let kappa = data.kappa;
    let mut acc = PhaseAccumulator::new();
    let mut points = Vec::new();
    for u in 0..data.q.pow(kappa) {
        if !(data.domain)(u) {
            continue;
        }
        if (data.phi1)(u)?.ord_at_least(-(kappa as i64))? {
            let w = (data.psi)(u);
            points.push((u, w));
            acc.add(w);
        }
    }
    let prefactor = Complex64::new(data.q.pow(data.q.n() - kappa) as f64, 0.0);
    Ok(ReducedSum {
        prefactor,
        value: prefactor * acc.to_complex(),
        stationary_points: points,
    })
}

/// Quadratic stationary phase: with ord φ₂ = μ constant on T, -2n ≤ μ ≤ -2κ,
/// and μ = -2r - ρ,
/// Σψ = p^(n+μ/2) Σ_{u mod p^r, T, φ₁(u) ∈ p^(-r-ρ)Z_p}
///        ψ(u) ε(2̄(φ₂(u))₀, p^ρ) θ(-φ₁(u)²/(2φ₂(u))).
pub fn reduce_quadratic(data: &PhaseData<'_>) -> Result<ReducedSum> {
    let phi2 = data
        .phi2
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("quadratic reduction needs φ₂".into()))?;
    let mu = data
        .mu
        .ok_or_else(|| Error::InvalidArgument("quadratic reduction needs the declared μ = ord φ₂".into()))?;
    let n = data.q.n() as i64;
    let kappa = data.kappa as i64;
    if mu < -2 * n || mu > -2 * kappa {
        return Err(Error::InvalidArgument(format!(
            "need -2n ≤ μ ≤ -2κ, got μ = {mu}, n = {n}, κ = {kappa}"
        )));
    }
    data.check_contract(16)?;

    // μ = -2r - ρ with ρ ∈ {0, 1}
    let r = ((-mu) / 2) as u32;
    let rho = ((-mu) % 2) as u8;
    let p = data.p();
    let two_bar = inv(2, p)?;

    let mut acc = PhaseAccumulator::new();
    let mut points = Vec::new();
    for u in 0..data.q.pow(r) {
        if !(data.domain)(u) {
            continue;
        }
        let f2 = phi2(u)?;
        if f2.ord_signed() != Some(mu) {
            return Err(Error::ContractViolation(format!(
                "{}: ord φ₂({u}) = {:?} differs from the declared μ = {mu}",
                data.label,
                f2.ord_signed()
            )));
        }
        let f1 = (data.phi1)(u)?;
        if !f1.ord_at_least(-((r + rho as u32) as i64))? {
            continue;
        }
        let eps = epsilon(mul_mod(two_bar, f2.unit_part()?, p) as i64, p, rho)?;
        let gauss_phase = f1.mul(&f1)?.div(&f2.mul_int(2)?)?.neg().theta();
        let w = (data.psi)(u).mul(&UnitPhase::from(eps)).mul(&gauss_phase);
        points.push((u, w));
        acc.add(w);
    }
    // p^(n + μ/2) = p^(n - r) / √p^ρ
    let prefactor = Complex64::new(
        data.q.pow(data.q.n() - r) as f64 / (p as f64).sqrt().powi(rho as i32),
        0.0,
    );
    Ok(ReducedSum {
        prefactor,
        value: prefactor * acc.to_complex(),
        stationary_points: points,
    })
}

/// Parameters of the second-derivative test: φ₁ maps T into p^(-υ)Z_p, φ₂
/// into p^(-λ)Z_p^×, the contract holds with defect order Ω(κ) for κ ≥ κ₀,
/// and |ψ| ≤ ψ₀.
#[derive(Debug, Clone, Copy)]
pub struct SdtParams {
    pub upsilon: u32,
    pub lambda: u32,
    pub kappa0: u32,
    pub psi0: f64,
}

/// The second-derivative-test bound ψ₀ (p^n + p^υ + p^λ) p^min(κ₁-λ+κ₀, 0)
/// with κ₁ = max(λ/2, κ₀), implied constant 1 (measured separately).
///
/// Validates Ω(κ) ≥ min(2κ-λ+1, 0) and spot-checks the contract with the
/// allowed θ-defect before returning the bound.
pub fn second_derivative_bound(data: &PhaseData<'_>, params: &SdtParams) -> Result<f64> {
    let omega = data
        .omega_order
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("second derivative test needs Ω(κ)".into()))?;
    let n = data.q.n();
    let SdtParams { upsilon, lambda, kappa0, psi0 } = *params;
    if kappa0 < 1 {
        return Err(Error::InvalidArgument("κ₀ must be ≥ 1".into()));
    }
    for kappa in kappa0..=n {
        let need = (2 * kappa as i64 - lambda as i64 + 1).min(0);
        if omega(kappa) < need {
            return Err(Error::InvalidArgument(format!(
                "Ω({kappa}) = {} < min(2κ-λ+1, 0) = {need}",
                omega(kappa)
            )));
        }
    }
    // parameter contract: ord φ₁ ≥ -υ and ord φ₂ = -λ on samples
    if let Some(phi2) = &data.phi2 {
        for u in data.domain_samples(12) {
            if !(data.phi1)(u)?.ord_at_least(-(upsilon as i64))? {
                return Err(Error::InvalidArgument(format!(
                    "φ₁({u}) has ord below -υ = -{upsilon}"
                )));
            }
            if phi2(u)?.ord_signed() != Some(-(lambda as i64)) {
                return Err(Error::InvalidArgument(format!(
                    "φ₂({u}) does not have ord exactly -λ = -{lambda}"
                )));
            }
        }
    }
    for kappa in kappa0..=n.min(kappa0 + 2) {
        data.check_contract_with_slack(8, kappa, omega(kappa))?;
    }
    let p = data.q.p() as f64;
    let two_kappa1 = (lambda).max(2 * kappa0); // 2κ₁
    let half_exponent = (two_kappa1 as i64 - 2 * lambda as i64 + 2 * kappa0 as i64).min(0);
    let factor = p.powf(half_exponent as f64 / 2.0);
    Ok(psi0 * (p.powi(n as i32) + p.powi(upsilon as i32) + p.powi(lambda as i32)) * factor)
}

/// ψ(u) = θ(a·u/p^n) on all of Z_p: the geometric (orthogonality) member.
pub fn geometric_member(q: &PrimePowerModulus, a: u64) -> PhaseData<'static> {
    let (p, n, pn) = (q.p(), q.n(), q.value());
    let prec = crate::padic::max_prec(p).min(2 * n + 4);
    let a = a % pn;
    PhaseData {
        q: *q,
        domain: Box::new(|_| true),
        psi: Box::new(move |u| crate::characters::theta(mul_mod(a, u % pn, pn) as i128, p, n)),
        phi1: Box::new(move |_| PadicApprox::new(p, a as i128, n, prec)),
        phi2: Some(Box::new(move |_| PadicApprox::integer(p, 1, prec))),
        kappa: 1,
        mu: None,
        omega_order: Some(Box::new(|_| i64::MAX)),
        label: format!("geometric a={a} mod {pn}"),
    }
}

/// ψ(u) = θ(a·u²/p^n) on all of Z_p: the Gauss-sum member, with
/// φ₁ = 2au/p^n and φ₂ = 2a/p^n.
pub fn gauss_member(q: &PrimePowerModulus, a: u64) -> PhaseData<'static> {
    let (p, n, pn) = (q.p(), q.n(), q.value());
    let prec = crate::padic::max_prec(p).min(2 * n + 4);
    let a = a % pn;
    assert!(a % p != 0, "gauss member needs a unit coefficient");
    PhaseData {
        q: *q,
        domain: Box::new(|_| true),
        psi: Box::new(move |u| {
            crate::characters::theta(mul_mod(a, mul_mod(u % pn, u % pn, pn), pn) as i128, p, n)
        }),
        phi1: Box::new(move |u| PadicApprox::new(p, 2 * (mul_mod(a, u % pn, pn) as i128), n, prec)),
        phi2: Some(Box::new(move |_| PadicApprox::new(p, 2 * a as i128, n, prec))),
        kappa: (q.n() / 2).max(1),
        mu: Some(-(n as i64)),
        omega_order: Some(Box::new(|_| i64::MAX)),
        label: format!("gauss a={a} mod {pn}"),
    }
}

/// ψ(u) = θ((a·u + b·ū)/p^n) on units: the Kloosterman member, with
/// φ₁ = (a - b ū²)/p^n, φ₂ = 2b ū³/p^n and contract defect order 3κ - n.
pub fn kloosterman_member(q: &PrimePowerModulus, a: u64, b: u64) -> PhaseData<'static> {
    let (p, n, pn) = (q.p(), q.n(), q.value());
    let prec = crate::padic::max_prec(p).min(2 * n + 4);
    let (a, b) = (a % pn, b % pn);
    assert!(a % p != 0 && b % p != 0, "kloosterman member needs unit coefficients");
    let kappa = (n / 2).max(1);
    debug_assert!(3 * kappa >= n, "quadratic contract is exact only for 3κ ≥ n");
    PhaseData {
        q: *q,
        domain: Box::new(move |u| u % p != 0),
        psi: Box::new(move |u| {
            let ubar = inv(u % pn, pn).expect("unit domain");
            crate::characters::theta(
                modarith::add_mod(mul_mod(a, u % pn, pn), mul_mod(b, ubar, pn), pn) as i128,
                p,
                n,
            )
        }),
        phi1: Box::new(move |u| {
            let ubar = inv(u % pn, pn)?;
            let ub2 = mul_mod(ubar, ubar, pn);
            PadicApprox::new(p, a as i128 - mul_mod(b, ub2, pn) as i128, n, prec)
        }),
        phi2: Some(Box::new(move |u| {
            let ubar = inv(u % pn, pn)?;
            let ub3 = mul_mod(mul_mod(ubar, ubar, pn), ubar, pn);
            PadicApprox::new(p, 2 * mul_mod(b, ub3, pn) as i128, n, prec)
        })),
        kappa,
        mu: Some(-(n as i64)),
        omega_order: Some(Box::new(move |k| {
            if 3 * k as i64 - n as i64 >= 0 {
                i64::MAX
            } else {
                3 * k as i64 - n as i64
            }
        })),
        label: format!("kloosterman a={a} b={b} mod {pn}"),
    }
}
