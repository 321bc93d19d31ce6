//! Exponential sums over the perturbed index sets and the bounds built from them.
//!
//! `e(t) = exp(2πi t)`. Every phase is reduced modulo one in fixed point before
//! it reaches floating point.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numtheory::{BinaryPhase, ScaledPhase, UnitFraction};
use crate::sequences::{weighted_digit_sum, MkIter, PerturbSpec};
use crate::trigprod::{pi_product, TrigProductParams};

const TWO_POW_M128: f64 = 2.938_735_877_055_719e-39;

/// Largest `M` accepted by [`exp_sum_mk`].
pub const MAX_MK_TERMS: u64 = 1 << 24;
/// Largest `V` accepted by [`two_additive_bound_check`].
pub const MAX_TWO_ADDITIVE_TERMS: u64 = 1 << 22;
/// Largest `nL` for the brute-force identity helpers.
pub const MAX_IDENTITY_FACTORS: u32 = 24;

/// Compensated sum of complex terms.
#[derive(Clone, Copy, Debug, Default)]
struct KahanComplex {
    sum: Complex64,
    comp: Complex64,
}

impl KahanComplex {
    #[inline]
    fn add(&mut self, z: Complex64) {
        let y = z - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

#[inline]
fn e_bits(bits: u128) -> Complex64 {
    let angle = TAU * (bits as f64 * TWO_POW_M128);
    Complex64::new(angle.cos(), angle.sin())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpSumResult {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

impl ExpSumResult {
    fn from(z: Complex64) -> Self {
        ExpSumResult {
            re: z.re,
            im: z.im,
            modulus: z.norm(),
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `Σ_{k<M} e(m_k α)` over the even-parity indices of period `n`.
pub fn exp_sum_mk(n: u32, count: u64, alpha: &UnitFraction) -> Result<ExpSumResult> {
    if count > MAX_MK_TERMS {
        return Err(Error::InvalidArgument(format!(
            "M = {count} exceeds {MAX_MK_TERMS}"
        )));
    }
    let a = alpha.bits128();
    let mut acc = KahanComplex::default();
    for m in MkIter::new(n)?.take(count as usize) {
        // {m α} modulo one at the full fixed-point width
        acc.add(e_bits(a.wrapping_mul(m as u128)));
    }
    Ok(ExpSumResult::from(acc.sum))
}

/// `|Σ_{v<V} e(f(v))|` against `Σ_{r=0}^{⌊log2 V⌋} 2^r Π_{r,c^(ell)}(2^ell h α)` for
/// the 2-additive `f(v) = 2^ell h α v + s_{c^(ell)}(v)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoAdditiveCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl TwoAdditiveCheck {
    /// `lhs <= rhs` up to `1e-6 V` of rounding slack.
    pub fn holds(&self, terms: u64) -> bool {
        self.lhs <= self.rhs + 1e-6 * terms as f64
    }
}

pub fn two_additive_bound_check<P: BinaryPhase>(
    ell: u32,
    h: u64,
    alpha: &P,
    n: u32,
    terms: u64,
) -> Result<TwoAdditiveCheck> {
    if terms == 0 || terms > MAX_TWO_ADDITIVE_TERMS {
        return Err(Error::InvalidArgument(format!(
            "V = {terms} outside 1..={MAX_TWO_ADDITIVE_TERMS}"
        )));
    }
    let spec = PerturbSpec::shifted(n, ell)?;
    let beta = ScaledPhase {
        base: alpha,
        multiplier: h,
        shift: ell,
    };
    let b = beta.phase(0).bits128();
    let mask = spec.digit_mask();
    let mut acc = KahanComplex::default();
    for v in 0..terms {
        let z = e_bits(b.wrapping_mul(v as u128));
        acc.add(if (v & mask).count_ones() % 2 == 1 { -z } else { z });
    }
    let top = 63 - terms.leading_zeros();
    let rhs = (0..=top)
        .map(|r| 2f64.powi(r as i32) * pi_product(&TrigProductParams::periodic(r, spec), &beta))
        .sum();
    Ok(TwoAdditiveCheck {
        lhs: acc.sum.norm(),
        rhs,
    })
}

/// `|∏_{j<r} (1 + e(f(2^j)))|` for the same `f`; equals the sum over `v < 2^r`.
pub fn telescoped_product<P: BinaryPhase>(ell: u32, h: u64, alpha: &P, n: u32, r: u32) -> Result<f64> {
    let spec = PerturbSpec::shifted(n, ell)?;
    let beta = ScaledPhase {
        base: alpha,
        multiplier: h,
        shift: ell,
    };
    let mut prod = Complex64::new(1.0, 0.0);
    for j in 0..r {
        // f(2^j) = {2^j β} + c^(ell)_j / 2
        let half = (spec.bit(j) as u128) << 127;
        prod *= Complex64::new(1.0, 0.0) + e_bits(beta.phase(j).bits128().wrapping_add(half));
    }
    Ok(prod.norm())
}

/// `N`, `H`, `K` with `1 <= H, K <= N` and `N >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundParams {
    pub n_points: u64,
    pub h_max: u64,
    pub k_max: u64,
}

impl BoundParams {
    pub fn new(n_points: u64, h_max: u64, k_max: u64) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidArgument("N must be at least 2".into()));
        }
        if h_max == 0 || k_max == 0 || h_max > n_points || k_max > n_points {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= H, K <= N (got H = {h_max}, K = {k_max}, N = {n_points})"
            )));
        }
        Ok(BoundParams {
            n_points,
            h_max,
            k_max,
        })
    }
}

/// One `(ell, h)` summand, before the `1/h` weight.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub ell: u32,
    pub h: u64,
    /// `1 / ‖2^ell h α‖`, infinite when the distance is zero.
    pub term_norm: f64,
    /// `Σ_r 2^r Π_{r,c^(ell)}(2^ell h α)`.
    pub term_prod: f64,
}

/// The four summands of the upper bound, kept separate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundTerms {
    pub n_over_k: f64,
    pub n_over_h_log: f64,
    pub log_squared: f64,
    pub double_sum: f64,
    pub rows: Vec<BoundRow>,
    /// One message per row whose distance term diverged.
    pub diagnostics: Vec<String>,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.n_over_k + self.n_over_h_log + self.log_squared + self.double_sum
    }
}

#[inline]
fn floor_log2(x: u64) -> u32 {
    63 - x.leading_zeros()
}

/// `N/K + (N/H) log N + log^2 N + Σ_{ell=1}^{⌊log2 K⌋} Σ_{h=1}^{⌊H/2^ell⌋} (1/h)
/// [1/‖2^ell h α‖ + Σ_{r=0}^{⌊log2 N⌋-ell} 2^r Π_{r,c^(ell)}(2^ell h α)]`,
/// natural logarithms throughout.
pub fn prop21_rhs<P: BinaryPhase + Sync>(params: &BoundParams, n: u32, alpha: &P) -> Result<BoundTerms> {
    PerturbSpec::new(n)?;
    let nf = params.n_points as f64;
    let log_n = nf.ln();
    let log2_n = floor_log2(params.n_points);
    let ells: Vec<u32> = (1..=floor_log2(params.k_max)).collect();
    let per_ell: Vec<Vec<BoundRow>> = ells
        .par_iter()
        .map(|&ell| {
            let spec = PerturbSpec::shifted(n, ell).expect("period checked");
            let h_top = params.h_max >> ell;
            let r_top = log2_n.saturating_sub(ell);
            (1..=h_top)
                .map(|h| {
                    let beta = ScaledPhase {
                        base: alpha,
                        multiplier: h,
                        shift: ell,
                    };
                    let dist = beta.phase(0).nearest_int_distance();
                    let term_norm = if dist == 0.0 { f64::INFINITY } else { 1.0 / dist };
                    let term_prod = (0..=r_top)
                        .map(|r| 2f64.powi(r as i32) * pi_product(&TrigProductParams::periodic(r, spec), &beta))
                        .sum();
                    BoundRow {
                        ell,
                        h,
                        term_norm,
                        term_prod,
                    }
                })
                .collect()
        })
        .collect();
    let rows: Vec<BoundRow> = per_ell.into_iter().flatten().collect();
    let double_sum = rows
        .iter()
        .fold(0.0, |acc, r| acc + (r.term_norm + r.term_prod) / r.h as f64);
    let diagnostics = rows
        .iter()
        .filter(|r| r.term_norm.is_infinite())
        .map(|r| format!("‖2^{} * {} * alpha‖ = 0 at the fixed-point width", r.ell, r.h))
        .collect();
    Ok(BoundTerms {
        n_over_k: nf / params.k_max as f64,
        n_over_h_log: nf / params.h_max as f64 * log_n,
        log_squared: log_n * log_n,
        double_sum,
        rows,
        diagnostics,
    })
}

fn check_factors(r: u32) -> Result<()> {
    if r > MAX_IDENTITY_FACTORS {
        return Err(Error::InvalidArgument(format!(
            "nL = {r} exceeds {MAX_IDENTITY_FACTORS}"
        )));
    }
    Ok(())
}

/// `|Σ_{m<2^r} e(mα + s_c(m)/2)|` summed term by term.
pub fn signed_exp_sum(n: u32, r: u32, alpha: &UnitFraction) -> Result<f64> {
    check_factors(r)?;
    let spec = PerturbSpec::new(n)?;
    let a = alpha.bits128();
    let mut acc = KahanComplex::default();
    for m in 0..1u64 << r {
        let z = e_bits(a.wrapping_mul(m as u128));
        acc.add(if weighted_digit_sum(m, &spec) == 1 { -z } else { z });
    }
    Ok(acc.sum.norm())
}

/// `|Σ_{m<2^r} e(mα)|` by direct summation and by `|sin(2^r πα)| / |sin πα|`.
pub fn geometric_sum(r: u32, alpha: &UnitFraction) -> Result<(f64, f64)> {
    check_factors(r)?;
    let a = alpha.bits128();
    let mut acc = KahanComplex::default();
    for m in 0..1u64 << r {
        acc.add(e_bits(a.wrapping_mul(m as u128)));
    }
    Ok((acc.sum.norm(), sine_ratio(alpha, r)))
}

/// `|sin(2^r π α)| / |sin(π α)|`, with both phases reduced exactly.
pub fn sine_ratio<P: BinaryPhase + ?Sized>(alpha: &P, r: u32) -> f64 {
    let s = |bits: u128| (PI * bits.min(bits.wrapping_neg()) as f64 * TWO_POW_M128).sin();
    s(alpha.phase(r).bits128()) / s(alpha.phase(0).bits128())
}

/// `Σ_{m<2^r} e(mα) (1 + (-1)^{s_c(m)}) / 2` and `Σ_{k<2^{r-1}} e(m_k α)`.
pub fn identity_split(n: u32, r: u32, alpha: &UnitFraction) -> Result<(Complex64, Complex64)> {
    check_factors(r)?;
    if r == 0 {
        return Err(Error::InvalidArgument("need nL >= 1".into()));
    }
    let spec = PerturbSpec::new(n)?;
    let a = alpha.bits128();
    let mut acc = KahanComplex::default();
    for m in 0..1u64 << r {
        let z = e_bits(a.wrapping_mul(m as u128));
        let z2 = z + if weighted_digit_sum(m, &spec) == 1 { -z } else { z };
        acc.add(z2 * 0.5);
    }
    let direct = exp_sum_mk(n, 1 << (r - 1), alpha)?.value();
    Ok((acc.sum, direct))
}

/// `2^{nL-3} Π_{nL,c}(α) - |sin(2^{nL}πα)| / (8 sin πα)`, a lower bound for
/// `N D*_N` at `N = 2^{nL}`.
pub fn discrepancy_lower_bound<P: BinaryPhase + ?Sized>(n: u32, blocks: u32, alpha: &P) -> Result<f64> {
    let r = n * blocks;
    let prod = pi_product(&TrigProductParams::periodic(r, PerturbSpec::new(n)?), alpha);
    Ok(2f64.powi(r as i32 - 3) * prod - sine_ratio(alpha, r) / 8.0)
}

/// `2^{nL-1} Π_{nL,c}(α) - |sin(2^{nL}πα)| / (2 sin πα)`, a lower bound for
/// `|Σ_{k<2^{nL-1}} e(m_k α)|`.
pub fn exp_sum_lower_bound<P: BinaryPhase + ?Sized>(n: u32, blocks: u32, alpha: &P) -> Result<f64> {
    let r = n * blocks;
    let prod = pi_product(&TrigProductParams::periodic(r, PerturbSpec::new(n)?), alpha);
    Ok(2f64.powi(r as i32 - 1) * prod - sine_ratio(alpha, r) / 2.0)
}
