//! Lacunary products `Π_{r,γ}(α) = ∏_{j<r} |cos(π 2^j α + γ_j π/2)|`, the
//! exponent `a(n)`, and the fixed-point apparatus used to bound them.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numtheory::{rational_bad, BinaryPhase};
use crate::sequences::PerturbSpec;

/// Factors below this count as exact zeros.
pub const HARD_ZERO: f64 = 1e-300;

/// Tolerance for [`GelfondCertificate::passed`].
pub const CERTIFY_TOLERANCE: f64 = 1e-12;

/// Largest period accepted by the closed-form helpers.
pub const MAX_PERIOD: u32 = 1000;

/// Phase-shift bits `γ_j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Gamma {
    /// The perturbing sequence `c^(ell)` of a given period.
    Periodic(PerturbSpec),
    /// Explicit bits; only the first `len` indices are defined.
    Explicit(Vec<u8>),
}

impl Gamma {
    pub fn bit(&self, j: u32) -> Option<u8> {
        match self {
            Gamma::Periodic(spec) => Some(spec.bit(j)),
            Gamma::Explicit(bits) => bits.get(j as usize).map(|&b| b & 1),
        }
    }
}

/// Factor count and shift bits of a product.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrigProductParams {
    r: u32,
    gamma: Gamma,
}

impl TrigProductParams {
    pub fn new(r: u32, gamma: Gamma) -> Result<Self> {
        if let Gamma::Explicit(bits) = &gamma {
            if bits.len() < r as usize {
                return Err(Error::InvalidArgument(format!(
                    "{} shift bits given for {r} factors",
                    bits.len()
                )));
            }
        }
        Ok(TrigProductParams { r, gamma })
    }

    /// `r` factors with `γ = c^(ell)` for period `n`.
    pub fn periodic(r: u32, spec: PerturbSpec) -> Self {
        TrigProductParams {
            r,
            gamma: Gamma::Periodic(spec),
        }
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn gamma(&self) -> &Gamma {
        &self.gamma
    }

    fn bit(&self, j: u32) -> u8 {
        self.gamma.bit(j).expect("validated in constructor")
    }
}

const TWO_POW_M128: f64 = 2.938_735_877_055_719e-39;

/// `|cos(π t + γ π/2)|` for `t = bits / 2^128`, reduced in fixed point so that
/// factors near zero keep full relative precision.
#[inline]
fn factor_from_bits(bits: u128, gamma: u8) -> f64 {
    let d = if gamma == 1 {
        // |sin π t| = sin(π · dist(t, Z))
        bits.min(bits.wrapping_neg())
    } else {
        // |cos π t| = sin(π · |t - 1/2|)
        bits.abs_diff(1u128 << 127)
    };
    (PI * d as f64 * TWO_POW_M128).sin()
}

/// Same factor for a double-precision phase `t ∈ [0, 1)`.
#[inline]
fn factor_from_f64(t: f64, gamma: u8) -> f64 {
    let d = if gamma == 1 { t.min(1.0 - t) } else { (t - 0.5).abs() };
    (PI * d).sin()
}

/// `log Π_{r,γ}(α)`, `-inf` when some factor falls below [`HARD_ZERO`].
///
/// Phases come from the exact shifts of `alpha`.
pub fn log_pi_product<P: BinaryPhase + ?Sized>(params: &TrigProductParams, alpha: &P) -> f64 {
    let mut acc = 0.0;
    for j in 0..params.r {
        let f = factor_from_bits(alpha.phase(j).bits128(), params.bit(j));
        if f < HARD_ZERO {
            return f64::NEG_INFINITY;
        }
        acc += f.ln();
    }
    acc
}

/// `Π_{r,γ}(α)`.
pub fn pi_product<P: BinaryPhase + ?Sized>(params: &TrigProductParams, alpha: &P) -> f64 {
    log_pi_product(params, alpha).exp()
}

/// `Π_{r,γ}(α)` for a double `α`. Doubling modulo one is exact in binary
/// floating point, so no phase accuracy is lost beyond that of `α` itself.
pub fn pi_product_f64(params: &TrigProductParams, alpha: f64) -> f64 {
    let mut t = alpha.rem_euclid(1.0);
    let mut prod = 1.0;
    for j in 0..params.r {
        let f = factor_from_f64(t, params.bit(j));
        if f < HARD_ZERO {
            return 0.0;
        }
        prod *= f;
        if prod < HARD_ZERO {
            return 0.0;
        }
        t = (2.0 * t).fract();
    }
    prod
}

fn check_period(n: u32) -> Result<()> {
    if n == 0 || n > MAX_PERIOD {
        return Err(Error::InvalidArgument(format!(
            "period {n} outside 1..={MAX_PERIOD}"
        )));
    }
    Ok(())
}

/// `π / (2 (2^n + 1))`.
fn half_angle(n: u32) -> f64 {
    FRAC_PI_2 / (2f64.powi(n as i32) + 1.0)
}

/// `a(n) = log_{2^n} cot(π / (2(2^n+1)))`.
pub fn a_exponent(n: u32) -> Result<f64> {
    check_period(n)?;
    let cot = 1.0 / half_angle(n).tan();
    Ok(cot.ln() / (n as f64 * std::f64::consts::LN_2))
}

/// `ξ_n = sin(2^n π / (2(2^n+1)))`, the non-trivial fixed point of `f_n`.
pub fn xi_fixed_point(n: u32) -> Result<f64> {
    check_period(n)?;
    Ok(half_angle(n).cos())
}

/// `G_n(ξ_n) = 2^{-n} cot(π / (2(2^n+1)))`.
pub fn g_n_at_xi(n: u32) -> Result<f64> {
    check_period(n)?;
    Ok(2f64.powi(-(n as i32)) / half_angle(n).tan())
}

fn check_unit(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("{x} outside [0, 1]")));
    }
    Ok(())
}

#[inline]
fn one_minus_sq_sqrt(x: f64) -> f64 {
    ((1.0 - x) * (1.0 + x)).max(0.0).sqrt()
}

/// `f_ν(x)` with `f_1(x) = 2x sqrt(1 - x^2)`, iterated.
pub fn f_iterate(nu: u32, x: f64) -> Result<f64> {
    check_unit(x)?;
    let mut v = x;
    for _ in 0..nu {
        v = (2.0 * v * one_minus_sq_sqrt(v)).clamp(0.0, 1.0);
    }
    Ok(v)
}

/// Below this `sqrt(1 - x^2)` the closed form loses digits and the
/// product form takes over.
const CLOSED_FORM_CUTOFF: f64 = 1e-3;

/// `G_n(x) = f_n(x) / (2^n sqrt(1 - x^2))`.
///
/// Evaluated through the angle `x = sin θ`, where `f_ν(x) = |sin 2^ν θ|`.
/// At `x = 1` the removable singularity resolves to `1`.
pub fn g_n(n: u32, x: f64) -> Result<f64> {
    check_period(n)?;
    check_unit(x)?;
    let c = one_minus_sq_sqrt(x);
    if c < CLOSED_FORM_CUTOFF {
        return g_n_product(n, x);
    }
    let theta = x.atan2(c);
    Ok((2f64.powi(n as i32) * theta).sin().abs() / (2f64.powi(n as i32) * c))
}

/// `G_n(x) = x ∏_{ν=1}^{n-1} sqrt(1 - f_ν(x)^2)`.
pub fn g_n_product(n: u32, x: f64) -> Result<f64> {
    check_period(n)?;
    check_unit(x)?;
    let theta = x.atan2(one_minus_sq_sqrt(x));
    let mut prod = x;
    for nu in 1..n {
        prod *= (2f64.powi(nu as i32) * theta).cos().abs();
    }
    Ok(prod)
}

/// `f_n(x)` via the angle-doubling form, used inside the certification sweep.
fn f_n_angle(n: u32, x: f64) -> f64 {
    let theta = x.atan2(one_minus_sq_sqrt(x));
    (2f64.powi(n as i32) * theta).sin().abs().min(1.0)
}

/// Result of the sweep over the two-branch fixed-point inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GelfondCertificate {
    pub n: u32,
    pub grid_size: u32,
    /// Max over sampled `x` of `min(G(x) - G(ξ), G(x) G(f_n(x)) - G(ξ)^2)`.
    pub max_violation: f64,
    pub worst_x: f64,
}

impl GelfondCertificate {
    pub fn passed(&self) -> bool {
        self.max_violation <= CERTIFY_TOLERANCE
    }
}

fn branch_violation(n: u32, x: f64, gxi: f64) -> f64 {
    let g = g_n(n, x).expect("x in [0, 1]");
    let gf = g_n(n, f_n_angle(n, x)).expect("f_n maps into [0, 1]");
    (g - gxi).min(g * gf - gxi * gxi)
}

/// `min(G_n(x) - G_n(ξ_n), G_n(x) G_n(f_n(x)) - G_n(ξ_n)^2)`; non-positive
/// wherever one of the two branches holds.
pub fn inequality_violation(n: u32, x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(branch_violation(n, x, g_n_at_xi(n)?))
}

/// Sweep `x = i/G` for `0 <= i <= G`, then refine around the worst grid point
/// by three rounds of bisection.
pub fn gelfond_certify(n: u32, grid_size: u32) -> Result<GelfondCertificate> {
    check_period(n)?;
    if grid_size < 1000 {
        return Err(Error::InvalidArgument(format!(
            "certification grid {grid_size} below 1000"
        )));
    }
    let gxi = g_n_at_xi(n)?;
    let h = 1.0 / grid_size as f64;
    let (mut worst, mut worst_x) = (0..=grid_size)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * h;
            (branch_violation(n, x, gxi), x)
        })
        .reduce(
            || (f64::NEG_INFINITY, f64::INFINITY),
            |a, b| match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Equal => if a.1 <= b.1 { a } else { b },
            },
        );
    let mut step = h / 2.0;
    for _ in 0..3 {
        let centre = worst_x;
        for x in [centre - step, centre + step] {
            if (0.0..=1.0).contains(&x) {
                let v = branch_violation(n, x, gxi);
                if v > worst {
                    worst = v;
                    worst_x = x;
                }
            }
        }
        step /= 2.0;
    }
    Ok(GelfondCertificate {
        n,
        grid_size,
        max_violation: worst,
        worst_x,
    })
}

/// Both sides of the equality case at `α = 2^{n-1}/(2^n+1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharpnessReport {
    pub n: u32,
    pub blocks: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub log_lhs: f64,
    pub log_rhs: f64,
    pub relative_difference: f64,
}

/// `Π_{nL,c}(2^{n-1}/(2^n+1))` against `2^{-nL} cot(π/(2(2^n+1)))^L`, both in
/// log space. Phases of the rational are exact at every depth.
pub fn sharpness_identity(n: u32, blocks: u32) -> Result<SharpnessReport> {
    if n == 0 || blocks == 0 || n as u64 * blocks as u64 > 1000 {
        return Err(Error::InvalidArgument(format!(
            "need n >= 1, L >= 1, nL <= 1000 (got n = {n}, L = {blocks})"
        )));
    }
    let alpha = rational_bad(n, 128)?;
    let params = TrigProductParams::periodic(n * blocks, PerturbSpec::new(n)?);
    let log_lhs = log_pi_product(&params, &alpha);
    let log_rhs = blocks as f64 * g_n_at_xi(n)?.ln();
    Ok(SharpnessReport {
        n,
        blocks,
        lhs: log_lhs.exp(),
        rhs: log_rhs.exp(),
        log_lhs,
        log_rhs,
        relative_difference: (log_lhs - log_rhs).exp_m1().abs(),
    })
}

/// Bound from the block decomposition: `Π_{r,c^(ell)}(α) <= G_n(ξ_n)^{d-1}`
/// where `r - j0 = d n + ρ` and `j0` is the first index with `c^(ell)_{j0} = 1`.
pub fn block_upper_bound(n: u32, ell: u32, r: u32) -> Result<f64> {
    let j0 = (n - ell % n) % n;
    let d = r.saturating_sub(j0) / n;
    Ok(g_n_at_xi(n)?.powi(d as i32 - 1))
}
