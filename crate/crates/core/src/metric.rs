//! The transfer recurrence
//!
//! `Φ_{n,j+1}(x) = 2^{-n} Σ_k |sin πx| / (2^n |cos((x+k)π/2^n)|) Φ_{n,j}((x+k)/2^n)`,
//!
//! its ratio extrema `m_{n,j} <= λ <= M_{n,j}`, the constant `μ(n)` and the
//! integrals `∫ Π_{nL,c}`.
//!
//! The kernel `|sin πx| / (2^n |cos((x+k)π/2^n)|)` equals `Π_{n,c}((x+k)/2^n)`
//! by repeated angle doubling. The product form has no removable singularity
//! and is what the code evaluates.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sequences::PerturbSpec;
use crate::trigprod::{pi_product_f64, TrigProductParams};

/// Smallest grid accepted by [`phi_level`] and [`lambda_bracket`].
pub const MIN_GRID: u32 = 1 << 12;
/// Default grid size `G`.
pub const DEFAULT_GRID: u32 = 1 << 14;
/// Default bracket depth.
pub const DEFAULT_DEPTH: u32 = 12;
/// Largest supported period for the recurrence (the kernel has `2^n` terms).
pub const MAX_PERIOD: u32 = 16;

/// Monotone cubic Hermite interpolant on `G+1` equispaced nodes over `[0,1]`.
#[derive(Clone, Debug)]
pub struct Pchip {
    values: Vec<f64>,
    slopes: Vec<f64>,
    h: f64,
}

fn pchip_end_slope(d0: f64, d1: f64) -> f64 {
    let s = (3.0 * d0 - d1) / 2.0;
    if s.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

impl Pchip {
    pub fn new(values: Vec<f64>) -> Self {
        let g = values.len() - 1;
        assert!(g >= 2, "need at least three nodes");
        let h = 1.0 / g as f64;
        let secant: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut slopes = vec![0.0; g + 1];
        for i in 1..g {
            let (a, b) = (secant[i - 1], secant[i]);
            slopes[i] = if a * b <= 0.0 { 0.0 } else { 2.0 / (1.0 / a + 1.0 / b) };
        }
        slopes[0] = pchip_end_slope(secant[0], secant[1]);
        slopes[g] = -pchip_end_slope(-secant[g - 1], -secant[g - 2]);
        Pchip { values, slopes, h }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let g = self.values.len() - 1;
        let u = (x / self.h).clamp(0.0, g as f64);
        let i = (u as usize).min(g - 1);
        let s = u - i as f64;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[i]
            + h10 * self.h * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * self.h * self.slopes[i + 1]
    }
}

/// One level `Φ_{n,j} = exp(log_scale) * interp`, with the interpolant's
/// node values normalized to max 1.
#[derive(Clone, Debug)]
struct Level {
    interp: Pchip,
    log_scale: f64,
}

/// Levels `Φ_{n,0}, ..., Φ_{n,J}` on a common grid.
#[derive(Clone, Debug)]
pub struct PhiLadder {
    n: u32,
    grid_size: u32,
    kernel: TrigProductParams,
    levels: Vec<Level>,
}

fn check_period(n: u32) -> Result<()> {
    if n == 0 || n > MAX_PERIOD {
        return Err(Error::InvalidArgument(format!(
            "period {n} outside 1..={MAX_PERIOD}"
        )));
    }
    Ok(())
}

fn check_grid(grid_size: u32, min: u32) -> Result<()> {
    if grid_size < min || !grid_size.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "grid size {grid_size} must be even and at least {min}"
        )));
    }
    Ok(())
}

impl PhiLadder {
    /// Start at `Φ_{n,0} ≡ 1`. `grid_size` must be even and at least 2.
    pub fn new(n: u32, grid_size: u32) -> Result<Self> {
        check_period(n)?;
        check_grid(grid_size, 2)?;
        Ok(PhiLadder {
            n,
            grid_size,
            kernel: TrigProductParams::periodic(n, PerturbSpec::new(n)?),
            levels: vec![Level {
                interp: Pchip::new(vec![1.0; grid_size as usize + 1]),
                log_scale: 0.0,
            }],
        })
    }

    pub fn period(&self) -> u32 {
        self.n
    }

    pub fn grid_size(&self) -> u32 {
        self.grid_size
    }

    /// Deepest level built so far.
    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    fn node(&self, i: usize) -> f64 {
        i as f64 / self.grid_size as f64
    }

    /// `2^{-n} Σ_k Π_{n,c}((x+k)/2^n) ψ((x+k)/2^n)` for the normalized level `j`.
    fn transfer(&self, j: usize, x: f64) -> f64 {
        let m = 1u32 << self.n;
        let inv = 1.0 / m as f64;
        let interp = &self.levels[j].interp;
        let mut acc = 0.0;
        for k in 0..m {
            let t = (x + k as f64) * inv;
            let w = pi_product_f64(&self.kernel, t);
            if w != 0.0 {
                acc += w * interp.eval(t);
            }
        }
        acc * inv
    }

    /// Build levels until `depth() >= j`.
    pub fn extend_to(&mut self, j: u32) {
        while self.depth() < j {
            let top = self.levels.len() - 1;
            let raw: Vec<f64> = (0..=self.grid_size as usize)
                .into_par_iter()
                .map(|i| self.transfer(top, self.node(i)))
                .collect();
            let max = raw.iter().cloned().fold(0.0, f64::max);
            let log_scale = self.levels[top].log_scale + max.ln();
            let normalized = raw.into_iter().map(|v| v / max).collect();
            self.levels.push(Level {
                interp: Pchip::new(normalized),
                log_scale,
            });
        }
    }

    /// `Φ_{n,j}(x)` from the level-`j` interpolant.
    pub fn value_at(&self, j: u32, x: f64) -> f64 {
        let level = &self.levels[j as usize];
        level.log_scale.exp() * level.interp.eval(x)
    }

    /// `log Φ_{n,j}(x)` at grid node `i`.
    fn log_node(&self, j: usize, i: usize) -> f64 {
        let level = &self.levels[j];
        level.log_scale + level.interp.values()[i].ln()
    }

    /// `q_{n,j}(x) = Φ_{n,j+1}(x) / Φ_{n,j}(x)` off the grid, both sides by
    /// one application of the recurrence to the level below.
    pub fn ratio_at(&self, j: u32, x: f64) -> f64 {
        let j = j as usize;
        assert!(j < self.levels.len(), "level {j} not built");
        let num = self.levels[j].log_scale + self.transfer(j, x).ln();
        let den = if j == 0 {
            0.0
        } else {
            self.levels[j - 1].log_scale + self.transfer(j - 1, x).ln()
        };
        (num - den).exp()
    }

    /// `q_{n,j}` at every node; needs level `j+1`.
    pub fn ratio_grid(&self, j: u32) -> Vec<f64> {
        let j = j as usize;
        (0..=self.grid_size as usize)
            .map(|i| (self.log_node(j + 1, i) - self.log_node(j, i)).exp())
            .collect()
    }

    /// Snapshot of level `j` together with the grid extrema of `q_{n,j}`.
    pub fn grid(&mut self, j: u32) -> PhiGrid {
        self.extend_to(j + 1);
        let q = self.ratio_grid(j);
        let level = &self.levels[j as usize];
        PhiGrid {
            n: self.n,
            level: j,
            normalized: level.interp.values().to_vec(),
            log_scale: level.log_scale,
            max_ratio: q.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            min_ratio: q.iter().cloned().fold(f64::INFINITY, f64::min),
            interp: level.interp.clone(),
        }
    }
}

/// Samples of `Φ_{n,j}` on `G+1` nodes with the extrema of `q_{n,j}`.
#[derive(Clone, Debug)]
pub struct PhiGrid {
    pub n: u32,
    pub level: u32,
    /// Node values divided by their maximum.
    pub normalized: Vec<f64>,
    /// `log` of the factor removed from `normalized`.
    pub log_scale: f64,
    /// Max of `q_{n,j}` over the nodes.
    pub max_ratio: f64,
    /// Min of `q_{n,j}` over the nodes.
    pub min_ratio: f64,
    interp: Pchip,
}

impl PhiGrid {
    pub fn grid_size(&self) -> u32 {
        self.normalized.len() as u32 - 1
    }

    /// Node values with the scale restored (may underflow for deep levels).
    pub fn values(&self) -> Vec<f64> {
        let s = self.log_scale.exp();
        self.normalized.iter().map(|v| v * s).collect()
    }

    pub fn value_at(&self, x: f64) -> f64 {
        self.log_scale.exp() * self.interp.eval(x)
    }
}

/// `Φ_{n,j}` on a grid of `G >= 2^12` intervals.
pub fn phi_level(n: u32, j: u32, grid_size: u32) -> Result<PhiGrid> {
    check_grid(grid_size, MIN_GRID)?;
    let mut ladder = PhiLadder::new(n, grid_size)?;
    Ok(ladder.grid(j))
}

/// `μ(n) = 4^{-n} Σ_{k<2^n} |cos((1+2k)π/2^{n+1})|^{-1}`.
pub fn mu(n: u32) -> Result<f64> {
    check_period(n)?;
    let m = 1u64 << n;
    let denom = 2.0 * m as f64;
    let sum: f64 = (0..m)
        .map(|k| 1.0 / ((1 + 2 * k) as f64 * PI / denom).cos().abs())
        .sum();
    Ok(sum / (m as f64 * m as f64))
}

/// Ratio extrema at one level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRecord {
    pub j: u32,
    /// `m_{n,j}` after refinement.
    pub min_ratio: f64,
    /// `M_{n,j}` after refinement.
    pub max_ratio: f64,
    pub argmin: f64,
    pub argmax: f64,
    /// Node-only extrema, before refinement.
    pub grid_min: f64,
    pub grid_max: f64,
    pub exponent_lower: f64,
    pub exponent_upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaBracket {
    pub n: u32,
    pub j_max: u32,
    pub grid_size: u32,
    pub lower: f64,
    pub upper: f64,
    pub exponent_lower: f64,
    pub exponent_upper: f64,
    pub levels: Vec<LevelRecord>,
}

/// Tolerance for the monotonicity of `m_{n,j}` and `M_{n,j}` in `j`.
pub const MONOTONE_TOLERANCE: f64 = 1e-9;

impl LambdaBracket {
    /// Largest increase of `M_{n,j}` or decrease of `m_{n,j}` between levels.
    pub fn monotonicity_defect(&self) -> (f64, u32) {
        let mut worst = (0.0, 0);
        for w in self.levels.windows(2) {
            let d = (w[1].max_ratio - w[0].max_ratio).max(w[0].min_ratio - w[1].min_ratio);
            if d > worst.0 {
                worst = (d, w[1].j);
            }
        }
        worst
    }

    pub fn is_monotone(&self) -> bool {
        self.monotonicity_defect().0 <= MONOTONE_TOLERANCE
    }
}

/// `1 + log_{2^n} q`.
pub fn exponent_of(n: u32, q: f64) -> f64 {
    1.0 + q.ln() / (n as f64 * std::f64::consts::LN_2)
}

/// Golden-section search for the max of `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if b - a < 1e-15 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc > fd { (c, fc) } else { (d, fd) }
}

fn refine(ladder: &PhiLadder, j: u32, q: &[f64], maximize: bool) -> (f64, f64) {
    let sign = if maximize { 1.0 } else { -1.0 };
    let (i, &qi) = q
        .iter()
        .enumerate()
        .max_by(|a, b| (sign * a.1).total_cmp(&(sign * b.1)).then(b.0.cmp(&a.0)))
        .expect("non-empty grid");
    let g = ladder.grid_size() as usize;
    let x = ladder.node(i);
    let lo = ladder.node(i.saturating_sub(1));
    let hi = ladder.node((i + 1).min(g));
    let (xr, vr) = golden_max(|t| sign * ladder.ratio_at(j, t), lo, hi);
    let vr = sign * vr;
    // keep the node value when refinement does not improve on it
    if sign * vr > sign * qi { (xr, vr) } else { (x, qi) }
}

/// Per-level extrema of `q_{n,j}` for `j = 0..=j_max`, refined off the grid.
pub fn lambda_bracket_with(ladder: &mut PhiLadder, j_max: u32) -> LambdaBracket {
    ladder.extend_to(j_max + 1);
    let n = ladder.period();
    let levels: Vec<LevelRecord> = (0..=j_max)
        .map(|j| {
            let q = ladder.ratio_grid(j);
            let grid_max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let grid_min = q.iter().cloned().fold(f64::INFINITY, f64::min);
            let (argmax, max_ratio) = refine(ladder, j, &q, true);
            let (argmin, min_ratio) = refine(ladder, j, &q, false);
            LevelRecord {
                j,
                min_ratio,
                max_ratio,
                argmin,
                argmax,
                grid_min,
                grid_max,
                exponent_lower: exponent_of(n, min_ratio),
                exponent_upper: exponent_of(n, max_ratio),
            }
        })
        .collect();
    let last = levels.last().expect("j_max + 1 levels");
    LambdaBracket {
        n,
        j_max,
        grid_size: ladder.grid_size(),
        lower: last.min_ratio,
        upper: last.max_ratio,
        exponent_lower: last.exponent_lower,
        exponent_upper: last.exponent_upper,
        levels,
    }
}

/// Bracket `[m_{n,j_max}, M_{n,j_max}]` and its exponents.
pub fn lambda_bracket(n: u32, j_max: u32, grid_size: u32) -> Result<LambdaBracket> {
    check_grid(grid_size, MIN_GRID)?;
    let mut ladder = PhiLadder::new(n, grid_size)?;
    Ok(lambda_bracket_with(&mut ladder, j_max))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(q: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(q);
    for i in 0..q {
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if q == 0 { 1.0 } else if q == 1 { x } else { p1 };
            let pm1 = if q == 1 { 1.0 } else { p0 };
            dp = q as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Simpson on equispaced samples over `[0,1]` (even interval count).
fn simpson(values: &[f64]) -> f64 {
    let g = values.len() - 1;
    let h = 1.0 / g as f64;
    let mut s = values[0] + values[g];
    for (i, v) in values.iter().enumerate().take(g).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Largest `nL` for the recurrence path.
pub const MAX_RECURRENCE_FACTORS: u32 = 60;
/// Largest `nL` for the direct quadrature path.
pub const MAX_DIRECT_FACTORS: u32 = 24;
/// Paths must agree to this absolute difference.
pub const INTEGRAL_AGREEMENT: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralReport {
    pub n: u32,
    pub blocks: u32,
    /// `∫ Φ_{n,L}` by Simpson's rule on the grid.
    pub via_recurrence: Option<f64>,
    /// Gauss-Legendre with `Q` nodes on each cell of width `2^{-nL}`.
    pub direct: Option<f64>,
    /// `Some(false)` when both paths ran and differ by more than [`INTEGRAL_AGREEMENT`].
    pub agree: Option<bool>,
}

/// Direct quadrature of `Π_{nL,c}`. Inside each dyadic cell of width `2^{-nL}`
/// every factor is smooth.
pub fn integral_direct(n: u32, blocks: u32, quadrature_points: usize) -> Result<f64> {
    check_period(n)?;
    let r = n * blocks;
    if r > MAX_DIRECT_FACTORS {
        return Err(Error::InvalidArgument(format!(
            "nL = {r} exceeds {MAX_DIRECT_FACTORS} for direct quadrature"
        )));
    }
    if quadrature_points == 0 {
        return Err(Error::InvalidArgument("need at least one quadrature point".into()));
    }
    let params = TrigProductParams::periodic(r, PerturbSpec::new(n)?);
    let rule = gauss_legendre(quadrature_points);
    let cells = 1u64 << r;
    let width = 1.0 / cells as f64;
    // fixed-size chunks keep the summation order independent of the thread count
    let sum: f64 = (0..cells)
        .collect::<Vec<_>>()
        .par_chunks(1024)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&c| {
                    let left = c as f64 * width;
                    rule.iter()
                        .map(|&(x, w)| w * pi_product_f64(&params, left + 0.5 * width * (x + 1.0)))
                        .sum::<f64>()
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(sum * 0.5 * width)
}

/// `∫_0^1 Π_{nL,c}(α) dα` by the recurrence (`nL <= 60`) and directly
/// (`nL <= 24`), with the agreement flag when both apply.
pub fn integral_pi(n: u32, blocks: u32, quadrature_points: usize, grid_size: u32) -> Result<IntegralReport> {
    check_period(n)?;
    check_grid(grid_size, 2)?;
    let r = n.saturating_mul(blocks);
    if r > MAX_RECURRENCE_FACTORS {
        return Err(Error::InvalidArgument(format!(
            "nL = {r} exceeds {MAX_RECURRENCE_FACTORS}"
        )));
    }
    let mut ladder = PhiLadder::new(n, grid_size)?;
    let via_recurrence = Some(integral_from_ladder(&mut ladder, blocks));
    let direct = if r <= MAX_DIRECT_FACTORS {
        Some(integral_direct(n, blocks, quadrature_points)?)
    } else {
        None
    };
    let agree = match (via_recurrence, direct) {
        (Some(a), Some(b)) => Some((a - b).abs() <= INTEGRAL_AGREEMENT),
        _ => None,
    };
    Ok(IntegralReport {
        n,
        blocks,
        via_recurrence,
        direct,
        agree,
    })
}

fn integral_from_ladder(ladder: &mut PhiLadder, blocks: u32) -> f64 {
    ladder.extend_to(blocks);
    let level = &ladder.levels[blocks as usize];
    level.log_scale.exp() * simpson(level.interp.values())
}

/// Outcome of one structural check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Largest violation amount observed (non-positive when comfortably met).
    pub worst: f64,
    pub location: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructuralReport {
    pub n: u32,
    pub grid_size: u32,
    pub checks: Vec<CheckOutcome>,
}

impl StructuralReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
pub const CONCAVITY_TOLERANCE: f64 = 1e-8;
const SYMMETRY_LEVELS: u32 = 6;
const MONOTONE_LEVELS: u32 = 12;
const INTEGRAL_LEVELS: u32 = 10;

/// Symmetry about `1/2`, concavity of `Φ_{n,1}`, monotone ratio extrema and
/// `∫ Π_{nL,c} <= μ(n)^L`.
pub fn structural_checks(n: u32, grid_size: u32) -> Result<StructuralReport> {
    check_grid(grid_size, 2)?;
    let mut ladder = PhiLadder::new(n, grid_size)?;
    ladder.extend_to(MONOTONE_LEVELS + 1);
    let g = grid_size as usize;
    let mut checks = Vec::new();

    let mut worst = (f64::NEG_INFINITY, String::new());
    for j in 0..=SYMMETRY_LEVELS {
        let v = ladder.levels[j as usize].interp.values();
        for i in 0..=g / 2 {
            let d = (v[i] - v[g - i]).abs();
            if d > worst.0 {
                worst = (d, format!("j = {j}, x = {}", ladder.node(i)));
            }
        }
    }
    checks.push(CheckOutcome {
        name: "symmetry",
        passed: worst.0 <= SYMMETRY_TOLERANCE,
        worst: worst.0,
        location: worst.1,
    });

    let v = ladder.levels[1].interp.values();
    let scale = ladder.levels[1].log_scale.exp();
    let mut worst = (f64::NEG_INFINITY, String::new());
    for i in 1..g {
        let d = scale * (v[i - 1] - 2.0 * v[i] + v[i + 1]);
        if d > worst.0 {
            worst = (d, format!("x = {}", ladder.node(i)));
        }
    }
    checks.push(CheckOutcome {
        name: "concavity",
        passed: worst.0 <= CONCAVITY_TOLERANCE,
        worst: worst.0,
        location: worst.1,
    });

    let bracket = lambda_bracket_with(&mut ladder, MONOTONE_LEVELS);
    let (defect, at) = bracket.monotonicity_defect();
    checks.push(CheckOutcome {
        name: "monotonicity",
        passed: defect <= MONOTONE_TOLERANCE,
        worst: defect,
        location: format!("j = {at}"),
    });

    let mu_n = mu(n)?;
    let mut worst = (f64::NEG_INFINITY, String::new());
    for l in 1..=INTEGRAL_LEVELS {
        let integral = integral_from_ladder(&mut ladder, l);
        let bound = mu_n.powi(l as i32);
        let excess = integral / bound - 1.0;
        if excess > worst.0 {
            worst = (excess, format!("L = {l}"));
        }
    }
    checks.push(CheckOutcome {
        name: "integral_bound",
        passed: worst.0 <= 1e-9,
        worst: worst.0,
        location: worst.1,
    });

    Ok(StructuralReport {
        n,
        grid_size,
        checks,
    })
}
