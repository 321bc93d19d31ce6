//! Exact fixed-point arithmetic on `[0, 1)` and the number-theoretic helpers
//! the rest of the crate builds on.
//!
//! A [`UnitFraction`] stores `bits / 2^W` for a width `W <= 128`. All
//! arithmetic wraps modulo `2^W`, i.e. modulo one, so `{k alpha}` is a single
//! wrapping multiply.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default fixed-point width.
pub const DEFAULT_WIDTH: u32 = 128;

/// A number in `[0, 1)` stored as `bits / 2^width`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UnitFraction {
    bits: u128,
    width: u32,
}

#[inline]
fn width_mask(width: u32) -> u128 {
    if width == 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

fn check_width(width: u32) -> Result<()> {
    if width == 0 || width > 128 {
        return Err(Error::InvalidWidth(width));
    }
    Ok(())
}

impl UnitFraction {
    pub fn new(bits: u128, width: u32) -> Result<Self> {
        check_width(width)?;
        if bits & !width_mask(width) != 0 {
            return Err(Error::InvalidArgument(format!(
                "bits 0x{bits:x} do not fit in {width} bits"
            )));
        }
        Ok(Self { bits, width })
    }

    pub fn zero(width: u32) -> Result<Self> {
        Self::new(0, width)
    }

    /// `floor(numerator * 2^width / denominator)`, by binary long division.
    pub fn from_ratio(numerator: u128, denominator: u128, width: u32) -> Result<Self> {
        check_width(width)?;
        if denominator == 0 {
            return Err(Error::InvalidArgument("denominator is zero".into()));
        }
        if numerator >= denominator {
            return Err(Error::InvalidArgument(format!(
                "numerator {numerator} is not below denominator {denominator}"
            )));
        }
        Ok(Self {
            bits: long_division_bits(numerator, denominator, width),
            width,
        })
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    /// The bits rescaled to width 128 (exact, low bits zero-filled).
    pub fn bits128(&self) -> u128 {
        if self.width == 128 {
            self.bits
        } else {
            self.bits << (128 - self.width)
        }
    }

    /// Round-to-nearest double.
    pub fn to_f64(&self) -> f64 {
        // u128 -> f64 rounds to nearest; the power-of-two scaling is exact.
        (self.bits as f64) * (-(self.width as f64)).exp2()
    }

    /// `{k * self}`, exact modulo `2^-W`.
    pub fn mul_int(&self, k: u64) -> Self {
        Self {
            bits: self.bits.wrapping_mul(k as u128) & width_mask(self.width),
            width: self.width,
        }
    }

    /// Fixed-point sum modulo one. Both operands must share a width.
    pub fn wrapping_add(&self, other: &Self) -> Result<Self> {
        if self.width != other.width {
            return Err(Error::WidthMismatch(self.width, other.width));
        }
        Ok(Self {
            bits: self.bits.wrapping_add(other.bits) & width_mask(self.width),
            width: self.width,
        })
    }

    /// `{2^shift * self}` computed on the stored bits; vacated low bits are zero.
    pub fn shl(&self, shift: u32) -> Self {
        let bits = if shift >= self.width {
            0
        } else {
            (self.bits << shift) & width_mask(self.width)
        };
        Self {
            bits,
            width: self.width,
        }
    }

    /// Lowercase hex of the stored bits, padded to `ceil(width / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.width.div_ceil(4) as usize;
        format!("{:0digits$x}", self.bits)
    }

    pub fn from_hex(hex: &str, width: u32) -> Result<Self> {
        let trimmed = hex.trim_start_matches("0x");
        let bits = u128::from_str_radix(trimmed, 16)
            .map_err(|e| Error::Parse(format!("bad hex {hex:?}: {e}")))?;
        Self::new(bits, width)
    }

    /// Distance to the nearest integer, `min({t}, 1 - {t})`.
    pub fn nearest_int_distance(&self) -> f64 {
        let top = 1u128 << (self.width - 1);
        let dist = if self.bits <= top {
            self.bits
        } else {
            // 2^W - bits, computed without overflow for W = 128
            self.bits.wrapping_neg() & width_mask(self.width)
        };
        (dist as f64) * (-(self.width as f64)).exp2()
    }
}

impl fmt::Display for UnitFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}/2^{}", self.to_hex(), self.width)
    }
}

/// Binary long division: first `width` fractional bits of `num / den`, `num < den`.
fn long_division_bits(num: u128, den: u128, width: u32) -> u128 {
    let mut rem = num;
    let mut bits = 0u128;
    for _ in 0..width {
        // rem < den, so 2*rem < 2*den; track the carry when 2*rem overflows
        let carry = rem >> 127;
        rem <<= 1;
        bits <<= 1;
        if carry == 1 || rem >= den {
            rem = rem.wrapping_sub(den);
            bits |= 1;
        }
    }
    bits
}

pub fn make_unit_fraction(numerator: u128, denominator: u128, width: u32) -> Result<UnitFraction> {
    UnitFraction::from_ratio(numerator, denominator, width)
}

/// `{k a}` by wrapping multiply.
pub fn frac_mul_int(a: &UnitFraction, k: u64) -> UnitFraction {
    a.mul_int(k)
}

/// `min({t}, 1 - {t})` for finite `t`.
pub fn nearest_int_distance(t: f64) -> f64 {
    let f = t - t.floor();
    f.min(1.0 - f)
}

/// Source of the phases `{2^shift * alpha}` at full 128-bit precision.
///
/// A plain [`UnitFraction`] can only shift its stored bits, so deep phases
/// lose precision. [`SpecialAlpha`] values with a known binary expansion
/// regenerate the bits exactly at every depth.
pub trait BinaryPhase {
    fn phase(&self, shift: u32) -> UnitFraction;
}

impl BinaryPhase for UnitFraction {
    fn phase(&self, shift: u32) -> UnitFraction {
        let bits = if shift >= 128 { 0 } else { self.bits128() << shift };
        UnitFraction { bits, width: 128 }
    }
}

impl<P: BinaryPhase + ?Sized> BinaryPhase for &P {
    fn phase(&self, shift: u32) -> UnitFraction {
        (**self).phase(shift)
    }
}

/// `2^shift * multiplier * alpha` as a phase source.
#[derive(Clone, Copy, Debug)]
pub struct ScaledPhase<P> {
    pub base: P,
    pub multiplier: u64,
    pub shift: u32,
}

impl<P: BinaryPhase> BinaryPhase for ScaledPhase<P> {
    fn phase(&self, shift: u32) -> UnitFraction {
        self.base.phase(shift + self.shift).mul_int(self.multiplier)
    }
}

/// Which special parameter a [`SpecialAlpha`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlphaKind {
    /// `sum_{k>=0} 4^{-2^k}`.
    ShallitBeta,
    /// `2^{n-1}/(2^n+1) + beta`.
    TheoremAlpha(u32),
    /// `2^{n-1}/(2^n+1)`.
    RationalBad(u32),
    UserBits,
}

impl fmt::Display for AlphaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaKind::ShallitBeta => write!(f, "shallit_beta"),
            AlphaKind::TheoremAlpha(n) => write!(f, "theorem_alpha({n})"),
            AlphaKind::RationalBad(n) => write!(f, "rational_bad({n})"),
            AlphaKind::UserBits => write!(f, "user_bits"),
        }
    }
}

impl std::str::FromStr for AlphaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let with_n = |prefix: &str| -> Option<Result<u32>> {
            s.strip_prefix(prefix)
                .and_then(|rest| rest.strip_suffix(')'))
                .map(|n| {
                    n.parse::<u32>()
                        .map_err(|e| Error::Parse(format!("bad period in {s:?}: {e}")))
                })
        };
        match s {
            "shallit_beta" => Ok(AlphaKind::ShallitBeta),
            "user_bits" => Ok(AlphaKind::UserBits),
            _ => {
                if let Some(n) = with_n("theorem_alpha(") {
                    Ok(AlphaKind::TheoremAlpha(n?))
                } else if let Some(n) = with_n("rational_bad(") {
                    Ok(AlphaKind::RationalBad(n?))
                } else {
                    Err(Error::Parse(format!("unknown alpha kind {s:?}")))
                }
            }
        }
    }
}

/// A Kronecker parameter together with the recipe that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SpecialAlphaRepr", into = "SpecialAlphaRepr")]
pub struct SpecialAlpha {
    pub kind: AlphaKind,
    pub fraction: UnitFraction,
}

#[derive(Serialize, Deserialize)]
struct SpecialAlphaRepr {
    kind: String,
    width: u32,
    bits_hex: String,
}

impl From<SpecialAlpha> for SpecialAlphaRepr {
    fn from(a: SpecialAlpha) -> Self {
        SpecialAlphaRepr {
            kind: a.kind.to_string(),
            width: a.fraction.width,
            bits_hex: a.fraction.to_hex(),
        }
    }
}

impl TryFrom<SpecialAlphaRepr> for SpecialAlpha {
    type Error = Error;

    fn try_from(r: SpecialAlphaRepr) -> Result<Self> {
        Ok(SpecialAlpha {
            kind: r.kind.parse()?,
            fraction: UnitFraction::from_hex(&r.bits_hex, r.width)?,
        })
    }
}

/// Bits of beta: ones at binary positions 2, 4, 8, 16, ... after the point.
fn shallit_bits(width: u32) -> u128 {
    let mut bits = 0u128;
    let mut pos = 2u32;
    while pos <= width {
        bits |= 1u128 << (width - pos);
        pos *= 2;
    }
    bits
}

fn bad_rational(n: u32) -> Result<(u128, u128)> {
    if n == 0 {
        return Err(Error::InvalidArgument("period n must be at least 1".into()));
    }
    if n > 126 {
        return Err(Error::InvalidArgument(format!(
            "period {n} too large for 128-bit rationals"
        )));
    }
    Ok((1u128 << (n - 1), (1u128 << n) + 1))
}

/// `Σ_k 2^{-2^{k+1}}` truncated to `width` bits. Widths below 2 are rejected.
pub fn shallit_beta(width: u32) -> Result<SpecialAlpha> {
    check_width(width)?;
    if width < 2 {
        return Err(Error::InvalidWidth(width));
    }
    Ok(SpecialAlpha {
        kind: AlphaKind::ShallitBeta,
        fraction: UnitFraction {
            bits: shallit_bits(width),
            width,
        },
    })
}

/// `2^{n-1}/(2^n+1)` truncated to `width` bits.
pub fn rational_bad(n: u32, width: u32) -> Result<SpecialAlpha> {
    let (p, q) = bad_rational(n)?;
    Ok(SpecialAlpha {
        kind: AlphaKind::RationalBad(n),
        fraction: UnitFraction::from_ratio(p, q, width)?,
    })
}

/// `2^{n-1}/(2^n+1) + beta`, both truncated to `width` bits and added modulo one.
pub fn theorem_alpha(n: u32, width: u32) -> Result<SpecialAlpha> {
    let bad = rational_bad(n, width)?;
    let beta = shallit_beta(width)?;
    Ok(SpecialAlpha {
        kind: AlphaKind::TheoremAlpha(n),
        fraction: bad.fraction.wrapping_add(&beta.fraction)?,
    })
}

impl SpecialAlpha {
    pub fn user(fraction: UnitFraction) -> Self {
        SpecialAlpha {
            kind: AlphaKind::UserBits,
            fraction,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.fraction.to_f64()
    }
}

/// `2^shift mod q`.
fn pow2_mod(shift: u32, q: u128) -> u128 {
    if q < (1u128 << 64) {
        let mut result = 1u128 % q;
        let mut base = 2u128 % q;
        let mut e = shift;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base % q;
            }
            base = base * base % q;
            e >>= 1;
        }
        result
    } else {
        let mut r = 1u128 % q;
        for _ in 0..shift {
            // q < 2^127, so 2r does not overflow
            r = (r << 1) % q;
        }
        r
    }
}

fn rational_phase_bits(p: u128, q: u128, shift: u32) -> u128 {
    let p_mod = p % q;
    let t = pow2_mod(shift, q);
    // (p * 2^shift) mod q without overflow: multiply by doubling when needed
    let r = if q < (1u128 << 64) {
        p_mod * t % q
    } else {
        let mut acc = 0u128;
        let mut a = p_mod;
        let mut b = t;
        while b > 0 {
            if b & 1 == 1 {
                acc = (acc + a) % q;
            }
            a = (a << 1) % q;
            b >>= 1;
        }
        acc
    };
    long_division_bits(r, q, 128)
}

fn shallit_phase_bits(shift: u32) -> u128 {
    let mut bits = 0u128;
    let mut pos: u64 = 2;
    while pos <= shift as u64 + 128 {
        if pos > shift as u64 {
            let rel = (pos - shift as u64) as u32;
            bits |= 1u128 << (128 - rel);
        }
        pos *= 2;
    }
    bits
}

impl BinaryPhase for SpecialAlpha {
    fn phase(&self, shift: u32) -> UnitFraction {
        let bits = match self.kind {
            AlphaKind::ShallitBeta => shallit_phase_bits(shift),
            AlphaKind::RationalBad(n) => match bad_rational(n) {
                Ok((p, q)) => rational_phase_bits(p, q, shift),
                Err(_) => return self.fraction.phase(shift),
            },
            AlphaKind::TheoremAlpha(n) => match bad_rational(n) {
                Ok((p, q)) => rational_phase_bits(p, q, shift).wrapping_add(shallit_phase_bits(shift)),
                Err(_) => return self.fraction.phase(shift),
            },
            AlphaKind::UserBits => return self.fraction.phase(shift),
        };
        UnitFraction { bits, width: 128 }
    }
}

/// Partial quotients and convergents of a fixed-point fraction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFraction {
    /// `a_1, a_2, ...` in `[0; a_1, a_2, ...]`.
    pub coefficients: Vec<BigUint>,
    pub convergents: Vec<(BigUint, BigUint)>,
    /// The expansion of the truncated value ended before `max_terms`. Late
    /// coefficients of a truncated irrational are noise either way.
    pub terminated: bool,
}

/// Euclid's algorithm on `(bits, 2^W)`.
pub fn continued_fraction(a: &UnitFraction, max_terms: usize) -> Result<ContinuedFraction> {
    if a.is_zero() {
        return Err(Error::InvalidArgument(
            "continued fraction of zero is undefined".into(),
        ));
    }
    let mut num = BigUint::from(a.bits);
    let mut den = BigUint::one() << a.width;
    // value = num / den; invert repeatedly
    let mut coefficients = Vec::new();
    let mut convergents: Vec<(BigUint, BigUint)> = Vec::new();
    let (mut p_prev2, mut p_prev1) = (BigUint::one(), BigUint::zero());
    let (mut q_prev2, mut q_prev1) = (BigUint::zero(), BigUint::one());
    let mut terminated = false;
    while coefficients.len() < max_terms {
        let coeff = &den / &num;
        let rem = &den % &num;
        let p = &coeff * &p_prev1 + &p_prev2;
        let q = &coeff * &q_prev1 + &q_prev2;
        p_prev2 = std::mem::replace(&mut p_prev1, p.clone());
        q_prev2 = std::mem::replace(&mut q_prev1, q.clone());
        coefficients.push(coeff);
        convergents.push((p, q));
        if rem.is_zero() {
            terminated = true;
            break;
        }
        den = num;
        num = rem;
    }
    Ok(ContinuedFraction {
        coefficients,
        convergents,
        terminated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uf(bits: u128, width: u32) -> UnitFraction {
        UnitFraction::new(bits, width).unwrap()
    }

    #[test]
    fn make_unit_fraction_examples() {
        assert_eq!(make_unit_fraction(1, 2, 128).unwrap().bits(), 1u128 << 127);
        assert_eq!(make_unit_fraction(1, 3, 8).unwrap().bits(), 0b0101_0101);
        assert_eq!(make_unit_fraction(0, 1, 128).unwrap().bits(), 0);
        assert!(make_unit_fraction(1, 0, 8).is_err());
        assert!(make_unit_fraction(3, 3, 8).is_err());
    }

    #[test]
    fn long_division_near_u128_limit() {
        let den = u128::MAX;
        let num = den - 1;
        let f = make_unit_fraction(num, den, 128).unwrap();
        // (2^128 - 2)/(2^128 - 1) = 1 - 1/(2^128-1), floor of times 2^128 is 2^128 - 2
        assert_eq!(f.bits(), u128::MAX - 1);
    }

    #[test]
    fn frac_mul_int_examples() {
        let half = make_unit_fraction(1, 2, 128).unwrap();
        assert_eq!(frac_mul_int(&half, 3), half);
        assert_eq!(frac_mul_int(&uf(85, 8), 3).bits(), 255);
        assert!(frac_mul_int(&uf(85, 8), 0).is_zero());
    }

    #[test]
    fn shallit_beta_examples() {
        assert_eq!(shallit_beta(8).unwrap().fraction.bits(), 81);
        assert_eq!(shallit_beta(4).unwrap().fraction.bits(), 5);
        assert_eq!(shallit_beta(2).unwrap().fraction.bits(), 1);
        assert!(shallit_beta(1).is_err());
    }

    #[test]
    fn theorem_alpha_examples() {
        assert_eq!(theorem_alpha(1, 8).unwrap().fraction.bits(), 166);
        assert_eq!(rational_bad(1, 8).unwrap().fraction.bits(), 85);
        assert_eq!(rational_bad(2, 8).unwrap().fraction.bits(), 102);
        assert_eq!(theorem_alpha(2, 8).unwrap().fraction.bits(), 183);
        assert!(theorem_alpha(0, 8).is_err());
    }

    #[test]
    fn continued_fraction_examples() {
        let half = make_unit_fraction(1, 2, 128).unwrap();
        let cf = continued_fraction(&half, 10).unwrap();
        assert_eq!(cf.coefficients, vec![BigUint::from(2u32)]);
        assert!(cf.terminated);

        // Euclid on (85, 256): 256 = 3*85 + 1, 85 = 85*1
        let cf = continued_fraction(&uf(85, 8), 10).unwrap();
        assert_eq!(cf.coefficients, vec![BigUint::from(3u32), BigUint::from(85u32)]);
        assert_eq!(cf.convergents.last().unwrap(), &(BigUint::from(85u32), BigUint::from(256u32)));

        assert!(continued_fraction(&uf(0, 8), 10).is_err());
    }

    #[test]
    fn golden_ratio_expansion_is_all_ones() {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        // 53 significant bits are enough for the first couple of dozen quotients
        let bits = (phi * 2f64.powi(64)) as u128;
        let a = uf(bits << 64, 128);
        let cf = continued_fraction(&a, 30).unwrap();
        assert!(cf.coefficients[..25].iter().all(|c| c == &BigUint::one()));
    }

    #[test]
    fn nearest_int_distance_examples() {
        assert_eq!(nearest_int_distance(0.25), 0.25);
        assert_eq!(nearest_int_distance(2.75), 0.25);
        assert_eq!(nearest_int_distance(0.5), 0.5);
        assert_eq!(nearest_int_distance(-0.25), 0.25);
        assert_eq!(uf(0xc0, 8).nearest_int_distance(), 0.25);
        assert_eq!(uf(0x80, 8).nearest_int_distance(), 0.5);
    }

    #[test]
    fn special_alpha_json_round_trip() {
        for a in [
            theorem_alpha(3, 128).unwrap(),
            shallit_beta(64).unwrap(),
            rational_bad(5, 100).unwrap(),
            SpecialAlpha::user(uf(0x1234, 17)),
        ] {
            let s = serde_json::to_string(&a).unwrap();
            let back: SpecialAlpha = serde_json::from_str(&s).unwrap();
            assert_eq!(back, a);
        }
        let s = serde_json::to_string(&theorem_alpha(1, 8).unwrap()).unwrap();
        assert_eq!(s, r#"{"kind":"theorem_alpha(1)","width":8,"bits_hex":"a6"}"#);
    }

    #[test]
    fn exact_phases_match_shifted_bits_while_bits_last() {
        let a = theorem_alpha(3, 128).unwrap();
        for shift in 0..60 {
            let exact = a.phase(shift).bits();
            let shifted = a.fraction.phase(shift).bits();
            // the shifted truncation only differs in the vacated low bits (plus a carry)
            assert!(exact.abs_diff(shifted) < 1u128 << (shift + 2), "shift {shift}");
        }
    }

    #[test]
    fn exact_rational_phase_is_periodic() {
        // 2^{n-1}/(2^n+1) has period 2n under doubling
        for n in 1..8 {
            let a = rational_bad(n, 128).unwrap();
            assert_eq!(a.phase(0).bits(), a.phase(2 * n).bits());
            assert_eq!(a.phase(5).bits(), a.phase(5 + 2 * n * 40).bits());
        }
    }

    #[test]
    fn shallit_phase_deep() {
        let b = shallit_beta(128).unwrap();
        // {2^255 beta}: next set positions are 256 and 512, so 2^-1 exactly
        assert_eq!(b.phase(255).bits(), 1u128 << 127);
        assert_eq!(b.phase(0).bits(), b.fraction.bits());
    }
}
