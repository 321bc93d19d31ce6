//! The perturbed Halton component `x_k(n)`, the Kronecker component `{k alpha}`
//! and the index sequence `m_k`.
//!
//! The generating matrix is the identity with its first row replaced by the
//! perturbing sequence `c`, which has period `n` and a single one per period.
//! It is never materialized: `y_0` is a masked popcount parity and
//! `y_i = k_i` for `i >= 1`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::UnitFraction;

/// Period-`n` perturbing sequence, optionally shifted by `ell`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PerturbSpec {
    period: u32,
    shift: u32,
}

impl PerturbSpec {
    pub fn new(period: u32) -> Result<Self> {
        Self::shifted(period, 0)
    }

    pub fn shifted(period: u32, shift: u32) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidArgument("period n must be at least 1".into()));
        }
        Ok(Self { period, shift })
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn shift(&self) -> u32 {
        self.shift
    }

    /// `c^(ell)_j = c_{j + ell}`.
    pub fn bit(&self, j: u32) -> u8 {
        (j as u64 + self.shift as u64).is_multiple_of(self.period as u64) as u8
    }

    /// Positions `i < 64` with `c^(ell)_i = 1`.
    pub fn digit_mask(&self) -> u64 {
        (0..64).filter(|&i| self.bit(i) == 1).fold(0u64, |m, i| m | (1u64 << i))
    }
}

/// Binary digits of a non-negative integer, least significant first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitVector(Vec<u8>);

impl DigitVector {
    pub fn of(k: u64) -> Self {
        let len = 64 - k.leading_zeros() as usize;
        DigitVector((0..len).map(|i| ((k >> i) & 1) as u8).collect())
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    /// Digit `i`; zero beyond the expansion.
    pub fn digit(&self, i: usize) -> u8 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn value(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &d)| acc | ((d as u64) << i))
    }
}

/// `s_{c^(ell)}(k) mod 2`: parity of the digits of `k` at positions `i` with `c^(ell)_i = 1`.
pub fn weighted_digit_sum(k: u64, spec: &PerturbSpec) -> u8 {
    ((k & spec.digit_mask()).count_ones() & 1) as u8
}

/// Precomputed mask for repeated evaluation.
#[derive(Clone, Copy, Debug)]
struct DigitParity(u64);

impl DigitParity {
    fn new(spec: &PerturbSpec) -> Self {
        DigitParity(spec.digit_mask())
    }

    #[inline]
    fn of(&self, k: u64) -> u8 {
        ((k & self.0).count_ones() & 1) as u8
    }
}

#[inline]
fn digital_bits(k: u64, y0: u8) -> u128 {
    // digit k_i lands at binary position i+1 after the point, i.e. bit 127 - i
    let mirrored = (k as u128).reverse_bits() & !(1u128 << 127);
    mirrored | ((y0 as u128) << 127)
}

/// `x_k(n)` as a 128-bit fraction. Generation uses the unshifted sequence.
pub fn digital_point(k: u64, spec: &PerturbSpec) -> Result<UnitFraction> {
    if spec.shift != 0 {
        return Err(Error::InvalidArgument(
            "point generation uses the unshifted perturbing sequence".into(),
        ));
    }
    UnitFraction::new(digital_bits(k, weighted_digit_sum(k, spec)), 128)
}

/// `z_k(n) = (x_k(n), {k alpha})`.
pub fn hybrid_point(
    k: u64,
    spec: &PerturbSpec,
    alpha: &UnitFraction,
) -> Result<(UnitFraction, UnitFraction)> {
    Ok((digital_point(k, spec)?, alpha.mul_int(k)))
}

/// The first `count` integers whose digits at positions `0, n, 2n, ...` have
/// even sum, i.e. the indices with `x_k(n) < 1/2`.
pub fn mk_sequence(n: u32, count: usize) -> Result<Vec<u64>> {
    MkIter::new(n).map(|it| it.take(count).collect())
}

/// Streaming form of [`mk_sequence`].
#[derive(Clone, Debug)]
pub struct MkIter {
    parity: DigitParity,
    next: u64,
}

impl MkIter {
    pub fn new(n: u32) -> Result<Self> {
        Ok(MkIter {
            parity: DigitParity::new(&PerturbSpec::new(n)?),
            next: 0,
        })
    }
}

impl Iterator for MkIter {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            let m = self.next;
            self.next = self.next.checked_add(1)?;
            if self.parity.of(m) == 0 {
                return Some(m);
            }
        }
    }
}

/// How a point set was produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSetMeta {
    pub period: u32,
    pub alpha: String,
    pub count: usize,
}

/// Finite 2D point set with exact coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet2 {
    pub points: Vec<(UnitFraction, UnitFraction)>,
    pub meta: PointSetMeta,
}

impl PointSet2 {
    /// Wraps arbitrary points, e.g. for discrepancy tests.
    pub fn from_points(points: Vec<(UnitFraction, UnitFraction)>) -> Self {
        let count = points.len();
        PointSet2 {
            points,
            meta: PointSetMeta {
                period: 0,
                alpha: "explicit".into(),
                count,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV rows `k,x_bits_hex,y_bits_hex,x_float,y_float` (header included).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,x_bits_hex,y_bits_hex,x_float,y_float")?;
        for (k, (x, y)) in self.points.iter().enumerate() {
            writeln!(
                out,
                "{k},{},{},{},{}",
                x.to_hex(),
                y.to_hex(),
                x.to_f64(),
                y.to_f64()
            )?;
        }
        Ok(())
    }
}

/// `z_0, ..., z_{N-1}`; output is independent of how the index range is split
/// across threads.
pub fn generate_point_set(
    spec: &PerturbSpec,
    alpha: &UnitFraction,
    count: usize,
    alpha_label: &str,
) -> Result<PointSet2> {
    if count == 0 {
        return Err(Error::InvalidArgument("point count must be at least 1".into()));
    }
    if spec.shift != 0 {
        return Err(Error::InvalidArgument(
            "point generation uses the unshifted perturbing sequence".into(),
        ));
    }
    let parity = DigitParity::new(spec);
    let points = (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let x = UnitFraction::new(digital_bits(k, parity.of(k)), 128)
                .expect("128-bit digital point");
            (x, alpha.mul_int(k))
        })
        .collect();
    Ok(PointSet2 {
        points,
        meta: PointSetMeta {
            period: spec.period,
            alpha: alpha_label.to_string(),
            count,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(num: u128, den: u128) -> UnitFraction {
        UnitFraction::from_ratio(num, den, 128).unwrap()
    }

    #[test]
    fn weighted_digit_sum_examples() {
        let c1 = PerturbSpec::new(1).unwrap();
        let c2 = PerturbSpec::new(2).unwrap();
        assert_eq!(weighted_digit_sum(3, &c1), 0);
        assert_eq!(weighted_digit_sum(5, &c2), 0);
        for n in 1..5 {
            for ell in 0..5 {
                assert_eq!(weighted_digit_sum(0, &PerturbSpec::shifted(n, ell).unwrap()), 0);
            }
        }
        // shift 1 with n = 2 weights the odd positions
        let c21 = PerturbSpec::shifted(2, 1).unwrap();
        assert_eq!(weighted_digit_sum(0b10, &c21), 1);
        assert_eq!(weighted_digit_sum(0b01, &c21), 0);
    }

    #[test]
    fn digital_point_examples() {
        let c1 = PerturbSpec::new(1).unwrap();
        let c2 = PerturbSpec::new(2).unwrap();
        assert_eq!(digital_point(3, &c1).unwrap(), frac(1, 4));
        assert_eq!(digital_point(4, &c2).unwrap(), frac(5, 8));
        assert!(digital_point(0, &c2).unwrap().is_zero());
        assert!(digital_point(1, &PerturbSpec::shifted(2, 1).unwrap()).is_err());
    }

    #[test]
    fn hybrid_point_examples() {
        let c1 = PerturbSpec::new(1).unwrap();
        let c2 = PerturbSpec::new(2).unwrap();
        let half = frac(1, 2);
        assert_eq!(hybrid_point(3, &c1, &half).unwrap(), (frac(1, 4), half));
        let a = UnitFraction::new(85, 8).unwrap();
        let (x, y) = hybrid_point(4, &c2, &a).unwrap();
        assert_eq!(x, frac(5, 8));
        assert_eq!(y.bits(), 84);
        let (x, y) = hybrid_point(0, &c2, &a).unwrap();
        assert!(x.is_zero() && y.is_zero());
    }

    #[test]
    fn mk_sequence_examples() {
        assert_eq!(mk_sequence(1, 6).unwrap(), vec![0, 3, 5, 6, 9, 10]);
        assert_eq!(mk_sequence(2, 5).unwrap(), vec![0, 2, 5, 7, 8]);
        assert_eq!(mk_sequence(7, 1).unwrap(), vec![0]);
        assert!(mk_sequence(0, 3).is_err());
    }

    #[test]
    fn generate_point_set_examples() {
        let c1 = PerturbSpec::new(1).unwrap();
        let half = frac(1, 2);
        let ps = generate_point_set(&c1, &half, 1, "half").unwrap();
        assert!(ps.points[0].0.is_zero() && ps.points[0].1.is_zero());

        let ps = generate_point_set(&c1, &half, 4, "half").unwrap();
        let expect = [
            (frac(0, 1), frac(0, 1)),
            (frac(1, 2), frac(1, 2)),
            (frac(3, 4), frac(0, 1)),
            (frac(1, 4), frac(1, 2)),
        ];
        assert_eq!(ps.points, expect);

        let c2 = PerturbSpec::new(2).unwrap();
        let a = UnitFraction::new(85, 8).unwrap();
        let ps = generate_point_set(&c2, &a, 2, "a").unwrap();
        assert_eq!(ps.points[1].0, frac(1, 2));
        assert_eq!(ps.points[1].1.bits(), 85);

        assert!(generate_point_set(&c2, &a, 0, "a").is_err());
    }

    #[test]
    fn digit_vector_reconstructs() {
        for k in [0u64, 1, 2, 5, 1023, u64::MAX] {
            let d = DigitVector::of(k);
            assert_eq!(d.value(), k);
            assert_eq!(d.digit(70), 0);
        }
        assert_eq!(DigitVector::of(6).digits(), &[0, 1, 1]);
    }

    #[test]
    fn csv_header_and_row() {
        let c1 = PerturbSpec::new(1).unwrap();
        let ps = generate_point_set(&c1, &frac(1, 2), 2, "half").unwrap();
        let mut buf = Vec::new();
        ps.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "k,x_bits_hex,y_bits_hex,x_float,y_float");
        assert_eq!(lines.next().unwrap(), format!("0,{0},{0},0,0", "0".repeat(32)));
        assert!(lines.next().unwrap().ends_with(",0.5,0.5"));
    }
}
