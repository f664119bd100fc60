//! Fixed-width bit-vector values with wraparound arithmetic and
//! signed/unsigned comparison.
//!
//! A [`BitVec`] stores its digits explicitly (most significant first), so the
//! representation is canonical for any width and widths above 64 bits remain
//! representable. Arithmetic is carried out digit-wise; conversions to
//! machine integers exist for widths that fit and are only used by tests and
//! the enumeration machinery.

use std::fmt;

/// A bit-vector of width `l >= 1`, interpreted modulo `2^l`.
///
/// Two bit-vectors are equal iff they have the same width and the same
/// digits. Width mismatches in binary operations are programming errors and
/// panic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitVec {
    /// Digits, most significant first. Invariant: `bits.len() >= 1`.
    bits: Vec<bool>,
}

/// Comparison operators of the bit-vector theory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ult,
    Slt,
    Uge,
    Sge,
    Ule,
    Sle,
}

impl CmpOp {
    /// SMT-LIB operator name.
    pub fn name(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ult => "bvult",
            CmpOp::Slt => "bvslt",
            CmpOp::Uge => "bvuge",
            CmpOp::Sge => "bvsge",
            CmpOp::Ule => "bvule",
            CmpOp::Sle => "bvsle",
        }
    }

    pub const ALL: [CmpOp; 7] = [
        CmpOp::Eq,
        CmpOp::Ult,
        CmpOp::Slt,
        CmpOp::Uge,
        CmpOp::Sge,
        CmpOp::Ule,
        CmpOp::Sle,
    ];
}

impl BitVec {
    /// Builds a bit-vector from digits given most significant first.
    pub fn from_bits(bits: Vec<bool>) -> Self {
        assert!(!bits.is_empty(), "bit-vector width must be at least 1");
        BitVec { bits }
    }

    /// The all-zero vector of the given width.
    pub fn zero(width: u32) -> Self {
        assert!(width >= 1, "bit-vector width must be at least 1");
        BitVec {
            bits: vec![false; width as usize],
        }
    }

    /// The vector of the given width holding `value mod 2^width`.
    pub fn from_u128(width: u32, value: u128) -> Self {
        assert!(width >= 1, "bit-vector width must be at least 1");
        let mut bits = vec![false; width as usize];
        for (i, b) in bits.iter_mut().rev().enumerate() {
            if i < 128 {
                *b = (value >> i) & 1 == 1;
            }
        }
        BitVec { bits }
    }

    /// Parses a plain binary numeral such as `0001` (no `#b` prefix).
    pub fn from_binary_str(digits: &str) -> Option<Self> {
        if digits.is_empty() {
            return None;
        }
        let mut bits = Vec::with_capacity(digits.len());
        for c in digits.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return None,
            }
        }
        Some(BitVec { bits })
    }

    pub fn width(&self) -> u32 {
        self.bits.len() as u32
    }

    /// Digits, most significant first.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Unsigned value. Panics for widths above 128 with a set high bit.
    pub fn to_unsigned(&self) -> u128 {
        let mut v: u128 = 0;
        for &b in &self.bits {
            assert!(v >> 127 == 0, "bit-vector too wide for u128 conversion");
            v = (v << 1) | (b as u128);
        }
        v
    }

    /// Two's-complement signed value in `[-2^(l-1), 2^(l-1) - 1]`.
    pub fn to_signed(&self) -> i128 {
        let l = self.bits.len();
        assert!(l <= 128, "bit-vector too wide for i128 conversion");
        let u = self.to_unsigned();
        if self.bits[0] && l < 128 {
            u as i128 - (1i128 << l)
        } else {
            // l == 128 with a set sign bit wraps to the right value
            u as i128
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&b| !b)
    }

    fn assert_same_width(&self, other: &BitVec, op: &str) {
        assert_eq!(
            self.width(),
            other.width(),
            "width mismatch in {op}: {} vs {}",
            self.width(),
            other.width()
        );
    }

    /// Addition modulo `2^l`.
    pub fn add(&self, other: &BitVec) -> BitVec {
        self.assert_same_width(other, "bvadd");
        let mut out = vec![false; self.bits.len()];
        let mut carry = false;
        for i in (0..self.bits.len()).rev() {
            let a = self.bits[i];
            let b = other.bits[i];
            out[i] = a ^ b ^ carry;
            carry = (a && b) || (carry && (a ^ b));
        }
        BitVec { bits: out }
    }

    /// Subtraction modulo `2^l`.
    pub fn sub(&self, other: &BitVec) -> BitVec {
        self.assert_same_width(other, "bvsub");
        // a - b = a + ~b + 1 in two's complement
        let mut out = vec![false; self.bits.len()];
        let mut carry = true;
        for i in (0..self.bits.len()).rev() {
            let a = self.bits[i];
            let b = !other.bits[i];
            out[i] = a ^ b ^ carry;
            carry = (a && b) || (carry && (a ^ b));
        }
        BitVec { bits: out }
    }

    /// Unsigned less-than.
    pub fn ult(&self, other: &BitVec) -> bool {
        self.assert_same_width(other, "bvult");
        // digits are stored most significant first, so lexicographic order
        // is unsigned order
        self.bits < other.bits
    }

    /// Signed (two's complement) less-than.
    pub fn slt(&self, other: &BitVec) -> bool {
        self.assert_same_width(other, "bvslt");
        match (self.bits[0], other.bits[0]) {
            (true, false) => true,  // negative < non-negative
            (false, true) => false,
            _ => self.bits < other.bits, // same sign: unsigned order agrees
        }
    }

    pub fn ule(&self, other: &BitVec) -> bool {
        !other.ult(self)
    }

    pub fn sle(&self, other: &BitVec) -> bool {
        !other.slt(self)
    }

    pub fn uge(&self, other: &BitVec) -> bool {
        !self.ult(other)
    }

    pub fn sge(&self, other: &BitVec) -> bool {
        !self.slt(other)
    }

    /// Applies one of the theory comparison operators.
    pub fn compare(op: CmpOp, x: &BitVec, y: &BitVec) -> bool {
        x.assert_same_width(y, op.name());
        match op {
            CmpOp::Eq => x == y,
            CmpOp::Ult => x.ult(y),
            CmpOp::Slt => x.slt(y),
            CmpOp::Uge => x.uge(y),
            CmpOp::Sge => x.sge(y),
            CmpOp::Ule => x.ule(y),
            CmpOp::Sle => x.sle(y),
        }
    }

    /// Number of consecutive least-significant zero digits; equals the width
    /// iff the vector is all-zero.
    pub fn trailing_zeros(&self) -> usize {
        self.bits.iter().rev().take_while(|&&b| !b).count()
    }

    /// The vector `0^(l-a-1) 1 0^a`: a single one digit at position `a` from
    /// the least significant end. Panics unless `a < l`.
    pub fn power_of_two(width: u32, a: usize) -> BitVec {
        assert!((a as u32) < width, "bit position out of range");
        let mut bits = vec![false; width as usize];
        let len = bits.len();
        bits[len - 1 - a] = true;
        BitVec { bits }
    }
}

impl fmt::Display for BitVec {
    /// SMT-LIB binary literal syntax: `#b` followed by exactly `l` digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#b")?;
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(s: &str) -> BitVec {
        BitVec::from_binary_str(s).unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(bv("0000").add(&bv("0001")), bv("0001"));
        assert_eq!(bv("1111").add(&bv("0001")), bv("0000"));
        assert_eq!(bv("0111").add(&bv("0001")), bv("1000"));
    }

    #[test]
    fn sub_examples() {
        assert_eq!(bv("0001").sub(&bv("0000")), bv("0001"));
        assert_eq!(bv("1001").sub(&bv("1000")), bv("0001"));
        assert_eq!(bv("0000").sub(&bv("0001")), bv("1111"));
    }

    #[test]
    fn compare_examples() {
        assert!(BitVec::compare(CmpOp::Slt, &bv("0000"), &bv("0010")));
        assert!(BitVec::compare(CmpOp::Slt, &bv("1000"), &bv("0000")));
        assert!(!BitVec::compare(CmpOp::Ult, &bv("1000"), &bv("0000")));
    }

    #[test]
    fn trailing_zero_counts() {
        assert_eq!(bv("0001").trailing_zeros(), 0);
        assert_eq!(bv("0000").trailing_zeros(), 4);
        assert_eq!(bv("0110").trailing_zeros(), 1);
    }

    #[test]
    fn trailing_zeros_position_holds_a_one() {
        for v in 0..16u128 {
            let x = BitVec::from_u128(4, v);
            let a = x.trailing_zeros();
            if !x.is_zero() {
                assert!(x.bits()[4 - 1 - a], "digit at position {a} of {x} must be 1");
            } else {
                assert_eq!(a, 4);
            }
        }
    }

    #[test]
    fn signed_unsigned_values() {
        assert_eq!(bv("1000").to_signed(), -8);
        assert_eq!(bv("0111").to_signed(), 7);
        assert_eq!(bv("1111").to_signed(), -1);
        assert_eq!(bv("1111").to_unsigned(), 15);
    }

    #[test]
    fn display_is_smtlib_literal() {
        assert_eq!(bv("0001").to_string(), "#b0001");
        assert_eq!(BitVec::zero(7).to_string(), "#b0000000");
    }

    #[test]
    fn power_of_two_digits() {
        assert_eq!(BitVec::power_of_two(4, 0), bv("0001"));
        assert_eq!(BitVec::power_of_two(4, 3), bv("1000"));
    }

    #[test]
    fn wide_vectors_are_representable() {
        let w = 100;
        let one = BitVec::power_of_two(w, 0);
        let mut x = BitVec::zero(w);
        for _ in 0..5 {
            x = x.add(&one);
        }
        assert_eq!(x.sub(&one).trailing_zeros(), 2); // 4 = 100b
    }

    #[test]
    #[should_panic(expected = "width mismatch")]
    fn width_mismatch_panics() {
        let _ = bv("0001").add(&bv("001"));
    }

    #[test]
    fn ring_laws_exhaustive_width_4() {
        for a in 0..16u128 {
            for b in 0..16u128 {
                let x = BitVec::from_u128(4, a);
                let y = BitVec::from_u128(4, b);
                assert_eq!(x.add(&y).sub(&y), x);
                assert_eq!(x.add(&y.sub(&x)), y);
            }
        }
    }
}
