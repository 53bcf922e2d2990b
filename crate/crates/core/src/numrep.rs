//! Arbitrary-precision naturals and signed-digit representations.
//!
//! Digit strings are stored least-significant digit first so that digit
//! index `i` carries weight `2^i`. Only the textual rendering is MSB-first.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Arbitrary-precision natural number.
pub type BigNat = BigUint;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumError {
    #[error("zero has no odd normalization")]
    Zero,
    #[error("pattern value {0} is not odd")]
    EvenPattern(BigNat),
    #[error("invalid signed digit {0:?} (expected '1', '0' or '-')")]
    InvalidDigit(char),
    #[error("invalid natural number literal {0:?}")]
    InvalidNumber(String),
}

/// Parses a decimal or `0x`-prefixed hexadecimal natural.
pub fn parse_nat(text: &str) -> Result<BigNat, NumError> {
    let t = text.trim().replace('_', "");
    let parsed = if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        BigNat::parse_bytes(hex.as_bytes(), 16)
    } else {
        BigNat::parse_bytes(t.as_bytes(), 10)
    };
    parsed.ok_or_else(|| NumError::InvalidNumber(text.to_string()))
}

/// Number of bits needed to write `x` in binary (0 for zero).
pub fn bit_width(x: &BigNat) -> u64 {
    x.bits()
}

/// Positions of the one bits of `x`, ascending.
pub fn one_positions(x: &BigNat) -> Vec<u64> {
    (0..x.bits()).filter(|&i| x.bit(i)).collect()
}

/// A string of digits in {-1, 0, +1}, least significant first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SdDigitString {
    digits: Vec<i8>,
}

impl SdDigitString {
    /// Builds a digit string from LSB-first digits.
    ///
    /// # Panics
    /// If a digit lies outside {-1, 0, 1}.
    pub fn from_lsb_digits(digits: Vec<i8>) -> Self {
        assert!(digits.iter().all(|d| (-1..=1).contains(d)), "signed digits must be in {{-1,0,1}}");
        Self { digits }
    }

    /// Plain binary digits of `x`.
    pub fn binary(x: &BigNat) -> Self {
        Self { digits: (0..x.bits()).map(|i| x.bit(i) as i8).collect() }
    }

    pub fn digits(&self) -> &[i8] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Digit at position `i`; zero beyond the stored length.
    pub fn digit(&self, i: usize) -> i8 {
        self.digits.get(i).copied().unwrap_or(0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.digits.iter().filter(|&&d| d != 0).count()
    }

    /// Positions of the nonzero digits, ascending.
    pub fn nonzero_positions(&self) -> Vec<usize> {
        self.digits.iter().enumerate().filter(|(_, &d)| d != 0).map(|(i, _)| i).collect()
    }

    /// True when no two adjacent digits are both nonzero.
    pub fn is_canonical(&self) -> bool {
        self.digits.windows(2).all(|w| w[0] == 0 || w[1] == 0)
    }

    /// Exact signed value `sum d_i 2^i`.
    pub fn value(&self) -> BigInt {
        from_digits(self)
    }

    /// Digit string with every digit negated.
    pub fn negated(&self) -> Self {
        Self { digits: self.digits.iter().map(|d| -d).collect() }
    }

    /// Drops high-order zero digits.
    pub fn trimmed(mut self) -> Self {
        while self.digits.last() == Some(&0) {
            self.digits.pop();
        }
        self
    }
}

/// MSB-first rendering with '1', '0' and '-' (for -1).
impl fmt::Display for SdDigitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.digits.is_empty() {
            return f.write_str("0");
        }
        for d in self.digits.iter().rev() {
            f.write_str(match d {
                1 => "1",
                -1 => "-",
                _ => "0",
            })?;
        }
        Ok(())
    }
}

impl FromStr for SdDigitString {
    type Err = NumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut digits = Vec::with_capacity(s.len());
        for c in s.trim().chars().rev() {
            digits.push(match c {
                '1' => 1,
                '0' => 0,
                '-' => -1,
                other => return Err(NumError::InvalidDigit(other)),
            });
        }
        Ok(Self { digits })
    }
}

impl Serialize for SdDigitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SdDigitString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Canonical signed digit form of `x` via Reitwiesner's carry scan.
///
/// Zero maps to the empty string.
pub fn to_csd(x: &BigNat) -> SdDigitString {
    let w = x.bits();
    let mut digits = Vec::with_capacity(w as usize + 1);
    let mut carry = 0u8;
    for i in 0..=w {
        let b0 = x.bit(i) as u8;
        let b1 = x.bit(i + 1) as u8;
        let next_carry = (b0 + b1 + carry) / 2;
        let d = b0 as i8 + carry as i8 - 2 * next_carry as i8;
        digits.push(d);
        carry = next_carry;
    }
    SdDigitString { digits }.trimmed()
}

/// Exact signed evaluation of a digit string.
pub fn from_digits(d: &SdDigitString) -> BigInt {
    let mut pos = BigUint::zero();
    let mut neg = BigUint::zero();
    for (i, &digit) in d.digits.iter().enumerate() {
        match digit {
            1 => pos.set_bit(i as u64, true),
            -1 => neg.set_bit(i as u64, true),
            _ => {}
        }
    }
    BigInt::from_biguint(Sign::Plus, pos) - BigInt::from_biguint(Sign::Plus, neg)
}

/// An odd positive constant used as a pattern.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern(BigNat);

impl Pattern {
    pub fn new(value: BigNat) -> Result<Self, NumError> {
        if value.is_zero() {
            return Err(NumError::Zero);
        }
        if !value.bit(0) {
            return Err(NumError::EvenPattern(value));
        }
        Ok(Self(value))
    }

    pub fn one() -> Self {
        Self(BigNat::one())
    }

    pub fn value(&self) -> &BigNat {
        &self.0
    }

    pub fn into_value(self) -> BigNat {
        self.0
    }

    pub fn width(&self) -> u64 {
        self.0.bits()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Splits `x > 0` into its odd part and the number of trailing zeros.
pub fn make_odd(x: &BigNat) -> Result<(Pattern, u64), NumError> {
    let shift = x.trailing_zeros().ok_or(NumError::Zero)?;
    Ok((Pattern(x >> shift), shift))
}

/// Odd part of a positive value (zero stays zero).
pub fn odd_part(x: &BigNat) -> BigNat {
    match x.trailing_zeros() {
        Some(tz) => x >> tz,
        None => BigNat::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::ToBigInt;

    fn nat(v: u64) -> BigNat {
        BigNat::from(v)
    }

    /// Minimal nonzero count over every SD string of length <= `len`.
    fn brute_min_nonzeros(x: i64, len: u32) -> usize {
        let mut best = usize::MAX;
        for code in 0..3u64.pow(len) {
            let mut c = code;
            let mut value = 0i64;
            let mut nz = 0;
            for i in 0..len {
                let d = (c % 3) as i64 - 1;
                c /= 3;
                value += d << i;
                nz += (d != 0) as usize;
            }
            if value == x {
                best = best.min(nz);
            }
        }
        best
    }

    #[test]
    fn csd_of_60375() {
        let csd = to_csd(&nat(60375));
        assert_eq!(csd.to_string(), "1000-0-0000-0-00-");
        assert_eq!(csd.value(), 60375.to_bigint().unwrap());
    }

    #[test]
    fn csd_of_zero_is_empty() {
        let csd = to_csd(&nat(0));
        assert!(csd.is_empty());
        assert_eq!(csd.value(), BigInt::zero());
    }

    #[test]
    fn csd_of_11() {
        let csd = to_csd(&nat(11));
        assert_eq!(csd.to_string(), "10-0-");
        assert_eq!(brute_min_nonzeros(11, 6), 3);
        assert_eq!(csd.nonzero_count(), 3);
    }

    #[test]
    fn from_digits_examples() {
        let d: SdDigitString = "10-".parse().unwrap();
        assert_eq!(from_digits(&d), BigInt::from(3));
        let zeros: SdDigitString = "0000".parse().unwrap();
        assert_eq!(from_digits(&zeros), BigInt::zero());
        assert_eq!(from_digits(&to_csd(&nat(60375))), BigInt::from(60375));
    }

    #[test]
    fn make_odd_examples() {
        assert_eq!(make_odd(&nat(12)).unwrap(), (Pattern(nat(3)), 2));
        assert_eq!(make_odd(&nat(1)).unwrap(), (Pattern(nat(1)), 0));
        assert_eq!(make_odd(&nat(1024)).unwrap(), (Pattern(nat(1)), 10));
        assert_eq!(make_odd(&nat(0)), Err(NumError::Zero));
    }

    #[test]
    fn pattern_rejects_even_and_zero() {
        assert!(Pattern::new(nat(4)).is_err());
        assert!(Pattern::new(nat(0)).is_err());
        assert_eq!(Pattern::new(nat(9)).unwrap().width(), 4);
    }

    #[test]
    fn csd_is_minimal_for_small_values() {
        for x in 0u64..256 {
            let csd = to_csd(&nat(x));
            let len = (64 - x.leading_zeros()) + 1;
            assert_eq!(csd.nonzero_count(), brute_min_nonzeros(x as i64, len.max(1)), "x = {x}");
        }
    }

    #[test]
    fn text_round_trip_and_bad_digit() {
        let d: SdDigitString = "10-0-".parse().unwrap();
        assert_eq!(d.to_string(), "10-0-");
        assert_eq!("10x".parse::<SdDigitString>(), Err(NumError::InvalidDigit('x')));
    }

    #[test]
    fn parse_hex_and_decimal() {
        assert_eq!(parse_nat("0xff").unwrap(), nat(255));
        assert_eq!(parse_nat(" 2795 ").unwrap(), nat(2795));
        assert!(parse_nat("12a").is_err());
    }

    #[test]
    fn handles_very_wide_values() {
        let x = (BigNat::one() << 751u32) - 12345u32;
        let csd = to_csd(&x);
        assert!(csd.is_canonical());
        assert_eq!(csd.value(), x.to_bigint().unwrap());
    }
}
