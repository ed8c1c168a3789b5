//! Degrees in Z₂ⁿ with the standard scalar product.
//!
//! Bit `i` of the packed word holds component `i` of the tuple. Degrees order
//! by their position in [`canonical_order`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const MAX_RANK: usize = 16;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Degree {
    bits: u32,
    n: u8,
}

impl Degree {
    pub fn zero(n: usize) -> Degree {
        assert!(n <= MAX_RANK, "grading rank {n} exceeds {MAX_RANK}");
        Degree { bits: 0, n: n as u8 }
    }

    pub fn from_bits(bits: &[u8]) -> Result<Degree> {
        if bits.is_empty() || bits.len() > MAX_RANK {
            return Err(Error::Dimension(format!(
                "degree length {} outside 1..={MAX_RANK}",
                bits.len()
            )));
        }
        let mut word = 0u32;
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => word |= 1 << i,
                _ => return Err(Error::Dimension(format!("degree entry {b} is not a bit"))),
            }
        }
        Ok(Degree { bits: word, n: bits.len() as u8 })
    }

    /// Panicking shorthand for literals in fixtures and tests.
    pub fn of(bits: &[u8]) -> Degree {
        Degree::from_bits(bits).expect("valid degree literal")
    }

    pub fn from_word(word: u32, n: usize) -> Degree {
        assert!(n <= MAX_RANK);
        Degree { bits: word & mask(n), n: n as u8 }
    }

    pub fn rank(&self) -> usize {
        self.n as usize
    }

    pub fn word(&self) -> u32 {
        self.bits
    }

    pub fn bit(&self, i: usize) -> u8 {
        ((self.bits >> i) & 1) as u8
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.rank()).map(|i| self.bit(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn scalar_product(&self, other: &Degree) -> Result<u8> {
        self.check_rank(other)?;
        Ok(self.dot(other))
    }

    /// Unchecked scalar product for hot paths where ranks already agree.
    #[inline]
    pub fn dot(&self, other: &Degree) -> u8 {
        ((self.bits & other.bits).count_ones() & 1) as u8
    }

    pub fn parity(&self) -> Parity {
        if self.dot(self) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn is_odd(&self) -> bool {
        self.parity() == Parity::Odd
    }

    pub fn add(&self, other: &Degree) -> Result<Degree> {
        self.check_rank(other)?;
        Ok(*self + *other)
    }

    /// Embeds into rank n+1 with `head` as the new first component.
    pub fn lift(&self, head: u8) -> Degree {
        Degree {
            bits: (self.bits << 1) | (head as u32 & 1),
            n: self.n + 1,
        }
    }

    /// Drops the first component; inverse of [`Degree::lift`].
    pub fn tail(&self) -> Degree {
        Degree { bits: self.bits >> 1, n: self.n - 1 }
    }

    /// Position of this degree in [`canonical_order`].
    pub fn canonical_index(&self) -> usize {
        let n = self.rank();
        let lex = self.lex_rank();
        // count degrees of the other parity ranked before this one
        let same_parity_before = (0..lex as u32)
            .filter(|&r| {
                let w = lex_word(r, n);
                ((w.count_ones() & 1) as u8) == self.dot(self)
            })
            .count();
        if self.is_odd() {
            (1usize << (n - 1)) + same_parity_before
        } else {
            same_parity_before
        }
    }

    /// Rank in the lexicographic order of tuples (first component most significant).
    fn lex_rank(&self) -> usize {
        let n = self.rank();
        let mut r = 0usize;
        for i in 0..n {
            r = (r << 1) | self.bit(i) as usize;
        }
        r
    }

    fn check_rank(&self, other: &Degree) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "degree ranks differ: {} vs {}",
                self.n, other.n
            )));
        }
        Ok(())
    }
}

fn mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Tuple whose lexicographic rank is `r`.
fn lex_word(r: u32, n: usize) -> u32 {
    let mut w = 0u32;
    for i in 0..n {
        if (r >> (n - 1 - i)) & 1 == 1 {
            w |= 1 << i;
        }
    }
    w
}

impl std::ops::Add for Degree {
    type Output = Degree;
    fn add(self, rhs: Degree) -> Degree {
        debug_assert_eq!(self.n, rhs.n);
        Degree { bits: self.bits ^ rhs.bits, n: self.n }
    }
}

impl Ord for Degree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| self.is_odd().cmp(&other.is_odd()))
            .then_with(|| self.lex_rank().cmp(&other.lex_rank()))
    }
}

impl PartialOrd for Degree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// All of Z₂ⁿ: lexicographic enumeration, then even degrees before odd ones.
pub fn canonical_order(n: usize) -> Result<Vec<Degree>> {
    if n == 0 || n > MAX_RANK {
        return Err(Error::Dimension(format!("grading rank {n} outside 1..={MAX_RANK}")));
    }
    let lex: Vec<Degree> = (0..1u32 << n)
        .map(|r| Degree::from_word(lex_word(r, n), n))
        .collect();
    let (even, odd): (Vec<Degree>, Vec<Degree>) = lex.into_iter().partition(|d| !d.is_odd());
    Ok(even.into_iter().chain(odd).collect())
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for i in 0..self.rank() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", self.bit(i))?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Degree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Degree> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("degree must be a parenthesized tuple: {s:?}")))?;
        let bits = inner
            .split(',')
            .map(|t| match t.trim() {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(Error::Parse(format!("bad degree entry {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Degree::from_bits(&bits)
    }
}
