//! Universal averaging coefficients indexed by integer words.
//!
//! A word is a finite sequence of integers (i1, ..., ir). The recursion
//! below produces, for every word, a complex number that is rational in
//! both components (every rule multiplies by i/j and subtracts), so the
//! table stores exact rationals and converts to floating point only when
//! the word sum is assembled.
//!
//! Recursion, for j != 0, r, s >= 1:
//!   beta_0          = 1
//!   beta_j          = 0
//!   beta_{0^{r+1}}  = 0
//!   beta_{0^r j}            = (i/j) (beta_{0^{r-1} j}        - beta_{0^r})
//!   beta_{j l1..ls}         = (i/j) (beta_{l1..ls}           - beta_{(j+l1) l2..ls})
//!   beta_{0^r j l1..ls}     = (i/j) (beta_{0^{r-1} j l1..ls} - beta_{0^r (j+l1) l2..ls})
//!
//! Each step either shortens the word or shortens its leading run of
//! zeros, so the recursion terminates; a depth guard of four times the
//! word length is asserted anyway.

use std::collections::HashMap;

use num_complex::Complex64;
pub use num_rational::Ratio;

use crate::error::{Error, Result};

/// Exact complex rational: re + i*im with both parts in Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalComplex {
    pub re: Ratio<i64>,
    pub im: Ratio<i64>,
}

impl RationalComplex {
    pub const ZERO: RationalComplex =
        RationalComplex { re: Ratio::new_raw(0, 1), im: Ratio::new_raw(0, 1) };
    pub const ONE: RationalComplex =
        RationalComplex { re: Ratio::new_raw(1, 1), im: Ratio::new_raw(0, 1) };

    fn sub(self, other: RationalComplex) -> RationalComplex {
        RationalComplex { re: self.re - other.re, im: self.im - other.im }
    }

    /// Multiply by i/j (j a nonzero integer).
    fn mul_i_over(self, j: i64) -> RationalComplex {
        debug_assert!(j != 0);
        RationalComplex { re: -self.im / j, im: self.re / j }
    }

    /// Complex conjugate.
    pub fn conj(self) -> RationalComplex {
        RationalComplex { re: self.re, im: -self.im }
    }

    pub fn is_zero(self) -> bool {
        self == RationalComplex::ZERO
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(
            *self.re.numer() as f64 / *self.re.denom() as f64,
            *self.im.numer() as f64 / *self.im.denom() as f64,
        )
    }
}

impl std::fmt::Display for RationalComplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} + {}i", self.re, self.im)
    }
}

/// Integer multi-index (i1, ..., ir), r >= 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<i64>);

impl Word {
    pub fn new(entries: impl Into<Vec<i64>>) -> Self {
        Word(entries.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> Word {
        let mut v = self.0.clone();
        v.reverse();
        Word(v)
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Memo table for the coefficient recursion. Values, once stored, are
/// reproducible by re-running the recursion from scratch.
#[derive(Debug, Default)]
pub struct BetaTable {
    memo: HashMap<Vec<i64>, RationalComplex>,
}

impl BetaTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }

    /// Exact coefficient of a word.
    pub fn beta(&mut self, w: &Word) -> Result<RationalComplex> {
        if w.is_empty() {
            return Err(Error::usage("beta: empty word"));
        }
        let guard = 4 * w.len();
        self.beta_rec(&w.0, 0, guard)
    }

    /// Floating-point coefficient of a word.
    pub fn beta_f64(&mut self, w: &Word) -> Result<Complex64> {
        Ok(self.beta(w)?.to_complex())
    }

    fn beta_rec(&mut self, w: &[i64], depth: usize, guard: usize) -> Result<RationalComplex> {
        assert!(depth <= guard, "beta recursion exceeded depth guard on {w:?}");
        if let Some(v) = self.memo.get(w) {
            return Ok(*v);
        }
        let value = self.beta_uncached(w, depth, guard)?;
        self.memo.insert(w.to_vec(), value);
        Ok(value)
    }

    fn beta_uncached(&mut self, w: &[i64], depth: usize, guard: usize) -> Result<RationalComplex> {
        let zeros = w.iter().take_while(|&&x| x == 0).count();
        if zeros == w.len() {
            // all-zero word: 1 for the single letter, 0 for longer runs
            return Ok(if w.len() == 1 { RationalComplex::ONE } else { RationalComplex::ZERO });
        }
        let r = zeros;
        let j = w[r];
        let rest = &w[r + 1..];
        if rest.is_empty() {
            if r == 0 {
                // single nonzero letter
                return Ok(RationalComplex::ZERO);
            }
            // (i/j)(beta_{0^{r-1} j} - beta_{0^r})
            let mut w1 = vec![0; r - 1];
            w1.push(j);
            let w2 = vec![0; r];
            let a = self.beta_rec(&w1, depth + 1, guard)?;
            let b = self.beta_rec(&w2, depth + 1, guard)?;
            return Ok(a.sub(b).mul_i_over(j));
        }
        // (i/j)(beta_{0^{r-1} j l1..ls} - beta_{0^r (j+l1) l2..ls}), r possibly 0
        let w1 = if r == 0 {
            rest.to_vec()
        } else {
            let mut v = vec![0; r - 1];
            v.push(j);
            v.extend_from_slice(rest);
            v
        };
        let mut w2 = vec![0; r];
        w2.push(j + rest[0]);
        w2.extend_from_slice(&rest[1..]);
        let a = self.beta_rec(&w1, depth + 1, guard)?;
        let b = self.beta_rec(&w2, depth + 1, guard)?;
        Ok(a.sub(b).mul_i_over(j))
    }
}

/// All words of length `r` with entries in `{-k_max, ..., k_max}`.
pub fn enumerate_words(r: usize, k_max: i64) -> Vec<Word> {
    assert!(r >= 1, "enumerate_words: length must be >= 1");
    assert!(k_max >= 0);
    let base = (2 * k_max + 1) as usize;
    let total = base.pow(r as u32);
    let mut out = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut entries = Vec::with_capacity(r);
        for _ in 0..r {
            entries.push((idx % base) as i64 - k_max);
            idx /= base;
        }
        out.push(Word(entries));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(entries: &[i64]) -> RationalComplex {
        BetaTable::new().beta(&Word::new(entries)).unwrap()
    }

    fn rat(n: i64, d: i64) -> Ratio<i64> {
        Ratio::new(n, d)
    }

    #[test]
    fn base_cases() {
        assert_eq!(b(&[0]), RationalComplex::ONE);
        assert_eq!(b(&[5]), RationalComplex::ZERO);
        assert_eq!(b(&[-3]), RationalComplex::ZERO);
        assert_eq!(b(&[0, 0]), RationalComplex::ZERO);
        assert_eq!(b(&[0, 0, 0, 0]), RationalComplex::ZERO);
    }

    #[test]
    fn hand_recursed_words() {
        // one recursion step: beta_{k,-k} = (i/k)(beta_{-k} - beta_0) = -i/k
        for k in 1..=3i64 {
            assert_eq!(b(&[k, -k]), RationalComplex { re: rat(0, 1), im: rat(-1, k) });
            assert_eq!(b(&[-k, k]), RationalComplex { re: rat(0, 1), im: rat(1, k) });
        }
        // beta_{0,1} = i(beta_1 - beta_0) = -i ; beta_{1,0} = i(beta_0 - beta_1) = i
        assert_eq!(b(&[0, 1]), RationalComplex { re: rat(0, 1), im: rat(-1, 1) });
        assert_eq!(b(&[1, 0]), RationalComplex { re: rat(0, 1), im: rat(1, 1) });
        // beta_{2,-1} = (i/2)(beta_{-1} - beta_1) = 0
        assert_eq!(b(&[2, -1]), RationalComplex::ZERO);
        // beta_{0,0,1} = i(beta_{0,1} - beta_{0,0}) = i(-i) = 1
        assert_eq!(b(&[0, 0, 1]), RationalComplex { re: rat(1, 1), im: rat(0, 1) });
        // beta_{1,1,-2} = i(beta_{1,-2} - beta_{2,-2}) with beta_{1,-2} = 0: i(i/2) = -1/2
        assert_eq!(b(&[1, 1, -2]), RationalComplex { re: rat(-1, 2), im: rat(0, 1) });
        // beta_{1,-1,0} = i(beta_{-1,0} - beta_{0,0}) with beta_{-1,0} = -i: 1
        assert_eq!(b(&[1, -1, 0]), RationalComplex { re: rat(1, 1), im: rat(0, 1) });
        // beta_{0,1,-1} = i(beta_{1,-1} - beta_{0,0}) = i(-i) = 1
        assert_eq!(b(&[0, 1, -1]), RationalComplex { re: rat(1, 1), im: rat(0, 1) });
        // beta_{1,-1,1} = i(beta_{-1,1} - beta_{0,1}) = i(i + i) = -2
        assert_eq!(b(&[1, -1, 1]), RationalComplex { re: rat(-2, 1), im: rat(0, 1) });
    }

    #[test]
    fn memo_matches_fresh() {
        let words = enumerate_words(3, 2);
        let mut shared = BetaTable::new();
        for w in &words {
            let memoized = shared.beta(w).unwrap();
            let fresh = BetaTable::new().beta(w).unwrap();
            assert_eq!(memoized, fresh, "word {w}");
        }
    }

    #[test]
    fn enumerate_counts() {
        assert_eq!(enumerate_words(1, 1).len(), 3);
        assert_eq!(enumerate_words(2, 1).len(), 9);
        assert_eq!(enumerate_words(3, 3).len(), 343);
        let ws = enumerate_words(1, 1);
        let got: Vec<i64> = ws.iter().map(|w| w.0[0]).collect();
        assert!(got.contains(&-1) && got.contains(&0) && got.contains(&1));
    }

    #[test]
    fn zero_leading_words_finite() {
        // deep zero runs before a nonzero letter stay finite and defined
        let mut t = BetaTable::new();
        for r in 1..=6 {
            let mut w = vec![0; r];
            w.push(2);
            w.push(-2);
            let v = t.beta(&Word::new(w)).unwrap();
            let c = v.to_complex();
            assert!(c.re.is_finite() && c.im.is_finite());
        }
    }
}
