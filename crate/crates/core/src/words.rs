//! Exact free-group word arithmetic: free reduction, cyclic forms and
//! conjugacy, power detection, abelianization functionals and the
//! prefix metric.
//!
//! Letters are signed generator indices: `i` is the `i`-th generator
//! and `-i` its inverse, with `1 <= i <= rank`. The letter order used
//! for canonical cyclic forms is `a1 < A1 < a2 < A2 < ...`, i.e.
//! generators sort before their inverses, index-major.

use crate::{Error, Rational, Result};
use num_bigint::BigInt;
use num_traits::One;
use rand::Rng;
use std::fmt;

/// A freely reduced word in the free group of a fixed rank.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ReducedWord {
    rank: usize,
    letters: Vec<i32>,
}

/// Abelianization functional: one integer weight per generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentVector(pub Vec<i64>);

/// A conjugacy class, represented by a cyclically reduced core and the
/// lexicographically least rotation of that core.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CyclicClass {
    pub core: ReducedWord,
    pub canonical: ReducedWord,
}

impl ReducedWord {
    /// The empty word.
    pub fn identity(rank: usize) -> Self {
        ReducedWord { rank, letters: Vec::new() }
    }

    /// The `i`-th generator, `1 <= i <= rank`.
    pub fn generator(rank: usize, i: usize) -> Result<Self> {
        if i == 0 || i > rank {
            return Err(Error::LetterOutOfRange { letter: i as i32, rank });
        }
        Ok(ReducedWord { rank, letters: vec![i as i32] })
    }

    /// Freely reduces a raw letter sequence by cancelling adjacent
    /// inverse pairs until none remain.
    pub fn reduce(rank: usize, raw: &[i32]) -> Result<Self> {
        let mut letters: Vec<i32> = Vec::with_capacity(raw.len());
        for &l in raw {
            if l == 0 || l.unsigned_abs() as usize > rank {
                return Err(Error::LetterOutOfRange { letter: l, rank });
            }
            if letters.last().is_some_and(|&p| p == -l) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        Ok(ReducedWord { rank, letters })
    }

    /// Builds from letters already known to be reduced and in range.
    pub(crate) fn from_reduced_unchecked(rank: usize, letters: Vec<i32>) -> Self {
        debug_assert!(letters.iter().all(|&l| l != 0 && l.unsigned_abs() as usize <= rank));
        debug_assert!(letters.windows(2).all(|w| w[0] != -w[1]));
        ReducedWord { rank, letters }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    fn check_rank(&self, other: &Self) -> Result<()> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch { left: self.rank, right: other.rank });
        }
        Ok(())
    }

    /// Group multiplication with free reduction at the seam.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_rank(other)?;
        let mut letters = self.letters.clone();
        for &l in &other.letters {
            if letters.last().is_some_and(|&p| p == -l) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        Ok(ReducedWord { rank: self.rank, letters })
    }

    /// Product of several factors, reduced once left to right.
    pub fn product<'a>(rank: usize, factors: impl IntoIterator<Item = &'a Self>) -> Result<Self> {
        let mut acc = ReducedWord::identity(rank);
        for f in factors {
            acc = acc.multiply(f)?;
        }
        Ok(acc)
    }

    /// The group inverse (reverse and negate; a reduced word stays reduced).
    pub fn invert(&self) -> Self {
        let letters = self.letters.iter().rev().map(|&l| -l).collect();
        ReducedWord { rank: self.rank, letters }
    }

    /// `g^{-1} * self * g`.
    pub fn conjugate_by(&self, g: &Self) -> Result<Self> {
        g.invert().multiply(self)?.multiply(g)
    }

    /// `self^k` for any integer `k`.
    pub fn pow(&self, k: i64) -> Self {
        let base = if k < 0 { self.invert() } else { self.clone() };
        let mut letters = Vec::with_capacity(base.letters.len() * k.unsigned_abs() as usize);
        for _ in 0..k.unsigned_abs() {
            for &l in &base.letters {
                if letters.last().is_some_and(|&p| p == -l) {
                    letters.pop();
                } else {
                    letters.push(l);
                }
            }
        }
        ReducedWord { rank: self.rank, letters }
    }

    /// Splits off matching inverse ends: returns `(core, conjugator)` with
    /// `self = conjugator * core * conjugator^{-1}` and `core` cyclically
    /// reduced.
    pub fn cyclic_core(&self) -> (Self, Self) {
        let n = self.letters.len();
        if n == 0 {
            return (self.clone(), ReducedWord::identity(self.rank));
        }
        let mut i = 0usize;
        let mut j = n - 1;
        while i < j && self.letters[i] == -self.letters[j] {
            i += 1;
            j -= 1;
        }
        let core = ReducedWord::from_reduced_unchecked(self.rank, self.letters[i..=j].to_vec());
        let conj = ReducedWord::from_reduced_unchecked(self.rank, self.letters[..i].to_vec());
        (core, conj)
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.len() < 2 || self.letters[0] != -self.letters[self.len() - 1]
    }

    /// Lexicographically least rotation of the cyclic core, under the
    /// letter order `a1 < A1 < a2 < A2 < ...`. Two words are conjugate
    /// iff their canonical cyclic forms are equal.
    pub fn canonical_cyclic(&self) -> Self {
        let (core, _) = self.cyclic_core();
        if core.len() <= 1 {
            return core;
        }
        let keys: Vec<u64> = core.letters.iter().map(|&l| letter_key(l)).collect();
        let k = least_rotation(&keys);
        let mut letters = Vec::with_capacity(core.letters.len());
        letters.extend_from_slice(&core.letters[k..]);
        letters.extend_from_slice(&core.letters[..k]);
        ReducedWord::from_reduced_unchecked(self.rank, letters)
    }

    /// Conjugacy class data: cyclic core plus canonical rotation.
    pub fn cyclic_class(&self) -> CyclicClass {
        let (core, _) = self.cyclic_core();
        CyclicClass { canonical: self.canonical_cyclic(), core }
    }

    /// Conjugacy test via canonical cyclic forms.
    pub fn is_conjugate(&self, other: &Self) -> Result<bool> {
        self.check_rank(other)?;
        Ok(self.canonical_cyclic() == other.canonical_cyclic())
    }

    /// Produces `g` with `self = g^{-1} * other * g`, when conjugate.
    pub fn conjugacy_witness(&self, other: &Self) -> Result<Option<Self>> {
        self.check_rank(other)?;
        let canon = self.canonical_cyclic();
        if canon != other.canonical_cyclic() {
            return Ok(None);
        }
        // self = A * canon * A^{-1} and other = B * canon * B^{-1},
        // so self = (B A^{-1})^{-1} * other * (B A^{-1}).
        let a = self.rotation_conjugator(&canon)?;
        let b = other.rotation_conjugator(&canon)?;
        let g = b.multiply(&a.invert())?;
        debug_assert_eq!(&other.conjugate_by(&g).unwrap(), self);
        Ok(Some(g))
    }

    /// Returns `A` with `self = A * canon * A^{-1}`, where `canon` is a
    /// rotation of this word's cyclic core.
    fn rotation_conjugator(&self, canon: &Self) -> Result<Self> {
        let (core, conj) = self.cyclic_core();
        let n = core.len();
        for k in 0..n.max(1) {
            let mut rot = Vec::with_capacity(n);
            rot.extend_from_slice(&core.letters[k..]);
            rot.extend_from_slice(&core.letters[..k]);
            if rot == canon.letters {
                // core = p * q with |p| = k and canon = q * p, so
                // core = p * canon * p^{-1}.
                let p = ReducedWord::from_reduced_unchecked(self.rank, core.letters[..k].to_vec());
                return conj.multiply(&p);
            }
        }
        Err(Error::Verification("canonical form is not a rotation of the core".into()))
    }

    /// The unique `k` with `self = base^k`, if any. Fails on an identity
    /// base; uniqueness of `|k|` needs no primitivity because distinct
    /// powers of a nontrivial word have distinct lengths.
    pub fn power_index(&self, base: &Self) -> Result<Option<i64>> {
        self.check_rank(base)?;
        if base.is_identity() {
            return Err(Error::IdentityBase);
        }
        if self.is_identity() {
            return Ok(Some(0));
        }
        let (ucore, _) = self.cyclic_core();
        let (vcore, _) = base.cyclic_core();
        if vcore.is_empty() || ucore.len() % vcore.len() != 0 {
            return Ok(None);
        }
        let k = (ucore.len() / vcore.len()) as i64;
        if *self == base.pow(k) {
            return Ok(Some(k));
        }
        if *self == base.pow(-k) {
            return Ok(Some(-k));
        }
        Ok(None)
    }

    /// The unique `k` with `self` conjugate to `base^k`, if any. In a free
    /// group no nontrivial element is conjugate to its own inverse, so the
    /// sign of `k` is determined.
    pub fn conjugate_power_index(&self, base: &Self) -> Result<Option<i64>> {
        self.check_rank(base)?;
        if base.is_identity() {
            return Err(Error::IdentityBase);
        }
        if self.is_identity() {
            return Ok(Some(0));
        }
        let (ucore, _) = self.cyclic_core();
        let (vcore, _) = base.cyclic_core();
        if vcore.is_empty() || ucore.len() % vcore.len() != 0 {
            return Ok(None);
        }
        let k = (ucore.len() / vcore.len()) as i64;
        if self.is_conjugate(&base.pow(k))? {
            return Ok(Some(k));
        }
        if self.is_conjugate(&base.pow(-k))? {
            return Ok(Some(-k));
        }
        Ok(None)
    }

    /// Signed occurrence count of generator `i`.
    pub fn exponent_sum(&self, i: usize) -> Result<i64> {
        if i == 0 || i > self.rank {
            return Err(Error::LetterOutOfRange { letter: i as i32, rank: self.rank });
        }
        let mut s = 0i64;
        for &l in &self.letters {
            if l.unsigned_abs() as usize == i {
                s += l.signum() as i64;
            }
        }
        Ok(s)
    }

    /// All exponent sums at once.
    pub fn abelianization(&self) -> Vec<i64> {
        let mut v = vec![0i64; self.rank];
        for &l in &self.letters {
            v[l.unsigned_abs() as usize - 1] += l.signum() as i64;
        }
        v
    }

    /// The functional `sum_i exponent_sum(i) * p_i`.
    pub fn weighted_exponent(&self, p: &ExponentVector) -> Result<i64> {
        if p.0.len() != self.rank {
            return Err(Error::ExponentLength { got: p.0.len(), expected: self.rank });
        }
        let ab = self.abelianization();
        let mut acc: i128 = 0;
        for (a, w) in ab.iter().zip(&p.0) {
            acc += (*a as i128) * (*w as i128);
        }
        i64::try_from(acc).map_err(|_| Error::Overflow)
    }

    /// Primitive root: the unique `(r, e)` with `self = r^e`, `e >= 1`
    /// maximal. Fails on the identity.
    pub fn primitive_root(&self) -> Result<(Self, u32)> {
        if self.is_identity() {
            return Err(Error::IdentityBase);
        }
        let (core, conj) = self.cyclic_core();
        let n = core.len();
        for d in 1..=n {
            if n % d != 0 {
                continue;
            }
            let periodic = (d..n).all(|i| core.letters[i] == core.letters[i - d]);
            if periodic {
                let seed = ReducedWord::from_reduced_unchecked(self.rank, core.letters[..d].to_vec());
                let root = conj.multiply(&seed)?.multiply(&conj.invert())?;
                return Ok((root, (n / d) as u32));
            }
        }
        unreachable!("d = n is always a period")
    }

    /// Length of the longest common prefix.
    pub fn common_prefix_len(&self, other: &Self) -> usize {
        self.letters
            .iter()
            .zip(&other.letters)
            .take_while(|(a, b)| a == b)
            .count()
    }

    /// Prefix metric `2^{-|common prefix|}`, and `0` on equal words.
    pub fn prefix_distance(&self, other: &Self) -> Rational {
        if self == other {
            return Rational::from_integer(0.into());
        }
        let l = self.common_prefix_len(other);
        Rational::new(BigInt::one(), BigInt::one() << l)
    }

    /// Uniformly random reduced word of exactly the given length.
    pub fn random<R: Rng + ?Sized>(rank: usize, len: usize, rng: &mut R) -> Self {
        assert!(rank >= 1);
        let mut letters: Vec<i32> = Vec::with_capacity(len);
        for _ in 0..len {
            loop {
                let i = rng.gen_range(1..=rank as i32);
                let l = if rng.gen_bool(0.5) { i } else { -i };
                if letters.last().is_some_and(|&p| p == -l) {
                    continue;
                }
                letters.push(l);
                break;
            }
        }
        ReducedWord::from_reduced_unchecked(rank, letters)
    }
}

/// Order key realizing `a1 < A1 < a2 < A2 < ...`.
fn letter_key(l: i32) -> u64 {
    ((l.unsigned_abs() as u64) << 1) | u64::from(l < 0)
}

/// Booth's least-rotation algorithm; returns the start index of the
/// lexicographically least rotation.
fn least_rotation(s: &[u64]) -> usize {
    let n = s.len();
    if n <= 1 {
        return 0;
    }
    let mut doubled = Vec::with_capacity(2 * n);
    doubled.extend_from_slice(s);
    doubled.extend_from_slice(s);
    let mut f = vec![-1i64; 2 * n];
    let mut k = 0usize;
    for j in 1..2 * n {
        let sj = doubled[j];
        let mut i = f[j - k - 1];
        while i != -1 && sj != doubled[k + i as usize + 1] {
            if sj < doubled[k + i as usize + 1] {
                k = j - i as usize - 1;
            }
            i = f[i as usize];
        }
        if i == -1 && sj != doubled[k] {
            if sj < doubled[k] {
                k = j;
            }
            f[j - k] = -1;
        } else {
            f[j - k] = i + 1;
        }
    }
    k
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::text::format_word(self, crate::text::Alphabet::First))
    }
}

impl fmt::Debug for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ReducedWord({self})")
    }
}
