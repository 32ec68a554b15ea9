//! Free-group endomorphisms given by generator images.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::words::{push_reduced, Alphabet, Letter, Word, WordError, DEFAULT_LENGTH_CAP};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EndoError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("expected {expected} images, got {got}")]
    ImageCount { expected: usize, got: usize },
    #[error("result exceeds the explicit length cap {cap}{}", exact.as_ref().map(|l| format!(" (exact length {l})")).unwrap_or_default())]
    Capped { cap: usize, exact: Option<BigUint> },
    #[error("compressed evaluation needs a positive endomorphism")]
    UnsupportedCompression,
    #[error("cannot parse endomorphism: {0}")]
    Parse(String),
}

/// Endomorphism of the free group on `alphabet`.
#[derive(Clone, PartialEq, Eq)]
pub struct FreeEndo {
    alphabet: Arc<Alphabet>,
    images: Vec<Word>,
}

impl fmt::Debug for FreeEndo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FreeEndo[{}]", self.to_literal().replace('\n', "; "))
    }
}

impl FreeEndo {
    pub fn new(alphabet: &Arc<Alphabet>, images: Vec<Word>) -> Result<Self, EndoError> {
        if images.len() != alphabet.len() {
            return Err(EndoError::ImageCount { expected: alphabet.len(), got: images.len() });
        }
        if images.iter().any(|w| !w.alphabet().same_as(alphabet)) {
            return Err(WordError::AlphabetMismatch.into());
        }
        Ok(Self { alphabet: alphabet.clone(), images })
    }

    pub fn identity(alphabet: &Arc<Alphabet>) -> Self {
        let images = (0..alphabet.len() as u32)
            .map(|i| Word::reduce(alphabet, [Letter::pos(i)]).expect("in range"))
            .collect();
        Self { alphabet: alphabet.clone(), images }
    }

    /// a ↦ aba, b ↦ a on the alphabet {a, b}.
    pub fn phi() -> Self {
        let ab = Alphabet::new(["a", "b"]).expect("valid");
        Self::phi_on(&ab)
    }

    /// The same map on any rank-two alphabet, first letter playing `a`.
    pub fn phi_on(alphabet: &Arc<Alphabet>) -> Self {
        assert_eq!(alphabet.len(), 2, "phi is defined on rank two");
        let (a, b) = (Letter::pos(0), Letter::pos(1));
        let images = vec![
            Word::reduce(alphabet, [a, b, a]).expect("in range"),
            Word::reduce(alphabet, [a]).expect("in range"),
        ];
        Self { alphabet: alphabet.clone(), images }
    }

    /// Inverse of `phi_on`: a ↦ b, b ↦ b⁻¹ a b⁻¹.
    pub fn phi_inverse_on(alphabet: &Arc<Alphabet>) -> Self {
        assert_eq!(alphabet.len(), 2, "phi is defined on rank two");
        let (a, b) = (Letter::pos(0), Letter::pos(1));
        let images = vec![
            Word::reduce(alphabet, [b]).expect("in range"),
            Word::reduce(alphabet, [b.inv(), a, b.inv()]).expect("in range"),
        ];
        Self { alphabet: alphabet.clone(), images }
    }

    /// Parses one `g -> word` line per generator, in any order.
    pub fn parse(alphabet: &Arc<Alphabet>, text: &str) -> Result<Self, EndoError> {
        let mut images: Vec<Option<Word>> = vec![None; alphabet.len()];
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| EndoError::Parse(format!("missing `->` in `{line}`")))?;
            let g = alphabet.letter(lhs.trim())?;
            let slot = &mut images[g.index as usize];
            if slot.is_some() {
                return Err(EndoError::Parse(format!("generator `{}` given twice", lhs.trim())));
            }
            *slot = Some(Word::parse(alphabet, rhs)?);
        }
        let images = images
            .into_iter()
            .enumerate()
            .map(|(i, w)| w.unwrap_or_else(|| Word::reduce(alphabet, [Letter::pos(i as u32)]).expect("in range")))
            .collect();
        Self::new(alphabet, images)
    }

    pub fn to_literal(&self) -> String {
        self.images
            .iter()
            .enumerate()
            .map(|(i, w)| format!("{} -> {}", self.alphabet.name(i as u32), crate::words::format_letters(&self.alphabet, w.letters())))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn image(&self, l: Letter) -> Vec<Letter> {
        let w = self.images[l.index as usize].letters();
        if l.inverse {
            crate::words::invert_letters(w)
        } else {
            w.to_vec()
        }
    }

    /// Image of a letter sequence, reduced, refusing results longer than `cap`.
    pub fn apply_letters(&self, letters: &[Letter], cap: usize) -> Result<Vec<Letter>, EndoError> {
        let mut out = Vec::new();
        for &l in letters {
            let img = self.images[l.index as usize].letters();
            if l.inverse {
                for &m in img.iter().rev() {
                    push_reduced(&mut out, m.inv());
                }
            } else {
                for &m in img {
                    push_reduced(&mut out, m);
                }
            }
            if out.len() > cap {
                return Err(EndoError::Capped { cap, exact: None });
            }
        }
        Ok(out)
    }

    pub fn apply(&self, w: &Word) -> Result<Word, EndoError> {
        self.apply_capped(w, DEFAULT_LENGTH_CAP)
    }

    pub fn apply_capped(&self, w: &Word, cap: usize) -> Result<Word, EndoError> {
        if !w.alphabet().same_as(&self.alphabet) {
            return Err(WordError::AlphabetMismatch.into());
        }
        let letters = self.apply_letters(w.letters(), cap).map_err(|e| match e {
            EndoError::Capped { cap, .. } if self.is_positive() => {
                EndoError::Capped { cap, exact: Some(self.image_length(w)) }
            }
            e => e,
        })?;
        Ok(Word::reduce(&self.alphabet, letters)?)
    }

    /// Formal image length of a word under a positive map (no cancellation possible
    /// when the word itself is positive).
    fn image_length(&self, w: &Word) -> BigUint {
        w.letters().iter().map(|l| BigUint::from(self.images[l.index as usize].len())).sum()
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &FreeEndo) -> Result<FreeEndo, EndoError> {
        if !self.alphabet.same_as(&other.alphabet) {
            return Err(WordError::AlphabetMismatch.into());
        }
        let images = other
            .images
            .iter()
            .map(|w| self.apply(w))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FreeEndo { alphabet: self.alphabet.clone(), images })
    }

    pub fn power(&self, n: u32) -> Result<FreeEndo, EndoError> {
        let mut acc = FreeEndo::identity(&self.alphabet);
        for _ in 0..n {
            acc = self.compose(&acc)?;
        }
        Ok(acc)
    }

    /// Every image is a nonempty word without inverse letters.
    pub fn is_positive(&self) -> bool {
        self.images.iter().all(|w| !w.is_empty() && w.letters().iter().all(|l| !l.inverse))
    }

    pub fn is_palindromic(&self) -> bool {
        self.images.iter().all(Word::is_palindrome)
    }

    /// `M[i][j]` = occurrences of generator i in the image of generator j.
    pub fn transition_matrix(&self) -> Vec<Vec<u64>> {
        let n = self.alphabet.len();
        let mut m = vec![vec![0u64; n]; n];
        for (j, w) in self.images.iter().enumerate() {
            for l in w.letters() {
                m[l.index as usize][j] += 1;
            }
        }
        m
    }

    /// Letter counts of `selfⁿ(base)` via the matrix recurrence; valid for positive maps.
    pub fn iterate_counts(&self, base: Letter, n: u32) -> Result<Vec<BigUint>, EndoError> {
        if !self.is_positive() {
            return Err(EndoError::UnsupportedCompression);
        }
        let m = self.transition_matrix();
        let size = m.len();
        let mut v = vec![BigUint::zero(); size];
        v[base.index as usize] = BigUint::from(1u8);
        for _ in 0..n {
            let mut next = vec![BigUint::zero(); size];
            for (i, row) in m.iter().enumerate() {
                for (j, &c) in row.iter().enumerate() {
                    if c != 0 {
                        next[i] += &v[j] * c;
                    }
                }
            }
            v = next;
        }
        Ok(v)
    }

    /// `selfⁿ(base)` with its exact length; explicit expansion is attempted only when
    /// the length fits under `cap`.
    pub fn iterate(&self, base: Letter, n: u32) -> Result<IterImage, EndoError> {
        self.iterate_capped(base, n, DEFAULT_LENGTH_CAP)
    }

    pub fn iterate_capped(&self, base: Letter, n: u32, cap: usize) -> Result<IterImage, EndoError> {
        if base.index as usize >= self.alphabet.len() {
            return Err(WordError::IndexOutOfRange { index: base.index as usize, size: self.alphabet.len() }.into());
        }
        if self.is_positive() {
            let exact_length: BigUint = self.iterate_counts(base, n)?.iter().sum();
            return Ok(IterImage { endo: self.clone(), base, depth: n, exact_length });
        }
        let mut cur = vec![base];
        for _ in 0..n {
            cur = self
                .apply_letters(&cur, cap)
                .map_err(|_| EndoError::UnsupportedCompression)?;
        }
        Ok(IterImage { endo: self.clone(), base, depth: n, exact_length: BigUint::from(cur.len()) })
    }
}

/// `endo^depth(base)` described by its exact length; letters are produced on demand.
#[derive(Clone, Debug)]
pub struct IterImage {
    pub endo: FreeEndo,
    pub base: Letter,
    pub depth: u32,
    pub exact_length: BigUint,
}

impl IterImage {
    pub fn length_u64(&self) -> Option<u64> {
        self.exact_length.to_u64()
    }

    /// Explicit word, or `Capped` carrying the exact length.
    pub fn expand(&self, cap: usize) -> Result<Word, EndoError> {
        if self.exact_length > BigUint::from(cap) {
            return Err(EndoError::Capped { cap, exact: Some(self.exact_length.clone()) });
        }
        let mut cur = vec![self.base];
        for _ in 0..self.depth {
            cur = self.endo.apply_letters(&cur, cap)?;
        }
        Ok(Word::reduce(self.endo.alphabet(), cur)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Arc<Alphabet> {
        Alphabet::new(["a", "b"]).unwrap()
    }

    fn w(s: &str) -> Word {
        Word::parse(&ab(), s).unwrap()
    }

    fn phi() -> FreeEndo {
        FreeEndo::phi_on(&ab())
    }

    #[test]
    fn apply_examples() {
        assert_eq!(phi().apply(&w("a")).unwrap(), w("a b a"));
        assert!(phi().apply(&w("")).unwrap().is_empty());
        let twice = phi().apply(&phi().apply(&w("a")).unwrap()).unwrap();
        assert_eq!(twice, w("a b a a a b a"));
    }

    #[test]
    fn literal_round_trip() {
        let e = FreeEndo::parse(&ab(), "a -> a b a\nb -> a").unwrap();
        assert_eq!(e, phi());
        assert_eq!(FreeEndo::parse(&ab(), &e.to_literal()).unwrap(), e);
        assert!(FreeEndo::parse(&ab(), "a = b").is_err());
    }

    #[test]
    fn iterate_lengths() {
        let a = Letter::pos(0);
        assert_eq!(phi().iterate(a, 1).unwrap().length_u64(), Some(3));
        assert_eq!(phi().iterate(a, 2).unwrap().length_u64(), Some(7));
        for n in 0..=25u32 {
            let len = phi().iterate(a, n).unwrap().exact_length;
            assert!(len >= BigUint::from(1u64 << n), "n = {n}");
        }
    }

    #[test]
    fn big_iterates_need_big_integers() {
        let len = phi().iterate(Letter::pos(0), 200).unwrap().exact_length;
        assert!(len.bits() > 64);
        assert!(matches!(
            phi().iterate(Letter::pos(0), 40).unwrap().expand(1000),
            Err(EndoError::Capped { exact: Some(_), .. })
        ));
    }

    #[test]
    fn palindromic_maps() {
        assert!(phi().is_palindromic());
        assert!(!FreeEndo::parse(&ab(), "a -> a b\nb -> a").unwrap().is_palindromic());
        assert!(FreeEndo::identity(&ab()).is_palindromic());
    }

    #[test]
    fn composition() {
        assert_eq!(phi().compose(&FreeEndo::identity(&ab())).unwrap(), phi());
        let sq = phi().compose(&phi()).unwrap();
        assert_eq!(sq.apply(&w("b")).unwrap(), w("a b a"));
        let inv = FreeEndo::phi_inverse_on(&ab());
        assert_eq!(phi().compose(&inv).unwrap(), FreeEndo::identity(&ab()));
        assert_eq!(inv.compose(&phi()).unwrap(), FreeEndo::identity(&ab()));
    }

    #[test]
    fn transition_matrix_and_growth() {
        assert_eq!(phi().transition_matrix(), vec![vec![2, 1], vec![1, 0]]);
        let l = |n| phi().iterate(Letter::pos(0), n).unwrap().length_u64().unwrap() as f64;
        let rho = 1.0 + 2f64.sqrt();
        assert!(((l(15) / l(14)) - rho).abs() / rho < 0.01);
    }

    #[test]
    fn non_positive_compression_refused() {
        let e = FreeEndo::parse(&ab(), "a -> a b^-1 a\nb -> a b").unwrap();
        assert!(matches!(e.iterate_capped(Letter::pos(0), 60, 1000), Err(EndoError::UnsupportedCompression)));
        // a b^-1 a -> a b^-1 a b^-1 b^-1 a after one cancellation
        assert_eq!(e.iterate_capped(Letter::pos(0), 2, 1000).unwrap().length_u64(), Some(6));
    }

    /// Oracle: explicit expansion, computed independently of the matrix recurrence.
    fn expand_by_hand(n: u32, base: char) -> Vec<char> {
        let mut cur = vec![base];
        for _ in 0..n {
            cur = cur
                .iter()
                .flat_map(|c| match c {
                    'a' => vec!['a', 'b', 'a'],
                    _ => vec!['a'],
                })
                .collect();
        }
        cur
    }

    #[test]
    fn explicit_matches_matrix_and_palindromic() {
        for n in 0..=12u32 {
            for (idx, ch) in [(0u32, 'a'), (1, 'b')] {
                let it = phi().iterate(Letter::pos(idx), n).unwrap();
                let word = it.expand(DEFAULT_LENGTH_CAP).unwrap();
                let by_hand = expand_by_hand(n, ch);
                assert_eq!(word.len(), by_hand.len());
                assert_eq!(it.length_u64(), Some(by_hand.len() as u64));
                assert!(word.is_palindrome(), "n = {n}");
            }
        }
    }

    #[test]
    fn compose_agrees_with_double_apply() {
        let alpha = ab();
        let e1 = FreeEndo::parse(&alpha, "a -> a b^-1\nb -> b a").unwrap();
        let e2 = phi();
        let c = e1.compose(&e2).unwrap();
        let mut words = vec![Word::identity(&alpha)];
        let mut frontier = words.clone();
        for _ in 0..4 {
            let mut next = Vec::new();
            for u in &frontier {
                for l in alpha.letters() {
                    if u.letters().last().is_some_and(|x| x.cancels(l)) {
                        continue;
                    }
                    next.push(u.concat(&Word::reduce(&alpha, [l]).unwrap()).unwrap());
                }
            }
            words.extend(next.iter().cloned());
            frontier = next;
        }
        for u in &words {
            assert_eq!(c.apply(u).unwrap(), e1.apply(&e2.apply(u).unwrap()).unwrap());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn word() -> impl Strategy<Value = Word> {
            proptest::collection::vec((0u32..2, any::<bool>()), 0..16).prop_map(|v| {
                Word::reduce(&ab(), v.into_iter().map(|(i, s)| Letter { index: i, inverse: s })).unwrap()
            })
        }

        proptest! {
            #[test]
            fn apply_is_homomorphic(u in word(), v in word()) {
                let e = phi();
                let lhs = e.apply(&u.concat(&v).unwrap()).unwrap();
                let rhs = e.apply(&u).unwrap().concat(&e.apply(&v).unwrap()).unwrap();
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}
