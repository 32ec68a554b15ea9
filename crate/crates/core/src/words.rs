//! Freely reduced words over named alphabets.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Explicit words longer than this are refused by builders that can grow them.
pub const DEFAULT_LENGTH_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("alphabet must contain at least one name")]
    EmptyAlphabet,
    #[error("generator name `{0}` appears twice")]
    DuplicateName(String),
    #[error("invalid generator name `{0}`")]
    InvalidName(String),
    #[error("words are over different alphabets")]
    AlphabetMismatch,
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("letter index {index} out of range for alphabet of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("cannot parse word: {0}")]
    Parse(String),
}

/// Ordered list of distinct generator names, interned to indices.
#[derive(Clone, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names.iter()).finish()
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name.contains('^')
        && !name.contains('·')
        && !name.chars().any(char::is_whitespace)
        && !name.starts_with(|c: char| c.is_ascii_digit() || c == '-')
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Arc<Self>, WordError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(WordError::EmptyAlphabet);
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if !valid_name(n) {
                return Err(WordError::InvalidName(n.clone()));
            }
            if index.insert(n.clone(), i as u32).is_some() {
                return Err(WordError::DuplicateName(n.clone()));
            }
        }
        Ok(Arc::new(Self { names, index }))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: u32) -> &str {
        &self.names[index as usize]
    }

    pub fn position(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn letter(&self, name: &str) -> Result<Letter, WordError> {
        self.position(name)
            .map(Letter::pos)
            .ok_or_else(|| WordError::UnknownGenerator(name.to_string()))
    }

    /// All letters in the fixed order g₁, g₁⁻¹, g₂, g₂⁻¹, …
    pub fn letters(&self) -> Vec<Letter> {
        (0..self.len() as u32)
            .flat_map(|i| [Letter::pos(i), Letter::neg(i)])
            .collect()
    }

    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || self.names == other.names
    }
}

/// A generator index together with a sign.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Letter {
    pub index: u32,
    pub inverse: bool,
}

impl Letter {
    pub const fn pos(index: u32) -> Self {
        Self { index, inverse: false }
    }

    pub const fn neg(index: u32) -> Self {
        Self { index, inverse: true }
    }

    pub fn with_sign(index: u32, sign: i32) -> Self {
        Self { index, inverse: sign < 0 }
    }

    pub fn inv(self) -> Self {
        Self { index: self.index, inverse: !self.inverse }
    }

    pub fn sign(self) -> i32 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    pub fn cancels(self, other: Letter) -> bool {
        self.index == other.index && self.inverse != other.inverse
    }
}

/// Appends `l` to an already reduced letter sequence, cancelling if possible.
pub fn push_reduced(acc: &mut Vec<Letter>, l: Letter) {
    match acc.last() {
        Some(&last) if last.cancels(l) => {
            acc.pop();
        }
        _ => acc.push(l),
    }
}

pub fn reduce_letters<I: IntoIterator<Item = Letter>>(raw: I) -> Vec<Letter> {
    let mut out = Vec::new();
    for l in raw {
        push_reduced(&mut out, l);
    }
    out
}

pub fn invert_letters(letters: &[Letter]) -> Vec<Letter> {
    letters.iter().rev().map(|l| l.inv()).collect()
}

/// Freely reduced word over one alphabet.
#[derive(Clone)]
pub struct Word {
    alphabet: Arc<Alphabet>,
    letters: Vec<Letter>,
}

impl PartialEq for Word {
    fn eq(&self, other: &Self) -> bool {
        self.letters == other.letters && self.alphabet.same_as(&other.alphabet)
    }
}

impl Eq for Word {}

impl std::hash::Hash for Word {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.letters.hash(state);
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("ε");
        }
        f.write_str(&format_letters(&self.alphabet, &self.letters))
    }
}

/// Space separated text form, empty for the identity.
pub fn format_letters(alphabet: &Alphabet, letters: &[Letter]) -> String {
    let mut s = String::new();
    for (i, l) in letters.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(alphabet.name(l.index));
        if l.inverse {
            s.push_str("^-1");
        }
    }
    s
}

impl Word {
    pub fn identity(alphabet: &Arc<Alphabet>) -> Self {
        Self { alphabet: alphabet.clone(), letters: Vec::new() }
    }

    /// Free reduction of a raw letter sequence.
    pub fn reduce<I: IntoIterator<Item = Letter>>(
        alphabet: &Arc<Alphabet>,
        raw: I,
    ) -> Result<Self, WordError> {
        let size = alphabet.len();
        let mut letters = Vec::new();
        for l in raw {
            if l.index as usize >= size {
                return Err(WordError::IndexOutOfRange { index: l.index as usize, size });
            }
            push_reduced(&mut letters, l);
        }
        Ok(Self { alphabet: alphabet.clone(), letters })
    }

    /// Concatenates and reduces words that share one alphabet.
    pub fn reduce_mixed<'a, I>(parts: I) -> Result<Self, WordError>
    where
        I: IntoIterator<Item = &'a Word>,
    {
        let mut it = parts.into_iter();
        let first = it.next().ok_or(WordError::EmptyAlphabet)?;
        let mut letters = first.letters.clone();
        for w in it {
            if !w.alphabet.same_as(&first.alphabet) {
                return Err(WordError::AlphabetMismatch);
            }
            for &l in &w.letters {
                push_reduced(&mut letters, l);
            }
        }
        Ok(Self { alphabet: first.alphabet.clone(), letters })
    }

    pub fn generator(alphabet: &Arc<Alphabet>, name: &str) -> Result<Self, WordError> {
        Ok(Self { alphabet: alphabet.clone(), letters: vec![alphabet.letter(name)?] })
    }

    /// Parses names separated by whitespace or '·'; `g^-1` is an inverse, `g^k` a power.
    pub fn parse(alphabet: &Arc<Alphabet>, text: &str) -> Result<Self, WordError> {
        let mut letters = Vec::new();
        for token in text.split(|c: char| c.is_whitespace() || c == '·').filter(|t| !t.is_empty()) {
            if token == "ε" || token == "e" && alphabet.position("e").is_none() {
                continue;
            }
            let (name, exp) = match token.split_once('^') {
                Some((n, e)) => {
                    let e: i64 = e
                        .trim_start_matches('(')
                        .trim_end_matches(')')
                        .parse()
                        .map_err(|_| WordError::Parse(format!("bad exponent in `{token}`")))?;
                    (n, e)
                }
                None => (token, 1),
            };
            let l = alphabet.letter(name)?;
            let l = if exp < 0 { l.inv() } else { l };
            for _ in 0..exp.unsigned_abs() {
                push_reduced(&mut letters, l);
            }
        }
        Ok(Self { alphabet: alphabet.clone(), letters })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Result<Word, WordError> {
        if !self.alphabet.same_as(&other.alphabet) {
            return Err(WordError::AlphabetMismatch);
        }
        let mut letters = self.letters.clone();
        for &l in &other.letters {
            push_reduced(&mut letters, l);
        }
        Ok(Word { alphabet: self.alphabet.clone(), letters })
    }

    pub fn invert(&self) -> Word {
        Word { alphabet: self.alphabet.clone(), letters: invert_letters(&self.letters) }
    }

    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.invert() } else { self.clone() };
        let mut letters = Vec::new();
        for _ in 0..k.unsigned_abs() {
            for &l in &base.letters {
                push_reduced(&mut letters, l);
            }
        }
        Word { alphabet: self.alphabet.clone(), letters }
    }

    /// Letter sequence equals its reversal, signs included.
    pub fn is_palindrome(&self) -> bool {
        self.letters.iter().eq(self.letters.iter().rev())
    }

    /// Signed letter count per generator.
    pub fn abelianize(&self) -> Vec<i64> {
        let mut v = vec![0i64; self.alphabet.len()];
        for l in &self.letters {
            v[l.index as usize] += i64::from(l.sign());
        }
        v
    }

    /// Rewrites the word letter by letter into another alphabet by name.
    pub fn relabel(&self, target: &Arc<Alphabet>, map: &dyn Fn(&str) -> String) -> Result<Word, WordError> {
        let raw = self
            .letters
            .iter()
            .map(|l| {
                let name = map(self.alphabet.name(l.index));
                target.letter(&name).map(|t| if l.inverse { t.inv() } else { t })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Word::reduce(target, raw)
    }

    pub fn prefixes(&self) -> impl Iterator<Item = &[Letter]> + '_ {
        (0..=self.letters.len()).map(move |i| &self.letters[..i])
    }
}
