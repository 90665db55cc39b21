use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{CoordError, Result};
use crate::prob::Symbol;

/// `m` codewords of length `n` over a finite alphabet.
///
/// Codewords fitting in 64 bits are stored packed, one key per word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codebook {
    n: usize,
    alphabet: usize,
    words: Words,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Words {
    Packed { bits: u32, keys: Vec<u64> },
    Plain(Vec<Symbol>),
}

fn symbol_bits(alphabet: usize) -> u32 {
    usize::BITS - (alphabet.max(2) - 1).leading_zeros()
}

impl Codebook {
    fn empty(n: usize, alphabet: usize, capacity: usize) -> Self {
        let bits = symbol_bits(alphabet);
        let words = if bits as usize * n <= 64 {
            Words::Packed { bits, keys: Vec::with_capacity(capacity) }
        } else {
            Words::Plain(Vec::with_capacity(capacity * n))
        };
        Self { n, alphabet, words }
    }

    fn push(&mut self, word: &[Symbol]) {
        match &mut self.words {
            Words::Packed { bits, keys } => keys.push(pack(word, *bits)),
            Words::Plain(symbols) => symbols.extend_from_slice(word),
        }
    }

    pub fn from_words(words: &[Vec<Symbol>], n: usize, alphabet: usize) -> Result<Self> {
        if n == 0 || alphabet == 0 || alphabet > Symbol::MAX as usize + 1 {
            return Err(CoordError::InvalidArgument(format!(
                "codebook needs n >= 1 and an alphabet of 1..=256 symbols, got n={n}, alphabet={alphabet}"
            )));
        }
        let mut book = Self::empty(n, alphabet, words.len());
        for w in words {
            if w.len() != n {
                return Err(CoordError::LengthMismatch { expected: n, found: w.len() });
            }
            if let Some(&s) = w.iter().find(|&&s| s as usize >= alphabet) {
                return Err(CoordError::SymbolOutOfRange { symbol: s as usize, alphabet });
            }
            book.push(w);
        }
        Ok(book)
    }

    /// `m` words with i.i.d. symbols drawn from `marginal`.
    pub(crate) fn random(m: usize, n: usize, marginal: &[f64], rng: &mut impl Rng) -> Result<Self> {
        let law =
            WeightedIndex::new(marginal).map_err(|e| CoordError::InvalidPmf(format!("codeword marginal: {e}")))?;
        let mut book = Self::empty(n, marginal.len(), m);
        let mut word = vec![0 as Symbol; n];
        for _ in 0..m {
            word.iter_mut().for_each(|s| *s = law.sample(rng) as Symbol);
            book.push(&word);
        }
        Ok(book)
    }

    pub fn len(&self) -> usize {
        match &self.words {
            Words::Packed { keys, .. } => keys.len(),
            Words::Plain(symbols) => symbols.len() / self.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn word_len(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn write_word(&self, i: usize, out: &mut [Symbol]) {
        match &self.words {
            Words::Packed { bits, keys } => unpack(keys[i], *bits, out),
            Words::Plain(symbols) => out.copy_from_slice(&symbols[i * self.n..(i + 1) * self.n]),
        }
    }

    pub fn word(&self, i: usize) -> Vec<Symbol> {
        let mut out = vec![0; self.n];
        self.write_word(i, &mut out);
        out
    }

    pub fn words(&self) -> Vec<Vec<Symbol>> {
        (0..self.len()).map(|i| self.word(i)).collect()
    }

    /// Packed keys and the bits per symbol, when the words fit in 64 bits.
    pub(crate) fn keys(&self) -> Option<(&[u64], u32)> {
        match &self.words {
            Words::Packed { bits, keys } => Some((keys, *bits)),
            Words::Plain(_) => None,
        }
    }
}

pub(crate) fn pack(word: &[Symbol], bits: u32) -> u64 {
    word.iter().enumerate().fold(0u64, |k, (t, &s)| k | (s as u64) << (t as u32 * bits))
}

fn unpack(key: u64, bits: u32, out: &mut [Symbol]) {
    let mask = (1u64 << bits) - 1;
    for (t, s) in out.iter_mut().enumerate() {
        *s = ((key >> (t as u32 * bits)) & mask) as Symbol;
    }
}
