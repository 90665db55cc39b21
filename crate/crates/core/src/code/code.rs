use serde::{Deserialize, Serialize};

use super::codebook::Codebook;
use super::search::Searcher;
use crate::error::{CoordError, Result};
use crate::prob::{JointPmf, Symbol};

/// Slack subtracted before rounding `2^(nR)` up, so that rates given as
/// `log2(m) / n` in floating point map back to exactly `m` messages.
const RATE_ROUNDING: f64 = 1e-9;

/// `ceil(2^(n * rate))`, the message-set size of a rate-`rate` code.
pub fn message_count(n: usize, rate: f64) -> Result<usize> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(CoordError::InvalidArgument(format!("rate must be finite and non-negative, got {rate}")));
    }
    let exponent = n as f64 * rate;
    if exponent >= 63.0 {
        return Err(CoordError::TableCap { size: u128::MAX, cap: 1 << 63 });
    }
    Ok(((exponent.exp2() - RATE_ROUNDING).ceil() as usize).max(1))
}

/// How a code picks the first-hop message for one block of source symbols.
#[derive(Clone, Debug, PartialEq)]
pub enum Encoder {
    /// Message for every input block, indexed with the first symbol most
    /// significant.
    Table(Vec<u32>),
    /// The message whose decoded actions give the joint type closest in
    /// total variation to this pmf; lowest index on ties.
    NearestType(JointPmf),
}

/// Deterministic encoder, optional recoder and decoder tables, applied to
/// `blocks` consecutive blocks of `n` source symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinationCode {
    n: usize,
    blocks: usize,
    r1: f64,
    r2: Option<f64>,
    x_alphabet: usize,
    encoder: Encoder,
    recoder: Option<Vec<u32>>,
    y_book: Codebook,
    z_book: Option<Codebook>,
}

/// Actions produced from one source sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Actions {
    pub y: Vec<Symbol>,
    pub z: Option<Vec<Symbol>>,
}

fn check_book(book: &Codebook, n: usize, rate: f64, which: &str) -> Result<()> {
    let m = message_count(n, rate)?;
    if book.word_len() != n {
        return Err(CoordError::LengthMismatch { expected: n, found: book.word_len() });
    }
    if book.len() != m {
        return Err(CoordError::InvalidArgument(format!(
            "{which} decoder holds {} codewords, rate {rate} at n={n} needs {m}",
            book.len()
        )));
    }
    Ok(())
}

pub(crate) fn sequence_count(alphabet: usize, n: usize) -> Option<usize> {
    alphabet.checked_pow(u32::try_from(n).ok()?)
}

impl CoordinationCode {
    pub fn two_node(n: usize, r1: f64, x_alphabet: usize, encoder: Encoder, y_book: Codebook) -> Result<Self> {
        let code = Self { n, blocks: 1, r1, r2: None, x_alphabet, encoder, recoder: None, y_book, z_book: None };
        code.validate()?;
        Ok(code)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn cascade(
        n: usize,
        r1: f64,
        r2: f64,
        x_alphabet: usize,
        encoder: Encoder,
        recoder: Vec<u32>,
        y_book: Codebook,
        z_book: Codebook,
    ) -> Result<Self> {
        let code = Self {
            n,
            blocks: 1,
            r1,
            r2: Some(r2),
            x_alphabet,
            encoder,
            recoder: Some(recoder),
            y_book,
            z_book: Some(z_book),
        };
        code.validate()?;
        Ok(code)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.x_alphabet == 0 || self.x_alphabet > Symbol::MAX as usize + 1 {
            return Err(CoordError::InvalidArgument(format!(
                "code needs n >= 1 and a source alphabet of 1..=256 symbols, got n={}, |X|={}",
                self.n, self.x_alphabet
            )));
        }
        check_book(&self.y_book, self.n, self.r1, "first")?;
        let m1 = self.y_book.len();
        match (&self.recoder, &self.z_book, self.r2) {
            (None, None, None) => {}
            (Some(recoder), Some(z_book), Some(r2)) => {
                check_book(z_book, self.n, r2, "second")?;
                if recoder.len() != m1 {
                    return Err(CoordError::InvalidArgument(format!(
                        "recoder has {} entries for {m1} messages",
                        recoder.len()
                    )));
                }
                if let Some(&j) = recoder.iter().find(|&&j| j as usize >= z_book.len()) {
                    return Err(CoordError::InvalidArgument(format!(
                        "recoder maps to message {j} of {}",
                        z_book.len()
                    )));
                }
            }
            _ => {
                return Err(CoordError::InvalidArgument(
                    "cascade codes need a recoder, a second rate and a second decoder".into(),
                ))
            }
        }
        match &self.encoder {
            Encoder::Table(table) => {
                let inputs = sequence_count(self.x_alphabet, self.n)
                    .ok_or_else(|| CoordError::InvalidArgument("encoder table over |X|^n inputs overflows".into()))?;
                if table.len() != inputs {
                    return Err(CoordError::InvalidArgument(format!(
                        "encoder table has {} entries for {inputs} inputs",
                        table.len()
                    )));
                }
                if let Some(&i) = table.iter().find(|&&i| i as usize >= m1) {
                    return Err(CoordError::InvalidArgument(format!("encoder maps to message {i} of {m1}")));
                }
            }
            Encoder::NearestType(target) => {
                if target.shape() != self.joint_shape() {
                    return Err(CoordError::ShapeMismatch { left: target.shape().to_vec(), right: self.joint_shape() });
                }
            }
        }
        Ok(())
    }

    /// Total blocklength `blocks * n`.
    pub fn blocklength(&self) -> usize {
        self.n * self.blocks
    }

    pub fn base_blocklength(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn rates(&self) -> (f64, Option<f64>) {
        (self.r1, self.r2)
    }

    /// Per-block message-set sizes.
    pub fn message_counts(&self) -> (usize, Option<usize>) {
        (self.y_book.len(), self.z_book.as_ref().map(|b| b.len()))
    }

    pub fn is_cascade(&self) -> bool {
        self.z_book.is_some()
    }

    pub fn x_alphabet(&self) -> usize {
        self.x_alphabet
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn recoder(&self) -> Option<&[u32]> {
        self.recoder.as_deref()
    }

    pub fn y_book(&self) -> &Codebook {
        &self.y_book
    }

    pub fn z_book(&self) -> Option<&Codebook> {
        self.z_book.as_ref()
    }

    /// Alphabet sizes of the joint type `(X, Y[, Z])`.
    pub fn joint_shape(&self) -> Vec<usize> {
        let mut shape = vec![self.x_alphabet, self.y_book.alphabet()];
        if let Some(z) = &self.z_book {
            shape.push(z.alphabet());
        }
        shape
    }

    pub(crate) fn with_blocks(&self, blocks: usize) -> Self {
        Self { blocks, ..self.clone() }
    }

    pub(crate) fn check_input(&self, x: &[Symbol]) -> Result<()> {
        if x.len() != self.blocklength() {
            return Err(CoordError::LengthMismatch { expected: self.blocklength(), found: x.len() });
        }
        if let Some(&s) = x.iter().find(|&&s| s as usize >= self.x_alphabet) {
            return Err(CoordError::SymbolOutOfRange { symbol: s as usize, alphabet: self.x_alphabet });
        }
        Ok(())
    }

    /// Per-block first-hop messages for `x`.
    pub fn encode(&self, x: &[Symbol]) -> Result<Vec<u32>> {
        self.check_input(x)?;
        let searcher = Searcher::plain(self);
        Ok(x.chunks(self.n).map(|block| searcher.encode_block(block)).collect())
    }
}

/// Runs `code` on the source sequence `x`.
pub fn apply_code(code: &CoordinationCode, x: &[Symbol]) -> Result<Actions> {
    code.check_input(x)?;
    Ok(run_blocks(code, &Searcher::plain(code), x))
}

/// Actions for `x`, any whole number of base blocks long.
pub(crate) fn run_blocks(code: &CoordinationCode, searcher: &Searcher, x: &[Symbol]) -> Actions {
    let n = code.n;
    let mut y = vec![0; x.len()];
    let mut z = code.z_book.as_ref().map(|_| vec![0; x.len()]);
    for (b, block) in x.chunks(n).enumerate() {
        let i = searcher.encode_block(block) as usize;
        code.y_book.write_word(i, &mut y[b * n..(b + 1) * n]);
        if let (Some(z), Some(book), Some(recoder)) = (z.as_mut(), &code.z_book, &code.recoder) {
            book.write_word(recoder[i] as usize, &mut z[b * n..(b + 1) * n]);
        }
    }
    Actions { y, z }
}

/// The code applied independently to `k` consecutive copies of its block.
/// Rates are unchanged; messages stay factored per block.
pub fn block_repeat(code: &CoordinationCode, k: usize) -> Result<CoordinationCode> {
    if k == 0 {
        return Err(CoordError::InvalidArgument("block count must be at least 1".into()));
    }
    let blocks = code
        .blocks
        .checked_mul(k)
        .filter(|b| b.checked_mul(code.n).is_some_and(|len| u32::try_from(len).is_ok()))
        .ok_or_else(|| CoordError::IndexOverflow(format!("{} x {k} blocks of length {}", code.blocks, code.n)))?;
    Ok(code.with_blocks(blocks))
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EncoderDoc {
    Table(Vec<u32>),
    Rule { rule: String, target: JointPmf },
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
struct CodeDoc {
    n: usize,
    #[serde(default = "one")]
    blocks: usize,
    #[serde(rename = "R1")]
    r1: f64,
    #[serde(rename = "R2")]
    r2: Option<f64>,
    x_alphabet: usize,
    y_alphabet: usize,
    z_alphabet: Option<usize>,
    encoder: EncoderDoc,
    recoder: Option<Vec<u32>>,
    decoders: Vec<Vec<Vec<Symbol>>>,
}

fn one() -> usize {
    1
}

const NEAREST_RULE: &str = "nearest-type";

impl Serialize for CoordinationCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut decoders = vec![self.y_book.words()];
        if let Some(z) = &self.z_book {
            decoders.push(z.words());
        }
        CodeDoc {
            n: self.n,
            blocks: self.blocks,
            r1: self.r1,
            r2: self.r2,
            x_alphabet: self.x_alphabet,
            y_alphabet: self.y_book.alphabet(),
            z_alphabet: self.z_book.as_ref().map(|b| b.alphabet()),
            encoder: match &self.encoder {
                Encoder::Table(t) => EncoderDoc::Table(t.clone()),
                Encoder::NearestType(target) => EncoderDoc::Rule { rule: NEAREST_RULE.into(), target: target.clone() },
            },
            recoder: self.recoder.clone(),
            decoders,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoordinationCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let doc = CodeDoc::deserialize(d)?;
        let encoder = match doc.encoder {
            EncoderDoc::Table(t) => Encoder::Table(t),
            EncoderDoc::Rule { rule, target } if rule == NEAREST_RULE => Encoder::NearestType(target),
            EncoderDoc::Rule { rule, .. } => return Err(D::Error::custom(format!("unknown encoder rule {rule:?}"))),
        };
        let mut books = doc.decoders.into_iter();
        let y_book =
            Codebook::from_words(&books.next().unwrap_or_default(), doc.n, doc.y_alphabet).map_err(D::Error::custom)?;
        let code = match (doc.r2, doc.recoder, doc.z_alphabet) {
            (None, None, None) => CoordinationCode::two_node(doc.n, doc.r1, doc.x_alphabet, encoder, y_book),
            (Some(r2), Some(recoder), Some(nz)) => {
                let z_book =
                    Codebook::from_words(&books.next().unwrap_or_default(), doc.n, nz).map_err(D::Error::custom)?;
                CoordinationCode::cascade(doc.n, doc.r1, r2, doc.x_alphabet, encoder, recoder, y_book, z_book)
            }
            _ => return Err(D::Error::custom("R2, recoder and z_alphabet must be given together")),
        };
        let code = code.map_err(D::Error::custom)?;
        block_repeat(&code, doc.blocks).map_err(D::Error::custom)
    }
}
