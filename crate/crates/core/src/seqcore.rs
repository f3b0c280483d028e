//! Token sequences, occurrence counts and frequency-of-frequencies profiles,
//! plus the distances used to compare count-mass vectors.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Bidirectional map between raw tokens and dense symbol IDs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    fn intern(&mut self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len();
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), id);
        id
    }
}

/// A length-`n` trajectory with symbols relabelled densely in order of first
/// appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence {
    symbols: Vec<usize>,
    vocab: Vocab,
}

impl TokenSequence {
    /// Ingests raw tokens; the first distinct token gets ID 0, the next 1, and so on.
    pub fn from_tokens<I, S>(raw: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocab::default();
        let symbols = raw.into_iter().map(|t| vocab.intern(t.as_ref())).collect();
        Self { symbols, vocab }
    }

    /// Relabels arbitrary integer state IDs densely. The vocabulary keeps the
    /// decimal form of each raw ID as its token, so `vocab().token(id)` maps
    /// back to the originating state.
    pub fn from_raw_ids(raw: &[usize]) -> Self {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut tokens = Vec::new();
        let symbols = raw
            .iter()
            .map(|&r| {
                *remap.entry(r).or_insert_with(|| {
                    tokens.push(r.to_string());
                    tokens.len() - 1
                })
            })
            .collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            symbols,
            vocab: Vocab { tokens, index },
        }
    }

    /// Parses the token file format: UTF-8, one token per line, empty lines skipped.
    pub fn parse_token_file(text: &str) -> Self {
        Self::from_tokens(
            text.lines()
                .map(|l| l.strip_suffix('\r').unwrap_or(l))
                .filter(|l| !l.is_empty()),
        )
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// Number of distinct symbols observed.
    pub fn support_size(&self) -> usize {
        self.vocab.len()
    }

    /// The raw tokens in sequence order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> + '_ {
        self.symbols.iter().map(|&s| self.vocab.tokens[s].as_str())
    }
}

/// Occurrence counts `N_x`, indexed by dense symbol ID. Every stored count is at least 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    counts: Vec<usize>,
    n: usize,
}

impl CountTable {
    pub fn get(&self, id: usize) -> usize {
        self.counts.get(id).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn max_count(&self) -> usize {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

pub fn occurrence_counts(seq: &TokenSequence) -> CountTable {
    let mut counts = vec![0usize; seq.support_size()];
    for &s in seq.symbols() {
        counts[s] += 1;
    }
    CountTable { counts, n: seq.len() }
}

/// Frequency-of-frequencies `φ_ζ` for `ζ = 0..=n`.
///
/// `φ_0` is only meaningful when the alphabet size was supplied; otherwise
/// `phi()[0]` holds 0 and [`FrequencyProfile::phi0`] returns `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyProfile {
    phi: Vec<usize>,
    phi0_known: bool,
}

impl FrequencyProfile {
    pub fn phi(&self) -> &[usize] {
        &self.phi
    }

    pub fn get(&self, zeta: usize) -> usize {
        self.phi.get(zeta).copied().unwrap_or(0)
    }

    pub fn phi0(&self) -> Option<usize> {
        self.phi0_known.then_some(self.phi[0])
    }

    pub fn n(&self) -> usize {
        self.phi.len() - 1
    }
}

pub fn frequency_profile(table: &CountTable, alphabet_size: Option<usize>) -> Result<FrequencyProfile> {
    let mut phi = vec![0usize; table.n + 1];
    for &c in &table.counts {
        phi[c] += 1;
    }
    if let Some(k) = alphabet_size {
        if k < table.distinct() {
            return Err(Error::InconsistentAlphabet {
                given: k,
                observed: table.distinct(),
            });
        }
        phi[0] = k - table.distinct();
    }
    Ok(FrequencyProfile {
        phi,
        phi0_known: alphabet_size.is_some(),
    })
}

/// A nonnegative vector indexed by count `ζ = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CountMassVector {
    mass: Vec<f64>,
    #[serde(skip)]
    normalized: bool,
}

impl CountMassVector {
    pub fn new(mass: Vec<f64>, normalized: bool) -> Result<Self> {
        if let Some(bad) = mass.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(domain("mass entry", bad, ">= 0 and finite"));
        }
        let v = Self { mass, normalized };
        if normalized && (v.total() - 1.0).abs() > 1e-12 {
            return Err(domain("mass total", v.total(), "1 within 1e-12"));
        }
        Ok(v)
    }

    pub(crate) fn from_parts(mass: Vec<f64>, normalized: bool) -> Self {
        Self { mass, normalized }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mass
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.mass
    }

    pub fn get(&self, zeta: usize) -> f64 {
        self.mass.get(zeta).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Compensated sum of all entries.
    pub fn total(&self) -> f64 {
        compensated_sum(self.mass.iter().copied())
    }
}

/// Neumaier-compensated summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Average squared pairwise difference `Σ_{i<j} (a_i − a_j)² / (m(m−1))`.
///
/// Uses the `m·Σa² − (Σa)²` identity on values shifted by the first entry.
pub fn spread(values: &[f64]) -> Result<f64> {
    let m = values.len();
    if m < 2 {
        return Err(domain("spread length", m, ">= 2"));
    }
    let shift = values[0];
    let (s1, s2) = values.iter().fold((0.0, 0.0), |(s1, s2), &a| {
        let d = a - shift;
        (s1 + d, s2 + d * d)
    });
    let mf = m as f64;
    Ok(((mf * s2 - s1 * s1) / (mf * (mf - 1.0))).max(0.0))
}

pub fn l1_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(compensated_sum(p.iter().zip(q).map(|(a, b)| (a - b).abs())))
}

pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    l1_distance(p, q).map(|d| 0.5 * d)
}
