//! Document vectors: term-frequency bag-of-words and averaged word embeddings.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::text::{build_vocabulary, strip_area_terms, tokenize, TokenList, Vocabulary};

/// Dense vector with finite entries and positive dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("feature vector"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format {
                what: "feature vector",
                reason: format!("non-finite entry at index {i}"),
            });
        }
        Ok(FeatureVector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        FeatureVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn scaled(mut self, by: f64) -> Self {
        self.0.iter_mut().for_each(|v| *v *= by);
        self
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Raw term counts over `vocab`; out-of-vocabulary tokens are ignored.
pub fn bow_vectorize(tokens: &TokenList, vocab: &Vocabulary) -> Result<FeatureVector> {
    if vocab.is_empty() {
        return Err(Error::Empty("vocabulary"));
    }
    let mut v = vec![0.0; vocab.len()];
    for tok in tokens.iter() {
        if let Some(i) = vocab.get(tok) {
            v[i] += 1.0;
        }
    }
    Ok(FeatureVector(v))
}

/// Pre-trained word vectors loaded from the `count dim` text format.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    declared_count: usize,
    tokens: Vec<String>,
    lookup: HashMap<String, usize>,
    data: Vec<f64>,
    duplicates: usize,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Count stated in the file header; may differ from [`len`](Self::len).
    pub fn declared_count(&self) -> usize {
        self.declared_count
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Rows dropped because their token had already been seen.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.lookup
            .get(token)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// Build a table in memory. Later duplicates are dropped, as when loading.
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        if dim == 0 {
            return Err(Error::Empty("embedding dimension"));
        }
        let mut table = EmbeddingTable {
            dim,
            declared_count: 0,
            tokens: Vec::new(),
            lookup: HashMap::new(),
            data: Vec::new(),
            duplicates: 0,
        };
        for (tok, v) in entries {
            if v.len() != dim {
                return Err(Error::Format {
                    what: "embedding table",
                    reason: format!("vector for {tok:?} has length {}, expected {dim}", v.len()),
                });
            }
            table.push(tok, &v);
        }
        table.declared_count = table.len();
        Ok(table)
    }

    fn push(&mut self, tok: String, v: &[f64]) {
        if self.lookup.contains_key(&tok) {
            self.duplicates += 1;
            return;
        }
        self.lookup.insert(tok.clone(), self.tokens.len());
        self.tokens.push(tok);
        self.data.extend_from_slice(v);
    }

    /// Write in the same text format [`load_embeddings`] reads.
    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "{} {}", self.len(), self.dim)?;
        for tok in &self.tokens {
            let mut line = tok.clone();
            for v in self.get(tok).unwrap_or_default() {
                let _ = write!(line, " {v}");
            }
            writeln!(sink, "{line}")?;
        }
        Ok(())
    }
}

/// Parse the whitespace-delimited embedding text format: a `count dim`
/// header, then `token v1 .. vdim` per line. Duplicate tokens keep their
/// first vector.
pub fn load_embeddings<R: BufRead>(source: R) -> Result<EmbeddingTable> {
    let mut lines = source.lines();
    let header = loop {
        match lines.next() {
            None => {
                return Err(Error::Format {
                    what: "embedding table",
                    reason: "missing header".into(),
                })
            }
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let malformed = || Error::Parse {
        what: "embedding table",
        line: 1,
        reason: format!("malformed header {header:?}"),
    };
    let mut fields = header.split_whitespace();
    let (Some(count), Some(dim), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(malformed());
    };
    let declared_count: usize = count.parse().map_err(|_| malformed())?;
    let dim: usize = dim.parse().map_err(|_| malformed())?;
    if dim == 0 {
        return Err(malformed());
    }

    let mut table = EmbeddingTable::from_entries(dim, std::iter::empty())?;
    table.declared_count = declared_count;
    let mut row = Vec::with_capacity(dim);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(tok) = fields.next() else { continue };
        row.clear();
        for f in fields {
            let v: f64 = f
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    what: "embedding table",
                    line: line_no,
                    reason: format!("non-numeric entry {f:?}"),
                })?;
            row.push(v);
        }
        if row.len() != dim {
            return Err(Error::Parse {
                what: "embedding table",
                line: line_no,
                reason: "vector length mismatch".into(),
            });
        }
        table.push(tok.to_string(), &row);
    }
    if table.duplicates > 0 {
        log::warn!(
            "embedding table: {} duplicate tokens ignored (first occurrence kept)",
            table.duplicates
        );
    }
    Ok(table)
}

/// Mean of the vectors of in-table tokens, counting repeats. Returns the
/// zero vector and a count of 0 when no token is in the table.
pub fn embed_average(tokens: &TokenList, table: &EmbeddingTable) -> (FeatureVector, usize) {
    let mut sum = vec![0.0; table.dim()];
    let mut n = 0usize;
    for v in tokens.iter().filter_map(|t| table.get(t)) {
        sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        n += 1;
    }
    let fv = FeatureVector(sum);
    if n == 0 {
        (fv, 0)
    } else {
        (fv.scaled(1.0 / n as f64), n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMethod {
    Bow,
    Embeddings,
}

impl FeatureMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMethod::Bow => "bow",
            FeatureMethod::Embeddings => "embeddings",
        }
    }
}

impl FromStr for FeatureMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bow" => Ok(FeatureMethod::Bow),
            "embeddings" | "word2vec" => Ok(FeatureMethod::Embeddings),
            other => Err(Error::InvalidConfig(format!(
                "unknown feature method {other:?} (expected bow or embeddings)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
enum Representation {
    Bow(Vocabulary),
    Embeddings(Arc<EmbeddingTable>),
}

/// Text → vector pipeline: tokenize, strip blocklisted terms, vectorize.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    repr: Representation,
    blocklist: BTreeSet<String>,
}

/// A vectorized document.
#[derive(Debug, Clone, PartialEq)]
pub struct Vectorized {
    pub vector: FeatureVector,
    /// Token occurrences that contributed to the vector.
    pub in_vocab: usize,
}

impl FeatureExtractor {
    pub fn bow(vocab: Vocabulary, blocklist: BTreeSet<String>) -> Result<Self> {
        if vocab.is_empty() {
            return Err(Error::Empty("vocabulary"));
        }
        Ok(FeatureExtractor {
            repr: Representation::Bow(vocab),
            blocklist,
        })
    }

    /// Build the vocabulary from `texts` and wrap it.
    pub fn fit_bow<'a, I>(texts: I, min_freq: usize, blocklist: BTreeSet<String>) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let docs: Vec<TokenList> = texts
            .into_iter()
            .map(|t| strip_area_terms(&tokenize(t), &blocklist))
            .collect();
        Self::bow(build_vocabulary(&docs, min_freq)?, blocklist)
    }

    pub fn embeddings(table: Arc<EmbeddingTable>, blocklist: BTreeSet<String>) -> Self {
        FeatureExtractor {
            repr: Representation::Embeddings(table),
            blocklist,
        }
    }

    pub fn method(&self) -> FeatureMethod {
        match self.repr {
            Representation::Bow(_) => FeatureMethod::Bow,
            Representation::Embeddings(_) => FeatureMethod::Embeddings,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Representation::Bow(v) => v.len(),
            Representation::Embeddings(t) => t.dim(),
        }
    }

    pub fn vocabulary(&self) -> Option<&Vocabulary> {
        match &self.repr {
            Representation::Bow(v) => Some(v),
            Representation::Embeddings(_) => None,
        }
    }

    pub fn blocklist(&self) -> &BTreeSet<String> {
        &self.blocklist
    }

    pub fn tokens(&self, text: &str) -> TokenList {
        strip_area_terms(&tokenize(text), &self.blocklist)
    }

    pub fn vectorize(&self, text: &str) -> Vectorized {
        let tokens = self.tokens(text);
        match &self.repr {
            Representation::Bow(vocab) => {
                // The vocabulary is non-empty by construction.
                let vector = bow_vectorize(&tokens, vocab).expect("non-empty vocabulary");
                let in_vocab = vector.values().iter().sum::<f64>() as usize;
                Vectorized { vector, in_vocab }
            }
            Representation::Embeddings(table) => {
                let (vector, in_vocab) = embed_average(&tokens, table);
                Vectorized { vector, in_vocab }
            }
        }
    }

    /// Line-oriented description. Embedding tables are not embedded; only
    /// their dimension is recorded.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "features {}", self.method().as_str());
        let _ = writeln!(
            out,
            "blocklist {}",
            self.blocklist.iter().cloned().collect::<Vec<_>>().join(" ")
        );
        match &self.repr {
            Representation::Bow(v) => {
                let _ = writeln!(out, "min_freq {}", v.min_freq());
                let _ = writeln!(out, "vocab {}", v.len());
                for (tok, c) in v.entries() {
                    let _ = writeln!(out, "{tok} {c}");
                }
            }
            Representation::Embeddings(t) => {
                let _ = writeln!(out, "embedding_dim {}", t.dim());
            }
        }
        out
    }

    /// Inverse of [`to_text`](Self::to_text). Embedding extractors need the table.
    pub fn from_text(text: &str, table: Option<Arc<EmbeddingTable>>) -> Result<Self> {
        let mut lines = SectionLines::new(text);
        let method: FeatureMethod = lines.keyed("features")?.1.parse()?;
        let blocklist: BTreeSet<String> = lines
            .keyed("blocklist")?
            .1
            .split_whitespace()
            .map(String::from)
            .collect();
        match method {
            FeatureMethod::Bow => {
                let min_freq = lines.keyed_int("min_freq")?;
                let len = lines.keyed_int("vocab")?;
                let mut entries = Vec::with_capacity(len);
                for _ in 0..len {
                    let (n, line) = lines.raw("vocabulary entry")?;
                    let (tok, c) = line
                        .rsplit_once(' ')
                        .and_then(|(t, c)| Some((t, c.parse::<usize>().ok()?)))
                        .ok_or_else(|| SectionLines::bad(n, "expected `token count`".into()))?;
                    entries.push((tok.to_string(), c));
                }
                Self::bow(Vocabulary::from_counts(entries, min_freq)?, blocklist)
            }
            FeatureMethod::Embeddings => {
                let dim = lines.keyed_int("embedding_dim")?;
                let table = table.ok_or_else(|| {
                    Error::InvalidConfig("an embedding table is required for this model".into())
                })?;
                if table.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: table.dim(),
                    });
                }
                Ok(Self::embeddings(table, blocklist))
            }
        }
    }
}

struct SectionLines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> SectionLines<'a> {
    fn new(text: &'a str) -> Self {
        SectionLines {
            inner: text.lines().enumerate(),
        }
    }

    fn bad(line: usize, reason: String) -> Error {
        Error::Parse {
            what: "feature section",
            line,
            reason,
        }
    }

    fn raw(&mut self, expecting: &str) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .ok_or_else(|| Error::Format {
                what: "feature section",
                reason: format!("missing {expecting}"),
            })
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (n, line) = self.raw(key)?;
        let rest = line
            .strip_prefix(key)
            .filter(|r| r.is_empty() || r.starts_with(' '))
            .ok_or_else(|| Self::bad(n, format!("expected {key:?}")))?;
        Ok((n, rest.trim_start()))
    }

    fn keyed_int(&mut self, key: &str) -> Result<usize> {
        let (n, v) = self.keyed(key)?;
        v.parse()
            .map_err(|_| Self::bad(n, format!("expected integer, got {v:?}")))
    }
}
