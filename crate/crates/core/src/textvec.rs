//! Bag-of-words binarization of short documents.
//!
//! Words are kept when their document frequency lies in `[min_df, max_df]`
//! and they are not stoplisted; the `n` most frequent survivors (by total
//! count, ties lexicographic) form the vocabulary. A document becomes an
//! `n`-bit vector with bit `k` set iff vocabulary word `k` occurs in it.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamming::{BinaryVector, HammingError};

const SAMPLE_CORPUS: &str = include_str!("../data/sample_corpus.json");

#[derive(Debug, Error)]
pub enum TextvecError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("document id {0:?} is used more than once")]
    DuplicateId(String),
    #[error(
        "only {available} words survive the frequency filter (df in [{min_df}, {max_df}], stoplist applied); {requested} requested"
    )]
    InsufficientCandidates { requested: usize, available: usize, min_df: usize, max_df: usize },
    #[error("invalid vocabulary parameters: {0}")]
    InvalidParams(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed corpus JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed vector CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("vector CSV is missing the {0:?} column")]
    MissingColumn(&'static str),
    #[error("vector {id:?}: {source}")]
    Bits { id: String, source: HammingError },
}

pub type Result<T> = std::result::Result<T, TextvecError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(TextvecError::EmptyCorpus);
        }
        let mut ids = HashSet::new();
        for d in &documents {
            if !ids.insert(d.id.as_str()) {
                return Err(TextvecError::DuplicateId(d.id.clone()));
            }
        }
        Ok(Self { documents })
    }

    /// JSON array of `{id, text, tag?}` objects.
    pub fn from_json(json: &str) -> Result<Self> {
        Self::new(serde_json::from_str(json)?)
    }

    /// Every regular file in `dir` is one document, id = file stem, in
    /// file-name order.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let io = |source| TextvecError::Io { path: dir.to_path_buf(), source };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()
            .map_err(io)?;
        paths.retain(|p| p.is_file());
        paths.sort();
        let documents = paths
            .into_iter()
            .map(|p| {
                let text = std::fs::read_to_string(&p)
                    .map_err(|source| TextvecError::Io { path: p.clone(), source })?;
                let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                Ok(Document { id, text, tag: None })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(documents)
    }

    /// Directory of text files or a JSON file, decided by the path.
    pub fn load(path: &Path) -> Result<Self> {
        if path.is_dir() {
            Self::from_dir(path)
        } else {
            let json = std::fs::read_to_string(path)
                .map_err(|source| TextvecError::Io { path: path.to_path_buf(), source })?;
            Self::from_json(&json)
        }
    }

    /// Nine short abstracts in three topical groups of three.
    pub fn sample() -> Self {
        Self::from_json(SAMPLE_CORPUS).expect("bundled corpus is valid")
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.id.clone()).collect()
    }

    pub fn tags(&self) -> Vec<Option<String>> {
        self.documents.iter().map(|d| d.tag.clone()).collect()
    }
}

/// Lowercased maximal runs of alphabetic characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyParams {
    pub size: usize,
    pub min_df: usize,
    pub max_df: usize,
    pub stoplist: Vec<String>,
}

impl Default for VocabularyParams {
    fn default() -> Self {
        Self {
            size: 9,
            min_df: 2,
            max_df: 4,
            stoplist: vec!["level".to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyEntry {
    pub word: String,
    pub document_frequency: usize,
    pub total_frequency: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub params: VocabularyParams,
    pub entries: Vec<VocabularyEntry>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.word.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("vocabulary serializes");
        s.push('\n');
        s
    }
}

pub fn build_vocabulary(corpus: &Corpus, params: &VocabularyParams) -> Result<Vocabulary> {
    if params.size == 0 {
        return Err(TextvecError::InvalidParams("vocabulary size must be at least 1".into()));
    }
    if params.min_df > params.max_df {
        return Err(TextvecError::InvalidParams(format!(
            "min_df {} exceeds max_df {}",
            params.min_df, params.max_df
        )));
    }
    let stop: HashSet<String> = params.stoplist.iter().map(|w| w.to_lowercase()).collect();

    // BTreeMap keeps iteration order independent of hashing
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for doc in corpus.documents() {
        let tokens = tokenize(&doc.text);
        let distinct: BTreeSet<&String> = tokens.iter().collect();
        for t in &tokens {
            counts.entry(t.clone()).or_default().1 += 1;
        }
        for t in distinct {
            counts.get_mut(t).expect("counted above").0 += 1;
        }
    }

    let mut candidates: Vec<VocabularyEntry> = counts
        .into_iter()
        .filter(|(w, (df, _))| (params.min_df..=params.max_df).contains(df) && !stop.contains(w))
        .map(|(word, (df, tf))| VocabularyEntry {
            word,
            document_frequency: df,
            total_frequency: tf,
        })
        .collect();
    if candidates.len() < params.size {
        return Err(TextvecError::InsufficientCandidates {
            requested: params.size,
            available: candidates.len(),
            min_df: params.min_df,
            max_df: params.max_df,
        });
    }
    candidates.sort_by(|a, b| b.total_frequency.cmp(&a.total_frequency).then_with(|| a.word.cmp(&b.word)));
    candidates.truncate(params.size);
    Ok(Vocabulary { params: params.clone(), entries: candidates })
}

/// A document's presence vector together with its identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledVector {
    pub id: String,
    pub tag: Option<String>,
    pub bits: BinaryVector,
}

pub fn vectorize(corpus: &Corpus, vocabulary: &Vocabulary) -> Vec<LabeledVector> {
    corpus
        .documents()
        .iter()
        .map(|doc| {
            let present: HashSet<String> = tokenize(&doc.text).into_iter().collect();
            let bits: Vec<bool> = vocabulary.entries.iter().map(|e| present.contains(&e.word)).collect();
            LabeledVector {
                id: doc.id.clone(),
                tag: doc.tag.clone(),
                bits: BinaryVector::from_bits(&bits),
            }
        })
        .collect()
}

/// `id,tag,bits` with bit 0 first in `bits`.
pub fn vectors_to_csv(vectors: &[LabeledVector]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "tag", "bits"]).expect("in-memory write");
    for v in vectors {
        w.write_record([v.id.as_str(), v.tag.as_deref().unwrap_or(""), &v.bits.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Reads `id` and `bits` columns; `tag` is optional, empty means untagged.
pub fn vectors_from_csv(data: &str) -> Result<Vec<LabeledVector>> {
    let mut r = csv::Reader::from_reader(data.as_bytes());
    let headers = r.headers()?.clone();
    let col = |name| headers.iter().position(|h| h.trim() == name);
    let id_col = col("id").ok_or(TextvecError::MissingColumn("id"))?;
    let bits_col = col("bits").ok_or(TextvecError::MissingColumn("bits"))?;
    let tag_col = col("tag");

    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let id = record.get(id_col).unwrap_or_default().to_string();
        let bits = record
            .get(bits_col)
            .unwrap_or_default()
            .parse()
            .map_err(|source| TextvecError::Bits { id: id.clone(), source })?;
        let tag = tag_col
            .and_then(|c| record.get(c))
            .filter(|t| !t.is_empty())
            .map(str::to_string);
        out.push(LabeledVector { id, tag, bits });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> Document {
        Document { id: id.into(), text: text.into(), tag: None }
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize("Gene expression, gene-level."), ["gene", "expression", "gene", "level"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Quantum QUANTUM quantum"), ["quantum"; 3]);
        assert_eq!(tokenize("covid19 x2y"), ["covid", "x", "y"]);
    }

    #[test]
    fn corpus_validation() {
        assert!(matches!(Corpus::new(vec![]), Err(TextvecError::EmptyCorpus)));
        let dup = Corpus::new(vec![doc("a", "x"), doc("a", "y")]);
        assert!(matches!(dup, Err(TextvecError::DuplicateId(id)) if id == "a"));
    }

    fn filter_corpus() -> Corpus {
        // "solo" df 1, "common" df 5, "level" df 2 (stoplisted),
        // "alpha" df 2, "beta" df 4
        Corpus::new(vec![
            doc("1", "solo common alpha beta level"),
            doc("2", "common alpha beta level"),
            doc("3", "common beta"),
            doc("4", "common beta"),
            doc("5", "common"),
        ])
        .unwrap()
    }

    #[test]
    fn frequency_filters() {
        let params = VocabularyParams { size: 2, ..Default::default() };
        let v = build_vocabulary(&filter_corpus(), &params).unwrap();
        assert_eq!(v.words(), ["beta", "alpha"]);
        assert_eq!(v.entries[0].document_frequency, 4);
        assert_eq!(v.entries[0].total_frequency, 4);

        let params = VocabularyParams { size: 3, ..Default::default() };
        match build_vocabulary(&filter_corpus(), &params) {
            Err(TextvecError::InsufficientCandidates { requested: 3, available: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }

        let no_stop = VocabularyParams { size: 3, stoplist: vec![], ..Default::default() };
        let v = build_vocabulary(&filter_corpus(), &no_stop).unwrap();
        assert!(v.words().contains(&"level"));
    }

    #[test]
    fn ties_break_lexicographically() {
        let c = Corpus::new(vec![doc("1", "pear apple fig"), doc("2", "fig pear apple")]).unwrap();
        let params = VocabularyParams { size: 3, ..Default::default() };
        assert_eq!(build_vocabulary(&c, &params).unwrap().words(), ["apple", "fig", "pear"]);
    }

    #[test]
    fn invalid_params() {
        let c = filter_corpus();
        let zero = VocabularyParams { size: 0, ..Default::default() };
        assert!(matches!(build_vocabulary(&c, &zero), Err(TextvecError::InvalidParams(_))));
        let inverted = VocabularyParams { min_df: 5, max_df: 2, ..Default::default() };
        assert!(matches!(build_vocabulary(&c, &inverted), Err(TextvecError::InvalidParams(_))));
    }

    #[test]
    fn presence_vectors() {
        let c = Corpus::new(vec![
            doc("a", "x y x y"),
            doc("b", "x y"),
            doc("c", "nothing here"),
        ])
        .unwrap();
        let params = VocabularyParams { size: 2, ..Default::default() };
        let vocab = build_vocabulary(&c, &params).unwrap();
        let v = vectorize(&c, &vocab);
        assert_eq!(v[0].bits, v[1].bits);
        assert_eq!(v[0].bits.to_string(), "11");
        assert_eq!(v[2].bits.to_string(), "00");
    }

    #[test]
    fn sample_corpus_shape() {
        let c = Corpus::sample();
        assert_eq!(c.len(), 9);
        let v = build_vocabulary(&c, &VocabularyParams::default()).unwrap();
        assert_eq!(
            v.words(),
            ["quantum", "cancer", "gene", "qubit", "patients", "expression", "circuit", "clinical", "protein"]
        );
        let bits: Vec<String> = vectorize(&c, &v).iter().map(|v| v.bits.to_string()).collect();
        assert_eq!(
            bits,
            [
                "100000100", "100100100", "100100000", "010010000", "010010010", "010000010",
                "001000001", "001001001", "001001000"
            ]
        );
    }

    #[test]
    fn csv_round_trip() {
        let c = Corpus::sample();
        let v = vectorize(&c, &build_vocabulary(&c, &VocabularyParams::default()).unwrap());
        let csv = vectors_to_csv(&v);
        assert!(csv.starts_with("id,tag,bits\nqml-1,QML,100000100\n"));
        assert_eq!(vectors_from_csv(&csv).unwrap(), v);
        assert!(matches!(vectors_from_csv("id,tag\na,b\n"), Err(TextvecError::MissingColumn("bits"))));
        assert!(matches!(vectors_from_csv("id,bits\na,012\n"), Err(TextvecError::Bits { .. })));
    }
}
