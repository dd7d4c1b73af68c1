//! Characteristic keywords per stress type.
//!
//! Each stress type's review set is one document class. Class-based TF-IDF
//! scores how representative a term is of its class relative to all classes;
//! the top keywords per class form the type's topical profile. Jaccard
//! similarity measures cross-type keyword overlap, and a chi-square test
//! checks keyword-class association on document counts. An optional mode
//! sub-clusters each type's reviews with bag-of-words cosine k-means first.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::scoring::kmeans::cosine_kmeans;
use crate::scoring::StressType;
use crate::util::derive_seed;

#[derive(Debug, Error)]
pub enum TopicsError {
    #[error("no classes given")]
    NoClasses,
    #[error("no documents in any class")]
    NoDocuments,
    #[error("need at least 2 classes, got {got}")]
    TooFewClasses { got: usize },
    #[error("degenerate contingency: zero marginal for term `{term}`")]
    DegenerateContingency { term: String },
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Identifies one document class: a whole stress type, or one of its
/// sub-clusters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassId {
    Type(StressType),
    Cluster(StressType, usize),
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            ClassId::Type(t) => write!(f, "{t}"),
            ClassId::Cluster(t, i) => write!(f, "{t}/{i}"),
        }
    }
}

/// Documents per class, each document a token list.
pub type ClassDocs = Vec<(ClassId, Vec<Vec<String>>)>;

/// Version tag of the shipped stop-word list; recorded in run manifests so
/// keyword outputs stay reproducible across releases.
pub const STOPWORD_LIST_VERSION: &str = "en-1";

/// Fixed English stop-word list applied before counting.
pub const STOPWORDS: [&str; 128] = [
    "a", "about", "above", "after", "again", "all", "also", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "dont", "down", "during", "each", "few",
    "for", "from", "further", "get", "got", "had", "has", "have", "having", "he", "her", "here",
    "hers", "him", "his", "how", "i", "if", "im", "in", "into", "is", "it", "its", "ive",
    "just", "me", "more", "most", "my", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "out", "over", "own", "re", "s", "same", "she",
    "should", "so", "some", "such", "t", "than", "that", "the", "their", "theirs", "them",
    "then", "there", "these", "they", "this", "those", "through", "to", "too", "under", "until",
    "up", "us", "very", "via", "was", "we", "were", "what", "when", "where", "which", "while",
    "who", "whom", "why", "will", "with", "would", "you", "your", "yours",
];

fn is_stopword(term: &str) -> bool {
    STOPWORDS.binary_search(&term).is_ok()
}

/// Per-class keyword scores.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicClass {
    pub id: ClassId,
    pub keyword_scores: BTreeMap<String, f64>,
    pub doc_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub classes: Vec<TopicClass>,
    pub top_k: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct CtfidfOptions {
    /// Dampen the inverse-frequency factor to `ln(1 + p / total_freq)`.
    /// The undamped ratio is the default.
    pub log_idf: bool,
    pub top_k: usize,
}

impl Default for CtfidfOptions {
    fn default() -> Self {
        CtfidfOptions {
            log_idf: false,
            top_k: 3,
        }
    }
}

/// Scores every term of every class.
///
/// For class `l` and term `k`: `(freq of k in l / total tokens of l) *
/// (total document count / total freq of k across classes)`. Stop-words are
/// removed before counting. An empty class keeps an empty keyword table.
pub fn ctfidf(class_docs: &ClassDocs, opts: &CtfidfOptions) -> Result<TopicModel, TopicsError> {
    if class_docs.is_empty() {
        return Err(TopicsError::NoClasses);
    }
    let total_docs: usize = class_docs.iter().map(|(_, docs)| docs.len()).sum();
    if total_docs == 0 {
        return Err(TopicsError::NoDocuments);
    }

    let mut class_counts: Vec<(ClassId, HashMap<&str, u64>, u64, usize)> = Vec::new();
    let mut corpus_freq: HashMap<&str, u64> = HashMap::new();
    for (id, docs) in class_docs {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        let mut total = 0u64;
        for doc in docs {
            for token in doc {
                if is_stopword(token) {
                    continue;
                }
                *counts.entry(token).or_insert(0) += 1;
                *corpus_freq.entry(token).or_insert(0) += 1;
                total += 1;
            }
        }
        class_counts.push((id.clone(), counts, total, docs.len()));
    }

    let p = total_docs as f64;
    let classes = class_counts
        .into_iter()
        .map(|(id, counts, class_total, doc_count)| {
            let keyword_scores = counts
                .into_iter()
                .map(|(term, freq)| {
                    let tf = freq as f64 / class_total as f64;
                    let ratio = p / corpus_freq[term] as f64;
                    let idf = if opts.log_idf { (1.0 + ratio).ln() } else { ratio };
                    (term.to_string(), tf * idf)
                })
                .collect();
            TopicClass {
                id,
                keyword_scores,
                doc_count,
            }
        })
        .collect();
    Ok(TopicModel {
        classes,
        top_k: opts.top_k,
    })
}

/// Top `k` keywords per class, descending by score with lexicographic
/// tie-breaks.
pub fn top_keywords(model: &TopicModel, k: usize) -> Vec<(ClassId, Vec<(String, f64)>)> {
    model
        .classes
        .iter()
        .map(|class| {
            let mut ranked: Vec<(String, f64)> = class
                .keyword_scores
                .iter()
                .map(|(term, score)| (term.clone(), *score))
                .collect();
            ranked.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.0.cmp(&b.0))
            });
            ranked.truncate(k);
            (class.id.clone(), ranked)
        })
        .collect()
}

/// Pairwise Jaccard similarity of top-keyword sets.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapReport {
    pub pairwise: BTreeMap<(ClassId, ClassId), f64>,
    pub mean: f64,
}

/// Jaccard overlap of the `top_n` keyword sets over all unordered class
/// pairs, plus the mean. Requires at least two classes.
pub fn jaccard_overlap(model: &TopicModel, top_n: usize) -> Result<OverlapReport, TopicsError> {
    if model.classes.len() < 2 {
        return Err(TopicsError::TooFewClasses {
            got: model.classes.len(),
        });
    }
    let keyword_sets: Vec<(ClassId, BTreeSet<String>)> = top_keywords(model, top_n)
        .into_iter()
        .map(|(id, terms)| (id, terms.into_iter().map(|(t, _)| t).collect()))
        .collect();

    let mut pairwise = BTreeMap::new();
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..keyword_sets.len() {
        for j in (i + 1)..keyword_sets.len() {
            let (a_id, a) = &keyword_sets[i];
            let (b_id, b) = &keyword_sets[j];
            let intersection = a.intersection(b).count();
            let union = a.union(b).count();
            let jaccard = if union == 0 {
                // Two empty keyword sets are identical.
                1.0
            } else {
                intersection as f64 / union as f64
            };
            pairwise.insert((a_id.clone(), b_id.clone()), jaccard);
            sum += jaccard;
            pairs += 1;
        }
    }
    Ok(OverlapReport {
        pairwise,
        mean: sum / pairs as f64,
    })
}

/// Pearson chi-square (1 degree of freedom) of term presence against class
/// membership, on document counts. Requires all four marginals positive.
/// Returns `(statistic, p_value)`.
pub fn chi_square_association(
    term: &str,
    class: &ClassId,
    class_docs: &ClassDocs,
) -> Result<(f64, f64), TopicsError> {
    if !class_docs.iter().any(|(id, _)| id == class) {
        return Err(TopicsError::UnknownClass(class.to_string()));
    }
    let mut in_class_with = 0u64;
    let mut in_class_without = 0u64;
    let mut out_class_with = 0u64;
    let mut out_class_without = 0u64;
    for (id, docs) in class_docs {
        for doc in docs {
            let has_term = doc.iter().any(|t| t == term);
            match (id == class, has_term) {
                (true, true) => in_class_with += 1,
                (true, false) => in_class_without += 1,
                (false, true) => out_class_with += 1,
                (false, false) => out_class_without += 1,
            }
        }
    }
    let (a, b, c, d) = (
        in_class_with as f64,
        in_class_without as f64,
        out_class_with as f64,
        out_class_without as f64,
    );
    let row1 = a + b;
    let row2 = c + d;
    let col1 = a + c;
    let col2 = b + d;
    if row1 == 0.0 || row2 == 0.0 || col1 == 0.0 || col2 == 0.0 {
        return Err(TopicsError::DegenerateContingency {
            term: term.to_string(),
        });
    }
    let n = row1 + row2;
    let statistic = n * (a * d - b * c).powi(2) / (row1 * row2 * col1 * col2);
    let chi2 = ChiSquared::new(1.0).expect("df = 1 is valid");
    let p_value = chi2.sf(statistic);
    Ok((statistic, p_value))
}

/// Splits each type's documents into `clusters` sub-classes with cosine
/// k-means over bag-of-words TF-IDF vectors. Documents that contain only
/// stop-words keep no vector and fall into the first cluster. The vocabulary
/// per type is capped to the 512 terms with the highest document frequency.
pub fn subcluster_classes(
    type_docs: &[(StressType, Vec<Vec<String>>)],
    clusters: usize,
    seed: u64,
) -> ClassDocs {
    let mut out: ClassDocs = Vec::new();
    for (type_idx, (stress_type, docs)) in type_docs.iter().enumerate() {
        let k = clusters.min(docs.len()).max(1);
        if k <= 1 || docs.len() < 2 {
            out.push((ClassId::Cluster(*stress_type, 0), docs.clone()));
            continue;
        }
        // Document frequencies over non-stopword terms.
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let distinct: BTreeSet<&str> = doc
                .iter()
                .map(String::as_str)
                .filter(|t| !is_stopword(t))
                .collect();
            for term in distinct {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let mut vocab: Vec<(&str, usize)> = df.into_iter().collect();
        vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        vocab.truncate(512);
        let index: HashMap<&str, usize> = vocab
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (*t, i))
            .collect();
        let n_docs = docs.len() as f64;

        let mut vectors = Vec::new();
        let mut vector_docs = Vec::new();
        let mut empty_docs = Vec::new();
        for doc in docs {
            let mut v = vec![0.0f64; index.len()];
            for token in doc {
                if let Some(&i) = index.get(token.as_str()) {
                    v[i] += 1.0;
                }
            }
            for (i, (term, _)) in vocab.iter().enumerate() {
                if v[i] > 0.0 {
                    let term_df = vocab.iter().find(|(t, _)| t == term).unwrap().1 as f64;
                    v[i] *= (1.0 + n_docs / term_df).ln();
                }
            }
            if v.iter().any(|x| *x != 0.0) {
                vectors.push(v);
                vector_docs.push(doc.clone());
            } else {
                empty_docs.push(doc.clone());
            }
        }

        if vectors.len() < k {
            out.push((ClassId::Cluster(*stress_type, 0), docs.clone()));
            continue;
        }
        let fit = cosine_kmeans(
            &vectors,
            k,
            derive_seed(seed, &[type_idx as u64]),
            5,
            50,
            None,
        );
        let mut buckets: Vec<Vec<Vec<String>>> = vec![Vec::new(); k];
        for (doc, &cluster) in vector_docs.into_iter().zip(&fit.assignments) {
            buckets[cluster].push(doc);
        }
        buckets[0].extend(empty_docs);
        for (i, bucket) in buckets.into_iter().enumerate() {
            out.push((ClassId::Cluster(*stress_type, i), bucket));
        }
    }
    out
}

/// One output row of the topics table.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicRow {
    pub class: ClassId,
    pub rank: usize,
    pub term: String,
    pub score: f64,
    pub chi2: Option<f64>,
    pub p_value: Option<f64>,
}

/// Ranks top keywords and attaches the chi-square association of each
/// keyword with its class. Keywords with a degenerate contingency (e.g. a
/// term present in every document) carry empty test columns.
pub fn topic_rows(
    model: &TopicModel,
    class_docs: &ClassDocs,
    k: usize,
) -> Vec<TopicRow> {
    let mut rows = Vec::new();
    for (class, keywords) in top_keywords(model, k) {
        for (rank, (term, score)) in keywords.into_iter().enumerate() {
            let test = chi_square_association(&term, &class, class_docs).ok();
            rows.push(TopicRow {
                class: class.clone(),
                rank: rank + 1,
                term,
                score,
                chi2: test.map(|(s, _)| s),
                p_value: test.map(|(_, p)| p),
            });
        }
    }
    rows
}

pub fn write_topics_csv(rows: &[TopicRow], path: &Path) -> Result<(), TopicsError> {
    let file = File::create(path).map_err(|e| TopicsError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    let mut write = |line: String| {
        writeln!(out, "{line}").map_err(|e| TopicsError::Io {
            path: path.display().to_string(),
            source: e,
        })
    };
    write("class,rank,term,score,chi2,p_value".to_string())?;
    for row in rows {
        write(format!(
            "{},{},{},{},{},{}",
            row.class,
            row.rank,
            row.term,
            row.score,
            row.chi2.map(|v| v.to_string()).unwrap_or_default(),
            row.p_value.map(|v| v.to_string()).unwrap_or_default(),
        ))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tokens(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn class(t: StressType) -> ClassId {
        ClassId::Type(t)
    }

    #[test]
    fn stopword_list_is_sorted_for_binary_search() {
        let mut sorted = STOPWORDS.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, STOPWORDS.to_vec());
        assert!(is_stopword("the"));
        assert!(!is_stopword("overtime"));
    }

    #[test]
    fn ctfidf_worked_example() {
        // Class A: 50 tokens, "kappa" appears 5 times. Corpus-wide "kappa"
        // frequency 10, total documents 100.
        let mut a_docs = vec![tokens(&["kappa"; 5])];
        for _ in 0..9 {
            a_docs.push(tokens(&["alpha"; 5]));
        }
        let mut b_docs = vec![tokens(&["kappa"; 5])];
        for _ in 0..89 {
            b_docs.push(tokens(&["beta"]));
        }
        let class_docs: ClassDocs = vec![
            (class(StressType::LowStress), a_docs),
            (class(StressType::Passive), b_docs),
        ];
        let model = ctfidf(&class_docs, &CtfidfOptions::default()).unwrap();
        let score = model.classes[0].keyword_scores["kappa"];
        assert!((score - 1.0).abs() < 1e-12, "score = {score}");
    }

    #[test]
    fn ctfidf_single_class_repeated_token() {
        let class_docs: ClassDocs = vec![(
            class(StressType::PositiveStress),
            vec![tokens(&["stress", "stress"])],
        )];
        let model = ctfidf(&class_docs, &CtfidfOptions::default()).unwrap();
        assert_eq!(model.classes[0].keyword_scores["stress"], 0.5);
    }

    #[test]
    fn ctfidf_exclusive_term_gets_maximal_idf() {
        // "solo" appears only in class A: idf factor = p / k_l.
        let class_docs: ClassDocs = vec![
            (class(StressType::LowStress), vec![tokens(&["solo", "solo", "shared"])]),
            (class(StressType::Passive), vec![tokens(&["shared", "shared"])]),
        ];
        let model = ctfidf(&class_docs, &CtfidfOptions::default()).unwrap();
        let p = 2.0;
        let expected = (2.0 / 3.0) * (p / 2.0);
        assert!((model.classes[0].keyword_scores["solo"] - expected).abs() < 1e-12);
    }

    #[test]
    fn ctfidf_empty_class_and_errors() {
        let class_docs: ClassDocs = vec![
            (class(StressType::LowStress), vec![tokens(&["word"])]),
            (class(StressType::Passive), vec![]),
        ];
        let model = ctfidf(&class_docs, &CtfidfOptions::default()).unwrap();
        assert!(model.classes[1].keyword_scores.is_empty());

        assert!(matches!(
            ctfidf(&Vec::new(), &CtfidfOptions::default()),
            Err(TopicsError::NoClasses)
        ));
        let empty: ClassDocs = vec![(class(StressType::LowStress), vec![])];
        assert!(matches!(
            ctfidf(&empty, &CtfidfOptions::default()),
            Err(TopicsError::NoDocuments)
        ));
    }

    #[test]
    fn ctfidf_scores_positive_iff_term_occurs() {
        let class_docs: ClassDocs = vec![
            (class(StressType::LowStress), vec![tokens(&["apple", "pear"])]),
            (class(StressType::Passive), vec![tokens(&["pear", "plum"])]),
        ];
        let model = ctfidf(&class_docs, &CtfidfOptions::default()).unwrap();
        assert!(model.classes[0].keyword_scores.contains_key("apple"));
        assert!(!model.classes[0].keyword_scores.contains_key("plum"));
        for class in &model.classes {
            for score in class.keyword_scores.values() {
                assert!(*score > 0.0);
            }
        }
    }

    #[test]
    fn ctfidf_invariant_under_uniform_duplication() {
        let base: ClassDocs = vec![
            (class(StressType::LowStress), vec![tokens(&["a", "b"]), tokens(&["b"])]),
            (class(StressType::Passive), vec![tokens(&["c", "a"])]),
        ];
        let tripled: ClassDocs = base
            .iter()
            .map(|(id, docs)| {
                let mut repeated = Vec::new();
                for _ in 0..3 {
                    repeated.extend(docs.clone());
                }
                (id.clone(), repeated)
            })
            .collect();
        let m1 = ctfidf(&base, &CtfidfOptions::default()).unwrap();
        let m2 = ctfidf(&tripled, &CtfidfOptions::default()).unwrap();
        for (c1, c2) in m1.classes.iter().zip(&m2.classes) {
            for (term, score) in &c1.keyword_scores {
                assert!((score - c2.keyword_scores[term]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_idf_dampens_scores() {
        let class_docs: ClassDocs = vec![
            (class(StressType::LowStress), vec![tokens(&["rare"])]),
            (class(StressType::Passive), vec![tokens(&["common"]); 9]),
        ];
        let plain = ctfidf(&class_docs, &CtfidfOptions { log_idf: false, top_k: 3 }).unwrap();
        let damped = ctfidf(&class_docs, &CtfidfOptions { log_idf: true, top_k: 3 }).unwrap();
        assert!(
            damped.classes[0].keyword_scores["rare"] < plain.classes[0].keyword_scores["rare"]
        );
    }

    #[test]
    fn top_keywords_orders_and_breaks_ties() {
        let mut scores = BTreeMap::new();
        scores.insert("beta".to_string(), 1.0);
        scores.insert("alpha".to_string(), 0.5);
        scores.insert("gamma".to_string(), 0.5);
        let model = TopicModel {
            classes: vec![TopicClass {
                id: class(StressType::LowStress),
                keyword_scores: scores,
                doc_count: 1,
            }],
            top_k: 3,
        };
        let ranked = &top_keywords(&model, 3)[0].1;
        assert_eq!(ranked[0].0, "beta");
        assert_eq!(ranked[1].0, "alpha");
        assert_eq!(ranked[2].0, "gamma");
        // k larger than the vocabulary returns everything.
        assert_eq!(top_keywords(&model, 10)[0].1.len(), 3);
    }

    #[test]
    fn jaccard_trivial_and_hand_cases() {
        let mk = |terms: &[&str], t: StressType| TopicClass {
            id: class(t),
            keyword_scores: terms
                .iter()
                .enumerate()
                .map(|(i, term)| (term.to_string(), 1.0 - i as f64 * 0.1))
                .collect(),
            doc_count: 1,
        };
        let model = TopicModel {
            classes: vec![
                mk(&["a", "b", "c"], StressType::LowStress),
                mk(&["b", "c", "d"], StressType::Passive),
            ],
            top_k: 3,
        };
        let report = jaccard_overlap(&model, 3).unwrap();
        assert_eq!(report.mean, 0.5);

        let identical = TopicModel {
            classes: vec![
                mk(&["a", "b"], StressType::LowStress),
                mk(&["a", "b"], StressType::Passive),
            ],
            top_k: 2,
        };
        assert_eq!(jaccard_overlap(&identical, 2).unwrap().mean, 1.0);

        let disjoint = TopicModel {
            classes: vec![
                mk(&["a", "b"], StressType::LowStress),
                mk(&["c", "d"], StressType::Passive),
            ],
            top_k: 2,
        };
        assert_eq!(jaccard_overlap(&disjoint, 2).unwrap().mean, 0.0);

        let single = TopicModel {
            classes: vec![mk(&["a"], StressType::LowStress)],
            top_k: 1,
        };
        assert!(jaccard_overlap(&single, 1).is_err());
    }

    #[test]
    fn chi_square_hand_example() {
        // Term in all 10 docs of class A and none of the other 10.
        let class_docs: ClassDocs = vec![
            (class(StressType::LowStress), vec![tokens(&["marker", "x"]); 10]),
            (class(StressType::Passive), vec![tokens(&["y"]); 10]),
        ];
        let (stat, p) =
            chi_square_association("marker", &class(StressType::LowStress), &class_docs).unwrap();
        assert!((stat - 20.0).abs() < 1e-9, "stat = {stat}");
        assert!(p < 0.001, "p = {p}");
    }

    #[test]
    fn chi_square_independence_and_errors() {
        let class_docs: ClassDocs = vec![
            (
                class(StressType::LowStress),
                vec![tokens(&["even", "x"]), tokens(&["x"])],
            ),
            (
                class(StressType::Passive),
                vec![tokens(&["even", "y"]), tokens(&["y"])],
            ),
        ];
        let (stat, p) =
            chi_square_association("even", &class(StressType::LowStress), &class_docs).unwrap();
        assert!(stat.abs() < 1e-9);
        assert!((p - 1.0).abs() < 1e-9);

        assert!(matches!(
            chi_square_association("absent", &class(StressType::LowStress), &class_docs),
            Err(TopicsError::DegenerateContingency { .. })
        ));
        assert!(matches!(
            chi_square_association("even", &class(StressType::NegativeStress), &class_docs),
            Err(TopicsError::UnknownClass(_))
        ));
    }

    #[test]
    fn chi_square_grows_with_concentration() {
        // 10 docs per class; term in 10 docs total; move occurrences from an
        // even split toward class A.
        let mut last = -1.0;
        for a in 5..=10u32 {
            let mut a_docs = Vec::new();
            for i in 0..10 {
                a_docs.push(if i < a { tokens(&["term"]) } else { tokens(&["pad"]) });
            }
            let mut b_docs = Vec::new();
            for i in 0..10 {
                b_docs.push(if i < 10 - a { tokens(&["term"]) } else { tokens(&["pad"]) });
            }
            let class_docs: ClassDocs = vec![
                (class(StressType::LowStress), a_docs),
                (class(StressType::Passive), b_docs),
            ];
            let (stat, _) =
                chi_square_association("term", &class(StressType::LowStress), &class_docs)
                    .unwrap();
            assert!(stat >= last, "chi2 not monotone: {stat} < {last}");
            last = stat;
        }
        assert!((last - 20.0).abs() < 1e-9);
    }

    #[test]
    fn subclustering_separates_planted_vocabularies() {
        // One type whose docs use two disjoint vocabularies.
        let mut docs = Vec::new();
        for i in 0..20 {
            if i % 2 == 0 {
                docs.push(tokens(&["kernel", "compiler", "debugger"]));
            } else {
                docs.push(tokens(&["garden", "flowers", "soil"]));
            }
        }
        let classes = subcluster_classes(&[(StressType::PositiveStress, docs)], 2, 11);
        assert_eq!(classes.len(), 2);
        let model = ctfidf(&classes, &CtfidfOptions::default()).unwrap();
        let ranked = top_keywords(&model, 3);
        let set0: BTreeSet<&str> = ranked[0].1.iter().map(|(t, _)| t.as_str()).collect();
        let set1: BTreeSet<&str> = ranked[1].1.iter().map(|(t, _)| t.as_str()).collect();
        assert!(set0.is_disjoint(&set1));
    }

    #[test]
    fn topic_rows_attach_chi_square() {
        let class_docs: ClassDocs = vec![
            (class(StressType::LowStress), vec![tokens(&["flex", "pay"]); 4]),
            (class(StressType::Passive), vec![tokens(&["vacation", "pay"]); 4]),
        ];
        let model = ctfidf(&class_docs, &CtfidfOptions::default()).unwrap();
        let rows = topic_rows(&model, &class_docs, 2);
        let flex = rows.iter().find(|r| r.term == "flex").unwrap();
        assert!(flex.chi2.is_some());
        // "pay" in every document: degenerate, no test columns.
        let pay = rows.iter().find(|r| r.term == "pay").unwrap();
        assert!(pay.chi2.is_none());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("topics.csv");
        write_topics_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("class,rank,term,score,chi2,p_value\n"));
    }
}
