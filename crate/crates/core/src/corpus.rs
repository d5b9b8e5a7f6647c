//! Thread datasets: JSON Lines loading, deterministic splits, summary
//! statistics and the synthetic bilingual generator used for desk-scale runs.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: field `{field}`: {reason}")]
    Malformed { line: usize, field: String, reason: String },
    #[error("duplicate thread id(s): {}", .0.join(", "))]
    DuplicateId(Vec<String>),
    #[error("need at least 10 threads to split, got {0}")]
    TooFewThreads(usize),
    #[error("dataset is empty")]
    Empty,
    #[error("invalid synthetic config: {0}")]
    InvalidSynthConfig(String),
    #[error("invalid fold request: {0}")]
    InvalidFolds(String),
}

/// Binary rumour label. The discriminant doubles as the classifier output
/// index, so `NonRumour` is class 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "non-rumour")]
    NonRumour = 0,
    #[serde(rename = "rumour")]
    Rumour = 1,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::NonRumour, Label::Rumour];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Label {
        if i == 1 {
            Label::Rumour
        } else {
            Label::NonRumour
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::NonRumour => "non-rumour",
            Label::Rumour => "rumour",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s.to_ascii_lowercase().as_str() {
            "rumour" => Some(Label::Rumour),
            "non-rumour" => Some(Label::NonRumour),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reaction {
    pub text: String,
    pub timestamp: i64,
}

/// One source post with its reactions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    pub id: String,
    pub source_text: String,
    /// Sorted by `(timestamp, text)`.
    pub reactions: Vec<Reaction>,
    pub label: Option<Label>,
    pub language: String,
    /// Event / topic group, used for group-disjoint folds when present.
    pub group: Option<String>,
}

impl Thread {
    pub fn new(
        id: impl Into<String>,
        source_text: impl Into<String>,
        mut reactions: Vec<Reaction>,
        label: Option<Label>,
        language: impl Into<String>,
    ) -> Thread {
        sort_reactions(&mut reactions);
        Thread {
            id: id.into(),
            source_text: source_text.into(),
            reactions,
            label,
            language: language.into(),
            group: None,
        }
    }

    /// Serialises to the on-disk record shape.
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("id".into(), json!(self.id));
        obj.insert("source_text".into(), json!(self.source_text));
        let reactions: Vec<Value> = self
            .reactions
            .iter()
            .map(|r| json!({"text": r.text, "timestamp": r.timestamp}))
            .collect();
        obj.insert("reactions".into(), Value::Array(reactions));
        if let Some(label) = self.label {
            obj.insert("label".into(), json!(label.as_str()));
        }
        obj.insert("language".into(), json!(self.language));
        if let Some(group) = &self.group {
            obj.insert("group".into(), json!(group));
        }
        Value::Object(obj)
    }

    /// All text of the thread, source first, reactions in order.
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.source_text.as_str()).chain(self.reactions.iter().map(|r| r.text.as_str()))
    }
}

fn sort_reactions(reactions: &mut [Reaction]) {
    reactions.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.text.cmp(&b.text)));
}

const KNOWN_FIELDS: [&str; 6] = ["id", "source_text", "reactions", "label", "language", "group"];

fn malformed(line: usize, field: &str, reason: impl Into<String>) -> CorpusError {
    CorpusError::Malformed {
        line,
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn required_str(obj: &Map<String, Value>, line: usize, field: &str) -> Result<String, CorpusError> {
    match obj.get(field) {
        None => Err(malformed(line, field, "missing")),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(malformed(line, field, "expected a string")),
    }
}

/// Parses one JSON Lines record; `line` is 1-based and used in errors.
pub fn parse_thread(text: &str, line: usize) -> Result<Thread, CorpusError> {
    let value: Value = serde_json::from_str(text).map_err(|e| malformed(line, "<record>", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed(line, "<record>", "expected a JSON object"))?;
    if let Some(unknown) = obj.keys().find(|k| !KNOWN_FIELDS.contains(&k.as_str())) {
        return Err(malformed(line, unknown, "unknown field"));
    }

    let id = required_str(obj, line, "id")?;
    if id.is_empty() {
        return Err(malformed(line, "id", "must be nonempty"));
    }
    let source_text = required_str(obj, line, "source_text")?;
    if source_text.trim().is_empty() {
        return Err(malformed(line, "source_text", "must be nonempty"));
    }
    let language = required_str(obj, line, "language")?;

    let raw_reactions = match obj.get("reactions") {
        None => return Err(malformed(line, "reactions", "missing")),
        Some(Value::Array(items)) => items,
        Some(_) => return Err(malformed(line, "reactions", "expected an array")),
    };
    let mut reactions = Vec::with_capacity(raw_reactions.len());
    for (i, item) in raw_reactions.iter().enumerate() {
        let field = |name: &str| format!("reactions[{i}].{name}");
        let r = item
            .as_object()
            .ok_or_else(|| malformed(line, &format!("reactions[{i}]"), "expected an object"))?;
        let text = match r.get("text") {
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(malformed(line, &field("text"), "expected a string")),
            None => return Err(malformed(line, &field("text"), "missing")),
        };
        let timestamp = match r.get("timestamp") {
            Some(v) => v
                .as_i64()
                .ok_or_else(|| malformed(line, &field("timestamp"), "expected an integer"))?,
            None => return Err(malformed(line, &field("timestamp"), "missing")),
        };
        reactions.push(Reaction { text, timestamp });
    }

    let label = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => {
            Some(Label::parse(s).ok_or_else(|| malformed(line, "label", format!("unknown label {s:?}")))?)
        }
        Some(_) => return Err(malformed(line, "label", "expected a string")),
    };
    let group = match obj.get("group") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(malformed(line, "group", "expected a string")),
    };

    let mut thread = Thread::new(id, source_text, reactions, label, language);
    thread.group = group;
    Ok(thread)
}

/// Loads and validates a JSON Lines thread file. Blank lines are skipped.
pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<Thread>, CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::open(path).map_err(io_err)?;
    let mut threads = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        threads.push(parse_thread(&line, i + 1)?);
    }
    check_unique_ids(&threads)?;
    Ok(threads)
}

pub fn check_unique_ids(threads: &[Thread]) -> Result<(), CorpusError> {
    let mut seen = HashSet::new();
    let mut dups: Vec<String> = threads
        .iter()
        .filter(|t| !seen.insert(t.id.as_str()))
        .map(|t| t.id.clone())
        .collect();
    if dups.is_empty() {
        Ok(())
    } else {
        dups.sort();
        dups.dedup();
        Err(CorpusError::DuplicateId(dups))
    }
}

pub fn write_jsonl(path: impl AsRef<Path>, threads: &[Thread]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = BufWriter::new(fs::File::create(path).map_err(io_err)?);
    for t in threads {
        writeln!(out, "{}", t.to_json()).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<Thread>,
    pub validation: Vec<Thread>,
    pub test: Vec<Thread>,
    pub seed: u64,
}

/// `round(x / d)` with halves rounded up, in integer arithmetic.
fn div_round_half_up(x: usize, d: usize) -> usize {
    (2 * x + d) / (2 * d)
}

/// Partition sizes `(train, validation, test)` for `n` threads: 20% test
/// (half-up rounding), remainder split 4:1 train:validation.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let test = div_round_half_up(n, 5);
    let rest = n - test;
    let validation = div_round_half_up(rest, 5);
    (rest - validation, validation, test)
}

/// Seeded shuffle-and-cut split. Input order does not matter: threads are
/// ordered by id before shuffling.
pub fn split_dataset(threads: &[Thread], seed: u64) -> Result<DatasetSplit, CorpusError> {
    if threads.len() < 10 {
        return Err(CorpusError::TooFewThreads(threads.len()));
    }
    let mut shuffled: Vec<Thread> = threads.to_vec();
    shuffled.sort_by(|a, b| a.id.cmp(&b.id));
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let (n_train, n_val, _) = split_sizes(shuffled.len());
    let test = shuffled.split_off(n_train + n_val);
    let validation = shuffled.split_off(n_train);
    Ok(DatasetSplit {
        train: shuffled,
        validation,
        test,
        seed,
    })
}

/// Partitions threads into `k` folds. With a `group` on every thread the
/// folds are group-disjoint (groups assigned largest-first to the smallest
/// fold); otherwise folds are stratified by label.
pub fn kfold(threads: &[Thread], k: usize, seed: u64) -> Result<Vec<Vec<Thread>>, CorpusError> {
    if k < 2 || k > threads.len() {
        return Err(CorpusError::InvalidFolds(format!(
            "k={k} with {} threads",
            threads.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds: Vec<Vec<Thread>> = vec![Vec::new(); k];

    if threads.iter().all(|t| t.group.is_some()) {
        let mut groups: BTreeMap<&str, Vec<&Thread>> = BTreeMap::new();
        for t in threads {
            groups.entry(t.group.as_deref().unwrap()).or_default().push(t);
        }
        if groups.len() < k {
            return Err(CorpusError::InvalidFolds(format!(
                "{} groups cannot fill {k} group-disjoint folds",
                groups.len()
            )));
        }
        let mut groups: Vec<Vec<&Thread>> = groups.into_values().collect();
        groups.shuffle(&mut rng);
        // stable sort keeps the shuffled order among equal sizes
        groups.sort_by_key(|g| std::cmp::Reverse(g.len()));
        for g in groups {
            let target = (0..k).min_by_key(|&i| (folds[i].len(), i)).unwrap();
            folds[target].extend(g.into_iter().cloned());
        }
    } else {
        let mut by_label: BTreeMap<Option<Label>, Vec<&Thread>> = BTreeMap::new();
        for t in threads {
            by_label.entry(t.label).or_default().push(t);
        }
        let mut next = 0;
        for (_, mut members) in by_label {
            members.sort_by(|a, b| a.id.cmp(&b.id));
            members.shuffle(&mut rng);
            for t in members {
                folds[next % k].push(t.clone());
                next += 1;
            }
        }
    }
    Ok(folds)
}

/// Uses fold `index` as test and splits the remaining folds 4:1 into
/// train/validation.
pub fn fold_split(folds: &[Vec<Thread>], index: usize, seed: u64) -> Result<DatasetSplit, CorpusError> {
    if index >= folds.len() {
        return Err(CorpusError::InvalidFolds(format!("fold {index} of {}", folds.len())));
    }
    let test = folds[index].clone();
    let mut rest: Vec<Thread> = folds
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != index)
        .flat_map(|(_, f)| f.iter().cloned())
        .collect();
    rest.sort_by(|a, b| a.id.cmp(&b.id));
    rest.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = div_round_half_up(rest.len(), 5);
    let validation = rest.split_off(rest.len() - n_val);
    Ok(DatasetSplit {
        train: rest,
        validation,
        test,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub threads: usize,
    pub rumours: usize,
    pub non_rumours: usize,
    pub unlabeled: usize,
    pub total_reactions: usize,
    pub avg_reactions: f64,
    pub max_reactions: usize,
    pub min_reactions: usize,
}

impl fmt::Display for StatsTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "#initial posts        {}", self.threads)?;
        writeln!(f, "#all posts            {}", self.threads + self.total_reactions)?;
        writeln!(f, "#rumours              {}", self.rumours)?;
        writeln!(f, "#non-rumours          {}", self.non_rumours)?;
        if self.unlabeled > 0 {
            writeln!(f, "#unlabeled            {}", self.unlabeled)?;
        }
        writeln!(f, "Avg. # of reactions   {:.0}", self.avg_reactions)?;
        writeln!(f, "Max. # of reactions   {}", self.max_reactions)?;
        write!(f, "Min. # of reactions   {}", self.min_reactions)
    }
}

pub fn dataset_stats(threads: &[Thread]) -> Result<StatsTable, CorpusError> {
    if threads.is_empty() {
        return Err(CorpusError::Empty);
    }
    let count = |l: Option<Label>| threads.iter().filter(|t| t.label == l).count();
    let sizes = threads.iter().map(|t| t.reactions.len());
    let total: usize = sizes.clone().sum();
    Ok(StatsTable {
        threads: threads.len(),
        rumours: count(Some(Label::Rumour)),
        non_rumours: count(Some(Label::NonRumour)),
        unlabeled: count(None),
        total_reactions: total,
        avg_reactions: total as f64 / threads.len() as f64,
        max_reactions: sizes.clone().max().unwrap_or(0),
        min_reactions: sizes.min().unwrap_or(0),
    })
}

/// Parameters of the synthetic bilingual benchmark.
///
/// Both languages realise the same latent inventory of
/// `vocab_size_per_language` concepts. A `lexical_overlap` share of the
/// concepts is spelled identically in both languages; every other concept has
/// a language-specific spelling drawn from a disjoint alphabet. A fixed set
/// of concepts acts as rumour cues, another as non-rumour cues, and the rest
/// are label-neutral.
///
/// Each word of a thread is a cue with probability `cue_rate`; a cue agrees
/// with the thread label with probability `(1 + label_signal_strength) / 2`.
/// Non-cue words are drawn uniformly from the neutral concepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_per_language: usize,
    pub vocab_size_per_language: usize,
    pub lexical_overlap: f64,
    pub label_signal_strength: f64,
    pub reaction_count_range: (usize, usize),
    pub seed: u64,
    pub cue_rate: f64,
    /// Share of concepts acting as cues for each class.
    pub cue_fraction: f64,
    pub post_length_range: (usize, usize),
    pub reaction_length_range: (usize, usize),
    pub source_language: String,
    pub target_language: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_per_language: 2000,
            vocab_size_per_language: 200,
            lexical_overlap: 0.3,
            label_signal_strength: 0.85,
            reaction_count_range: (2, 6),
            seed: 7,
            cue_rate: 0.25,
            cue_fraction: 0.2,
            post_length_range: (6, 12),
            reaction_length_range: (2, 6),
            source_language: "synthA".into(),
            target_language: "synthB".into(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: String| Err(CorpusError::InvalidSynthConfig(m));
        if !(0.0..=1.0).contains(&self.lexical_overlap) {
            return bad(format!("lexical_overlap {} outside [0,1]", self.lexical_overlap));
        }
        if !(self.label_signal_strength > 0.0 && self.label_signal_strength <= 1.0) {
            return bad(format!(
                "label_signal_strength {} outside (0,1]",
                self.label_signal_strength
            ));
        }
        if !(self.cue_rate > 0.0 && self.cue_rate <= 1.0) {
            return bad(format!("cue_rate {} outside (0,1]", self.cue_rate));
        }
        if !(self.cue_fraction > 0.0 && self.cue_fraction < 0.5) {
            return bad(format!("cue_fraction {} outside (0,0.5)", self.cue_fraction));
        }
        if self.n_per_language < 2 {
            return bad("n_per_language must be at least 2".into());
        }
        let n_cues = self.cue_concepts();
        if n_cues == 0 || self.vocab_size_per_language < 2 * n_cues + 1 {
            return bad(format!(
                "vocab_size_per_language {} too small for cue_fraction {}",
                self.vocab_size_per_language, self.cue_fraction
            ));
        }
        for (name, (lo, hi)) in [
            ("reaction_count_range", self.reaction_count_range),
            ("post_length_range", self.post_length_range),
            ("reaction_length_range", self.reaction_length_range),
        ] {
            if lo > hi {
                return bad(format!("{name} ({lo},{hi}) is empty"));
            }
        }
        if self.post_length_range.0 == 0 || self.reaction_length_range.0 == 0 {
            return bad("posts and reactions need at least one word".into());
        }
        if self.source_language == self.target_language {
            return bad("source and target language tags must differ".into());
        }
        Ok(())
    }

    /// Number of cue concepts per class.
    pub fn cue_concepts(&self) -> usize {
        (self.vocab_size_per_language as f64 * self.cue_fraction).round() as usize
    }

    pub fn shared_concepts(&self) -> usize {
        (self.lexical_overlap * self.vocab_size_per_language as f64).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConceptRole {
    Cue(Label),
    Neutral,
}

/// The generated pair of corpora together with their surface vocabularies.
#[derive(Debug, Clone)]
pub struct BilingualCorpus {
    pub source: Vec<Thread>,
    pub target: Vec<Thread>,
    pub source_vocab: Vec<String>,
    pub target_vocab: Vec<String>,
}

impl BilingualCorpus {
    pub fn shared_words(&self) -> usize {
        let src: HashSet<&String> = self.source_vocab.iter().collect();
        self.target_vocab.iter().filter(|w| src.contains(w)).count()
    }
}

const SOURCE_ALPHABET: &str = "abcdefghijklmnopqrstuvwxyz";
const SHARED_ALPHABET: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
// 40 CJK ideographs; target words are 2-3 of them
const TARGET_ALPHABET: &str =
    "的一是不了人我在有他这中大来上国个到说们为子和你地出道也时年得就那要下以生会自着去之过家学";

fn fresh_word(rng: &mut ChaCha8Rng, alphabet: &[char], len: (usize, usize), taken: &mut HashSet<String>) -> String {
    loop {
        let n = rng.gen_range(len.0..=len.1);
        let w: String = (0..n).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
        if taken.insert(w.clone()) {
            return w;
        }
    }
}

/// Generates the source/target corpora described by `cfg`.
pub fn synth_bilingual(cfg: &SynthConfig) -> Result<BilingualCorpus, CorpusError> {
    cfg.validate()?;
    let k = cfg.vocab_size_per_language;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut rng);
    let n_cues = cfg.cue_concepts();
    let mut roles = vec![ConceptRole::Neutral; k];
    for &c in &order[..n_cues] {
        roles[c] = ConceptRole::Cue(Label::Rumour);
    }
    for &c in &order[n_cues..2 * n_cues] {
        roles[c] = ConceptRole::Cue(Label::NonRumour);
    }

    order.shuffle(&mut rng);
    let mut shared = vec![false; k];
    for &c in &order[..cfg.shared_concepts()] {
        shared[c] = true;
    }

    let src_chars: Vec<char> = SOURCE_ALPHABET.chars().collect();
    let shared_chars: Vec<char> = SHARED_ALPHABET.chars().collect();
    let tgt_chars: Vec<char> = TARGET_ALPHABET.chars().collect();
    let mut taken = HashSet::new();
    let mut source_vocab = Vec::with_capacity(k);
    let mut target_vocab = Vec::with_capacity(k);
    for &is_shared in &shared {
        if is_shared {
            let w = fresh_word(&mut rng, &shared_chars, (3, 5), &mut taken);
            source_vocab.push(w.clone());
            target_vocab.push(w);
        } else {
            source_vocab.push(fresh_word(&mut rng, &src_chars, (3, 6), &mut taken));
            target_vocab.push(fresh_word(&mut rng, &tgt_chars, (2, 3), &mut taken));
        }
    }

    let pools = ConceptPools::new(&roles);
    let source = generate_language(
        cfg,
        &pools,
        &source_vocab,
        &cfg.source_language,
        cfg.seed ^ 0x5eed_a11c_e000_0001,
    );
    let target = generate_language(
        cfg,
        &pools,
        &target_vocab,
        &cfg.target_language,
        cfg.seed ^ 0x5eed_a11c_e000_0002,
    );
    Ok(BilingualCorpus {
        source,
        target,
        source_vocab,
        target_vocab,
    })
}

struct ConceptPools {
    rumour: Vec<usize>,
    non_rumour: Vec<usize>,
    neutral: Vec<usize>,
}

impl ConceptPools {
    fn new(roles: &[ConceptRole]) -> Self {
        let pick = |r: ConceptRole| -> Vec<usize> {
            roles
                .iter()
                .enumerate()
                .filter(|(_, &x)| x == r)
                .map(|(i, _)| i)
                .collect()
        };
        ConceptPools {
            rumour: pick(ConceptRole::Cue(Label::Rumour)),
            non_rumour: pick(ConceptRole::Cue(Label::NonRumour)),
            neutral: pick(ConceptRole::Neutral),
        }
    }

    fn cues(&self, label: Label) -> &[usize] {
        match label {
            Label::Rumour => &self.rumour,
            Label::NonRumour => &self.non_rumour,
        }
    }
}

fn other(label: Label) -> Label {
    match label {
        Label::Rumour => Label::NonRumour,
        Label::NonRumour => Label::Rumour,
    }
}

fn sample_text(
    rng: &mut ChaCha8Rng,
    cfg: &SynthConfig,
    pools: &ConceptPools,
    vocab: &[String],
    label: Label,
    len: (usize, usize),
) -> String {
    let agree = (1.0 + cfg.label_signal_strength) / 2.0;
    let n = rng.gen_range(len.0..=len.1);
    let mut words = Vec::with_capacity(n);
    for _ in 0..n {
        let pool = if rng.gen::<f64>() < cfg.cue_rate {
            let class = if rng.gen::<f64>() < agree { label } else { other(label) };
            pools.cues(class)
        } else {
            &pools.neutral
        };
        words.push(vocab[pool[rng.gen_range(0..pool.len())]].as_str());
    }
    words.join(" ")
}

fn generate_language(
    cfg: &SynthConfig,
    pools: &ConceptPools,
    vocab: &[String],
    language: &str,
    seed: u64,
) -> Vec<Thread> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.n_per_language;
    let mut labels: Vec<Label> = (0..n)
        .map(|i| if i % 2 == 0 { Label::Rumour } else { Label::NonRumour })
        .collect();
    labels.shuffle(&mut rng);

    labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let source_text = sample_text(&mut rng, cfg, pools, vocab, label, cfg.post_length_range);
            let n_reactions = rng.gen_range(cfg.reaction_count_range.0..=cfg.reaction_count_range.1);
            let mut ts: i64 = 1_600_000_000 + rng.gen_range(0..86_400);
            let reactions = (0..n_reactions)
                .map(|_| {
                    ts += rng.gen_range(1..3_600);
                    Reaction {
                        text: sample_text(&mut rng, cfg, pools, vocab, label, cfg.reaction_length_range),
                        timestamp: ts,
                    }
                })
                .collect();
            Thread::new(
                format!("{language}-{i:05}"),
                source_text,
                reactions,
                Some(label),
                language,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    fn threads(n: usize) -> Vec<Thread> {
        (0..n)
            .map(|i| {
                let label = if i % 2 == 0 { Label::Rumour } else { Label::NonRumour };
                Thread::new(format!("t{i:04}"), "x", vec![], Some(label), "en")
            })
            .collect()
    }

    #[test]
    fn loads_minimal_record() {
        let f = write_lines(&[r#"{"id":"t1","source_text":"x","reactions":[],"label":"Rumour","language":"en"}"#]);
        let ts = load_jsonl(f.path()).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].reactions.len(), 0);
        assert_eq!(ts[0].label, Some(Label::Rumour));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let rec = r#"{"id":"t1","source_text":"x","reactions":[],"language":"en"}"#;
        let f = write_lines(&[rec, rec]);
        match load_jsonl(f.path()) {
            Err(CorpusError::DuplicateId(ids)) => assert_eq!(ids, vec!["t1".to_string()]),
            other => panic!("expected duplicate id error, got {other:?}"),
        }
    }

    #[test]
    fn reactions_sorted_on_load() {
        let f = write_lines(&[
            r#"{"id":"t1","source_text":"x","reactions":[{"text":"c","timestamp":30},{"text":"a","timestamp":10},{"text":"b","timestamp":20}],"language":"en"}"#,
        ]);
        let ts = load_jsonl(f.path()).unwrap();
        let stamps: Vec<i64> = ts[0].reactions.iter().map(|r| r.timestamp).collect();
        assert_eq!(stamps, vec![10, 20, 30]);
    }

    #[test]
    fn equal_timestamps_ordered_by_text() {
        let t = Thread::new(
            "t",
            "x",
            vec![
                Reaction {
                    text: "b".into(),
                    timestamp: 5,
                },
                Reaction {
                    text: "a".into(),
                    timestamp: 5,
                },
            ],
            None,
            "en",
        );
        assert_eq!(t.reactions[0].text, "a");
    }

    #[test]
    fn malformed_line_names_line_and_field() {
        let f = write_lines(&[
            r#"{"id":"t1","source_text":"x","reactions":[],"language":"en"}"#,
            r#"{"id":"t2","source_text":"x","reactions":[{"text":"a","timestamp":"soon"}],"language":"en"}"#,
        ]);
        let err = load_jsonl(f.path()).unwrap_err();
        match &err {
            CorpusError::Malformed { line, field, .. } => {
                assert_eq!(*line, 2);
                assert_eq!(field, "reactions[0].timestamp");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("line 2"));

        let f = write_lines(&[r#"{"source_text":"x","reactions":[],"language":"en"}"#]);
        let err = load_jsonl(f.path()).unwrap_err();
        assert!(matches!(err, CorpusError::Malformed { ref field, line: 1, .. } if field == "id"));
    }

    #[test]
    fn labels_case_insensitive_written_lowercase() {
        let t = parse_thread(
            r#"{"id":"a","source_text":"x","reactions":[],"label":"NON-RUMOUR","language":"en"}"#,
            1,
        )
        .unwrap();
        assert_eq!(t.label, Some(Label::NonRumour));
        assert_eq!(t.to_json()["label"], "non-rumour");
    }

    #[test]
    fn jsonl_write_then_load() {
        let corpus = synth_bilingual(&SynthConfig {
            n_per_language: 20,
            ..SynthConfig::default()
        })
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_jsonl(f.path(), &corpus.target).unwrap();
        assert_eq!(load_jsonl(f.path()).unwrap(), corpus.target);
    }

    #[test]
    fn split_sizes_match_examples() {
        // 1,154 initial posts: 231 test, 923 left, split 4:1
        assert_eq!(split_sizes(1154), (738, 185, 231));
        assert_eq!(split_sizes(10), (6, 2, 2));
    }

    #[test]
    fn split_is_deterministic_partition() {
        let ts = threads(57);
        let a = split_dataset(&ts, 3).unwrap();
        let b = split_dataset(&ts, 3).unwrap();
        assert_eq!(a, b);
        let mut ids: Vec<&str> = a
            .train
            .iter()
            .chain(&a.validation)
            .chain(&a.test)
            .map(|t| t.id.as_str())
            .collect();
        ids.sort();
        let mut expected: Vec<&str> = ts.iter().map(|t| t.id.as_str()).collect();
        expected.sort();
        assert_eq!(ids, expected);
        let c = split_dataset(&ts, 4).unwrap();
        assert_ne!(a.test, c.test);
    }

    #[test]
    fn split_needs_ten_threads() {
        assert!(matches!(
            split_dataset(&threads(9), 0),
            Err(CorpusError::TooFewThreads(9))
        ));
        let s = split_dataset(&threads(10), 0).unwrap();
        assert_eq!((s.test.len(), s.train.len(), s.validation.len()), (2, 6, 2));
    }

    #[test]
    fn stats_arithmetic() {
        let r = |n: usize| {
            (0..n)
                .map(|i| Reaction {
                    text: "r".into(),
                    timestamp: i as i64,
                })
                .collect()
        };
        let ts = vec![
            Thread::new("a", "x", r(1), Some(Label::Rumour), "en"),
            Thread::new("b", "x", r(3), None, "en"),
        ];
        let s = dataset_stats(&ts).unwrap();
        assert_eq!(s.avg_reactions, 2.0);
        assert_eq!((s.max_reactions, s.min_reactions), (3, 1));
        assert_eq!((s.rumours, s.non_rumours, s.unlabeled), (1, 0, 1));
        assert!(matches!(dataset_stats(&[]), Err(CorpusError::Empty)));
    }

    #[test]
    fn single_rumour_thread_counts() {
        let s = dataset_stats(&[Thread::new("a", "x", vec![], Some(Label::Rumour), "en")]).unwrap();
        assert_eq!((s.rumours, s.non_rumours), (1, 0));
    }

    #[test]
    fn kfold_grouped_folds_are_group_disjoint() {
        let mut ts = threads(40);
        for (i, t) in ts.iter_mut().enumerate() {
            t.group = Some(format!("event{}", i % 8));
        }
        let folds = kfold(&ts, 5, 1).unwrap();
        assert_eq!(folds.iter().map(Vec::len).sum::<usize>(), 40);
        for (i, a) in folds.iter().enumerate() {
            for b in &folds[i + 1..] {
                let ga: HashSet<_> = a.iter().map(|t| t.group.clone()).collect();
                assert!(b.iter().all(|t| !ga.contains(&t.group)));
            }
        }
        let split = fold_split(&folds, 2, 1).unwrap();
        assert_eq!(split.test, folds[2]);
        assert_eq!(split.train.len() + split.validation.len() + split.test.len(), 40);
    }

    #[test]
    fn kfold_stratified_without_groups() {
        let folds = kfold(&threads(50), 5, 9).unwrap();
        for f in &folds {
            let r = f.iter().filter(|t| t.label == Some(Label::Rumour)).count();
            assert_eq!(f.len(), 10);
            assert_eq!(r, 5);
        }
    }

    #[test]
    fn synth_overlap_boundaries() {
        let base = SynthConfig {
            n_per_language: 30,
            ..SynthConfig::default()
        };
        let full = synth_bilingual(&SynthConfig {
            lexical_overlap: 1.0,
            ..base.clone()
        })
        .unwrap();
        assert_eq!(full.source_vocab, full.target_vocab);
        assert_ne!(full.source, full.target);
        let none = synth_bilingual(&SynthConfig {
            lexical_overlap: 0.0,
            ..base.clone()
        })
        .unwrap();
        assert_eq!(none.shared_words(), 0);
        let some = synth_bilingual(&base).unwrap();
        assert_eq!(some.shared_words(), 60);
        assert!(synth_bilingual(&SynthConfig {
            lexical_overlap: 1.5,
            ..base
        })
        .is_err());
    }

    #[test]
    fn synth_is_balanced_and_deterministic() {
        let cfg = SynthConfig {
            n_per_language: 101,
            ..SynthConfig::default()
        };
        let a = synth_bilingual(&cfg).unwrap();
        let b = synth_bilingual(&cfg).unwrap();
        assert_eq!(a.source, b.source);
        assert_eq!(a.target, b.target);
        for corpus in [&a.source, &a.target] {
            let r = corpus.iter().filter(|t| t.label == Some(Label::Rumour)).count() as i64;
            assert!((2 * r - corpus.len() as i64).abs() <= 1);
            for t in corpus {
                let (lo, hi) = cfg.reaction_count_range;
                assert!((lo..=hi).contains(&t.reactions.len()));
            }
        }
    }

    #[test]
    fn synth_text_stays_within_language_vocab() {
        let c = synth_bilingual(&SynthConfig {
            n_per_language: 40,
            ..SynthConfig::default()
        })
        .unwrap();
        let tv: HashSet<&str> = c.target_vocab.iter().map(String::as_str).collect();
        for t in &c.target {
            for text in t.texts() {
                assert!(text.split_whitespace().all(|w| tv.contains(w)));
            }
        }
    }
}
