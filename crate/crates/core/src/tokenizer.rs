//! Shared byte-pair subword vocabulary and fixed-length thread encoding.
//!
//! Words are whitespace-delimited. Each word starts with the marker `▁`
//! followed by its characters; merges never cross word boundaries. The
//! initial alphabet is every character seen in training text plus the
//! marker, so scripts without spaces (e.g. Chinese) begin at character
//! granularity.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Thread;

pub const WORD_MARKER: char = '▁';

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const CLS: u32 = 2;
pub const SEP: u32 = 3;
pub const MASK: u32 = 4;
pub const NUM_SPECIAL: usize = 5;

const SPECIAL_TOKENS: [&str; NUM_SPECIAL] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"];
const FORMAT_HEADER: &str = "crossrumour-vocab v1";

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("no training text")]
    EmptyCorpus,
    #[error("vocab_size {requested} must exceed alphabet size {alphabet} plus {NUM_SPECIAL} special tokens")]
    VocabTooSmall { requested: usize, alphabet: usize },
    #[error("max_seq_len {0} is below the minimum of 8")]
    SequenceTooShort(usize),
    #[error("mask probability {0} outside (0, 1)")]
    InvalidMaskProb(f64),
    #[error("vocabulary file {path}: {reason}")]
    Format { path: String, reason: String },
    #[error("vocabulary io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Subword inventory: ids `0..5` are the special tokens, then the alphabet,
/// then one id per merge in merge order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    merges: Vec<(String, String)>,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    ranks: HashMap<(u32, u32), (usize, u32)>,
}

impl Vocabulary {
    fn from_parts(tokens: Vec<String>, merges: Vec<(String, String)>) -> Result<Vocabulary, String> {
        for (i, s) in SPECIAL_TOKENS.iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(*s) {
                return Err(format!("id {i} must be {s}"));
            }
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(format!("token {t:?} appears twice"));
            }
        }
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, (a, b)) in merges.iter().enumerate() {
            let lookup = |s: &str| {
                index
                    .get(s)
                    .copied()
                    .ok_or_else(|| format!("merge operand {s:?} not in token table"))
            };
            let merged = format!("{a}{b}");
            let out = lookup(&merged)?;
            if (out as usize) < NUM_SPECIAL {
                return Err(format!("merge {a:?}+{b:?} produces a special token"));
            }
            ranks.insert((lookup(a)?, lookup(b)?), (rank, out));
        }
        Ok(Vocabulary {
            merges,
            tokens,
            index,
            ranks,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn is_special(id: u32) -> bool {
        (id as usize) < NUM_SPECIAL
    }

    /// Subword ids of one whitespace-free word, merges applied by rank.
    pub fn encode_word(&self, word: &str) -> Vec<u32> {
        let mut symbols: Vec<u32> = std::iter::once(WORD_MARKER)
            .chain(word.chars())
            .map(|c| {
                let mut buf = [0u8; 4];
                self.id(c.encode_utf8(&mut buf)).unwrap_or(UNK)
            })
            .collect();
        loop {
            let best = symbols
                .windows(2)
                .enumerate()
                .filter_map(|(i, w)| self.ranks.get(&(w[0], w[1])).map(|&(rank, out)| (rank, i, out)))
                .min();
            let Some((_, i, out)) = best else { break };
            symbols[i] = out;
            symbols.remove(i + 1);
        }
        symbols
    }

    pub fn encode_text(&self, text: &str) -> Vec<u32> {
        text.split_whitespace().flat_map(|w| self.encode_word(w)).collect()
    }

    /// Joins non-special tokens back into whitespace-normalised text.
    pub fn decode(&self, ids: &[u32]) -> String {
        let joined: String = ids
            .iter()
            .filter(|&&id| !Self::is_special(id))
            .filter_map(|&id| self.token(id))
            .collect();
        joined
            .split(WORD_MARKER)
            .filter(|w| !w.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Text serialisation; see README for the layout.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(FORMAT_HEADER);
        out.push('\n');
        out.push_str(&format!("merges {}\n", self.merges.len()));
        for (a, b) in &self.merges {
            out.push_str(&format!("{a}\t{b}\n"));
        }
        out.push_str(&format!("tokens {}\n", self.tokens.len()));
        for (i, t) in self.tokens.iter().enumerate() {
            out.push_str(&format!("{i}\t{t}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Vocabulary, String> {
        let mut lines = text.lines();
        if lines.next() != Some(FORMAT_HEADER) {
            return Err(format!("missing header {FORMAT_HEADER:?}"));
        }
        let count = |line: Option<&str>, key: &str| -> Result<usize, String> {
            line.and_then(|l| l.strip_prefix(key))
                .and_then(|n| n.trim().parse().ok())
                .ok_or_else(|| format!("expected `{key}<count>`"))
        };
        let n_merges = count(lines.next(), "merges ")?;
        let mut merges = Vec::with_capacity(n_merges);
        for i in 0..n_merges {
            let line = lines.next().ok_or_else(|| format!("truncated at merge {i}"))?;
            let (a, b) = line
                .split_once('\t')
                .ok_or_else(|| format!("bad merge line {line:?}"))?;
            merges.push((a.to_string(), b.to_string()));
        }
        let n_tokens = count(lines.next(), "tokens ")?;
        let mut tokens = Vec::with_capacity(n_tokens);
        for i in 0..n_tokens {
            let line = lines.next().ok_or_else(|| format!("truncated at token {i}"))?;
            let (id, tok) = line
                .split_once('\t')
                .ok_or_else(|| format!("bad token line {line:?}"))?;
            if id.parse::<usize>().ok() != Some(i) {
                return Err(format!("token ids must be dense, found {id:?} at position {i}"));
            }
            tokens.push(tok.to_string());
        }
        if lines.next().is_some() {
            return Err("trailing content".into());
        }
        Vocabulary::from_parts(tokens, merges)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TokenizerError> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|source| TokenizerError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Vocabulary, TokenizerError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| TokenizerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Vocabulary::from_text(&text).map_err(|reason| TokenizerError::Format {
            path: path.display().to_string(),
            reason,
        })
    }
}

/// Alphabet size (distinct characters plus the word marker) of the corpora.
pub fn alphabet_size<'a>(texts: impl IntoIterator<Item = &'a str>) -> usize {
    let mut chars: HashSet<char> = texts
        .into_iter()
        .flat_map(|t| t.chars())
        .filter(|c| !c.is_whitespace())
        .collect();
    chars.insert(WORD_MARKER);
    chars.len()
}

/// Greedy pair-merge training over the words of all threads in all corpora.
/// Training stops at `vocab_size` tokens or when no adjacent pair remains.
/// Equal pair counts resolve to the lexicographically smallest pair.
pub fn train_subwords(corpora: &[&[Thread]], vocab_size: usize) -> Result<Vocabulary, TokenizerError> {
    let mut word_counts: HashMap<&str, u64> = HashMap::new();
    for t in corpora.iter().flat_map(|c| c.iter()) {
        for text in t.texts() {
            for w in text.split_whitespace() {
                *word_counts.entry(w).or_default() += 1;
            }
        }
    }
    if word_counts.is_empty() {
        return Err(TokenizerError::EmptyCorpus);
    }

    let mut alphabet: Vec<String> = {
        let mut set: HashSet<char> = word_counts.keys().flat_map(|w| w.chars()).collect();
        set.insert(WORD_MARKER);
        let mut v: Vec<char> = set.into_iter().collect();
        v.sort_unstable();
        v.into_iter().map(String::from).collect()
    };
    if vocab_size <= alphabet.len() + NUM_SPECIAL {
        return Err(TokenizerError::VocabTooSmall {
            requested: vocab_size,
            alphabet: alphabet.len(),
        });
    }
    // a raw character that spells a special token cannot exist (specials are
    // multi-character), but keep the table a bijection regardless
    alphabet.retain(|c| !SPECIAL_TOKENS.contains(&c.as_str()));

    let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    tokens.extend(alphabet);
    let mut index: HashMap<String, u32> = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();

    // sorted for deterministic word numbering
    let mut sorted_words: Vec<(&str, u64)> = word_counts.into_iter().collect();
    sorted_words.sort_unstable();
    let mut words: Vec<(Vec<u32>, u64)> = sorted_words
        .iter()
        .map(|(w, n)| {
            let syms = std::iter::once(WORD_MARKER)
                .chain(w.chars())
                .map(|c| index[&c.to_string()])
                .collect();
            (syms, *n)
        })
        .collect();

    let mut pair_counts: HashMap<(u32, u32), i64> = HashMap::new();
    let mut occurrences: HashMap<(u32, u32), HashSet<usize>> = HashMap::new();
    for (wi, (syms, n)) in words.iter().enumerate() {
        for p in syms.windows(2) {
            *pair_counts.entry((p[0], p[1])).or_default() += *n as i64;
            occurrences.entry((p[0], p[1])).or_default().insert(wi);
        }
    }

    let mut merges = Vec::new();
    let mut banned: HashSet<(u32, u32)> = HashSet::new();
    while tokens.len() < vocab_size {
        let best = pair_counts
            .iter()
            .filter(|(p, &c)| c > 0 && !banned.contains(p))
            .max_by(|(pa, ca), (pb, cb)| {
                ca.cmp(cb).then_with(|| {
                    let ka = (&tokens[pa.0 as usize], &tokens[pa.1 as usize]);
                    let kb = (&tokens[pb.0 as usize], &tokens[pb.1 as usize]);
                    kb.cmp(&ka)
                })
            })
            .map(|(p, _)| *p);
        let Some(pair) = best else { break };
        let merged = format!("{}{}", tokens[pair.0 as usize], tokens[pair.1 as usize]);
        if SPECIAL_TOKENS.contains(&merged.as_str()) || index.contains_key(&merged) {
            banned.insert(pair);
            continue;
        }
        let new_id = tokens.len() as u32;
        merges.push((tokens[pair.0 as usize].clone(), tokens[pair.1 as usize].clone()));
        index.insert(merged.clone(), new_id);
        tokens.push(merged);

        let affected: Vec<usize> = {
            let mut v: Vec<usize> = occurrences.remove(&pair).unwrap_or_default().into_iter().collect();
            v.sort_unstable();
            v
        };
        for wi in affected {
            let (syms, n) = &mut words[wi];
            let n = *n as i64;
            for p in syms.windows(2) {
                *pair_counts.get_mut(&(p[0], p[1])).unwrap() -= n;
            }
            let mut merged_syms = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && (syms[i], syms[i + 1]) == pair {
                    merged_syms.push(new_id);
                    i += 2;
                } else {
                    merged_syms.push(syms[i]);
                    i += 1;
                }
            }
            *syms = merged_syms;
            for p in syms.windows(2) {
                *pair_counts.entry((p[0], p[1])).or_default() += n;
                occurrences.entry((p[0], p[1])).or_default().insert(wi);
            }
        }
        pair_counts.retain(|_, c| *c > 0);
    }

    Ok(Vocabulary::from_parts(tokens, merges).expect("trained vocabulary is consistent"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SepStyle {
    /// `[CLS] s [SEP] r [SEP]`
    #[default]
    Single,
    /// `[CLS] s [SEP] [SEP] r [SEP]`, the XLM-R pair convention.
    Double,
}

impl std::str::FromStr for SepStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(SepStyle::Single),
            "double" => Ok(SepStyle::Double),
            _ => Err(format!("unknown separator style {s:?} (single|double)")),
        }
    }
}

impl fmt::Display for SepStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SepStyle::Single => "single",
            SepStyle::Double => "double",
        })
    }
}

/// Model input: exactly `max_seq_len` ids, PAD-filled.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub attention_len: usize,
    pub segment_boundaries: Vec<usize>,
}

impl TokenSequence {
    /// The non-PAD prefix.
    pub fn active(&self) -> &[u32] {
        &self.ids[..self.attention_len]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeConfig {
    max_seq_len: usize,
    sep_style: SepStyle,
}

impl EncodeConfig {
    pub fn new(max_seq_len: usize, sep_style: SepStyle) -> Result<EncodeConfig, TokenizerError> {
        if max_seq_len < 8 {
            return Err(TokenizerError::SequenceTooShort(max_seq_len));
        }
        Ok(EncodeConfig { max_seq_len, sep_style })
    }

    pub fn max_seq_len(&self) -> usize {
        self.max_seq_len
    }

    pub fn sep_style(&self) -> SepStyle {
        self.sep_style
    }
}

/// `[CLS] source [SEP] (SEP) reactions… [SEP] PAD…`. The source keeps room
/// for the separators; reactions fill whatever budget remains, earliest
/// first, and the tail past the budget is dropped.
pub fn encode_thread(thread: &Thread, vocab: &Vocabulary, cfg: EncodeConfig) -> TokenSequence {
    let n_mid_sep = match cfg.sep_style {
        SepStyle::Single => 1,
        SepStyle::Double => 2,
    };
    let max = cfg.max_seq_len;
    let mut ids = Vec::with_capacity(max);
    let mut boundaries = Vec::with_capacity(3);

    ids.push(CLS);
    let source_budget = max - 2 - n_mid_sep;
    ids.extend(vocab.encode_text(&thread.source_text).into_iter().take(source_budget));
    for _ in 0..n_mid_sep {
        boundaries.push(ids.len());
        ids.push(SEP);
    }
    let reaction_budget = max - 1 - ids.len();
    ids.extend(
        thread
            .reactions
            .iter()
            .flat_map(|r| vocab.encode_text(&r.text))
            .take(reaction_budget),
    );
    boundaries.push(ids.len());
    ids.push(SEP);

    let attention_len = ids.len();
    ids.resize(max, PAD);
    TokenSequence {
        ids,
        attention_len,
        segment_boundaries: boundaries,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedSequence {
    pub corrupted: TokenSequence,
    /// `(position, original id)` in increasing position order.
    pub targets: Vec<(usize, u32)>,
}

/// Replaces each non-special position with `[MASK]` independently with
/// probability `mask_prob`.
pub fn mask_tokens(seq: &TokenSequence, mask_prob: f64, seed: u64) -> Result<MaskedSequence, TokenizerError> {
    if !(mask_prob > 0.0 && mask_prob < 1.0) {
        return Err(TokenizerError::InvalidMaskProb(mask_prob));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corrupted = seq.clone();
    let mut targets = Vec::new();
    for (pos, id) in corrupted.ids[..seq.attention_len].iter_mut().enumerate() {
        if Vocabulary::is_special(*id) {
            continue;
        }
        if rng.gen::<f64>() < mask_prob {
            targets.push((pos, *id));
            *id = MASK;
        }
    }
    Ok(MaskedSequence { corrupted, targets })
}
