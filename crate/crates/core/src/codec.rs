//! Tree ⇄ token-sequence codec and token embedding.
//!
//! Flattening is a preorder walk: each node emits `{node_type: <literal>}`
//! followed by its parameters in grammar order, then its children. A
//! symmetric hub's single child is emitted once. The root's optional
//! `batteryType` closes the sequence.
//!
//! Each token embeds to a vector laid out as
//! `[key one-hot | value one-hot | attributes | float]`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::catalog::Catalog;
use crate::design::{self, DesignNode, NodeKind, ParamKey, ParamValue};
use crate::error::CodecError;
use crate::grammar::{self, ParamSlot, SlotType};

/// Longest sequence the generator emits and the model accepts by default.
pub const MAX_SEQUENCE_LEN: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    /// `{node_type: <literal>}`
    Node(NodeKind),
    /// `{<key>: <value>}`
    Param(ParamKey, ParamValue),
}

impl Token {
    pub fn key_name(&self) -> &'static str {
        match self {
            Token::Node(_) => "node_type",
            Token::Param(k, _) => k.name(),
        }
    }

    /// Key class in the key one-hot: `node_type` is 0.
    pub fn key_class(&self) -> usize {
        match self {
            Token::Node(_) => 0,
            Token::Param(k, _) => 1 + k.index(),
        }
    }

    fn value_text(&self) -> String {
        match self {
            Token::Node(kind) => kind.to_string(),
            Token::Param(_, ParamValue::Categorical(s)) => s.clone(),
            Token::Param(_, ParamValue::Numeric(x)) => format!("{x:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TokenSequence(pub Vec<Token>);

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }
}

impl From<Vec<Token>> for TokenSequence {
    fn from(tokens: Vec<Token>) -> Self {
        TokenSequence(tokens)
    }
}

/// Number of tokens [`flatten`] would emit, without allocating.
pub fn flattened_len(tree: &DesignNode) -> usize {
    1 + tree.params.len() + tree.children.iter().map(flattened_len).sum::<usize>()
}

pub fn flatten(tree: &DesignNode) -> Result<TokenSequence, CodecError> {
    design::require_structure(tree)?;
    let mut out = Vec::with_capacity(flattened_len(tree));
    emit(tree, true, &mut out);
    Ok(TokenSequence(out))
}

fn emit(node: &DesignNode, is_root: bool, out: &mut Vec<Token>) {
    out.push(Token::Node(node.kind));
    let (leading, trailing) = if is_root {
        split_trailing(&node.params)
    } else {
        (node.params.as_slice(), None)
    };
    out.extend(leading.iter().map(|(k, v)| Token::Param(*k, v.clone())));
    for child in &node.children {
        emit(child, false, out);
    }
    if let Some((k, v)) = trailing {
        out.push(Token::Param(*k, v.clone()));
    }
}

type Param = (ParamKey, ParamValue);

fn split_trailing(params: &[Param]) -> (&[Param], Option<&Param>) {
    match params.split_last() {
        Some((last, head)) if last.0 == grammar::ROOT_TRAILING.key => (head, Some(last)),
        _ => (params, None),
    }
}

/// Grammar-directed parse. Component references are resolved against
/// `catalog` and must be of the kind the slot requires.
pub fn parse(seq: &TokenSequence, catalog: &Catalog) -> Result<DesignNode, CodecError> {
    if seq.is_empty() {
        return Err(CodecError::Truncated {
            position: 1,
            expected: "node_type".to_string(),
        });
    }
    let mut p = Parser {
        tokens: seq.tokens(),
        pos: 0,
        catalog,
    };
    let mut root = p.node(None)?;
    if let Some(Token::Param(key, value)) = p.peek().cloned() {
        if key == grammar::ROOT_TRAILING.key {
            p.check_value(p.pos + 1, &grammar::ROOT_TRAILING, &value)?;
            p.pos += 1;
            root.params.push((key, value));
        }
    }
    if let Some(t) = p.peek() {
        return Err(CodecError::UnexpectedKey {
            position: p.pos + 1,
            found: t.key_name().to_string(),
            expected: "end of sequence".to_string(),
        });
    }
    Ok(root)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    catalog: &'a Catalog,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self, expected: &str) -> Result<&Token, CodecError> {
        let t = self.tokens.get(self.pos).ok_or_else(|| CodecError::Truncated {
            position: self.pos + 1,
            expected: expected.to_string(),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn node(&mut self, parent: Option<NodeKind>) -> Result<DesignNode, CodecError> {
        let position = self.pos + 1;
        let kind = match self.next("node_type")? {
            Token::Node(kind) => *kind,
            other => {
                return Err(CodecError::UnexpectedKey {
                    position,
                    found: other.key_name().to_string(),
                    expected: "node_type".to_string(),
                })
            }
        };
        if kind.literal_index().is_none() {
            return Err(CodecError::UnknownValue {
                position,
                value: kind.to_string(),
            });
        }
        let allowed = match parent {
            None => grammar::allowed_at_root(kind),
            Some(p) => grammar::allows_child(p, kind),
        };
        if !allowed {
            return Err(CodecError::UnexpectedValue {
                position,
                value: kind.to_string(),
                expected: match parent {
                    None => "a root node kind".to_string(),
                    Some(p) => format!("a child kind of {p}"),
                },
            });
        }

        let mut node = DesignNode::new(kind);
        for slot in grammar::leading_params(kind) {
            let position = self.pos + 1;
            let value = match self.next(slot.key.name())? {
                Token::Param(key, value) if *key == slot.key => value.clone(),
                other => {
                    return Err(CodecError::UnexpectedKey {
                        position,
                        found: other.key_name().to_string(),
                        expected: slot.key.name().to_string(),
                    })
                }
            };
            self.check_value(position, slot, &value)?;
            node.params.push((slot.key, value));
        }

        match grammar::expected_children(kind) {
            Some(n) => {
                for _ in 0..n {
                    node.children.push(self.node(Some(kind))?);
                }
            }
            None => {
                while matches!(self.peek(), Some(Token::Node(_))) {
                    node.children.push(self.node(Some(kind))?);
                }
            }
        }
        Ok(node)
    }

    fn check_value(&self, position: usize, slot: &ParamSlot, value: &ParamValue) -> Result<(), CodecError> {
        match (slot.ty, value) {
            (SlotType::Numeric, ParamValue::Numeric(_)) => Ok(()),
            (SlotType::Component(kind), ParamValue::Categorical(id)) => match self.catalog.kind_of(id) {
                Some(found) if found == kind => Ok(()),
                Some(found) => Err(CodecError::UnexpectedValue {
                    position,
                    value: id.clone(),
                    expected: format!("a {kind} id, found a {found}"),
                }),
                None => Err(CodecError::UnknownValue {
                    position,
                    value: id.clone(),
                }),
            },
            (SlotType::Numeric, ParamValue::Categorical(s)) => Err(CodecError::UnexpectedValue {
                position,
                value: s.clone(),
                expected: "a number".to_string(),
            }),
            (SlotType::Component(kind), ParamValue::Numeric(x)) => Err(CodecError::UnexpectedValue {
                position,
                value: format!("{x:?}"),
                expected: format!("a {kind} id"),
            }),
        }
    }
}

/// Per-key z-score statistics for numeric tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatNormalizer {
    /// `(mean, std)` indexed by [`ParamKey::index`].
    pub stats: [(f64, f64); ParamKey::ALL.len()],
}

impl Default for FloatNormalizer {
    fn default() -> Self {
        Self::identity()
    }
}

impl FloatNormalizer {
    pub fn identity() -> Self {
        FloatNormalizer {
            stats: [(0.0, 1.0); ParamKey::ALL.len()],
        }
    }

    /// Population mean and standard deviation per numeric key over every
    /// token of `sequences`. Keys never seen, or with (near-)zero spread,
    /// keep a unit scale.
    pub fn fit<'a, I: IntoIterator<Item = &'a TokenSequence>>(sequences: I) -> Self {
        let n_keys = ParamKey::ALL.len();
        let mut count = vec![0u64; n_keys];
        let mut mean = vec![0.0f64; n_keys];
        let mut m2 = vec![0.0f64; n_keys];
        for seq in sequences {
            for t in seq.tokens() {
                if let Token::Param(k, ParamValue::Numeric(x)) = t {
                    // Welford
                    let i = k.index();
                    count[i] += 1;
                    let delta = x - mean[i];
                    mean[i] += delta / count[i] as f64;
                    m2[i] += delta * (x - mean[i]);
                }
            }
        }
        let mut out = Self::identity();
        for i in 0..n_keys {
            if count[i] > 0 {
                let std = libm::sqrt(m2[i] / count[i] as f64);
                out.stats[i] = (mean[i], if std > 1e-12 { std } else { 1.0 });
            }
        }
        out
    }

    pub fn normalize(&self, key: ParamKey, x: f64) -> f64 {
        let (mean, std) = self.stats[key.index()];
        (x - mean) / std
    }

    pub fn denormalize(&self, key: ParamKey, z: f64) -> f64 {
        let (mean, std) = self.stats[key.index()];
        z * std + mean
    }
}

/// Segment widths of a raw token vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingLayout {
    pub key_classes: usize,
    pub value_classes: usize,
    pub attribute_slots: usize,
}

impl EmbeddingLayout {
    pub fn of(catalog: &Catalog) -> Self {
        EmbeddingLayout {
            key_classes: catalog.layout().key_classes,
            value_classes: catalog.value_class_count(),
            attribute_slots: catalog.layout().attribute_slots,
        }
    }

    pub fn width(&self) -> usize {
        self.key_classes + self.value_classes + self.attribute_slots + 1
    }

    pub fn value_offset(&self) -> usize {
        self.key_classes
    }

    pub fn attribute_offset(&self) -> usize {
        self.key_classes + self.value_classes
    }

    pub fn float_slot(&self) -> usize {
        self.width() - 1
    }
}

/// Value class reserved for every numeric token.
pub const NUMERIC_VALUE_CLASS: usize = 0;

/// Value class of a node literal or a component id.
pub fn value_class(token: &Token, catalog: &Catalog) -> Result<usize, CodecError> {
    match token {
        Token::Node(kind) => kind
            .literal_index()
            .map(|i| 1 + i)
            .ok_or_else(|| CodecError::UnknownVocabulary(kind.to_string())),
        Token::Param(_, ParamValue::Numeric(_)) => Ok(NUMERIC_VALUE_CLASS),
        Token::Param(_, ParamValue::Categorical(id)) => catalog
            .index_of(id)
            .map(|i| 1 + NodeKind::LITERAL_COUNT + i)
            .ok_or_else(|| CodecError::UnknownVocabulary(id.clone())),
    }
}

/// Nonzero entries of a token's raw vector, in increasing index order.
pub fn embed_token_sparse(
    token: &Token,
    catalog: &Catalog,
    normalizer: &FloatNormalizer,
) -> Result<Vec<(usize, f64)>, CodecError> {
    let layout = EmbeddingLayout::of(catalog);
    let mut entries = Vec::with_capacity(8);
    entries.push((token.key_class(), 1.0));
    entries.push((layout.value_offset() + value_class(token, catalog)?, 1.0));
    match token {
        Token::Param(_, ParamValue::Categorical(id)) => {
            let attrs = catalog
                .attribute_entries(id)
                .map_err(|_| CodecError::UnknownVocabulary(id.clone()))?;
            entries.extend(
                attrs
                    .into_iter()
                    .filter(|(_, x)| *x != 0.0)
                    .map(|(slot, x)| (layout.attribute_offset() + slot, x)),
            );
        }
        Token::Param(key, ParamValue::Numeric(x)) => {
            let z = normalizer.normalize(*key, *x);
            if z != 0.0 {
                entries.push((layout.float_slot(), z));
            }
        }
        Token::Node(_) => {}
    }
    Ok(entries)
}

/// Dense raw token vector of width [`EmbeddingLayout::width`].
pub fn embed_token(token: &Token, catalog: &Catalog, normalizer: &FloatNormalizer) -> Result<Vec<f64>, CodecError> {
    let mut v = vec![0.0; EmbeddingLayout::of(catalog).width()];
    for (i, x) in embed_token_sparse(token, catalog, normalizer)? {
        v[i] = x;
    }
    Ok(v)
}

/// Row-major `rows × width` matrix with a mask of real positions.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSequence {
    pub width: usize,
    pub data: Vec<f64>,
    pub mask: Vec<bool>,
}

impl EmbeddedSequence {
    pub fn rows(&self) -> usize {
        self.mask.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    /// Gathers the unmasked rows with their original positions.
    pub fn to_sparse(&self) -> SparseSequence {
        let mut positions = Vec::new();
        let mut rows = Vec::new();
        for (i, &real) in self.mask.iter().enumerate() {
            if real {
                positions.push(i);
                rows.push(
                    self.row(i)
                        .iter()
                        .enumerate()
                        .filter(|(_, x)| **x != 0.0)
                        .map(|(j, x)| (j, *x))
                        .collect(),
                );
            }
        }
        SparseSequence {
            width: self.width,
            positions,
            rows,
        }
    }
}

pub fn embed_sequence(
    seq: &TokenSequence,
    catalog: &Catalog,
    normalizer: &FloatNormalizer,
    pad_to: usize,
) -> Result<EmbeddedSequence, CodecError> {
    if pad_to < seq.len() {
        return Err(CodecError::PadTooSmall {
            len: seq.len(),
            pad_to,
        });
    }
    if seq.is_empty() {
        return Err(CodecError::Empty);
    }
    let width = EmbeddingLayout::of(catalog).width();
    let mut data = vec![0.0; pad_to * width];
    for (i, t) in seq.tokens().iter().enumerate() {
        for (j, x) in embed_token_sparse(t, catalog, normalizer)? {
            data[i * width + j] = x;
        }
    }
    let mut mask = vec![false; pad_to];
    mask[..seq.len()].fill(true);
    Ok(EmbeddedSequence { width, data, mask })
}

/// Compact model input: nonzero entries of each real row plus the row's
/// position in the (possibly padded) sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSequence {
    pub width: usize,
    pub positions: Vec<usize>,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSequence {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn embed_sequence_sparse(
    seq: &TokenSequence,
    catalog: &Catalog,
    normalizer: &FloatNormalizer,
) -> Result<SparseSequence, CodecError> {
    if seq.is_empty() {
        return Err(CodecError::Empty);
    }
    let rows = seq
        .tokens()
        .iter()
        .map(|t| embed_token_sparse(t, catalog, normalizer))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SparseSequence {
        width: EmbeddingLayout::of(catalog).width(),
        positions: (0..rows.len()).collect(),
        rows,
    })
}

/// Human-readable `{key: value}` rendering used in error messages and logs.
pub fn describe(token: &Token) -> String {
    format!("{{{}: {}}}", token.key_name(), token.value_text())
}
