//! JSON form of token sequences: an array of single-entry objects,
//! `[{"node_type":"ConnectedHub4_Sym"},{"armLength":210.9},...]`.

use serde_json::{Map, Value};
use skyforge_core::codec::Token;
use skyforge_core::{NodeKind, ParamKey, ParamValue, TokenSequence};

pub fn token_to_json(token: &Token) -> Value {
    let value = match token {
        Token::Node(kind) => Value::String(kind.to_string()),
        Token::Param(_, ParamValue::Numeric(x)) => Value::from(*x),
        Token::Param(_, ParamValue::Categorical(s)) => Value::String(s.clone()),
    };
    let mut m = Map::with_capacity(1);
    m.insert(token.key_name().to_string(), value);
    Value::Object(m)
}

pub fn sequence_to_json(seq: &TokenSequence) -> Value {
    Value::Array(seq.tokens().iter().map(token_to_json).collect())
}

/// Decoding failure at a 1-based token position.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenError {
    pub position: usize,
    pub message: String,
}

impl std::fmt::Display for TokenError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "token {}: {}", self.position, self.message)
    }
}

pub fn token_from_json(value: &Value, position: usize) -> Result<Token, TokenError> {
    let err = |message: String| TokenError { position, message };
    let obj = value
        .as_object()
        .filter(|o| o.len() == 1)
        .ok_or_else(|| err("expected an object with exactly one key".into()))?;
    let (key, v) = obj.iter().next().expect("one entry");
    if key == "node_type" {
        let name = v.as_str().ok_or_else(|| err("node_type value must be a string".into()))?;
        let kind: NodeKind = name
            .parse()
            .map_err(|_| err(format!("unknown node type `{name}`")))?;
        return Ok(Token::Node(kind));
    }
    let key = ParamKey::from_name(key).ok_or_else(|| err(format!("unknown key `{key}`")))?;
    let value = match v {
        Value::Number(n) => ParamValue::Numeric(n.as_f64().ok_or_else(|| err("number out of range".into()))?),
        Value::String(s) => ParamValue::Categorical(s.clone()),
        _ => return Err(err(format!("value of `{}` must be a number or string", key.name()))),
    };
    Ok(Token::Param(key, value))
}

pub fn sequence_from_json(value: &Value) -> Result<TokenSequence, TokenError> {
    let items = value.as_array().ok_or_else(|| TokenError {
        position: 0,
        message: "design must be an array of tokens".into(),
    })?;
    items
        .iter()
        .enumerate()
        .map(|(i, v)| token_from_json(v, i + 1))
        .collect::<Result<Vec<_>, _>>()
        .map(TokenSequence)
}

/// Python-literal rendering, `{'armLength': 210.88760375976562}`, as used
/// in printed listings.
pub fn token_repr(token: &Token) -> String {
    let value = match token {
        Token::Node(kind) => format!("'{kind}'"),
        Token::Param(_, ParamValue::Numeric(x)) => float_repr(*x),
        Token::Param(_, ParamValue::Categorical(s)) => format!("'{s}'"),
    };
    format!("{{'{}': {}}}", token.key_name(), value)
}

/// Shortest round-trip decimal with ties to even, laid out like Python's
/// `repr`: positional for exponents in [-4, 16), scientific otherwise.
fn float_repr(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x == 0.0 {
        return format!("{sign}0.0");
    }
    let (digits, exp) = shortest_digits(x.abs());
    let n = digits.len() as i32;
    let body = if (-4..16).contains(&exp) {
        if exp < 0 {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
        } else if exp + 1 >= n {
            format!("{}{}.0", digits, "0".repeat((exp + 1 - n) as usize))
        } else {
            let (a, b) = digits.split_at(exp as usize + 1);
            format!("{a}.{b}")
        }
    } else {
        let mant = if n > 1 { format!("{}.{}", &digits[..1], &digits[1..]) } else { digits.clone() };
        format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    };
    format!("{sign}{body}")
}

/// Significant digits and decimal exponent of the shortest string that
/// parses back to `x` (positive, finite), rounding the exact value half to
/// even at each candidate length.
fn shortest_digits(x: f64) -> (String, i32) {
    let exact = format!("{x:.800e}");
    let (mant, e) = exact.split_once('e').expect("exponent");
    let exp: i32 = e.parse().expect("exponent");
    let all: Vec<u8> = mant.bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();
    for p in 1..=17 {
        let mut d = all[..p].to_vec();
        let rest = &all[p..];
        let up = match rest.first() {
            Some(&r) if r > 5 => true,
            Some(&5) => rest[1..].iter().any(|&r| r != 0) || d[p - 1] % 2 == 1,
            _ => false,
        };
        let mut e = exp;
        if up {
            let mut i = p;
            loop {
                if i == 0 {
                    d.insert(0, 1);
                    d.pop();
                    e += 1;
                    break;
                }
                i -= 1;
                if d[i] == 9 {
                    d[i] = 0;
                } else {
                    d[i] += 1;
                    break;
                }
            }
        }
        while d.len() > 1 && d.last() == Some(&0) {
            d.pop();
        }
        let s: String = d.iter().map(|v| char::from(b'0' + v)).collect();
        if format!("{}e{}", s, e - (s.len() as i32 - 1)).parse::<f64>() == Ok(x) {
            return (s, e);
        }
    }
    unreachable!("17 significant digits always round-trip")
}

/// One token per line, comma separated, inside brackets.
pub fn sequence_repr(seq: &TokenSequence) -> String {
    let body: Vec<String> = seq.tokens().iter().map(token_repr).collect();
    format!("[\n{}\n]\n", body.join(",\n"))
}
