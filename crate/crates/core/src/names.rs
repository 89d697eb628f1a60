//! Hierarchical content names.
//!
//! Plain segments are `/<prefix>/<n>`. Coded segments are
//! `/<prefix>/<k>/<vector>` where `<k>` is the generation id and `<vector>`
//! is the encoding vector in lowercase hex, two characters per coefficient.
//! Interests for coded data name only `/<prefix>/<k>`. Whether a trailing
//! numeric component is a segment id or a generation id is decided by the
//! message's network-coding flag, never by the name alone.

use std::fmt;
use std::str::FromStr;

use crate::gf256::Gf256;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NameError {
    #[error("name must start with '/': {0:?}")]
    MissingLeadingSlash(String),
    #[error("empty name component in {0:?}")]
    EmptyComponent(String),
    #[error("name has no components")]
    Empty,
    #[error("malformed encoding vector component {0:?}")]
    BadVector(String),
    #[error("expected a numeric component, found {0:?}")]
    NotNumeric(String),
    #[error("encoding vector must not be empty")]
    EmptyVector,
    #[error("name {0:?} is too short for a {1}")]
    TooShort(String, &'static str),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Name {
    components: Vec<String>,
}

impl Name {
    pub fn from_components<I, S>(components: I) -> Result<Name, NameError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let components: Vec<String> = components.into_iter().map(Into::into).collect();
        if let Some(c) = components.iter().find(|c| c.is_empty() || c.contains('/')) {
            return Err(NameError::EmptyComponent(c.clone()));
        }
        Ok(Name { components })
    }

    pub fn components(&self) -> &[String] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Returns a new name with `component` appended.
    pub fn child(&self, component: impl Into<String>) -> Name {
        let c = component.into();
        debug_assert!(!c.is_empty() && !c.contains('/'));
        let mut components = self.components.clone();
        components.push(c);
        Name { components }
    }

    pub fn parent(&self) -> Option<Name> {
        if self.components.is_empty() {
            return None;
        }
        Some(Name { components: self.components[..self.components.len() - 1].to_vec() })
    }

    pub fn last(&self) -> Option<&str> {
        self.components.last().map(String::as_str)
    }

    pub fn starts_with(&self, prefix: &Name) -> bool {
        matches_prefix(self, prefix)
    }

    /// `/<prefix>/<n>`
    pub fn segment(&self, n: u64) -> Name {
        self.child(n.to_string())
    }

    /// `/<prefix>/<k>`, the name carried by coded Interests.
    pub fn generation(&self, k: u32) -> Name {
        self.child(k.to_string())
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return f.write_str("/");
        }
        for c in &self.components {
            write!(f, "/{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Name({self})")
    }
}

impl FromStr for Name {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_name(s)
    }
}

/// How a name is interpreted in its message context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NameKind {
    PrefixOnly,
    PlainSegment {
        prefix: Name,
        segment: u64,
    },
    /// `{p, k}` in a coded Interest.
    GenerationRequest {
        prefix: Name,
        generation: u32,
    },
    CodedSegment {
        prefix: Name,
        generation: u32,
        vector: Vec<Gf256>,
    },
}

/// Parses the canonical slash-separated text form.
pub fn parse_name(text: &str) -> Result<Name, NameError> {
    let rest = text.strip_prefix('/').ok_or_else(|| NameError::MissingLeadingSlash(text.to_string()))?;
    if rest.is_empty() {
        return Err(NameError::Empty);
    }
    let components: Vec<String> = rest.split('/').map(str::to_string).collect();
    if components.iter().any(String::is_empty) {
        return Err(NameError::EmptyComponent(text.to_string()));
    }
    Ok(Name { components })
}

/// Parses and classifies a name. `network_coding` is the message's
/// NetworkCodingAllowed flag; `is_data` tells Data names (which carry a vector
/// component when coded) from Interest names.
pub fn classify_name(text: &str, network_coding: bool, is_data: bool) -> Result<NameKind, NameError> {
    let name = parse_name(text)?;
    classify(&name, network_coding, is_data)
}

pub fn classify(name: &Name, network_coding: bool, is_data: bool) -> Result<NameKind, NameError> {
    let c = name.components();
    if network_coding {
        if is_data {
            if c.len() < 3 {
                return Err(NameError::TooShort(name.to_string(), "coded segment name"));
            }
            let vector = decode_vector(&c[c.len() - 1])?;
            let generation = parse_numeric(&c[c.len() - 2])?;
            let prefix = Name { components: c[..c.len() - 2].to_vec() };
            Ok(NameKind::CodedSegment { prefix, generation, vector })
        } else {
            if c.len() < 2 {
                return Err(NameError::TooShort(name.to_string(), "generation request"));
            }
            let generation = parse_numeric(&c[c.len() - 1])?;
            let prefix = Name { components: c[..c.len() - 1].to_vec() };
            Ok(NameKind::GenerationRequest { prefix, generation })
        }
    } else {
        match c.last().map(|l| l.parse::<u64>()) {
            Some(Ok(segment)) if c.len() >= 2 && is_decimal(c.last().unwrap()) => {
                Ok(NameKind::PlainSegment { prefix: Name { components: c[..c.len() - 1].to_vec() }, segment })
            }
            _ => Ok(NameKind::PrefixOnly),
        }
    }
}

fn is_decimal(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn parse_numeric<T: FromStr>(s: &str) -> Result<T, NameError> {
    if !is_decimal(s) {
        return Err(NameError::NotNumeric(s.to_string()));
    }
    s.parse().map_err(|_| NameError::NotNumeric(s.to_string()))
}

pub fn encode_vector(vector: &[Gf256]) -> String {
    let mut s = String::with_capacity(vector.len() * 2);
    for v in vector {
        s.push_str(&format!("{:02x}", v.0));
    }
    s
}

pub fn decode_vector(s: &str) -> Result<Vec<Gf256>, NameError> {
    if s.is_empty() || s.len() % 2 != 0 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(NameError::BadVector(s.to_string()));
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map(Gf256).map_err(|_| NameError::BadVector(s.to_string())))
        .collect()
}

/// `{p, k, g}`: prefix, then the generation id, then the hex vector.
pub fn format_coded_name(prefix: &Name, generation: u32, vector: &[Gf256]) -> Result<Name, NameError> {
    if prefix.is_empty() {
        return Err(NameError::Empty);
    }
    if vector.is_empty() {
        return Err(NameError::EmptyVector);
    }
    Ok(prefix.generation(generation).child(encode_vector(vector)))
}

/// Component-wise prefix test.
pub fn matches_prefix(name: &Name, prefix: &Name) -> bool {
    prefix.components.len() <= name.components.len()
        && prefix.components.iter().zip(&name.components).all(|(a, b)| a == b)
}
