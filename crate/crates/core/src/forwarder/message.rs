//! Interest and Data messages and their byte encoding.
//!
//! Layout: a kind byte (`0x01` Interest, `0x02` Data), a flags byte (bit 0 is
//! NetworkCodingAllowed), then the body. Interest body: name, nonce (u64),
//! lifetime in milliseconds (u32). Coded Data body: the coded segment
//! encoding from [`crate::rlnc`]. Plain Data body: name, payload length
//! (u32), payload. Names are a u16 byte length followed by UTF-8 text; all
//! integers are big-endian.

use std::time::Duration;

use crate::gf256::Gf256;
use crate::names::{self, Name};
use crate::rlnc::{put_str, CodedSegment, Reader, RlncError};

pub const FLAG_NETWORK_CODING: u8 = 0x01;
const KIND_INTEREST: u8 = 0x01;
const KIND_DATA: u8 = 0x02;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterestMsg {
    pub name: Name,
    pub network_coding: bool,
    pub nonce: u64,
    pub lifetime: Duration,
}

impl InterestMsg {
    /// A coded-data request `{p, k}`.
    pub fn coded(prefix: &Name, generation: u32, nonce: u64, lifetime: Duration) -> Self {
        InterestMsg { name: prefix.generation(generation), network_coding: true, nonce, lifetime }
    }

    pub fn plain(name: Name, nonce: u64, lifetime: Duration) -> Self {
        InterestMsg { name, network_coding: false, nonce, lifetime }
    }

    /// For a coded Interest, the `(prefix, generation)` it asks for.
    pub fn generation_key(&self) -> Option<(Name, u32)> {
        if !self.network_coding {
            return None;
        }
        let prefix = self.name.parent()?;
        let k = self.name.last()?.parse().ok()?;
        Some((prefix, k))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataMsg {
    Plain { name: Name, payload: Vec<u8> },
    Coded(CodedSegment),
}

impl DataMsg {
    pub fn name(&self) -> Name {
        match self {
            DataMsg::Plain { name, .. } => name.clone(),
            DataMsg::Coded(seg) => seg.name().unwrap_or_else(|_| seg.prefix.generation(seg.generation)),
        }
    }

    pub fn payload(&self) -> &[u8] {
        match self {
            DataMsg::Plain { payload, .. } => payload,
            DataMsg::Coded(seg) => &seg.payload,
        }
    }

    pub fn encoding_vector(&self) -> Option<&[Gf256]> {
        match self {
            DataMsg::Plain { .. } => None,
            DataMsg::Coded(seg) => Some(&seg.vector),
        }
    }

    pub fn is_coded(&self) -> bool {
        matches!(self, DataMsg::Coded(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Interest(InterestMsg),
    Data(DataMsg),
}

impl Message {
    pub fn is_data(&self) -> bool {
        matches!(self, Message::Data(_))
    }

    pub fn is_coded_data(&self) -> bool {
        matches!(self, Message::Data(DataMsg::Coded(_)))
    }

    pub fn name(&self) -> Name {
        match self {
            Message::Interest(i) => i.name.clone(),
            Message::Data(d) => d.name(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Message::Interest(i) => {
                out.push(KIND_INTEREST);
                out.push(if i.network_coding { FLAG_NETWORK_CODING } else { 0 });
                put_str(&mut out, &i.name.to_string());
                out.extend_from_slice(&i.nonce.to_be_bytes());
                out.extend_from_slice(&(i.lifetime.as_millis() as u32).to_be_bytes());
            }
            Message::Data(DataMsg::Coded(seg)) => {
                out.push(KIND_DATA);
                out.push(FLAG_NETWORK_CODING);
                seg.encode(&mut out);
            }
            Message::Data(DataMsg::Plain { name, payload }) => {
                out.push(KIND_DATA);
                out.push(0);
                put_str(&mut out, &name.to_string());
                out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
                out.extend_from_slice(payload);
            }
        }
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Message, RlncError> {
        let mut r = Reader::new(buf);
        let kind = r.u8()?;
        let flags = r.u8()?;
        let nc = flags & FLAG_NETWORK_CODING != 0;
        let msg = match kind {
            KIND_INTEREST => {
                let name = names::parse_name(&r.string()?)?;
                let nonce = r.u64()?;
                let lifetime = Duration::from_millis(r.u32()? as u64);
                Message::Interest(InterestMsg { name, network_coding: nc, nonce, lifetime })
            }
            KIND_DATA if nc => {
                let (seg, used) = CodedSegment::decode(&buf[r.pos..])?;
                r.pos += used;
                Message::Data(DataMsg::Coded(seg))
            }
            KIND_DATA => {
                let name = names::parse_name(&r.string()?)?;
                let n = r.u32()? as usize;
                Message::Data(DataMsg::Plain { name, payload: r.take(n)?.to_vec() })
            }
            other => return Err(RlncError::Wire(format!("unknown message kind {other:#04x}"))),
        };
        if !r.done() {
            return Err(RlncError::Wire("trailing bytes after message".into()));
        }
        Ok(msg)
    }
}
