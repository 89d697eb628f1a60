//! Generation-based random linear network coding.
//!
//! A content object is cut into fixed-size segments and the segments are
//! grouped into contiguous generations. Coding never mixes generations. Each
//! coded segment carries its encoding vector over the generation's original
//! segments, so sources and intermediate nodes share one `combine` path:
//! sources simply start from unit vectors.

use std::collections::BTreeMap;

use rand::Rng;

use crate::gf256::{self, axpy, axpy_bytes, Echelon, Gf256, GfError};
use crate::names::{self, Name, NameError};
use crate::FaceId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RlncError {
    #[error("cannot segment empty content")]
    EmptyContent,
    #[error("segment size and generation size must be positive")]
    ZeroSize,
    #[error("combine needs at least one input segment")]
    NoInputs,
    #[error("{inputs} inputs but {coeffs} coefficients")]
    CoefficientCount { inputs: usize, coeffs: usize },
    #[error("segments from different prefixes or generations cannot be combined")]
    MixedGenerations,
    #[error("segment belongs to {got}, state is for {expected}")]
    WrongGeneration { expected: String, got: String },
    #[error("encoding vector has {got} entries, generation size is {expected}")]
    VectorLength { expected: usize, got: usize },
    #[error("payload has {got} bytes, expected {expected}")]
    PayloadLength { expected: usize, got: usize },
    #[error("generation store is empty")]
    EmptyStore,
    #[error("generation has rank {rank} of {size}, cannot decode")]
    RankDeficient { rank: usize, size: usize },
    #[error("segment is not stored in this generation")]
    NotStored,
    #[error("generation {0} does not exist")]
    NoSuchGeneration(u32),
    #[error("truncated or malformed segment encoding: {0}")]
    Wire(String),
    #[error(transparent)]
    Name(#[from] NameError),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// Content cut into equal-size segments, grouped into generations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentObject {
    prefix: Name,
    segment_size: usize,
    generation_size: usize,
    segments: Vec<Vec<u8>>,
    original_len: usize,
}

pub fn split_content(
    raw: &[u8],
    prefix: Name,
    segment_size: usize,
    generation_size: usize,
) -> Result<ContentObject, RlncError> {
    if raw.is_empty() {
        return Err(RlncError::EmptyContent);
    }
    if segment_size == 0 || generation_size == 0 {
        return Err(RlncError::ZeroSize);
    }
    let segments = raw
        .chunks(segment_size)
        .map(|c| {
            let mut s = c.to_vec();
            s.resize(segment_size, 0);
            s
        })
        .collect();
    Ok(ContentObject { prefix, segment_size, generation_size, segments, original_len: raw.len() })
}

impl ContentObject {
    pub fn prefix(&self) -> &Name {
        &self.prefix
    }

    pub fn segment_size(&self) -> usize {
        self.segment_size
    }

    pub fn generation_size(&self) -> usize {
        self.generation_size
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    /// N
    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn segments(&self) -> &[Vec<u8>] {
        &self.segments
    }

    /// K
    pub fn generation_count(&self) -> usize {
        self.segments.len().div_ceil(self.generation_size)
    }

    /// H_k; the last generation may be smaller.
    pub fn generation_len(&self, k: u32) -> usize {
        self.generation_segments(k).len()
    }

    pub fn generation_segments(&self, k: u32) -> &[Vec<u8>] {
        let start = (k as usize * self.generation_size).min(self.segments.len());
        let end = (start + self.generation_size).min(self.segments.len());
        &self.segments[start..end]
    }

    /// The generation's originals tagged with unit encoding vectors.
    pub fn source_segments(&self, k: u32) -> Result<Vec<CodedSegment>, RlncError> {
        let segs = self.generation_segments(k);
        if segs.is_empty() {
            return Err(RlncError::NoSuchGeneration(k));
        }
        let h = segs.len();
        Ok(segs
            .iter()
            .enumerate()
            .map(|(n, payload)| {
                let mut vector = vec![Gf256::ZERO; h];
                vector[n] = Gf256::ONE;
                CodedSegment { prefix: self.prefix.clone(), generation: k, vector, payload: payload.clone() }
            })
            .collect())
    }

    /// Concatenates decoded segments and strips the zero padding.
    pub fn reassemble(segments: &[Vec<u8>], original_len: usize) -> Vec<u8> {
        let mut out: Vec<u8> = segments.concat();
        out.truncate(original_len);
        out
    }
}

/// A payload tagged with its encoding vector over one generation's originals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedSegment {
    pub prefix: Name,
    pub generation: u32,
    pub vector: Vec<Gf256>,
    pub payload: Vec<u8>,
}

impl CodedSegment {
    pub fn name(&self) -> Result<Name, NameError> {
        names::format_coded_name(&self.prefix, self.generation, &self.vector)
    }

    /// Length-prefixed prefix, generation (u32), vector length (u16), vector,
    /// payload length (u32), payload. All integers big-endian.
    pub fn encode(&self, out: &mut Vec<u8>) {
        put_str(out, &self.prefix.to_string());
        out.extend_from_slice(&self.generation.to_be_bytes());
        out.extend_from_slice(&(self.vector.len() as u16).to_be_bytes());
        out.extend_from_slice(gf256::as_bytes(&self.vector));
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::with_capacity(self.wire_len());
        self.encode(&mut v);
        v
    }

    pub fn wire_len(&self) -> usize {
        2 + self.prefix.to_string().len() + 4 + 2 + self.vector.len() + 4 + self.payload.len()
    }

    /// Decodes one segment, returning it with the number of bytes consumed.
    pub fn decode(buf: &[u8]) -> Result<(CodedSegment, usize), RlncError> {
        let mut r = Reader::new(buf);
        let prefix = names::parse_name(&r.string()?)?;
        let generation = r.u32()?;
        let h = r.u16()? as usize;
        let vector = gf256::from_bytes(r.take(h)?);
        let plen = r.u32()? as usize;
        let payload = r.take(plen)?.to_vec();
        Ok((CodedSegment { prefix, generation, vector, payload }, r.pos))
    }

    pub fn from_bytes(buf: &[u8]) -> Result<CodedSegment, RlncError> {
        let (seg, used) = Self::decode(buf)?;
        if used != buf.len() {
            return Err(RlncError::Wire(format!("{} trailing bytes", buf.len() - used)));
        }
        Ok(seg)
    }
}

pub(crate) fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u16).to_be_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], RlncError> {
        if self.buf.len() - self.pos < n {
            return Err(RlncError::Wire(format!("need {n} bytes at offset {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8, RlncError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16, RlncError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, RlncError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64, RlncError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn string(&mut self) -> Result<String, RlncError> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| RlncError::Wire(e.to_string()))
    }

    pub(crate) fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

/// Symbol operation counters for instrumented combination.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub multiplications: u64,
    pub additions: u64,
}

fn check_inputs(inputs: &[CodedSegment], coeffs: &[Gf256]) -> Result<(), RlncError> {
    let first = inputs.first().ok_or(RlncError::NoInputs)?;
    if coeffs.len() != inputs.len() {
        return Err(RlncError::CoefficientCount { inputs: inputs.len(), coeffs: coeffs.len() });
    }
    for s in &inputs[1..] {
        if s.prefix != first.prefix || s.generation != first.generation {
            return Err(RlncError::MixedGenerations);
        }
        if s.vector.len() != first.vector.len() {
            return Err(RlncError::VectorLength { expected: first.vector.len(), got: s.vector.len() });
        }
        if s.payload.len() != first.payload.len() {
            return Err(RlncError::PayloadLength { expected: first.payload.len(), got: s.payload.len() });
        }
    }
    Ok(())
}

/// `Σ a_l · inputs[l]`, applied to both payloads and encoding vectors.
pub fn combine(inputs: &[CodedSegment], coeffs: &[Gf256]) -> Result<CodedSegment, RlncError> {
    check_inputs(inputs, coeffs)?;
    let first = &inputs[0];
    let mut vector = vec![Gf256::ZERO; first.vector.len()];
    let mut payload = vec![0u8; first.payload.len()];
    for (s, &a) in inputs.iter().zip(coeffs) {
        axpy(&mut vector, a, &s.vector);
        axpy_bytes(&mut payload, a, &s.payload);
    }
    Ok(CodedSegment { prefix: first.prefix.clone(), generation: first.generation, vector, payload })
}

/// Same result as [`combine`], computed symbol by symbol while counting the
/// multiplications and additions spent on payload data.
pub fn combine_counted(
    inputs: &[CodedSegment],
    coeffs: &[Gf256],
    ops: &mut OpCount,
) -> Result<CodedSegment, RlncError> {
    check_inputs(inputs, coeffs)?;
    let first = &inputs[0];
    let x = first.payload.len();
    let mut payload = Vec::with_capacity(x);
    for i in 0..x {
        let mut acc = coeffs[0] * Gf256(first.payload[i]);
        ops.multiplications += 1;
        for (s, &a) in inputs[1..].iter().zip(&coeffs[1..]) {
            let term = a * Gf256(s.payload[i]);
            acc += term;
            ops.multiplications += 1;
            ops.additions += 1;
        }
        payload.push(acc.0);
    }
    let mut vector = vec![Gf256::ZERO; first.vector.len()];
    for (s, &a) in inputs.iter().zip(coeffs) {
        axpy(&mut vector, a, &s.vector);
    }
    Ok(CodedSegment { prefix: first.prefix.clone(), generation: first.generation, vector, payload })
}

/// Codec state for one generation at one node: the stored innovative
/// segments, the reduced basis of their vectors, and per-face send counts.
#[derive(Debug, Clone)]
pub struct GenerationState {
    prefix: Name,
    generation: u32,
    size: usize,
    payload_len: usize,
    stored: Vec<CodedSegment>,
    echelon: Echelon,
    sent_per_face: BTreeMap<FaceId, u32>,
}

impl GenerationState {
    pub fn new(prefix: Name, generation: u32, size: usize, payload_len: usize) -> Self {
        GenerationState {
            prefix,
            generation,
            size,
            payload_len,
            stored: Vec::new(),
            echelon: Echelon::new(size, payload_len),
            sent_per_face: BTreeMap::new(),
        }
    }

    /// A state holding every original of generation `k`, as at a source.
    pub fn from_source(content: &ContentObject, k: u32) -> Result<Self, RlncError> {
        let h = content.generation_len(k);
        let mut s = Self::new(content.prefix().clone(), k, h, content.segment_size());
        for seg in content.source_segments(k)? {
            s.try_insert(seg)?;
        }
        Ok(s)
    }

    pub fn prefix(&self) -> &Name {
        &self.prefix
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    /// H_k
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn rank(&self) -> usize {
        self.echelon.rank()
    }

    pub fn is_decoded(&self) -> bool {
        self.rank() == self.size
    }

    pub fn stored(&self) -> &[CodedSegment] {
        &self.stored
    }

    pub fn sent(&self, face: FaceId) -> u32 {
        self.sent_per_face.get(&face).copied().unwrap_or(0)
    }

    pub fn record_sent(&mut self, face: FaceId) {
        *self.sent_per_face.entry(face).or_insert(0) += 1;
    }

    pub fn sent_per_face(&self) -> &BTreeMap<FaceId, u32> {
        &self.sent_per_face
    }

    /// rank(G) − sent(f): how many more segments sent on `face` are likely
    /// innovative for the neighbor behind it. Negative when a decoded node
    /// has sent more than its rank.
    pub fn innovation_budget(&self, face: FaceId) -> i64 {
        self.rank() as i64 - self.sent(face) as i64
    }

    fn check_segment(&self, seg: &CodedSegment) -> Result<(), RlncError> {
        if seg.prefix != self.prefix || seg.generation != self.generation {
            return Err(RlncError::WrongGeneration {
                expected: format!("{}/{}", self.prefix, self.generation),
                got: format!("{}/{}", seg.prefix, seg.generation),
            });
        }
        if seg.vector.len() != self.size {
            return Err(RlncError::VectorLength { expected: self.size, got: seg.vector.len() });
        }
        if seg.payload.len() != self.payload_len {
            return Err(RlncError::PayloadLength { expected: self.payload_len, got: seg.payload.len() });
        }
        Ok(())
    }

    pub fn is_innovative(&self, seg: &CodedSegment) -> bool {
        self.check_segment(seg).is_ok() && self.echelon.is_innovative(&seg.vector)
    }

    /// Stores `seg` if it increases the rank. Non-innovative segments leave
    /// the state untouched.
    pub fn try_insert(&mut self, seg: CodedSegment) -> Result<bool, RlncError> {
        self.check_segment(&seg)?;
        if self.echelon.push(&seg.vector, &seg.payload)? {
            self.stored.push(seg);
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// A fresh combination of every stored segment with uniform coefficients,
    /// redrawn until the resulting vector is nonzero.
    pub fn random_combine<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CodedSegment, RlncError> {
        if self.stored.is_empty() {
            return Err(RlncError::EmptyStore);
        }
        loop {
            let coeffs: Vec<Gf256> = (0..self.stored.len()).map(|_| Gf256(rng.random())).collect();
            let seg = combine(&self.stored, &coeffs)?;
            if seg.vector.iter().any(|c| !c.is_zero()) {
                return Ok(seg);
            }
        }
    }

    /// The generation's original segments, in order.
    pub fn decode(&self) -> Result<Vec<Vec<u8>>, RlncError> {
        self.echelon.solved_tails().ok_or(RlncError::RankDeficient { rank: self.rank(), size: self.size })
    }

    /// Removes a stored segment, rebuilds the basis from what remains and
    /// lowers every face's send count by one (never below zero).
    pub fn evict(&mut self, seg: &CodedSegment) -> Result<(), RlncError> {
        let idx = self.stored.iter().position(|s| s == seg).ok_or(RlncError::NotStored)?;
        self.stored.remove(idx);
        let mut echelon = Echelon::new(self.size, self.payload_len);
        for s in &self.stored {
            echelon.push(&s.vector, &s.payload)?;
        }
        self.echelon = echelon;
        for sent in self.sent_per_face.values_mut() {
            *sent = sent.saturating_sub(1);
        }
        Ok(())
    }
}
