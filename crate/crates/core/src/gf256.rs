//! GF(2^8) arithmetic and the dense linear algebra needed for innovativeness
//! checks and decoding.
//!
//! The field is built over the reduction polynomial x^8 + x^4 + x^3 + x^2 + 1
//! (`0x11D`) with generator `0x02`. Multiplication and inversion go through
//! log/antilog tables computed at compile time.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Sub};

/// Reduction polynomial, including the x^8 term.
pub const REDUCTION_POLY: u16 = 0x11D;
/// Primitive element used to build the log/antilog tables.
pub const GENERATOR: u8 = 0x02;

const fn build_exp() -> [u8; 512] {
    let mut exp = [0u8; 512];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= REDUCTION_POLY;
        }
        i += 1;
    }
    // Doubled so that exp[log a + log b] never needs a modulo.
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    exp
}

const fn build_log(exp: &[u8; 512]) -> [u8; 256] {
    let mut log = [0u8; 256];
    let mut i = 0;
    while i < 255 {
        log[exp[i] as usize] = i as u8;
        i += 1;
    }
    log
}

static EXP: [u8; 512] = build_exp();
static LOG: [u8; 256] = build_log(&EXP);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GfError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// An element of GF(2^8).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
#[repr(transparent)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn inv(self) -> Result<Gf256, GfError> {
        if self.0 == 0 {
            return Err(GfError::ZeroInverse);
        }
        Ok(Gf256(EXP[255 - LOG[self.0 as usize] as usize]))
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

impl From<Gf256> for u8 {
    fn from(v: Gf256) -> Self {
        v.0
    }
}

#[inline]
pub fn gf_add(a: Gf256, b: Gf256) -> Gf256 {
    Gf256(a.0 ^ b.0)
}

#[inline]
pub fn gf_mul(a: Gf256, b: Gf256) -> Gf256 {
    if a.0 == 0 || b.0 == 0 {
        return Gf256::ZERO;
    }
    Gf256(EXP[LOG[a.0 as usize] as usize + LOG[b.0 as usize] as usize])
}

pub fn gf_inv(a: Gf256) -> Result<Gf256, GfError> {
    a.inv()
}

impl Add for Gf256 {
    type Output = Gf256;
    #[inline]
    fn add(self, rhs: Gf256) -> Gf256 {
        gf_add(self, rhs)
    }
}

// Characteristic 2: subtraction is addition.
impl Sub for Gf256 {
    type Output = Gf256;
    #[inline]
    fn sub(self, rhs: Gf256) -> Gf256 {
        gf_add(self, rhs)
    }
}

impl AddAssign for Gf256 {
    #[inline]
    fn add_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    #[inline]
    fn mul(self, rhs: Gf256) -> Gf256 {
        gf_mul(self, rhs)
    }
}

impl MulAssign for Gf256 {
    #[inline]
    fn mul_assign(&mut self, rhs: Gf256) {
        *self = gf_mul(*self, rhs);
    }
}

/// `dst[i] += c * src[i]` over bytes interpreted as field elements.
pub fn axpy_bytes(dst: &mut [u8], c: Gf256, src: &[u8]) {
    debug_assert_eq!(dst.len(), src.len());
    match c.0 {
        0 => {}
        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= *s),
        _ => {
            let lc = LOG[c.0 as usize] as usize;
            for (d, &s) in dst.iter_mut().zip(src) {
                if s != 0 {
                    *d ^= EXP[lc + LOG[s as usize] as usize];
                }
            }
        }
    }
}

/// `row[i] *= c` over bytes.
pub fn scale_bytes(row: &mut [u8], c: Gf256) {
    match c.0 {
        0 => row.fill(0),
        1 => {}
        _ => {
            let lc = LOG[c.0 as usize] as usize;
            for v in row.iter_mut() {
                if *v != 0 {
                    *v = EXP[lc + LOG[*v as usize] as usize];
                }
            }
        }
    }
}

/// Same as [`axpy_bytes`] on field-element slices.
pub fn axpy(dst: &mut [Gf256], c: Gf256, src: &[Gf256]) {
    axpy_bytes(as_bytes_mut(dst), c, as_bytes(src));
}

pub fn scale(row: &mut [Gf256], c: Gf256) {
    scale_bytes(as_bytes_mut(row), c);
}

pub fn as_bytes(v: &[Gf256]) -> &[u8] {
    // SAFETY: Gf256 is repr(transparent) over u8.
    unsafe { std::slice::from_raw_parts(v.as_ptr() as *const u8, v.len()) }
}

pub fn as_bytes_mut(v: &mut [Gf256]) -> &mut [u8] {
    // SAFETY: Gf256 is repr(transparent) over u8.
    unsafe { std::slice::from_raw_parts_mut(v.as_mut_ptr() as *mut u8, v.len()) }
}

pub fn from_bytes(v: &[u8]) -> Vec<Gf256> {
    v.iter().copied().map(Gf256).collect()
}

/// Dense row-major matrix over GF(2^8).
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Gf256>,
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|v| format!("{:02x}", v.0)).collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FieldMatrix { rows, cols, data: vec![Gf256::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Gf256::ONE);
        }
        m
    }

    /// Builds a matrix from rows of equal length.
    pub fn from_rows<R: AsRef<[Gf256]>>(rows: &[R]) -> Result<Self, GfError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(GfError::Dimension(format!("row {i} has {} entries, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(FieldMatrix { rows: rows.len(), cols, data })
    }

    pub fn from_byte_rows(rows: &[&[u8]]) -> Result<Self, GfError> {
        let rows: Vec<Vec<Gf256>> = rows.iter().map(|r| from_bytes(r)).collect();
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Gf256 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Gf256) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Gf256] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Gf256] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// `dst_row += c * src_row`
    fn add_row_multiple(&mut self, dst: usize, src: usize, c: Gf256) {
        debug_assert_ne!(dst, src);
        let cols = self.cols;
        let (d, s) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * cols);
            (&mut lo[dst * cols..(dst + 1) * cols], &hi[..cols])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * cols);
            (&mut hi[..cols], &lo[src * cols..(src + 1) * cols])
        };
        axpy(d, c, s);
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &FieldMatrix) -> Result<FieldMatrix, GfError> {
        if self.cols != rhs.rows {
            return Err(GfError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = FieldMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let c = self.get(r, k);
                if !c.is_zero() {
                    let src = rhs.row(k).to_vec();
                    axpy(out.row_mut(r), c, &src);
                }
            }
        }
        Ok(out)
    }

    /// Applies the matrix to byte rows: `out[r] = Σ_k self[r][k] · rows[k]`.
    pub fn apply(&self, rows: &[Vec<u8>]) -> Result<Vec<Vec<u8>>, GfError> {
        if rows.len() != self.cols {
            return Err(GfError::Dimension(format!(
                "{} payload rows for a matrix with {} columns",
                rows.len(),
                self.cols
            )));
        }
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(GfError::Dimension("payload rows differ in length".into()));
        }
        let mut out = vec![vec![0u8; width]; self.rows];
        for (r, o) in out.iter_mut().enumerate() {
            for (k, src) in rows.iter().enumerate() {
                axpy_bytes(o, self.get(r, k), src);
            }
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        row_reduce(self).1
    }
}

/// Gauss-Jordan elimination. Returns the reduced row-echelon form and the rank.
///
/// Pivot columns strictly increase down the rows, every pivot is 1 and is
/// the only nonzero entry of its column; zero rows sit at the bottom.
pub fn row_reduce(m: &FieldMatrix) -> (FieldMatrix, usize) {
    let mut m = m.clone();
    let mut rank = 0;
    for col in 0..m.cols {
        if rank == m.rows {
            break;
        }
        let Some(p) = (rank..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
            continue;
        };
        m.swap_rows(rank, p);
        let inv = m.get(rank, col).inv().expect("pivot is nonzero");
        scale(m.row_mut(rank), inv);
        for r in 0..m.rows {
            if r != rank {
                let c = m.get(r, col);
                if !c.is_zero() {
                    m.add_row_multiple(r, rank, c);
                }
            }
        }
        rank += 1;
    }
    (m, rank)
}

/// Solves `m · x = payloads` for a square full-rank `m`.
pub fn solve_full_rank(m: &FieldMatrix, payloads: &[Vec<u8>]) -> Result<Vec<Vec<u8>>, GfError> {
    let n = m.rows;
    if m.cols != n {
        return Err(GfError::Dimension(format!("matrix is {}x{}, not square", m.rows, m.cols)));
    }
    if payloads.len() != n {
        return Err(GfError::Dimension(format!("{} payload rows for {n} equations", payloads.len())));
    }
    let width = payloads.first().map_or(0, Vec::len);
    if payloads.iter().any(|p| p.len() != width) {
        return Err(GfError::Dimension("payload rows differ in length".into()));
    }
    let mut a = m.clone();
    let mut x: Vec<Vec<u8>> = payloads.to_vec();
    for col in 0..n {
        let p = (col..n).find(|&r| !a.get(r, col).is_zero()).ok_or(GfError::Singular)?;
        a.swap_rows(col, p);
        x.swap(col, p);
        let inv = a.get(col, col).inv()?;
        scale(a.row_mut(col), inv);
        scale_bytes(&mut x[col], inv);
        for r in 0..n {
            if r == col {
                continue;
            }
            let c = a.get(r, col);
            if !c.is_zero() {
                a.add_row_multiple(r, col, c);
                let (src, dst) = if r < col {
                    let (lo, hi) = x.split_at_mut(col);
                    (&hi[0], &mut lo[r])
                } else {
                    let (lo, hi) = x.split_at_mut(r);
                    (&lo[col], &mut hi[0])
                };
                axpy_bytes(dst, c, src);
            }
        }
    }
    Ok(x)
}

/// Incrementally maintained reduced row-echelon basis with an optional byte
/// tail (payload) carried through every row operation.
///
/// Rows are kept fully reduced: each pivot column is zero in every other row,
/// so reducing an incoming vector is a single pass over the pivots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Echelon {
    width: usize,
    tail_len: usize,
    coeffs: Vec<Vec<Gf256>>,
    tails: Vec<Vec<u8>>,
    pivots: Vec<usize>,
    // column -> row index holding that pivot
    pivot_of_col: Vec<Option<usize>>,
}

impl Echelon {
    pub fn new(width: usize, tail_len: usize) -> Self {
        Echelon {
            width,
            tail_len,
            coeffs: Vec::new(),
            tails: Vec::new(),
            pivots: Vec::new(),
            pivot_of_col: vec![None; width],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn tail_len(&self) -> usize {
        self.tail_len
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.width
    }

    /// Residual of `v` after elimination against the basis.
    pub fn reduce(&self, v: &[Gf256]) -> Vec<Gf256> {
        let mut v = v.to_vec();
        for (row, &col) in self.pivots.iter().enumerate() {
            let c = v[col];
            if !c.is_zero() {
                axpy(&mut v, c, &self.coeffs[row]);
            }
        }
        v
    }

    /// True when `v` lies outside the current row space.
    pub fn is_innovative(&self, v: &[Gf256]) -> bool {
        v.len() == self.width && self.reduce(v).iter().any(|c| !c.is_zero())
    }

    /// Adds `(v, tail)` to the basis if it increases the rank.
    pub fn push(&mut self, v: &[Gf256], tail: &[u8]) -> Result<bool, GfError> {
        if v.len() != self.width {
            return Err(GfError::Dimension(format!(
                "vector of length {} for a basis of width {}",
                v.len(),
                self.width
            )));
        }
        if tail.len() != self.tail_len {
            return Err(GfError::Dimension(format!(
                "tail of length {} for a basis with tails of {}",
                tail.len(),
                self.tail_len
            )));
        }
        let mut v = v.to_vec();
        let mut t = tail.to_vec();
        for (row, &col) in self.pivots.iter().enumerate() {
            let c = v[col];
            if !c.is_zero() {
                axpy(&mut v, c, &self.coeffs[row]);
                axpy_bytes(&mut t, c, &self.tails[row]);
            }
        }
        let Some(col) = v.iter().position(|c| !c.is_zero()) else {
            return Ok(false);
        };
        let inv = v[col].inv()?;
        scale(&mut v, inv);
        scale_bytes(&mut t, inv);
        for row in 0..self.coeffs.len() {
            let c = self.coeffs[row][col];
            if !c.is_zero() {
                axpy(&mut self.coeffs[row], c, &v);
                axpy_bytes(&mut self.tails[row], c, &t);
            }
        }
        self.pivot_of_col[col] = Some(self.coeffs.len());
        self.pivots.push(col);
        self.coeffs.push(v);
        self.tails.push(t);
        Ok(true)
    }

    /// For a full basis, the tails ordered by pivot column. Since the reduced
    /// basis is then the identity, these are the solved unknowns.
    pub fn solved_tails(&self) -> Option<Vec<Vec<u8>>> {
        if !self.is_full() {
            return None;
        }
        Some(self.pivot_of_col.iter().map(|r| self.tails[r.expect("full basis has every pivot")].clone()).collect())
    }

    pub fn basis(&self) -> impl Iterator<Item = &[Gf256]> {
        self.coeffs.iter().map(Vec::as_slice)
    }
}
