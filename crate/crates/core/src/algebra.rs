//! Exact rational linear algebra and the Jordan reduction of unipotent integer matrices.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::parse_rational_field;

/// Dense matrix over ℚ. Entries are kept in lowest terms by `BigRational`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m.set(i, i, BigRational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::Dimension(
                "matrix must have at least one row and column".into(),
            ));
        }
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Convenience constructor from small integers; panics on ragged input.
    pub fn from_ints(rows: &[Vec<i64>]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| q(x)).collect())
                .collect(),
        )
        .expect("well-formed integer matrix")
    }

    pub fn from_bigints(rows: &[Vec<BigInt>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|x| BigRational::from_integer(x.clone()))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<BigRational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_integer(&self) -> bool {
        self.data.iter().all(BigRational::is_integer)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == Self::identity(self.rows)
    }

    /// Integer entries, or `None` when some entry is fractional.
    pub fn to_bigints(&self) -> Option<Vec<Vec<BigInt>>> {
        if !self.is_integer() {
            return None;
        }
        Some(
            (0..self.rows)
                .map(|i| self.row(i).iter().map(BigRational::to_integer).collect())
                .collect(),
        )
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Result<Vec<BigRational>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(
                "subtraction of differently shaped matrices".into(),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(
                "addition of differently shaped matrices".into(),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn pow(&self, k: usize) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension("power of a non-square matrix".into()));
        }
        let mut acc = Self::identity(self.rows);
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Reduced row echelon form and the pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            m.swap_rows(row, p);
            let inv = m.get(row, col).recip();
            for j in col..m.cols {
                let v = m.get(row, j) * &inv;
                m.set(row, j, v);
            }
            for r in 0..m.rows {
                if r == row {
                    continue;
                }
                let f = m.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in col..m.cols {
                    let v = m.get(r, j) - &f * m.get(row, j);
                    m.set(r, j, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel, one vector per free column of the RREF, in column order.
    pub fn kernel_basis(&self) -> Vec<Vec<BigRational>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![BigRational::zero(); self.cols];
                v[f] = BigRational::one();
                for (i, &p) in pivots.iter().enumerate() {
                    v[p] = -r.get(i, f).clone();
                }
                v
            })
            .collect()
    }

    pub fn determinant(&self) -> Result<BigRational> {
        if !self.is_square() {
            return Err(Error::Dimension(
                "determinant of a non-square matrix".into(),
            ));
        }
        let mut m = self.clone();
        let n = m.rows;
        let mut det = BigRational::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m.get(r, col).is_zero()) else {
                return Ok(BigRational::zero());
            };
            if p != col {
                m.swap_rows(p, col);
                det = -det;
            }
            let pivot = m.get(col, col).clone();
            det *= &pivot;
            for r in col + 1..n {
                let f = m.get(r, col) / &pivot;
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = m.get(r, j) - &f * m.get(col, j);
                    m.set(r, j, v);
                }
            }
        }
        Ok(det)
    }

    /// Entries as `"num/den"` strings (integers print without a denominator).
    pub fn to_string_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.to_string()).collect())
            .collect()
    }

    pub fn from_string_rows(rows: &[Vec<String>]) -> Result<Self> {
        let parsed = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .map(|(j, s)| parse_rational_field(s, &format!("matrix[{i}][{j}]")))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(parsed)
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .to_string_rows()
            .into_iter()
            .map(|r| format!("[{}]", r.join(", ")))
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

impl FromStr for RationalMatrix {
    type Err = Error;

    /// JSON array-of-arrays; entries may be strings `"p/q"` or JSON integers.
    fn from_str(s: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::parse("matrix", e.to_string()))?;
        let rows = value
            .as_array()
            .ok_or_else(|| Error::parse("matrix", "expected an array of rows"))?;
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.as_array()
                    .ok_or_else(|| Error::parse(format!("matrix[{i}]"), "expected an array"))?
                    .iter()
                    .enumerate()
                    .map(|(j, e)| match e {
                        serde_json::Value::String(s) => Ok(s.clone()),
                        serde_json::Value::Number(n) if n.is_i64() => Ok(n.to_string()),
                        _ => Err(Error::parse(
                            format!("matrix[{i}][{j}]"),
                            "expected a string \"p/q\" or an integer",
                        )),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_string_rows(&rows)
    }
}

/// Least `k ≥ 1` with `(A - I)^k = 0`, or `None` when `A` is not unipotent.
///
/// The identity reports index 1: `(A - I)^0 = I` is never zero for `d ≥ 1`.
pub fn unipotency_index(a: &RationalMatrix) -> Result<Option<usize>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "unipotence needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.sub(&RationalMatrix::identity(a.rows()))?;
    let mut p = n.clone();
    for k in 1..=a.rows() {
        if p.is_zero() {
            return Ok(Some(k));
        }
        p = p.mul(&n)?;
    }
    Ok(None)
}

pub fn is_unipotent(a: &RationalMatrix) -> Result<bool> {
    Ok(unipotency_index(a)?.is_some())
}

/// Block-diagonal lower-shear matrix: ones on the diagonal and on the
/// subdiagonal inside each block.
pub fn shear_jordan(block_sizes: &[usize]) -> RationalMatrix {
    let d: usize = block_sizes.iter().sum();
    let mut j = RationalMatrix::identity(d);
    let mut start = 0;
    for &s in block_sizes {
        for i in 1..s {
            j.set(start + i, start + i - 1, BigRational::one());
        }
        start += s;
    }
    j
}

/// Block sizes when `j` is in lower-shear normal form, `None` otherwise.
pub fn shear_blocks(j: &RationalMatrix) -> Option<Vec<usize>> {
    if !j.is_square() {
        return None;
    }
    let d = j.rows();
    let mut sizes = Vec::new();
    let mut current = 1;
    for i in 1..d {
        if j.get(i, i - 1).is_one() {
            current += 1;
        } else {
            sizes.push(current);
            current = 1;
        }
    }
    sizes.push(current);
    (shear_jordan(&sizes) == *j).then_some(sizes)
}

/// Jordan data `P A = J P` for a unipotent integer matrix `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnipotentReduction {
    pub j: RationalMatrix,
    pub p: RationalMatrix,
    pub block_sizes: Vec<usize>,
}

impl UnipotentReduction {
    /// Re-checks every structural invariant exactly.
    pub fn verify(&self, a: &RationalMatrix) -> Result<()> {
        let d = a.rows();
        if self.p.mul(a)? != self.j.mul(&self.p)? {
            return Err(Error::Domain("PA != JP".into()));
        }
        let n = self.j.sub(&RationalMatrix::identity(d))?;
        if !n.pow(d)?.is_zero() {
            return Err(Error::Domain("J - I is not nilpotent".into()));
        }
        if shear_jordan(&self.block_sizes) != self.j {
            return Err(Error::Domain("J is not in shear normal form".into()));
        }
        if !self.p.is_integer() || self.p.determinant()?.is_zero() {
            return Err(Error::Domain(
                "P must be an invertible integer matrix".into(),
            ));
        }
        Ok(())
    }
}

fn mat_vec(m: &RationalMatrix, v: &[BigRational]) -> Vec<BigRational> {
    m.mul_vec(v).expect("square matrix of matching size")
}

fn rank_of(vectors: &[Vec<BigRational>], d: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    RationalMatrix::from_rows(vectors.to_vec())
        .unwrap_or_else(|_| RationalMatrix::zeros(1, d))
        .rank()
}

/// Computes `J` (lower-shear blocks, nonincreasing sizes) and an integer `P`
/// with `P A = J P` from Jordan chains of `(A - I)ᵀ`.
pub fn unipotent_canonical_form(a: &RationalMatrix) -> Result<UnipotentReduction> {
    let index =
        unipotency_index(a)?.ok_or_else(|| Error::Domain("matrix is not unipotent".into()))?;
    if !a.is_integer() {
        return Err(Error::Domain("matrix must have integer entries".into()));
    }
    let d = a.rows();
    let n = a.sub(&RationalMatrix::identity(d))?;
    // Row vectors p with p N = q correspond to column vectors with Nᵀ pᵀ = qᵀ.
    let m = n.transpose();
    let kernels: Vec<Vec<Vec<BigRational>>> = (0..=index)
        .map(|j| {
            if j == 0 {
                Vec::new()
            } else {
                m.pow(j).expect("square").kernel_basis()
            }
        })
        .collect();

    // chains[i] = (top vector, length)
    let mut chains: Vec<(Vec<BigRational>, usize)> = Vec::new();
    for level in (1..=index).rev() {
        let mut span: Vec<Vec<BigRational>> = kernels[level - 1].clone();
        for (top, len) in &chains {
            let mut v = top.clone();
            for _ in 0..(len - level) {
                v = mat_vec(&m, &v);
            }
            span.push(v);
        }
        let mut r = rank_of(&span, d);
        for cand in &kernels[level] {
            span.push(cand.clone());
            let r2 = rank_of(&span, d);
            if r2 > r {
                r = r2;
                chains.push((cand.clone(), level));
            } else {
                span.pop();
            }
        }
    }

    let mut p_rows: Vec<Vec<BigRational>> = Vec::with_capacity(d);
    let mut block_sizes = Vec::with_capacity(chains.len());
    for (top, len) in &chains {
        let mut chain = vec![top.clone()];
        for _ in 1..*len {
            let next = mat_vec(&m, chain.last().expect("nonempty"));
            chain.push(next);
        }
        chain.reverse();
        let lcm = chain
            .iter()
            .flatten()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<Vec<BigInt>> = chain
            .iter()
            .map(|v| v.iter().map(|x| (x * &lcm).to_integer()).collect())
            .collect();
        let g = ints
            .iter()
            .flatten()
            .fold(BigInt::zero(), |acc, x| acc.gcd(x));
        for v in ints {
            p_rows.push(
                v.into_iter()
                    .map(|x| BigRational::new(x, g.clone()))
                    .collect(),
            );
        }
        block_sizes.push(*len);
    }
    let p = RationalMatrix::from_rows(p_rows)?;
    let j = shear_jordan(&block_sizes);
    let red = UnipotentReduction { j, p, block_sizes };
    debug_assert!(red.verify(a).is_ok());
    Ok(red)
}

/// Saturated integer kernel `{m ∈ ℤ^c : B m = 0}` of an integer matrix,
/// returned as a basis in row-style Hermite normal form.
pub fn integer_kernel(b: &RationalMatrix) -> Result<Vec<Vec<BigInt>>> {
    let rows = b
        .to_bigints()
        .ok_or_else(|| Error::Domain("integer kernel needs an integer matrix".into()))?;
    let r = b.rows();
    let c = b.cols();
    let mut w = rows;
    let mut u: Vec<Vec<BigInt>> = (0..c)
        .map(|i| {
            (0..c)
                .map(|j| {
                    if i == j {
                        BigInt::one()
                    } else {
                        BigInt::zero()
                    }
                })
                .collect()
        })
        .collect();
    // column operations act on w[.][col] and u[.][col] together
    let col_sub =
        |w: &mut Vec<Vec<BigInt>>, u: &mut Vec<Vec<BigInt>>, dst: usize, src: usize, f: &BigInt| {
            for row in w.iter_mut() {
                let v = &row[src] * f;
                row[dst] -= v;
            }
            for row in u.iter_mut() {
                let v = &row[src] * f;
                row[dst] -= v;
            }
        };
    let col_swap = |w: &mut Vec<Vec<BigInt>>, u: &mut Vec<Vec<BigInt>>, a: usize, b: usize| {
        for row in w.iter_mut() {
            row.swap(a, b);
        }
        for row in u.iter_mut() {
            row.swap(a, b);
        }
    };
    let mut piv = 0;
    for i in 0..r {
        loop {
            let nz: Vec<usize> = (piv..c).filter(|&j| !w[i][j].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let &best = nz.iter().min_by_key(|&&j| w[i][j].abs()).expect("nonempty");
            if nz.len() == 1 {
                col_swap(&mut w, &mut u, piv, best);
                piv += 1;
                break;
            }
            for &j in &nz {
                if j != best {
                    let f = w[i][j].div_floor(&w[i][best]);
                    col_sub(&mut w, &mut u, j, best, &f);
                }
            }
        }
    }
    let basis: Vec<Vec<BigInt>> = (piv..c)
        .map(|j| u.iter().map(|row| row[j].clone()).collect())
        .collect();
    Ok(hermite_rows(basis))
}

/// Row-style Hermite normal form of an integer matrix with independent rows.
pub fn hermite_rows(mut h: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    if h.is_empty() {
        return h;
    }
    let c = h[0].len();
    let mut row = 0;
    for col in 0..c {
        if row == h.len() {
            break;
        }
        loop {
            let nz: Vec<usize> = (row..h.len()).filter(|&t| !h[t][col].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let &best = nz
                .iter()
                .min_by_key(|&&t| h[t][col].abs())
                .expect("nonempty");
            h.swap(row, best);
            if nz.len() == 1 {
                break;
            }
            for t in row + 1..h.len() {
                if h[t][col].is_zero() {
                    continue;
                }
                let f = h[t][col].div_floor(&h[row][col]);
                let src = h[row].clone();
                for (x, s) in h[t].iter_mut().zip(&src) {
                    *x -= &f * s;
                }
            }
        }
        if (row..h.len()).all(|t| h[t][col].is_zero()) {
            continue;
        }
        if h[row][col].is_negative() {
            for x in h[row].iter_mut() {
                *x = -x.clone();
            }
        }
        for t in 0..row {
            let f = h[t][col].div_floor(&h[row][col]);
            if f.is_zero() {
                continue;
            }
            let src = h[row].clone();
            for (x, s) in h[t].iter_mut().zip(&src) {
                *x -= &f * s;
            }
        }
        row += 1;
    }
    h
}

/// JSON form of a reduction, with entries as `"p/q"` strings.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ReductionJson {
    #[serde(rename = "J")]
    pub j: Vec<Vec<String>>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<String>>,
    pub block_sizes: Vec<usize>,
}

impl From<&UnipotentReduction> for ReductionJson {
    fn from(r: &UnipotentReduction) -> Self {
        Self {
            j: r.j.to_string_rows(),
            p: r.p.to_string_rows(),
            block_sizes: r.block_sizes.clone(),
        }
    }
}
