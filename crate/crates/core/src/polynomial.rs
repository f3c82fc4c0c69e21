//! Integer-valued polynomials and independence of polynomial families.
//!
//! An [`IntegerPolynomial`] is stored in the binomial basis
//! `p(n) = c_0 + c_1 C(n,1) + ... + c_d C(n,d)` with integer `c_j`, which is
//! exactly the set of rational polynomials mapping integers to integers.
//! Standard-basis input goes through [`RationalPolynomial`] and is rejected at
//! the boundary when it is not integer-valued.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::algebra::RationalMatrix;
use crate::error::{Error, Result};

/// Generalized binomial coefficient `C(n, j) = n (n-1) ... (n-j+1) / j!`,
/// defined for every integer `n` (negative `n` included).
pub fn binomial(n: &BigInt, j: usize) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..j {
        num *= n - BigInt::from(i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// Polynomial with rational coefficients in the power basis `∑ a_i n^i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalPolynomial {
    coeffs: Vec<BigRational>,
}

impl RationalPolynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial `n`.
    pub fn variable() -> Self {
        Self::new(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn degree(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, n: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * n + c;
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = BigRational::zero();
        let coeffs = (0..len)
            .map(|i| self.coeffs.get(i).unwrap_or(&zero) + other.coeffs.get(i).unwrap_or(&zero))
            .collect();
        Self::new(coeffs)
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self::new(coeffs)
    }
}

impl fmt::Display for RationalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if neg {
                write!(f, "-")?;
            } else if !first {
                write!(f, "+")?;
            }
            first = false;
            let var = match i {
                0 => String::new(),
                1 => "n".to_string(),
                _ => format!("n^{i}"),
            };
            if i == 0 {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{var}")?;
            } else if mag.is_integer() {
                write!(f, "{mag}{var}")?;
            } else {
                write!(f, "{mag}*{var}")?;
            }
        }
        Ok(())
    }
}

fn parse_rational(s: &str, field: &str) -> Result<BigRational> {
    let bad = || Error::parse(field, format!("invalid number `{s}`"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
            if q.is_zero() {
                return Err(Error::parse(field, "zero denominator"));
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(
            BigInt::from_str(s.trim()).map_err(|_| bad())?,
        )),
    }
}

pub(crate) fn parse_rational_field(s: &str, field: &str) -> Result<BigRational> {
    parse_rational(s, field)
}

impl FromStr for RationalPolynomial {
    type Err = Error;

    /// Parses strings such as `n^2+3n-1`, `-n`, `1/2*n^2+1/2*n`, `n^2/2`.
    fn from_str(s: &str) -> Result<Self> {
        const FIELD: &str = "polynomial";
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::parse(FIELD, "empty polynomial"));
        }
        let mut terms = Vec::new();
        let mut start = 0;
        let bytes = compact.as_bytes();
        for i in 1..bytes.len() {
            if (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'^' {
                terms.push(&compact[start..i]);
                start = i;
            }
        }
        terms.push(&compact[start..]);

        let mut poly = RationalPolynomial::zero();
        for term in terms {
            let (sign, body) = match term.as_bytes().first() {
                Some(b'-') => (-1, &term[1..]),
                Some(b'+') => (1, &term[1..]),
                _ => (1, term),
            };
            if body.is_empty() {
                return Err(Error::parse(FIELD, format!("dangling sign in `{s}`")));
            }
            let (coef, power) = match body.find('n') {
                None => (parse_rational(body, FIELD)?, 0usize),
                Some(pos) => {
                    let prefix = body[..pos].trim_end_matches('*');
                    let mut coef = if prefix.is_empty() {
                        BigRational::one()
                    } else {
                        parse_rational(prefix, FIELD)?
                    };
                    let mut rest = &body[pos + 1..];
                    let mut power = 1usize;
                    if let Some(r) = rest.strip_prefix('^') {
                        let end = r.find(|c: char| !c.is_ascii_digit()).unwrap_or(r.len());
                        power = r[..end].parse().map_err(|_| {
                            Error::parse(FIELD, format!("bad exponent in `{term}`"))
                        })?;
                        rest = &r[end..];
                    }
                    if let Some(q) = rest.strip_prefix('/') {
                        let q = parse_rational(q, FIELD)?;
                        if q.is_zero() {
                            return Err(Error::parse(FIELD, "zero denominator"));
                        }
                        coef /= q;
                    } else if !rest.is_empty() {
                        return Err(Error::parse(
                            FIELD,
                            format!("unexpected `{rest}` in `{term}`"),
                        ));
                    }
                    (coef, power)
                }
            };
            let mut coeffs = vec![BigRational::zero(); power + 1];
            coeffs[power] = coef * BigRational::from_integer(BigInt::from(sign));
            poly = poly.add(&RationalPolynomial::new(coeffs));
        }
        Ok(poly)
    }
}

/// Integer-valued polynomial in the binomial basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntegerPolynomial {
    coeffs: Vec<BigInt>,
}

impl IntegerPolynomial {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_i64s(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigInt) -> Self {
        Self::new(vec![c])
    }

    /// The identity polynomial `n`.
    pub fn identity() -> Self {
        Self::from_i64s(&[0, 1])
    }

    /// Binomial-basis coefficients `c_0..c_d`.
    pub fn coeffs_binomial(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Index of the last nonzero binomial coefficient; `-1` for the zero polynomial.
    pub fn degree(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn eval(&self, n: &BigInt) -> BigInt {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * binomial(n, j))
            .sum()
    }

    pub fn eval_i64(&self, n: i64) -> BigInt {
        self.eval(&BigInt::from(n))
    }

    /// Interpolates from the values `p(0), p(1), ..., p(d)` via forward
    /// differences; the `j`-th difference at 0 is the `j`-th binomial coefficient.
    pub fn from_values(values: &[BigInt]) -> Self {
        let mut table = values.to_vec();
        let mut coeffs = Vec::with_capacity(values.len());
        for _ in 0..values.len() {
            coeffs.push(table[0].clone());
            table = table.windows(2).map(|w| &w[1] - &w[0]).collect();
        }
        Self::new(coeffs)
    }

    /// Converts a power-basis polynomial, failing if it is not integer-valued.
    pub fn from_standard(p: &RationalPolynomial) -> Result<Self> {
        let d = p.degree().max(0) as usize;
        let mut table: Vec<BigRational> = (0..=d)
            .map(|n| p.eval(&BigRational::from_integer(BigInt::from(n))))
            .collect();
        let mut coeffs = Vec::with_capacity(d + 1);
        for _ in 0..=d {
            let c = &table[0];
            if !c.is_integer() {
                return Err(Error::Domain(format!("`{p}` is not integer-valued")));
            }
            coeffs.push(c.to_integer());
            table = table.windows(2).map(|w| &w[1] - &w[0]).collect();
        }
        Ok(Self::new(coeffs))
    }

    /// Expands `∑ c_j C(n,j)` in the power basis.
    pub fn to_standard(&self) -> RationalPolynomial {
        let mut result = RationalPolynomial::zero();
        let mut falling = RationalPolynomial::constant(BigRational::one());
        let mut factorial = BigInt::one();
        for (j, c) in self.coeffs.iter().enumerate() {
            if j > 0 {
                factorial *= BigInt::from(j);
                let shift = RationalPolynomial::new(vec![
                    BigRational::from_integer(BigInt::from(-(j as i64 - 1))),
                    BigRational::one(),
                ]);
                falling = falling.mul(&shift);
            }
            if !c.is_zero() {
                result =
                    result.add(&falling.scale(&BigRational::new(c.clone(), factorial.clone())));
            }
        }
        result
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = BigInt::zero();
        Self::new(
            (0..len)
                .map(|i| self.coeffs.get(i).unwrap_or(&zero) + other.coeffs.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    pub fn scale(&self, s: &BigInt) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// The polynomial `n ↦ C(p(n), j)`, which is again integer-valued.
    pub fn binomial_of(&self, j: usize) -> Self {
        if j == 0 {
            return Self::constant(BigInt::one());
        }
        let deg = self.degree().max(0) as usize * j;
        let values: Vec<BigInt> = (0..=deg)
            .map(|n| binomial(&self.eval(&BigInt::from(n)), j))
            .collect();
        Self::from_values(&values)
    }

    /// Binomial-basis text form `[c0,c1,...]`.
    pub fn to_binomial_string(&self) -> String {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        format!("[{}]", parts.join(","))
    }
}

impl fmt::Display for IntegerPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_standard())
    }
}

impl FromStr for IntegerPolynomial {
    type Err = Error;

    /// Accepts either the binomial form `[c0,c1,...]` or a standard-basis string.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            if inner.trim().is_empty() {
                return Ok(Self::zero());
            }
            let coeffs = inner
                .split(',')
                .map(|c| {
                    BigInt::from_str(c.trim()).map_err(|_| {
                        Error::parse("polynomial", format!("bad binomial coefficient `{c}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(Self::new(coeffs));
        }
        Self::from_standard(&RationalPolynomial::from_str(t)?)
    }
}

/// Ordered, nonempty family `p_1, ..., p_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialFamily {
    polys: Vec<IntegerPolynomial>,
}

/// Outcome of [`PolynomialFamily::independence`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Independence {
    Independent,
    /// Coprime integer vector `m` (first nonzero entry positive) with `∑ m_j p_j` constant.
    Dependent(Vec<BigInt>),
}

impl Independence {
    pub fn is_independent(&self) -> bool {
        matches!(self, Independence::Independent)
    }

    pub fn witness(&self) -> Option<&[BigInt]> {
        match self {
            Independence::Independent => None,
            Independence::Dependent(m) => Some(m),
        }
    }
}

impl PolynomialFamily {
    pub fn new(polys: Vec<IntegerPolynomial>) -> Result<Self> {
        if polys.is_empty() {
            return Err(Error::Precondition(
                "polynomial family must be nonempty".into(),
            ));
        }
        Ok(Self { polys })
    }

    pub fn polys(&self) -> &[IntegerPolynomial] {
        &self.polys
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn max_degree(&self) -> isize {
        self.polys.iter().map(|p| p.degree()).max().unwrap_or(-1)
    }

    /// Decides independence by the rank of the nonconstant binomial coefficients.
    pub fn independence(&self) -> Independence {
        let k = self.polys.len();
        let width = self.max_degree().max(0) as usize;
        let mut rows = RationalMatrix::zeros(k, width);
        for (i, p) in self.polys.iter().enumerate() {
            for (j, c) in p.coeffs_binomial().iter().enumerate().skip(1) {
                rows.set(i, j - 1, BigRational::from_integer(c.clone()));
            }
        }
        if rows.rank() == k {
            return Independence::Independent;
        }
        let kernel = rows.transpose().kernel_basis();
        let v = kernel
            .first()
            .expect("rank deficiency implies a nonzero left kernel vector");
        Independence::Dependent(primitive_integer_vector(v))
    }

    /// `∑ m_j p_j` for an integer weight vector.
    pub fn combination(&self, m: &[BigInt]) -> IntegerPolynomial {
        self.polys
            .iter()
            .zip(m)
            .fold(IntegerPolynomial::zero(), |acc, (p, c)| {
                acc.add(&p.scale(c))
            })
    }
}

impl FromStr for PolynomialFamily {
    type Err = Error;

    /// Comma-separated list; commas inside `[...]` belong to binomial-form entries.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = Vec::new();
        let mut depth = 0usize;
        let mut cur = String::new();
        for ch in s.chars() {
            match ch {
                '[' => {
                    depth += 1;
                    cur.push(ch);
                }
                ']' => {
                    depth = depth.saturating_sub(1);
                    cur.push(ch);
                }
                ',' | ';' if depth == 0 => parts.push(std::mem::take(&mut cur)),
                _ => cur.push(ch),
            }
        }
        if !cur.trim().is_empty() || !parts.is_empty() {
            parts.push(cur);
        }
        let polys = parts
            .iter()
            .map(|p| IntegerPolynomial::from_str(p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(polys).map_err(|_| Error::parse("polys", "empty polynomial family"))
    }
}

impl fmt::Display for PolynomialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.polys.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Clears denominators, divides by the content and makes the first nonzero entry positive.
pub(crate) fn primitive_integer_vector(v: &[BigRational]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let mut ints: Vec<BigInt> = v.iter().map(|x| (x * &lcm).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() {
        for x in ints.iter_mut() {
            *x /= &g;
        }
    }
    if ints
        .iter()
        .find(|x| !x.is_zero())
        .is_some_and(|x| x.is_negative())
    {
        for x in ints.iter_mut() {
            *x = -x.clone();
        }
    }
    ints
}

/// Small helper for callers that only need machine-sized values.
pub fn to_i64_vec(v: &[BigInt]) -> Option<Vec<i64>> {
    v.iter().map(|x| x.to_i64()).collect()
}
