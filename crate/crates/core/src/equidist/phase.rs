//! Phase polynomials `R(n) = m · (T^{p_1(n)} x, ..., T^{p_k(n)} x)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::angle::{AngleValue, Registry};
use crate::error::{Error, Result};
use crate::polynomial::{IntegerPolynomial, PolynomialFamily};
use crate::torus::{matrix_apply, TorusPoint, UnipotentAffineMap};

/// Integer frequency on `𝕋^{dk}`, laid out point-major: entry `l·d + i` pairs
/// with coordinate `i` of `T^{p_l(n)} x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Frequency(pub Vec<i64>);

impl Frequency {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&m| m == 0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All nonzero frequencies of length `len` with `|m|∞ ≤ radius`, in lexicographic order.
    pub fn all_nonzero(len: usize, radius: i64) -> Vec<Frequency> {
        let width = 2 * radius + 1;
        let total = (width as usize).pow(len as u32);
        (0..total)
            .map(|mut idx| {
                let mut m = vec![0i64; len];
                for slot in m.iter_mut().rev() {
                    *slot = (idx % width as usize) as i64 - radius;
                    idx /= width as usize;
                }
                Frequency(m)
            })
            .filter(|f| !f.is_zero())
            .collect()
    }
}

impl std::str::FromStr for Frequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::parse("freq", format!("bad integer `{t}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Frequency)
    }
}

/// Coordinate label `(r, j)`: block `r` (0-based), level `j` with `j = 0`
/// standing for the block translation `b_r` and `j = 1..=d_r` for `x_{rj}`.
pub type BlockCoord = (usize, usize);

/// Witness that some `R_{rj}` is nonconstant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseWitness {
    pub r0: usize,
    pub j0: usize,
    /// `R_{r0, j0-1}`.
    pub poly: IntegerPolynomial,
    /// `R_{r0, j0-1} - ∑_l m_{r0 j0 l} p_l`, always constant.
    pub constant: BigInt,
}

/// `R(n) = ∑_{r,j} R_{rj}(n) x_{rj}` for a system in shear normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShearDecomposition {
    pub block_sizes: Vec<usize>,
    pub terms: BTreeMap<BlockCoord, IntegerPolynomial>,
    pub symbols: BTreeMap<BlockCoord, AngleValue>,
    pub witness: Option<PhaseWitness>,
}

impl ShearDecomposition {
    /// `∑ R_{rj}(n) x_{rj}` evaluated symbolically.
    pub fn eval(&self, n: &BigInt) -> AngleValue {
        self.terms
            .iter()
            .map(|(key, poly)| self.symbols[key].scale_int(&poly.eval(n)))
            .sum()
    }
}

/// Real polynomial with symbolic coefficients, `coeffs[i]` multiplying `n^i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhasePolynomial {
    coeffs: Vec<AngleValue>,
    decomposition: Option<ShearDecomposition>,
}

impl PhasePolynomial {
    pub fn new(mut coeffs: Vec<AngleValue>) -> Self {
        while coeffs.last().is_some_and(AngleValue::is_zero) {
            coeffs.pop();
        }
        Self {
            coeffs,
            decomposition: None,
        }
    }

    pub fn coeffs(&self) -> &[AngleValue] {
        &self.coeffs
    }

    pub fn decomposition(&self) -> Option<&ShearDecomposition> {
        self.decomposition.as_ref()
    }

    pub fn degree(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// No `n`-dependence at all.
    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn eval(&self, n: &BigInt) -> AngleValue {
        let n = BigRational::from_integer(n.clone());
        let mut acc = AngleValue::zero();
        for c in self.coeffs.iter().rev() {
            acc = &acc.scale(&n) + c;
        }
        acc
    }

    /// Coefficients in the binomial basis: `R(n) = ∑_e D_e C(n, e)`, `D_e = Δ^e R(0)`.
    pub fn binomial_coeffs(&self) -> Vec<AngleValue> {
        let len = self.coeffs.len();
        let mut table: Vec<AngleValue> = (0..len).map(|n| self.eval(&BigInt::from(n))).collect();
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(table[0].clone());
            table = table.windows(2).map(|w| &w[1] - &w[0]).collect();
        }
        out
    }

    /// Float shadow of `R(n)` mod 1 by exact substitution.
    pub fn shadow_at(&self, n: &BigInt, reg: &Registry) -> f64 {
        reg.shadow(&self.eval(n))
    }
}

/// True iff the coefficient of some `n^i`, `i ≥ 1`, has a nonzero generator part.
pub fn has_nonconstant_irrational_coeff(r: &PhasePolynomial) -> bool {
    r.coeffs.iter().skip(1).any(|c| !c.is_rational())
}

/// Expands `R(n) = ∑_{l,i} m_{l,i} (T^{p_l(n)} x)_i` using
/// `T^p x = ∑_e C(p, e) (N^e x + N^{e-1} b)`. When `T` is in shear normal form
/// with translation on the block tops only, the decomposition into
/// `R_{rj}` and the nonconstancy witness are attached.
pub fn build_phase_polynomial(
    t: &UnipotentAffineMap,
    x: &TorusPoint,
    polys: &PolynomialFamily,
    m: &Frequency,
) -> Result<PhasePolynomial> {
    let d = t.dim();
    let k = polys.len();
    if x.dim() != d {
        return Err(Error::Dimension(format!(
            "point has dimension {} but T acts on T^{d}",
            x.dim()
        )));
    }
    if m.len() != d * k {
        return Err(Error::Dimension(format!(
            "frequency has length {} but the product space has dimension {}",
            m.len(),
            d * k
        )));
    }
    let index = t.nilpotency_index();
    // v_e = N^e x + N^{e-1} b for e = 0..=index
    let mut v: Vec<Vec<AngleValue>> = Vec::with_capacity(index + 1);
    for e in 0..=index {
        let mut cur = match t.nil_power(e) {
            Some(ne) => matrix_apply(ne, x.coords()),
            None => vec![AngleValue::zero(); d],
        };
        if e >= 1 {
            if let Some(ne1) = t.nil_power(e - 1) {
                let nb = matrix_apply(ne1, t.translation());
                cur = cur.iter().zip(&nb).map(|(a, b)| a + b).collect();
            }
        }
        v.push(cur);
    }

    let mut coeffs: Vec<AngleValue> = Vec::new();
    for (l, p) in polys.polys().iter().enumerate() {
        let ml = &m.0[l * d..(l + 1) * d];
        if ml.iter().all(|&c| c == 0) {
            continue;
        }
        for (e, ve) in v.iter().enumerate() {
            let w: AngleValue = ml
                .iter()
                .zip(ve)
                .filter(|(c, _)| **c != 0)
                .map(|(c, a)| a.scale_i64(*c))
                .sum();
            if w.is_zero() {
                continue;
            }
            let poly = p.binomial_of(e).to_standard();
            for (i, c) in poly.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                if coeffs.len() <= i {
                    coeffs.resize(i + 1, AngleValue::zero());
                }
                coeffs[i] = &coeffs[i] + &w.scale(c);
            }
        }
    }
    let mut phase = PhasePolynomial::new(coeffs);
    if t.is_shear_form() {
        phase.decomposition = Some(decompose(t, x, polys, m));
    }
    Ok(phase)
}

fn decompose(
    t: &UnipotentAffineMap,
    x: &TorusPoint,
    polys: &PolynomialFamily,
    m: &Frequency,
) -> ShearDecomposition {
    let d = t.dim();
    let blocks = t.shear_blocks().expect("shear form has shear blocks");
    let mut terms = BTreeMap::new();
    let mut symbols = BTreeMap::new();
    let mut witness = None;
    let mut start = 0;
    for (r, &size) in blocks.iter().enumerate() {
        let weight = |j: usize, l: usize| m.0[l * d + start + j - 1];
        symbols.insert((r, 0), t.translation()[start].clone());
        for j in 1..=size {
            symbols.insert((r, j), x.coords()[start + j - 1].clone());
        }
        for j in 0..=size {
            let mut poly = IntegerPolynomial::zero();
            for jp in j.max(1)..=size {
                for (l, p) in polys.polys().iter().enumerate() {
                    let w = weight(jp, l);
                    if w != 0 {
                        poly = poly.add(&p.binomial_of(jp - j).scale(&BigInt::from(w)));
                    }
                }
            }
            if !poly.is_zero() {
                terms.insert((r, j), poly);
            }
        }
        if witness.is_none() {
            let top = (1..=size)
                .rev()
                .find(|&j| (0..polys.len()).any(|l| weight(j, l) != 0));
            if let Some(j0) = top {
                let poly = terms
                    .get(&(r, j0 - 1))
                    .cloned()
                    .unwrap_or_else(IntegerPolynomial::zero);
                let lead: Vec<BigInt> = (0..polys.len())
                    .map(|l| BigInt::from(weight(j0, l)))
                    .collect();
                let rest = poly.add(&polys.combination(&lead).scale(&BigInt::from(-1)));
                debug_assert!(rest.is_constant());
                let constant = rest.coeffs_binomial().first().cloned().unwrap_or_default();
                witness = Some(PhaseWitness {
                    r0: r,
                    j0,
                    poly,
                    constant,
                });
            }
        }
        start += size;
    }
    ShearDecomposition {
        block_sizes: blocks,
        terms,
        symbols,
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{shear_jordan, RationalMatrix};
    use crate::torus::sample_generic_point;

    fn skew_product(reg: &Registry) -> (UnipotentAffineMap, AngleValue) {
        let alpha = AngleValue::generator(reg.mint(Some("alpha")).unwrap());
        let a = RationalMatrix::from_ints(&[vec![1, 0], vec![2, 1]]);
        (
            UnipotentAffineMap::new(a, vec![alpha.clone(), alpha.clone()]).unwrap(),
            alpha,
        )
    }

    #[test]
    fn counterexample_phase_vanishes() {
        let reg = Registry::new();
        let (t, _) = skew_product(&reg);
        let polys: PolynomialFamily = "n,n^2".parse().unwrap();
        let r = build_phase_polynomial(
            &t,
            &TorusPoint::origin(2),
            &polys,
            &Frequency(vec![0, 1, -1, 0]),
        )
        .unwrap();
        assert!(r.is_zero());
        assert!(!has_nonconstant_irrational_coeff(&r));
        let zero =
            build_phase_polynomial(&t, &TorusPoint::origin(2), &polys, &Frequency(vec![0; 4]))
                .unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn rotation_phase_is_linear() {
        let reg = Registry::new();
        let alpha = AngleValue::generator(reg.mint(None).unwrap());
        let t = UnipotentAffineMap::rotation(vec![alpha.clone()]).unwrap();
        let x = sample_generic_point(1, &reg).unwrap();
        let polys: PolynomialFamily = "n".parse().unwrap();
        let r = build_phase_polynomial(&t, &x, &polys, &Frequency(vec![1])).unwrap();
        assert_eq!(r.coeffs(), &[x.coords()[0].clone(), alpha]);
        assert!(has_nonconstant_irrational_coeff(&r));
        let dec = r.decomposition().unwrap();
        assert_eq!(
            dec.witness.as_ref().unwrap().poly,
            IntegerPolynomial::identity()
        );
    }

    #[test]
    fn irrationality_detection() {
        let reg = Registry::new();
        let alpha = AngleValue::generator(reg.mint(None).unwrap());
        let g0 = AngleValue::generator(reg.mint(None).unwrap());
        assert!(has_nonconstant_irrational_coeff(&PhasePolynomial::new(
            vec![AngleValue::zero(), alpha]
        )));
        assert!(!has_nonconstant_irrational_coeff(&PhasePolynomial::new(
            vec![g0, AngleValue::from_ratio(1, 2)]
        )));
    }

    #[test]
    fn decomposition_reconstructs_and_witness_matches_formula() {
        let reg = Registry::new();
        let b1 = AngleValue::generator(reg.mint(None).unwrap());
        let b2 = AngleValue::generator(reg.mint(None).unwrap());
        let j = shear_jordan(&[3, 1]);
        let t = UnipotentAffineMap::new(j, vec![b1, AngleValue::zero(), AngleValue::zero(), b2])
            .unwrap();
        assert!(t.is_shear_form());
        let x = sample_generic_point(4, &reg).unwrap();
        let polys: PolynomialFamily = "n^2,n^3+n".parse().unwrap();
        let m = Frequency(vec![1, -2, 0, 3, 0, 1, 0, -1]);
        let r = build_phase_polynomial(&t, &x, &polys, &m).unwrap();
        let dec = r.decomposition().unwrap();
        for n in 0..=r.degree().max(0) + 2 {
            let n = BigInt::from(n);
            assert_eq!(dec.eval(&n), r.eval(&n));
        }
        let w = dec.witness.as_ref().unwrap();
        assert_eq!((w.r0, w.j0), (0, 2));
        // R_{r0, j0-1} = ∑_l m_{r0 j0 l} p_l + ∑_l m_{r0 (j0-1) l}
        let lead = polys.combination(&[BigInt::from(-2), BigInt::from(1)]);
        assert_eq!(
            w.poly,
            lead.add(&IntegerPolynomial::constant(BigInt::from(1)))
        );
        assert_eq!(w.constant, BigInt::from(1));
        assert!(!w.poly.is_constant());
    }

    #[test]
    fn dimension_mismatch() {
        let reg = Registry::new();
        let (t, _) = skew_product(&reg);
        let polys: PolynomialFamily = "n,n^2".parse().unwrap();
        assert!(
            build_phase_polynomial(&t, &TorusPoint::origin(2), &polys, &Frequency(vec![1, 0]))
                .is_err()
        );
        assert!(
            build_phase_polynomial(&t, &TorusPoint::origin(3), &polys, &Frequency(vec![0; 4]))
                .is_err()
        );
    }

    #[test]
    fn frequency_enumeration() {
        let all = Frequency::all_nonzero(4, 2);
        assert_eq!(all.len(), 624);
        assert!(all.iter().all(|f| !f.is_zero()));
        assert_eq!(
            "(0,1,-1,0)".parse::<Frequency>().unwrap(),
            Frequency(vec![0, 1, -1, 0])
        );
    }
}
