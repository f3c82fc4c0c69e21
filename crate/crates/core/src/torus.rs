//! Unipotent affine maps `T(x) = Ax + b` on `𝕋^d` with exact symbolic coordinates.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::algebra::{
    integer_kernel, shear_blocks, unipotency_index, unipotent_canonical_form, RationalMatrix,
    UnipotentReduction,
};
use crate::angle::{AngleValue, GenId, Registry};
use crate::error::{Error, Result};
use crate::polynomial::binomial;

/// Point of `𝕋^d`; rational parts of the coordinates are kept in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TorusPoint {
    coords: Vec<AngleValue>,
}

impl TorusPoint {
    pub fn new(coords: Vec<AngleValue>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Dimension("torus points need d >= 1".into()));
        }
        Ok(Self {
            coords: coords.iter().map(AngleValue::reduced).collect(),
        })
    }

    pub fn origin(d: usize) -> Self {
        Self {
            coords: vec![AngleValue::zero(); d.max(1)],
        }
    }

    pub fn coords(&self) -> &[AngleValue] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn shadows(&self, reg: &Registry) -> Vec<f64> {
        self.coords.iter().map(|c| reg.shadow(c)).collect()
    }

    pub fn translate(&self, t: &[AngleValue]) -> Result<Self> {
        if t.len() != self.dim() {
            return Err(Error::Dimension(
                "translation length differs from point dimension".into(),
            ));
        }
        Self::new(self.coords.iter().zip(t).map(|(a, b)| a + b).collect())
    }
}

/// `M v` for an integer matrix acting on symbolic coordinates.
pub fn matrix_apply(m: &RationalMatrix, v: &[AngleValue]) -> Vec<AngleValue> {
    (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .zip(v)
                .filter(|(c, _)| !c.is_zero())
                .map(|(c, x)| x.scale(c))
                .sum()
        })
        .collect()
}

/// `T(x) = A x + b` with `A` a unipotent integer matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnipotentAffineMap {
    a: RationalMatrix,
    b: Vec<AngleValue>,
    index: usize,
    // N^0, N^1, ..., N^{index-1} with N = A - I
    nil_powers: Vec<RationalMatrix>,
}

impl UnipotentAffineMap {
    pub fn new(a: RationalMatrix, b: Vec<AngleValue>) -> Result<Self> {
        let index = unipotency_index(&a)?
            .ok_or_else(|| Error::Domain("linear part is not unipotent".into()))?;
        if !a.is_integer() {
            return Err(Error::Domain(
                "linear part must have integer entries".into(),
            ));
        }
        if b.len() != a.rows() {
            return Err(Error::Dimension(format!(
                "translation has length {} but the matrix is {}x{}",
                b.len(),
                a.rows(),
                a.cols()
            )));
        }
        let n = a.sub(&RationalMatrix::identity(a.rows()))?;
        let mut nil_powers = vec![RationalMatrix::identity(a.rows())];
        for _ in 1..index {
            let next = nil_powers.last().expect("nonempty").mul(&n)?;
            nil_powers.push(next);
        }
        Ok(Self {
            a,
            b,
            index,
            nil_powers,
        })
    }

    /// Rotation `x ↦ x + b` on `𝕋^d`.
    pub fn rotation(b: Vec<AngleValue>) -> Result<Self> {
        Self::new(RationalMatrix::identity(b.len().max(1)), b)
    }

    pub fn matrix(&self) -> &RationalMatrix {
        &self.a
    }

    pub fn translation(&self) -> &[AngleValue] {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// Least `k` with `(A - I)^k = 0`.
    pub fn nilpotency_index(&self) -> usize {
        self.index
    }

    /// `N^j` for `j < index`, zero beyond.
    pub fn nil_power(&self, j: usize) -> Option<&RationalMatrix> {
        self.nil_powers.get(j)
    }

    fn check_dim(&self, x: &TorusPoint) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "point of dimension {} for a map on T^{}",
                x.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, x: &TorusPoint) -> Result<TorusPoint> {
        self.check_dim(x)?;
        let ax = matrix_apply(&self.a, x.coords());
        TorusPoint::new(ax.iter().zip(&self.b).map(|(u, v)| u + v).collect())
    }

    /// `T^n x = ∑_j C(n,j) N^j x + C(n,j+1) N^j b`; cost independent of `n`.
    /// Negative `n` iterates the exact inverse map.
    pub fn iterate_closed_form(&self, n: &BigInt, x: &TorusPoint) -> Result<TorusPoint> {
        self.check_dim(x)?;
        if n.is_negative() {
            return self.inverse().iterate_closed_form(&-n, x);
        }
        let d = self.dim();
        let mut acc = vec![AngleValue::zero(); d];
        for (j, nj) in self.nil_powers.iter().enumerate() {
            let cx = BigRational::from_integer(binomial(n, j));
            let cb = BigRational::from_integer(binomial(n, j + 1));
            let njx = matrix_apply(nj, x.coords());
            let njb = matrix_apply(nj, &self.b);
            for i in 0..d {
                if !cx.is_zero() && !njx[i].is_zero() {
                    acc[i] = &acc[i] + &njx[i].scale(&cx);
                }
                if !cb.is_zero() && !njb[i].is_zero() {
                    acc[i] = &acc[i] + &njb[i].scale(&cb);
                }
            }
        }
        TorusPoint::new(acc)
    }

    pub fn iterate(&self, n: i64, x: &TorusPoint) -> Result<TorusPoint> {
        self.iterate_closed_form(&BigInt::from(n), x)
    }

    /// `T^{-1}(x) = A^{-1} x - A^{-1} b`, with `A^{-1} = ∑ (-1)^j N^j` integral.
    pub fn inverse(&self) -> Self {
        let d = self.dim();
        let mut inv = RationalMatrix::zeros(d, d);
        for (j, nj) in self.nil_powers.iter().enumerate() {
            let s = if j % 2 == 0 {
                BigRational::one()
            } else {
                -BigRational::one()
            };
            inv = inv.add(&nj.scale(&s)).expect("same shape");
        }
        let b = matrix_apply(&inv, &self.b)
            .into_iter()
            .map(|v| -v)
            .collect();
        Self::new(inv, b).expect("inverse of a unipotent integer matrix is unipotent and integral")
    }

    /// The map `T^q` built explicitly: `A^q`, `∑_{i<q} A^i b`.
    pub fn power(&self, q: usize) -> Self {
        let d = self.dim();
        let mut aq = RationalMatrix::identity(d);
        let mut bq = vec![AngleValue::zero(); d];
        for _ in 0..q {
            let ab = matrix_apply(&self.a, &bq);
            bq = ab.iter().zip(&self.b).map(|(u, v)| u + v).collect();
            aq = self.a.mul(&aq).expect("square");
        }
        Self::new(aq, bq).expect("powers of unipotent maps are unipotent")
    }

    /// Shear block sizes when `A` is in lower-shear normal form.
    pub fn shear_blocks(&self) -> Option<Vec<usize>> {
        shear_blocks(&self.a)
    }

    /// True when `A` is shear-normal and `b` vanishes off the block tops.
    pub fn is_shear_form(&self) -> bool {
        let Some(blocks) = self.shear_blocks() else {
            return false;
        };
        let mut start = 0;
        for s in blocks {
            if (start + 1..start + s).any(|i| !self.b[i].is_zero()) {
                return false;
            }
            start += s;
        }
        true
    }

    /// Jordan reduction `P T = S P` with `S(y) = J y + P b`, followed by the
    /// translation change of variables that leaves only the block tops moving.
    pub fn shear_reduction(&self) -> Result<AffineReduction> {
        let reduction = unipotent_canonical_form(&self.a)?;
        let c = matrix_apply(&reduction.p, &self.b);
        let normalized = normalize_shear(&reduction.j, &c)?;
        Ok(AffineReduction {
            reduction,
            c,
            normalized,
        })
    }
}

/// Output of [`UnipotentAffineMap::shear_reduction`].
#[derive(Clone, Debug)]
pub struct AffineReduction {
    pub reduction: UnipotentReduction,
    /// `c = P b`, the translation of `S(y) = J y + c`.
    pub c: Vec<AngleValue>,
    pub normalized: ShearNormalization,
}

impl AffineReduction {
    /// The torus epimorphism `y = P x mod 1`.
    pub fn project(&self, x: &TorusPoint) -> Result<TorusPoint> {
        TorusPoint::new(matrix_apply(&self.reduction.p, x.coords()))
    }

    pub fn shear_map(&self) -> Result<UnipotentAffineMap> {
        UnipotentAffineMap::new(self.reduction.j.clone(), self.c.clone())
    }
}

/// A shear system `S_r(x_{r1},...) = (x_{r1} + b_r, x_{r2} + x_{r1}, ...)`
/// together with the offsets `a` that conjugate `y ↦ J y + c` onto it.
#[derive(Clone, Debug)]
pub struct ShearNormalization {
    pub block_sizes: Vec<usize>,
    /// `b_r`, the translation on the top coordinate of block `r`.
    pub tops: Vec<AngleValue>,
    /// New coordinates are `z = y - offsets`.
    pub offsets: Vec<AngleValue>,
    pub map: UnipotentAffineMap,
}

/// Solves `(J - I) a + c = (b_1, 0, ..., b_2, 0, ...)` block by block:
/// `a_{i-1} = -c_i` inside each block and the last offset of a block is 0.
pub fn normalize_shear(j: &RationalMatrix, c: &[AngleValue]) -> Result<ShearNormalization> {
    let block_sizes = shear_blocks(j)
        .ok_or_else(|| Error::Domain("matrix is not in shear normal form".into()))?;
    if c.len() != j.rows() {
        return Err(Error::Dimension(
            "translation length differs from matrix size".into(),
        ));
    }
    let d = c.len();
    let mut offsets = vec![AngleValue::zero(); d];
    let mut b = vec![AngleValue::zero(); d];
    let mut tops = Vec::with_capacity(block_sizes.len());
    let mut start = 0;
    for &s in &block_sizes {
        b[start] = c[start].reduced();
        tops.push(b[start].clone());
        for i in 1..s {
            offsets[start + i - 1] = (-&c[start + i]).reduced();
        }
        start += s;
    }
    let map = UnipotentAffineMap::new(j.clone(), b)?;
    Ok(ShearNormalization {
        block_sizes,
        tops,
        offsets,
        map,
    })
}

/// Integer basis (Hermite form) of the fixed characters `{m : Aᵀ m = m}`.
pub fn fixed_character_lattice(a: &RationalMatrix) -> Result<Vec<Vec<BigInt>>> {
    if !a.is_square() {
        return Err(Error::Dimension(
            "fixed characters need a square matrix".into(),
        ));
    }
    integer_kernel(&a.transpose().sub(&RationalMatrix::identity(a.rows()))?)
}

/// Hahn's criterion: ergodic iff `m·b` is irrational for every nonzero fixed
/// character `m`. With `M` the lattice basis and `G` the map from `m` to the
/// generator part of `m·b`, that is full column rank of `G M` over ℚ: a
/// rational kernel vector scales to an integer one with `m·b` rational, and
/// then a further multiple has `χ(b) = 1`.
pub fn is_ergodic(t: &UnipotentAffineMap) -> Result<bool> {
    let lattice = fixed_character_lattice(t.matrix())?;
    if lattice.is_empty() {
        return Ok(true);
    }
    let gens: Vec<GenId> = t
        .translation()
        .iter()
        .flat_map(|v| v.generator_part().keys().copied())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if gens.is_empty() {
        return Ok(false);
    }
    let rows: Vec<Vec<BigRational>> = gens
        .iter()
        .map(|g| {
            lattice
                .iter()
                .map(|m| {
                    m.iter()
                        .zip(t.translation())
                        .map(|(mi, bi)| BigRational::from_integer(mi.clone()) * bi.coefficient(*g))
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(RationalMatrix::from_rows(rows)?.rank() == lattice.len())
}

/// Total ergodicity equals ergodicity for unipotent affine maps: for a fixed
/// character `m` the translation part of `T^q` pairs to `q (m·b)`, and
/// `ker((A^q)ᵀ - I) = ker(Aᵀ - I)` because `I + A + ... + A^{q-1}` is
/// invertible over ℚ when `A` is unipotent.
pub fn is_totally_ergodic(t: &UnipotentAffineMap) -> Result<bool> {
    is_ergodic(t)
}

/// A point whose coordinates are fresh generators.
pub fn sample_generic_point(d: usize, reg: &Registry) -> Result<TorusPoint> {
    let coords = (0..d)
        .map(|_| reg.mint(None).map(AngleValue::generator))
        .collect::<Result<Vec<_>>>()?;
    TorusPoint::new(coords)
}

/// Orbit shadows `x, T x, ..., T^steps x`.
pub fn orbit_shadows(
    t: &UnipotentAffineMap,
    x: &TorusPoint,
    steps: usize,
    reg: &Registry,
) -> Result<Vec<Vec<f64>>> {
    let mut cur = x.clone();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(cur.shadows(reg));
    for _ in 0..steps {
        cur = t.apply(&cur)?;
        out.push(cur.shadows(reg));
    }
    Ok(out)
}

/// Circle distance `min(|a-b| mod 1, 1 - |a-b| mod 1)`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skew_product(reg: &Registry) -> (UnipotentAffineMap, AngleValue) {
        let alpha = AngleValue::generator(reg.mint(Some("alpha")).unwrap());
        let a = RationalMatrix::from_ints(&[vec![1, 0], vec![2, 1]]);
        (
            UnipotentAffineMap::new(a, vec![alpha.clone(), alpha.clone()]).unwrap(),
            alpha,
        )
    }

    #[test]
    fn apply_examples() {
        let reg = Registry::new();
        let (t, alpha) = skew_product(&reg);
        let y = t.apply(&TorusPoint::origin(2)).unwrap();
        assert_eq!(y.coords(), &[alpha.clone(), alpha.clone()]);

        let x1 = AngleValue::generator(reg.mint(None).unwrap());
        let x2 = AngleValue::generator(reg.mint(None).unwrap());
        let x = TorusPoint::new(vec![x1.clone(), x2.clone()]).unwrap();
        let y = t.apply(&x).unwrap();
        assert_eq!(y.coords()[0], &x1 + &alpha);
        assert_eq!(y.coords()[1], &(&x2 + &x1.scale_i64(2)) + &alpha);

        let id = UnipotentAffineMap::rotation(vec![AngleValue::zero(); 2]).unwrap();
        assert_eq!(id.apply(&x).unwrap(), x);
    }

    #[test]
    fn closed_form_matches_worked_orbit() {
        let reg = Registry::new();
        let (t, alpha) = skew_product(&reg);
        let origin = TorusPoint::origin(2);
        for n in [0i64, 1, 2, 7, 1000] {
            let y = t.iterate(n, &origin).unwrap();
            let expect = TorusPoint::new(vec![alpha.scale_i64(n), alpha.scale_i64(n * n)]).unwrap();
            assert_eq!(y, expect, "n = {n}");
        }
        let x = sample_generic_point(2, &reg).unwrap();
        assert_eq!(t.iterate(0, &x).unwrap(), x);
        assert_eq!(t.iterate(1, &x).unwrap(), t.apply(&x).unwrap());
    }

    #[test]
    fn negative_iterates_invert() {
        let reg = Registry::new();
        let (t, _) = skew_product(&reg);
        let x = sample_generic_point(2, &reg).unwrap();
        let y = t.iterate(5, &x).unwrap();
        assert_eq!(t.iterate(-5, &y).unwrap(), x);
        assert_eq!(t.inverse().apply(&t.apply(&x).unwrap()).unwrap(), x);
    }

    #[test]
    fn dimension_errors() {
        let reg = Registry::new();
        let (t, _) = skew_product(&reg);
        assert!(matches!(
            t.apply(&TorusPoint::origin(3)),
            Err(Error::Dimension(_))
        ));
        let a = RationalMatrix::from_ints(&[vec![1, 0], vec![1, 1]]);
        assert!(UnipotentAffineMap::new(a, vec![AngleValue::zero()]).is_err());
        let hyper = RationalMatrix::from_ints(&[vec![2, 1], vec![1, 1]]);
        assert!(matches!(
            UnipotentAffineMap::new(hyper, vec![AngleValue::zero(); 2]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn normalize_shear_examples() {
        let reg = Registry::new();
        let beta = AngleValue::generator(reg.mint(None).unwrap());
        let gamma = AngleValue::generator(reg.mint(None).unwrap());
        let j = crate::algebra::shear_jordan(&[2]);
        let norm = normalize_shear(&j, &[beta.clone(), gamma.clone()]).unwrap();
        assert_eq!(norm.tops, vec![beta.clone()]);
        assert_eq!(norm.offsets, vec![-&gamma, AngleValue::zero()]);
        // S(z + a) - a == S_norm(z) for a generic z
        let s = UnipotentAffineMap::new(j.clone(), vec![beta.clone(), gamma.clone()]).unwrap();
        let z = sample_generic_point(2, &reg).unwrap();
        let lhs = s
            .apply(&z.translate(&norm.offsets).unwrap())
            .unwrap()
            .translate(&norm.offsets.iter().map(|o| -o).collect::<Vec<_>>())
            .unwrap();
        assert_eq!(lhs, norm.map.apply(&z).unwrap());

        let zero = normalize_shear(&j, &[AngleValue::zero(), AngleValue::zero()]).unwrap();
        assert!(zero.offsets.iter().all(AngleValue::is_zero));

        let id = RationalMatrix::identity(2);
        let rot = normalize_shear(&id, &[beta.clone(), gamma.clone()]).unwrap();
        assert!(rot.offsets.iter().all(AngleValue::is_zero));
        assert_eq!(rot.tops, vec![beta, gamma]);

        let bad = RationalMatrix::from_ints(&[vec![1, 0], vec![2, 1]]);
        assert!(matches!(
            normalize_shear(&bad, &[AngleValue::zero(), AngleValue::zero()]),
            Err(Error::Domain(_))
        ));
    }

    fn brute_fixed(a: &RationalMatrix, radius: i64) -> Vec<Vec<i64>> {
        let d = a.rows();
        let at = a.transpose();
        let mut out = Vec::new();
        let total = (2 * radius + 1).pow(d as u32);
        for idx in 0..total {
            let mut m = Vec::with_capacity(d);
            let mut r = idx;
            for _ in 0..d {
                m.push(r % (2 * radius + 1) - radius);
                r /= 2 * radius + 1;
            }
            let mv: Vec<BigRational> = m
                .iter()
                .map(|&x| BigRational::from_integer(x.into()))
                .collect();
            if at.mul_vec(&mv).unwrap() == mv {
                out.push(m);
            }
        }
        out
    }

    fn in_lattice(basis: &[Vec<BigInt>], m: &[i64]) -> bool {
        // the basis is in Hermite form, so solve by forward substitution on pivots
        let mut rest: Vec<BigInt> = m.iter().map(|&x| BigInt::from(x)).collect();
        for row in basis {
            let Some(p) = row.iter().position(|x| !x.is_zero()) else {
                continue;
            };
            if &rest[p] % &row[p] != BigInt::zero() {
                return false;
            }
            let f = &rest[p] / &row[p];
            for (r, b) in rest.iter_mut().zip(row) {
                *r -= &f * b;
            }
        }
        rest.iter().all(Zero::is_zero)
    }

    #[test]
    fn fixed_lattice_matches_brute_force() {
        let shear = RationalMatrix::from_ints(&[vec![1, 0], vec![1, 1]]);
        let basis = fixed_character_lattice(&shear).unwrap();
        assert_eq!(basis, vec![vec![BigInt::from(1), BigInt::from(0)]]);
        for a in [
            shear,
            RationalMatrix::identity(2),
            crate::algebra::shear_jordan(&[3]),
            crate::algebra::shear_jordan(&[2, 1]),
            RationalMatrix::from_ints(&[vec![1, 0, 0], vec![2, 1, 0], vec![4, 4, 1]]),
        ] {
            let basis = fixed_character_lattice(&a).unwrap();
            let brute = brute_fixed(&a, 3);
            let total = 7i64.pow(a.rows() as u32) as usize;
            for idx in 0..total {
                let mut m = Vec::new();
                let mut r = idx as i64;
                for _ in 0..a.rows() {
                    m.push(r % 7 - 3);
                    r /= 7;
                }
                assert_eq!(brute.contains(&m), in_lattice(&basis, &m), "{m:?} for {a}");
            }
        }
        assert_eq!(
            fixed_character_lattice(&RationalMatrix::identity(3))
                .unwrap()
                .len(),
            3
        );
        assert_eq!(
            fixed_character_lattice(&crate::algebra::shear_jordan(&[4]))
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn ergodicity_examples() {
        let reg = Registry::new();
        let half = UnipotentAffineMap::rotation(vec![AngleValue::from_ratio(1, 2)]).unwrap();
        assert!(!is_ergodic(&half).unwrap());
        assert!(!is_totally_ergodic(&half).unwrap());

        let alpha = AngleValue::generator(reg.mint(None).unwrap());
        let shear = UnipotentAffineMap::new(
            crate::algebra::shear_jordan(&[3]),
            vec![alpha.clone(), AngleValue::zero(), AngleValue::zero()],
        )
        .unwrap();
        assert!(is_ergodic(&shear).unwrap());

        let twin = UnipotentAffineMap::new(
            crate::algebra::shear_jordan(&[2, 2]),
            vec![
                alpha.clone(),
                AngleValue::zero(),
                alpha.clone(),
                AngleValue::zero(),
            ],
        )
        .unwrap();
        assert!(!is_ergodic(&twin).unwrap());

        let (ex4, _) = skew_product(&reg);
        assert!(is_totally_ergodic(&ex4).unwrap());
        assert!(is_ergodic(&ex4.power(4)).unwrap());
    }

    #[test]
    fn generic_points_are_fresh() {
        let reg = Registry::new();
        let alpha = AngleValue::generator(reg.mint(None).unwrap());
        let x = sample_generic_point(2, &reg).unwrap();
        let y = sample_generic_point(2, &reg).unwrap();
        let gx: Vec<_> = x
            .coords()
            .iter()
            .flat_map(|c| c.generator_part().keys().copied())
            .collect();
        let gy: Vec<_> = y
            .coords()
            .iter()
            .flat_map(|c| c.generator_part().keys().copied())
            .collect();
        assert!(gx.iter().all(|g| !gy.contains(g)));
        let mut all = x.coords().to_vec();
        all.push(alpha);
        assert!(crate::angle::rationally_independent(&all));
        let closed = Registry::without_minting();
        assert!(matches!(
            sample_generic_point(1, &closed),
            Err(Error::RegistryExhausted(_))
        ));
    }

    #[test]
    fn circle_distance_wraps() {
        assert!((circle_distance(0.99, 0.01) - 0.02).abs() < 1e-12);
        assert_eq!(circle_distance(0.3, 0.3), 0.0);
    }
}
