//! The two example nilpotent groups on `ℤ × ℝ^2` and `ℤ × ℝ^3`, their lattice
//! quotients, and the conjugacy of nilrotations to unipotent affine torus maps.
//!
//! Real coordinates are exact [`AngleValue`]s without reduction mod 1.
//! Fundamental domains are chosen coordinatewise on the rational parts:
//! `[0, 1)` for integer lattice directions and `[0, 1/2)` for the half-integer
//! direction of the second group. Generator parts are carried unchanged.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::algebra::RationalMatrix;
use crate::angle::AngleValue;
use crate::error::Result;
use crate::torus::{TorusPoint, UnipotentAffineMap};

/// Factorization `g = g0 · γ` with `g0` in the identity component and `γ ∈ Γ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetRepr<G> {
    pub g0: G,
    pub gamma: G,
}

/// Group operations shared by the two examples.
pub trait NilGroup: Clone + PartialEq + std::fmt::Debug {
    /// Dimension of the identity component (and of the target torus).
    const DIM: usize;

    fn identity() -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn inv(&self) -> Self;
    fn discrete(&self) -> i64;
    /// Real coordinates `x_1, ..., x_DIM`.
    fn reals(&self) -> Vec<AngleValue>;
    fn from_parts(m: i64, reals: Vec<AngleValue>) -> Self;
    /// Unique factorization with `g0` in the fundamental domain.
    fn phi(&self) -> CosetRepr<Self>;
    fn in_lattice(&self) -> bool;
    /// The isomorphism `ψ : G0/Γ0 → 𝕋^DIM` as a diagonal integer scaling.
    fn psi_scale() -> Vec<i64>;

    /// Commutator `[g, h] = g⁻¹ h⁻¹ g h`.
    fn commutator(&self, other: &Self) -> Self {
        self.inv().mul(&other.inv()).mul(self).mul(other)
    }

    /// `ψ(g0)` as a point on the torus.
    fn psi(g0: &Self) -> Result<TorusPoint> {
        let coords = g0
            .reals()
            .iter()
            .zip(Self::psi_scale())
            .map(|(x, s)| x.scale_i64(s))
            .collect();
        TorusPoint::new(coords)
    }

    /// `ψ ∘ T'_a ∘ ψ⁻¹` where `T'_a(g0) = a0 γ g0 γ⁻¹` and `a = a0 γ`.
    ///
    /// The linear part is read off by conjugating unit vectors of `G0`; the
    /// conjugation only depends on the discrete coordinate of `γ`.
    fn conjugated_affine(a: &Self) -> Result<UnipotentAffineMap> {
        let CosetRepr { g0: a0, gamma } = a.phi();
        let gamma_inv = gamma.inv();
        let d = Self::DIM;
        let scale = Self::psi_scale();
        let mut cols = Vec::with_capacity(d);
        for i in 0..d {
            let mut e = vec![AngleValue::zero(); d];
            e[i] = AngleValue::from_ratio(1, 1);
            let conj = gamma.mul(&Self::from_parts(0, e)).mul(&gamma_inv);
            cols.push(conj.reals());
        }
        let mut lin = RationalMatrix::zeros(d, d);
        for (j, col) in cols.iter().enumerate() {
            for (i, entry) in col.iter().enumerate() {
                debug_assert!(entry.is_rational());
                // ψ C ψ⁻¹ has entries s_i C_ij / s_j
                let v = entry.rational_part() * BigRational::new(scale[i].into(), scale[j].into());
                lin.set(i, j, v);
            }
        }
        let b = a0
            .reals()
            .iter()
            .zip(&scale)
            .map(|(x, &s)| x.scale_i64(s))
            .collect();
        UnipotentAffineMap::new(lin, b)
    }
}

/// Element `(m, x1, x2)` of `ℤ × ℝ^2` with
/// `(m, x1, x2)(n, y1, y2) = (m + n, x1 + y1, x2 + y2 + m y1)`; `Γ = ℤ^3`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NilElement1 {
    pub m: i64,
    pub x1: AngleValue,
    pub x2: AngleValue,
}

impl NilElement1 {
    pub fn new(m: i64, x1: AngleValue, x2: AngleValue) -> Self {
        Self { m, x1, x2 }
    }
}

impl NilGroup for NilElement1 {
    const DIM: usize = 2;

    fn identity() -> Self {
        Self::new(0, AngleValue::zero(), AngleValue::zero())
    }

    fn mul(&self, o: &Self) -> Self {
        Self {
            m: self.m + o.m,
            x1: &self.x1 + &o.x1,
            x2: &(&self.x2 + &o.x2) + &o.x1.scale_i64(self.m),
        }
    }

    fn inv(&self) -> Self {
        Self {
            m: -self.m,
            x1: -&self.x1,
            x2: &self.x1.scale_i64(self.m) - &self.x2,
        }
    }

    fn discrete(&self) -> i64 {
        self.m
    }

    fn reals(&self) -> Vec<AngleValue> {
        vec![self.x1.clone(), self.x2.clone()]
    }

    fn from_parts(m: i64, r: Vec<AngleValue>) -> Self {
        Self::new(m, r[0].clone(), r[1].clone())
    }

    fn phi(&self) -> CosetRepr<Self> {
        // g0 · (m, k1, k2) = (m, y1 + k1, y2 + k2) since g0 has zero discrete part
        let k1 = self.x1.rational_floor();
        let k2 = self.x2.rational_floor();
        let g0 = Self::new(0, &self.x1 - &int_angle(&k1), &self.x2 - &int_angle(&k2));
        let gamma = Self::new(self.m, int_angle(&k1), int_angle(&k2));
        CosetRepr { g0, gamma }
    }

    fn in_lattice(&self) -> bool {
        [&self.x1, &self.x2]
            .iter()
            .all(|x| x.is_rational() && x.rational_part().is_integer())
    }

    fn psi_scale() -> Vec<i64> {
        vec![1, 1]
    }
}

/// Element `(m, x1, x2, x3)` of `ℤ × ℝ^3` with
/// `x3 + y3 + m y2 + m²/2 y1` in the last slot; `Γ = ℤ × ℤ × ℤ × ½ℤ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NilElement2 {
    pub m: i64,
    pub x1: AngleValue,
    pub x2: AngleValue,
    pub x3: AngleValue,
}

impl NilElement2 {
    pub fn new(m: i64, x1: AngleValue, x2: AngleValue, x3: AngleValue) -> Self {
        Self { m, x1, x2, x3 }
    }
}

fn int_angle(k: &BigInt) -> AngleValue {
    AngleValue::rational(BigRational::from_integer(k.clone()))
}

impl NilGroup for NilElement2 {
    const DIM: usize = 3;

    fn identity() -> Self {
        Self::new(
            0,
            AngleValue::zero(),
            AngleValue::zero(),
            AngleValue::zero(),
        )
    }

    fn mul(&self, o: &Self) -> Self {
        let half_m2 = BigRational::new(BigInt::from(self.m * self.m), BigInt::from(2));
        Self {
            m: self.m + o.m,
            x1: &self.x1 + &o.x1,
            x2: &(&self.x2 + &o.x2) + &o.x1.scale_i64(self.m),
            x3: &(&(&self.x3 + &o.x3) + &o.x2.scale_i64(self.m)) + &o.x1.scale(&half_m2),
        }
    }

    fn inv(&self) -> Self {
        // solve g · h = e coordinate by coordinate
        let m = self.m;
        let y1 = -&self.x1;
        let y2 = &self.x1.scale_i64(m) - &self.x2;
        let half_m2 = BigRational::new(BigInt::from(m * m), BigInt::from(2));
        let y3 = -&(&(&self.x3 + &y2.scale_i64(m)) + &y1.scale(&half_m2));
        Self::new(-m, y1, y2, y3)
    }

    fn discrete(&self) -> i64 {
        self.m
    }

    fn reals(&self) -> Vec<AngleValue> {
        vec![self.x1.clone(), self.x2.clone(), self.x3.clone()]
    }

    fn from_parts(m: i64, r: Vec<AngleValue>) -> Self {
        Self::new(m, r[0].clone(), r[1].clone(), r[2].clone())
    }

    fn phi(&self) -> CosetRepr<Self> {
        let k1 = self.x1.rational_floor();
        let k2 = self.x2.rational_floor();
        // last lattice direction is ½ℤ: k3 = floor(2 x3) / 2
        let k3 = AngleValue::rational(BigRational::new(
            self.x3.scale_i64(2).rational_floor(),
            BigInt::from(2),
        ));
        let g0 = Self::new(
            0,
            &self.x1 - &int_angle(&k1),
            &self.x2 - &int_angle(&k2),
            &self.x3 - &k3,
        );
        let gamma = Self::new(self.m, int_angle(&k1), int_angle(&k2), k3);
        CosetRepr { g0, gamma }
    }

    fn in_lattice(&self) -> bool {
        let int = |x: &AngleValue| x.is_rational() && x.rational_part().is_integer();
        int(&self.x1) && int(&self.x2) && int(&self.x3.scale_i64(2))
    }

    fn psi_scale() -> Vec<i64> {
        vec![1, 1, 2]
    }
}

/// `φ(T_a(gΓ))` as a torus point.
pub fn rotate_and_project<G: NilGroup>(a: &G, g: &G) -> Result<TorusPoint> {
    G::psi(&a.mul(g).phi().g0)
}
