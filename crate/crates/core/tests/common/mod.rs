//! Oracles shared by the integration tests. Everything here is written against
//! plain integers and rationals so it does not lean on the library's own
//! linear algebra.
#![allow(dead_code)]

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use ergolab_core::angle::{AngleValue, GenId, Registry};

pub type Mat = Vec<Vec<BigRational>>;

pub fn q(p: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(p))
}

pub fn ints(rows: &[Vec<i64>]) -> Mat {
    rows.iter()
        .map(|r| r.iter().map(|&x| q(x)).collect())
        .collect()
}

pub fn identity(d: usize) -> Mat {
    (0..d)
        .map(|i| (0..d).map(|j| q((i == j) as i64)).collect())
        .collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|t| &a[i][t] * &b[t][j]).sum())
                .collect()
        })
        .collect()
}

pub fn matsub(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect())
        .collect()
}

pub fn is_zero(a: &Mat) -> bool {
    a.iter().flatten().all(Zero::is_zero)
}

/// Rank by fraction-free elimination after clearing row denominators.
pub fn rank(a: &Mat) -> usize {
    let mut m: Vec<Vec<BigInt>> = a
        .iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            row.iter()
                .map(|x| (x * BigRational::from_integer(l.clone())).to_integer())
                .collect()
        })
        .collect();
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        for i in r + 1..rows {
            if m[i][c].is_zero() {
                continue;
            }
            let (a, b) = (m[r][c].clone(), m[i][c].clone());
            let pivot = m[r].clone();
            for (x, y) in m[i].iter_mut().zip(&pivot).skip(c) {
                *x = &*x * &a - y * &b;
            }
        }
        r += 1;
    }
    r
}

/// `J` with ones on the diagonal and on the subdiagonal inside each block.
pub fn jordan(blocks: &[usize]) -> Mat {
    let d: usize = blocks.iter().sum();
    let mut j = identity(d);
    let mut start = 0;
    for &s in blocks {
        for i in 1..s {
            j[start + i][start + i - 1] = q(1);
        }
        start += s;
    }
    j
}

/// Jordan type from ranks: `#blocks ≥ j = rank N^{j-1} - rank N^j`.
pub fn jordan_type(a: &Mat) -> Vec<usize> {
    let d = a.len();
    let n = matsub(a, &identity(d));
    let mut ranks = vec![d];
    let mut power = identity(d);
    while *ranks.last().unwrap() > 0 {
        power = matmul(&power, &n);
        ranks.push(rank(&power));
    }
    let at_least: Vec<usize> = ranks.windows(2).map(|w| w[0] - w[1]).collect();
    let mut sizes = Vec::new();
    for (j, w) in at_least.iter().enumerate() {
        let exactly = w - at_least.get(j + 1).copied().unwrap_or(0);
        sizes.extend(std::iter::repeat_n(j + 1, exactly));
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

pub fn random_partition<R: Rng>(rng: &mut R, d: usize) -> Vec<usize> {
    let mut left = d;
    let mut parts = Vec::new();
    while left > 0 {
        let s = rng.gen_range(1..=left);
        parts.push(s);
        left -= s;
    }
    parts.sort_unstable_by(|a, b| b.cmp(a));
    parts
}

/// `U J U⁻¹` for a product `U` of `ops` elementary integer shears; returns the
/// matrix and the block sizes it was built from.
pub fn random_unipotent<R: Rng>(rng: &mut R, d: usize, ops: usize) -> (Vec<Vec<i64>>, Vec<usize>) {
    let blocks = random_partition(rng, d);
    let mut u = identity(d);
    let mut u_inv = identity(d);
    if d > 1 {
        for _ in 0..ops {
            let i = rng.gen_range(0..d);
            let mut j = rng.gen_range(0..d - 1);
            if j >= i {
                j += 1;
            }
            let c = [-2, -1, 1, 2][rng.gen_range(0..4)];
            let mut e = identity(d);
            e[i][j] = q(c);
            let mut e_inv = identity(d);
            e_inv[i][j] = q(-c);
            u = matmul(&u, &e);
            u_inv = matmul(&e_inv, &u_inv);
        }
    }
    let a = matmul(&matmul(&u, &jordan(&blocks)), &u_inv);
    let a = a
        .iter()
        .map(|r| r.iter().map(|x| x.to_integer().to_i64().unwrap()).collect())
        .collect();
    (a, blocks)
}

/// `floor(2^64 · frac(√p))` from an integer square root of `p · 2^128`.
pub fn sqrt_fraction_oracle(p: u64) -> u64 {
    let root = (BigUint::from(p) << 128u32).sqrt();
    (root & BigUint::from(u64::MAX)).to_u64().unwrap()
}

/// Exact value of `v` mod 1 after substituting `G/2^64` for each generator.
pub fn shadow_oracle(v: &AngleValue, reg: &Registry) -> f64 {
    let two64 = BigRational::from_integer(BigInt::one() << 64u32);
    let mut exact = v.rational_part().clone();
    for (id, c) in v.generator_part() {
        exact += c * BigRational::from_integer(BigInt::from(reg.fixed(*id))) / &two64;
    }
    let frac = &exact - BigRational::from_integer(exact.floor().to_integer());
    frac.to_f64().unwrap()
}

pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

pub fn random_rational<R: Rng>(rng: &mut R, range: i64, max_den: i64) -> BigRational {
    BigRational::new(
        BigInt::from(rng.gen_range(-range * max_den..=range * max_den)),
        BigInt::from(rng.gen_range(1..=max_den)),
    )
}

/// Random rational plus a small integer combination of `gens`.
pub fn random_angle<R: Rng>(rng: &mut R, gens: &[GenId]) -> AngleValue {
    let mut v = AngleValue::rational(random_rational(rng, 2, 6));
    for &g in gens {
        let c = rng.gen_range(-2..=2);
        if c != 0 {
            v = v + AngleValue::generator(g).scale_i64(c);
        }
    }
    v
}
