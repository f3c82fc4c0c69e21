//! Weyl sums `(1/N) ∑ e^{2πi R(n)}`.
//!
//! Phases are evaluated exactly: every value of `R` at an integer lies in
//! `(1/M)ℤ` mod 1 with `M = Q·2^64`, where `Q` clears the denominators of the
//! binomial-basis coefficients and `2^64` is the fixed-point scale of the
//! generator shadows. A forward-difference table of residues mod `M` then
//! advances one step with `deg` modular additions, so no drift accumulates.
//! Each chunk of [`CHUNK`] terms is anchored independently, which makes the
//! parallel schedule and the serial one produce identical sums.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::phase::{Frequency, PhasePolynomial};
use crate::angle::{AngleValue, Registry};
use crate::error::{Error, Result};
use crate::polynomial::binomial;

/// Terms per independently anchored chunk.
pub const CHUNK: u64 = 1 << 16;

const TAU: f64 = std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylSumResult {
    #[serde(rename = "N")]
    pub n: u64,
    pub re: f64,
    pub im: f64,
    pub magnitude: f64,
}

impl WeylSumResult {
    fn from_sum(n: u64, (re, im): (f64, f64)) -> Self {
        let (re, im) = (re / n as f64, im / n as f64);
        Self {
            n,
            re,
            im,
            magnitude: re.hypot(im),
        }
    }

    /// A constant phase `θ` has average exactly `e^{2πiθ}`, of modulus one.
    fn unit(n: u64, theta: f64) -> Self {
        let (s, c) = (TAU * theta).sin_cos();
        Self {
            n,
            re: c,
            im: s,
            magnitude: 1.0,
        }
    }
}

/// Neumaier-compensated pair of accumulators.
#[derive(Clone, Copy, Debug, Default)]
struct Compensated {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl Compensated {
    #[inline]
    fn add(&mut self, re: f64, im: f64) {
        neumaier(&mut self.re, &mut self.re_c, re);
        neumaier(&mut self.im, &mut self.im_c, im);
    }

    fn total(&self) -> (f64, f64) {
        (self.re + self.re_c, self.im + self.im_c)
    }
}

/// Fixed-shape pairwise reduction over chunk totals.
fn pairwise(parts: &[(f64, f64)]) -> (f64, f64) {
    match parts.len() {
        0 => (0.0, 0.0),
        1 => parts[0],
        n => {
            let (a, b) = parts.split_at(n / 2);
            let (x, y) = (pairwise(a), pairwise(b));
            (x.0 + y.0, x.1 + y.1)
        }
    }
}

#[derive(Clone, Debug)]
enum Modulus {
    /// `M = 2^64`: plain wrapping arithmetic.
    Pow64,
    /// `M = Q·2^64` with `1 < Q < 2^63`.
    General(u128),
}

/// Exact residue arithmetic for one phase polynomial.
#[derive(Clone, Debug)]
pub struct PhaseKernel {
    modulus: Modulus,
    modulus_big: BigInt,
    /// `D_e · M mod M` for the binomial-basis coefficients `D_e`.
    scaled: Vec<BigInt>,
}

fn residue(v: &AngleValue, q: &BigInt, modulus: &BigInt, reg: &Registry) -> BigInt {
    let two64 = BigInt::one() << 64u32;
    let mut acc = (v.rational_part() * BigRational::from_integer(q * &two64)).to_integer();
    for (id, c) in v.generator_part() {
        let k = (c * BigRational::from_integer(q.clone())).to_integer();
        acc += k * BigInt::from(reg.fixed(*id));
    }
    acc.mod_floor(modulus)
}

impl PhaseKernel {
    pub fn new(r: &PhasePolynomial, reg: &Registry) -> Result<Self> {
        let d = r.binomial_coeffs();
        let q = d
            .iter()
            .fold(BigInt::one(), |acc, v| acc.lcm(&v.common_denominator()));
        if q.bits() > 62 {
            return Err(Error::Domain(format!(
                "phase denominators too large for exact residues (lcm {q})"
            )));
        }
        let modulus_big = &q << 64u32;
        let modulus = if q.is_one() {
            Modulus::Pow64
        } else {
            Modulus::General(modulus_big.to_u128().expect("below 2^127"))
        };
        let scaled = d
            .iter()
            .map(|v| residue(v, &q, &modulus_big, reg))
            .collect();
        Ok(Self {
            modulus,
            modulus_big,
            scaled,
        })
    }

    pub fn degree(&self) -> usize {
        self.scaled.len().saturating_sub(1)
    }

    /// `Δ^k R(n0) · M mod M` for `k = 0..=deg`.
    fn table_at(&self, n0: u64) -> Vec<u128> {
        let n0 = BigInt::from(n0);
        let len = self.scaled.len();
        (0..len)
            .map(|k| {
                let mut acc = BigInt::zero();
                for e in k..len {
                    acc += &self.scaled[e] * binomial(&n0, e - k);
                }
                acc.mod_floor(&self.modulus_big)
                    .to_u128()
                    .expect("reduced residue")
            })
            .collect()
    }

    /// Residue of `R(n) · M` for a single `n`, exact.
    pub fn residue_at(&self, n: u64) -> u128 {
        self.table_at(n)[0]
    }

    /// `R(n) mod 1` as a float in `[-1/2, 1/2)`.
    pub fn phase_at(&self, n: u64) -> f64 {
        self.to_phase(self.residue_at(n))
    }

    #[inline]
    fn to_phase(&self, res: u128) -> f64 {
        match self.modulus {
            Modulus::Pow64 => (res as u64 as i64) as f64 * 2f64.powi(-64),
            Modulus::General(m) => {
                let x = res as f64 / m as f64;
                if x >= 0.5 {
                    x - 1.0
                } else {
                    x
                }
            }
        }
    }

    fn chunk_sum(&self, n0: u64, count: u64) -> (f64, f64) {
        let table = self.table_at(n0);
        let mut acc = Compensated::default();
        match self.modulus {
            Modulus::Pow64 => {
                let mut t: Vec<u64> = table.iter().map(|&x| x as u64).collect();
                let deg = t.len() - 1;
                for _ in 0..count {
                    let theta = (t[0] as i64) as f64 * 2f64.powi(-64);
                    let (s, c) = (TAU * theta).sin_cos();
                    acc.add(c, s);
                    for k in 0..deg {
                        t[k] = t[k].wrapping_add(t[k + 1]);
                    }
                }
            }
            Modulus::General(m) => {
                let mut t = table;
                let deg = t.len() - 1;
                for _ in 0..count {
                    let theta = self.to_phase(t[0]);
                    let (s, c) = (TAU * theta).sin_cos();
                    acc.add(c, s);
                    for k in 0..deg {
                        let v = t[k] + t[k + 1];
                        t[k] = if v >= m { v - m } else { v };
                    }
                }
            }
        }
        acc.total()
    }

    /// Unnormalized `∑_{n=start}^{start+count-1} e^{2πi R(n)}`.
    pub fn sum(&self, start: u64, count: u64) -> (f64, f64) {
        let chunks = count.div_ceil(CHUNK);
        let parts: Vec<(f64, f64)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let n0 = start + c * CHUNK;
                let len = CHUNK.min(start + count - n0);
                self.chunk_sum(n0, len)
            })
            .collect();
        pairwise(&parts)
    }
}

/// `(1/N) ∑_{n=start}^{start+N-1} e^{2πi R(n)}`.
pub fn weyl_sum_phase_from(
    r: &PhasePolynomial,
    start: u64,
    n: u64,
    reg: &Registry,
) -> Result<WeylSumResult> {
    if n == 0 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    if r.is_zero() {
        return Ok(WeylSumResult {
            n,
            re: 1.0,
            im: 0.0,
            magnitude: 1.0,
        });
    }
    if r.is_constant() {
        return Ok(WeylSumResult::unit(n, reg.shadow(&r.coeffs()[0])));
    }
    let kernel = PhaseKernel::new(r, reg)?;
    Ok(WeylSumResult::from_sum(n, kernel.sum(start, n)))
}

/// `(1/N) ∑_{n=1}^{N} e^{2πi R(n)}`.
pub fn weyl_sum_phase(r: &PhasePolynomial, n: u64, reg: &Registry) -> Result<WeylSumResult> {
    weyl_sum_phase_from(r, 1, n, reg)
}

/// Reference route: evaluates `R(n)` symbolically for every `n` and substitutes
/// shadows exactly. Slow; meant for cross-checks at small `N`.
pub fn weyl_sum_phase_direct(r: &PhasePolynomial, n: u64, reg: &Registry) -> Result<WeylSumResult> {
    if n == 0 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    let mut acc = Compensated::default();
    for k in 1..=n {
        let theta = r.shadow_at(&BigInt::from(k), reg);
        let (s, c) = (TAU * theta).sin_cos();
        acc.add(c, s);
    }
    Ok(WeylSumResult::from_sum(n, acc.total()))
}

/// `(1/N) ∑_{n=1}^{N} e^{2πi m·a_n}` over the first `N` points of `seq`.
pub fn weyl_sum_sequence<I, P>(seq: I, m: &Frequency, n: u64) -> Result<WeylSumResult>
where
    I: IntoIterator<Item = P>,
    P: AsRef<[f64]>,
{
    if n == 0 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    let mut parts = Vec::with_capacity(n.div_ceil(CHUNK) as usize);
    let mut acc = Compensated::default();
    let mut seen = 0u64;
    for point in seq.into_iter().take(n as usize) {
        let point = point.as_ref();
        if point.len() != m.len() {
            return Err(Error::Dimension(format!(
                "point of dimension {} against frequency of length {}",
                point.len(),
                m.len()
            )));
        }
        let phase: f64 = point.iter().zip(&m.0).map(|(a, &k)| a * k as f64).sum();
        let (s, c) = (TAU * phase.rem_euclid(1.0)).sin_cos();
        acc.add(c, s);
        seen += 1;
        if seen.is_multiple_of(CHUNK) {
            parts.push(acc.total());
            acc = Compensated::default();
        }
    }
    if seen < n {
        return Err(Error::Precondition(format!(
            "sequence ended after {seen} of {n} points"
        )));
    }
    if !seen.is_multiple_of(CHUNK) {
        parts.push(acc.total());
    }
    Ok(WeylSumResult::from_sum(n, pairwise(&parts)))
}

/// `(1/N) ∑ e^{2πi n α}` modulus, for testing: `|sin(πNα)| / (N |sin(πα)|)`.
pub fn geometric_magnitude(alpha: f64, n: u64) -> f64 {
    let num = (std::f64::consts::PI * n as f64 * alpha).sin().abs();
    let den = n as f64 * (std::f64::consts::PI * alpha).sin().abs();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::AngleValue;

    #[test]
    fn constant_and_zero_phases() {
        let reg = Registry::new();
        let zero = PhasePolynomial::new(vec![]);
        for n in [1, 7, 100_000] {
            let w = weyl_sum_phase(&zero, n, &reg).unwrap();
            assert_eq!((w.re, w.magnitude), (1.0, 1.0));
        }
        let g = AngleValue::generator(reg.mint(None).unwrap());
        let c = weyl_sum_phase(&PhasePolynomial::new(vec![g]), 50, &reg).unwrap();
        assert_eq!(c.magnitude, 1.0);
        assert!(weyl_sum_phase(&zero, 0, &reg).is_err());
    }

    #[test]
    fn half_rotation_cancels() {
        let reg = Registry::new();
        let r = PhasePolynomial::new(vec![AngleValue::zero(), AngleValue::from_ratio(1, 2)]);
        let w = weyl_sum_phase(&r, 1000, &reg).unwrap();
        assert!(w.magnitude < 1e-13);
        let seq = (1..=1000u64).map(|n| vec![(n as f64 / 2.0).rem_euclid(1.0)]);
        let s = weyl_sum_sequence(seq, &Frequency(vec![1]), 1000).unwrap();
        assert!(s.magnitude < 1e-13);
    }

    #[test]
    fn constant_sequence() {
        let seq = std::iter::repeat_n(vec![0.0, 0.0], 10);
        let w = weyl_sum_sequence(seq, &Frequency(vec![3, -1]), 10).unwrap();
        assert_eq!(w.re, 1.0);
        let short = std::iter::repeat_n(vec![0.0], 3);
        assert!(weyl_sum_sequence(short, &Frequency(vec![1]), 4).is_err());
    }

    #[test]
    fn linear_phase_matches_geometric_series() {
        let reg = Registry::new();
        let id = reg.mint(None).unwrap();
        let alpha = reg.value(id);
        let r = PhasePolynomial::new(vec![AngleValue::zero(), AngleValue::generator(id)]);
        for n in [1u64, 10, 1000, 200_000] {
            let w = weyl_sum_phase(&r, n, &reg).unwrap();
            assert!(
                (w.magnitude - geometric_magnitude(alpha, n)).abs() < 1e-9,
                "N = {n}"
            );
            let seq = (1..=n).map(|k| vec![(k as f64 * alpha).rem_euclid(1.0)]);
            if n <= 1000 {
                let s = weyl_sum_sequence(seq, &Frequency(vec![1]), n).unwrap();
                assert!((s.magnitude - geometric_magnitude(alpha, n)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn general_modulus_matches_direct() {
        let reg = Registry::new();
        let g = AngleValue::generator(reg.mint(None).unwrap());
        // (n^2 + n)/2 · g/3 + n/7 has denominators in the binomial basis
        let r = PhasePolynomial::new(vec![
            AngleValue::from_ratio(1, 5),
            &g.scale(&BigRational::new(1.into(), 6.into())) + &AngleValue::from_ratio(1, 7),
            g.scale(&BigRational::new(1.into(), 6.into())),
        ]);
        let k = PhaseKernel::new(&r, &reg).unwrap();
        assert!(matches!(k.modulus, Modulus::General(_)));
        let fast = weyl_sum_phase(&r, 3000, &reg).unwrap();
        let slow = weyl_sum_phase_direct(&r, 3000, &reg).unwrap();
        assert!((fast.re - slow.re).abs() < 1e-12 && (fast.im - slow.im).abs() < 1e-12);
    }

    #[test]
    fn chunk_boundaries_are_seamless() {
        let reg = Registry::new();
        let g = AngleValue::generator(reg.mint(None).unwrap());
        let r = PhasePolynomial::new(vec![AngleValue::zero(), AngleValue::zero(), g.clone(), g]);
        let k = PhaseKernel::new(&r, &reg).unwrap();
        let whole = k.sum(5, 3 * CHUNK + 17);
        let a = k.sum(5, CHUNK + 3);
        let b = k.sum(5 + CHUNK + 3, 2 * CHUNK + 14);
        assert!((whole.0 - a.0 - b.0).abs() < 1e-8);
        // residues agree with exact evaluation far from the anchor
        let n = 5 + 2 * CHUNK + 11;
        let exact = r.shadow_at(&BigInt::from(n), &reg);
        let got = k.phase_at(n).rem_euclid(1.0);
        assert!(crate::torus::circle_distance(exact, got) < 1e-15);
    }

    #[test]
    fn parallel_and_serial_agree_bitwise() {
        let reg = Registry::new();
        let g = AngleValue::generator(reg.mint(None).unwrap());
        let r = PhasePolynomial::new(vec![AngleValue::zero(), g.clone(), g]);
        let par = weyl_sum_phase(&r, 300_000, &reg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let ser = pool.install(|| weyl_sum_phase(&r, 300_000, &reg).unwrap());
        assert_eq!(par, ser);
    }
}
