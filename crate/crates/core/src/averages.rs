//! Multiple ergodic averages of trigonometric polynomials along polynomial times.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::{AngleValue, Registry};
use crate::equidist::{build_phase_polynomial, polynomial_orbit, weyl_sum_phase_from, Frequency};
use crate::error::{Error, Result};
use crate::polynomial::PolynomialFamily;
use crate::torus::{TorusPoint, UnipotentAffineMap};

/// Finite sum `∑ c_m e^{2πi m·y}` on `𝕋^d`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrigPolynomial {
    dim: usize,
    terms: BTreeMap<Vec<i64>, Complex64>,
}

impl TrigPolynomial {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn character(freq: Vec<i64>) -> Self {
        let mut f = Self::new(freq.len());
        f.add_term(freq, Complex64::new(1.0, 0.0))
            .expect("matching dimension");
        f
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        let mut f = Self::new(dim);
        f.add_term(vec![0; dim], c).expect("matching dimension");
        f
    }

    pub fn add_term(&mut self, freq: Vec<i64>, c: Complex64) -> Result<()> {
        if freq.len() != self.dim {
            return Err(Error::Dimension(format!(
                "frequency of length {} in a function on T^{}",
                freq.len(),
                self.dim
            )));
        }
        let slot = self.terms.entry(freq).or_default();
        *slot += c;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nonzero terms.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &Complex64)> {
        self.terms
            .iter()
            .filter(|(_, c)| **c != Complex64::default())
    }

    /// `∫ f dμ`, the constant coefficient.
    pub fn integral(&self) -> Complex64 {
        self.terms
            .get(&vec![0; self.dim])
            .copied()
            .unwrap_or_default()
    }

    /// `∑ |c_m|`, an upper bound for `sup |f|`.
    pub fn sup_bound(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn eval(&self, y: &[f64]) -> Complex64 {
        self.terms()
            .map(|(m, c)| {
                let phase: f64 = m.iter().zip(y).map(|(k, v)| *k as f64 * v).sum();
                c * Complex64::from_polar(1.0, std::f64::consts::TAU * phase.rem_euclid(1.0))
            })
            .sum()
    }
}

pub fn product_of_integrals(fs: &[TrigPolynomial]) -> Complex64 {
    fs.iter().map(TrigPolynomial::integral).product()
}

/// `A_N f(x)` with a modulus that is exact when the expansion has a single
/// character: then `|A_N| = |c| · |W|` and a constant phase gives `|c|` exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicAverage {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

impl ErgodicAverage {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// `|A_N f(x) - target|`; against zero this is the stored modulus.
    pub fn deviation(&self, target: Complex64) -> f64 {
        if target == Complex64::default() {
            self.modulus
        } else {
            (self.value() - target).norm()
        }
    }
}

fn check_shapes(
    t: &UnipotentAffineMap,
    polys: &PolynomialFamily,
    fs: &[TrigPolynomial],
) -> Result<()> {
    if fs.len() != polys.len() {
        return Err(Error::Dimension(format!(
            "{} functions for {} polynomials",
            fs.len(),
            polys.len()
        )));
    }
    if let Some(f) = fs.iter().find(|f| f.dim() != t.dim()) {
        return Err(Error::Dimension(format!(
            "function on T^{} against a map on T^{}",
            f.dim(),
            t.dim()
        )));
    }
    Ok(())
}

/// `(1/N) ∑_{n=0}^{N-1} ∏_l f_l(T^{p_l(n)} x)`, by expanding into characters
/// and summing each resulting phase polynomial exactly.
pub fn multiple_ergodic_average(
    t: &UnipotentAffineMap,
    polys: &PolynomialFamily,
    fs: &[TrigPolynomial],
    x: &TorusPoint,
    n: u64,
    reg: &Registry,
) -> Result<ErgodicAverage> {
    check_shapes(t, polys, fs)?;
    if n == 0 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    let mut tuples: Vec<(Vec<i64>, Complex64)> = vec![(Vec::new(), Complex64::new(1.0, 0.0))];
    for f in fs {
        let mut next = Vec::new();
        for (m, c) in &tuples {
            for (fm, fc) in f.terms() {
                let mut freq = m.clone();
                freq.extend_from_slice(fm);
                next.push((freq, c * fc));
            }
        }
        tuples = next;
    }
    let mut total = Complex64::default();
    let mut single_modulus = None;
    for (freq, c) in &tuples {
        let r = build_phase_polynomial(t, x, polys, &Frequency(freq.clone()))?;
        let w = weyl_sum_phase_from(&r, 0, n, reg)?;
        total += c * Complex64::new(w.re, w.im);
        single_modulus = Some(c.norm() * w.magnitude);
    }
    let modulus = match (tuples.len(), single_modulus) {
        (1, Some(m)) => m,
        _ => total.norm(),
    };
    Ok(ErgodicAverage {
        re: total.re,
        im: total.im,
        modulus,
    })
}

/// Reference route: iterates the orbit and evaluates the functions on shadows.
pub fn multiple_ergodic_average_direct(
    t: &UnipotentAffineMap,
    polys: &PolynomialFamily,
    fs: &[TrigPolynomial],
    x: &TorusPoint,
    n: u64,
    reg: &Registry,
) -> Result<Complex64> {
    check_shapes(t, polys, fs)?;
    if n == 0 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    let d = t.dim();
    let rows = polynomial_orbit(t, x, polys, 0..n as i64, reg)?;
    let sum: Complex64 = rows
        .iter()
        .map(|row| {
            fs.iter()
                .enumerate()
                .map(|(l, f)| f.eval(&row[l * d..(l + 1) * d]))
                .product::<Complex64>()
        })
        .sum();
    Ok(sum / n as f64)
}

/// Sample points for the `L²` estimate: `samples` generic points drawn from
/// seeded fixed-point shadows, optionally followed by the rational grid
/// `{0, 1/g, ..., (g-1)/g}^d` as stress points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub samples: usize,
    pub seed: u64,
    pub grid_per_axis: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleValue {
    pub point: Vec<f64>,
    pub generic: bool,
    pub re: f64,
    pub im: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub product_re: f64,
    pub product_im: f64,
    /// Root mean square of the deviations over the generic samples.
    pub l2_estimate: f64,
    pub max_deviation: f64,
    pub values: Vec<SampleValue>,
}

fn generic_points(d: usize, spec: &SampleSpec, reg: &Registry) -> Vec<TorusPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.samples)
        .map(|i| {
            let coords = (0..d)
                .map(|j| {
                    let id =
                        reg.declare_fixed(&format!("s{}_{i}_{j}", spec.seed), rng.gen::<u64>());
                    AngleValue::generator(id)
                })
                .collect();
            TorusPoint::new(coords).expect("d >= 1")
        })
        .collect()
}

fn grid_points(d: usize, g: usize) -> Vec<TorusPoint> {
    let total = g.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let coords = (0..d)
                .map(|_| {
                    let k = idx % g;
                    idx /= g;
                    AngleValue::from_ratio(k as i64, g as i64)
                })
                .collect();
            TorusPoint::new(coords).expect("d >= 1")
        })
        .collect()
}

/// Monte-Carlo estimate of `‖A_N f - ∏ ∫ f_l‖_{L²}` over generic points.
pub fn l2_distance_to_product(
    t: &UnipotentAffineMap,
    polys: &PolynomialFamily,
    fs: &[TrigPolynomial],
    n: u64,
    spec: &SampleSpec,
    reg: &Registry,
) -> Result<AverageReport> {
    check_shapes(t, polys, fs)?;
    if spec.samples == 0 {
        return Err(Error::Precondition(
            "at least one sample is required".into(),
        ));
    }
    let d = t.dim();
    let target = product_of_integrals(fs);
    let mut points: Vec<(TorusPoint, bool)> = generic_points(d, spec, reg)
        .into_iter()
        .map(|p| (p, true))
        .collect();
    if let Some(g) = spec.grid_per_axis {
        if g == 0 {
            return Err(Error::Precondition("grid size must be positive".into()));
        }
        points.extend(grid_points(d, g).into_iter().map(|p| (p, false)));
    }
    let values = points
        .par_iter()
        .map(|(x, generic)| {
            let a = multiple_ergodic_average(t, polys, fs, x, n, reg)?;
            Ok(SampleValue {
                point: x.shadows(reg),
                generic: *generic,
                re: a.re,
                im: a.im,
                deviation: a.deviation(target),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let generic: Vec<f64> = values
        .iter()
        .filter(|v| v.generic)
        .map(|v| v.deviation)
        .collect();
    let l2 = (generic.iter().map(|x| x * x).sum::<f64>() / generic.len() as f64).sqrt();
    let max_deviation = values.iter().map(|v| v.deviation).fold(0.0, f64::max);
    Ok(AverageReport {
        n,
        product_re: target.re,
        product_im: target.im,
        l2_estimate: l2,
        max_deviation,
        values,
    })
}
