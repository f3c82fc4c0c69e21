//! Exact circle coordinates.
//!
//! An [`AngleValue`] is `q + ∑ c_g·γ_g` with rational `q`, `c_g` and symbolic
//! generators `γ_g` declared to be rationally independent together with 1.
//! Each generator has a 64-bit fixed-point shadow `G/2^64`; float views of an
//! angle substitute these shadows exactly and round once at the end.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::{Mutex, RwLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::parse_rational_field;

/// Handle into a [`Registry`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenId(pub u32);

#[derive(Clone, Debug)]
struct GenEntry {
    name: String,
    fixed: u64,
}

enum MintPolicy {
    SqrtPrimes { next_prime: u64 },
    Seeded(Box<ChaCha8Rng>),
    Disabled,
}

/// Append-only table of declared irrationals.
///
/// The default policy mints `frac(√p)` for successive primes `p = 2, 3, 5, ...`;
/// [`Registry::seeded`] draws fixed-point values from a ChaCha stream instead.
pub struct Registry {
    entries: RwLock<Vec<GenEntry>>,
    policy: Mutex<MintPolicy>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let entries = self.entries.read().expect("registry lock");
        f.debug_list()
            .entries(entries.iter().map(|e| (&e.name, e.fixed)))
            .finish()
    }
}

fn is_prime(n: u64) -> bool {
    n >= 2
        && (2..)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

/// `floor(frac(√p)·2^64)` computed with integer square roots.
pub fn sqrt_fraction_fixed(p: u64) -> u64 {
    let scaled = BigUint::from(p) << 128u32;
    let root = scaled.sqrt();
    let low = root & BigUint::from(u64::MAX);
    low.to_u64().expect("masked to 64 bits")
}

impl Registry {
    pub fn new() -> Self {
        Self {
            entries: RwLock::new(Vec::new()),
            policy: Mutex::new(MintPolicy::SqrtPrimes { next_prime: 2 }),
        }
    }

    pub fn seeded(seed: u64) -> Self {
        Self {
            entries: RwLock::new(Vec::new()),
            policy: Mutex::new(MintPolicy::Seeded(Box::new(ChaCha8Rng::seed_from_u64(
                seed,
            )))),
        }
    }

    /// A registry that only accepts explicit declarations.
    pub fn without_minting() -> Self {
        Self {
            entries: RwLock::new(Vec::new()),
            policy: Mutex::new(MintPolicy::Disabled),
        }
    }

    /// Switches future minting to a seeded stream.
    pub fn reseed(&self, seed: u64) {
        *self.policy.lock().expect("policy lock") =
            MintPolicy::Seeded(Box::new(ChaCha8Rng::seed_from_u64(seed)));
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("registry lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, name: Option<&str>, fixed: u64) -> GenId {
        let mut entries = self.entries.write().expect("registry lock");
        let id = GenId(entries.len() as u32);
        let name = name.map_or_else(|| format!("g{}", id.0), str::to_owned);
        entries.push(GenEntry { name, fixed });
        id
    }

    /// Mints a fresh generator under the current policy.
    pub fn mint(&self, name: Option<&str>) -> Result<GenId> {
        let fixed = {
            let mut policy = self.policy.lock().expect("policy lock");
            match &mut *policy {
                MintPolicy::SqrtPrimes { next_prime } => {
                    let mut p = *next_prime;
                    while !is_prime(p) {
                        p += 1;
                    }
                    *next_prime = p + 1;
                    sqrt_fraction_fixed(p)
                }
                MintPolicy::Seeded(rng) => loop {
                    let v: u64 = rng.gen();
                    if v != 0 {
                        break v;
                    }
                },
                MintPolicy::Disabled => {
                    return Err(Error::RegistryExhausted("minting is disabled".into()))
                }
            }
        };
        Ok(self.push(name, fixed))
    }

    /// Declares a generator with an explicit float value in `[0, 1)`.
    pub fn declare(&self, name: &str, value: f64) -> Result<GenId> {
        if !(0.0..1.0).contains(&value) {
            return Err(Error::parse(
                format!("generators.{name}.value"),
                "generator value must lie in [0, 1)",
            ));
        }
        if self.lookup(name).is_some() {
            return Err(Error::parse(
                format!("generators.{name}"),
                "duplicate generator name",
            ));
        }
        let fixed = (value * 2f64.powi(64)) as u64;
        Ok(self.push(Some(name), fixed))
    }

    /// Declares a generator with an explicit fixed-point value `G` (meaning `G/2^64`).
    pub fn declare_fixed(&self, name: &str, fixed: u64) -> GenId {
        self.push(Some(name), fixed)
    }

    pub fn lookup(&self, name: &str) -> Option<GenId> {
        self.entries
            .read()
            .expect("registry lock")
            .iter()
            .position(|e| e.name == name)
            .map(|i| GenId(i as u32))
    }

    pub fn name(&self, id: GenId) -> String {
        self.entries.read().expect("registry lock")[id.0 as usize]
            .name
            .clone()
    }

    pub fn fixed(&self, id: GenId) -> u64 {
        self.entries.read().expect("registry lock")[id.0 as usize].fixed
    }

    pub fn value(&self, id: GenId) -> f64 {
        self.fixed(id) as f64 / 2f64.powi(64)
    }

    /// Exact value of `v` mod 1 after substituting the fixed-point shadows.
    pub fn exact_fraction(&self, v: &AngleValue) -> BigRational {
        let two64 = BigInt::one() << 64u32;
        let mut total = v.rational.clone();
        for (id, c) in &v.gens {
            total += c * BigRational::new(BigInt::from(self.fixed(*id)), two64.clone());
        }
        frac(&total)
    }

    /// Float shadow in `[0, 1)`.
    pub fn shadow(&self, v: &AngleValue) -> f64 {
        let f = self.exact_fraction(v);
        let x = f.to_f64().unwrap_or(0.0);
        if x >= 1.0 {
            0.0
        } else {
            x
        }
    }

    /// Real value without reduction mod 1.
    pub fn real_value(&self, v: &AngleValue) -> f64 {
        let two64 = BigInt::one() << 64u32;
        let mut total = v.rational.clone();
        for (id, c) in &v.gens {
            total += c * BigRational::new(BigInt::from(self.fixed(*id)), two64.clone());
        }
        total.to_f64().unwrap_or(f64::NAN)
    }

    /// All generators as `(name, value)` pairs in id order.
    pub fn snapshot(&self) -> Vec<GeneratorJson> {
        self.entries
            .read()
            .expect("registry lock")
            .iter()
            .map(|e| GeneratorJson {
                name: e.name.clone(),
                value: Some(e.fixed as f64 / 2f64.powi(64)),
            })
            .collect()
    }
}

/// `x - floor(x)`.
pub fn frac(x: &BigRational) -> BigRational {
    x - BigRational::from_integer(x.floor().to_integer())
}

/// Exact symbolic real `q + ∑ c_g γ_g`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct AngleValue {
    rational: BigRational,
    gens: BTreeMap<GenId, BigRational>,
}

impl AngleValue {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn rational(q: BigRational) -> Self {
        Self {
            rational: q,
            gens: BTreeMap::new(),
        }
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        Self::rational(BigRational::new(p.into(), q.into()))
    }

    pub fn generator(id: GenId) -> Self {
        Self::generator_times(id, BigRational::one())
    }

    pub fn generator_times(id: GenId, c: BigRational) -> Self {
        let mut gens = BTreeMap::new();
        if !c.is_zero() {
            gens.insert(id, c);
        }
        Self {
            rational: BigRational::zero(),
            gens,
        }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rational
    }

    pub fn generator_part(&self) -> &BTreeMap<GenId, BigRational> {
        &self.gens
    }

    pub fn coefficient(&self, id: GenId) -> BigRational {
        self.gens
            .get(&id)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.gens.is_empty()
    }

    /// True when the generator part vanishes.
    pub fn is_rational(&self) -> bool {
        self.gens.is_empty()
    }

    /// Reduces the rational part into `[0, 1)`; generator coefficients are untouched.
    pub fn reduced(&self) -> Self {
        Self {
            rational: frac(&self.rational),
            gens: self.gens.clone(),
        }
    }

    /// `floor` of the rational part.
    pub fn rational_floor(&self) -> BigInt {
        self.rational.floor().to_integer()
    }

    /// Equality on the circle: same generator part, rational parts congruent mod 1.
    pub fn eq_mod1(&self, other: &Self) -> bool {
        self.gens == other.gens && frac(&(&self.rational - &other.rational)).is_zero()
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self {
            rational: &self.rational * s,
            gens: self.gens.iter().map(|(k, v)| (*k, v * s)).collect(),
        }
    }

    pub fn scale_int(&self, s: &BigInt) -> Self {
        self.scale(&BigRational::from_integer(s.clone()))
    }

    pub fn scale_i64(&self, s: i64) -> Self {
        self.scale_int(&BigInt::from(s))
    }

    fn combine(&self, other: &Self, sign: i32) -> Self {
        let mut gens = self.gens.clone();
        for (k, v) in &other.gens {
            let entry = gens.entry(*k).or_insert_with(BigRational::zero);
            if sign > 0 {
                *entry += v;
            } else {
                *entry -= v;
            }
            if entry.is_zero() {
                gens.remove(k);
            }
        }
        let rational = if sign > 0 {
            &self.rational + &other.rational
        } else {
            &self.rational - &other.rational
        };
        Self { rational, gens }
    }

    /// Least common multiple of every denominator (rational part and coefficients).
    pub fn common_denominator(&self) -> BigInt {
        self.gens
            .values()
            .fold(self.rational.denom().clone(), |acc, c| acc.lcm(c.denom()))
    }

    pub fn display_with(&self, reg: &Registry) -> String {
        let mut out = String::new();
        if !self.rational.is_zero() || self.gens.is_empty() {
            out.push_str(&self.rational.to_string());
        }
        for (id, c) in &self.gens {
            let name = reg.name(*id);
            let neg = c.is_negative();
            if !out.is_empty() || neg {
                out.push(if neg { '-' } else { '+' });
            }
            let mag = c.abs();
            if mag.is_one() {
                out.push_str(&name);
            } else {
                out.push_str(&format!("{mag}*{name}"));
            }
        }
        out
    }

    /// Parses `"1/2+alpha-3*beta+2/3*gamma"`; generator names resolve through
    /// `resolve`, which may mint or look up.
    pub fn parse_with(
        s: &str,
        field: &str,
        mut resolve: impl FnMut(&str) -> Result<GenId>,
    ) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::parse(field, "empty angle value"));
        }
        let mut terms = Vec::new();
        let mut start = 0;
        for (i, ch) in compact.char_indices().skip(1) {
            if ch == '+' || ch == '-' {
                terms.push(&compact[start..i]);
                start = i;
            }
        }
        terms.push(&compact[start..]);
        let mut acc = AngleValue::zero();
        for term in terms {
            let (neg, body) = match term.as_bytes().first() {
                Some(b'-') => (true, &term[1..]),
                Some(b'+') => (false, &term[1..]),
                _ => (false, term),
            };
            if body.is_empty() {
                return Err(Error::parse(field, format!("dangling sign in `{s}`")));
            }
            let starts_alpha = body
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
            let value = if let Some((coef, name)) = body.split_once('*') {
                let c = parse_rational_field(coef, field)?;
                AngleValue::generator_times(resolve(name)?, c)
            } else if starts_alpha {
                AngleValue::generator(resolve(body)?)
            } else {
                AngleValue::rational(parse_rational_field(body, field)?)
            };
            acc = if neg { &acc - &value } else { &acc + &value };
        }
        Ok(acc)
    }
}

impl Add for &AngleValue {
    type Output = AngleValue;
    fn add(self, rhs: &AngleValue) -> AngleValue {
        self.combine(rhs, 1)
    }
}

impl Sub for &AngleValue {
    type Output = AngleValue;
    fn sub(self, rhs: &AngleValue) -> AngleValue {
        self.combine(rhs, -1)
    }
}

impl Add for AngleValue {
    type Output = AngleValue;
    fn add(self, rhs: AngleValue) -> AngleValue {
        self.combine(&rhs, 1)
    }
}

impl Sub for AngleValue {
    type Output = AngleValue;
    fn sub(self, rhs: AngleValue) -> AngleValue {
        self.combine(&rhs, -1)
    }
}

impl Neg for &AngleValue {
    type Output = AngleValue;
    fn neg(self) -> AngleValue {
        self.scale_i64(-1)
    }
}

impl Neg for AngleValue {
    type Output = AngleValue;
    fn neg(self) -> AngleValue {
        self.scale_i64(-1)
    }
}

impl std::iter::Sum for AngleValue {
    fn sum<I: Iterator<Item = AngleValue>>(iter: I) -> Self {
        iter.fold(AngleValue::zero(), |a, b| a + b)
    }
}

/// True iff no nontrivial integer combination of `values` is rational,
/// i.e. their generator-coefficient vectors are linearly independent over ℚ.
pub fn rationally_independent(values: &[AngleValue]) -> bool {
    let gens: Vec<GenId> = values
        .iter()
        .flat_map(|v| v.gens.keys().copied())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if values.is_empty() {
        return true;
    }
    if gens.is_empty() {
        return false;
    }
    let rows: Vec<Vec<BigRational>> = values
        .iter()
        .map(|v| gens.iter().map(|g| v.coefficient(*g)).collect())
        .collect();
    crate::algebra::RationalMatrix::from_rows(rows)
        .map(|m| m.rank() == values.len())
        .unwrap_or(false)
}

/// File form of an angle: `{"rational": "p/q", "gens": {"name": "r/s"}}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
pub struct AngleJson {
    #[serde(default = "zero_string")]
    pub rational: String,
    #[serde(default)]
    pub gens: BTreeMap<String, String>,
}

fn zero_string() -> String {
    "0".to_string()
}

/// Generator declaration; `value` omitted means "mint under the registry policy".
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GeneratorJson {
    pub name: String,
    #[serde(default)]
    pub value: Option<f64>,
}

impl AngleJson {
    pub fn to_angle(&self, reg: &Registry, field: &str) -> Result<AngleValue> {
        let mut v = AngleValue::rational(parse_rational_field(
            &self.rational,
            &format!("{field}.rational"),
        )?);
        for (name, c) in &self.gens {
            let id = reg
                .lookup(name)
                .ok_or_else(|| Error::UnknownGenerator(name.clone()))?;
            let c = parse_rational_field(c, &format!("{field}.gens.{name}"))?;
            v = v + AngleValue::generator_times(id, c);
        }
        Ok(v)
    }

    pub fn from_angle(v: &AngleValue, reg: &Registry) -> Self {
        Self {
            rational: v.rational.to_string(),
            gens: v
                .gens
                .iter()
                .map(|(id, c)| (reg.name(*id), c.to_string()))
                .collect(),
        }
    }
}
