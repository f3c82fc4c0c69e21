//! JSON file formats for systems, points and trigonometric polynomials.
//!
//! ```json
//! {"generators": [{"name": "alpha"}, {"name": "beta", "value": 0.25}],
//!  "matrix": [[1, 0], [2, 1]],
//!  "translation": ["alpha", {"rational": "1/2", "gens": {"beta": "2"}}]}
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::RationalMatrix;
use crate::angle::{AngleJson, AngleValue, GenId, GeneratorJson, Registry};
use crate::averages::TrigPolynomial;
use crate::error::{Error, Result};
use crate::torus::{TorusPoint, UnipotentAffineMap};

/// An angle given either as an expression string or as an explicit object.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AngleSpec {
    Expr(String),
    Object(AngleJson),
}

impl AngleSpec {
    pub fn to_angle(&self, reg: &Registry, field: &str) -> Result<AngleValue> {
        match self {
            Self::Expr(s) => AngleValue::parse_with(s, field, |name| lookup(reg, name)),
            Self::Object(o) => o.to_angle(reg, field),
        }
    }
}

fn lookup(reg: &Registry, name: &str) -> Result<GenId> {
    reg.lookup(name)
        .ok_or_else(|| Error::UnknownGenerator(name.to_string()))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SystemFile {
    #[serde(default)]
    pub generators: Vec<GeneratorJson>,
    pub matrix: serde_json::Value,
    pub translation: Vec<AngleSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PointFile {
    #[serde(default)]
    pub generators: Vec<GeneratorJson>,
    pub coords: Vec<AngleSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub freq: Vec<i64>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FunctionJson {
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FunctionsFile {
    pub functions: Vec<FunctionJson>,
}

/// Registers generators; an omitted value mints under the registry policy,
/// and a name that is already known is reused.
pub fn register_generators(gens: &[GeneratorJson], reg: &Registry) -> Result<()> {
    for g in gens {
        match (g.value, reg.lookup(&g.name)) {
            (None, Some(_)) => {}
            (None, None) => {
                reg.mint(Some(&g.name))?;
            }
            (Some(v), _) => {
                reg.declare(&g.name, v)?;
            }
        }
    }
    Ok(())
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::parse(what, e.to_string()))
}

pub fn load_system(text: &str, reg: &Registry) -> Result<UnipotentAffineMap> {
    let file: SystemFile = parse_json(text, "system")?;
    register_generators(&file.generators, reg)?;
    let a: RationalMatrix = file.matrix.to_string().parse()?;
    let b = file
        .translation
        .iter()
        .enumerate()
        .map(|(i, s)| s.to_angle(reg, &format!("translation[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    UnipotentAffineMap::new(a, b)
}

pub fn load_point(text: &str, reg: &Registry) -> Result<TorusPoint> {
    let file: PointFile = parse_json(text, "point")?;
    register_generators(&file.generators, reg)?;
    let coords = file
        .coords
        .iter()
        .enumerate()
        .map(|(i, s)| s.to_angle(reg, &format!("coords[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    TorusPoint::new(coords)
}

pub fn load_functions(text: &str, dim: usize) -> Result<Vec<TrigPolynomial>> {
    let file: FunctionsFile = parse_json(text, "functions")?;
    file.functions
        .iter()
        .map(|f| {
            let mut p = TrigPolynomial::new(dim);
            for t in &f.terms {
                p.add_term(t.freq.clone(), Complex64::new(t.re, t.im))?;
            }
            Ok(p)
        })
        .collect()
}

pub fn system_to_json(t: &UnipotentAffineMap, reg: &Registry) -> SystemFile {
    SystemFile {
        generators: reg.snapshot(),
        matrix: serde_json::to_value(t.matrix().to_string_rows()).expect("strings serialize"),
        translation: t
            .translation()
            .iter()
            .map(|v| AngleSpec::Object(AngleJson::from_angle(v, reg)))
            .collect(),
    }
}
