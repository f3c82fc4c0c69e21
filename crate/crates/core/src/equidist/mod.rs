//! Weyl-criterion machinery: phase polynomials, exponential sums and discrepancy.

mod discrepancy;
mod phase;
mod weyl;

pub use discrepancy::{discrepancy_estimate, star_discrepancy_1d, DiscrepancyMode, MAX_DIM};
pub use phase::{
    build_phase_polynomial, has_nonconstant_irrational_coeff, BlockCoord, Frequency,
    PhasePolynomial, PhaseWitness, ShearDecomposition,
};
pub use weyl::{
    geometric_magnitude, weyl_sum_phase, weyl_sum_phase_direct, weyl_sum_phase_from,
    weyl_sum_sequence, PhaseKernel, WeylSumResult, CHUNK,
};

use crate::angle::Registry;
use crate::error::Result;
use crate::polynomial::PolynomialFamily;
use crate::torus::{TorusPoint, UnipotentAffineMap};

/// Float shadows of `(T^{p_1(n)} x, ..., T^{p_k(n)} x)` for `n` in `range`,
/// flattened point-major to match [`Frequency`].
pub fn polynomial_orbit(
    t: &UnipotentAffineMap,
    x: &TorusPoint,
    polys: &PolynomialFamily,
    range: std::ops::Range<i64>,
    reg: &Registry,
) -> Result<Vec<Vec<f64>>> {
    range
        .map(|n| {
            let mut row = Vec::with_capacity(t.dim() * polys.len());
            for p in polys.polys() {
                let y = t.iterate_closed_form(&p.eval_i64(n), x)?;
                row.extend(y.shadows(reg));
            }
            Ok(row)
        })
        .collect()
}
