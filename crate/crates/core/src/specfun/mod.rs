//! Special functions: integer-order Bessel functions of the first kind,
//! their positive zeros, and the Gamma function.

mod bessel;
mod gamma;
mod zeros;

pub use bessel::{bessel_j, bessel_j_orders, bessel_j_prime, jn};
pub use gamma::{gamma_fn, recip_gamma};
pub use zeros::{
    bessel_zeros, bessel_zeros_below, lemma_inner_cutoff, lemma_lower_bound_scan, mcmahon_guess,
    BesselZeroTable, LowerBoundScan,
};
