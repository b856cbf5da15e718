//! Simulated binary crossover and polynomial mutation.

use rand::Rng;

use super::genome::Genome;
use crate::error::{arg_err, Result};
use crate::scalar::Real;

/// SBX spread factor for a uniform draw `u` in `[0, 1)`.
pub fn sbx_beta<T: Real>(u: T, eta_c: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let exponent = one / (eta_c + one);
    if u < T::lit(0.5) {
        (two * u).powf(exponent)
    } else {
        (one / (two * (one - u))).powf(exponent)
    }
}

/// Children `0.5 [(a + b) ∓ β |b - a|]`, unclipped.
#[inline]
pub fn sbx_pair<T: Real>(a: T, b: T, beta: T) -> (T, T) {
    let half = T::lit(0.5);
    let sum = a + b;
    let spread = beta * (b - a).abs();
    (half * (sum - spread), half * (sum + spread))
}

pub fn sbx_crossover<T: Real, R: Rng + ?Sized>(
    a: &Genome<T>,
    b: &Genome<T>,
    eta_c: T,
    rng: &mut R,
) -> Result<(Genome<T>, Genome<T>)> {
    if a.len() != b.len() || !a.same_layout(b) {
        return arg_err(format!("parents of length {} and {} differ", a.len(), b.len()));
    }
    let mut c1 = Vec::with_capacity(a.len());
    let mut c2 = Vec::with_capacity(a.len());
    for (&x, &y) in a.genes().iter().zip(b.genes()) {
        let beta = sbx_beta(T::lit(rng.random::<f64>()), eta_c);
        let (u, v) = sbx_pair(x, y, beta);
        c1.push(u);
        c2.push(v);
    }
    let (n, eps) = (a.kernel_count(), a.epsilon());
    Ok((
        Genome::from_genes_clipped(c1, n, eps),
        Genome::from_genes_clipped(c2, n, eps),
    ))
}

/// Polynomial-mutation perturbation for a uniform draw `u` in `[0, 1)`.
pub fn pm_delta<T: Real>(u: T, eta_m: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let exponent = one / (eta_m + one);
    if u < T::lit(0.5) {
        (two * u).powf(exponent) - one
    } else {
        one - (two * (one - u)).powf(exponent)
    }
}

/// Mutates each gene with probability `p_m` by `δ (ub - lb)` and clips.
pub fn polynomial_mutation<T: Real, R: Rng + ?Sized>(g: &Genome<T>, p_m: f64, eta_m: T, rng: &mut R) -> Genome<T> {
    let mut genes = g.genes().to_vec();
    for (j, x) in genes.iter_mut().enumerate() {
        if rng.random::<f64>() < p_m {
            let delta = pm_delta(T::lit(rng.random::<f64>()), eta_m);
            *x += delta * (g.upper(j) - g.lower(j));
        }
    }
    Genome::from_genes_clipped(genes, g.kernel_count(), g.epsilon())
}
