//! Exact distribution evolution on tiny lattices.
//!
//! For `|U_n|` up to 20 sites the full generator over `2^{|U_n|}` states is
//! built explicitly; the forward equation is solved by uniformization
//! (Poisson-weighted powers of the uniformized stochastic matrix, with a
//! rigorously truncated tail), which preserves nonnegativity. This module
//! is the ground truth against which the event-driven simulator and the
//! entropy diagnostics are verified.

use crate::dynamics::{SimParams, SimTables};
use crate::error::{Error, Result};
use crate::measures::ProductMeasure;
use crate::scalar::Scalar;

/// Generator size cap: `2^20` states.
pub const MAX_SITES: usize = 20;
/// Dense linear-solve cap for the stationary distribution.
pub const MAX_STATIONARY_SITES: usize = 11;
/// Per-entry absolute tolerance of [`evolve`].
pub const EVOLVE_TOL: f64 = 1e-10;

/// Probability vector over all configurations of a tiny lattice, indexed by
/// the bit pattern of the configuration under the site enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution<F: Scalar> {
    probs: Vec<F>,
}

impl<F: Scalar> ExactDistribution<F> {
    pub fn new(probs: Vec<F>) -> Result<Self> {
        if probs.is_empty() || !probs.len().is_power_of_two() {
            return Err(Error::InvalidParameter(
                "distribution length must be a power of two".into(),
            ));
        }
        let mut sum = F::zero();
        for &p in &probs {
            if p < F::zero() {
                return Err(Error::InvalidParameter(format!(
                    "negative probability {p}"
                )));
            }
            sum += p;
        }
        let tol = F::of(1e-12) + F::of_usize(probs.len()) * F::epsilon();
        if (sum - F::one()).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    fn from_raw(probs: Vec<F>) -> Self {
        Self { probs }
    }

    pub fn point_mass(sites: usize, state: u64) -> Self {
        let mut probs = vec![F::zero(); 1 << sites];
        probs[state as usize] = F::one();
        Self { probs }
    }

    pub fn uniform(sites: usize) -> Self {
        let len = 1usize << sites;
        Self {
            probs: vec![F::one() / F::of_usize(len); len],
        }
    }

    /// The product measure as a dense state distribution.
    pub fn from_product(nu: &ProductMeasure<F>) -> Self {
        let sites = nu.len();
        let mut probs = vec![F::zero(); 1 << sites];
        for (state, p) in probs.iter_mut().enumerate() {
            let mut acc = F::one();
            for i in 0..sites {
                let d = nu.density(i);
                acc *= if state >> i & 1 == 1 { d } else { F::one() - d };
            }
            *p = acc;
        }
        Self { probs }
    }

    /// Empirical distribution from per-state sample counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidParameter("no samples".into()));
        }
        let t = F::of(total as f64);
        Self::new(counts.iter().map(|&c| F::of(c as f64) / t).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn sites(&self) -> usize {
        self.probs.len().trailing_zeros() as usize
    }

    #[inline]
    pub fn prob(&self, state: u64) -> F {
        self.probs[state as usize]
    }

    #[inline]
    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn total_mass(&self) -> F {
        self.probs.iter().copied().sum()
    }

    /// Occupation probability of each site.
    pub fn marginals(&self) -> Vec<F> {
        let sites = self.sites();
        let mut out = vec![F::zero(); sites];
        for (state, &p) in self.probs.iter().enumerate() {
            for (i, o) in out.iter_mut().enumerate() {
                if state >> i & 1 == 1 {
                    *o += p;
                }
            }
        }
        out
    }

    pub fn total_variation(&self, other: &Self) -> F {
        debug_assert_eq!(self.len(), other.len());
        let mut acc = F::zero();
        for (a, b) in self.probs.iter().zip(&other.probs) {
            acc += (*a - *b).abs();
        }
        acc * F::of(0.5)
    }

    /// CSV export: `state,probability` per row.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "state,probability")?;
        for (s, p) in self.probs.iter().enumerate() {
            writeln!(w, "{s},{p}")?;
        }
        Ok(())
    }
}

/// Sparse generator of the speed-up chain: off-diagonal rates in CSR form,
/// diagonal stored separately as the negated row sum.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix<F: Scalar> {
    sites: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    rates: Vec<F>,
    diag: Vec<F>,
}

impl<F: Scalar> GeneratorMatrix<F> {
    #[inline]
    pub fn sites(&self) -> usize {
        self.sites
    }

    #[inline]
    pub fn states(&self) -> usize {
        1usize << self.sites
    }

    pub fn diag(&self, state: u64) -> F {
        self.diag[state as usize]
    }

    pub fn row(&self, state: u64) -> impl Iterator<Item = (u64, F)> + '_ {
        let lo = self.row_ptr[state as usize];
        let hi = self.row_ptr[state as usize + 1];
        self.cols[lo..hi]
            .iter()
            .zip(&self.rates[lo..hi])
            .map(|(&c, &r)| (c as u64, r))
    }

    pub fn out_degree(&self, state: u64) -> usize {
        self.row_ptr[state as usize + 1] - self.row_ptr[state as usize]
    }

    /// Largest outflow rate, the uniformization constant.
    pub fn uniformization_rate(&self) -> F {
        self.diag
            .iter()
            .fold(F::zero(), |acc, &d| acc.max(-d))
    }

    /// `out = v P` for the uniformized matrix `P = I + Q / lambda`.
    fn apply_uniformized(&self, lambda: F, v: &[F], out: &mut [F]) {
        out.fill(F::zero());
        for (i, &vi) in v.iter().enumerate() {
            if vi == F::zero() {
                continue;
            }
            out[i] += vi * (F::one() + self.diag[i] / lambda);
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            for k in lo..hi {
                out[self.cols[k] as usize] += vi * self.rates[k] / lambda;
            }
        }
    }
}

/// Exact generator of the parameterized chain: `n^2` per discrepant
/// neighbour pair, `c n^{2-theta} [g (1-eta) + (1-g) eta]` per boundary
/// site. Fails beyond [`MAX_SITES`].
pub fn build_generator<F: Scalar>(params: &SimParams<F>) -> Result<GeneratorMatrix<F>> {
    let tables = SimTables::new(params)?;
    build_generator_from_tables(&tables)
}

/// Same, reusing precomputed lattice tables.
pub fn build_generator_from_tables<F: Scalar>(
    tables: &SimTables<F>,
) -> Result<GeneratorMatrix<F>> {
    let sites = tables.spec().site_count();
    if sites > MAX_SITES {
        return Err(Error::StateSpaceTooLarge {
            sites,
            cap: MAX_SITES,
        });
    }
    let states = 1usize << sites;
    let pairs = tables.pair_list();
    let (boundary_sites, g_values) = tables.boundary_data();
    let exchange = tables.exchange_rate();
    let flip_scale = tables.flip_scale();

    let mut row_ptr = Vec::with_capacity(states + 1);
    let mut cols = Vec::new();
    let mut rates = Vec::new();
    let mut diag = Vec::with_capacity(states);
    row_ptr.push(0usize);
    for state in 0..states as u64 {
        let mut outflow = F::zero();
        for &[a, b] in pairs {
            let occ_a = state >> a & 1;
            let occ_b = state >> b & 1;
            if occ_a != occ_b {
                cols.push((state ^ (1 << a) ^ (1 << b)) as u32);
                rates.push(exchange);
                outflow += exchange;
            }
        }
        for (slot, &site) in boundary_sites.iter().enumerate() {
            let g = g_values[slot];
            let rate = flip_scale
                * if state >> site & 1 == 1 {
                    F::one() - g
                } else {
                    g
                };
            cols.push((state ^ (1 << site)) as u32);
            rates.push(rate);
            outflow += rate;
        }
        diag.push(-outflow);
        row_ptr.push(cols.len());
    }
    Ok(GeneratorMatrix {
        sites,
        row_ptr,
        cols,
        rates,
        diag,
    })
}

/// `mu_t = mu_0 exp(t Q)` by uniformization, absolute error at most
/// [`EVOLVE_TOL`] per entry. Long horizons are split into segments so the
/// Poisson weights stay representable; truncation failure is an error,
/// never silent.
pub fn evolve<F: Scalar>(
    q: &GeneratorMatrix<F>,
    mu0: &ExactDistribution<F>,
    t: F,
) -> Result<ExactDistribution<F>> {
    if t < F::zero() {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    if mu0.len() != q.states() {
        return Err(Error::InvalidParameter(
            "distribution and generator sizes differ".into(),
        ));
    }
    let lambda = q.uniformization_rate();
    if t == F::zero() || lambda == F::zero() {
        return Ok(mu0.clone());
    }
    let total = lambda * t;
    let segments = (total / F::of(64.0)).ceil().to_f64_lossy().max(1.0) as usize;
    let tau = t / F::of_usize(segments);
    // the tail target cannot beat the scalar's own resolution (matters for
    // f32, where 1 - 1e-10 rounds to 1 and the loop would never terminate)
    let seg_tol = (F::of(EVOLVE_TOL) / F::of_usize(segments)).max(F::epsilon() * F::of(4.0));
    let lam_tau = lambda * tau;
    let budget = (lam_tau.to_f64_lossy() * 2.0 + 200.0) as usize;

    let mut current = mu0.probs().to_vec();
    let mut power = vec![F::zero(); current.len()];
    let mut acc = vec![F::zero(); current.len()];
    for _ in 0..segments {
        let mut weight = (-lam_tau).exp();
        let mut cum = weight;
        for (a, &c) in acc.iter_mut().zip(&current) {
            *a = weight * c;
        }
        let mut k = 0usize;
        while cum < F::one() - seg_tol {
            k += 1;
            if k > budget {
                return Err(Error::TruncationBudgetExceeded { budget });
            }
            q.apply_uniformized(lambda, &current, &mut power);
            std::mem::swap(&mut current, &mut power);
            weight = weight * lam_tau / F::of_usize(k);
            cum += weight;
            for (a, &c) in acc.iter_mut().zip(&current) {
                *a += weight * c;
            }
        }
        current.copy_from_slice(&acc);
    }
    Ok(ExactDistribution::from_raw(current))
}

/// The unique stationary distribution `pi Q = 0`, by a dense linear solve
/// with the normalization row. Requires an irreducible generator (true
/// whenever `0 < g < 1`) and a lattice small enough for dense algebra.
pub fn stationary<F: Scalar>(q: &GeneratorMatrix<F>) -> Result<ExactDistribution<F>> {
    if q.sites() > MAX_STATIONARY_SITES {
        return Err(Error::StateSpaceTooLarge {
            sites: q.sites(),
            cap: MAX_STATIONARY_SITES,
        });
    }
    let s = q.states();
    // A = Q^T with the last equation replaced by normalization; b = e_last.
    let mut a = vec![F::zero(); s * s];
    for i in 0..s as u64 {
        a[(i as usize) * s + i as usize] = q.diag(i);
        for (j, rate) in q.row(i) {
            a[(j as usize) * s + i as usize] = rate;
        }
    }
    for j in 0..s {
        a[(s - 1) * s + j] = F::one();
    }
    let mut b = vec![F::zero(); s];
    b[s - 1] = F::one();

    // Gaussian elimination with partial pivoting.
    for col in 0..s {
        let mut pivot = col;
        let mut best = a[col * s + col].abs();
        for r in col + 1..s {
            let v = a[r * s + col].abs();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if !(best > F::of(1e-300)) {
            return Err(Error::SingularGenerator);
        }
        if pivot != col {
            for k in 0..s {
                a.swap(col * s + k, pivot * s + k);
            }
            b.swap(col, pivot);
        }
        let inv = F::one() / a[col * s + col];
        for r in col + 1..s {
            let factor = a[r * s + col] * inv;
            if factor == F::zero() {
                continue;
            }
            a[r * s + col] = F::zero();
            for k in col + 1..s {
                let v = a[col * s + k];
                a[r * s + k] -= factor * v;
            }
            b[r] = b[r] - factor * b[col];
        }
    }
    let mut pi = vec![F::zero(); s];
    for row in (0..s).rev() {
        let mut acc = b[row];
        for k in row + 1..s {
            acc -= a[row * s + k] * pi[k];
        }
        pi[row] = acc / a[row * s + row];
    }
    // roundoff cleanup and residual check
    let lambda = q.uniformization_rate().max(F::one());
    let mut sum = F::zero();
    for p in pi.iter_mut() {
        if *p < F::zero() {
            if *p < F::of(-1e-9) {
                return Err(Error::SingularGenerator);
            }
            *p = F::zero();
        }
        sum += *p;
    }
    for p in pi.iter_mut() {
        *p /= sum;
    }
    let mut residual = F::zero();
    let mut flow = vec![F::zero(); s];
    for i in 0..s as u64 {
        flow[i as usize] += pi[i as usize] * q.diag(i);
        for (j, rate) in q.row(i) {
            flow[j as usize] += pi[i as usize] * rate;
        }
    }
    for f in &flow {
        residual = residual.max(f.abs());
    }
    if residual > F::of(1e-8) * lambda {
        return Err(Error::SingularGenerator);
    }
    Ok(ExactDistribution::from_raw(pi))
}

/// `H(mu | nu) = sum_eta mu(eta) log(mu(eta)/nu(eta))`, natural logarithm,
/// with `0 log 0 = 0`. Infinite entropy (nu vanishing where mu does not) is
/// an explicit error.
pub fn relative_entropy<F: Scalar>(
    mu: &ExactDistribution<F>,
    nu: &ExactDistribution<F>,
) -> Result<F> {
    debug_assert_eq!(mu.len(), nu.len());
    let mut acc = F::zero();
    for (&p, &q) in mu.probs().iter().zip(nu.probs()) {
        if p == F::zero() {
            continue;
        }
        if q == F::zero() {
            return Err(Error::InfiniteRelativeEntropy);
        }
        acc += p * (p / q).ln();
    }
    Ok(acc)
}

/// Relative entropy against a product measure, via the product
/// log-likelihood (always finite: product densities are interior).
pub fn relative_entropy_product<F: Scalar>(
    mu: &ExactDistribution<F>,
    nu: &ProductMeasure<F>,
) -> F {
    let sites = nu.len();
    debug_assert_eq!(mu.len(), 1usize << sites);
    let mut base = F::zero();
    let mut delta = Vec::with_capacity(sites);
    for i in 0..sites {
        let p = nu.density(i);
        base += (F::one() - p).ln();
        delta.push(p.ln() - (F::one() - p).ln());
    }
    let mut acc = F::zero();
    for (state, &p) in mu.probs().iter().enumerate() {
        if p == F::zero() {
            continue;
        }
        let mut log_nu = base;
        let mut bits = state;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            log_nu += delta[i];
            bits &= bits - 1;
        }
        acc += p * (p.ln() - log_nu);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ProfileFn;
    use crate::dynamics::BoundaryProfile;
    use crate::geometry::{LatticeSpec, MappingParams};

    fn params(d: usize, n: usize, theta: f64, c: f64, g: &str) -> SimParams<f64> {
        SimParams::new(
            LatticeSpec::new(d, n).unwrap(),
            MappingParams::new(theta, c).unwrap(),
            BoundaryProfile::new(ProfileFn::parse(g).unwrap(), 0.05, d).unwrap(),
            1.0,
            vec![],
            0,
        )
        .unwrap()
    }

    #[test]
    fn two_state_generator() {
        // d=2, n=2: one site, flip scale c n^{2-theta}
        let p = params(2, 2, 1.0, 1.5, "constant(0.3)");
        let q = build_generator(&p).unwrap();
        assert_eq!(q.states(), 2);
        let scale = 1.5 * 2.0f64; // c * n^{2-1}
        let up: Vec<_> = q.row(0).collect();
        assert_eq!(up, vec![(1u64, scale * 0.3)]);
        let down: Vec<_> = q.row(1).collect();
        assert_eq!(down, vec![(0u64, scale * 0.7)]);
        assert!((q.diag(0) + scale * 0.3).abs() < 1e-12);
    }

    #[test]
    fn sixteen_state_generator_structure() {
        // d=2, n=3: 4 sites, all boundary; out-degree = discrepant pairs + 4
        let p = params(2, 3, 1.0, 1.0, "constant(0.4)");
        let q = build_generator(&p).unwrap();
        assert_eq!(q.states(), 16);
        let pairs: [(u64, u64); 4] = [(0, 1), (0, 2), (1, 3), (2, 3)];
        for state in 0..16u64 {
            let discrepant = pairs
                .iter()
                .filter(|(a, b)| state >> a & 1 != state >> b & 1)
                .count();
            assert_eq!(q.out_degree(state), discrepant + 4, "state {state}");
            // row sums vanish
            let sum: f64 = q.row(state).map(|(_, r)| r).sum::<f64>() + q.diag(state);
            assert!(sum.abs() < 1e-12);
        }
    }

    #[test]
    fn state_space_guard() {
        let p = params(1, 30, 1.0, 1.0, "constant(0.4)");
        assert!(matches!(
            build_generator(&p),
            Err(Error::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn evolve_matches_two_state_closed_form() {
        let alpha = 0.35;
        let p = params(2, 2, 0.5, 1.2, "constant(0.35)");
        let q = build_generator(&p).unwrap();
        let rate = 1.2 * 4.0 * 2.0f64.powf(-0.5); // c n^2 n^{-theta}
        for t in [0.0, 0.05, 0.3, 2.0] {
            let mu = evolve(&q, &ExactDistribution::point_mass(1, 0), t).unwrap();
            let expect = alpha * (1.0 - (-rate * t).exp());
            assert!(
                (mu.prob(1) - expect).abs() < 1e-10,
                "t={t}: {} vs {expect}",
                mu.prob(1)
            );
        }
    }

    #[test]
    fn evolve_conserves_mass_and_is_a_semigroup() {
        let p = params(2, 3, 1.0, 2.0, "affine(0.3,0.25,0.1)");
        let q = build_generator(&p).unwrap();
        let mut probs = vec![0.0f64; 16];
        for (i, v) in probs.iter_mut().enumerate() {
            *v = (i as f64 + 1.0).sqrt();
        }
        let total: f64 = probs.iter().sum();
        for v in probs.iter_mut() {
            *v /= total;
        }
        let mu0 = ExactDistribution::new(probs).unwrap();

        let direct = evolve(&q, &mu0, 0.25).unwrap();
        assert!((direct.total_mass() - 1.0).abs() < 1e-10);
        let two_hop = evolve(&q, &evolve(&q, &mu0, 0.1).unwrap(), 0.15).unwrap();
        for s in 0..16u64 {
            assert!(
                (direct.prob(s) - two_hop.prob(s)).abs() < 1e-9,
                "state {s}"
            );
        }
        // t = 0 is the identity
        let same = evolve(&q, &mu0, 0.0).unwrap();
        assert_eq!(same.probs(), mu0.probs());
    }

    #[test]
    fn long_horizon_segments_still_conserve_mass() {
        let p = params(2, 3, 0.0, 2.0, "constant(0.3)");
        let q = build_generator(&p).unwrap();
        // lambda t >> 64 forces segmentation
        let mu = evolve(&q, &ExactDistribution::uniform(4), 5.0).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < 1e-9);
        assert!(mu.probs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn stationary_is_product_for_constant_g() {
        for alpha in [0.2, 0.5, 0.8] {
            let p = params(2, 3, 1.0, 1.0, &format!("constant({alpha})"));
            let q = build_generator(&p).unwrap();
            let pi = stationary(&q).unwrap();
            let product = ExactDistribution::from_product(
                &ProductMeasure::constant(4, alpha).unwrap(),
            );
            let tv = pi.total_variation(&product);
            assert!(tv < 1e-10, "alpha {alpha}: tv {tv}");
        }
    }

    #[test]
    fn stationary_two_state_detailed_balance() {
        let p = params(2, 2, 1.0, 1.0, "constant(0.3)");
        let q = build_generator(&p).unwrap();
        let pi = stationary(&q).unwrap();
        assert!((pi.prob(1) / pi.prob(0) - 0.3 / 0.7).abs() < 1e-12);
    }

    #[test]
    fn stationary_is_not_product_for_varying_g() {
        let p = params(2, 3, 1.0, 1.0, "affine(0.25,0.4,0.1)");
        let q = build_generator(&p).unwrap();
        let pi = stationary(&q).unwrap();
        let marginals = pi.marginals();
        let best_product = ExactDistribution::from_product(
            &ProductMeasure::new(marginals).unwrap(),
        );
        let tv = pi.total_variation(&best_product);
        assert!(tv > 1e-6, "tv {tv}");
    }

    #[test]
    fn entropy_to_stationary_is_non_increasing() {
        let p = params(2, 3, 1.0, 1.0, "affine(0.25,0.4,0.1)");
        let q = build_generator(&p).unwrap();
        let pi = stationary(&q).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..8 {
            let t = 0.05 * k as f64;
            let mu = evolve(&q, &ExactDistribution::point_mass(4, 0b0101), t).unwrap();
            let h = relative_entropy(&mu, &pi).unwrap();
            assert!(h <= prev + 1e-9, "t={t}: {h} > {prev}");
            prev = h;
        }
    }

    #[test]
    fn relative_entropy_examples() {
        // H(mu | mu) = 0
        let mu = ExactDistribution::<f64>::uniform(3);
        assert!(relative_entropy(&mu, &mu).unwrap().abs() < 1e-14);
        // point mass against uniform on 2^k states: k log 2
        let delta = ExactDistribution::point_mass(3, 5);
        let h = relative_entropy(&delta, &mu).unwrap();
        assert!((h - 3.0 * 2.0f64.ln()).abs() < 1e-12);
        // vanishing reference is an explicit error
        assert!(matches!(
            relative_entropy(&delta, &ExactDistribution::point_mass(3, 1)),
            Err(Error::InfiniteRelativeEntropy)
        ));
    }
}
