//! Bernoulli product measures, the time-dependent reference measure, and
//! the variational functionals of the entropy method.

use crate::error::{Error, Result};
use crate::geometry::LatticeEmbedding;
use crate::master::{relative_entropy_product, ExactDistribution};
use crate::occupancy::Configuration;
use crate::pde::MacroField;
use crate::scalar::Scalar;

/// Product of site Bernoulli laws, densities strictly inside `(0, 1)`,
/// indexed by the site enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMeasure<F: Scalar> {
    densities: Vec<F>,
}

impl<F: Scalar> ProductMeasure<F> {
    pub fn new(densities: Vec<F>) -> Result<Self> {
        for &p in &densities {
            if !(p > F::zero() && p < F::one()) {
                return Err(Error::FieldOutOfRange {
                    value: p.to_f64_lossy(),
                });
            }
        }
        Ok(Self { densities })
    }

    pub fn constant(len: usize, value: F) -> Result<Self> {
        Self::new(vec![value; len])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.densities.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }

    #[inline]
    pub fn density(&self, site: usize) -> F {
        self.densities[site]
    }

    #[inline]
    pub fn densities(&self) -> &[F] {
        &self.densities
    }

    /// CSV export: `site,density` per row.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "site,density")?;
        for (i, p) in self.densities.iter().enumerate() {
            writeln!(w, "{i},{p}")?;
        }
        Ok(())
    }
}

/// The reference measure at the field's time: site `x` carries density
/// `rho(t, m_n(x))`, the PDE field interpolated at the embedded site.
pub fn reference_measure<F: Scalar>(
    field: &MacroField<F>,
    embedding: &LatticeEmbedding<F>,
) -> Result<ProductMeasure<F>> {
    let spec = embedding.spec();
    let mut densities = Vec::with_capacity(spec.site_count());
    for site in spec.enumerate_sites() {
        let u = embedding.map_site(&site)?;
        let rho = field.eval(u.coords());
        if !(rho > F::zero() && rho < F::one()) {
            return Err(Error::FieldOutOfRange {
                value: rho.to_f64_lossy(),
            });
        }
        densities.push(rho);
    }
    Ok(ProductMeasure { densities })
}

/// `log nu(eta) = sum_x [eta log p_x + (1 - eta) log(1 - p_x)]`.
pub fn product_log_likelihood<F: Scalar>(nu: &ProductMeasure<F>, eta: &Configuration) -> F {
    debug_assert_eq!(nu.len(), eta.sites());
    let mut acc = F::zero();
    for (i, &p) in nu.densities.iter().enumerate() {
        acc += if eta.get(i) { p.ln() } else { (F::one() - p).ln() };
    }
    acc
}

/// The variance function `psi(x) = x (1 - x)`.
#[inline]
pub fn bernoulli_variance<F: Scalar>(x: F) -> F {
    x * (F::one() - x)
}

/// First-order Taylor remainder of the variance function,
/// `M(x, y) = psi(x) - psi(y) - psi'(y) (x - y)`. Since `psi` is quadratic
/// this is identically `-(x - y)^2`.
#[inline]
pub fn variance_remainder<F: Scalar>(x: F, y: F) -> F {
    bernoulli_variance(x) - bernoulli_variance(y)
        - (F::one() - F::of(2.0) * y) * (x - y)
}

/// Bernoulli large-deviations rate function
/// `I_rho(lambda) = lambda log(lambda/rho) + (1-lambda) log((1-lambda)/(1-rho))`,
/// with the `0 log 0 = 0` convention at the endpoints.
pub fn bernoulli_rate<F: Scalar>(rho: F, lambda: F) -> F {
    let one = F::one();
    let head = if lambda > F::zero() {
        lambda * (lambda / rho).ln()
    } else {
        F::zero()
    };
    let tail = if lambda < one {
        (one - lambda) * ((one - lambda) / (one - rho)).ln()
    } else {
        F::zero()
    };
    head + tail
}

/// Maximize `coeff * M(lambda, rho) - I_rho(lambda)` over `lambda in [0,1]`
/// by a uniform grid pass followed by golden-section refinement; both terms
/// vanish only at `lambda = rho`, so the sup is zero and is attained there.
pub fn ld_sup_check<F: Scalar>(rho: F, coeff: F) -> (F, F) {
    let objective = |lambda: F| coeff * variance_remainder(lambda, rho) - bernoulli_rate(rho, lambda);
    let grid_points = 10_000usize;
    let mut best_arg = F::zero();
    let mut best = objective(F::zero());
    for k in 1..=grid_points {
        let lambda = F::of_usize(k) / F::of_usize(grid_points);
        let v = objective(lambda);
        if v > best {
            best = v;
            best_arg = lambda;
        }
    }
    // golden-section refinement on the bracketing interval
    let step = F::one() / F::of_usize(grid_points);
    let mut lo = (best_arg - step).max(F::zero());
    let mut hi = (best_arg + step).min(F::one());
    let phi = F::of(0.618_033_988_749_894_9);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = objective(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = objective(x1);
        }
    }
    let arg = (lo + hi) / F::of(2.0);
    let val = objective(arg).max(best);
    if val >= best {
        (val, arg)
    } else {
        (best, best_arg)
    }
}

/// Hoeffding check: the centered Bernoulli(p) variable is subgaussian of
/// order 1/4. Returns the maximum of
/// `log E[e^{t X}] - t^2 / 8` over a uniform grid of `t in [-50, 50]`;
/// the bound holds iff the result is (numerically) nonpositive.
pub fn subgaussian_check<F: Scalar>(p: F) -> F {
    let half = F::of(0.5);
    let mut worst = F::neg_infinity();
    let steps = 10_000usize;
    for k in 0..=steps {
        let t = F::of(-50.0) + F::of(100.0) * F::of_usize(k) / F::of_usize(steps);
        // log(p e^{t(1-p)} + (1-p) e^{-tp}) via log-sum-exp
        let a = t * (F::one() - p) + p.ln();
        let b = -t * p + (F::one() - p).ln();
        let (hi, lo) = if a > b { (a, b) } else { (b, a) };
        let log_mgf = hi + (F::one() + (lo - hi).exp()).ln();
        let gap = log_mgf - t * t * F::of(0.125);
        worst = worst.max(gap);
    }
    let _ = half;
    worst
}

/// Both sides of the entropy-inequality bound for a test function with the
/// given per-site values `g_at = G(x/n)` and sup norm.
///
/// `lhs = E_mu | (1/|U_n|) sum_x G(x/n) (eta(x) - nu_x) |` by full state
/// enumeration; `rhs = (||G||_inf + 1) sqrt(H(mu|nu) / |U_n|)`. When the
/// entropy vanishes the bound degenerates (its derivation divides by
/// `sqrt(H)`), so `rhs` is omitted and nothing is asserted.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EntropyBoundReport<F: Scalar> {
    pub lhs: F,
    pub rhs: Option<F>,
    pub entropy: F,
    pub holds: Option<bool>,
}

pub fn entropy_bound_check<F: Scalar>(
    mu: &ExactDistribution<F>,
    nu: &ProductMeasure<F>,
    g_at: &[F],
    g_sup: F,
) -> EntropyBoundReport<F> {
    let sites = nu.len();
    debug_assert_eq!(g_at.len(), sites);
    debug_assert_eq!(mu.len(), 1usize << sites);
    let inv = F::one() / F::of_usize(sites);
    // centering constant sum_x G(x/n) nu_x
    let mut centered = F::zero();
    for (i, &g) in g_at.iter().enumerate() {
        centered += g * nu.density(i);
    }
    let mut lhs = F::zero();
    for state in 0..mu.len() as u64 {
        let p = mu.prob(state);
        if p == F::zero() {
            continue;
        }
        let mut sum = F::zero();
        let mut bits = state;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            sum += g_at[i];
            bits &= bits - 1;
        }
        lhs += p * ((sum - centered) * inv).abs();
    }
    let entropy = relative_entropy_product(mu, nu);
    // entropies at roundoff scale are the degenerate edge: the bound's
    // derivation divides by sqrt(H)
    if entropy > F::of(1e-12) {
        let rhs = (g_sup + F::one()) * (entropy * inv).sqrt();
        EntropyBoundReport {
            lhs,
            rhs: Some(rhs),
            entropy,
            holds: Some(lhs <= rhs),
        }
    } else {
        EntropyBoundReport {
            lhs,
            rhs: None,
            entropy,
            holds: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{LatticeSpec, MappingParams, Site};
    use crate::master::relative_entropy;
    use crate::pde::Grid;
    use proptest::prelude::*;

    #[test]
    fn product_measure_validation() {
        assert!(ProductMeasure::new(vec![0.5, 0.999]).is_ok());
        assert!(ProductMeasure::new(vec![0.5, 1.0]).is_err());
        assert!(ProductMeasure::new(vec![0.0]).is_err());
    }

    #[test]
    fn log_likelihood_examples() {
        let nu = ProductMeasure::constant(4, 0.5).unwrap();
        let eta = Configuration::from_state(4, 0b0110);
        assert!((product_log_likelihood(&nu, &eta) + 4.0 * (2.0f64).ln()).abs() < 1e-14);

        let nu = ProductMeasure::new(vec![0.2, 0.7, 0.9]).unwrap();
        let all = Configuration::filled(3);
        let want = 0.2f64.ln() + 0.7f64.ln() + 0.9f64.ln();
        assert!((product_log_likelihood(&nu, &all) - want).abs() < 1e-14);
    }

    #[test]
    fn log_likelihood_normalizes() {
        // exponentiating and summing over all states of a 4-site lattice
        let nu = ProductMeasure::<f64>::new(vec![0.2, 0.7, 0.9, 0.41]).unwrap();
        let total: f64 = (0..16u64)
            .map(|s| product_log_likelihood(&nu, &Configuration::from_state(4, s)).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-12, "total {total}");
    }

    #[test]
    fn reference_measure_follows_the_field() {
        let spec = LatticeSpec::new(2, 10).unwrap();
        let grid = Grid::new(2, 16).unwrap();

        // constant field: all densities alpha
        let field = MacroField::from_fn(grid, 0.0, |_| 0.3f64);
        let params = MappingParams::new(2.0, 1.0).unwrap();
        let emb = LatticeEmbedding::new(&spec, &params).unwrap();
        let nu = reference_measure(&field, &emb).unwrap();
        assert!(nu.densities().iter().all(|&p| (p - 0.3).abs() < 1e-12));

        // theta >= 1: density at x is the field at x/n
        let field = MacroField::from_fn(grid, 0.0, |u: &[f64]| 0.2 + 0.5 * u[0]);
        let nu = reference_measure(&field, &emb).unwrap();
        let site = Site::new(vec![3, 7]);
        let idx = spec.site_index(&site).unwrap();
        assert!((nu.density(idx) - (0.2 + 0.5 * 0.3)).abs() < 1e-9);

        // theta < 1: the outermost layer sits at the boundary-layer offset,
        // not at 1/n
        let slow = MappingParams::new(0.0, 1.0).unwrap();
        let emb = LatticeEmbedding::new(&spec, &slow).unwrap();
        let nu = reference_measure(&field, &emb).unwrap();
        let edge = Site::new(vec![1, 5]);
        let idx = spec.site_index(&edge).unwrap();
        let w = 0.1; // n^{theta-1}/c = 1/10
        let expect = 0.2 + 0.5 * w;
        assert!((nu.density(idx) - expect).abs() < 1e-9, "{}", nu.density(idx));

        // fields leaving (0, 1) are rejected, not clamped
        let bad = MacroField::from_fn(grid, 0.0, |u: &[f64]| 0.9 + 0.5 * u[0]);
        assert!(matches!(
            reference_measure(&bad, &emb),
            Err(crate::error::Error::FieldOutOfRange { .. })
        ));
    }

    #[test]
    fn variance_functionals() {
        assert_eq!(bernoulli_variance(0.5f64), 0.25);
        assert_eq!(bernoulli_variance(0.0f64), 0.0);
        // I_rho vanishes exactly at rho and is positive elsewhere
        assert_eq!(bernoulli_rate(0.3f64, 0.3), 0.0);
        assert!(bernoulli_rate(0.3f64, 0.31) > 0.0);
        assert!(bernoulli_rate(0.3f64, 0.0) > 0.0);
        assert!(bernoulli_rate(0.3f64, 1.0) > 0.0);
    }

    proptest! {
        #[test]
        fn remainder_is_negative_square(x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let m = variance_remainder(x, y);
            prop_assert!((m + (x - y).powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn ld_sup_examples() {
        // C = 0: sup of -I_rho is 0 at rho
        let (sup, arg) = ld_sup_check(0.3f64, 0.0);
        assert!(sup.abs() <= 1e-9, "sup {sup}");
        assert!((arg - 0.3).abs() < 1e-6, "arg {arg}");
        for (rho, c) in [(0.5f64, 10.0), (0.1, 1.0)] {
            let (sup, arg) = ld_sup_check(rho, c);
            assert!(sup <= 1e-9, "sup {sup}");
            assert!((arg - rho).abs() < 1e-6, "arg {arg} rho {rho}");
        }
    }

    #[test]
    fn subgaussian_examples() {
        // p = 1/2: log cosh(t/2) <= t^2/8 with equality gap vanishing at 0
        assert!(subgaussian_check(0.5f64) <= 1e-12);
        // strict slack at p = 0.9
        assert!(subgaussian_check(0.9f64) <= 1e-12);
        // and the gap at t = 1 is strictly negative for p = 0.9
        let p: f64 = 0.9;
        let t: f64 = 1.0;
        let mgf = (p * (t * (1.0 - p)).exp() + (1.0 - p) * (-t * p).exp()).ln();
        assert!(mgf - t * t / 8.0 < -1e-4);
    }

    #[test]
    fn entropy_bound_point_mass_case() {
        // mu = delta_{all ones}, nu = 1/2 on 4 sites, G = 1:
        // lhs = 1/2, H = 4 log 2, rhs = 2 sqrt(log 2) ~ 1.665
        let mu = ExactDistribution::<f64>::point_mass(4, 0b1111);
        let nu = ProductMeasure::constant(4, 0.5).unwrap();
        let report = entropy_bound_check(&mu, &nu, &[1.0, 1.0, 1.0, 1.0], 1.0);
        assert!((report.lhs - 0.5).abs() < 1e-12);
        assert!((report.entropy - 4.0 * (2.0f64).ln()).abs() < 1e-12);
        let rhs = report.rhs.unwrap();
        assert!((rhs - 2.0 * (4.0f64 * (2.0f64).ln() / 4.0).sqrt()).abs() < 1e-12);
        assert_eq!(report.holds, Some(true));
    }

    #[test]
    fn entropy_bound_degenerate_case_reports_only() {
        // mu = nu: H = 0, assertion skipped, lhs still computed
        let nu = ProductMeasure::<f64>::constant(3, 0.4).unwrap();
        let mu = ExactDistribution::from_product(&nu);
        let report = entropy_bound_check(&mu, &nu, &[1.0, 1.0, 1.0], 1.0);
        assert!(report.entropy.abs() < 1e-14);
        assert!(report.rhs.is_none());
        assert!(report.holds.is_none());
        assert!(report.lhs > 0.0);
    }

    #[test]
    fn two_path_entropy_consistency() {
        // relative entropy against a product measure computed via the
        // product likelihood matches the direct state-sum path
        let nu = ProductMeasure::new(vec![0.2, 0.7, 0.55, 0.4]).unwrap();
        let mut probs = vec![0.0; 16];
        let mut rng = crate::rng::replica_rng(5, 0);
        use rand::Rng;
        let mut total = 0.0f64;
        for p in probs.iter_mut() {
            *p = rng.random::<f64>();
            total += *p;
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
        let mu = ExactDistribution::new(probs).unwrap();
        let via_product = relative_entropy_product(&mu, &nu);
        let dense = ExactDistribution::from_product(&nu);
        let via_states = relative_entropy(&mu, &dense).unwrap();
        assert!(
            (via_product - via_states).abs() < 1e-12,
            "{via_product} vs {via_states}"
        );
    }

    #[test]
    fn profile_grid_sup_check() {
        // ld_sup_check over the density/coefficient grid stays at zero
        for k in 1..=19 {
            let rho = 0.05 * k as f64;
            for c in [0.0, 0.1, 1.0, 10.0, 100.0] {
                let (sup, _) = ld_sup_check(rho, c);
                assert!(sup <= 1e-9, "rho {rho} c {c} sup {sup}");
            }
        }
    }
}
