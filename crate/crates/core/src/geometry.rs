//! Lattice and continuum geometry.
//!
//! The particle system lives on the discrete hypercube
//! `U_n = {1, ..., n-1}^d`. Its boundary splits into strata per axis and
//! face; sites touching more than one face form the corner set, which is
//! negligible (`O(n^{d-2})`) but must be classified exactly. The continuum
//! side is the closed unit hypercube; the two are linked by an
//! order-preserving embedding that, in the slow regime `theta < 1`, places
//! the outermost lattice layer at distance `n^{theta-1}/c` from the faces
//! instead of `1/n`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The discrete hypercube `U_n`: `d`-tuples with every coordinate in `[1, n-1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct LatticeSpec {
    d: usize,
    n: usize,
}

impl LatticeSpec {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d < 1 || n < 2 {
            return Err(Error::InvalidLattice { d, n });
        }
        Ok(Self { d, n })
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.d
    }

    /// The scale parameter `n`.
    #[inline]
    pub fn scale(&self) -> usize {
        self.n
    }

    /// Points per axis, `n - 1`.
    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.n - 1
    }

    /// `|U_n| = (n-1)^d`.
    pub fn site_count(&self) -> usize {
        (self.n - 1).pow(self.d as u32)
    }

    pub fn contains(&self, coords: &[usize]) -> bool {
        coords.len() == self.d && coords.iter().all(|&x| x >= 1 && x < self.n)
    }

    /// All sites in lexicographic order of their coordinate tuples. This
    /// order defines the site-index bijection used by every other module.
    pub fn enumerate_sites(&self) -> Vec<Site> {
        (0..self.site_count()).map(|i| self.site_at(i)).collect()
    }

    /// Index of a site in the lexicographic enumeration.
    pub fn site_index(&self, site: &Site) -> Result<usize> {
        if !self.contains(site.coords()) {
            return Err(self.outside_error(site));
        }
        let base = self.n - 1;
        let mut idx = 0usize;
        for &x in site.coords() {
            idx = idx * base + (x - 1);
        }
        Ok(idx)
    }

    /// Inverse of [`site_index`](Self::site_index).
    pub fn site_at(&self, index: usize) -> Site {
        debug_assert!(index < self.site_count());
        let base = self.n - 1;
        let mut coords = vec![0usize; self.d];
        let mut rem = index;
        for axis in (0..self.d).rev() {
            coords[axis] = rem % base + 1;
            rem /= base;
        }
        Site::new(coords)
    }

    /// Nearest neighbours of `site` inside `U_n` (sum-norm distance one).
    /// Boundary sites simply have fewer neighbours; there is no wrap-around.
    pub fn neighbors(&self, site: &Site) -> Result<Vec<Site>> {
        if !self.contains(site.coords()) {
            return Err(self.outside_error(site));
        }
        let mut out = Vec::with_capacity(2 * self.d);
        for axis in 0..self.d {
            let x = site.coords()[axis];
            if x > 1 {
                let mut c = site.coords().to_vec();
                c[axis] = x - 1;
                out.push(Site::new(c));
            }
            if x < self.n - 1 {
                let mut c = site.coords().to_vec();
                c[axis] = x + 1;
                out.push(Site::new(c));
            }
        }
        Ok(out)
    }

    /// Boundary strata membership of a site: one `(axis, face)` label per
    /// face the site touches, plus the corner flag (more than one coordinate
    /// on a face). Empty strata means a bulk site.
    pub fn classify_boundary(&self, site: &Site) -> Result<BoundaryClass> {
        if !self.contains(site.coords()) {
            return Err(self.outside_error(site));
        }
        let mut strata = Vec::new();
        let mut touching_axes = 0usize;
        for (axis, &x) in site.coords().iter().enumerate() {
            let mut touches = false;
            if x == 1 {
                strata.push((axis, Face::Low));
                touches = true;
            }
            if x == self.n - 1 {
                strata.push((axis, Face::High));
                touches = true;
            }
            if touches {
                touching_axes += 1;
            }
        }
        Ok(BoundaryClass {
            strata,
            corner: touching_axes > 1,
        })
    }

    pub fn is_boundary(&self, site: &Site) -> bool {
        site.coords()
            .iter()
            .any(|&x| x == 1 || x == self.n - 1)
    }

    /// The continuum image `x/n` of a lattice site.
    pub fn scaled_point<F: Scalar>(&self, site: &Site) -> Point<F> {
        let n = F::of_usize(self.n);
        Point::new_unchecked(
            site.coords()
                .iter()
                .map(|&x| F::of_usize(x) / n)
                .collect(),
        )
    }

    fn outside_error(&self, site: &Site) -> Error {
        Error::SiteOutsideLattice {
            site: format!("{site}"),
            max: self.n - 1,
        }
    }
}

/// A lattice site, coordinates in `[1, n-1]^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Site(Vec<usize>);

impl Site {
    pub fn new(coords: Vec<usize>) -> Self {
        Self(coords)
    }

    #[inline]
    pub fn coords(&self) -> &[usize] {
        &self.0
    }
}

impl std::fmt::Display for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Which face of an axis a boundary point sits on. `Low` is the face where
/// the coordinate is minimal (lattice `x_i = 1`, continuum `u_i = 0`);
/// `High` is where it is maximal (`x_i = n-1`, `u_i = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Low,
    High,
}

/// Result of [`LatticeSpec::classify_boundary`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryClass {
    pub strata: Vec<(usize, Face)>,
    pub corner: bool,
}

impl BoundaryClass {
    pub fn is_bulk(&self) -> bool {
        self.strata.is_empty()
    }
}

/// A point of the closed unit hypercube.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<F: Scalar>(Vec<F>);

impl<F: Scalar> Point<F> {
    pub fn new(coords: Vec<F>) -> Result<Self> {
        for &u in &coords {
            if !(u >= F::zero() && u <= F::one()) {
                return Err(Error::InvalidParameter(format!(
                    "point coordinate {u} outside [0, 1]"
                )));
            }
        }
        Ok(Self(coords))
    }

    pub(crate) fn new_unchecked(coords: Vec<F>) -> Self {
        Self(coords)
    }

    #[inline]
    pub fn coords(&self) -> &[F] {
        &self.0
    }

    pub fn is_on_boundary(&self) -> bool {
        self.0.iter().any(|&u| u == F::zero() || u == F::one())
    }
}

/// Euclidean-nearest point of the boundary of the unit hypercube.
///
/// Among coordinates achieving the minimal distance to a face, the lowest
/// axis index wins and the `u_i = 0` face is preferred over `u_i = 1`, so
/// ties resolve deterministically.
pub fn project_to_boundary<F: Scalar>(point: &Point<F>) -> Point<F> {
    let mut best_axis = 0usize;
    let mut best_face = Face::Low;
    let mut best_dist = F::infinity();
    for (axis, &u) in point.coords().iter().enumerate() {
        let d_low = u;
        if d_low < best_dist {
            best_dist = d_low;
            best_axis = axis;
            best_face = Face::Low;
        }
        let d_high = F::one() - u;
        if d_high < best_dist {
            best_dist = d_high;
            best_axis = axis;
            best_face = Face::High;
        }
    }
    let mut coords = point.coords().to_vec();
    coords[best_axis] = match best_face {
        Face::Low => F::zero(),
        Face::High => F::one(),
    };
    Point::new_unchecked(coords)
}

/// Slowness parameter and boundary rate constant.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MappingParams<F: Scalar> {
    theta: F,
    c: F,
}

impl<F: Scalar> MappingParams<F> {
    pub fn new(theta: F, c: F) -> Result<Self> {
        if !(theta >= F::zero()) {
            return Err(Error::InvalidParameter(format!(
                "slow parameter theta must be >= 0, got {theta}"
            )));
        }
        if !(c > F::zero()) {
            return Err(Error::InvalidParameter(format!(
                "boundary rate constant c must be > 0, got {c}"
            )));
        }
        Ok(Self { theta, c })
    }

    #[inline]
    pub fn theta(&self) -> F {
        self.theta
    }

    #[inline]
    pub fn c(&self) -> F {
        self.c
    }

    /// `n^{theta-1} / c`: the offset of the outermost lattice layer from the
    /// continuum boundary in the slow regime.
    pub fn boundary_layer_width(&self, n: usize) -> F {
        F::of_usize(n).powf(self.theta - F::one()) / self.c
    }

    /// Whether the embedding needs the boundary-layer construction.
    #[inline]
    pub fn is_slow(&self) -> bool {
        self.theta < F::one()
    }
}

/// Per-coordinate embedding of the closed lattice `{0, ..., n}` into `[0, 1]`.
///
/// For `theta >= 1` this is exactly `j / n`. For `theta < 1` it is the unique
/// strictly increasing coordinate-wise map with endpoint gaps
/// `n^{theta-1}/c` and equal interior gaps, so consecutive gaps telescope to
/// one:
///
/// ```text
///   0,  w,  w + s,  w + 2s,  ...,  1 - w,  1        (w = n^{theta-1}/c,
///                                                     s = (1 - 2w)/(n - 2))
/// ```
#[derive(Debug, Clone)]
pub struct LatticeEmbedding<F: Scalar> {
    spec: LatticeSpec,
    table: Vec<F>,
}

impl<F: Scalar> LatticeEmbedding<F> {
    pub fn new(spec: &LatticeSpec, params: &MappingParams<F>) -> Result<Self> {
        let n = spec.scale();
        let table = if params.is_slow() {
            let width = params.boundary_layer_width(n);
            if n < 3 || !(width < F::of(0.5)) {
                return Err(Error::BoundaryLayerTooWide {
                    n,
                    width: width.to_f64_lossy(),
                });
            }
            let interior = (F::one() - F::of(2.0) * width) / F::of_usize(n - 2);
            let mut t = Vec::with_capacity(n + 1);
            t.push(F::zero());
            for j in 1..n {
                t.push(width + F::of_usize(j - 1) * interior);
            }
            t.push(F::one());
            t
        } else {
            let nf = F::of_usize(n);
            (0..=n).map(|j| F::of_usize(j) / nf).collect()
        };
        Ok(Self { spec: *spec, table })
    }

    #[inline]
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    /// Image of a single closure coordinate `j` in `{0, ..., n}`.
    pub fn map_coordinate(&self, j: usize) -> F {
        self.table[j]
    }

    /// Image of a point of the closed lattice (coordinates in `[0, n]`).
    pub fn map(&self, coords: &[usize]) -> Result<Point<F>> {
        if coords.len() != self.spec.dimension()
            || coords.iter().any(|&x| x > self.spec.scale())
        {
            return Err(Error::InvalidParameter(format!(
                "closure point {coords:?} outside [0, {}]^{}",
                self.spec.scale(),
                self.spec.dimension()
            )));
        }
        Ok(Point::new_unchecked(
            coords.iter().map(|&j| self.table[j]).collect(),
        ))
    }

    pub fn map_site(&self, site: &Site) -> Result<Point<F>> {
        if !self.spec.contains(site.coords()) {
            return Err(self.spec.outside_error(site));
        }
        self.map(site.coords())
    }
}
