//! Exact event-driven simulation of the speed-up exclusion process.
//!
//! The generator is `n^2 L_n`: every unordered pair of neighbouring sites
//! exchanges its occupations at rate `n^2`, and every boundary site flips —
//! creation at rate `c n^{2-theta} g([z/n])` when empty, annihilation at
//! rate `c n^{2-theta} (1 - g([z/n]))` when occupied, where `[z/n]` is the
//! nearest boundary point of the continuum hypercube. Since the `n^2`
//! speed-up is baked into the simulated rates, simulated time is
//! macroscopic time.
//!
//! Exchanges between equal occupations are no-ops and are kept out of the
//! rate table: the simulator maintains the set of discrepant neighbour
//! pairs incrementally (uniform rates, so selection is a uniform index) and
//! a Fenwick tree over the occupancy-dependent boundary flip rates.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::catalog::ProfileFn;
use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::geometry::{project_to_boundary, LatticeSpec, MappingParams, Site};
use crate::measures::ProductMeasure;
use crate::occupancy::Configuration;
use crate::rng;
use crate::scalar::Scalar;

pub use crate::occupancy::Configuration as OccupancyConfiguration;

const NO_SLOT: u32 = u32::MAX;

/// Boundary density profile `g` with its margin: `g` must take values in
/// `(eps0, 1 - eps0)` on the boundary.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoundaryProfile<F: Scalar> {
    g: ProfileFn<F>,
    eps0: F,
}

impl<F: Scalar> BoundaryProfile<F> {
    pub fn new(g: ProfileFn<F>, eps0: F, d: usize) -> Result<Self> {
        if !(eps0 > F::zero() && eps0 < F::of(0.5)) {
            return Err(Error::InvalidParameter(format!(
                "margin eps0 must lie in (0, 1/2), got {eps0}"
            )));
        }
        g.validate_dim(d)?;
        let (lo, hi) = g.boundary_range(d);
        if !(lo > eps0 && hi < F::one() - eps0) {
            return Err(Error::InvalidParameter(format!(
                "boundary profile range [{lo}, {hi}] leaves ({eps0}, {})",
                F::one() - eps0
            )));
        }
        Ok(Self { g, eps0 })
    }

    #[inline]
    pub fn g(&self) -> &ProfileFn<F> {
        &self.g
    }

    #[inline]
    pub fn margin(&self) -> F {
        self.eps0
    }
}

/// Everything a simulation run needs to know.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SimParams<F: Scalar> {
    pub lattice: LatticeSpec,
    pub mapping: MappingParams<F>,
    pub boundary: BoundaryProfile<F>,
    pub horizon: F,
    pub snapshot_times: Vec<F>,
    pub seed: u64,
}

impl<F: Scalar> SimParams<F> {
    pub fn new(
        lattice: LatticeSpec,
        mapping: MappingParams<F>,
        boundary: BoundaryProfile<F>,
        horizon: F,
        snapshot_times: Vec<F>,
        seed: u64,
    ) -> Result<Self> {
        if snapshot_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("snapshot times not sorted".into()));
        }
        if snapshot_times
            .iter()
            .any(|&t| t < F::zero() || t > horizon)
        {
            return Err(Error::InvalidParameter(
                "snapshot times outside [0, horizon]".into(),
            ));
        }
        Ok(Self {
            lattice,
            mapping,
            boundary,
            horizon,
            snapshot_times,
            seed,
        })
    }
}

/// A single transition of the chain, in site-enumeration indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Exchange { a: usize, b: usize },
    Flip { site: usize },
}

/// Unscaled boundary flip rate `c n^{-theta} [g(1-eta) + (1-g) eta]` of a
/// boundary site; fails on bulk sites.
pub fn boundary_flip_rate<F: Scalar>(
    params: &SimParams<F>,
    site: &Site,
    eta: &Configuration,
) -> Result<F> {
    let spec = &params.lattice;
    let class = spec.classify_boundary(site)?;
    if class.is_bulk() {
        return Err(Error::NotBoundarySite {
            site: format!("{site}"),
        });
    }
    let g = g_at_site(params, site);
    let n = F::of_usize(spec.scale());
    let scale = params.mapping.c() * n.powf(-params.mapping.theta());
    let idx = spec.site_index(site)?;
    Ok(scale
        * if eta.get(idx) {
            F::one() - g
        } else {
            g
        })
}

fn g_at_site<F: Scalar>(params: &SimParams<F>, site: &Site) -> F {
    let u = params.lattice.scaled_point::<F>(site);
    let projected = project_to_boundary(&u);
    params.boundary.g().eval(projected.coords())
}

/// Total speed-up rate out of a configuration: `n^2` per discrepant
/// neighbour pair plus `n^2` times every boundary flip rate.
pub fn total_rate<F: Scalar>(params: &SimParams<F>, eta: &Configuration) -> Result<F> {
    let spec = &params.lattice;
    let n2 = F::of_usize(spec.scale() * spec.scale());
    let mut discrepant = 0usize;
    let mut flips = F::zero();
    for (idx, site) in spec.enumerate_sites().iter().enumerate() {
        for nb in spec.neighbors(site)? {
            let j = spec.site_index(&nb)?;
            if j > idx && eta.get(idx) != eta.get(j) {
                discrepant += 1;
            }
        }
        if spec.is_boundary(site) {
            flips += boundary_flip_rate(params, site, eta)?;
        }
    }
    Ok(n2 * (F::of_usize(discrepant) + flips))
}

/// Precomputed lattice structure shared by every replica of a run: pair
/// list, per-site incidence, and `g([z/n])` for each boundary site.
#[derive(Debug, Clone)]
pub struct SimTables<F: Scalar> {
    spec: LatticeSpec,
    exchange_rate: F,
    flip_scale: F,
    pairs: Vec<[u32; 2]>,
    incidence_offsets: Vec<u32>,
    incidence: Vec<u32>,
    boundary_slot: Vec<u32>,
    boundary_sites: Vec<u32>,
    g_values: Vec<F>,
    bulk_only: bool,
}

impl<F: Scalar> SimTables<F> {
    pub fn new(params: &SimParams<F>) -> Result<Self> {
        Self::build(params, false)
    }

    /// Diagnostic variant with the boundary channel disabled; the dynamics
    /// then conserves particle number exactly.
    pub fn bulk_only(params: &SimParams<F>) -> Result<Self> {
        Self::build(params, true)
    }

    fn build(params: &SimParams<F>, bulk_only: bool) -> Result<Self> {
        let spec = params.lattice;
        let sites = spec.enumerate_sites();
        let nf = F::of_usize(spec.scale());

        let mut pairs = Vec::new();
        let mut per_site: Vec<Vec<u32>> = vec![Vec::new(); sites.len()];
        for (idx, site) in sites.iter().enumerate() {
            for nb in spec.neighbors(site)? {
                let j = spec.site_index(&nb)?;
                if j > idx {
                    let pid = pairs.len() as u32;
                    pairs.push([idx as u32, j as u32]);
                    per_site[idx].push(pid);
                    per_site[j].push(pid);
                }
            }
        }
        let mut incidence_offsets = Vec::with_capacity(sites.len() + 1);
        let mut incidence = Vec::new();
        incidence_offsets.push(0u32);
        for list in &per_site {
            incidence.extend_from_slice(list);
            incidence_offsets.push(incidence.len() as u32);
        }

        let mut boundary_slot = vec![NO_SLOT; sites.len()];
        let mut boundary_sites = Vec::new();
        let mut g_values = Vec::new();
        for (idx, site) in sites.iter().enumerate() {
            if spec.is_boundary(site) {
                boundary_slot[idx] = boundary_sites.len() as u32;
                boundary_sites.push(idx as u32);
                g_values.push(g_at_site(params, site));
            }
        }

        Ok(Self {
            spec,
            exchange_rate: nf * nf,
            flip_scale: params.mapping.c()
                * nf.powf(F::of(2.0) - params.mapping.theta()),
            pairs,
            incidence_offsets,
            incidence,
            boundary_slot,
            boundary_sites,
            g_values,
            bulk_only,
        })
    }

    #[inline]
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    /// Unordered neighbour pairs in pair-id order.
    #[inline]
    pub fn pair_list(&self) -> &[[u32; 2]] {
        &self.pairs
    }

    /// Boundary site ids (slot order) and the precomputed `g([z/n])` values.
    #[inline]
    pub fn boundary_data(&self) -> (&[u32], &[F]) {
        (&self.boundary_sites, &self.g_values)
    }

    /// `n^2`, the speed-up exchange rate per discrepant pair.
    #[inline]
    pub fn exchange_rate(&self) -> F {
        self.exchange_rate
    }

    /// `c n^{2-theta}`, the speed-up scale of the boundary flip rates.
    #[inline]
    pub fn flip_scale(&self) -> F {
        self.flip_scale
    }

    #[inline]
    fn incident_pairs(&self, site: usize) -> &[u32] {
        let lo = self.incidence_offsets[site] as usize;
        let hi = self.incidence_offsets[site + 1] as usize;
        &self.incidence[lo..hi]
    }
}

/// One replica of the chain: the current configuration plus the incremental
/// rate structures.
#[derive(Debug, Clone)]
pub struct Simulator<'a, F: Scalar> {
    tables: &'a SimTables<F>,
    config: Configuration,
    active: Vec<u32>,
    slot_of_pair: Vec<u32>,
    flips: Fenwick<F>,
    time: F,
}

impl<'a, F: Scalar> Simulator<'a, F> {
    pub fn new(tables: &'a SimTables<F>, initial: Configuration) -> Self {
        assert_eq!(initial.sites(), tables.spec.site_count());
        let mut sim = Self {
            tables,
            config: initial,
            active: Vec::new(),
            slot_of_pair: vec![NO_SLOT; tables.pairs.len()],
            flips: Fenwick::new(if tables.bulk_only {
                0
            } else {
                tables.boundary_sites.len()
            }),
            time: F::zero(),
        };
        for pid in 0..tables.pairs.len() as u32 {
            sim.refresh_pair(pid);
        }
        if !tables.bulk_only {
            for slot in 0..tables.boundary_sites.len() {
                sim.refresh_boundary_slot(slot);
            }
        }
        sim
    }

    #[inline]
    pub fn config(&self) -> &Configuration {
        &self.config
    }

    #[inline]
    pub fn time(&self) -> F {
        self.time
    }

    fn refresh_pair(&mut self, pid: u32) {
        let [a, b] = self.tables.pairs[pid as usize];
        let discrepant = self.config.get(a as usize) != self.config.get(b as usize);
        let slot = self.slot_of_pair[pid as usize];
        if discrepant && slot == NO_SLOT {
            self.slot_of_pair[pid as usize] = self.active.len() as u32;
            self.active.push(pid);
        } else if !discrepant && slot != NO_SLOT {
            let last = *self.active.last().unwrap();
            self.active.swap_remove(slot as usize);
            self.slot_of_pair[pid as usize] = NO_SLOT;
            if last != pid {
                self.slot_of_pair[last as usize] = slot;
            }
        }
    }

    fn refresh_boundary_slot(&mut self, slot: usize) {
        let site = self.tables.boundary_sites[slot] as usize;
        let g = self.tables.g_values[slot];
        let rate = if self.config.get(site) { F::one() - g } else { g };
        self.flips.set(slot, rate);
    }

    fn refresh_site(&mut self, site: usize) {
        for k in 0..self.tables.incident_pairs(site).len() {
            let pid = self.tables.incident_pairs(site)[k];
            self.refresh_pair(pid);
        }
        if !self.tables.bulk_only {
            let slot = self.tables.boundary_slot[site];
            if slot != NO_SLOT {
                self.refresh_boundary_slot(slot as usize);
            }
        }
    }

    /// Total speed-up rate out of the current configuration.
    pub fn total_rate(&self) -> F {
        self.tables.exchange_rate * F::of_usize(self.active.len())
            + self.tables.flip_scale * self.flips.total()
    }

    /// Draw the waiting time and the next event without applying it.
    pub fn propose(&self, rng: &mut ChaCha8Rng) -> Result<(F, EventKind)> {
        let exchange_total = self.tables.exchange_rate * F::of_usize(self.active.len());
        let flip_total = self.tables.flip_scale * self.flips.total();
        let total = exchange_total + flip_total;
        if !(total > F::zero()) {
            return Err(Error::ZeroTotalRate);
        }
        let wait = rng::exponential(rng, total);
        let pick = F::of(rng.random::<f64>()) * total;
        let event = if (pick < exchange_total || flip_total <= F::zero())
            && !self.active.is_empty()
        {
            let k = rng.random_range(0..self.active.len());
            let [a, b] = self.tables.pairs[self.active[k] as usize];
            EventKind::Exchange {
                a: a as usize,
                b: b as usize,
            }
        } else {
            let target = F::of(rng.random::<f64>()) * self.flips.total();
            let slot = self.flips.sample(target);
            EventKind::Flip {
                site: self.tables.boundary_sites[slot] as usize,
            }
        };
        Ok((wait, event))
    }

    /// Apply a proposed event and advance the clock.
    pub fn commit(&mut self, wait: F, event: EventKind) {
        match event {
            EventKind::Exchange { a, b } => {
                // both bits flip: the pair was discrepant
                self.config.toggle(a);
                self.config.toggle(b);
                self.refresh_site(a);
                self.refresh_site(b);
            }
            EventKind::Flip { site } => {
                self.config.toggle(site);
                self.refresh_site(site);
            }
        }
        self.time += wait;
    }

    /// One transition: waiting time exponential in the total rate, event
    /// chosen proportionally to its rate, configuration updated.
    pub fn step(&mut self, rng: &mut ChaCha8Rng) -> Result<(F, EventKind)> {
        let (wait, event) = self.propose(rng)?;
        self.commit(wait, event);
        Ok((wait, event))
    }
}

/// Configuration recorded at a macroscopic time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySnapshot<F: Scalar> {
    pub time: F,
    pub config: Configuration,
}

/// Run one trajectory, recording the configuration at the parameter's
/// snapshot times. Deterministic given the caller's RNG state.
pub fn simulate<F: Scalar>(
    params: &SimParams<F>,
    tables: &SimTables<F>,
    initial: Configuration,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TrajectorySnapshot<F>>> {
    let mut sim = Simulator::new(tables, initial);
    let mut out = Vec::with_capacity(params.snapshot_times.len());
    let mut pending = params.snapshot_times.iter().copied().peekable();
    while let Some(&target) = pending.peek() {
        if target <= sim.time() {
            out.push(TrajectorySnapshot {
                time: target,
                config: sim.config().clone(),
            });
            pending.next();
            continue;
        }
        let (wait, event) = sim.propose(rng)?;
        let event_time = sim.time() + wait;
        while let Some(&t) = pending.peek() {
            if t < event_time {
                out.push(TrajectorySnapshot {
                    time: t,
                    config: sim.config().clone(),
                });
                pending.next();
            } else {
                break;
            }
        }
        if pending.peek().is_none() {
            break;
        }
        sim.commit(wait, event);
    }
    Ok(out)
}

/// Independent Bernoulli draws, one per site in enumeration order.
pub fn sample_initial<F: Scalar>(
    measure: &ProductMeasure<F>,
    rng: &mut ChaCha8Rng,
) -> Configuration {
    Configuration::from_fn(measure.len(), |i| {
        F::of(rng.random::<f64>()) < measure.density(i)
    })
}

/// Pairing of the empirical measure with a test function:
/// `(1/|U_n|) sum_x G(x/n) eta(x)`.
pub fn empirical_pairing<F: Scalar>(
    spec: &LatticeSpec,
    eta: &Configuration,
    g: impl Fn(&[F]) -> F,
) -> F {
    let mut acc = F::zero();
    for (idx, site) in spec.enumerate_sites().iter().enumerate() {
        if eta.get(idx) {
            acc += g(spec.scaled_point::<F>(site).coords());
        }
    }
    acc / F::of_usize(spec.site_count())
}

/// Same pairing with `G(x/n)` precomputed per site.
pub fn empirical_pairing_precomputed<F: Scalar>(eta: &Configuration, g_at: &[F]) -> F {
    debug_assert_eq!(eta.sites(), g_at.len());
    let mut acc = F::zero();
    for (i, &g) in g_at.iter().enumerate() {
        if eta.get(i) {
            acc += g;
        }
    }
    acc / F::of_usize(g_at.len())
}

/// Site indices of the sum-norm ball `B_ell(x)` intersected with the lattice.
pub fn block_ball(spec: &LatticeSpec, center: &Site, ell: usize) -> Result<Vec<usize>> {
    if !spec.contains(center.coords()) {
        return Err(Error::SiteOutsideLattice {
            site: format!("{center}"),
            max: spec.points_per_axis(),
        });
    }
    let mut out = Vec::new();
    let mut coords = vec![0usize; spec.dimension()];
    collect_ball(spec, center.coords(), ell as isize, 0, &mut coords, &mut out);
    out.sort_unstable();
    Ok(out)
}

fn collect_ball(
    spec: &LatticeSpec,
    center: &[usize],
    budget: isize,
    axis: usize,
    coords: &mut Vec<usize>,
    out: &mut Vec<usize>,
) {
    if axis == spec.dimension() {
        out.push(
            spec.site_index(&Site::new(coords.clone()))
                .expect("ball point inside lattice"),
        );
        return;
    }
    let c = center[axis] as isize;
    for x in (c - budget).max(1)..=(c + budget).min(spec.points_per_axis() as isize) {
        coords[axis] = x as usize;
        collect_ball(spec, center, budget - (x - c).abs(), axis + 1, coords, out);
    }
}

/// Mean occupation over the sum-norm ball `B_ell(x)`.
pub fn block_average<F: Scalar>(
    spec: &LatticeSpec,
    eta: &Configuration,
    center: &Site,
    ell: usize,
) -> Result<F> {
    let ball = block_ball(spec, center, ell)?;
    let occupied = ball.iter().filter(|&&i| eta.get(i)).count();
    Ok(F::of_usize(occupied) / F::of_usize(ball.len()))
}

/// Header of a serialized trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryHeader {
    pub d: usize,
    pub n: usize,
    pub theta: f64,
    pub c: f64,
    pub seed: u64,
    pub replica: u64,
    pub g_descriptor: String,
}

impl TrajectoryHeader {
    pub fn of<F: Scalar>(params: &SimParams<F>, replica: u64) -> Self {
        Self {
            d: params.lattice.dimension(),
            n: params.lattice.scale(),
            theta: params.mapping.theta().to_f64_lossy(),
            c: params.mapping.c().to_f64_lossy(),
            seed: params.seed,
            replica,
            g_descriptor: params.boundary.g().to_string(),
        }
    }
}

/// Text trajectory layout: two comment header lines, then one CSV row per
/// snapshot with the packed occupancy in hex.
pub fn write_trajectory_csv<F: Scalar, W: std::io::Write>(
    mut w: W,
    header: &TrajectoryHeader,
    snapshots: &[TrajectorySnapshot<F>],
) -> Result<()> {
    writeln!(w, "# ssep-trajectory v1")?;
    writeln!(
        w,
        "# d={} n={} theta={} c={} seed={} replica={} g={}",
        header.d, header.n, header.theta, header.c, header.seed, header.replica,
        header.g_descriptor
    )?;
    writeln!(w, "time,occupancy_hex")?;
    for s in snapshots {
        writeln!(w, "{},{}", s.time, s.config.to_hex())?;
    }
    Ok(())
}

/// Binary trajectory layout: magic, header fields, then per snapshot the
/// time as little-endian f64 and the packed occupancy words.
pub fn write_trajectory_binary<F: Scalar, W: std::io::Write>(
    mut w: W,
    header: &TrajectoryHeader,
    snapshots: &[TrajectorySnapshot<F>],
) -> Result<()> {
    w.write_all(b"SSEPTRJ1")?;
    w.write_all(&(header.d as u32).to_le_bytes())?;
    w.write_all(&(header.n as u32).to_le_bytes())?;
    w.write_all(&header.theta.to_le_bytes())?;
    w.write_all(&header.c.to_le_bytes())?;
    w.write_all(&header.seed.to_le_bytes())?;
    w.write_all(&header.replica.to_le_bytes())?;
    let g = header.g_descriptor.as_bytes();
    w.write_all(&(g.len() as u32).to_le_bytes())?;
    w.write_all(g)?;
    w.write_all(&(snapshots.len() as u32).to_le_bytes())?;
    for s in snapshots {
        w.write_all(&s.time.to_f64_lossy().to_le_bytes())?;
        let sites = s.config.sites();
        w.write_all(&(sites as u32).to_le_bytes())?;
        for i in (0..sites).step_by(64) {
            let mut word = 0u64;
            for b in i..sites.min(i + 64) {
                if s.config.get(b) {
                    word |= 1 << (b - i);
                }
            }
            w.write_all(&word.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_trajectory_binary<R: std::io::Read>(
    mut r: R,
) -> Result<(TrajectoryHeader, Vec<TrajectorySnapshot<f64>>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != b"SSEPTRJ1" {
        return Err(Error::Config("bad trajectory magic".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let u32_of = |r: &mut R, b4: &mut [u8; 4]| -> Result<u32> {
        r.read_exact(b4)?;
        Ok(u32::from_le_bytes(*b4))
    };
    let d = u32_of(&mut r, &mut b4)? as usize;
    let n = u32_of(&mut r, &mut b4)? as usize;
    r.read_exact(&mut b8)?;
    let theta = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let c = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let replica = u64::from_le_bytes(b8);
    r.read_exact(&mut b4)?;
    let g_len = u32::from_le_bytes(b4) as usize;
    let mut g_bytes = vec![0u8; g_len];
    r.read_exact(&mut g_bytes)?;
    let g_descriptor = String::from_utf8(g_bytes)
        .map_err(|_| Error::Config("trajectory g descriptor not utf-8".into()))?;
    r.read_exact(&mut b4)?;
    let count = u32::from_le_bytes(b4) as usize;
    let mut snapshots = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut b8)?;
        let time = f64::from_le_bytes(b8);
        r.read_exact(&mut b4)?;
        let sites = u32::from_le_bytes(b4) as usize;
        let mut config = Configuration::empty(sites);
        for i in (0..sites).step_by(64) {
            r.read_exact(&mut b8)?;
            let word = u64::from_le_bytes(b8);
            for b in i..sites.min(i + 64) {
                if word >> (b - i) & 1 == 1 {
                    config.set(b, true);
                }
            }
        }
        snapshots.push(TrajectorySnapshot { time, config });
    }
    Ok((
        TrajectoryHeader {
            d,
            n,
            theta,
            c,
            seed,
            replica,
            g_descriptor,
        },
        snapshots,
    ))
}
