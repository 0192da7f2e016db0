//! Declarative experiment configuration.
//!
//! Configs are plain `key = value` text (`#` comments); every key can be
//! overridden by a command-line flag of the same name. Profiles use the
//! catalog descriptor syntax from [`crate::catalog`].

use crate::catalog::ProfileFn;
use crate::dynamics::{BoundaryProfile, SimParams};
use crate::error::{Error, Result};
use crate::geometry::{LatticeEmbedding, LatticeSpec, MappingParams};
use crate::pde::{BoundaryCondition, Grid};
use crate::Real;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExperimentConfig {
    pub d: usize,
    pub theta: Real,
    pub c: Real,
    pub t_end: Real,
    pub snapshot_times: Vec<Real>,
    pub n_list: Vec<usize>,
    pub theta_list: Vec<Real>,
    pub replicas: usize,
    pub seed: u64,
    pub grid_m: usize,
    pub rho0: ProfileFn<Real>,
    pub g: ProfileFn<Real>,
    pub test_function: ProfileFn<Real>,
    pub block_radius: Option<usize>,
    pub epsilon0: Real,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 2,
            theta: 1.0,
            c: 1.0,
            t_end: 0.1,
            snapshot_times: vec![0.1],
            n_list: vec![8, 16, 32],
            theta_list: vec![0.0, 0.5, 1.0, 2.0],
            replicas: 100,
            seed: 42,
            grid_m: 64,
            rho0: ProfileFn::parse("cosine(1,0.5,0.2)").unwrap(),
            g: ProfileFn::parse("cosine(1,0.5,0.2)").unwrap(),
            test_function: ProfileFn::parse("affine(0.6,0.3,-0.2)").unwrap(),
            block_radius: None,
            epsilon0: 0.1,
        }
    }
}

impl ExperimentConfig {
    /// Parse a config file: one `key = value` per line, `#` comments.
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            config.set_key(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    /// Set a field by its config/flag name.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
        }
        fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
            value
                .split(',')
                .map(|s| num(key, s.trim()))
                .collect::<Result<Vec<T>>>()
        }
        match key {
            "d" => self.d = num(key, value)?,
            "theta" => self.theta = num(key, value)?,
            "c" => self.c = num(key, value)?,
            "t_end" => self.t_end = num(key, value)?,
            "snapshot_times" => self.snapshot_times = list(key, value)?,
            "n_list" => self.n_list = list(key, value)?,
            "theta_list" => self.theta_list = list(key, value)?,
            "replicas" => self.replicas = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "grid_m" => self.grid_m = num(key, value)?,
            "rho0" => self.rho0 = ProfileFn::parse(value)?,
            "g" => self.g = ProfileFn::parse(value)?,
            "test_function" => self.test_function = ProfileFn::parse(value)?,
            "block_radius" => {
                self.block_radius = if value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "epsilon0" => self.epsilon0 = num(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn apply_overrides<'a>(
        &mut self,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<()> {
        for (key, value) in pairs {
            self.set_key(key, value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::Config("d must be >= 1".into()));
        }
        if !(self.theta >= 0.0) || !(self.c > 0.0) {
            return Err(Error::Config("need theta >= 0 and c > 0".into()));
        }
        if self.theta_list.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::Config("theta_list entries must be >= 0".into()));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Config("t_end must be >= 0".into()));
        }
        if self.snapshot_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("snapshot_times must be sorted".into()));
        }
        if self
            .snapshot_times
            .iter()
            .any(|&t| t < 0.0 || t > self.t_end)
        {
            return Err(Error::Config(
                "snapshot_times must lie within [0, t_end]".into(),
            ));
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n < 2) {
            return Err(Error::Config("n_list needs entries >= 2".into()));
        }
        if self.replicas == 0 {
            return Err(Error::Config("replicas must be >= 1".into()));
        }
        if self.grid_m < 3 {
            return Err(Error::Config("grid_m must be >= 3".into()));
        }
        if !(self.epsilon0 > 0.0 && self.epsilon0 < 0.5) {
            return Err(Error::Config("epsilon0 must lie in (0, 1/2)".into()));
        }
        for (name, p) in [("rho0", &self.rho0), ("g", &self.g), ("test_function", &self.test_function)] {
            p.validate_dim(self.d)
                .map_err(|e| Error::Config(format!("{name}: {e}")))?;
        }
        for (name, p) in [("rho0", &self.rho0), ("g", &self.g)] {
            let (lo, hi) = p.range(self.d);
            if !(lo > self.epsilon0 && hi < 1.0 - self.epsilon0) {
                return Err(Error::Config(format!(
                    "{name} range [{lo}, {hi}] leaves ({}, {})",
                    self.epsilon0,
                    1.0 - self.epsilon0
                )));
            }
        }
        Ok(())
    }

    pub fn lattice(&self, n: usize) -> Result<LatticeSpec> {
        LatticeSpec::new(self.d, n)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.d, self.grid_m)
    }

    pub fn mapping(&self, theta: Real) -> Result<MappingParams<Real>> {
        MappingParams::new(theta, self.c)
    }

    pub fn boundary_profile(&self) -> Result<BoundaryProfile<Real>> {
        BoundaryProfile::new(self.g.clone(), self.epsilon0, self.d)
    }

    pub fn boundary_condition(&self, theta: Real) -> BoundaryCondition<Real> {
        BoundaryCondition::from_theta(theta, self.c, self.g.clone())
    }

    pub fn embedding(&self, n: usize, theta: Real) -> Result<LatticeEmbedding<Real>> {
        LatticeEmbedding::new(&self.lattice(n)?, &self.mapping(theta)?)
    }

    pub fn sim_params(&self, n: usize, theta: Real) -> Result<SimParams<Real>> {
        SimParams::new(
            self.lattice(n)?,
            self.mapping(theta)?,
            self.boundary_profile()?,
            self.t_end,
            self.snapshot_times.clone(),
            self.seed,
        )
    }
}
