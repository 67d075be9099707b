//! Scenario sampling with rejection for obstacle placement.

use crate::error::{DataError, Result};
use oilpore_core::{
    GridSpec, ObstacleSpec, ScenarioParams, SplitMix64, MAX_PORE_RADIUS, MIN_PORE_RADIUS,
    MIN_WALL_GAP, TUBE_TOP, WALL_BOTTOM,
};

/// Whether scenarios carry circular obstacles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstacleMode {
    None,
    OneOrTwo,
}

/// Dataset-level configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub count: usize,
    pub obstacle_mode: ObstacleMode,
    pub grid_width: usize,
    pub grid_height: usize,
    /// Exponent of the power-law bias toward strong charges:
    /// `charge = -1 - 9 u^(1/bias)`.
    pub charge_bias: f64,
    /// Train/validation/test fractions; must sum to 1.
    pub split: [f64; 3],
    pub base_seed: u64,
    /// Physical end time of each simulation.
    pub t_end: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            count: 24,
            obstacle_mode: ObstacleMode::OneOrTwo,
            grid_width: 48,
            grid_height: 32,
            charge_bias: 2.0,
            split: [0.7, 0.1, 0.2],
            base_seed: 42,
            t_end: 10.0,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(DataError::Config("dataset.count must be positive".into()));
        }
        let total: f64 = self.split.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(DataError::Config(format!(
                "split fractions must sum to 1, got {total}"
            )));
        }
        if self.split.iter().any(|f| *f < 0.0) {
            return Err(DataError::Config("split fractions must be non-negative".into()));
        }
        if self.charge_bias <= 0.0 {
            return Err(DataError::Config("charge_bias must be positive".into()));
        }
        if self.t_end <= 0.0 {
            return Err(DataError::Config("t_end must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::standard(self.grid_width, self.grid_height).map_err(DataError::from)
    }

    /// Split sizes: validation and test round up, training takes the rest.
    pub fn split_counts(&self) -> (usize, usize, usize) {
        let val = (self.count as f64 * self.split[1]).ceil() as usize;
        let test = (self.count as f64 * self.split[2]).ceil() as usize;
        let val = val.min(self.count);
        let test = test.min(self.count - val);
        (self.count - val - test, val, test)
    }

    pub fn from_doc(doc: &oilpore_core::config::ConfigDoc) -> Result<Self> {
        let mut cfg = Self::default();
        let s = "dataset";
        if let Some(v) = doc.get_usize(s, "count").map_err(DataError::from)? {
            cfg.count = v;
        }
        if let Some(v) = doc.get(s, "obstacle_mode") {
            cfg.obstacle_mode = match v {
                "none" => ObstacleMode::None,
                "one-or-two" => ObstacleMode::OneOrTwo,
                other => {
                    return Err(DataError::Config(format!(
                        "dataset.obstacle_mode: expected none|one-or-two, got '{other}'"
                    )))
                }
            };
        }
        if let Some(v) = doc.get_usize(s, "grid_width").map_err(DataError::from)? {
            cfg.grid_width = v;
        }
        if let Some(v) = doc.get_usize(s, "grid_height").map_err(DataError::from)? {
            cfg.grid_height = v;
        }
        if let Some(v) = doc.get_f64(s, "charge_bias").map_err(DataError::from)? {
            cfg.charge_bias = v;
        }
        if let Some(v) = doc.get_f64_list(s, "split").map_err(DataError::from)? {
            if v.len() != 3 {
                return Err(DataError::Config(
                    "dataset.split: expected three fractions".into(),
                ));
            }
            cfg.split = [v[0], v[1], v[2]];
        }
        if let Some(v) = doc.get_u64(s, "base_seed").map_err(DataError::from)? {
            cfg.base_seed = v;
        }
        if let Some(v) = doc.get_f64(s, "t_end").map_err(DataError::from)? {
            cfg.t_end = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_doc(&self, doc: &mut oilpore_core::config::ConfigDoc) {
        let s = "dataset";
        doc.set(s, "count", &format!("{}", self.count));
        doc.set(
            s,
            "obstacle_mode",
            match self.obstacle_mode {
                ObstacleMode::None => "none",
                ObstacleMode::OneOrTwo => "one-or-two",
            },
        );
        doc.set(s, "grid_width", &format!("{}", self.grid_width));
        doc.set(s, "grid_height", &format!("{}", self.grid_height));
        doc.set(s, "charge_bias", &format!("{}", self.charge_bias));
        doc.set(
            s,
            "split",
            &format!("{}, {}, {}", self.split[0], self.split[1], self.split[2]),
        );
        doc.set(s, "base_seed", &format!("{}", self.base_seed));
        doc.set(s, "t_end", &format!("{}", self.t_end));
    }
}

/// Draw one scenario. The pore radius is uniform on [0.05, 0.25]; the
/// surface charge is `-1 - 9 u^(1/bias)` so mass concentrates toward -10;
/// obstacle radii are uniform on [0.05, 0.25] with centers resampled until
/// they clear each other, the walls, and the pore region by the minimum
/// gap.
pub fn sample_scenario(
    rng: &mut SplitMix64,
    config: &DatasetConfig,
    grid: &GridSpec,
) -> Result<ScenarioParams> {
    let pore_radius = rng.range_f64(MIN_PORE_RADIUS, MAX_PORE_RADIUS);
    let charge = -1.0 - 9.0 * rng.next_f64().powf(1.0 / config.charge_bias);
    let (pore_cx, pore_cy) = ScenarioParams::pore_center(grid);

    let n_obstacles = match config.obstacle_mode {
        ObstacleMode::None => 0,
        ObstacleMode::OneOrTwo => 1 + rng.below(2) as usize,
    };

    let mut obstacles: Vec<ObstacleSpec> = Vec::with_capacity(n_obstacles);
    let mut rejections = 0usize;
    while obstacles.len() < n_obstacles {
        let radius = rng.range_f64(MIN_PORE_RADIUS, MAX_PORE_RADIUS);
        let y_lo = WALL_BOTTOM + MIN_WALL_GAP + radius;
        let y_hi = TUBE_TOP - MIN_WALL_GAP - radius;
        let center_x = rng.range_f64(0.0, grid.domain_width());
        let center_y = rng.range_f64(y_lo, y_hi);
        let candidate = ObstacleSpec { center_x, center_y, radius };

        let clears_pore = grid.periodic_dx(center_x, pore_cx).hypot(center_y - pore_cy)
            >= radius + pore_radius + MIN_WALL_GAP;
        let clears_others = obstacles.iter().all(|other| {
            grid.periodic_dx(center_x, other.center_x)
                .hypot(center_y - other.center_y)
                >= radius + other.radius + MIN_WALL_GAP
        });
        if clears_pore && clears_others {
            obstacles.push(candidate);
        } else {
            rejections += 1;
            if rejections >= 1000 {
                return Err(DataError::Infeasible(format!(
                    "1000 consecutive obstacle rejections (pore radius {pore_radius:.3})"
                )));
            }
        }
    }

    Ok(ScenarioParams {
        pore_radius,
        surface_charge: charge,
        obstacles,
        rng_seed: 0,
    })
}
