//! Phase-dependent material coefficients.
//!
//! All coefficients interpolate linearly in the oil fraction
//! `(clamp(phi, -1, 1) + 1) / 2` between their water (`_water`, phi = -1)
//! and oil (`_oil`, phi = +1) values; the phase mobility is constant.

use crate::error::{Result, SolverError};
use oilpore_core::config::ConfigDoc;
use oilpore_core::{GridSpec, ScalarField};

/// Floor added inside logarithms of concentrations to avoid log(0).
pub const CONCENTRATION_FLOOR: f64 = 1e-12;

/// Ion species index: 0 carries charge +1 (H+), 1 carries charge -1 (H-).
pub const SPECIES_CHARGES: [f64; 2] = [1.0, -1.0];

/// Per-phase densities, viscosities, permittivities, mobilities and
/// diffusivities plus the interface parameters of the double-well free
/// energy.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    pub rho_water: f64,
    pub rho_oil: f64,
    pub mu_water: f64,
    pub mu_oil: f64,
    pub eps_water: f64,
    pub eps_oil: f64,
    /// Constant phase mobility M0.
    pub mobility: f64,
    /// Species diffusivities per phase, indexed [species][water, oil].
    pub diffusivity: [[f64; 2]; 2],
    /// Interface width of the tanh equilibrium profile.
    pub delta: f64,
    /// Surface tension coefficient.
    pub sigma: f64,
}

impl MaterialModel {
    /// Nondimensional defaults with the interface width resolved on the
    /// given grid (delta = 3 dx). These are desk-scale placeholders, not
    /// values from any reference dataset.
    pub fn default_for_grid(grid: &GridSpec) -> Self {
        Self {
            rho_water: 1.0,
            rho_oil: 0.9,
            mu_water: 1.0,
            mu_oil: 2.0,
            eps_water: 2.0,
            eps_oil: 1.0,
            mobility: 2e-4,
            diffusivity: [[5e-2, 5e-4]; 2],
            delta: 3.0 * grid.dx(),
            sigma: 0.1,
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let positive = [
            ("rho_water", self.rho_water),
            ("rho_oil", self.rho_oil),
            ("mu_water", self.mu_water),
            ("mu_oil", self.mu_oil),
            ("eps_water", self.eps_water),
            ("eps_oil", self.eps_oil),
            ("mobility", self.mobility),
            ("delta", self.delta),
            ("sigma", self.sigma),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(SolverError::Config(format!(
                    "material.{name} must be positive, got {value}"
                )));
            }
        }
        for row in &self.diffusivity {
            for k in row {
                if !(k.is_finite() && *k > 0.0) {
                    return Err(SolverError::Config(format!(
                        "material diffusivities must be positive, got {k}"
                    )));
                }
            }
        }
        if self.delta < 2.0 * grid.dx() {
            return Err(SolverError::Config(format!(
                "interface width {} under-resolved (need >= 2 dx = {})",
                self.delta,
                2.0 * grid.dx()
            )));
        }
        Ok(())
    }

    /// Read overrides from a `[material]` section; missing keys keep the
    /// grid defaults.
    pub fn from_doc(doc: &ConfigDoc, grid: &GridSpec) -> Result<Self> {
        let mut model = Self::default_for_grid(grid);
        let section = "material";
        if let Some(v) = doc.get_f64(section, "rho_water")? {
            model.rho_water = v;
        }
        if let Some(v) = doc.get_f64(section, "rho_oil")? {
            model.rho_oil = v;
        }
        if let Some(v) = doc.get_f64(section, "mu_water")? {
            model.mu_water = v;
        }
        if let Some(v) = doc.get_f64(section, "mu_oil")? {
            model.mu_oil = v;
        }
        if let Some(v) = doc.get_f64(section, "eps_water")? {
            model.eps_water = v;
        }
        if let Some(v) = doc.get_f64(section, "eps_oil")? {
            model.eps_oil = v;
        }
        if let Some(v) = doc.get_f64(section, "mobility")? {
            model.mobility = v;
        }
        if let Some(v) = doc.get_f64(section, "diffusivity")? {
            model.diffusivity = [[v; 2]; 2];
        }
        for (key, species, phase) in [
            ("diffusivity_hp_water", 0, 0),
            ("diffusivity_hp_oil", 0, 1),
            ("diffusivity_hm_water", 1, 0),
            ("diffusivity_hm_oil", 1, 1),
        ] {
            if let Some(v) = doc.get_f64(section, key)? {
                model.diffusivity[species][phase] = v;
            }
        }
        if let Some(v) = doc.get_f64(section, "delta")? {
            model.delta = v;
        }
        if let Some(v) = doc.get_f64(section, "delta_cells")? {
            model.delta = v * grid.dx();
        }
        if let Some(v) = doc.get_f64(section, "sigma")? {
            model.sigma = v;
        }
        model.validate(grid)?;
        Ok(model)
    }

    /// Canonical echo for dataset manifests.
    pub fn to_doc(&self, doc: &mut ConfigDoc) {
        let s = "material";
        doc.set(s, "rho_water", &format!("{}", self.rho_water));
        doc.set(s, "rho_oil", &format!("{}", self.rho_oil));
        doc.set(s, "mu_water", &format!("{}", self.mu_water));
        doc.set(s, "mu_oil", &format!("{}", self.mu_oil));
        doc.set(s, "eps_water", &format!("{}", self.eps_water));
        doc.set(s, "eps_oil", &format!("{}", self.eps_oil));
        doc.set(s, "mobility", &format!("{}", self.mobility));
        doc.set(s, "diffusivity_hp_water", &format!("{}", self.diffusivity[0][0]));
        doc.set(s, "diffusivity_hp_oil", &format!("{}", self.diffusivity[0][1]));
        doc.set(s, "diffusivity_hm_water", &format!("{}", self.diffusivity[1][0]));
        doc.set(s, "diffusivity_hm_oil", &format!("{}", self.diffusivity[1][1]));
        doc.set(s, "delta", &format!("{}", self.delta));
        doc.set(s, "sigma", &format!("{}", self.sigma));
    }

    #[inline]
    pub fn oil_fraction(phi: f64) -> f64 {
        (phi.clamp(-1.0, 1.0) + 1.0) * 0.5
    }

    #[inline]
    pub fn density(&self, phi: f64) -> f64 {
        self.rho_water + (self.rho_oil - self.rho_water) * Self::oil_fraction(phi)
    }

    #[inline]
    pub fn viscosity(&self, phi: f64) -> f64 {
        self.mu_water + (self.mu_oil - self.mu_water) * Self::oil_fraction(phi)
    }

    #[inline]
    pub fn permittivity(&self, phi: f64) -> f64 {
        self.eps_water + (self.eps_oil - self.eps_water) * Self::oil_fraction(phi)
    }

    /// d(permittivity)/d(phi); zero outside the clamp range.
    #[inline]
    pub fn permittivity_slope(&self, phi: f64) -> f64 {
        if (-1.0..=1.0).contains(&phi) {
            (self.eps_oil - self.eps_water) * 0.5
        } else {
            0.0
        }
    }

    /// d(density)/d(phi); zero outside the clamp range.
    #[inline]
    pub fn density_slope(&self, phi: f64) -> f64 {
        if (-1.0..=1.0).contains(&phi) {
            (self.rho_oil - self.rho_water) * 0.5
        } else {
            0.0
        }
    }

    #[inline]
    pub fn species_diffusivity(&self, species: usize, phi: f64) -> f64 {
        let [water, oil] = self.diffusivity[species];
        water + (oil - water) * Self::oil_fraction(phi)
    }

    /// Bulk coefficient of the double-well chemical potential.
    #[inline]
    pub fn bulk_coefficient(&self) -> f64 {
        3.0 * self.sigma / (2.0 * std::f64::consts::SQRT_2 * self.delta)
    }

    /// Gradient coefficient of the double-well chemical potential.
    #[inline]
    pub fn gradient_coefficient(&self) -> f64 {
        3.0 * self.sigma * self.delta / (2.0 * std::f64::consts::SQRT_2)
    }
}

/// Cellwise material coefficient fields derived from a phase field.
#[derive(Debug, Clone)]
pub struct PropertyFields {
    pub rho: Vec<f64>,
    pub mu: Vec<f64>,
    pub eps: Vec<f64>,
    pub diffusivity: [Vec<f64>; 2],
    pub mobility: f64,
    /// d(rho)/d(phi) inside the clamp range.
    pub rho_slope: f64,
}

/// Evaluate all coefficient fields from the phase field.
pub fn material_properties(phase: &ScalarField, model: &MaterialModel) -> PropertyFields {
    let values = phase.values();
    let n = values.len();
    let mut rho = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    let mut eps = Vec::with_capacity(n);
    let mut k0 = Vec::with_capacity(n);
    let mut k1 = Vec::with_capacity(n);
    for &phi in values {
        rho.push(model.density(phi));
        mu.push(model.viscosity(phi));
        eps.push(model.permittivity(phi));
        k0.push(model.species_diffusivity(0, phi));
        k1.push(model.species_diffusivity(1, phi));
    }
    PropertyFields {
        rho,
        mu,
        eps,
        diffusivity: [k0, k1],
        mobility: model.mobility,
        rho_slope: (model.rho_oil - model.rho_water) * 0.5,
    }
}
