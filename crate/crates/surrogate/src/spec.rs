//! Architecture specifications and ablation switches.

use crate::error::{ModelError, Result};
use oilpore_core::config::ConfigDoc;

/// Fixed per-block dilation sequence of the dilated residual network.
pub const DRN_DILATIONS: [usize; 7] = [1, 2, 4, 8, 4, 2, 1];

/// Default per-step mass deviation tolerance.
pub const DEFAULT_MASS_EPSILON: f64 = 4e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchTag {
    Drn,
    Unet,
    Ufno,
    UfnoAlt,
}

impl ArchTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ArchTag::Drn => "drn",
            ArchTag::Unet => "unet",
            ArchTag::Ufno => "ufno",
            ArchTag::UfnoAlt => "ufno-alt",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "drn" => Ok(ArchTag::Drn),
            "unet" => Ok(ArchTag::Unet),
            "ufno" => Ok(ArchTag::Ufno),
            "ufno-alt" => Ok(ArchTag::UfnoAlt),
            other => Err(ModelError::Config(format!(
                "unknown architecture '{other}' (drn|unet|ufno|ufno-alt)"
            ))),
        }
    }
}

/// Dilated residual network processor: `blocks` residual blocks of seven
/// convolutions with the fixed dilation ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct DrnSpec {
    pub blocks: usize,
    pub kernel: usize,
}

/// UNet processor: one entry per level; downsampling halves the vertical
/// axis between levels (the periodic axis keeps full resolution so cyclic
/// shift equivariance is exact).
#[derive(Debug, Clone, PartialEq)]
pub struct UnetSpec {
    pub multipliers: Vec<usize>,
    pub depth: usize,
    pub norm_groups: usize,
}

/// U-FNO processor: spectral blocks with a parallel inner-UNet branch and
/// pointwise path. With `alternate`, even-indexed blocks drop the inner
/// UNet (plain FNO), mirroring the interleaved variant.
#[derive(Debug, Clone, PartialEq)]
pub struct UfnoSpec {
    pub layers: usize,
    pub modes: usize,
    pub unet_multipliers: Vec<usize>,
    pub alternate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArchSpec {
    Drn(DrnSpec),
    Unet(UnetSpec),
    Ufno(UfnoSpec),
}

/// Which of the problem-specific adaptations are active. All three default
/// to on; the ablation harness flips them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AblationFlags {
    /// Circular horizontal padding (and unwindowed spectra).
    pub enforce_periodicity: bool,
    /// Approximate mass conservation after each prediction.
    pub enforce_mass: bool,
    /// Mask channels in internal layers and solid-cell zeroing.
    pub enforce_geometry_bc: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        Self {
            enforce_periodicity: true,
            enforce_mass: true,
            enforce_geometry_bc: true,
        }
    }
}

/// Decoder configuration: temporal kernel plus the per-frame feature width
/// the processor output is reshaped to.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderSpec {
    pub temporal_kernel: usize,
    pub features: usize,
}

impl Default for DecoderSpec {
    fn default() -> Self {
        Self {
            temporal_kernel: 3,
            features: 8,
        }
    }
}

/// Complete build description of one surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub arch: ArchSpec,
    pub k: usize,
    pub hidden: usize,
    pub decoder: DecoderSpec,
    pub flags: AblationFlags,
    pub mass_epsilon: f64,
}

impl ModelSpec {
    pub fn tag(&self) -> ArchTag {
        match &self.arch {
            ArchSpec::Drn(_) => ArchTag::Drn,
            ArchSpec::Unet(_) => ArchTag::Unet,
            ArchSpec::Ufno(spec) => {
                if spec.alternate {
                    ArchTag::UfnoAlt
                } else {
                    ArchTag::Ufno
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(ModelError::Config("bundle length k must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(ModelError::Config("hidden width must be positive".into()));
        }
        if self.decoder.temporal_kernel % 2 == 0 {
            return Err(ModelError::Config("temporal kernel must be odd".into()));
        }
        if self.decoder.features == 0 {
            return Err(ModelError::Config("decoder features must be positive".into()));
        }
        if !(self.mass_epsilon > 0.0) {
            return Err(ModelError::Config("mass epsilon must be positive".into()));
        }
        match &self.arch {
            ArchSpec::Drn(spec) => {
                if spec.kernel % 2 == 0 {
                    return Err(ModelError::Config("DRN kernel must be odd".into()));
                }
            }
            ArchSpec::Unet(spec) => {
                if spec.multipliers.is_empty() {
                    return Err(ModelError::Config("UNet needs at least one level".into()));
                }
                if spec.depth == 0 {
                    return Err(ModelError::Config("UNet depth must be at least 1".into()));
                }
                if spec.norm_groups == 0 {
                    return Err(ModelError::Config("norm groups must be positive".into()));
                }
            }
            ArchSpec::Ufno(spec) => {
                if spec.layers == 0 {
                    return Err(ModelError::Config("U-FNO needs at least one layer".into()));
                }
                if spec.modes == 0 {
                    return Err(ModelError::Config("spectral modes must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Paper-style DRN default at a given size.
    pub fn drn(k: usize, hidden: usize, blocks: usize, kernel: usize) -> Self {
        Self {
            arch: ArchSpec::Drn(DrnSpec { blocks, kernel }),
            k,
            hidden,
            decoder: DecoderSpec::default(),
            flags: AblationFlags::default(),
            mass_epsilon: DEFAULT_MASS_EPSILON,
        }
    }

    pub fn unet(k: usize, hidden: usize, multipliers: Vec<usize>, depth: usize) -> Self {
        Self {
            arch: ArchSpec::Unet(UnetSpec {
                multipliers,
                depth,
                norm_groups: 8,
            }),
            k,
            hidden,
            decoder: DecoderSpec::default(),
            flags: AblationFlags::default(),
            mass_epsilon: DEFAULT_MASS_EPSILON,
        }
    }

    pub fn ufno(
        k: usize,
        hidden: usize,
        layers: usize,
        modes: usize,
        unet_multipliers: Vec<usize>,
        alternate: bool,
    ) -> Self {
        Self {
            arch: ArchSpec::Ufno(UfnoSpec {
                layers,
                modes,
                unet_multipliers,
                alternate,
            }),
            k,
            hidden,
            decoder: DecoderSpec::default(),
            flags: AblationFlags::default(),
            mass_epsilon: DEFAULT_MASS_EPSILON,
        }
    }

    pub fn with_flags(mut self, flags: AblationFlags) -> Self {
        self.flags = flags;
        self
    }

    /// Read a `[model]` section.
    pub fn from_doc(doc: &ConfigDoc) -> Result<Self> {
        let s = "model";
        let tag = ArchTag::parse(doc.get(s, "arch").unwrap_or("unet"))?;
        let k = doc.get_usize(s, "k")?.unwrap_or(25);
        let hidden = doc.get_usize(s, "hidden")?.unwrap_or(32);
        let arch = match tag {
            ArchTag::Drn => ArchSpec::Drn(DrnSpec {
                blocks: doc.get_usize(s, "drn_blocks")?.unwrap_or(2),
                kernel: doc.get_usize(s, "drn_kernel")?.unwrap_or(5),
            }),
            ArchTag::Unet => ArchSpec::Unet(UnetSpec {
                multipliers: doc
                    .get_usize_list(s, "unet_multipliers")?
                    .unwrap_or_else(|| vec![2, 2, 1, 2]),
                depth: doc.get_usize(s, "unet_depth")?.unwrap_or(1),
                norm_groups: doc.get_usize(s, "norm_groups")?.unwrap_or(8),
            }),
            ArchTag::Ufno | ArchTag::UfnoAlt => ArchSpec::Ufno(UfnoSpec {
                layers: doc.get_usize(s, "fno_layers")?.unwrap_or(2),
                modes: doc.get_usize(s, "fno_modes")?.unwrap_or(10),
                unet_multipliers: doc
                    .get_usize_list(s, "ufno_multipliers")?
                    .unwrap_or_else(|| vec![1, 1]),
                alternate: tag == ArchTag::UfnoAlt,
            }),
        };
        let mut flags = AblationFlags::default();
        if let Some(v) = doc.get_bool(s, "enforce_periodicity")? {
            flags.enforce_periodicity = v;
        }
        if let Some(v) = doc.get_bool(s, "enforce_mass")? {
            flags.enforce_mass = v;
        }
        if let Some(v) = doc.get_bool(s, "enforce_geometry_bc")? {
            flags.enforce_geometry_bc = v;
        }
        let spec = Self {
            arch,
            k,
            hidden,
            decoder: DecoderSpec {
                temporal_kernel: doc.get_usize(s, "decoder_temporal_kernel")?.unwrap_or(3),
                features: doc.get_usize(s, "decoder_features")?.unwrap_or(8),
            },
            flags,
            mass_epsilon: doc.get_f64(s, "mass_epsilon")?.unwrap_or(DEFAULT_MASS_EPSILON),
        };
        spec.validate()?;
        Ok(spec)
    }
}
