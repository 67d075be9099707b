//! Neural PDE surrogates for the pore phase-field trajectories.
//!
//! Models follow the encode-process-decode structure over time bundles of
//! k frames, with three problem-specific adaptations available on every
//! architecture: geometry conditioning via mask channels and solid-cell
//! zeroing, horizontal periodicity via circular padding and spectral
//! transforms, and approximate mass conservation via a smooth tanh clip of
//! the predicted oil mass. Forward and backward passes are explicit; no
//! autodiff framework is involved.

pub mod bundle;
pub mod checkpoint;
pub mod error;
pub mod layers;
pub mod mass;
pub mod model;
pub mod param;
pub mod spec;
pub mod spectral;
pub mod tensor;

pub use bundle::TimeBundle;
pub use checkpoint::{
    decode_checkpoint, decode_checkpoint_expecting, encode_checkpoint, load_checkpoint,
    save_checkpoint,
};
pub use error::{ModelError, Result};
pub use mass::{frame_oil_mass, mass_correct, MassBudget};
pub use model::{ForwardPass, MaskSet, SurrogateModel};
pub use param::{HasParams, ParamTensor};
pub use spec::{
    AblationFlags, ArchSpec, ArchTag, DecoderSpec, DrnSpec, ModelSpec, UfnoSpec, UnetSpec,
    DEFAULT_MASS_EPSILON, DRN_DILATIONS,
};
pub use tensor::Tens;
