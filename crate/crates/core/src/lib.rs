//! Frequency-domain diffusion codec.
//!
//! A desk-scale lossy image codec built around two ideas:
//!
//! * a **non-isotropic (blurring) diffusion decoder** that runs the diffusion
//!   process in DCT frequency space, so every frequency carries its own
//!   signal-retention schedule and high frequencies are destroyed (and later
//!   regenerated) faster than low ones, and
//! * a **channel-conditional entropy model** over the quantized latent that
//!   combines a hyperprior, uneven channel chunks, a checkerboard spatial
//!   partition, a masked local convolution and windowed self-attention with a
//!   Laplacian-shaped relative positional bias, all backed by a bit-exact
//!   range coder.
//!
//! The crate is organized to mirror that split: [`spectral`], [`schedules`],
//! [`diffusion`] and [`denoiser`] form the decoder side; [`entropy`] and
//! [`coder`] form the rate side; [`codec`] glues both into a bitstream, and
//! [`eval`] holds metrics and benchmark harnesses.

pub mod codec;
pub mod coder;
pub mod denoiser;
pub mod diffusion;
pub mod entropy;
pub mod error;
pub mod eval;
pub mod field;
pub mod math;
pub mod pnm;
pub mod rng;
pub mod schedules;
pub mod spectral;
pub mod weights;

pub use error::FdcError;
pub use field::{Field, IntField};

/// Convenient alias used across the crate.
pub type Result<T> = std::result::Result<T, FdcError>;
