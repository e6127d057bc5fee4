//! Motion-guided, tube-consistent intra-class mixing augmentation for video.
//!
//! The pipeline for one clip `x_i` with a same-class partner `x_j`:
//!
//! 1. resample both clips to `T` frames ([`video_io::sample_frames`]);
//! 2. measure per-pixel motion of `x_i` ([`motion::motion_map`]) and pool it
//!    onto a `b0 x b0` patch grid ([`motion::pool_to_patches`]);
//! 3. turn normalized patch motion into inverse-motion weights
//!    ([`motion::selection_weights`]);
//! 4. select `round(r * n_patches)` patches by weighted sampling without
//!    replacement ([`masking::sample_patches`]) and paint them into a mask
//!    shared by every frame ([`masking::build_tube_mask`]);
//! 5. composite partner content into the masked region ([`mixing::mix`]).
//!
//! [`mixing::augment_pair`] runs the whole sequence, [`mixing::augment_batch`]
//! applies it to a manifest, and [`validation`] holds the statistical checks.

pub mod bench;
pub mod error;
pub mod masking;
pub mod mixing;
pub mod motion;
pub mod seed;
pub mod validation;
pub mod video_io;

pub use error::{Error, Result};
pub use masking::{Mask4D, MaskStrategy, PatchIndexSet, TubeMask};
pub use mixing::{augment_batch, augment_pair, AugConfig, AugmentedClip, BatchReport, Strategy};
pub use motion::{MotionMap, PatchMotion, WeightGrid};
pub use video_io::{ClipFormat, ClipShape, DatasetManifest, VideoClip};
