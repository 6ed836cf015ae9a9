//! Voxel radiance fields: density plus view-dependent spherical-harmonics color.

mod format;
mod scene;
mod sh;
mod voxel;

pub use format::{field_from_bytes, field_to_bytes, load_field, save_field, FIELD_MAGIC};
pub(crate) use format::{check_magic, Reader};
pub use scene::{bake_analytic, AnalyticSceneSpec, DomainSpec, Lobe, Primitive, Shape};
pub use sh::{eval_sh_basis, sh_len, SH_C0, SH_C1, SH_C2};
pub use voxel::VoxelRadianceField;
