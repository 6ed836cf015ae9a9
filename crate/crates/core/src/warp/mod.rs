//! Deformed-space queries: coordinate grids, point and direction mappings, and
//! the three-way split between deformed, vacated and untouched space.

mod cache;
mod deform;
mod enclosure;
mod grid;
mod occupancy;

pub use cache::{
    cache_key, check_grid_matches, coord_grid_from_bytes, coord_grid_to_bytes, load_coord_grid, load_or_precompute,
    save_coord_grid, GRID_MAGIC,
};
pub use deform::{deformed_query, DeformConfig, DeformedField, Region, WarpCounters, DELTA_T_FRACTION};
pub use enclosure::unenclosed_nodes;
pub use grid::{precompute_coord_grid, sample_weights, CoordGrid, GRID_MARGIN, MIN_GRID_RES};
pub use occupancy::Occupancy;
