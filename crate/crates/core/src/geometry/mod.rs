//! Meshes, membership predicates, surface extraction and cage construction.

mod cage_gen;
mod lattice;
mod marching_cubes;
mod mesh;
mod obj;
pub mod predicates;
mod winding;

pub use cage_gen::{generate_cage, GeneratedCage, CAGE_VERTEX_BUDGET};
pub use lattice::{Lattice, NodeClasses};
pub use marching_cubes::{marching_cubes, ScalarGrid};
pub use mesh::{interpolate_cage, Aabb, CagePair, TriMesh};
pub use obj::{load_obj, parse_obj, save_obj, to_obj_string};
pub use winding::{point_in_mesh, winding_number};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
/// Unit-length direction.
pub type UnitDir3 = nalgebra::Unit<Vec3>;
