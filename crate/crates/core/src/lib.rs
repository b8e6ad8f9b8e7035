//! Procedural world blockouts and the geometry around them.
//!
//! The crate turns a JSON [`SceneSpec`](scene_spec::SceneSpec) into a terrain
//! heightfield, a region partition, hierarchically placed box placeholders and
//! finally a [`Blockout`](blockout::Blockout) mesh. From there it bakes a
//! navigation mesh, renders a conditioning depth map, decomposes scene meshes
//! into parts and evaluates everything with point-cloud metrics.
//!
//! ```
//! use blockworld::pipeline::generate_scene;
//! use blockworld::scene_spec::parse_scene_spec;
//!
//! let spec = parse_scene_spec(r#"{"seed": 3, "density": "low", "terrain": {"kind": "flat"}}"#)?;
//! let scene = generate_scene(&spec)?;
//! assert!(scene.blockout.boxes.len() > 0);
//! # Ok::<(), blockworld::Error>(())
//! ```

pub mod error;
pub mod geom;
pub mod mesh;
pub mod rng;
pub mod scene_spec;
pub mod terrain;

pub use error::{Error, Result};
pub use mesh::TriMesh;
pub mod grid;
pub mod partition;
pub mod placement;
pub mod blockout;
pub mod meshio;
pub mod navmesh;
pub mod pipeline;
pub mod depth_render;
pub mod decompose;
pub mod metrics;
pub mod synth_data;
