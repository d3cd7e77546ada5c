//! Persistent domain types, validation, and scene/image I/O.

pub mod camera;
pub mod envmap;
pub mod gaussian;
pub mod io;
pub mod validate;
pub mod view;

pub use camera::Camera;
pub use envmap::EnvGrid;
pub use gaussian::{
    gaussian_weight, gram_schmidt, gram_schmidt_backward, logit, sigmoid,
    sigmoid_grad_from_value, GaussianPrimitive, SceneGaussians, SUPPORT_CUTOFF_SQ,
};
pub use io::{load_gaussians, load_scene_dir, save_gaussians, save_scene_dir, SceneBundle};
pub use validate::{validate_camera, validate_scene, Violation};
pub use view::{PointCloud, TrainView};
