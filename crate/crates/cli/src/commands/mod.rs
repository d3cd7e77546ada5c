pub mod ablate;
pub mod eval;
pub mod make_scene;
pub mod precompute_lut;
pub mod render;
pub mod train;
