//! Losses, the dual-branch schedule, gradient routing, and the update
//! loop.

pub mod adam;
pub mod config;
pub mod loss;
pub mod params;
pub mod routing;
pub mod ssim;
pub mod train;

pub use adam::{AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use config::TrainConfig;
pub use loss::{alpha_mask_loss, clay_loss, l1_loss, rgb_loss};
pub use params::{env_from_params, RawGrads, RawParams};
pub use routing::{
    normal_gradient_scale, route_gradients, smooth_normal, smooth_normal_factor, NormalMode,
    RgbBranchGradients, RoutingVariant,
};
pub use ssim::{ssim, ssim_masked};
pub use train::{
    clay_channel_image, evaluate_dual_branch, train, DualBranchEval, LossReport, TrainResult,
    TrainState,
};
