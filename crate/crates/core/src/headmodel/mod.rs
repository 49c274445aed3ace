//! Blendshape head model: evaluation, target assembly and user edits.

mod assets;
mod lbs;
mod mini;
mod params;

pub use assets::{AssetParts, ModelAssets, SKIN_WEIGHT_SUM_TOL};
pub use lbs::{axis_angle_to_matrix, evaluate_mesh, evaluate_vertices};
pub use mini::{make_mini_model, make_mini_model_with, MiniModelOptions, MINI_JAW, MINI_NECK};
pub use params::{
    apply_edit, assemble_target, assemble_target_with, check_rotation, MotionParams,
    RigidTransform, RootPolicy, ROTATION_TOL,
};
