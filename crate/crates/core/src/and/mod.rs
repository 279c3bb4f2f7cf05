//! Zero-error and one-sided protocols for AND on `{0,1}²`.

mod buzzer;
mod closed;
mod completion;
mod flip;
mod potential;

pub use buzzer::{
    buzzer_grid_tree, buzzer_grid_tree_with_detour, buzzer_leaf_law, grid_leaf_law, grid_tree,
    kolmogorov_distance, BuzzerLeafLaw, Detour, GridWalkSpec, LeafPoint, DEFAULT_GRID,
};
pub use closed::{ic_and_zero, sim_and_zero, sim_p_curvature, sim_p_curvature_printed};
pub use completion::{complete_law, complete_to_zero_error, completion_bound};
pub use flip::{flip_transform, flip_tree, one_sided_and};
pub use potential::{leaf_mass_below, potential_of_tree, potential_phi_closed, pretend_leaf_law};
