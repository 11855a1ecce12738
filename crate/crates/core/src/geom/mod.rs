//! Computational-geometry primitives shared by decomposition, shape fitting
//! and grasp computation.

pub mod circle;
pub mod contour;
pub mod hull;
pub mod hull3d;
pub mod pca;
pub mod polygon;
pub mod rect;
pub mod simplify;

pub use circle::{min_enclosing_circle, Circle};
pub use contour::extract_contours;
pub use hull::{convex_hull, diameter, hull_points};
pub use hull3d::{convex_hull_3d, int_convex_hull, IntHull};
pub use pca::{principal_axes_2d, principal_axes_3d, PrincipalAxes};
pub use polygon::{Polygon, P2};
pub use rect::{angle_mod_180, min_area_rect, RotatedRect};
pub use simplify::{simplify_polygon, simplify_ring};
