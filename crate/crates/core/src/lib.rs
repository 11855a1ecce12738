pub mod decomp2d;
pub mod decomp3d;
pub mod error;
pub mod eval;
pub mod geom;
pub mod grasp;
pub mod graph;
pub mod parts;
pub mod pipeline;
pub mod raster;
pub mod reasoner;
pub mod scene;
pub mod selector;
pub mod shape_fit;
pub mod synth;

pub use error::{Error, Result};
pub use grasp::GraspPose;
pub use graph::ObjectGraph;
pub use parts::{ConvexPart, Decomposition, Source};
pub use pipeline::{Mode, PipelineConfig, RunReport};
pub use reasoner::{ReasonerConfig, StageSet};
pub use scene::{CameraIntrinsics, SceneInput};
pub use selector::{Reason, SelectorConfig};
