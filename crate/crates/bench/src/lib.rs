//! Scenes shared by the benchmarks.

use shapegrasp::synth::Suite;
use shapegrasp::SceneInput;

/// Generated scene for a shipped suite object.
pub fn scene(object: &str) -> SceneInput {
    Suite::shipped()
        .object(object)
        .unwrap_or_else(|| panic!("no shipped object {object:?}"))
        .generate()
        .expect("shipped objects generate")
        .scene
}
