#![no_main]
use libfuzzer_sys::fuzz_target;

use ghl::cylinder::{cylinder_from_json, cylinder_to_json, CylinderModel, CylinderSpec};

// Building a model diagonalizes the boundary; keep that small.
fn within_budget(spec: &CylinderSpec) -> bool {
    let [p, m] = spec.boundary.fiber_dims;
    p.saturating_add(m) <= 16
        && spec.nodes.unwrap_or(0) <= 256
        && spec.length / spec.h <= 4096.0
        && spec.interior.as_ref().map_or(true, |i| i.graph.vertices <= 64)
}

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<CylinderSpec>(data) else {
        return;
    };
    if !within_budget(&spec) {
        return;
    }
    if let Ok(model) = CylinderModel::try_from(spec) {
        let text = cylinder_to_json(&model).unwrap();
        let back = cylinder_from_json(&text).unwrap();
        assert_eq!(cylinder_to_json(&back).unwrap(), text);
    }
});
