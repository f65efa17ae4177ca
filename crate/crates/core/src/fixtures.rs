//! Bundled instances and topologies.

use crate::model::{CrossLayerInstance, InstanceDoc, PhysicalDoc, PhysicalNetwork};
use crate::routing::LinkMapping;

pub const SIX_RING_JSON: &str = include_str!("../data/six_ring.json");
pub const SIX_RING_MAPPING_JSON: &str = include_str!("../data/six_ring_mapping.json");
pub const NSF14_JSON: &str = include_str!("../data/nsf14.json");
pub const CORONET75_JSON: &str = include_str!("../data/coronet75.json");

pub fn six_ring_doc() -> InstanceDoc {
    serde_json::from_str(SIX_RING_JSON).expect("bundled six_ring.json parses")
}

/// Logical 4-cycle over a 6-node physical ring.
pub fn six_ring() -> CrossLayerInstance {
    CrossLayerInstance::from_doc(&six_ring_doc()).expect("bundled six_ring.json is valid")
}

/// `1-2: 1-5-2`, `1-3: 1-4-6-3`, `2-4: 2-3-6-4`, `3-4: 3-6-4`.
pub fn six_ring_mapping(inst: &CrossLayerInstance) -> LinkMapping {
    LinkMapping::from_json(inst, SIX_RING_MAPPING_JSON).expect("bundled mapping is valid")
}

/// Names of the bundled physical topologies.
pub const TOPOLOGIES: [&str; 2] = ["nsf14", "coronet75"];

pub fn topology(name: &str) -> Option<PhysicalNetwork> {
    let text = match name {
        "nsf14" => NSF14_JSON,
        "coronet75" => CORONET75_JSON,
        _ => return None,
    };
    let doc: PhysicalDoc = serde_json::from_str(text).expect("bundled topology parses");
    Some(PhysicalNetwork::from_doc(&doc).expect("bundled topology is valid"))
}
