//! Shipped default documents, embedded so the engine runs without any files.

pub const SCHEME_33: &str = include_str!("../data/scheme_full_body_33.toml");
pub const SCHEME_17: &str = include_str!("../data/scheme_coco_17.toml");
pub const DEFAULT_RIG: &str = include_str!("../data/rig_humanoid.toml");
pub const DEFAULT_MAP: &str = include_str!("../data/map_full_body.toml");
pub const DESK_CALIBRATION: &str = include_str!("../data/calibration_desk.toml");
