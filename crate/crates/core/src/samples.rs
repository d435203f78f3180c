//! Bundled sample models.

use crate::format::parse_model;
use crate::model::XttModel;

/// The thermostat model document: `today`, `hour` and `operation`, with one
/// four-row table wired start -> thermostat -> end.
pub const THERMOSTAT_DOCUMENT: &str = include_str!("../models/thermostat.json");

pub fn thermostat() -> XttModel {
    parse_model(THERMOSTAT_DOCUMENT).expect("bundled thermostat model parses")
}
