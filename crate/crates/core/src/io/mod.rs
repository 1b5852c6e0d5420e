//! Scenario documents, footprint import, measurement traces and result files.

mod footprints;
mod results;
mod scenario;
mod trace;

pub use footprints::{import_footprints, parse_footprints, ImportedFootprint, DEFAULT_HEIGHT, LEVEL_HEIGHT};
pub use results::{
    format_sig, grid_rows, path_rows, read_grid, read_paths, read_results, result_rows, write_grid,
    write_paths, write_paths_to, write_results, GridRow, PathRow, ResultRow,
};
pub use scenario::{load_scenario, parse_scenario, Receivers, Scenario, SCHEMA_VERSION};
pub use trace::{load_trace_csv, read_trace, write_trace_csv, TraceColumns};

use std::path::Path;

use crate::error::Error;

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => Error::Schema {
            file: path.display().to_string(),
            line: e.position().map(|p| p.line() as usize),
            field: "<row>".into(),
            message: e.to_string(),
        },
    }
}
