//! Case files, point files and result frames.

pub mod deck;
pub mod grid;
pub mod vtk;

pub use deck::{parse_case, read_case_file, CaseDocument, Definition, DomainSpec, GridSpec};
pub use grid::{generate_grid, parse_points, read_points_file};
pub use vtk::{decode_vtk, encode_vtk, frame_file_name, read_vtk, write_vtk, Format, ResultFrame};
