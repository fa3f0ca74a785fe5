//! Classifies combinatorial self-crossing patterns of closed geodesics on
//! smooth strongly convex closed surfaces.
//!
//! Pipeline: parse a Gauss code, realize it as a 4-valent sphere map, build
//! the exact Gauss-Bonnet angle system, decide strict feasibility by rational
//! LP, and (when the angle system is feasible) try to refute the comparison
//! polygon for every face and every single-edge-deletion region with a
//! separating-direction certificate.

pub mod classifier;
pub mod comparison;
pub mod gauss_code;
pub mod gb_system;
pub mod planar_map;
pub mod ratlp;
pub mod render;

pub use classifier::{census, classify, verify_report, CensusRow, ClassificationReport, Config, Verdict};
pub use gauss_code::{canonical_code, enumerate_words, parse_code, CanonicalCode, GaussCode};
pub use planar_map::{CurveDiagram, Face};
