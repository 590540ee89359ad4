//! Coordinate-chart tensor calculus for almost (para)contact metric
//! structures.
//!
//! The crate evaluates metric geometry (Christoffel symbols, Riemann/Ricci
//! curvature, covariant, Lie and exterior derivatives) on a single coordinate
//! chart with exact first and second derivatives, builds the warped cone over
//! an almost (para)contact metric structure, and checks the classical
//! curvature identities of that geometry as numerical residuals at sampled
//! points.
//!
//! Start with the runnable examples, one per capability:
//!
//! ```text
//! cargo run -p paracontact --example expressions      # parsing + exact derivatives
//! cargo run -p paracontact --example curvature        # chart geometry on the 2-sphere
//! cargo run -p paracontact --example classify         # built-in structures and their classes
//! cargo run -p paracontact --example cone_formulas    # the warped cone and its closed forms
//! cargo run -p paracontact --example identities       # full residual run on one structure
//! cargo run -p paracontact --example custom_manifold  # define a structure in the text format
//! cargo run -p paracontact --example pullback_fuzz    # invariance under chart diffeomorphisms
//! ```
//!
//! The same machinery is available from the thin `paracontact` binary:
//! `verify`, `list-examples` and `export-example` subcommands.

pub mod cli;
pub mod cone;
pub mod examples;
pub mod expr;
pub mod geometry;
pub mod identities;
pub mod structure;
pub mod tensor;

pub use expr::{Expression, Jet2};
pub use geometry::{ChartManifold, EndoField, OneForm, VectorField};
pub use structure::{PCStructure, StructureClass};

