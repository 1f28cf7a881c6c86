//! Parameter spaces, fields, paths, group actions and finite-difference calculus.

pub mod calculus;
pub mod circle;
pub mod fields;
pub mod group;
pub mod path;
pub mod space;

pub use calculus::{
    circle_delta, exterior_derivative, gradient, lie_bracket, line_integral, line_integral_n,
};
pub use circle::CircleValue;
pub use fields::{OneForm, Point, ScalarField, TwoForm, VectorField};
pub use group::{GroupAction, GroupElement, LieElement, Word};
pub use path::Path;
pub use space::{ParameterSpace, Topology, DEFAULT_FD_STEP};
