//! Shared spatial and space-time coefficient functions.

use std::sync::Arc;

use crate::mesh::Vec2;

pub type ScalarField = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;
pub type SpaceTimeField = Arc<dyn Fn(Vec2, f64) -> f64 + Send + Sync>;

pub fn constant(v: f64) -> ScalarField {
    Arc::new(move |_| v)
}

pub fn constant_vector(v: Vec2) -> VectorField {
    Arc::new(move |_| v)
}

pub fn scalar(f: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> ScalarField {
    Arc::new(f)
}

pub fn vector(f: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static) -> VectorField {
    Arc::new(f)
}

pub fn space_time(f: impl Fn(Vec2, f64) -> f64 + Send + Sync + 'static) -> SpaceTimeField {
    Arc::new(f)
}
