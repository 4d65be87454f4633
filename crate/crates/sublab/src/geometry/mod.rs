//! Sublevel-set geometry on sampled fields: measures, level-curve lengths,
//! connected components with holes, distance transforms, and masked
//! domains.

mod components;
mod distance;
pub mod marching;
mod mask;
mod measure;

pub use components::{
    decompose, decompose_labeled, ComponentInfo, LabeledDecomposition, LevelSetDecomposition,
};
pub use distance::{distance_features, squared_edt, DistanceFeatures};
pub use marching::{level_length, level_segments, Segment};
pub use mask::{BoundaryInfo, CellClass, DomainMask, PredicateFn, SignedDistanceFn};
pub use measure::{sublevel_measure, MeasureEstimate};
