//! Network data model: affine maps, feed-forward networks, boxes and grids,
//! sup-norm comparison, numerical rank and the network file format.

mod domain;
mod io;
mod matrix;
mod net;
pub mod random;
mod rank;
mod sup;

pub use domain::{BoxDomain, Interval};
pub use io::{appendix_c_net, APPENDIX_C_NET};
pub use matrix::Matrix;
pub use net::{AffineMap, Layer, NeuralNet};
pub use rank::{is_full_rank, numerical_rank, perturb_to_full_rank, PerturbReport, MAX_PERTURB_RETRIES, RANK_RTOL};
pub use sup::{scalar_map, sup_gap, FnMap, VectorMap};
