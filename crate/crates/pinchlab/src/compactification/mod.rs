//! The geometric compactification: collapsed coordinates and the extended
//! exponential map, second-subset boundaries with convexity checking, the
//! bounded boundary metric d_K, boundary correspondence and asymptote
//! monitoring, double buffers, and Holder certification of transition maps.

pub mod boundary;
pub mod buffer;
pub mod holder;
pub mod limits;
pub mod points;

pub use boundary::{
    check_convexity, height_from_json, require_convex, BoundaryArclength, ConvexityReport,
    EssentialSubsetBoundary, HeightFn, SubsetConfig,
};
pub use buffer::{
    check_buffer_containment, double_buffer, special_cover_t, BufferContainment,
    DoubleBufferParams,
};
pub use holder::{
    holder_certify, inverse_boundary_map, k2_fermi_coordinates, HolderCertificate, HolderSample,
    PairCase,
};
pub use limits::{asymptote_gap, boundary_limit_point, AsymptoteGap, BoundaryLimit};
pub use points::{collapse, dk_distance, extend_exponential, CompactifiedPoint, ExtendedPoint};
