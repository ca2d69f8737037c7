//! Time series to complex network: natural visibility graphs, modularity
//! communities, and the spline knot vector read off the community runs.

mod community;
mod knots;
mod visibility;

pub use community::{detect_communities, modularity, CommunityPartition};
pub use knots::{knots_from_partition, KnotPartition, KnotSource};
pub use visibility::{visibility_graph, VisibilityGraph};
