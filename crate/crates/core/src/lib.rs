//! Transitions between separable clusterings.
//!
//! Given two constrained least-squares assignments of the same point set,
//! [`pipeline::full_transition`] walks from one to the other so that every
//! intermediate clustering is separable by a power diagram, consecutive
//! clusterings differ by a single cyclical or sequential exchange of items,
//! and cluster sizes stay between the endpoint sizes.
//!
//! The walk is computed on the bounded-shape transportation polytope
//! ([`transport`]) with a revised simplex engine ([`simplex`]); power
//! diagrams come from small margin LPs ([`power_diagram`]).

pub mod cdg;
pub mod commands;
pub mod config;
pub mod error;
pub mod fixed_site;
pub mod generate;
pub mod io;
pub mod model;
pub mod oracle;
pub mod parametric;
pub mod pipeline;
pub mod power_diagram;
pub mod render;
pub mod simplex;
pub mod transport;
pub mod verify;

pub use cdg::{apply_exchange, build_cdg, decompose, is_single_exchange, Arc, Cdg, Exchange, ExchangeKind};
pub use config::{Config, PivotRule, SolverConfig};
pub use error::{Error, Result};
pub use model::{
    center_dataset, clustering_vector, lsa_cost, objective_from_sites, Clustering, ClusteringVector,
    DataSet, ObjectiveMatrix, Shape, SiteVector, SizeBounds,
};
pub use pipeline::{full_transition, TransitionSequence};
pub use power_diagram::{induces, max_margin_diagram, shared_diagram, Margin, PowerDiagram};
pub use verify::{verify_sequence, Report};
