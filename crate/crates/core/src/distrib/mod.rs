//! Distribution runtime: wire protocol, registry, placement policy,
//! transports and node processes.

pub mod deploy;
pub mod node;
pub mod policy;
pub mod registry;
pub mod transport;
pub mod wire;

pub use deploy::{run_deployment, run_node_process, DeployError, DeployOptions, DistOutcome, TransportKind, FAILURE_MARKER};
pub use node::{NodeConfig, NodeReport, NodeRuntime};
pub use policy::{remotable, Location, Manifest, ManifestError, PlacementPolicy};
pub use registry::Registry;
pub use wire::{decode_message, encode_message, InvocationMessage, Kind, TaggedValue, WireError};
