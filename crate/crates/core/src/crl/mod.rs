//! Competitive reinforcement learning: every device learns a power schedule
//! as an s-t path through its (energy, frame) transition graph, using
//! exponential weights over edges. The joint action of a round is scored
//! frame by frame with online frame matching, whose normalized count is the
//! common reward.

mod graph;
mod learner;

pub use graph::{
    backward_weights, covering_paths, edge_probabilities, forward_weights, most_probable_path,
    sample_path, update_weights, CoveringPaths, Edge, EdgeId, GraphFormulas, Node, NodeId,
    TransitionGraph,
};
pub use learner::{crl_round, play_levels, run_crl, write_round_log, CrlAgent, CrlParams, CrlRun,
    RoundResult};
