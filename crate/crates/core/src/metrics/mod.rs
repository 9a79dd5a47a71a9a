//! Rank-based alignment statistics.
//!
//! Two representations of the same `N` inputs are compared through the
//! ordering of pairwise distances around every point. The nearest neighbour
//! of point `i` in space A is looked up in space B's ordering; the resulting
//! `N` conditional ranks feed both the Information Imbalance and the
//! histogram estimator of the conditional copula entropy (CCE).

mod cce;
mod points;
mod ranks;

pub use cce::{
    cce_between, cce_between_with, cce_estimate, cce_gaussian_closed_form, ii_lower_bound, n_bins,
    AlignmentScore, MIN_CCE_POINTS,
};
pub use points::PointSet;
pub use ranks::{
    conditional_ranks, information_imbalance, information_imbalance_from_ranks, mutual_neighbor_ranks,
    pairwise_rank_table, pairwise_rank_table_with, ConditionalRanks, RankTable,
};
