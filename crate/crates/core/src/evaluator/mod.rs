//! Metrics scoring an explanation against its game.

mod correlation;
mod curves;
mod greedy;
mod pointing;

pub use correlation::{average_ranks, faithfulness_correlation, spearman, DEFAULT_CORRELATION_SAMPLES};
pub use curves::{
    grid_fractions, insertion_deletion, insertion_deletion_with, interpolate, CurveSet, CURVES_SCHEMA_VERSION,
    CURVE_GRID_POINTS,
};
pub use greedy::{
    greedy_extremal_subsets, greedy_extremal_subsets_with, Direction, ExtremalSubsets, GreedyOptions,
    FULL_SEEDING_LIMIT,
};
pub use pointing::{
    pointing_game_recognition, pointing_game_recognition_with, PgrOptions, PointingGameSpec, PointingObject,
};
