//! File formats, the synthetic kinship generator and dataset loading.

mod dataset;
mod grid;
mod relationship;
mod submission;
mod synthetic;

pub use dataset::{filter_relations, KinshipDataset};
pub use grid::{grid_text, parse_grid, read_grid, write_grid, GRID_EXTENSION};
pub use relationship::{
    family_of, parse_relationship_csv, parse_relationship_str, write_relationship_csv,
    RelationshipRecord, RELATIONSHIP_HEADER,
};
pub use submission::{
    from_prediction_set, pair_id, parse_submission_csv, parse_submission_str, read_label_set,
    read_prediction_set, split_pair_id, submission_csv, to_label_set, to_labels, to_prediction_set,
    write_submission_csv, SubmissionRecord, PAIR_SEPARATOR, SUBMISSION_HEADER,
};
pub use synthetic::{
    family_id, generate_synthetic, person_id, pixel_distance_score, SyntheticConfig,
    SyntheticImage, SyntheticKinshipSet, GENERATOR_FILE, HOLDOUT_FILE, IMAGE_DIR,
    RELATIONSHIP_FILE,
};
