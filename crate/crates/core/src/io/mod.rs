//! Configuration, binary checkpoints, text artifacts and the experiment runner.

pub mod checkpoint;
pub mod config;
pub mod output;
pub mod run;

pub use checkpoint::{decode, decode_on, encode, load_checkpoint, load_checkpoint_on, save_checkpoint};
pub use config::{parse_config, parse_config_file, parse_config_with, ExperimentKind, HorizonUnit, Profile, RunConfig};
pub use output::{norm_series_tsv, path_tsv, write_atomic, write_json, ErrorRecord};
pub use run::{run_and_report, run_experiment};
