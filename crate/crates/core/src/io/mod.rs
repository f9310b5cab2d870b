//! File formats: DFT tensors, PGM masks, `key = value` configs, and
//! fusion-head files.

pub mod config;
pub mod dft;
pub mod head;
pub mod pgm;

pub use config::Config;
pub use dft::{read_dft, write_dft, DFT_MAGIC};
pub use head::{read_head, write_head};
pub use pgm::{read_label_pgm, read_pgm, write_label_pgm, write_pgm};
