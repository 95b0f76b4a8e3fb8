//! Sets of positive integers with no `p`-term arithmetic progression.
//!
//! * [`set`] and [`progression`]: the set representation and progression
//!   detection (brute force and incremental).
//! * [`greedy`]: the greedy progression-free sequence `S_p`.
//! * [`measure`]: reciprocal sums `μ(A)`, exact and approximate.
//! * [`constructions`]: the scale-and-join amplifier, the bootstrap chain and
//!   the four-way interval partition.
//! * [`topology`]: indicator prefixes, convergence, closedness and
//!   continuity at a finite horizon.
//! * [`search`]: exact maximization of `μ` over progression-free subsets of
//!   `[1, N]`.
//!
//! ```
//! use apfree::{greedy, measure, progression};
//!
//! let s = greedy::generate(3, 8).unwrap();
//! assert_eq!(s.as_slice(), &[1, 2, 4, 5, 10, 11, 13, 14]);
//! assert!(progression::is_ap_free(&s, 3).unwrap());
//! assert_eq!(measure::mu(&s.prefix(3)).exact_string().unwrap(), "7/4");
//! ```

pub mod constructions;
pub mod error;
pub mod greedy;
pub mod measure;
pub mod progression;
pub mod search;
pub mod seqfile;
pub mod set;
pub mod topology;

pub use error::{Error, Result};
pub use measure::ReciprocalSum;
pub use progression::ApWitness;
pub use set::IntegerSet;
