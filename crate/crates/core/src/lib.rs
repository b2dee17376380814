//! Fusion of multichannel physiological and behavioural time series into
//! block SPD-matrix sequences, tangent-space vector sequences, and binary
//! sequence classification under subject-independent protocols.
//!
//! Pipeline: raw recordings are resampled, optionally augmented with facial
//! landmark distances, and cut into non-overlapping segments ([`signals`]);
//! each segment becomes a block SPD matrix built from its covariance and
//! cross-covariance ([`spdrep`]); SPD sequences are flattened to tangent-space
//! vectors at a per-subject geometric mean ([`manifold`], backed by the
//! [`symmat`] kernel); and an LSTM network classifies the vector sequences
//! ([`seqnet`]) under leave-one-subject-out or subject-independent k-fold
//! protocols ([`harness`]). The [`cli`] module holds dataset ingestion,
//! synthetic data generation, and the batch pipeline stages behind the
//! `spdfuse` binary.

pub mod cli;
pub mod harness;
pub mod manifold;
pub mod seqnet;
pub mod signals;
pub mod spdrep;
pub mod symmat;
