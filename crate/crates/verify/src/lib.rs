//! Acceptance checks for `liftlab`, kept in their own package so that the
//! rest of the workspace suite runs to completion before they report.
//!
//! Run them alone with `cargo test -p liftlab-verify --test acceptance`, or
//! pass a criterion number after `--` to run a single one.
