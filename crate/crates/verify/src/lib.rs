//! Test-only package; the checks live in `tests/acceptance.rs`.
