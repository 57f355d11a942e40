//! Benchmark-only package.
