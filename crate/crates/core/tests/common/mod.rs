//! Shared helpers for the integration tests.
#![allow(dead_code)]

use walg::glstruct::Pyramid;

pub fn pyr(cols: &[usize]) -> Pyramid {
    Pyramid::from_columns(cols).unwrap()
}
