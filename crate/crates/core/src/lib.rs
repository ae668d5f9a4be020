//! Dantzig-Wolfe bounds and block cuts for block-structured MIPs.
//!
//! The crate is organised bottom-up: [`lp`] (simplex and projection QP),
//! [`mip`] (branch-and-bound oracle), [`dw`] and [`lagrangian`] (two ways to
//! reach the DW bound), [`cuts`] (DWB cuts, strengthening, tilting),
//! [`analysis`], [`instances`] and [`pipeline`].

pub mod analysis;
pub mod cuts;
pub mod dw;
pub mod fixtures;
pub mod instances;
pub mod lagrangian;
pub mod linalg;
pub mod lp;
pub mod mip;
pub mod pipeline;
pub mod model;
pub mod serde_inf;

pub use model::{Block, BlockStructuredMip, Row, Sense};
