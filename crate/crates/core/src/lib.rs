//! Tests of probabilistic forecasters on binary sequences: theories, finite
//! forecast tests, the global category test, the layered likelihood test,
//! the manipulation game and history revelation.

#![no_std]

extern crate alloc;

pub mod calibrate;
pub mod category;
pub mod forecast_test;
pub mod game;
pub mod likelihood;
pub mod path;
pub mod prob;
pub mod reveal;
pub mod theory;

pub use path::{Cylinder, History, PathError, PathSpec};
pub use prob::{Arith, Prob};
pub use theory::{Cursor, Declaration, Kind, Theory, TheoryError, TheoryLottery, TreeStrategy};
