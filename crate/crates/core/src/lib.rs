pub mod error;
pub mod identities;
pub mod models;
pub mod opcalc;
pub mod quadrature;
pub mod report;
pub mod ring;
pub mod suites;
pub mod symfun;
pub mod virasoro;
pub mod wick;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/series.md")]
    mod series {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/wick.md")]
    mod wick {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/virasoro.md")]
    mod virasoro {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    mod numerics {}
    #[doc = include_str!("../../../book/src/reports.md")]
    mod reports {}
}
