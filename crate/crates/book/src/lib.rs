// SPDX-License-Identifier: Apache-2.0

//! The chapters of the guide under `book/src`, compiled so that every Rust
//! listing runs as a doc-test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/spectra.md")]
pub mod spectra {}
#[doc = include_str!("../../../book/src/fitting.md")]
pub mod fitting {}
#[doc = include_str!("../../../book/src/purcell.md")]
pub mod purcell {}
#[doc = include_str!("../../../book/src/master-equation.md")]
pub mod master_equation {}
#[doc = include_str!("../../../book/src/implantation.md")]
pub mod implantation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
