//! Greedy optimal quantization sequences.
//!
//! A greedy quantization sequence `(a_N)` is built level by level: every new
//! point minimizes the `L^p` quantization error of the law given all previous
//! points, which stay frozen. This crate provides
//!
//! * analytic scalar laws and sampleable multivariate laws ([`distributions`]),
//! * quantizers, exact 1-D and Monte-Carlo distortion, Voronoi weights and
//!   cubature ([`quantizer`], [`distortion`]),
//! * deterministic 1-D builders (greedy Lloyd I and Newton/Forgy) and the
//!   symmetric construction for laws symmetric about the origin ([`greedy1d`]),
//! * stochastic builders in any dimension (randomized Lloyd I and CLVQ with
//!   Ruppert-Polyak averaging) ([`greedy_nd`]),
//! * low-discrepancy sequences, star discrepancy and concatenated optimal
//!   grids for comparison ([`qmc`]),
//! * numerical diagnostics: maximal function, Zador integrals, distortion
//!   mismatch and the `A_{N+1} <= A_N - C A_N^{1+rho}` recursion ([`diagnostics`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod distortion;
pub mod distributions;
pub mod error;
pub mod greedy1d;
pub mod greedy_nd;
pub mod io;
pub mod kdtree;
pub mod qmc;
pub mod quadrature;
pub mod quantizer;
pub mod seed;
pub mod special;

pub use distortion::{DistortionMethod, DistortionRecord, VoronoiWeights};
pub use distributions::{Distribution1D, DistributionNd};
pub use error::{Error, Result};
pub use greedy1d::{GreedySequence, LevelStats, Solver};
pub use quantizer::Quantizer;
pub use seed::SeedStream;

/// Sharp constant `lim N e_{2,N}(U[0,1]) = 1/(2 sqrt 3)`.
pub const ZADOR_J21: f64 = 0.288_675_134_594_812_9;
/// Sharp constant `lim N e_{1,N}(U[0,1]) = 1/4`.
pub const ZADOR_J11: f64 = 0.25;
/// `sqrt(3/2) pi^{1/4}`, the reference lower level for `N e_2` of greedy
/// N(0,1) sequences. It sits below the Zador limit [`NORMAL_1D_ZADOR`].
pub const NORMAL_1D_LIMIT: f64 = 1.630_546_158_916_782_7;
/// `lim N e_{2,N}(N(0,1)) = (1/sqrt 12) (int phi^{1/3})^{3/2} = sqrt(pi sqrt(3) / 2)`.
pub const NORMAL_1D_ZADOR: f64 = 1.649_454_166_186_901_6;
/// `lim sqrt(N) e_{2,N}(N(0,I_2)) = (2/3) sqrt(5 pi / sqrt 3)`.
pub const NORMAL_2D_LIMIT: f64 = 2.007_651_676_425_424;
