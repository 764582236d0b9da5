//! Exact orbital geometry for finitely generated subgroups of PL⁺(I).
//!
//! Everything is computed over an exact ordered field (see [`Scalar`]); the
//! `Rat*` aliases fix the scalar to the hybrid [`Rat`] used by the CLI.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod groups;
pub mod pl;
pub mod rat;
pub mod scalar;
pub mod svg;
pub mod towers;
pub mod wreath;

pub use error::{Error, Result};
pub use geometry::{
    GroupSpec, RealizationClass, RealizationTag, RealizationWitness, SignedOrbital, TransitionChainWitness, Word,
};
pub use groups::{analyze, AnalysisReport, AnalyzeConfig, Caps, Elem, Verdict};
pub use pl::{AffineDecomposition, AffinePiece, Direction, Interval, MapOrbital, PlMap};
pub use rat::Rat;
pub use scalar::Scalar;
pub use towers::{BuildMode, Tower, TowerCertificate};
pub use wreath::{FamilyKind, WreathRealization};

pub type RatMap = PlMap<Rat>;
pub type RatInterval = Interval<Rat>;
pub type RatGroup = GroupSpec<Rat>;
pub type RatSignedOrbital = SignedOrbital<Rat>;
pub type RatTower = Tower<Rat>;
pub type RatCertificate = TowerCertificate<Rat>;
pub type RatReport = AnalysisReport<Rat>;
