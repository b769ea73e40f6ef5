//! Rank-metric codes, q-systems and linear sets over towers of finite fields.

pub mod code;
pub mod construct;
pub mod conway;
pub mod duality;
pub mod error;
pub mod field;
pub mod linalg;
pub mod poly;
pub mod projective;
pub mod system;
pub mod verify;

pub use code::{CodeFile, RankMetricCode, SingletonCheck, WeightDistribution};
pub use construct::{Construction, ConstructionRequest, Kind};
pub use duality::{geometric_dual, DualityContext, WeightDualCheck};
pub use error::{Error, Result};
pub use field::{Arith, Fe, FieldTower, TowerDescriptor};
pub use linalg::{MatF, Subspace, SubspaceRecord};
pub use system::{HyperplaneSpectrum, LinearSetProfile, Linearity, QSystem, SystemFile};
pub use verify::{SuiteConfig, Verdict};
