//! Almost partitions, the stretching-partition construction, Rokhlin
//! towers, and checkers for the shearing conditions.

pub mod check;
pub mod construct;
pub(crate) mod eval;
pub mod partition;
pub mod stretch;
pub mod tower;

pub use check::{
    check_j, check_p, check_partition, check_qj, check_qp, AtomRecord, CheckConfig, Condition, ConditionSummary, Family, LowerBound, Loss, StretchReport, Verdict,
};
pub use construct::{build_preliminary_partition, k_of_t, p_partition, refine_to_stretching, Branch, Preliminary, Refined, ShearParams};
pub use partition::{combinatorial_refinement, intersect_almost_partitions, AlmostPartition, CircleInterval, Refinement};
pub use stretch::{
    almost_mp_check, equal_boxes, lebesgue, par_lemma_suite, random_partial_partition, uniform_stretching_bruteforce, uniform_stretching_sufficient, us_suite, AlmostMpReport,
    ParLemmaSuite, SmoothMonotone, UsOutcome, UsSuite,
};
pub use tower::{build_rokhlin_towers, build_rokhlin_towers_at, certify_level, LevelCheck, RokhlinTowers, Tower, TowerConfig, TowerRecord};
