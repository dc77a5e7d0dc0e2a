#pragma once

#include <Eigen/Core>

#include "fjs/fuzzy.hpp"
#include "fjs/instance.hpp"
#include "fjs/schedule.hpp"

namespace fjs {

inline constexpr int kPriorWidth = 18;
inline constexpr int kContextWidth = 11;

/// One row per operation (op_id order):
///   [0,3)   processing time (a1, a2, a3)
///   3       defuzzified processing time
///   4       share of the job's defuzzified work done through this op
///   5       share remaining after this op
///   [6,9)   quartiles of the job's defuzzified times
///   [9,12)  quartiles of the machine's defuzzified times
///   [12,15) defuzz minus job quartiles
///   [15,18) defuzz minus machine quartiles
using PriorMatrix = Eigen::Matrix<double, Eigen::Dynamic, kPriorWidth, Eigen::RowMajor>;

/// One row per job:
///   0       predecessor completion minus machine availability
///   1       predecessor completion over the makespan so far
///   2       predecessor completion minus mean job completion
///   [3,6)   predecessor completion minus job-completion quartiles
///   6       machine availability over the latest machine availability
///   7       machine availability minus mean machine availability
///   [8,11)  machine availability minus machine-availability quartiles
/// Finished jobs get a zero row.
using ContextMatrix = Eigen::Matrix<double, Eigen::Dynamic, kContextWidth, Eigen::RowMajor>;

PriorMatrix op_priors(const Instance& inst);

ContextMatrix job_contexts(const Instance& inst, const ScheduleState& state, const RankConfig& cfg = {});

/// Columns that carry time units; the rest are ratios.
inline constexpr bool prior_is_time(int col) { return col != 4 && col != 5; }
inline constexpr bool context_is_time(int col) { return col != 1 && col != 6; }

}  // namespace fjs
