#pragma once

#include <stdexcept>
#include <string>

namespace qdiff {

// Root/iteration failures in the polynomial solver.
struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Integer numerology rejected (e.g. a polar type with non-positive rank).
struct InvalidConfiguration : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A divisor-degree precondition failed.
struct InconsistentDivisor : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Local-model query at a pole of the wrong order.
struct WrongOrder : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Evaluation exactly on a branch cut without a side hint.
struct BranchCut : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SeedTooCritical : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Adaptive step shrank below the floor; the trajectory grazes a critical
// point closer than the tolerances can resolve.
struct StepCollapse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PathTooClose : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SaddlePresent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RingDomainSuspected : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PairingFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegeneratePeriod : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidScheme : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidPeriods : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qdiff
