#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "conekit/instance.hpp"

namespace conekit {

enum class RecordOutcome { Confirmed, Vacuous, Inconclusive, Violation };

std::string to_string(RecordOutcome o);

// One (relation, direction) check. A record is a VIOLATION exactly when the
// left side is conclusively IN and the right side conclusively OUT.
struct InclusionRecord {
  std::string relation;
  std::string inputs;
  Verdict lhs = Verdict::Inconclusive;
  Verdict rhs = Verdict::Inconclusive;
  RecordOutcome outcome = RecordOutcome::Inconclusive;
  std::vector<std::pair<double, double>> rhsTrace;  // for CSV export
};

struct InclusionReport {
  enum class Status { Ran, NotApplicable, PremiseFailed };

  std::string instanceId;
  std::string suite;
  std::string name;
  Status status = Status::Ran;
  std::vector<std::string> notes;
  std::vector<InclusionRecord> records;

  int confirmed() const;
  int vacuous() const;
  int inconclusive() const;
  int violations() const;
  bool pass() const { return status == Status::Ran && violations() == 0; }
  double inconclusiveRate() const;

  std::string text() const;  // deterministic structured text
  std::string json() const;  // deterministic JSON
  // Fixed columns: suite,record_id,t_or_radius,quotient,verdict_lhs,verdict_rhs,outcome
  std::string csv() const;
};

RecordOutcome classifyOutcome(Verdict lhs, Verdict rhs);

// Runs one configured suite of the instance.
InclusionReport runSuite(const Instance& inst, const SuiteConfig& cfg, uint64_t seed);

// Runs every suite declared by the instance.
std::vector<InclusionReport> runAllSuites(const Instance& inst, uint64_t seed);

}  // namespace conekit
