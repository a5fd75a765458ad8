#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polydist/config.hpp"

namespace polydist {

inline constexpr const char* kVersion = "polydist 0.1.0";

// One verification record.  Tiers: asserted checks gate the exit status,
// informational ones are reported only, calibration records fitted constants.
struct CheckRecord {
    std::string id;
    std::string name;
    std::string tier;    // asserted | informational | calibration
    double lhs = 0;
    double rhs = 0;
    double margin = 0;   // rhs - lhs unless noted
    std::string status;  // pass | fail | info
    std::string note;
};

struct PhaseTime {
    std::string name;
    double seconds;
};

struct RunReport {
    std::string scenario;
    std::string version = kVersion;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string config_echo;
    std::string timestamp;  // report.txt only; never in CSVs
    std::vector<CheckRecord> checks;
    std::vector<PhaseTime> phases;
    std::map<std::string, std::string> artifacts;  // label -> written file

    CheckRecord& add_check(CheckRecord c);
    CheckRecord& assert_le(const std::string& id, const std::string& name, double lhs,
                           double rhs, const std::string& note = "");
    CheckRecord& info(const std::string& id, const std::string& name, double lhs, double rhs,
                      const std::string& note = "");
    CheckRecord& calibration(const std::string& id, const std::string& name, double value,
                             const std::string& note = "");
    bool all_asserted_passed() const;
};

// Writes report.csv or report.txt per the configured format (the structured
// report carries the timestamp and wall-clock data; the CSV stays byte-stable
// across reruns) and returns the report path.
std::string write_report(const RunReport& report, const ExperimentConfig& cfg);

// Byte-stable CSV helpers (shortest round-trip double formatting).
std::string format_double(double v);
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows);
void write_text_csv(const std::string& path, const std::string& header,
                    const std::vector<std::vector<std::string>>& rows);

// Itemizes every term and recorded constant of a bound report into text-CSV
// rows (columns: context, theorem, item, name, value, detail).
void append_bound_rows(std::vector<std::vector<std::string>>& rows, const std::string& context,
                       const BoundReport& report);

}  // namespace polydist
