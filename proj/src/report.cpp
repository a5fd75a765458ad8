#include "polydist/report.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace polydist {

CheckRecord& RunReport::add_check(CheckRecord c) {
    checks.push_back(std::move(c));
    return checks.back();
}

CheckRecord& RunReport::assert_le(const std::string& id, const std::string& name, double lhs,
                                  double rhs, const std::string& note) {
    CheckRecord c;
    c.id = id;
    c.name = name;
    c.tier = "asserted";
    c.lhs = lhs;
    c.rhs = rhs;
    c.margin = rhs - lhs;
    c.status = lhs <= rhs ? "pass" : "fail";
    c.note = note;
    return add_check(std::move(c));
}

CheckRecord& RunReport::info(const std::string& id, const std::string& name, double lhs,
                             double rhs, const std::string& note) {
    CheckRecord c;
    c.id = id;
    c.name = name;
    c.tier = "informational";
    c.lhs = lhs;
    c.rhs = rhs;
    c.margin = rhs - lhs;
    c.status = "info";
    c.note = note;
    return add_check(std::move(c));
}

CheckRecord& RunReport::calibration(const std::string& id, const std::string& name,
                                    double value, const std::string& note) {
    CheckRecord c;
    c.id = id;
    c.name = name;
    c.tier = "calibration";
    c.lhs = value;
    c.rhs = value;
    c.margin = 0;
    c.status = "info";
    c.note = note;
    return add_check(std::move(c));
}

bool RunReport::all_asserted_passed() const {
    for (const auto& c : checks)
        if (c.tier == "asserted" && c.status != "pass") return false;
    return true;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << header << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << format_double(row[i]);
        }
        os << "\n";
    }
}

void write_text_csv(const std::string& path, const std::string& header,
                    const std::vector<std::vector<std::string>>& rows) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << header << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << row[i];
        }
        os << "\n";
    }
}

void append_bound_rows(std::vector<std::vector<std::string>>& rows, const std::string& context,
                       const BoundReport& report) {
    for (const auto& t : report.terms)
        rows.push_back({context, report.theorem, "term", t.name, format_double(t.value),
                        t.formula});
    rows.push_back({context, report.theorem, "total", "total", format_double(report.total), ""});
    if (report.dk_exponent != 0)
        rows.push_back({context, report.theorem, "exponent", "dk",
                        format_double(report.dk_exponent), ""});
    if (report.delta_exponent != 0)
        rows.push_back({context, report.theorem, "exponent", "delta",
                        format_double(report.delta_exponent), ""});
    for (const auto& [name, use] : report.constants_used)
        rows.push_back(
            {context, report.theorem, "constant", name, format_double(use.value), use.source});
}

namespace {

void write_checks_csv(const RunReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "id,name,tier,status,lhs,rhs,margin,note\n";
    for (const auto& c : report.checks) {
        os << c.id << ',' << c.name << ',' << c.tier << ',' << c.status << ','
           << format_double(c.lhs) << ',' << format_double(c.rhs) << ','
           << format_double(c.margin) << ',' << c.note << "\n";
    }
}

void write_structured(const RunReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "report:\n";
    os << "  version: " << report.version << "\n";
    os << "  scenario: " << report.scenario << "\n";
    os << "  seed: " << report.seed << "\n";
    os << "  threads: " << report.threads << "\n";
    os << "  timestamp: " << report.timestamp << "\n";
    os << "  asserted: " << (report.all_asserted_passed() ? "pass" : "FAIL") << "\n";
    os << "checks:\n";
    for (const auto& c : report.checks) {
        os << "  - [" << c.status << "] " << c.id << " (" << c.tier << ") " << c.name
           << ": lhs=" << format_double(c.lhs) << " rhs=" << format_double(c.rhs)
           << " margin=" << format_double(c.margin);
        if (!c.note.empty()) os << "  # " << c.note;
        os << "\n";
    }
    os << "phases:\n";
    for (const auto& p : report.phases)
        os << "  - " << p.name << ": " << format_double(p.seconds) << " s\n";
    os << "artifacts:\n";
    for (const auto& [label, file] : report.artifacts) os << "  - " << label << ": " << file << "\n";
    os << "config:\n";
    std::istringstream echo(report.config_echo);
    std::string line;
    while (std::getline(echo, line)) os << "  " << line << "\n";
}

}  // namespace

std::string write_report(const RunReport& report, const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    const std::string checks_path = cfg.out_dir + "/checks.csv";
    write_checks_csv(report, checks_path);
    std::string report_path;
    if (cfg.format == ReportFormat::Structured) {
        report_path = cfg.out_dir + "/report.txt";
        write_structured(report, report_path);
    } else {
        report_path = checks_path;  // the checks table is the csv report
    }
    return report_path;
}

}  // namespace polydist
